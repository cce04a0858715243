#pragma once

#include <string>

#include <Eigen/Core>

#include "gelx/dual.hpp"
#include "gelx/layout.hpp"
#include "gelx/model.hpp"

namespace gelx {

inline constexpr double kExpCap = 700.0;
inline constexpr double kOuterTol = 1e-9;

struct BetaVector {
    IndexLayout layout;
    Eigen::VectorXd values;

    BetaVector() = default;
    BetaVector(IndexLayout L, Eigen::VectorXd v);
    // (1, 0, 0, theta)
    static BetaVector at_theta(IndexLayout L, const Eigen::VectorXd& theta);

    double tau() const { return values(0); }
    double& tau() { return values(0); }
    auto kappa() const { return values.segment(layout.kappa(), layout.m); }
    auto kappa() { return values.segment(layout.kappa(), layout.m); }
    auto lambda() const { return values.segment(layout.lambda(), layout.m); }
    auto lambda() { return values.segment(layout.lambda(), layout.m); }
    auto theta() const { return values.segment(layout.theta(), layout.p); }
    auto theta() { return values.segment(layout.theta(), layout.p); }
};

// per-observation stacked moment vector and its beta-Jacobian; the jet
// must be evaluated at beta's theta. Throw DomainError past the exponent
// cap or outside the EL log domain.
void phi_into(System sys, const ObsJet& jet, const BetaVector& beta, Eigen::Ref<Eigen::VectorXd> out);
void phi_jacobian_into(System sys, const ObsJet& jet, const BetaVector& beta, Eigen::Ref<Eigen::MatrixXd> out);

Eigen::VectorXd phi_etel(const MomentModel& model, const Eigen::VectorXd& x, const BetaVector& beta);
Eigen::VectorXd phi_el(const MomentModel& model, const Eigen::VectorXd& x, const BetaVector& beta);

// weighted averages of phi and its Jacobian over a sample
class StackedAverage {
public:
    StackedAverage(System sys, const MomentModel& model, const Dataset& data);
    StackedAverage(System sys, const MomentModel& model, const Dataset& data, Eigen::VectorXd weights);

    Eigen::VectorXd residual(const BetaVector& beta) const;
    Eigen::MatrixXd jacobian(const BetaVector& beta) const;
    System system() const { return sys_; }
    const MomentModel& model() const { return model_; }

private:
    System sys_;
    const MomentModel& model_;
    const Dataset& data_;
    Eigen::VectorXd w_;
};

struct SolveOptions {
    double tol = kOuterTol;
    int max_iter = 100;
    double inner_tol = kInnerTol;
};

struct SolveReport {
    System system = System::ETEL;
    BetaVector beta_hat;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    double distance_from_init = 0.0;
    std::string init_strategy;
};

// two-step efficient GMM by Gauss-Newton, used as a starting value
Eigen::VectorXd gmm_estimate(const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta0);

// Newton on the full stacked system, started from the inner-dual profile at theta0
SolveReport solve_stacked(System sys, const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta0,
                          const SolveOptions& opt = {});
// Newton from an explicit starting beta
SolveReport solve_stacked(System sys, const MomentModel& model, const Dataset& data, const BetaVector& init,
                          const SolveOptions& opt = {});

// inner-dual profile at theta: lambda, tau and kappa with blocks one to three solved
BetaVector profile_start(System sys, const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta,
                         double inner_tol = kInnerTol);

}  // namespace gelx
