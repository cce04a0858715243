#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gelx/layout.hpp"

namespace gelx {

// n observations of dimension d, stored one observation per column
struct Dataset {
    Eigen::MatrixXd x;

    Dataset() = default;
    explicit Dataset(Eigen::MatrixXd columns);

    Eigen::Index n() const { return x.cols(); }
    Eigen::Index dim() const { return x.rows(); }
    auto obs(Eigen::Index i) const { return x.col(i); }
};

// discrete measure used as the plug-in population
struct WeightedSample {
    Dataset data;
    Eigen::VectorXd w;  // nonnegative, sums to one
};

struct AnalyticMoments {
    Eigen::MatrixXd G, Omega;
};

// moment function and its theta derivatives at one observation.
// G2 stores d2 g_a / dth_r dth_s at (a, r * p + s).
struct ObsJet {
    Eigen::VectorXd g;
    Eigen::MatrixXd G;
    Eigen::MatrixXd G2;

    ObsJet() = default;
    ObsJet(Eigen::Index m, Eigen::Index p) : g(m), G(m, p), G2(m, p * p) {}
    double hess(Eigen::Index a, Eigen::Index r, Eigen::Index s) const {
        return G2(a, r * G.cols() + s);
    }
};

class MomentModel {
public:
    virtual ~MomentModel() = default;

    virtual std::string name() const = 0;
    virtual Eigen::Index dim_x() const = 0;
    virtual Eigen::Index dim_g() const = 0;
    virtual Eigen::Index dim_theta() const = 0;
    virtual Eigen::VectorXd theta_star() const = 0;

    virtual void g(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                   Eigen::Ref<Eigen::VectorXd> out) const = 0;
    virtual void jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                          Eigen::Ref<Eigen::MatrixXd> out) const = 0;
    // default: central differences of jacobian()
    virtual void hessian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                         Eigen::Ref<Eigen::MatrixXd> out) const;

    virtual Dataset simulate(Eigen::Index n, std::uint64_t seed) const = 0;
    // draws used for the plug-in population; defaults to simulate()
    virtual Dataset reference_draws(Eigen::Index n, std::uint64_t seed) const {
        return simulate(n, seed);
    }
    virtual std::optional<AnalyticMoments> analytic_moments() const { return std::nullopt; }

    IndexLayout layout() const { return {dim_g(), dim_theta()}; }
    void eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
              ObsJet& out) const;
};

// x ~ N(theta*, 1), g = (x - th, (x - th)^2 - 1)
class MeanVarModel : public MomentModel {
public:
    explicit MeanVarModel(double theta_star = 0.0) : theta_star_(theta_star) {}

    std::string name() const override { return "MeanVarModel"; }
    Eigen::Index dim_x() const override { return 1; }
    Eigen::Index dim_g() const override { return 2; }
    Eigen::Index dim_theta() const override { return 1; }
    Eigen::VectorXd theta_star() const override { return Eigen::VectorXd::Constant(1, theta_star_); }

    void g(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
           Eigen::Ref<Eigen::VectorXd> out) const override;
    void jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                  Eigen::Ref<Eigen::MatrixXd> out) const override;
    void hessian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                 Eigen::Ref<Eigen::MatrixXd> out) const override;

    Dataset simulate(Eigen::Index n, std::uint64_t seed) const override;
    Dataset reference_draws(Eigen::Index n, std::uint64_t seed) const override;
    std::optional<AnalyticMoments> analytic_moments() const override;

protected:
    double theta_star_;
};

// same moments, x = theta* + (chi2_df - df) / sqrt(2 df); df even
class SkewModel : public MeanVarModel {
public:
    explicit SkewModel(double theta_star = 0.0, int df = 8);

    std::string name() const override { return "SkewModel"; }
    int df() const { return df_; }

    Dataset simulate(Eigen::Index n, std::uint64_t seed) const override;
    Dataset reference_draws(Eigen::Index n, std::uint64_t seed) const override;
    std::optional<AnalyticMoments> analytic_moments() const override;

private:
    int df_;
};

// x ~ N(theta*, sigma^2), g = x - th
class JustIdentModel : public MomentModel {
public:
    explicit JustIdentModel(double theta_star = 0.0, double sigma = 1.0);

    std::string name() const override { return "JustIdentModel"; }
    Eigen::Index dim_x() const override { return 1; }
    Eigen::Index dim_g() const override { return 1; }
    Eigen::Index dim_theta() const override { return 1; }
    Eigen::VectorXd theta_star() const override { return Eigen::VectorXd::Constant(1, theta_star_); }

    void g(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
           Eigen::Ref<Eigen::VectorXd> out) const override;
    void jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                  Eigen::Ref<Eigen::MatrixXd> out) const override;
    void hessian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                 Eigen::Ref<Eigen::MatrixXd> out) const override;

    Dataset simulate(Eigen::Index n, std::uint64_t seed) const override;
    Dataset reference_draws(Eigen::Index n, std::uint64_t seed) const override;
    std::optional<AnalyticMoments> analytic_moments() const override;

private:
    double theta_star_, sigma_;
};

struct ModelSpec {
    std::string name;
    std::optional<double> theta_star;
    std::optional<int> df;
    std::optional<double> sigma;
};

std::vector<std::string> builtin_model_names();
std::unique_ptr<MomentModel> make_model(const ModelSpec& spec);

// checked single-observation evaluation
Eigen::VectorXd eval_g(const MomentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta);
Eigen::MatrixXd g_jacobian(const MomentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta);
Dataset simulate(const MomentModel& model, Eigen::Index n, std::uint64_t seed);

// m x n matrix of g(x_i, theta)
Eigen::MatrixXd moment_matrix(const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta);

inline constexpr std::uint64_t kReferenceSeed = 20240917;
inline constexpr Eigen::Index kReferenceSize = 1000000;

// reference draws, exponentially tilted so that E*[g(x, theta*)] = 0 holds
// to solver precision
WeightedSample reference_sample(const MomentModel& model, Eigen::Index n_ref = kReferenceSize,
                                std::uint64_t seed = kReferenceSeed);

Dataset read_csv(const std::string& path);
void write_csv(const std::string& path, const Dataset& data);

// inverse CDF helpers for stratified reference draws
double normal_quantile(double u);
double chi2_even_quantile(double u, int df);

}  // namespace gelx
