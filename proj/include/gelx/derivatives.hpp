#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

#include "gelx/layout.hpp"
#include "gelx/model.hpp"
#include "gelx/projections.hpp"
#include "gelx/tensor.hpp"

namespace gelx {

enum class TensorMethod { ClosedForm, FiniteDifference };
enum class TensorKind { ETEL, EL, Difference };  // Difference is ETEL - EL

inline TensorKind kind_of(System s) { return s == System::ETEL ? TensorKind::ETEL : TensorKind::EL; }
const char* to_string(TensorKind k);

// population derivatives of the stacked moment vector at beta*.
// phi3 is empty when not computed; closed forms give it for Difference only.
struct DerivTensors {
    IndexLayout layout;
    TensorKind kind = TensorKind::ETEL;
    TensorMethod method = TensorMethod::ClosedForm;
    Eigen::MatrixXd phi1;
    Tensor3<double> phi2;
    Tensor4<double> phi3;

    bool has_phi3() const { return phi3.size() > 0; }
};

// plug-in moments that enter the closed-form second-order terms
struct MomentTensors {
    Tensor3<double> ggg;  // E[g_a g_b g_c], m x m x m
    Tensor3<double> dgg;  // E[d(g_a g_b) / dth_r], m x m x p
    Tensor3<double> d2g;  // E[d2 g_a / dth_r dth_s], m x p x p
};

struct FdOptions {
    double h1 = 6.0554544523933395e-06;  // cbrt(eps)
    double h2 = 3e-4;
    double h3 = 1.2e-3;
    int richardson = 3;
};

// all finite-difference tensors from one set of sweeps over the reference sample
struct FdTensorSet {
    DerivTensors etel, el, diff;
};

// per-observation closed forms at beta*, accumulated with weight w
void accumulate_phi1(System sys, const ObsJet& jet, double w, Eigen::Ref<Eigen::MatrixXd> acc);
void accumulate_phi2(System sys, const ObsJet& jet, double w, Tensor3<double>& acc);
void accumulate_phi3_difference(const ObsJet& jet, double w, Tensor4<double>& acc);

MomentTensors moment_tensors(const MomentModel& model, const WeightedSample& ref);

// closed form: order <= 2 for ETEL / EL, order <= 3 for Difference
DerivTensors closed_form_tensors(TensorKind kind, const MomentModel& model, const WeightedSample& ref, int order);
FdTensorSet finite_difference_tensors(const MomentModel& model, const WeightedSample& ref, int order,
                                      const FdOptions& opt = {});
DerivTensors population_tensors(System sys, const MomentModel& model, const WeightedSample& ref, int order,
                                TensorMethod method);

// the plug-in population at theta* with everything the expansion needs
struct Population {
    const MomentModel* model = nullptr;
    WeightedSample ref;
    PopulationMoments<double> moments;
    ProjectionSet<double> proj;
    PhiSystem<double> phi;
    MomentTensors mt;
    DerivTensors etel, el, diff;  // closed form; diff carries phi3

    IndexLayout layout() const { return phi.layout; }
    const DerivTensors& tensors(System s) const { return s == System::ETEL ? etel : el; }
};

Population make_population(const MomentModel& model, Eigen::Index n_ref = kReferenceSize,
                           std::uint64_t seed = kReferenceSeed);

// centered scaled sample averages at theta*: n^-1/2 sum (a_i - E* a)
struct SampleStats {
    Eigen::Index n = 0;
    Eigen::VectorXd g_bar;      // uncentered: E* g = 0
    Eigen::MatrixXd G_bar;
    Eigen::MatrixXd Omega_bar;
    Eigen::VectorXd phi0_bar;   // stacked moments at beta*
    std::array<Eigen::MatrixXd, 2> phi1_bar;   // indexed by System
    std::array<Tensor3<double>, 2> phi2_bar;   // empty unless requested

    const Eigen::MatrixXd& phi1(System s) const { return phi1_bar[static_cast<int>(s)]; }
    const Tensor3<double>& phi2(System s) const { return phi2_bar[static_cast<int>(s)]; }
};

SampleStats sample_stats(const Population& pop, const Dataset& data, bool with_phi2 = true);

// Psi tensors: -Phi^-1 times the derivative tensors
struct PsiTensors {
    Tensor3<double> psi2;
    Tensor4<double> psi3;
};

PsiTensors psi_tensors(const DerivTensors& dt, const Eigen::MatrixXd& phi_inv);
Tensor3<double> left_multiply(const Eigen::MatrixXd& A, const Tensor3<double>& t);
Tensor4<double> left_multiply(const Eigen::MatrixXd& A, const Tensor4<double>& t);

}  // namespace gelx
