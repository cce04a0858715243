#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gelx/derivatives.hpp"
#include "gelx/layout.hpp"
#include "gelx/projections.hpp"

namespace gelx {

// (0; -P g; -P g; -H g)
template <class Scalar, class Derived>
VecX<Scalar> psi_bar_closed(const ProjectionSet<Scalar>& ps, const Eigen::MatrixBase<Derived>& g_bar) {
    const Eigen::Index m = ps.P.rows(), p = ps.H.rows();
    IndexLayout L(m, p);
    VecX<Scalar> out = VecX<Scalar>::Zero(L.dim());
    VecX<Scalar> Pg = ps.P * g_bar;
    out.segment(L.kappa(), m) = -Pg;
    out.segment(L.lambda(), m) = -Pg;
    out.segment(L.theta(), p) = -(ps.H * g_bar);
    return out;
}

// -Phi^-1 Phi_bar
template <class Scalar, class Derived>
VecX<Scalar> psi_bar_generic(const PhiSystem<Scalar>& phi, const Eigen::MatrixBase<Derived>& phi0_bar) {
    return -(phi.Phi_inv * phi0_bar);
}

// Var(Psi_bar) = Phi^-1 Var(phi) Phi^-1'
template <class Scalar>
MatX<Scalar> var_psi_bar(const ProjectionSet<Scalar>& ps) {
    const Eigen::Index m = ps.P.rows(), p = ps.H.rows();
    IndexLayout L(m, p);
    MatX<Scalar> V = MatX<Scalar>::Zero(L.dim(), L.dim());
    for (Eigen::Index a : {L.kappa(), L.lambda()})
        for (Eigen::Index b : {L.kappa(), L.lambda()}) V.block(a, b, m, m) = ps.P;
    V.block(L.theta(), L.theta(), p, p) = ps.Sigma;
    return V;
}

struct ExpansionTerms {
    System system = System::ETEL;
    Eigen::VectorXd psi_bar;         // generic
    Eigen::VectorXd psi_bar_closed;
    Eigen::MatrixXd psi_bar_j;       // Psi_bar_{l,j}
    Eigen::VectorXd q_generic;       // Psi_bar_{l,j} Psi_bar_j + 1/2 Psi_{l,jk} Psi_bar_j Psi_bar_k
    Eigen::VectorXd q_closed;
    Eigen::VectorXd xi1, xi2, xi3, xi4;
    Eigen::VectorXd s_kappa, s_lambda, s_theta;
};

// dt supplies Phi_{l,jk} for the generic contraction (closed form or FD)
ExpansionTerms q_bar(System sys, const SampleStats& ss, const Population& pop, const DerivTensors& dt);

struct QDiffDecomposition {
    Eigen::VectorXd first_order;   // (Psi_bar^E - Psi_bar^L)_{l,j} Psi_bar_j
    Eigen::VectorXd second_order;  // 1/2 (Psi^E - Psi^L)_{l,jk} Psi_bar_j Psi_bar_k
    Eigen::VectorXd total;
};

QDiffDecomposition q_diff_decomposition(const SampleStats& ss, const Population& pop, const DerivTensors& dt_diff);

struct XiWeights {
    double both_theta = 1.0, one_theta = 1.5, neither_theta = 3.0;
    double operator()(const IndexLayout& L, Eigen::Index j, Eigen::Index k) const {
        int c = int(L.in_theta(j)) + int(L.in_theta(k));
        return c == 2 ? both_theta : c == 1 ? one_theta : neither_theta;
    }
};

// theta rows of the R_bar difference pieces
struct RDiffReport {
    Eigen::VectorXd term1;          // direct contraction
    Eigen::VectorXd term1_closed;   // 1/2 H g (g'P g)
    Eigen::VectorXd term2;          // direct contraction
    Eigen::VectorXd term2_cancel;   // -1/2 H g (g'P g)
    Eigen::VectorXd term2_xi7;      // remainder built from P g only
    Eigen::VectorXd term3;
    Eigen::VectorXd term4_weighted;
    XiWeights xi_weights;
};

// q carries Q_bar; dt_diff must hold the third-derivative difference
RDiffReport r_diff_terms(const SampleStats& ss, const Population& pop, const DerivTensors& dt_diff,
                         const ExpansionTerms& q);

// closed form of the Xi7 piece from g_bar alone
Eigen::VectorXd xi7_closed(const Population& pop, const Eigen::VectorXd& g_bar);

struct StudyRow {
    Eigen::Index n = 0;
    int reps_ok = 0;
    int reps_failed = 0;
    double median_abs_diff = 0.0;
    double var_gap_estimate = 0.0;  // n^2 (Var theta_ETEL - Var theta_EL)
    std::vector<double> abs_diff;
};

struct StudyReport {
    std::vector<StudyRow> rows;
    double slope = 0.0;
    bool slope_defined = false;
    bool all_zero = false;
};

inline constexpr double kMinStudySuccess = 0.95;

StudyReport expansion_difference_study(const MomentModel& model, const std::vector<Eigen::Index>& n_list, int reps,
                                       std::uint64_t seed);

}  // namespace gelx
