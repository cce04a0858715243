#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "gelx/errors.hpp"
#include "gelx/layout.hpp"
#include "gelx/model.hpp"

namespace gelx {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kMaxOmegaCondition = 1e12;

template <class Scalar>
struct PopulationMoments {
    MatX<Scalar> G;      // m x p, E[dg/dtheta']
    MatX<Scalar> Omega;  // m x m, E[g g']
};

template <class Scalar>
struct ProjectionSet {
    MatX<Scalar> P, H, Sigma, Omega_inv;
};

template <class Scalar>
struct PhiSystem {
    IndexLayout layout;
    MatX<Scalar> Phi;      // E[d phi / d beta'] at beta*, same for ETEL and EL
    MatX<Scalar> Phi_inv;  // partitioned closed form
};

enum class MomentMethod { Analytic, ReferenceSample };

PopulationMoments<double> population_moments(const MomentModel& model, MomentMethod method,
                                             Eigen::Index n_ref = kReferenceSize,
                                             std::uint64_t seed = kReferenceSeed);
PopulationMoments<double> population_moments(const MomentModel& model, const WeightedSample& ref);

template <class DerivedG, class DerivedO>
ProjectionSet<typename DerivedG::Scalar> projection_set(const Eigen::MatrixBase<DerivedG>& G,
                                                        const Eigen::MatrixBase<DerivedO>& Omega) {
    using Scalar = typename DerivedG::Scalar;
    using std::abs;
    const Eigen::Index m = G.rows(), p = G.cols();
    if (Omega.rows() != m || Omega.cols() != m)
        throw DimensionError("Omega must be m x m with m = rows of G");
    if (p == 0 || p > m) throw DimensionError("need 1 <= p <= m");
    MatX<Scalar> Om = Omega;
    Scalar scale = Om.cwiseAbs().maxCoeff();
    if (!((Om - Om.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-12) * scale))
        throw IllConditionedError("Omega is not symmetric");
    Eigen::SelfAdjointEigenSolver<MatX<Scalar>> eig(Om, Eigen::EigenvaluesOnly);
    Scalar lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (!(lo > Scalar(0)) || hi / lo > Scalar(kMaxOmegaCondition))
        throw IllConditionedError("Omega is not positive definite with condition <= 1e12");
    Eigen::LLT<MatX<Scalar>> llt(Om);
    MatX<Scalar> Oi = llt.solve(MatX<Scalar>::Identity(m, m));
    Oi = (Oi + Oi.transpose()) / Scalar(2);

    Eigen::ColPivHouseholderQR<MatX<Scalar>> gqr(G);
    if (gqr.rank() < p) throw IllConditionedError("G does not have full column rank");
    MatX<Scalar> OiG = llt.solve(G);
    MatX<Scalar> M = G.transpose() * OiG;
    Eigen::ColPivHouseholderQR<MatX<Scalar>> mqr(M);
    if (mqr.rank() < p) throw IllConditionedError("G' Omega^-1 G is singular");

    ProjectionSet<Scalar> ps;
    ps.Sigma = mqr.solve(MatX<Scalar>::Identity(p, p));
    ps.H = ps.Sigma * OiG.transpose();
    ps.P = Oi - OiG * ps.H;
    ps.Omega_inv = std::move(Oi);
    return ps;
}

template <class Scalar>
ProjectionSet<Scalar> projection_set(const PopulationMoments<Scalar>& pm) {
    return projection_set(pm.G, pm.Omega);
}

template <class Scalar>
PhiSystem<Scalar> phi_system(const PopulationMoments<Scalar>& pm, const ProjectionSet<Scalar>& ps) {
    const Eigen::Index m = pm.G.rows(), p = pm.G.cols();
    IndexLayout L(m, p);
    const Eigen::Index D = L.dim(), k = L.kappa(), l = L.lambda(), t = L.theta();
    PhiSystem<Scalar> s;
    s.layout = L;
    s.Phi = MatX<Scalar>::Zero(D, D);
    s.Phi(0, 0) = Scalar(-1);
    s.Phi.block(k, l, m, m) = pm.Omega;
    s.Phi.block(k, t, m, p) = pm.G;
    s.Phi.block(l, k, m, m) = pm.Omega;
    s.Phi.block(l, l, m, m) = -pm.Omega;
    s.Phi.block(t, k, p, m) = pm.G.transpose();

    s.Phi_inv = MatX<Scalar>::Zero(D, D);
    s.Phi_inv(0, 0) = Scalar(-1);
    s.Phi_inv.block(k, k, m, m) = ps.P;
    s.Phi_inv.block(k, l, m, m) = ps.P;
    s.Phi_inv.block(k, t, m, p) = ps.H.transpose();
    s.Phi_inv.block(l, k, m, m) = ps.P;
    s.Phi_inv.block(l, l, m, m) = ps.P - ps.Omega_inv;
    s.Phi_inv.block(l, t, m, p) = ps.H.transpose();
    s.Phi_inv.block(t, k, p, m) = ps.H;
    s.Phi_inv.block(t, l, p, m) = ps.H;
    s.Phi_inv.block(t, t, p, p) = -ps.Sigma;
    return s;
}

template <class Scalar>
struct IdentityResiduals {
    Scalar PG, P_symmetry, POmegaP, POmegaH, HOmegaH;
    Scalar max() const { return std::max({PG, P_symmetry, POmegaP, POmegaH, HOmegaH}); }
};

// residuals of the projection identities, each relative to the scale of its factors
template <class Scalar>
IdentityResiduals<Scalar> identity_residuals(const PopulationMoments<Scalar>& pm, const ProjectionSet<Scalar>& ps) {
    auto nrm = [](const auto& A) { return Scalar(A.cwiseAbs().maxCoeff()); };
    const auto& P = ps.P;
    const auto& H = ps.H;
    const auto& O = pm.Omega;
    const auto& G = pm.G;
    Scalar nP = nrm(P), nH = nrm(H), nO = nrm(O), nG = nrm(G), nS = nrm(ps.Sigma);
    IdentityResiduals<Scalar> r;
    r.PG = nrm(P * G) / (nP * nG);
    r.P_symmetry = nrm(P - P.transpose()) / nP;
    r.POmegaP = nrm(P * O * P - P) / std::max(nP * nP * nO, nP);
    r.POmegaH = nrm(P * O * H.transpose()) / (nP * nO * nH);
    r.HOmegaH = nrm(H * O * H.transpose() - ps.Sigma) / std::max(nH * nH * nO, nS);
    return r;
}

// max relative deviation of the closed-form inverse from a pivoted LU inverse
template <class Scalar>
Scalar phi_inverse_residual(const PhiSystem<Scalar>& s) {
    Eigen::FullPivLU<MatX<Scalar>> lu(s.Phi);
    if (!lu.isInvertible()) throw IllConditionedError("Phi is singular");
    MatX<Scalar> num = lu.inverse();
    return (s.Phi_inv - num).cwiseAbs().maxCoeff() / num.cwiseAbs().maxCoeff();
}

}  // namespace gelx
