#include "gelx/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gelx/errors.hpp"
#include "gelx/estimators.hpp"
#include "gelx/rng.hpp"

namespace gelx {

namespace {

// sum_{j,k} T(l, j, k) a_j b_k
Eigen::VectorXd contract2(const Tensor3<double>& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index D = t.dimension(0);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(D);
    for (Eigen::Index k = 0; k < t.dimension(2); ++k)
        for (Eigen::Index j = 0; j < t.dimension(1); ++j) {
            double c = a(j) * b(k);
            if (c == 0.0) continue;
            for (Eigen::Index l = 0; l < D; ++l) out(l) += t(l, j, k) * c;
        }
    return out;
}

// sum_{a,b} T(h, a, b) x_a y_b over a moment tensor
Eigen::VectorXd moment_contract(const Tensor3<double>& t, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(t.dimension(0));
    for (Eigen::Index h = 0; h < t.dimension(0); ++h)
        for (Eigen::Index a = 0; a < t.dimension(1); ++a)
            for (Eigen::Index b = 0; b < t.dimension(2); ++b) out(h) += t(h, a, b) * x(a) * y(b);
    return out;
}

}  // namespace

ExpansionTerms q_bar(System sys, const SampleStats& ss, const Population& pop, const DerivTensors& dt) {
    const IndexLayout L = pop.layout();
    const Eigen::Index m = L.m, p = L.p;
    if (dt.phi2.size() == 0) throw DimensionError("q_bar needs second-derivative tensors");
    const Eigen::MatrixXd& Phi_inv = pop.phi.Phi_inv;
    const auto& P = pop.proj.P;
    const auto& H = pop.proj.H;
    const auto& Sigma = pop.proj.Sigma;
    const auto& Oi = pop.proj.Omega_inv;
    const Eigen::VectorXd& g = ss.g_bar;

    ExpansionTerms q;
    q.system = sys;
    q.psi_bar = psi_bar_generic(pop.phi, ss.phi0_bar);
    q.psi_bar_closed = psi_bar_closed(pop.proj, g);
    q.psi_bar_j = -Phi_inv * ss.phi1(sys);
    Tensor3<double> psi2 = left_multiply(-Phi_inv, dt.phi2);
    q.q_generic = q.psi_bar_j * q.psi_bar + 0.5 * contract2(psi2, q.psi_bar, q.psi_bar);

    const Eigen::VectorXd Pg = P * g, Hg = H * g;
    const auto& mt = pop.mt;
    Eigen::VectorXd s1 = moment_contract(mt.ggg, Pg, Pg);
    Eigen::VectorXd s2 = Eigen::VectorXd::Zero(m), s3 = Eigen::VectorXd::Zero(m), s4 = Eigen::VectorXd::Zero(m);
    for (Eigen::Index h = 0; h < m; ++h)
        for (Eigen::Index r = 0; r < p; ++r) {
            for (Eigen::Index j = 0; j < m; ++j) {
                s2(h) += Pg(j) * mt.dgg(h, j, r) * Hg(r);
                s3(h) += Hg(r) * mt.dgg(h, j, r) * Pg(j);
            }
            for (Eigen::Index s = 0; s < p; ++s) s4(h) += Hg(r) * mt.d2g(h, r, s) * Hg(s);
        }
    q.s_kappa = s1 + s2 + s3 + s4;
    q.s_lambda = s1;
    q.s_theta = Eigen::VectorXd::Zero(p);
    for (Eigen::Index r = 0; r < p; ++r) {
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index k = 0; k < m; ++k) q.s_theta(r) += Pg(j) * mt.dgg(j, k, r) * Pg(k);
        for (Eigen::Index j = 0; j < m; ++j)
            for (Eigen::Index s = 0; s < p; ++s) q.s_theta(r) += 2.0 * Pg(j) * mt.d2g(j, r, s) * Hg(s);
    }
    q.xi1 = -P * (q.s_kappa + q.s_lambda) - H.transpose() * q.s_theta;
    q.xi2 = -H * (q.s_kappa + q.s_lambda) + Sigma * q.s_theta;
    q.xi3 = 0.5 * q.xi1 + P * ss.Omega_bar * Pg + H.transpose() * ss.G_bar.transpose() * Pg + P * ss.G_bar * Hg;
    q.xi4 = 0.5 * q.xi2 + H * ss.Omega_bar * Pg - Sigma * ss.G_bar.transpose() * Pg + H * ss.G_bar * Hg;

    q.q_closed = Eigen::VectorXd::Zero(L.dim());
    q.q_closed(0) = -0.5 * g.dot(Pg);
    q.q_closed.segment(L.kappa(), m) = q.xi3;
    q.q_closed.segment(L.lambda(), m) = q.xi3 + 0.5 * Oi * q.s_lambda;
    q.q_closed.segment(L.theta(), p) = q.xi4;
    return q;
}

QDiffDecomposition q_diff_decomposition(const SampleStats& ss, const Population& pop, const DerivTensors& dt_diff) {
    const Eigen::MatrixXd& Phi_inv = pop.phi.Phi_inv;
    Eigen::VectorXd psi = psi_bar_generic(pop.phi, ss.phi0_bar);
    Eigen::MatrixXd dpsi_j = -Phi_inv * (ss.phi1(System::ETEL) - ss.phi1(System::EL));
    Tensor3<double> dpsi2 = left_multiply(-Phi_inv, dt_diff.phi2);
    QDiffDecomposition d;
    d.first_order = dpsi_j * psi;
    d.second_order = 0.5 * contract2(dpsi2, psi, psi);
    d.total = d.first_order + d.second_order;
    return d;
}

Eigen::VectorXd xi7_closed(const Population& pop, const Eigen::VectorXd& g_bar) {
    const Eigen::Index m = pop.layout().m;
    const Eigen::VectorXd Pg = pop.proj.P * g_bar;
    const auto& ggg = pop.mt.ggg;
    Eigen::VectorXd s1 = moment_contract(ggg, Pg, Pg);
    Eigen::VectorXd z = pop.proj.Omega_inv * s1;
    Eigen::VectorXd x = moment_contract(ggg, Pg, z);
    (void)m;
    return 0.5 * pop.proj.H * x;
}

RDiffReport r_diff_terms(const SampleStats& ss, const Population& pop, const DerivTensors& dt_diff,
                         const ExpansionTerms& q) {
    if (!dt_diff.has_phi3() || dt_diff.kind != TensorKind::Difference)
        throw DimensionError("r_diff_terms needs ETEL - EL tensors through third order");
    const IndexLayout L = pop.layout();
    const Eigen::Index D = L.dim(), p = L.p, th = L.theta();
    const Eigen::MatrixXd& Phi_inv = pop.phi.Phi_inv;
    const Eigen::VectorXd& psi = q.psi_bar;
    const Eigen::VectorXd& Q = q.q_generic;
    const Eigen::VectorXd& g = ss.g_bar;
    const Eigen::VectorXd Pg = pop.proj.P * g, Hg = pop.proj.H * g;

    RDiffReport r;
    Eigen::MatrixXd dpsi_j = -Phi_inv * (ss.phi1(System::ETEL) - ss.phi1(System::EL));
    r.term1 = (dpsi_j * Q).segment(th, p);
    r.term1_closed = 0.5 * Hg * g.dot(Pg);

    PsiTensors dpsi = psi_tensors(dt_diff, Phi_inv);
    r.term2 = contract2(dpsi.psi2, Q, psi).segment(th, p);
    r.term2_cancel = -0.5 * Hg * g.dot(Pg);
    r.term2_xi7 = xi7_closed(pop, g);

    if (ss.phi2(System::ETEL).size() == 0) throw DimensionError("r_diff_terms needs sample second derivatives");
    Tensor3<double> dphi2_bar = ss.phi2(System::ETEL) - ss.phi2(System::EL);
    Tensor3<double> dpsi2_bar = left_multiply(-Phi_inv, dphi2_bar);
    r.term3 = 0.5 * contract2(dpsi2_bar, psi, psi).segment(th, p);

    r.term4_weighted = Eigen::VectorXd::Zero(p);
    for (Eigen::Index l = 0; l < p; ++l)
        for (Eigen::Index j = 0; j < D; ++j)
            for (Eigen::Index k = 0; k < D; ++k) {
                double c = psi(j) * psi(k) * r.xi_weights(L, j, k);
                if (c == 0.0) continue;
                for (Eigen::Index qq = th; qq < D; ++qq) r.term4_weighted(l) += dpsi.psi3(th + l, j, k, qq) * c * psi(qq);
            }
    return r;
}

StudyReport expansion_difference_study(const MomentModel& model, const std::vector<Eigen::Index>& n_list, int reps,
                                       std::uint64_t seed) {
    if (reps < 1) throw DimensionError("study needs at least one replication");
    StudyReport out;
    std::size_t cell = 0;
    out.all_zero = true;
    for (Eigen::Index n : n_list) {
        StudyRow row;
        row.n = n;
        std::vector<double> te, tl;
        for (int r = 0; r < reps; ++r) {
            Dataset data = simulate(model, n, derive_seed(seed, cell, static_cast<std::uint64_t>(r)));
            try {
                Eigen::VectorXd th0 = gmm_estimate(model, data, model.theta_star());
                SolveReport se = solve_stacked(System::ETEL, model, data, th0);
                SolveReport sl = solve_stacked(System::EL, model, data, th0);
                double d = (se.beta_hat.theta() - sl.beta_hat.theta()).cwiseAbs().maxCoeff();
                row.abs_diff.push_back(d);
                te.push_back(se.beta_hat.theta()(0));
                tl.push_back(sl.beta_hat.theta()(0));
                if (d != 0.0) out.all_zero = false;
            } catch (const Error&) {
                ++row.reps_failed;
            }
        }
        row.reps_ok = static_cast<int>(row.abs_diff.size());
        if (row.reps_ok < kMinStudySuccess * reps)
            throw StudyError("n = " + std::to_string(n) + ": only " + std::to_string(row.reps_ok) + " of " +
                             std::to_string(reps) + " replications solved");
        std::vector<double> sorted = row.abs_diff;
        std::sort(sorted.begin(), sorted.end());
        std::size_t k = sorted.size();
        row.median_abs_diff = k % 2 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
        if (k >= 2) {
            auto var = [](const std::vector<double>& v) {
                double mu = 0.0;
                for (double x : v) mu += x;
                mu /= v.size();
                double s = 0.0;
                for (double x : v) s += (x - mu) * (x - mu);
                return s / (v.size() - 1);
            };
            double nn = static_cast<double>(n);
            row.var_gap_estimate = nn * nn * (var(te) - var(tl));
        }
        out.rows.push_back(std::move(row));
        ++cell;
    }
    bool ok = out.rows.size() >= 2 && reps >= 2;
    for (const auto& row : out.rows) ok = ok && row.median_abs_diff > 0.0;
    if (ok) {
        Eigen::MatrixXd X(out.rows.size(), 2);
        Eigen::VectorXd y(out.rows.size());
        for (std::size_t i = 0; i < out.rows.size(); ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = std::log(static_cast<double>(out.rows[i].n));
            y(i) = std::log(out.rows[i].median_abs_diff);
        }
        out.slope = (X.transpose() * X).ldlt().solve(X.transpose() * y)(1);
        out.slope_defined = true;
    }
    return out;
}

}  // namespace gelx
