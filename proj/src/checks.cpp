#include "gelx/checks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/LU>

#include "gelx/errors.hpp"
#include "gelx/estimators.hpp"
#include "gelx/rng.hpp"

namespace gelx {

namespace {

// stream ids so that every check draws its own datasets
enum Cell : std::uint64_t {
    kCellInstances = 1000,
    kCellPsi,
    kCellQ,
    kCellR,
    kCellXi7,
    kCellVar,
    kCellSolver,
};

double max_abs(const Eigen::MatrixXd& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

template <class T>
double rel_diff(const T& fd, const T& cf) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < cf.size(); ++i)
        out = std::max(out, std::abs(fd.data()[i] - cf.data()[i]) / (1.0 + std::abs(cf.data()[i])));
    return out;
}

double rel_diff(const Eigen::MatrixXd& fd, const Eigen::MatrixXd& cf) {
    return ((fd - cf).array().abs() / (1.0 + cf.array().abs())).maxCoeff();
}

// largest entry in the tau and kappa equation rows
template <class T>
double leading_rows(const T& t, Eigen::Index rows) {
    double out = 0.0;
    const Eigen::Index stride = t.dimension(0);
    for (Eigen::Index i = 0; i < t.size(); ++i)
        if (i % stride < rows) out = std::max(out, std::abs(t.data()[i]));
    return out;
}

std::string count_detail(const char* what, int k) { return std::to_string(k) + " " + what; }

}  // namespace

Check make_check(std::string name, std::string anchor, double value, double tolerance, double lower) {
    Check c;
    c.name = std::move(name);
    c.anchor = std::move(anchor);
    c.value = value;
    c.tolerance = tolerance;
    c.lower = lower;
    c.passed = value <= tolerance && value >= lower;  // NaN fails
    return c;
}

PopulationMoments<double> random_population_moments(std::uint64_t seed, Eigen::Index m, Eigen::Index p) {
    Philox4x64 rng(seed);
    NormalSampler<Philox4x64> normal;
    auto z = [&] { return normal(rng); };
    PopulationMoments<double> pm;
    pm.G.resize(m, p);
    for (Eigen::Index i = 0; i < pm.G.size(); ++i) pm.G.data()[i] = z();
    Eigen::MatrixXd A(m, m);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = z();
    pm.Omega = A * A.transpose() / double(m) + 0.5 * Eigen::MatrixXd::Identity(m, m);
    return pm;
}

std::vector<Check> random_identity_checks(std::uint64_t seed, int count, const ToleranceTable& tol) {
    double pg = 0, sym = 0, pop = 0, poh = 0, hoh = 0, inv = 0;
    Philox4x64 dims(derive_seed(seed, kCellInstances, 0));
    for (int i = 0; i < count; ++i) {
        Eigen::Index m = 2 + static_cast<Eigen::Index>(dims() % 4);
        Eigen::Index p = 1 + static_cast<Eigen::Index>(dims() % static_cast<std::uint64_t>(m - 1));
        PopulationMoments<double> pm = random_population_moments(derive_seed(seed, kCellInstances, i + 1), m, p);
        ProjectionSet<double> ps = projection_set(pm);
        IdentityResiduals<double> r = identity_residuals(pm, ps);
        pg = std::max(pg, r.PG);
        sym = std::max(sym, r.P_symmetry);
        pop = std::max(pop, r.POmegaP);
        poh = std::max(poh, r.POmegaH);
        hoh = std::max(hoh, r.HOmegaH);
        inv = std::max(inv, phi_inverse_residual(phi_system(pm, ps)));
    }
    const double t = tol["identity"];
    const std::string a = "projection identities";
    std::vector<Check> out{make_check("random PG = 0", a, pg, t),
                           make_check("random P' = P", a, sym, t),
                           make_check("random P Omega P = P", a, pop, t),
                           make_check("random P Omega H' = 0", a, poh, t),
                           make_check("random H Omega H' = Sigma", a, hoh, t),
                           make_check("random Phi inverse vs LU inverse", "partitioned inverse of Phi", inv,
                                      tol["phi_inverse"])};
    for (auto& c : out) c.detail = count_detail("instances", count);
    return out;
}

std::vector<Check> population_identity_checks(const Population& pop, const ToleranceTable& tol) {
    IdentityResiduals<double> r = identity_residuals(pop.moments, pop.proj);
    const double t = tol["identity"];
    const std::string a = "projection identities";
    return {make_check("PG = 0", a, r.PG, t),
            make_check("P' = P", a, r.P_symmetry, t),
            make_check("P Omega P = P", a, r.POmegaP, t),
            make_check("P Omega H' = 0", a, r.POmegaH, t),
            make_check("H Omega H' = Sigma", a, r.HOmegaH, t),
            make_check("Phi inverse vs LU inverse", "partitioned inverse of Phi", phi_inverse_residual(pop.phi),
                       tol["phi_inverse"])};
}

std::vector<Check> tensor_checks(const Population& pop, const FdTensorSet& fd, const ToleranceTable& tol) {
    const double t = tol["fd_tensor"], sc = tol["symmetry_closed"], sf = tol["symmetry_fd"];
    const std::string a = "stacked moment derivatives";
    const std::string s = "symmetry of derivative tensors";
    std::vector<Check> out{
        make_check("ETEL phi1 FD vs closed", a, rel_diff(fd.etel.phi1, pop.etel.phi1), t),
        make_check("EL phi1 FD vs closed", a, rel_diff(fd.el.phi1, pop.el.phi1), t),
        make_check("ETEL phi2 FD vs closed", a, rel_diff(fd.etel.phi2, pop.etel.phi2), t),
        make_check("EL phi2 FD vs closed", a, rel_diff(fd.el.phi2, pop.el.phi2), t),
        make_check("ETEL-EL phi2 FD vs closed", a, rel_diff(fd.diff.phi2, pop.diff.phi2), t),
        make_check("ETEL-EL phi3 FD vs closed", a, rel_diff(fd.diff.phi3, pop.diff.phi3), t),
        make_check("ETEL phi2 symmetry closed", s, asymmetry(pop.etel.phi2), sc),
        make_check("EL phi2 symmetry closed", s, asymmetry(pop.el.phi2), sc),
        make_check("ETEL-EL phi3 symmetry closed", s, asymmetry(pop.diff.phi3), sc),
        make_check("ETEL phi2 symmetry FD", s, asymmetry(fd.etel.phi2), sf),
        make_check("EL phi2 symmetry FD", s, asymmetry(fd.el.phi2), sf),
        make_check("ETEL-EL phi3 symmetry FD", s, asymmetry(fd.diff.phi3), sf),
        make_check("ETEL-EL phi1 zero closed", "common Phi for both systems", max_abs(pop.diff.phi1),
                   tol["q_equal_closed"]),
        make_check("ETEL-EL phi1 zero FD", "common Phi for both systems", max_abs(fd.diff.phi1), t),
    };
    const Eigen::Index rows = 1 + pop.layout().m;
    const std::string z = "tau and kappa rows of ETEL-EL derivatives";
    out.push_back(make_check("ETEL-EL phi2 leading rows zero closed", z, leading_rows(pop.diff.phi2, rows), sc));
    out.push_back(make_check("ETEL-EL phi3 leading rows zero closed", z, leading_rows(pop.diff.phi3, rows), sc));
    out.push_back(make_check("ETEL-EL phi2 leading rows zero FD", z, leading_rows(fd.diff.phi2, rows), t));
    out.push_back(make_check("ETEL-EL phi3 leading rows zero FD", z, leading_rows(fd.diff.phi3, rows), t));
    return out;
}

std::vector<Check> psi_checks(const Population& pop, int samples, Eigen::Index n, std::uint64_t seed,
                              const ToleranceTable& tol) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(pop.phi.Phi);
    double err = 0.0;
    for (int s = 0; s < samples; ++s) {
        Dataset d = simulate(*pop.model, n, derive_seed(seed, kCellPsi, s));
        SampleStats ss = sample_stats(pop, d, false);
        Eigen::VectorXd generic = -lu.solve(ss.phi0_bar);
        err = std::max(err, max_abs(psi_bar_closed(pop.proj, ss.g_bar) - generic));
    }
    Check c = make_check("Psi_bar closed vs -Phi^-1 Phi_bar", "first-order term Psi_bar", err, tol["psi_closed"]);
    c.detail = count_detail("samples", samples);
    return {c};
}

std::vector<Check> q_checks(const Population& pop, const FdTensorSet& fd, int samples, Eigen::Index n,
                            std::uint64_t seed, const ToleranceTable& tol) {
    const IndexLayout L = pop.layout();
    double cf_gen = 0, fd_gen = 0, eq_cf = 0, eq_fd = 0, tau = 0, lam = 0, dec1 = 0, dec2 = 0;
    for (int s = 0; s < samples; ++s) {
        Dataset d = simulate(*pop.model, n, derive_seed(seed, kCellQ, s));
        SampleStats ss = sample_stats(pop, d, false);
        ExpansionTerms qe = q_bar(System::ETEL, ss, pop, pop.etel);
        ExpansionTerms ql = q_bar(System::EL, ss, pop, pop.el);
        ExpansionTerms qef = q_bar(System::ETEL, ss, pop, fd.etel);
        ExpansionTerms qlf = q_bar(System::EL, ss, pop, fd.el);
        cf_gen = std::max({cf_gen, max_abs(qe.q_generic - qe.q_closed), max_abs(ql.q_generic - ql.q_closed)});
        fd_gen = std::max({fd_gen, max_abs(qef.q_generic - qef.q_closed), max_abs(qlf.q_generic - qlf.q_closed)});
        eq_cf = std::max(eq_cf, max_abs(qe.q_generic - ql.q_generic));
        eq_fd = std::max(eq_fd, max_abs(qef.q_generic - qlf.q_generic));
        tau = std::max(tau, std::abs(ql.q_generic(0) + 0.5 * ss.g_bar.dot(pop.proj.P * ss.g_bar)));
        Eigen::VectorXd gap = ql.q_generic.segment(L.lambda(), L.m) - ql.q_generic.segment(L.kappa(), L.m);
        lam = std::max(lam, max_abs(gap - 0.5 * pop.proj.Omega_inv * ql.s_lambda));
        QDiffDecomposition dq = q_diff_decomposition(ss, pop, pop.diff);
        dec1 = std::max(dec1, max_abs(dq.first_order));
        dec2 = std::max(dec2, max_abs(dq.second_order));
    }
    const std::string a = "second-order term Q_bar";
    const std::string e = "Q_bar equality of ETEL and EL";
    const double c = tol["q_equal_closed"];
    std::vector<Check> out{
        make_check("Q_bar Xi assembly vs generic, closed tensors", a, cf_gen, tol["q_closed_vs_generic_closed"]),
        make_check("Q_bar Xi assembly vs generic, FD tensors", a, fd_gen, tol["q_closed_vs_generic_fd"]),
        make_check("Q_bar tau block = -g'Pg/2", a, tau, c),
        make_check("Q_bar lambda - kappa block", a, lam, c),
        make_check("Q_bar ETEL - EL, closed tensors", e, eq_cf, c),
        make_check("Q_bar ETEL - EL, FD tensors", e, eq_fd, tol["q_equal_fd"]),
        make_check("first-order difference piece", e, dec1, tol["q_decomposition"]),
        make_check("second-order difference piece", e, dec2, tol["q_decomposition"]),
    };
    for (auto& ck : out) ck.detail = count_detail("samples", samples);
    return out;
}

std::vector<Check> r_checks(const Population& pop, const FdTensorSet& fd, int samples, Eigen::Index n,
                            std::uint64_t seed, const ToleranceTable& tol) {
    double t1 = 0, cancel = 0, split = 0, t3 = 0, t4c = 0, t4f = 0;
    for (int s = 0; s < samples; ++s) {
        Dataset d = simulate(*pop.model, n, derive_seed(seed, kCellR, s));
        SampleStats ss = sample_stats(pop, d, true);
        ExpansionTerms q = q_bar(System::ETEL, ss, pop, pop.etel);
        RDiffReport r = r_diff_terms(ss, pop, pop.diff, q);
        RDiffReport rf = r_diff_terms(ss, pop, fd.diff, q);
        t1 = std::max(t1, max_abs(r.term1 - r.term1_closed));
        cancel = std::max(cancel, max_abs(r.term1_closed + r.term2_cancel));
        split = std::max(split, max_abs(r.term2 - r.term2_cancel - r.term2_xi7));
        t3 = std::max(t3, max_abs(r.term3));
        t4c = std::max(t4c, max_abs(r.term4_weighted));
        t4f = std::max(t4f, max_abs(rf.term4_weighted));
    }
    const std::string a = "R_bar difference terms";
    std::vector<Check> out{
        make_check("term1 direct vs closed", a, t1, tol["term1_closed"]),
        make_check("term1 + term2_cancel = 0", a, cancel, tol["term1_cancel"]),
        make_check("term2 direct = cancel + Xi7", a, split, tol["term2_split"]),
        make_check("term3 = 0", a, t3, tol["term3"]),
        make_check("term4_weighted = 0, closed tensors", a, t4c, tol["term4_closed"]),
        make_check("term4_weighted = 0, FD tensors", a, t4f, tol["term4_fd"]),
    };
    for (auto& ck : out) ck.detail = count_detail("samples", samples);
    return out;
}

Check xi7_orthogonality_check(const Population& pop, int reps, Eigen::Index n, std::uint64_t seed,
                              const ToleranceTable& tol) {
    if (reps < 3) throw DimensionError("orthogonality check needs at least 3 replications");
    const Eigen::Index p = pop.layout().p;
    Eigen::MatrixXd xi(reps, p), hg(reps, p);
    for (int r = 0; r < reps; ++r) {
        Dataset d = simulate(*pop.model, n, derive_seed(seed, kCellXi7, r));
        Eigen::VectorXd g_bar = moment_matrix(*pop.model, d, pop.model->theta_star()).rowwise().sum() /
                                std::sqrt(static_cast<double>(n));
        xi.row(r) = xi7_closed(pop, g_bar).transpose();
        hg.row(r) = (pop.proj.H * g_bar).transpose();
    }
    double worst = 0.0;
    for (Eigen::Index l = 0; l < p; ++l)
        for (Eigen::Index k = 0; k < p; ++k) {
            Eigen::ArrayXd a = xi.col(l).array() - xi.col(l).mean();
            Eigen::ArrayXd b = hg.col(k).array() - hg.col(k).mean();
            double den = std::sqrt((a * a).sum() * (b * b).sum());
            if (den == 0.0) continue;
            double corr = (a * b).sum() / den;
            double se = std::sqrt((1.0 - corr * corr) / (reps - 2));
            worst = std::max(worst, std::abs(corr) / se);
        }
    Check c = make_check("corr(Xi7, H g_bar) in standard errors", "orthogonality of Xi7 and H g_bar", worst,
                         tol["mc_sigmas"]);
    c.detail = count_detail("replications", reps) + ", n = " + std::to_string(n);
    return c;
}

Check var_psi_check(const Population& pop, int reps, Eigen::Index n, std::uint64_t seed, const ToleranceTable& tol) {
    if (reps < 2) throw DimensionError("covariance check needs at least 2 replications");
    const Eigen::Index D = pop.layout().dim();
    Eigen::MatrixXd psi(reps, D);
    for (int r = 0; r < reps; ++r) {
        Dataset d = simulate(*pop.model, n, derive_seed(seed, kCellVar, r));
        SampleStats ss = sample_stats(pop, d, false);
        psi.row(r) = psi_bar_generic(pop.phi, ss.phi0_bar).transpose();
    }
    Eigen::MatrixXd V = var_psi_bar(pop.proj);
    Eigen::MatrixXd c = psi.rowwise() - psi.colwise().mean();
    double worst = 0.0;
    for (Eigen::Index a = 0; a < D; ++a)
        for (Eigen::Index b = a; b < D; ++b) {
            Eigen::ArrayXd prod = c.col(a).array() * c.col(b).array();
            double cov = prod.sum() / (reps - 1);
            double se = std::sqrt((prod - prod.mean()).square().sum() / (reps - 1) / reps);
            double gap = std::abs(cov - V(a, b));
            double z = gap <= tol::kClosedForm * (1.0 + std::abs(V(a, b))) ? 0.0 : se > 0.0 ? gap / se : INFINITY;
            worst = std::max(worst, z);
        }
    Check ck = make_check("Var(Psi_bar) vs block display in standard errors", "variance of Psi_bar", worst,
                          tol["mc_sigmas"]);
    ck.detail = count_detail("replications", reps) + ", n = " + std::to_string(n);
    return ck;
}

std::vector<Check> study_checks(const MomentModel& model, const StudyReport& study, int reps,
                                const ToleranceTable& tol) {
    std::vector<Check> out;
    const std::string a = "estimator difference scaling";
    int ok = 0, total = 0;
    for (const auto& row : study.rows) {
        ok += row.reps_ok;
        total += row.reps_ok + row.reps_failed;
    }
    if (model.dim_g() == model.dim_theta()) {
        double worst = 0.0;
        for (const auto& row : study.rows)
            for (double d : row.abs_diff) worst = std::max(worst, d);
        Check c = make_check("just-identified |theta_ETEL - theta_EL| = 0", a, worst, 0.0);
        c.detail = study.all_zero ? "exact in every replication" : "nonzero differences";
        out.push_back(c);
    } else {
        Check c = make_check("log-log slope of median |theta_ETEL - theta_EL|", a,
                             study.slope_defined ? study.slope : NAN, tol["slope_high"], tol["slope_low"]);
        if (!study.slope_defined) c.detail = "slope undefined: need two sizes, reps >= 2 and nonzero medians";
        out.push_back(c);
    }
    Check s = make_check("study solver success rate", a, total ? double(ok) / total : NAN, 1.0,
                         tol["solver_success"]);
    s.detail = std::to_string(ok) + " of " + std::to_string(total) + ", reps per size " + std::to_string(reps);
    out.push_back(s);
    return out;
}

std::vector<Check> solver_robustness_checks(const MomentModel& model, int datasets, Eigen::Index n,
                                            std::uint64_t seed, const ToleranceTable& tol) {
    int ok = 0, hull = 0, nonconv = 0, other_error = 0, unclassified = 0, loose = 0;
    const double res_tol = tol["solver_residual"];
    for (int r = 0; r < datasets; ++r) {
        Dataset d = simulate(model, n, derive_seed(seed, kCellSolver, r));
        try {
            Eigen::VectorXd th0 = gmm_estimate(model, d, model.theta_star());
            bool good = true;
            for (System sys : {System::ETEL, System::EL}) {
                SolveReport rep = solve_stacked(sys, model, d, th0);
                good = good && rep.converged && rep.residual_norm <= res_tol;
            }
            if (good)
                ++ok;
            else
                ++loose;
        } catch (const HullError&) {
            ++hull;
        } catch (const NonConvergenceError&) {
            ++nonconv;
        } catch (const Error&) {
            ++other_error;
        } catch (const std::exception&) {
            ++unclassified;
        }
    }
    const std::string a = "stacked solver robustness";
    Check c = make_check("both solvers converge with residual <= tol", a, double(ok) / datasets, 1.0,
                         tol["solver_success"]);
    c.detail = std::to_string(ok) + " of " + std::to_string(datasets) + " ok; hull " + std::to_string(hull) +
               ", non-convergence " + std::to_string(nonconv) + ", other " + std::to_string(other_error) +
               ", residual above tolerance " + std::to_string(loose);
    Check u = make_check("failures outside the error hierarchy", a, unclassified, 0.0);
    return {c, u};
}

}  // namespace gelx
