#include "gelx/estimators.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "gelx/errors.hpp"

namespace gelx {

BetaVector::BetaVector(IndexLayout L, Eigen::VectorXd v) : layout(L), values(std::move(v)) {
    if (values.size() != L.dim()) throw DimensionError("beta has the wrong dimension");
}

BetaVector BetaVector::at_theta(IndexLayout L, const Eigen::VectorXd& theta) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(L.dim());
    v(0) = 1.0;
    v.tail(L.p) = theta;
    return {L, v};
}

namespace {

double tilt(const ObsJet& jet, const BetaVector& beta) {
    double s = beta.lambda().dot(jet.g);
    if (!(s <= kExpCap)) throw DomainError("exponent lambda'g = " + std::to_string(s) + " exceeds cap");
    return std::exp(s);
}

double el_factor(const ObsJet& jet, const BetaVector& beta) {
    double d = 1.0 - beta.kappa().dot(jet.g);
    if (!(d > 0.0)) throw DomainError("1 - kappa'g is not positive");
    return 1.0 / d;
}

}  // namespace

void phi_into(System sys, const ObsJet& jet, const BetaVector& beta, Eigen::Ref<Eigen::VectorXd> out) {
    const IndexLayout& L = beta.layout;
    const Eigen::Index m = L.m, p = L.p;
    const Eigen::VectorXd& g = jet.g;
    const Eigen::MatrixXd& G = jet.G;
    const auto kap = beta.kappa();
    const auto lam = beta.lambda();
    double t = tilt(jet, beta), tau = beta.tau();
    out(0) = t - tau;
    for (Eigen::Index a = 0; a < m; ++a) out(L.kappa() + a) = t * g(a);
    if (sys == System::ETEL) {
        double u = g.dot(kap);
        double c = t * u - t + tau;
        for (Eigen::Index a = 0; a < m; ++a) out(L.lambda() + a) = (tau - t + t * u) * g(a);
        for (Eigen::Index r = 0; r < p; ++r) {
            double v = 0.0, w = 0.0;
            for (Eigen::Index a = 0; a < m; ++a) {
                v += G(a, r) * kap(a);
                w += G(a, r) * lam(a);
            }
            out(L.theta() + r) = t * v + c * w;
        }
    } else {
        double e = el_factor(jet, beta);
        for (Eigen::Index a = 0; a < m; ++a) out(L.lambda() + a) = (e - t) * g(a);
        for (Eigen::Index r = 0; r < p; ++r) {
            double v = 0.0;
            for (Eigen::Index a = 0; a < m; ++a) v += G(a, r) * kap(a);
            out(L.theta() + r) = e * v;
        }
    }
}

void phi_jacobian_into(System sys, const ObsJet& jet, const BetaVector& beta, Eigen::Ref<Eigen::MatrixXd> J) {
    // element loops: this runs once per observation inside finite-difference sweeps
    const IndexLayout& L = beta.layout;
    const Eigen::Index m = L.m, p = L.p;
    const Eigen::Index k = L.kappa(), l = L.lambda(), th = L.theta();
    const Eigen::VectorXd& g = jet.g;
    const Eigen::MatrixXd& G = jet.G;
    const auto kap = beta.kappa();
    const auto lam = beta.lambda();
    double t = tilt(jet, beta), tau = beta.tau();
    double u = g.dot(kap);

    thread_local Eigen::VectorXd v, w;
    thread_local Eigen::MatrixXd K, Lh;
    v.resize(p);
    w.resize(p);
    K.resize(p, p);
    Lh.resize(p, p);
    for (Eigen::Index r = 0; r < p; ++r) {
        double sv = 0.0, sw = 0.0;
        for (Eigen::Index a = 0; a < m; ++a) {
            sv += G(a, r) * kap(a);
            sw += G(a, r) * lam(a);
        }
        v(r) = sv;
        w(r) = sw;
        for (Eigen::Index s = 0; s < p; ++s) {
            double sk = 0.0, sl = 0.0;
            for (Eigen::Index a = 0; a < m; ++a) {
                double hh = jet.G2(a, r * p + s);
                sk += kap(a) * hh;
                sl += lam(a) * hh;
            }
            K(r, s) = sk;
            Lh(r, s) = sl;
        }
    }

    J.setZero();
    J(0, 0) = -1.0;
    for (Eigen::Index b = 0; b < m; ++b) J(0, l + b) = t * g(b);
    for (Eigen::Index r = 0; r < p; ++r) J(0, th + r) = t * w(r);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) J(k + a, l + b) = t * g(a) * g(b);
        for (Eigen::Index r = 0; r < p; ++r) J(k + a, th + r) = t * (G(a, r) + g(a) * w(r));
    }

    if (sys == System::ETEL) {
        double c = t * u - t + tau;
        for (Eigen::Index a = 0; a < m; ++a) {
            J(l + a, 0) = g(a);
            for (Eigen::Index b = 0; b < m; ++b) {
                double gg = g(a) * g(b);
                J(l + a, k + b) = t * gg;
                J(l + a, l + b) = t * (u - 1.0) * gg;
            }
            for (Eigen::Index r = 0; r < p; ++r)
                J(l + a, th + r) = c * G(a, r) + t * (u - 1.0) * g(a) * w(r) + t * g(a) * v(r);
        }
        for (Eigen::Index r = 0; r < p; ++r) {
            J(th + r, 0) = w(r);
            for (Eigen::Index b = 0; b < m; ++b) {
                J(th + r, k + b) = t * (G(b, r) + w(r) * g(b));
                J(th + r, l + b) = t * v(r) * g(b) + t * (u - 1.0) * w(r) * g(b) + c * G(b, r);
            }
            for (Eigen::Index s = 0; s < p; ++s)
                J(th + r, th + s) = t * v(r) * w(s) + t * K(r, s) + t * (u - 1.0) * w(r) * w(s) + t * w(r) * v(s) +
                                    c * Lh(r, s);
        }
    } else {
        double e = el_factor(jet, beta);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) {
                double gg = g(a) * g(b);
                J(l + a, k + b) = e * e * gg;
                J(l + a, l + b) = -t * gg;
            }
            for (Eigen::Index r = 0; r < p; ++r)
                J(l + a, th + r) = (e - t) * G(a, r) + e * e * g(a) * v(r) - t * g(a) * w(r);
        }
        for (Eigen::Index r = 0; r < p; ++r) {
            for (Eigen::Index b = 0; b < m; ++b) J(th + r, k + b) = e * e * v(r) * g(b) + e * G(b, r);
            for (Eigen::Index s = 0; s < p; ++s) J(th + r, th + s) = e * e * v(r) * v(s) + e * K(r, s);
        }
    }
}

namespace {

Eigen::VectorXd phi_checked(System sys, const MomentModel& model, const Eigen::VectorXd& x, const BetaVector& beta) {
    if (beta.layout.m != model.dim_g() || beta.layout.p != model.dim_theta())
        throw DimensionError("beta layout does not match " + model.name());
    if (x.size() != model.dim_x()) throw DimensionError("x has the wrong dimension for " + model.name());
    ObsJet jet(model.dim_g(), model.dim_theta());
    model.eval(x, beta.theta(), jet);
    Eigen::VectorXd out(beta.layout.dim());
    phi_into(sys, jet, beta, out);
    return out;
}

}  // namespace

Eigen::VectorXd phi_etel(const MomentModel& model, const Eigen::VectorXd& x, const BetaVector& beta) {
    return phi_checked(System::ETEL, model, x, beta);
}

Eigen::VectorXd phi_el(const MomentModel& model, const Eigen::VectorXd& x, const BetaVector& beta) {
    return phi_checked(System::EL, model, x, beta);
}

StackedAverage::StackedAverage(System sys, const MomentModel& model, const Dataset& data)
    : StackedAverage(sys, model, data, Eigen::VectorXd::Constant(data.n(), 1.0 / static_cast<double>(data.n()))) {}

StackedAverage::StackedAverage(System sys, const MomentModel& model, const Dataset& data, Eigen::VectorXd weights)
    : sys_(sys), model_(model), data_(data), w_(std::move(weights)) {
    if (data.dim() != model.dim_x()) throw DimensionError("dataset dimension does not match " + model.name());
    if (w_.size() != data.n()) throw DimensionError("weights do not match the dataset");
}

Eigen::VectorXd StackedAverage::residual(const BetaVector& beta) const {
    const IndexLayout& L = beta.layout;
    ObsJet jet(L.m, L.p);
    Eigen::VectorXd theta = beta.theta();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(L.dim()), phi(L.dim());
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
        model_.eval(data_.obs(i), theta, jet);
        phi_into(sys_, jet, beta, phi);
        acc += w_(i) * phi;
    }
    return acc;
}

Eigen::MatrixXd StackedAverage::jacobian(const BetaVector& beta) const {
    const IndexLayout& L = beta.layout;
    ObsJet jet(L.m, L.p);
    Eigen::VectorXd theta = beta.theta();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(L.dim(), L.dim()), J(L.dim(), L.dim());
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
        model_.eval(data_.obs(i), theta, jet);
        phi_jacobian_into(sys_, jet, beta, J);
        acc += w_(i) * J;
    }
    return acc;
}

Eigen::VectorXd gmm_estimate(const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta0) {
    const Eigen::Index m = model.dim_g(), p = model.dim_theta();
    const double n = static_cast<double>(data.n());
    Eigen::VectorXd theta = theta0;
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd g(m);
    Eigen::MatrixXd G(m, p);
    auto moments = [&](const Eigen::VectorXd& th, Eigen::VectorXd& gbar, Eigen::MatrixXd& Gbar, Eigen::MatrixXd& S) {
        gbar.setZero(m);
        Gbar.setZero(m, p);
        S.setZero(m, m);
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            model.g(data.obs(i), th, g);
            model.jacobian(data.obs(i), th, G);
            gbar += g / n;
            Gbar += G / n;
            S.noalias() += g * g.transpose() / n;
        }
    };
    Eigen::VectorXd gbar;
    Eigen::MatrixXd Gbar, S;
    for (int stage = 0; stage < 2; ++stage) {
        for (int it = 0; it < 50; ++it) {
            moments(theta, gbar, Gbar, S);
            double obj = gbar.dot(W * gbar);
            Eigen::VectorXd step = -(Gbar.transpose() * W * Gbar).ldlt().solve(Gbar.transpose() * W * gbar);
            double s = 1.0;
            Eigen::VectorXd trial_g;
            Eigen::MatrixXd trial_G, trial_S;
            for (int h = 0; h < 30; ++h, s *= 0.5) {
                moments(theta + s * step, trial_g, trial_G, trial_S);
                if (trial_g.dot(W * trial_g) <= obj) break;
            }
            theta += s * step;
            if ((s * step).norm() <= 1e-13 * (1.0 + theta.norm())) break;
        }
        moments(theta, gbar, Gbar, S);
        W = (S - gbar * gbar.transpose()).ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    }
    return theta;
}

BetaVector profile_start(System sys, const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta,
                         double inner_tol) {
    IndexLayout L = model.layout();
    Eigen::MatrixXd gm = moment_matrix(model, data, theta);
    DualSolution et = et_inner_solve(gm, inner_tol);
    BetaVector b = BetaVector::at_theta(L, theta);
    b.lambda() = et.multiplier;
    if (et.log_mean_exp > kExpCap) throw DomainError("profile start: tilting exponent exceeds cap");
    b.tau() = std::exp(et.log_mean_exp);
    if (sys == System::ETEL) {
        const double n = static_cast<double>(data.n());
        Eigen::ArrayXd t = (et.multiplier.transpose() * gm).transpose().array().exp();
        Eigen::MatrixXd A = gm * t.matrix().asDiagonal() * gm.transpose() / n;
        Eigen::VectorXd rhs = gm * (b.tau() - t).matrix() / n;
        b.kappa() = -A.ldlt().solve(rhs);
    } else {
        b.kappa() = el_inner_solve(gm, inner_tol).multiplier;
    }
    return b;
}

SolveReport solve_stacked(System sys, const MomentModel& model, const Dataset& data, const BetaVector& init,
                          const SolveOptions& opt) {
    StackedAverage avg(sys, model, data);
    const Eigen::Index D = init.layout.dim();
    SolveReport rep;
    rep.system = sys;
    rep.init_strategy = "explicit";
    BetaVector beta = init;
    Eigen::VectorXd F = avg.residual(beta);
    double nf = F.norm();
    int it = 0;
    for (; nf > opt.tol; ++it) {
        if (it == opt.max_iter)
            throw NonConvergenceError(std::string(to_string(sys)) + " stacked Newton: residual " + std::to_string(nf) +
                                      " after " + std::to_string(it) + " iterations");
        Eigen::FullPivLU<Eigen::MatrixXd> lu(avg.jacobian(beta));
        if (lu.rank() < D) throw SingularJacobianError(std::string(to_string(sys)) + " stacked Jacobian is singular");
        Eigen::VectorXd dir = -lu.solve(F);
        double s = 1.0;
        bool accepted = false;
        for (int h = 0; h < 50 && !accepted; ++h, s *= 0.5) {
            BetaVector trial(beta.layout, beta.values + s * dir);
            try {
                Eigen::VectorXd Ft = avg.residual(trial);
                double nt = Ft.norm();
                if (nt * nt <= (1.0 - 2e-4 * s) * nf * nf) {
                    beta = std::move(trial);
                    F = std::move(Ft);
                    nf = nt;
                    accepted = true;
                }
            } catch (const DomainError&) {
            }
        }
        if (!accepted)
            throw NonConvergenceError(std::string(to_string(sys)) + " stacked Newton: line search stalled at residual " +
                                      std::to_string(nf));
    }
    // full Newton steps past tol while they still help
    for (int k = 0; k < 3 && nf > 0.0; ++k) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(avg.jacobian(beta));
        if (lu.rank() < D) break;
        try {
            BetaVector trial(beta.layout, beta.values - lu.solve(F));
            Eigen::VectorXd Ft = avg.residual(trial);
            if (!(Ft.norm() < nf)) break;
            beta = std::move(trial);
            F = std::move(Ft);
            nf = F.norm();
            ++it;
        } catch (const DomainError&) {
            break;
        }
    }
    rep.beta_hat = beta;
    rep.residual_norm = nf;
    rep.iterations = it;
    rep.converged = true;
    rep.distance_from_init = (beta.values - init.values).norm();
    return rep;
}

SolveReport solve_stacked(System sys, const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta0,
                          const SolveOptions& opt) {
    if (theta0.size() != model.dim_theta()) throw DimensionError("theta0 has the wrong dimension");
    BetaVector init = profile_start(sys, model, data, theta0, opt.inner_tol);
    SolveReport rep = solve_stacked(sys, model, data, init, opt);
    rep.init_strategy = "profile";
    return rep;
}

}  // namespace gelx
