#include "gelx/derivatives.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "gelx/errors.hpp"
#include "gelx/estimators.hpp"

namespace gelx {

const char* to_string(TensorKind k) {
    switch (k) {
        case TensorKind::ETEL: return "etel";
        case TensorKind::EL: return "el";
        default: return "etel-el";
    }
}

std::string tensor_csv(const Tensor3<double>& t) {
    std::ostringstream out;
    out.precision(17);
    out << "l,j,k,value\n";
    for (Eigen::Index l = 0; l < t.dimension(0); ++l)
        for (Eigen::Index j = 0; j < t.dimension(1); ++j)
            for (Eigen::Index k = 0; k < t.dimension(2); ++k)
                if (t(l, j, k) != 0.0) out << l << ',' << j << ',' << k << ',' << t(l, j, k) << '\n';
    return out.str();
}

std::string tensor_csv(const Tensor4<double>& t) {
    std::ostringstream out;
    out.precision(17);
    out << "l,j,k,h,value\n";
    for (Eigen::Index l = 0; l < t.dimension(0); ++l)
        for (Eigen::Index j = 0; j < t.dimension(1); ++j)
            for (Eigen::Index k = 0; k < t.dimension(2); ++k)
                for (Eigen::Index h = 0; h < t.dimension(3); ++h)
                    if (t(l, j, k, h) != 0.0)
                        out << l << ',' << j << ',' << k << ',' << h << ',' << t(l, j, k, h) << '\n';
    return out.str();
}

namespace {
void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}
}  // namespace

void write_tensor_csv(const std::string& path, const Tensor3<double>& t) { write_text(path, tensor_csv(t)); }
void write_tensor_csv(const std::string& path, const Tensor4<double>& t) { write_text(path, tensor_csv(t)); }

void accumulate_phi1(System sys, const ObsJet& jet, double w, Eigen::Ref<Eigen::MatrixXd> acc) {
    const Eigen::Index m = jet.g.size(), p = jet.G.cols();
    const IndexLayout L(m, p);
    const Eigen::Index K = L.kappa(), Lm = L.lambda(), T = L.theta();
    const auto& g = jet.g;
    const auto& G = jet.G;
    acc(0, 0) -= w;
    for (Eigen::Index b = 0; b < m; ++b) acc(0, Lm + b) += w * g(b);
    for (Eigen::Index a = 0; a < m; ++a) {
        if (sys == System::ETEL) acc(Lm + a, 0) += w * g(a);
        for (Eigen::Index b = 0; b < m; ++b) {
            double gg = w * g(a) * g(b);
            acc(K + a, Lm + b) += gg;
            acc(Lm + a, K + b) += gg;
            acc(Lm + a, Lm + b) -= gg;
        }
        for (Eigen::Index r = 0; r < p; ++r) {
            acc(K + a, T + r) += w * G(a, r);
            acc(T + r, K + a) += w * G(a, r);
        }
    }
}

void accumulate_phi2(System sys, const ObsJet& jet, double w, Tensor3<double>& t) {
    const Eigen::Index m = jet.g.size(), p = jet.G.cols();
    const IndexLayout L(m, p);
    const Eigen::Index K = L.kappa(), Lm = L.lambda(), T = L.theta();
    const auto& g = jet.g;
    const auto& G = jet.G;
    auto sym = [&](Eigen::Index l, Eigen::Index j, Eigen::Index k, double v) {
        t(l, j, k) += v;
        t(l, k, j) += v;
    };
    auto dgg = [&](Eigen::Index a, Eigen::Index b, Eigen::Index r) { return G(a, r) * g(b) + g(a) * G(b, r); };

    for (Eigen::Index b = 0; b < m; ++b) {
        for (Eigen::Index c = 0; c < m; ++c) t(0, Lm + b, Lm + c) += w * g(b) * g(c);
        for (Eigen::Index r = 0; r < p; ++r) sym(0, Lm + b, T + r, w * G(b, r));
    }
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
            for (Eigen::Index c = 0; c < m; ++c) {
                double ggg = w * g(a) * g(b) * g(c);
                t(K + a, Lm + b, Lm + c) += ggg;
                t(Lm + a, Lm + b, Lm + c) -= ggg;
                if (sys == System::ETEL)
                    sym(Lm + a, K + b, Lm + c, ggg);
                else
                    t(Lm + a, K + b, K + c) += 2.0 * ggg;
            }
            for (Eigen::Index r = 0; r < p; ++r) {
                double d = w * dgg(a, b, r);
                sym(K + a, Lm + b, T + r, d);
                sym(Lm + a, K + b, T + r, d);
                sym(Lm + a, Lm + b, T + r, -d);
            }
        }
        for (Eigen::Index r = 0; r < p; ++r) {
            if (sys == System::ETEL) sym(Lm + a, 0, T + r, w * G(a, r));
            for (Eigen::Index s = 0; s < p; ++s) t(K + a, T + r, T + s) += w * jet.hess(a, r, s);
        }
    }
    for (Eigen::Index r = 0; r < p; ++r) {
        for (Eigen::Index b = 0; b < m; ++b) {
            for (Eigen::Index c = 0; c < m; ++c) {
                if (sys == System::ETEL) {
                    sym(T + r, K + b, Lm + c, w * (g(c) * G(b, r) + G(c, r) * g(b)));
                    t(T + r, Lm + b, Lm + c) -= w * (g(b) * G(c, r) + g(c) * G(b, r));
                } else {
                    t(T + r, K + b, K + c) += w * (G(b, r) * g(c) + g(b) * G(c, r));
                }
            }
            if (sys == System::ETEL) sym(T + r, 0, Lm + b, w * G(b, r));
            for (Eigen::Index s = 0; s < p; ++s) sym(T + r, K + b, T + s, w * jet.hess(b, r, s));
        }
    }
}

void accumulate_phi3_difference(const ObsJet& jet, double w, Tensor4<double>& t) {
    const Eigen::Index m = jet.g.size(), p = jet.G.cols();
    const IndexLayout L(m, p);
    const Eigen::Index K = L.kappa(), Lm = L.lambda(), T = L.theta();
    const auto& g = jet.g;
    const auto& G = jet.G;

    // (j, k) range over one block in all orders, h is from another block
    auto aab = [&](Eigen::Index l, Eigen::Index j, Eigen::Index k, Eigen::Index h, double v) {
        t(l, j, k, h) += v;
        t(l, j, h, k) += v;
        t(l, h, j, k) += v;
    };
    auto abc = [&](Eigen::Index l, Eigen::Index j, Eigen::Index k, Eigen::Index h, double v) {
        t(l, j, k, h) += v;
        t(l, j, h, k) += v;
        t(l, k, j, h) += v;
        t(l, k, h, j) += v;
        t(l, h, j, k) += v;
        t(l, h, k, j) += v;
    };
    // d(g_a g_b g_c)/dth_r and d2(g_a g_b)/dth_r dth_s
    auto d3 = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index r) {
        return G(a, r) * g(b) * g(c) + g(a) * G(b, r) * g(c) + g(a) * g(b) * G(c, r);
    };
    auto e2 = [&](Eigen::Index a, Eigen::Index b, Eigen::Index r, Eigen::Index s) {
        return jet.hess(a, r, s) * g(b) + G(a, r) * G(b, s) + G(a, s) * G(b, r) + g(a) * jet.hess(b, r, s);
    };

    for (Eigen::Index a = 0; a < m; ++a) {
        const Eigen::Index l = Lm + a;
        for (Eigen::Index r = 0; r < p; ++r)
            for (Eigen::Index s = 0; s < p; ++s) aab(l, T + r, T + s, 0, w * jet.hess(a, r, s));
        for (Eigen::Index b = 0; b < m; ++b) {
            for (Eigen::Index c = 0; c < m; ++c) {
                for (Eigen::Index d = 0; d < m; ++d) {
                    double gggg = w * g(a) * g(b) * g(c) * g(d);
                    t(l, K + b, K + c, K + d) -= 6.0 * gggg;
                    aab(l, Lm + c, Lm + d, K + b, gggg);
                }
                for (Eigen::Index r = 0; r < p; ++r) {
                    double v = w * d3(a, b, c, r);
                    aab(l, K + b, K + c, T + r, -2.0 * v);
                    abc(l, K + b, Lm + c, T + r, v);
                }
            }
        }
    }
    for (Eigen::Index r = 0; r < p; ++r) {
        const Eigen::Index l = T + r;
        for (Eigen::Index b = 0; b < m; ++b) {
            for (Eigen::Index s = 0; s < p; ++s) abc(l, 0, Lm + b, T + s, w * jet.hess(b, r, s));
            for (Eigen::Index c = 0; c < m; ++c) {
                for (Eigen::Index d = 0; d < m; ++d) {
                    double v = w * d3(b, c, d, r);
                    t(l, K + b, K + c, K + d) -= 2.0 * v;
                    aab(l, Lm + c, Lm + d, K + b, v);
                    t(l, Lm + b, Lm + c, Lm + d) -= v;
                }
                for (Eigen::Index s = 0; s < p; ++s) {
                    double v = w * e2(b, c, r, s);
                    aab(l, K + b, K + c, T + s, -v);
                    abc(l, K + b, Lm + c, T + s, v);
                    aab(l, Lm + b, Lm + c, T + s, -v);
                }
            }
        }
    }
}

MomentTensors moment_tensors(const MomentModel& model, const WeightedSample& ref) {
    const Eigen::Index m = model.dim_g(), p = model.dim_theta();
    MomentTensors mt{Tensor3<double>(m, m, m), Tensor3<double>(m, m, p), Tensor3<double>(m, p, p)};
    mt.ggg.setZero();
    mt.dgg.setZero();
    mt.d2g.setZero();
    ObsJet jet(m, p);
    const Eigen::VectorXd th = model.theta_star();
    for (Eigen::Index i = 0; i < ref.data.n(); ++i) {
        model.eval(ref.data.obs(i), th, jet);
        double w = ref.w(i);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) {
                for (Eigen::Index c = 0; c < m; ++c) mt.ggg(a, b, c) += w * jet.g(a) * jet.g(b) * jet.g(c);
                for (Eigen::Index r = 0; r < p; ++r)
                    mt.dgg(a, b, r) += w * (jet.G(a, r) * jet.g(b) + jet.g(a) * jet.G(b, r));
            }
            for (Eigen::Index r = 0; r < p; ++r)
                for (Eigen::Index s = 0; s < p; ++s) mt.d2g(a, r, s) += w * jet.hess(a, r, s);
        }
    }
    return mt;
}

namespace {

DerivTensors empty_tensors(TensorKind kind, TensorMethod method, IndexLayout L, int order) {
    const Eigen::Index D = L.dim();
    DerivTensors dt;
    dt.layout = L;
    dt.kind = kind;
    dt.method = method;
    dt.phi1 = Eigen::MatrixXd::Zero(D, D);
    if (order >= 2) {
        dt.phi2 = Tensor3<double>(D, D, D);
        dt.phi2.setZero();
    }
    if (order >= 3) {
        dt.phi3 = Tensor4<double>(D, D, D, D);
        dt.phi3.setZero();
    }
    return dt;
}

void check_order(int order) {
    if (order < 1 || order > 3) throw DimensionError("derivative order must be 1, 2 or 3");
}

}  // namespace

DerivTensors closed_form_tensors(TensorKind kind, const MomentModel& model, const WeightedSample& ref, int order) {
    check_order(order);
    if (order == 3 && kind != TensorKind::Difference)
        throw DimensionError("closed-form third derivatives exist only for the ETEL - EL difference");
    IndexLayout L = model.layout();
    DerivTensors dt = empty_tensors(kind, TensorMethod::ClosedForm, L, order);
    ObsJet jet(L.m, L.p);
    const Eigen::VectorXd th = model.theta_star();
    for (Eigen::Index i = 0; i < ref.data.n(); ++i) {
        model.eval(ref.data.obs(i), th, jet);
        double w = ref.w(i);
        if (kind == TensorKind::Difference) {
            accumulate_phi1(System::ETEL, jet, w, dt.phi1);
            accumulate_phi1(System::EL, jet, -w, dt.phi1);
            if (order >= 2) {
                accumulate_phi2(System::ETEL, jet, w, dt.phi2);
                accumulate_phi2(System::EL, jet, -w, dt.phi2);
            }
            if (order >= 3) accumulate_phi3_difference(jet, w, dt.phi3);
        } else {
            System s = kind == TensorKind::ETEL ? System::ETEL : System::EL;
            accumulate_phi1(s, jet, w, dt.phi1);
            if (order >= 2) accumulate_phi2(s, jet, w, dt.phi2);
        }
    }
    return dt;
}

namespace {

using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// weighted averages over the reference sample of phi (or its Jacobian)
// for ETEL, EL and their per-observation difference, in one pass
class TripleAverage {
public:
    TripleAverage(const MomentModel& model, const WeightedSample& ref) : model_(model), ref_(ref) {
        const Eigen::VectorXd th = model.theta_star();
        jets_.assign(ref.data.n(), ObsJet(model.dim_g(), model.dim_theta()));
        for (Eigen::Index i = 0; i < ref.data.n(); ++i) model.eval(ref.data.obs(i), th, jets_[i]);
        theta_star_ = th;
    }

    std::array<VecL, 3> phi(const BetaVector& beta) const {
        const Eigen::Index D = beta.layout.dim();
        return sweep<VecL, Eigen::VectorXd>(beta, D, 1, [](System s, const ObsJet& j, const BetaVector& b, Eigen::VectorXd& o) {
            phi_into(s, j, b, o);
        });
    }

    std::array<MatL, 3> jacobian(const BetaVector& beta) const {
        const Eigen::Index D = beta.layout.dim();
        return sweep<MatL, Eigen::MatrixXd>(beta, D, D, [](System s, const ObsJet& j, const BetaVector& b, Eigen::MatrixXd& o) {
            phi_jacobian_into(s, j, b, o);
        });
    }

private:
    // block sums in double flushed into extended precision; per-observation
    // rounding then averages out over the sample
    template <class Acc, class Work, class F>
    std::array<Acc, 3> sweep(const BetaVector& beta, Eigen::Index rows, Eigen::Index cols, F f) const {
        std::array<Acc, 3> acc{Acc::Zero(rows, cols), Acc::Zero(rows, cols), Acc::Zero(rows, cols)};
        std::array<Work, 3> blk{Work::Zero(rows, cols), Work::Zero(rows, cols), Work::Zero(rows, cols)};
        Work a(rows, cols), b(rows, cols);
        const Eigen::VectorXd th = beta.theta();
        const bool at_star = th == theta_star_;
        ObsJet jet(beta.layout.m, beta.layout.p);
        const Eigen::Index n = ref_.data.n();
        for (Eigen::Index i = 0; i < n; ++i) {
            const ObsJet* jp = &jets_[i];
            if (!at_star) {
                model_.eval(ref_.data.obs(i), th, jet);
                jp = &jet;
            }
            f(System::ETEL, *jp, beta, a);
            f(System::EL, *jp, beta, b);
            double w = ref_.w(i);
            blk[0] += w * a;
            blk[1] += w * b;
            blk[2] += w * (a - b);
            if ((i & 63) == 63 || i == n - 1) {
                for (int s = 0; s < 3; ++s) {
                    acc[s] += blk[s].template cast<long double>();
                    blk[s].setZero();
                }
            }
        }
        return acc;
    }

    const MomentModel& model_;
    const WeightedSample& ref_;
    std::vector<ObsJet> jets_;
    Eigen::VectorXd theta_star_;
};

BetaVector shifted(const BetaVector& b, Eigen::Index j, double hj, Eigen::Index k = -1, double hk = 0.0) {
    BetaVector s = b;
    s.values(j) += hj;
    if (k >= 0) s.values(k) += hk;
    return s;
}

// Richardson tableau for estimates at steps h, h/2, h/4, ... with even-power errors
MatL extrapolate(std::vector<MatL> d) {
    for (std::size_t k = 1; k < d.size(); ++k) {
        long double f = std::pow(4.0L, static_cast<long double>(k));
        for (std::size_t i = d.size() - 1; i >= k; --i) d[i] = (f * d[i] - d[i - 1]) / (f - 1.0L);
    }
    return d.back();
}

}  // namespace

FdTensorSet finite_difference_tensors(const MomentModel& model, const WeightedSample& ref, int order,
                                      const FdOptions& opt) {
    check_order(order);
    IndexLayout L = model.layout();
    const Eigen::Index D = L.dim();
    const BetaVector star = BetaVector::at_theta(L, model.theta_star());
    TripleAverage avg(model, ref);
    FdTensorSet out{empty_tensors(TensorKind::ETEL, TensorMethod::FiniteDifference, L, order),
                    empty_tensors(TensorKind::EL, TensorMethod::FiniteDifference, L, order),
                    empty_tensors(TensorKind::Difference, TensorMethod::FiniteDifference, L, order)};
    DerivTensors* dst[3] = {&out.etel, &out.el, &out.diff};
    auto scale = [&](Eigen::Index j) { return 1.0 + std::abs(star.values(j)); };
    const int levels = opt.richardson + 1;

    for (Eigen::Index j = 0; j < D; ++j) {
        double h = opt.h1 * scale(j);
        auto fp = avg.phi(shifted(star, j, h)), fm = avg.phi(shifted(star, j, -h));
        for (int s = 0; s < 3; ++s) dst[s]->phi1.col(j) = ((fp[s] - fm[s]) / (2.0L * h)).cast<double>();
    }
    if (order < 2) return out;

    // d J(l, j) / d beta_k
    for (Eigen::Index k = 0; k < D; ++k) {
        std::array<std::vector<MatL>, 3> est;
        for (int level = 0; level < levels; ++level) {
            double h = opt.h2 * scale(k) / std::pow(2.0, level);
            auto jp = avg.jacobian(shifted(star, k, h)), jm = avg.jacobian(shifted(star, k, -h));
            for (int s = 0; s < 3; ++s) est[s].push_back((jp[s] - jm[s]) / (2.0L * h));
        }
        for (int s = 0; s < 3; ++s) {
            MatL r = extrapolate(est[s]);
            for (Eigen::Index l = 0; l < D; ++l)
                for (Eigen::Index j = 0; j < D; ++j) dst[s]->phi2(l, j, k) = static_cast<double>(r(l, j));
        }
    }
    if (order < 3) return out;

    // d2 J(l, j) / d beta_k d beta_h
    auto j0 = avg.jacobian(star);
    for (Eigen::Index k = 0; k < D; ++k) {
        for (Eigen::Index h = k; h < D; ++h) {
            std::array<std::vector<MatL>, 3> est;
            for (int level = 0; level < levels; ++level) {
                double div = std::pow(2.0, level);
                long double hk = opt.h3 * scale(k) / div, hh = opt.h3 * scale(h) / div;
                if (k == h) {
                    auto jp = avg.jacobian(shifted(star, k, hk)), jm = avg.jacobian(shifted(star, k, -hk));
                    for (int s = 0; s < 3; ++s) est[s].push_back((jp[s] - 2.0L * j0[s] + jm[s]) / (hk * hk));
                } else {
                    auto pp = avg.jacobian(shifted(star, k, hk, h, hh));
                    auto pm = avg.jacobian(shifted(star, k, hk, h, -hh));
                    auto mp = avg.jacobian(shifted(star, k, -hk, h, hh));
                    auto mm = avg.jacobian(shifted(star, k, -hk, h, -hh));
                    for (int s = 0; s < 3; ++s) est[s].push_back((pp[s] - pm[s] - mp[s] + mm[s]) / (4.0L * hk * hh));
                }
            }
            for (int s = 0; s < 3; ++s) {
                MatL r = extrapolate(est[s]);
                for (Eigen::Index l = 0; l < D; ++l)
                    for (Eigen::Index j = 0; j < D; ++j) {
                        dst[s]->phi3(l, j, k, h) = static_cast<double>(r(l, j));
                        dst[s]->phi3(l, j, h, k) = static_cast<double>(r(l, j));
                    }
            }
        }
    }
    return out;
}

DerivTensors population_tensors(System sys, const MomentModel& model, const WeightedSample& ref, int order,
                                TensorMethod method) {
    if (method == TensorMethod::ClosedForm) return closed_form_tensors(kind_of(sys), model, ref, order);
    FdTensorSet fd = finite_difference_tensors(model, ref, order);
    return sys == System::ETEL ? fd.etel : fd.el;
}

Population make_population(const MomentModel& model, Eigen::Index n_ref, std::uint64_t seed) {
    Population pop;
    pop.model = &model;
    pop.ref = reference_sample(model, n_ref, seed);
    pop.moments = population_moments(model, pop.ref);
    pop.proj = projection_set(pop.moments);
    pop.phi = phi_system(pop.moments, pop.proj);
    pop.mt = moment_tensors(model, pop.ref);
    pop.etel = closed_form_tensors(TensorKind::ETEL, model, pop.ref, 2);
    pop.el = closed_form_tensors(TensorKind::EL, model, pop.ref, 2);
    pop.diff = closed_form_tensors(TensorKind::Difference, model, pop.ref, 3);
    return pop;
}

SampleStats sample_stats(const Population& pop, const Dataset& data, bool with_phi2) {
    const MomentModel& model = *pop.model;
    const IndexLayout L = pop.layout();
    const Eigen::Index m = L.m, p = L.p, D = L.dim(), n = data.n();
    if (data.dim() != model.dim_x()) throw DimensionError("dataset dimension does not match " + model.name());
    const double rn = std::sqrt(static_cast<double>(n));
    const double w = 1.0 / rn;
    SampleStats ss;
    ss.n = n;
    ss.g_bar = Eigen::VectorXd::Zero(m);
    ss.G_bar = Eigen::MatrixXd::Zero(m, p);
    ss.Omega_bar = Eigen::MatrixXd::Zero(m, m);
    ss.phi0_bar = Eigen::VectorXd::Zero(D);
    for (int s = 0; s < 2; ++s) {
        ss.phi1_bar[s] = Eigen::MatrixXd::Zero(D, D);
        if (with_phi2) {
            ss.phi2_bar[s] = Tensor3<double>(D, D, D);
            ss.phi2_bar[s].setZero();
        }
    }
    const BetaVector star = BetaVector::at_theta(L, model.theta_star());
    ObsJet jet(m, p);
    Eigen::VectorXd phi(D);
    for (Eigen::Index i = 0; i < n; ++i) {
        model.eval(data.obs(i), star.theta(), jet);
        ss.g_bar += w * jet.g;
        ss.G_bar += w * jet.G;
        ss.Omega_bar.noalias() += w * jet.g * jet.g.transpose();
        phi_into(System::ETEL, jet, star, phi);
        ss.phi0_bar += w * phi;
        for (int s = 0; s < 2; ++s) {
            accumulate_phi1(static_cast<System>(s), jet, w, ss.phi1_bar[s]);
            if (with_phi2) accumulate_phi2(static_cast<System>(s), jet, w, ss.phi2_bar[s]);
        }
    }
    ss.G_bar -= rn * pop.moments.G;
    ss.Omega_bar -= rn * pop.moments.Omega;
    for (int s = 0; s < 2; ++s) {
        const DerivTensors& dt = pop.tensors(static_cast<System>(s));
        ss.phi1_bar[s] -= rn * dt.phi1;
        if (with_phi2) ss.phi2_bar[s] -= rn * dt.phi2;
    }
    return ss;
}

Tensor3<double> left_multiply(const Eigen::MatrixXd& A, const Tensor3<double>& t) {
    Eigen::array<Eigen::IndexPair<int>, 1> dims{Eigen::IndexPair<int>(1, 0)};
    Eigen::TensorMap<const Eigen::Tensor<double, 2>> am(A.data(), A.rows(), A.cols());
    return am.contract(t, dims);
}

Tensor4<double> left_multiply(const Eigen::MatrixXd& A, const Tensor4<double>& t) {
    Eigen::array<Eigen::IndexPair<int>, 1> dims{Eigen::IndexPair<int>(1, 0)};
    Eigen::TensorMap<const Eigen::Tensor<double, 2>> am(A.data(), A.rows(), A.cols());
    return am.contract(t, dims);
}

PsiTensors psi_tensors(const DerivTensors& dt, const Eigen::MatrixXd& phi_inv) {
    PsiTensors ps;
    Eigen::MatrixXd neg = -phi_inv;
    if (dt.phi2.size() > 0) ps.psi2 = left_multiply(neg, dt.phi2);
    if (dt.has_phi3()) ps.psi3 = left_multiply(neg, dt.phi3);
    return ps;
}

}  // namespace gelx
