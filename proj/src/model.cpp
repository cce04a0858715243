#include "gelx/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "gelx/dual.hpp"
#include "gelx/errors.hpp"
#include "gelx/rng.hpp"

namespace gelx {

Dataset::Dataset(Eigen::MatrixXd columns) : x(std::move(columns)) {
    if (!x.allFinite()) throw DomainError("dataset has non-finite entries");
}

void MomentModel::hessian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                          Eigen::Ref<Eigen::MatrixXd> out) const {
    const Eigen::Index m = dim_g(), p = dim_theta();
    Eigen::MatrixXd jp(m, p), jm(m, p);
    for (Eigen::Index s = 0; s < p; ++s) {
        double h = std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(theta(s)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(s) += h;
        tm(s) -= h;
        jacobian(x, tp, jp);
        jacobian(x, tm, jm);
        for (Eigen::Index r = 0; r < p; ++r)
            out.col(r * p + s) = (jp.col(r) - jm.col(r)) / (2.0 * h);
    }
}

void MomentModel::eval(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                       ObsJet& out) const {
    g(x, theta, out.g);
    jacobian(x, theta, out.G);
    hessian(x, theta, out.G2);
}

// MeanVarModel

void MeanVarModel::g(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                     Eigen::Ref<Eigen::VectorXd> out) const {
    double d = x(0) - theta(0);
    out(0) = d;
    out(1) = d * d - 1.0;
}

void MeanVarModel::jacobian(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                            Eigen::Ref<Eigen::MatrixXd> out) const {
    out(0, 0) = -1.0;
    out(1, 0) = -2.0 * (x(0) - theta(0));
}

void MeanVarModel::hessian(const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::VectorXd&,
                           Eigen::Ref<Eigen::MatrixXd> out) const {
    out(0, 0) = 0.0;
    out(1, 0) = 2.0;
}

Dataset MeanVarModel::simulate(Eigen::Index n, std::uint64_t seed) const {
    Philox4x64 rng(seed);
    NormalSampler<Philox4x64> normal;
    Eigen::MatrixXd x(1, n);
    for (Eigen::Index i = 0; i < n; ++i) x(0, i) = theta_star_ + normal(rng);
    return Dataset(std::move(x));
}

namespace {

// jittered stratified uniforms (i + U_i) / n
Eigen::ArrayXd stratified_uniforms(Eigen::Index n, std::uint64_t seed) {
    Philox4x64 rng(seed, 1);
    Eigen::ArrayXd u(n);
    for (Eigen::Index i = 0; i < n; ++i)
        u(i) = (static_cast<double>(i) + uniform_open(rng)) / static_cast<double>(n);
    return u;
}

// safeguarded Newton on a monotone tail function
template <class Tail, class Pdf>
double invert_tail(double target, double lo, double hi, double x, Tail tail, Pdf pdf, double sign) {
    for (int it = 0; it < 200; ++it) {
        double r = tail(x) - target;
        if (r == 0.0) return x;
        if (sign * r > 0.0) hi = x; else lo = x;
        double d = sign * pdf(x);
        double nx = d > 0.0 ? x - r / d : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::abs(nx - x) <= 1e-15 * (1.0 + std::abs(x))) return nx;
        x = nx;
    }
    return x;
}

}  // namespace

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("normal_quantile needs u in (0, 1)");
    auto pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
    if (u <= 0.5) {
        auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
        return invert_tail(u, -40.0, 0.0, -1.0, cdf, pdf, 1.0);
    }
    auto sf = [](double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); };
    return invert_tail(1.0 - u, 0.0, 40.0, 1.0, sf, [&](double z) { return pdf(z); }, -1.0);
}

double chi2_even_quantile(double u, int df) {
    if (df <= 0 || df % 2 != 0) throw DomainError("chi2_even_quantile needs a positive even df");
    if (!(u > 0.0 && u < 1.0)) throw DomainError("chi2_even_quantile needs u in (0, 1)");
    const int k = df / 2;
    auto upper = [k](double x) {
        double y = 0.5 * x, term = 1.0, sum = 1.0;
        for (int j = 1; j < k; ++j) sum += (term *= y / j);
        return std::exp(-y) * sum;
    };
    auto lower = [k](double x) {
        double y = 0.5 * x, term = 1.0;
        for (int j = 1; j <= k; ++j) term *= y / j;
        double sum = 0.0;
        for (int j = k; j < k + 400; ++j) {
            sum += term;
            term *= y / (j + 1);
            if (term < 1e-18 * sum) break;
        }
        return std::exp(-y) * sum;
    };
    auto pdf = [k](double x) {
        if (k == 1) return 0.5 * std::exp(-0.5 * x);
        return std::exp((k - 1) * std::log(0.5 * x) - 0.5 * x - std::lgamma(static_cast<double>(k))) * 0.5;
    };
    double hi = 10.0 * df + 2000.0;
    if (u <= 0.5) return invert_tail(u, 0.0, hi, static_cast<double>(df), lower, pdf, 1.0);
    return invert_tail(1.0 - u, 0.0, hi, static_cast<double>(df), upper, pdf, -1.0);
}

Dataset MeanVarModel::reference_draws(Eigen::Index n, std::uint64_t seed) const {
    Eigen::ArrayXd u = stratified_uniforms(n, seed);
    Eigen::MatrixXd x(1, n);
    for (Eigen::Index i = 0; i < n; ++i) x(0, i) = theta_star_ + normal_quantile(u(i));
    return Dataset(std::move(x));
}

std::optional<AnalyticMoments> MeanVarModel::analytic_moments() const {
    AnalyticMoments am;
    am.G = Eigen::MatrixXd(2, 1);
    am.G << -1.0, 0.0;
    am.Omega = Eigen::MatrixXd(2, 2);
    am.Omega << 1.0, 0.0, 0.0, 2.0;
    return am;
}

// SkewModel

SkewModel::SkewModel(double theta_star, int df) : MeanVarModel(theta_star), df_(df) {
    if (df <= 0 || df % 2 != 0) throw DomainError("SkewModel: df must be a positive even integer");
}

Dataset SkewModel::simulate(Eigen::Index n, std::uint64_t seed) const {
    Philox4x64 rng(seed);
    NormalSampler<Philox4x64> normal;
    const double scale = std::sqrt(2.0 * df_);
    Eigen::MatrixXd x(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double c = 0.0;
        for (int j = 0; j < df_; ++j) {
            double z = normal(rng);
            c += z * z;
        }
        x(0, i) = theta_star_ + (c - df_) / scale;
    }
    return Dataset(std::move(x));
}

Dataset SkewModel::reference_draws(Eigen::Index n, std::uint64_t seed) const {
    Eigen::ArrayXd u = stratified_uniforms(n, seed);
    const double scale = std::sqrt(2.0 * df_);
    Eigen::MatrixXd x(1, n);
    for (Eigen::Index i = 0; i < n; ++i) x(0, i) = theta_star_ + (chi2_even_quantile(u(i), df_) - df_) / scale;
    return Dataset(std::move(x));
}

std::optional<AnalyticMoments> SkewModel::analytic_moments() const {
    // standardized chi-square: skewness sqrt(8 / df), kurtosis 3 + 12 / df
    double mu3 = std::sqrt(8.0 / df_), mu4 = 3.0 + 12.0 / df_;
    AnalyticMoments am;
    am.G = Eigen::MatrixXd(2, 1);
    am.G << -1.0, 0.0;
    am.Omega = Eigen::MatrixXd(2, 2);
    am.Omega << 1.0, mu3, mu3, mu4 - 1.0;
    return am;
}

// JustIdentModel

JustIdentModel::JustIdentModel(double theta_star, double sigma) : theta_star_(theta_star), sigma_(sigma) {
    if (!(sigma > 0.0)) throw DomainError("JustIdentModel: sigma must be positive");
}

void JustIdentModel::g(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::VectorXd& theta,
                       Eigen::Ref<Eigen::VectorXd> out) const {
    out(0) = x(0) - theta(0);
}

void JustIdentModel::jacobian(const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::VectorXd&,
                              Eigen::Ref<Eigen::MatrixXd> out) const {
    out(0, 0) = -1.0;
}

void JustIdentModel::hessian(const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::VectorXd&,
                             Eigen::Ref<Eigen::MatrixXd> out) const {
    out(0, 0) = 0.0;
}

Dataset JustIdentModel::simulate(Eigen::Index n, std::uint64_t seed) const {
    Philox4x64 rng(seed);
    NormalSampler<Philox4x64> normal;
    Eigen::MatrixXd x(1, n);
    for (Eigen::Index i = 0; i < n; ++i) x(0, i) = theta_star_ + sigma_ * normal(rng);
    return Dataset(std::move(x));
}

Dataset JustIdentModel::reference_draws(Eigen::Index n, std::uint64_t seed) const {
    Eigen::ArrayXd u = stratified_uniforms(n, seed);
    Eigen::MatrixXd x(1, n);
    for (Eigen::Index i = 0; i < n; ++i) x(0, i) = theta_star_ + sigma_ * normal_quantile(u(i));
    return Dataset(std::move(x));
}

std::optional<AnalyticMoments> JustIdentModel::analytic_moments() const {
    AnalyticMoments am;
    am.G = Eigen::MatrixXd::Constant(1, 1, -1.0);
    am.Omega = Eigen::MatrixXd::Constant(1, 1, sigma_ * sigma_);
    return am;
}

// registry

std::vector<std::string> builtin_model_names() { return {"MeanVarModel", "SkewModel", "JustIdentModel"}; }

std::unique_ptr<MomentModel> make_model(const ModelSpec& spec) {
    double ts = spec.theta_star.value_or(0.0);
    if (spec.name == "MeanVarModel") return std::make_unique<MeanVarModel>(ts);
    if (spec.name == "SkewModel") return std::make_unique<SkewModel>(ts, spec.df.value_or(8));
    if (spec.name == "JustIdentModel") return std::make_unique<JustIdentModel>(ts, spec.sigma.value_or(1.0));
    throw ConfigError("unknown model '" + spec.name + "'");
}

// checked evaluation

namespace {

void check_args(const MomentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    if (x.size() != model.dim_x())
        throw DimensionError(model.name() + ": x has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(model.dim_x()));
    if (theta.size() != model.dim_theta())
        throw DimensionError(model.name() + ": theta has dimension " + std::to_string(theta.size()) +
                             ", expected " + std::to_string(model.dim_theta()));
    if (!x.allFinite() || !theta.allFinite()) throw DomainError(model.name() + ": non-finite argument");
}

}  // namespace

Eigen::VectorXd eval_g(const MomentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    check_args(model, x, theta);
    Eigen::VectorXd out(model.dim_g());
    model.g(x, theta, out);
    return out;
}

Eigen::MatrixXd g_jacobian(const MomentModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& theta) {
    check_args(model, x, theta);
    Eigen::MatrixXd out(model.dim_g(), model.dim_theta());
    model.jacobian(x, theta, out);
    return out;
}

Dataset simulate(const MomentModel& model, Eigen::Index n, std::uint64_t seed) {
    if (n <= 0) throw DimensionError("simulate: n must be positive");
    return model.simulate(n, seed);
}

Eigen::MatrixXd moment_matrix(const MomentModel& model, const Dataset& data, const Eigen::VectorXd& theta) {
    if (data.dim() != model.dim_x()) throw DimensionError(model.name() + ": dataset dimension mismatch");
    Eigen::MatrixXd gm(model.dim_g(), data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i) model.g(data.obs(i), theta, gm.col(i));
    return gm;
}

WeightedSample reference_sample(const MomentModel& model, Eigen::Index n_ref, std::uint64_t seed) {
    if (n_ref <= 0) throw DimensionError("reference_sample: n_ref must be positive");
    WeightedSample ws;
    ws.data = model.reference_draws(n_ref, seed);
    Eigen::MatrixXd gm = moment_matrix(model, ws.data, model.theta_star());
    ws.w = et_inner_solve(gm, 1e-13, 200).weights;
    return ws;
}

// CSV

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    Eigen::Index d = 0;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) {
            if (cell != "x" + std::to_string(d + 1)) throw ConfigError(path + ": bad header field '" + cell + "'");
            ++d;
        }
    }
    if (d == 0) throw ConfigError(path + ": header has no columns");
    std::vector<double> vals;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        Eigen::Index c = 0;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ConfigError(path + ": row " + std::to_string(rows + 1) + " has a non-numeric field");
            }
            ++c;
        }
        if (c != d) throw ConfigError(path + ": row " + std::to_string(rows + 1) + " has " + std::to_string(c) + " fields");
        ++rows;
    }
    Eigen::MatrixXd x = Eigen::Map<Eigen::MatrixXd>(vals.data(), d, rows);
    return Dataset(std::move(x));
}

void write_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(17);
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << (j ? "," : "") << 'x' << j + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) out << (j ? "," : "") << data.x(j, i);
        out << '\n';
    }
}

}  // namespace gelx
