#include "gelx/serialize.hpp"

#include <cmath>

namespace gelx {

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json vec(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
    return a;
}

}  // namespace

nlohmann::json to_json(const Eigen::MatrixXd& m) {
    if (m.cols() == 1) return vec(m.col(0));
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
    return rows;
}

nlohmann::json to_json(const Check& c) {
    nlohmann::json j{{"name", c.name}, {"anchor", c.anchor}, {"value", num(c.value)},
                     {"tolerance", num(c.tolerance)}, {"passed", c.passed}};
    if (std::isfinite(c.lower)) j["lower"] = c.lower;
    if (!c.detail.empty()) j["detail"] = c.detail;
    return j;
}

nlohmann::json to_json(const SolveReport& r) {
    return {{"system", to_string(r.system)},
            {"beta_hat", vec(r.beta_hat.values)},
            {"theta_hat", vec(r.beta_hat.theta())},
            {"residual_norm", num(r.residual_norm)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"distance_from_init", num(r.distance_from_init)},
            {"init_strategy", r.init_strategy}};
}

nlohmann::json to_json(const ExpansionTerms& q) {
    return {{"system", to_string(q.system)},
            {"psi_bar", vec(q.psi_bar)},
            {"psi_bar_closed", vec(q.psi_bar_closed)},
            {"q_bar_generic", vec(q.q_generic)},
            {"q_bar_closed", vec(q.q_closed)},
            {"xi1", vec(q.xi1)},
            {"xi2", vec(q.xi2)},
            {"xi3", vec(q.xi3)},
            {"xi4", vec(q.xi4)}};
}

nlohmann::json to_json(const RDiffReport& r) {
    return {{"term1", vec(r.term1)},
            {"term1_closed", vec(r.term1_closed)},
            {"term2", vec(r.term2)},
            {"term2_cancel", vec(r.term2_cancel)},
            {"term2_xi7", vec(r.term2_xi7)},
            {"term3", vec(r.term3)},
            {"term4_weighted", vec(r.term4_weighted)},
            {"xi_weights",
             {{"both_theta", r.xi_weights.both_theta},
              {"one_theta", r.xi_weights.one_theta},
              {"neither_theta", r.xi_weights.neither_theta}}}};
}

nlohmann::json to_json(const StudyReport& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"n", r.n},
                        {"reps_ok", r.reps_ok},
                        {"reps_failed", r.reps_failed},
                        {"median_abs_diff", num(r.median_abs_diff)},
                        {"var_gap_estimate", num(r.var_gap_estimate)}});
    return {{"rows", rows},
            {"slope", s.slope_defined ? num(s.slope) : nlohmann::json(nullptr)},
            {"slope_defined", s.slope_defined},
            {"all_zero", s.all_zero}};
}

}  // namespace gelx
