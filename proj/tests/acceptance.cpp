// one line per acceptance criterion; exit status 0 iff all pass
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "gelx/checks.hpp"
#include "gelx/errors.hpp"

using namespace gelx;

namespace {

constexpr std::uint64_t kSeed = 42;
constexpr Eigen::Index kFdReference = 50000;

struct Outcome {
    bool passed;
    std::string summary;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string describe(const std::vector<Check>& checks) {
    std::string s;
    for (const auto& c : checks) {
        char buf[256];
        if (std::isfinite(c.lower))
            std::snprintf(buf, sizeof buf, "%s%s %.3g in [%.3g, %.3g]", s.empty() ? "" : "; ", c.name.c_str(),
                          c.value, c.lower, c.tolerance);
        else
            std::snprintf(buf, sizeof buf, "%s%s %.3g/%.3g", s.empty() ? "" : "; ", c.name.c_str(), c.value,
                          c.tolerance);
        s += buf;
    }
    return s;
}

bool all_pass(const std::vector<Check>& checks) {
    bool ok = !checks.empty();
    for (const auto& c : checks) ok = ok && c.passed;
    return ok;
}

std::vector<Check> pick(const std::vector<Check>& checks, std::initializer_list<const char*> names) {
    std::vector<Check> out;
    for (const char* n : names)
        for (const auto& c : checks)
            if (c.name == n) out.push_back(c);
    if (out.size() != names.size()) throw Error("acceptance: missing check");
    return out;
}

const Population& population(const std::string& name, Eigen::Index n_ref) {
    static std::vector<std::unique_ptr<MomentModel>> models;
    static std::vector<std::pair<std::string, std::unique_ptr<Population>>> cache;
    std::string key = name + "/" + std::to_string(n_ref);
    for (auto& [k, p] : cache)
        if (k == key) return *p;
    models.push_back(make_model({name}));
    cache.emplace_back(key, std::make_unique<Population>(make_population(*models.back(), n_ref)));
    return *cache.back().second;
}

const FdTensorSet& skew_fd() {
    static FdTensorSet fd = [] {
        const Population& p = population("SkewModel", kFdReference);
        return finite_difference_tensors(*p.model, p.ref, 3);
    }();
    return fd;
}

}  // namespace

int main() {
    const ToleranceTable tol;
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"projection identities on 100 random instances",
         [&] {
             auto t0 = std::chrono::steady_clock::now();
             auto c = random_identity_checks(kSeed, 100, tol);
             double t = seconds_since(t0);
             auto ids = pick(c, {"random PG = 0", "random P' = P", "random P Omega P = P", "random P Omega H' = 0",
                                 "random H Omega H' = Sigma"});
             ids.push_back(make_check("runtime seconds", "", t, 1.0));
             return Outcome{all_pass(ids), describe(ids)};
         }},
        {"closed-form Phi inverse vs LU inverse",
         [&] {
             auto c = pick(random_identity_checks(kSeed, 100, tol), {"random Phi inverse vs LU inverse"});
             return Outcome{all_pass(c), describe(c)};
         }},
        {"Psi_bar closed form vs -Phi^-1 Phi_bar, 50 samples per model",
         [&] {
             std::vector<Check> c;
             for (const auto& name : builtin_model_names())
                 for (auto ck : psi_checks(population(name, kReferenceSize), 50, 200, kSeed, tol)) {
                     ck.name = name;
                     c.push_back(ck);
                 }
             return Outcome{all_pass(c), describe(c)};
         }},
        {"Q_bar Xi assembly vs generic contraction, FD tensors, SkewModel",
         [&] {
             auto c = pick(q_checks(population("SkewModel", kFdReference), skew_fd(), 50, 200, kSeed, tol),
                           {"Q_bar Xi assembly vs generic, FD tensors"});
             return Outcome{all_pass(c), describe(c)};
         }},
        {"Q_bar ETEL - EL = 0, closed and FD tensors, 50 samples",
         [&] {
             auto c = pick(q_checks(population("SkewModel", kFdReference), skew_fd(), 50, 200, kSeed, tol),
                           {"Q_bar ETEL - EL, closed tensors", "Q_bar ETEL - EL, FD tensors"});
             return Outcome{all_pass(c), describe(c)};
         }},
        {"R_bar difference structure",
         [&] {
             auto c = pick(r_checks(population("SkewModel", kFdReference), skew_fd(), 50, 200, kSeed, tol),
                           {"term1 direct vs closed", "term1 + term2_cancel = 0", "term3 = 0",
                            "term4_weighted = 0, FD tensors"});
             return Outcome{all_pass(c), describe(c)};
         }},
        {"Xi7 orthogonal to H g_bar, MeanVarModel n = 200, 20000 reps",
         [&] {
             const Population& p = population("MeanVarModel", kReferenceSize);
             auto t0 = std::chrono::steady_clock::now();
             std::vector<Check> c{xi7_orthogonality_check(p, 20000, 200, kSeed, tol)};
             c.push_back(make_check("runtime seconds", "", seconds_since(t0), 120.0));
             return Outcome{all_pass(c), describe(c)};
         }},
        {"estimator difference scaling, 1000 reps",
         [&] {
             auto t0 = std::chrono::steady_clock::now();
             auto mv = make_model({"MeanVarModel"});
             auto ji = make_model({"JustIdentModel"});
             std::vector<Eigen::Index> ns{50, 100, 200, 400};
             auto c = pick(study_checks(*mv, expansion_difference_study(*mv, ns, 1000, kSeed), 1000, tol),
                           {"log-log slope of median |theta_ETEL - theta_EL|"});
             auto z = pick(study_checks(*ji, expansion_difference_study(*ji, ns, 1000, kSeed), 1000, tol),
                           {"just-identified |theta_ETEL - theta_EL| = 0"});
             c.push_back(z[0]);
             c.push_back(make_check("runtime seconds", "", seconds_since(t0), 600.0));
             return Outcome{all_pass(c), describe(c)};
         }},
        {"Var(Psi_bar) vs block display, 20000 reps, n = 400",
         [&] {
             std::vector<Check> c{var_psi_check(population("MeanVarModel", kReferenceSize), 20000, 400, kSeed, tol)};
             return Outcome{all_pass(c), describe(c)};
         }},
        {"solver robustness, 1000 MeanVarModel datasets, n = 200",
         [&] {
             auto mv = make_model({"MeanVarModel"});
             auto c = solver_robustness_checks(*mv, 1000, 200, kSeed, tol);
             return Outcome{all_pass(c), describe(c)};
         }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.passed) ++failed;
        std::printf("%s %2zu %s [%s] (%.1f s)\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.summary.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
