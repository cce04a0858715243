#include "gelx/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gelx/errors.hpp"
#include "gelx/rng.hpp"
#include "gelx/serialize.hpp"

namespace gelx {

namespace {

constexpr int kRandomInstances = 100;

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::unique_ptr<MomentModel> build_model(const ExperimentConfig& cfg) {
    return make_model({cfg.model, cfg.theta_star, cfg.df, cfg.sigma});
}

// one sample used for the example payload of a suite
SampleStats example_stats(const Population& pop, const ExperimentConfig& cfg, bool with_phi2) {
    Dataset d = simulate(*pop.model, cfg.sample_n, derive_seed(*cfg.seed, 0, 0));
    return sample_stats(pop, d, with_phi2);
}

void append(std::vector<Check>& out, std::vector<Check> more) {
    for (auto& c : more) out.push_back(std::move(c));
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& s : items) {
        auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("tol-override expects key=val, got '" + s + "'");
        std::string key = s.substr(0, eq), val = s.substr(eq + 1);
        try {
            std::size_t used = 0;
            double v = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
            out[key] = v;
        } catch (const std::exception&) {
            throw ConfigError("tol-override '" + key + "' has non-numeric value '" + val + "'");
        }
    }
    return out;
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"identities", "tensors", "q_equality", "r_terms", "mc_study"};
    return names;
}

int default_reps(const std::string& suite) { return suite == "r_terms" ? 20000 : 1000; }

Eigen::Index default_n_ref(const std::string& suite) {
    return suite == "identities" || suite == "mc_study" ? kReferenceSize : 50000;
}

void validate(const ExperimentConfig& cfg) {
    const auto& sn = suite_names();
    if (std::find(sn.begin(), sn.end(), cfg.suite) == sn.end()) {
        std::string all;
        for (const auto& s : sn) all += (all.empty() ? "" : ", ") + s;
        throw ConfigError("suite: unknown '" + cfg.suite + "', valid suites are " + all);
    }
    const auto mn = builtin_model_names();
    if (std::find(mn.begin(), mn.end(), cfg.model) == mn.end()) throw ConfigError("model: unknown '" + cfg.model + "'");
    if (!cfg.seed) throw ConfigError("seed: required");
    if (cfg.suite == "mc_study" && cfg.n_list.empty()) throw ConfigError("n: must be non-empty for mc_study");
    for (auto n : cfg.n_list)
        if (n < 2) throw ConfigError("n: sample sizes must be at least 2");
    if (cfg.reps && *cfg.reps < 1) throw ConfigError("reps: must be positive");
    if (cfg.n_ref && *cfg.n_ref < 100) throw ConfigError("n-ref: must be at least 100");
    if (cfg.samples < 1) throw ConfigError("samples: must be positive");
    if (cfg.sample_n < 2) throw ConfigError("sample-n: must be at least 2");
    if (cfg.var_reps < 2) throw ConfigError("var-reps: must be at least 2");
    if (cfg.var_n < 2) throw ConfigError("var-n: must be at least 2");
    ToleranceTable t;
    t.apply(cfg.tol_overrides);
}

std::string resolved_config_text(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << "suite = " << cfg.suite << "\n";
    o << "model = " << cfg.model << "\n";
    if (cfg.theta_star) o << "theta-star = " << fmt(*cfg.theta_star) << "\n";
    if (cfg.df) o << "df = " << *cfg.df << "\n";
    if (cfg.sigma) o << "sigma = " << fmt(*cfg.sigma) << "\n";
    o << "seed = " << cfg.seed.value_or(0) << "\n";
    o << "n = [";
    for (std::size_t i = 0; i < cfg.n_list.size(); ++i) o << (i ? "," : "") << cfg.n_list[i];
    o << "]\n";
    o << "reps = " << cfg.reps.value_or(default_reps(cfg.suite)) << "\n";
    o << "n-ref = " << cfg.n_ref.value_or(default_n_ref(cfg.suite)) << "\n";
    o << "samples = " << cfg.samples << "\n";
    o << "sample-n = " << cfg.sample_n << "\n";
    o << "var-reps = " << cfg.var_reps << "\n";
    o << "var-n = " << cfg.var_n << "\n";
    o << "out = \"" << cfg.out_dir << "\"\n";
    if (!cfg.tol_overrides.empty()) {
        o << "tol-override = [";
        bool first = true;
        for (const auto& [k, v] : cfg.tol_overrides) {
            o << (first ? "" : ", ") << '"' << k << '=' << fmt(v) << '"';
            first = false;
        }
        o << "]\n";
    }
    ToleranceTable t;
    t.apply(cfg.tol_overrides);
    for (const auto& [k, v] : t.values()) o << "# tolerance " << k << " = " << fmt(v) << "\n";
    return o.str();
}

SuiteReport run_suite(const ExperimentConfig& cfg) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    ToleranceTable tol;
    tol.apply(cfg.tol_overrides);
    auto model = build_model(cfg);
    const std::uint64_t seed = *cfg.seed;
    const int reps = cfg.reps.value_or(default_reps(cfg.suite));
    const Eigen::Index n_ref = cfg.n_ref.value_or(default_n_ref(cfg.suite));

    SuiteReport rep;
    rep.suite = cfg.suite;
    rep.model = model->name();
    rep.seed = seed;
    nlohmann::json details = nlohmann::json::object();
    try {
        Population pop = make_population(*model, n_ref);
        if (cfg.suite == "identities") {
            append(rep.checks, population_identity_checks(pop, tol));
            append(rep.checks, random_identity_checks(seed, kRandomInstances, tol));
            details["P"] = to_json(pop.proj.P);
            details["H"] = to_json(pop.proj.H);
            details["Sigma"] = to_json(pop.proj.Sigma);
        } else if (cfg.suite == "tensors") {
            FdTensorSet fd = finite_difference_tensors(*model, pop.ref, 3);
            append(rep.checks, tensor_checks(pop, fd, tol));
            rep.tables["tensors/phi2_etel_closed.csv"] = tensor_csv(pop.etel.phi2);
            rep.tables["tensors/phi2_el_closed.csv"] = tensor_csv(pop.el.phi2);
            rep.tables["tensors/phi3_diff_closed.csv"] = tensor_csv(pop.diff.phi3);
            rep.tables["tensors/phi2_etel_fd.csv"] = tensor_csv(fd.etel.phi2);
            rep.tables["tensors/phi2_el_fd.csv"] = tensor_csv(fd.el.phi2);
            rep.tables["tensors/phi3_diff_fd.csv"] = tensor_csv(fd.diff.phi3);
        } else if (cfg.suite == "q_equality") {
            FdTensorSet fd = finite_difference_tensors(*model, pop.ref, 2);
            append(rep.checks, psi_checks(pop, cfg.samples, cfg.sample_n, seed, tol));
            append(rep.checks, q_checks(pop, fd, cfg.samples, cfg.sample_n, seed, tol));
            SampleStats ss = example_stats(pop, cfg, false);
            details["example_etel"] = to_json(q_bar(System::ETEL, ss, pop, pop.etel));
            details["example_el"] = to_json(q_bar(System::EL, ss, pop, pop.el));
        } else if (cfg.suite == "r_terms") {
            FdTensorSet fd = finite_difference_tensors(*model, pop.ref, 3);
            append(rep.checks, r_checks(pop, fd, cfg.samples, cfg.sample_n, seed, tol));
            rep.checks.push_back(xi7_orthogonality_check(pop, reps, cfg.sample_n, seed, tol));
            SampleStats ss = example_stats(pop, cfg, true);
            details["example"] = to_json(r_diff_terms(ss, pop, pop.diff, q_bar(System::ETEL, ss, pop, pop.etel)));
        } else {
            try {
                StudyReport study = expansion_difference_study(*model, cfg.n_list, reps, seed);
                append(rep.checks, study_checks(*model, study, reps, tol));
                rep.tables["tables/study.csv"] = study_csv(study);
                details["study"] = to_json(study);
            } catch (const StudyError& e) {
                Check c = make_check("study solver success rate", "estimator difference scaling", NAN, 1.0,
                                     tol["solver_success"]);
                c.detail = e.what();
                rep.checks.push_back(c);
            }
            rep.checks.push_back(var_psi_check(pop, cfg.var_reps, cfg.var_n, seed, tol));
        }
    } catch (const Error& e) {
        Check c = make_check(cfg.suite + " aborted", "suite execution", NAN, 0.0);
        c.detail = e.what();
        rep.checks.push_back(c);
    }
    rep.passed = !rep.checks.empty();
    for (const auto& c : rep.checks) rep.passed = rep.passed && c.passed;
    rep.tables["tables/checks.csv"] = checks_csv(rep.checks);
    rep.details_json = details.dump();
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::string study_csv(const StudyReport& study) {
    std::ostringstream o;
    o << "n,reps_ok,median_abs_diff,var_gap_estimate\n";
    for (const auto& r : study.rows)
        o << r.n << ',' << r.reps_ok << ',' << fmt(r.median_abs_diff) << ',' << fmt(r.var_gap_estimate) << '\n';
    return o.str();
}

std::string checks_csv(const std::vector<Check>& checks) {
    std::ostringstream o;
    o << "name,anchor,value,lower,tolerance,passed\n";
    for (const auto& c : checks)
        o << '"' << c.name << "\",\"" << c.anchor << "\"," << fmt(c.value) << ',' << fmt(c.lower) << ','
          << fmt(c.tolerance) << ',' << (c.passed ? "true" : "false") << '\n';
    return o.str();
}

std::string report_json(const SuiteReport& report, const ExperimentConfig& cfg) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) checks.push_back(to_json(c));
    ToleranceTable t;
    t.apply(cfg.tol_overrides);
    nlohmann::json j{{"suite", report.suite},
                     {"model", report.model},
                     {"seed", report.seed},
                     {"passed", report.passed},
                     {"reps", cfg.reps.value_or(default_reps(cfg.suite))},
                     {"n_ref", cfg.n_ref.value_or(default_n_ref(cfg.suite))},
                     {"n", cfg.n_list},
                     {"tolerances", t.values()},
                     {"checks", checks},
                     {"details", nlohmann::json::parse(report.details_json)}};
    return j.dump(2) + "\n";
}

void write_outputs(const SuiteReport& report, const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path root(cfg.out_dir);
    auto put = [&](const fs::path& rel, const std::string& text) {
        fs::path p = root / rel;
        fs::create_directories(p.parent_path());
        std::ofstream out(p);
        if (!out) throw ConfigError("cannot write '" + p.string() + "'");
        out << text;
    };
    put("report.json", report_json(report, cfg));
    put("config.resolved.txt", resolved_config_text(cfg));
    put("timing.txt", "runtime_seconds = " + fmt(report.runtime_seconds) + "\n");
    for (const auto& [rel, text] : report.tables) put(rel, text);
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Verification suites for the ETEL and EL stochastic expansions", "gel-expand"};
    app.set_config("--config", "", "flat key = value file; command-line flags override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.add_subcommand("run", "run one suite and write report.json, tables/ and config.resolved.txt")->fallthrough();

    ExperimentConfig cfg;
    std::uint64_t seed = 0;
    int reps = 0;
    Eigen::Index n_ref = 0;
    std::vector<std::string> overrides;
    app.add_option("--suite", cfg.suite, "suite to run")->required()->check(CLI::IsMember(suite_names()));
    app.add_option("--model", cfg.model, "built-in model")->check(CLI::IsMember(builtin_model_names()));
    app.add_option("--seed", seed, "base seed (u64)")->required();
    app.add_option("--n", cfg.n_list, "sample sizes for mc_study")->delimiter(',');
    auto* reps_opt = app.add_option("--reps", reps, "replications (mc_study: per size, r_terms: orthogonality)");
    app.add_option("--out", cfg.out_dir, "output directory");
    app.add_option("--tol-override", overrides, "key=val, repeatable");
    app.add_option("--theta-star", cfg.theta_star, "true parameter");
    app.add_option("--df", cfg.df, "SkewModel degrees of freedom (even)");
    app.add_option("--sigma", cfg.sigma, "JustIdentModel scale");
    auto* nref_opt = app.add_option("--n-ref", n_ref, "reference sample size for the plug-in population");
    app.add_option("--samples", cfg.samples, "samples for the per-sample checks");
    app.add_option("--sample-n", cfg.sample_n, "size of each per-sample dataset");
    app.add_option("--var-reps", cfg.var_reps, "replications for the Var(Psi_bar) check");
    app.add_option("--var-n", cfg.var_n, "sample size for the Var(Psi_bar) check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "gel-expand: " << e.what() << "\n" << "run 'gel-expand --help' for usage\n";
        return 2;
    }

    SuiteReport report;
    try {
        cfg.seed = seed;
        if (*reps_opt) cfg.reps = reps;
        if (*nref_opt) cfg.n_ref = n_ref;
        cfg.tol_overrides = parse_overrides(overrides);
        validate(cfg);
        report = run_suite(cfg);
        write_outputs(report, cfg);
    } catch (const ConfigError& e) {
        std::cerr << "gel-expand: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "gel-expand: " << e.what() << "\n";
        return 2;
    }

    for (const auto& c : report.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << fmt(c.value) << " (tol " << fmt(c.tolerance)
                  << ")" << (c.detail.empty() ? "" : " [" + c.detail + "]") << "\n";
    std::cout << report.suite << " on " << report.model << ": " << (report.passed ? "PASS" : "FAIL") << " in "
              << fmt(report.runtime_seconds) << " s\n";
    return report.passed ? 0 : 1;
}

}  // namespace gelx
