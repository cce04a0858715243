#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gelx/checks.hpp"

namespace gelx {

struct ExperimentConfig {
    std::string suite;
    std::string model = "MeanVarModel";
    std::optional<double> theta_star;
    std::optional<int> df;
    std::optional<double> sigma;
    std::vector<Eigen::Index> n_list{50, 100, 200, 400};
    std::optional<int> reps;  // suite default when unset
    std::optional<std::uint64_t> seed;
    std::map<std::string, double> tol_overrides;
    std::string out_dir = "gel-expand-out";
    std::optional<Eigen::Index> n_ref;  // suite default when unset
    int samples = 50;
    Eigen::Index sample_n = 200;
    int var_reps = 20000;
    Eigen::Index var_n = 400;
};

const std::vector<std::string>& suite_names();
int default_reps(const std::string& suite);
Eigen::Index default_n_ref(const std::string& suite);

// throws ConfigError naming the offending key
void validate(const ExperimentConfig& cfg);
// key = value lines accepted back by --config
std::string resolved_config_text(const ExperimentConfig& cfg);

struct SuiteReport {
    std::string suite;
    std::string model;
    std::uint64_t seed = 0;
    std::vector<Check> checks;
    bool passed = false;
    double runtime_seconds = 0.0;
    std::string details_json = "{}";             // suite-specific payload
    std::map<std::string, std::string> tables;   // relative path -> CSV text
};

SuiteReport run_suite(const ExperimentConfig& cfg);

std::string report_json(const SuiteReport& report, const ExperimentConfig& cfg);
void write_outputs(const SuiteReport& report, const ExperimentConfig& cfg);

std::string study_csv(const StudyReport& study);
std::string checks_csv(const std::vector<Check>& checks);

// gel-expand entry point; 0 pass, 1 check failure, 2 usage or configuration error
int run_cli(int argc, const char* const* argv);

}  // namespace gelx
