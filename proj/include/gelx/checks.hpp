#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gelx/derivatives.hpp"
#include "gelx/expansion.hpp"
#include "gelx/tolerances.hpp"

namespace gelx {

// one numeric verification; passes iff lower <= value <= tolerance
struct Check {
    std::string name;
    std::string anchor;
    double value = 0.0;
    double tolerance = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    bool passed = false;
    std::string detail;
};

Check make_check(std::string name, std::string anchor, double value, double tolerance,
                 double lower = -std::numeric_limits<double>::infinity());

// random (G, Omega) with m in {2..5}, p < m, Omega SPD
PopulationMoments<double> random_population_moments(std::uint64_t seed, Eigen::Index m, Eigen::Index p);

std::vector<Check> random_identity_checks(std::uint64_t seed, int count, const ToleranceTable& tol);
std::vector<Check> population_identity_checks(const Population& pop, const ToleranceTable& tol);

std::vector<Check> tensor_checks(const Population& pop, const FdTensorSet& fd, const ToleranceTable& tol);

std::vector<Check> psi_checks(const Population& pop, int samples, Eigen::Index n, std::uint64_t seed,
                              const ToleranceTable& tol);
std::vector<Check> q_checks(const Population& pop, const FdTensorSet& fd, int samples, Eigen::Index n,
                            std::uint64_t seed, const ToleranceTable& tol);
std::vector<Check> r_checks(const Population& pop, const FdTensorSet& fd, int samples, Eigen::Index n,
                            std::uint64_t seed, const ToleranceTable& tol);

// Monte Carlo: correlation of Xi7 with H g_bar, in standard errors
Check xi7_orthogonality_check(const Population& pop, int reps, Eigen::Index n, std::uint64_t seed,
                              const ToleranceTable& tol);
// Monte Carlo: covariance of Psi_bar against the block display, in standard errors
Check var_psi_check(const Population& pop, int reps, Eigen::Index n, std::uint64_t seed, const ToleranceTable& tol);

// slope band, or exact equality for just-identified models, plus solver success
std::vector<Check> study_checks(const MomentModel& model, const StudyReport& study, int reps,
                                const ToleranceTable& tol);

std::vector<Check> solver_robustness_checks(const MomentModel& model, int datasets, Eigen::Index n,
                                            std::uint64_t seed, const ToleranceTable& tol);

}  // namespace gelx
