#pragma once

#include <Eigen/Core>

namespace gelx {

struct DualSolution {
    Eigen::VectorXd multiplier;  // lambda for ET, kappa for EL
    Eigen::VectorXd weights;     // implied probabilities
    double grad_norm = 0.0;
    int iterations = 0;
    double log_mean_exp = 0.0;   // ET only: log n^-1 sum exp(lambda'g_i)
};

inline constexpr double kInnerTol = 1e-11;
inline constexpr int kInnerMaxIter = 100;

// lambda = argmin log n^-1 sum exp(lambda'g_i); gmat is m x n.
// grad_norm is the norm of sum_i w_i g_i with normalized tilting weights.
DualSolution et_inner_solve(const Eigen::MatrixXd& gmat, double tol = kInnerTol, int max_iter = kInnerMaxIter);

// kappa = argmin -n^-1 sum log(1 - kappa'g_i); weights are 1 / (n (1 - kappa'g_i))
DualSolution el_inner_solve(const Eigen::MatrixXd& gmat, double tol = kInnerTol, int max_iter = kInnerMaxIter);

// cheap necessary check: throws HullError when some coordinate has one strict sign
void check_hull_signs(const Eigen::MatrixXd& gmat);

}  // namespace gelx
