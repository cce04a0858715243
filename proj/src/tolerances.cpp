#include "gelx/tolerances.hpp"

#include <cmath>

#include "gelx/errors.hpp"

namespace gelx {

ToleranceTable::ToleranceTable()
    : values_{{"identity", tol::kIdentity},
              {"phi_inverse", tol::kPhiInverse},
              {"psi_closed", tol::kPsiClosed},
              {"q_closed_vs_generic_fd", tol::kFdBacked},
              {"q_closed_vs_generic_closed", tol::kClosedForm},
              {"q_equal_closed", tol::kClosedForm},
              {"q_equal_fd", tol::kFdBacked},
              {"q_decomposition", tol::kClosedForm},
              {"term1_closed", tol::kClosedForm},
              {"term1_cancel", tol::kClosedForm},
              {"term2_split", tol::kClosedForm},
              {"term3", tol::kTerm3},
              {"term4_closed", tol::kClosedForm},
              {"term4_fd", tol::kFdBacked},
              {"fd_tensor", tol::kFdTensor},
              {"symmetry_closed", tol::kSymmetryClosed},
              {"symmetry_fd", tol::kSymmetryFd},
              {"mc_sigmas", tol::kMcSigmas},
              {"slope_low", tol::kSlopeLow},
              {"slope_high", tol::kSlopeHigh},
              {"solver_residual", tol::kSolverResidual},
              {"solver_success", tol::kSolverSuccess}} {}

double ToleranceTable::operator[](const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown tolerance key '" + key + "'");
    return it->second;
}

void ToleranceTable::set(const std::string& key, double value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown tolerance key '" + key + "'");
    if (!std::isfinite(value)) throw ConfigError("tolerance '" + key + "' must be finite");
    it->second = value;
}

void ToleranceTable::apply(const std::map<std::string, double>& overrides) {
    for (const auto& [k, v] : overrides) set(k, v);
}

std::vector<std::string> ToleranceTable::keys() const {
    std::vector<std::string> out;
    for (const auto& kv : values_) out.push_back(kv.first);
    return out;
}

}  // namespace gelx
