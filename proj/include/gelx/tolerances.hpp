#pragma once

#include <map>
#include <string>
#include <vector>

namespace gelx {

namespace tol {
inline constexpr double kIdentity = 1e-10;
inline constexpr double kPhiInverse = 1e-10;
inline constexpr double kPsiClosed = 1e-10;
inline constexpr double kClosedForm = 1e-12;
inline constexpr double kFdBacked = 1e-8;
inline constexpr double kTerm3 = 1e-10;
inline constexpr double kFdTensor = 1e-4;
inline constexpr double kSymmetryClosed = 1e-12;
inline constexpr double kSymmetryFd = 1e-4;
inline constexpr double kMcSigmas = 3.0;
inline constexpr double kSlopeLow = -2.0;
inline constexpr double kSlopeHigh = -1.0;
inline constexpr double kSolverResidual = 1e-9;
inline constexpr double kSolverSuccess = 0.99;
}  // namespace tol

// named tolerances used by the suites; overrides must name an existing key
class ToleranceTable {
public:
    ToleranceTable();

    double operator[](const std::string& key) const;
    void set(const std::string& key, double value);
    void apply(const std::map<std::string, double>& overrides);
    std::vector<std::string> keys() const;
    const std::map<std::string, double>& values() const { return values_; }

private:
    std::map<std::string, double> values_;
};

}  // namespace gelx
