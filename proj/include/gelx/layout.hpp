#pragma once

#include <Eigen/Core>

namespace gelx {

enum class System { ETEL, EL };

inline const char* to_string(System s) { return s == System::ETEL ? "etel" : "el"; }

// beta = (tau, kappa, lambda, theta); offsets are zero based
struct IndexLayout {
    Eigen::Index m = 0, p = 0;

    IndexLayout() = default;
    IndexLayout(Eigen::Index m_, Eigen::Index p_) : m(m_), p(p_) {}

    Eigen::Index tau() const { return 0; }
    Eigen::Index kappa() const { return 1; }
    Eigen::Index lambda() const { return 1 + m; }
    Eigen::Index theta() const { return 1 + 2 * m; }
    Eigen::Index dim() const { return 1 + 2 * m + p; }
    bool in_theta(Eigen::Index j) const { return j >= theta(); }
};

}  // namespace gelx
