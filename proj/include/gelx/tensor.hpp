#pragma once

#include <string>

#include <unsupported/Eigen/CXX11/Tensor>

namespace gelx {

// index order (l, j, k[, h]); l is the equation, the rest are beta coordinates
template <class Scalar>
using Tensor3 = Eigen::Tensor<Scalar, 3>;
template <class Scalar>
using Tensor4 = Eigen::Tensor<Scalar, 4>;

template <class Scalar, int N>
Scalar max_abs(const Eigen::Tensor<Scalar, N>& t) {
    if (t.size() == 0) return Scalar(0);
    Eigen::Tensor<Scalar, 0> r = t.abs().maximum();
    return r();
}

template <class Scalar, int N>
Eigen::Tensor<Scalar, N> zeros_like(const Eigen::Tensor<Scalar, N>& t) {
    Eigen::Tensor<Scalar, N> z(t.dimensions());
    z.setZero();
    return z;
}

// max |T(l, j, k) - T(l, k, j)|
template <class Scalar>
Scalar asymmetry(const Tensor3<Scalar>& t) {
    Eigen::array<Eigen::Index, 3> sw{0, 2, 1};
    Tensor3<Scalar> d = t - t.shuffle(sw);
    return max_abs(d);
}

// max deviation from full symmetry in (j, k, h)
template <class Scalar>
Scalar asymmetry(const Tensor4<Scalar>& t) {
    Scalar worst(0);
    for (auto perm : {Eigen::array<Eigen::Index, 4>{0, 2, 1, 3}, Eigen::array<Eigen::Index, 4>{0, 1, 3, 2},
                      Eigen::array<Eigen::Index, 4>{0, 3, 2, 1}}) {
        Tensor4<Scalar> d = t - t.shuffle(perm);
        worst = std::max(worst, max_abs(d));
    }
    return worst;
}

// nonzero entries only, header "l,j,k[,h],value"
std::string tensor_csv(const Tensor3<double>& t);
std::string tensor_csv(const Tensor4<double>& t);
void write_tensor_csv(const std::string& path, const Tensor3<double>& t);
void write_tensor_csv(const std::string& path, const Tensor4<double>& t);

}  // namespace gelx
