#include "gelx/dual.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "gelx/errors.hpp"

namespace gelx {

namespace {

void check_finite(const Eigen::MatrixXd& gmat) {
    if (!gmat.allFinite()) throw DomainError("moment matrix has non-finite entries");
    if (gmat.cols() == 0) throw DimensionError("empty moment matrix");
}

struct EtState {
    Eigen::VectorXd w;
    double f = 0.0;
};

EtState et_eval(const Eigen::MatrixXd& gmat, const Eigen::VectorXd& lambda) {
    Eigen::ArrayXd s = (lambda.transpose() * gmat).transpose().array();
    double smax = s.maxCoeff();
    Eigen::ArrayXd e = (s - smax).exp();
    double z = e.sum();
    double n = static_cast<double>(gmat.cols());
    return {(e / z).matrix(), smax + std::log(z / n)};
}

}  // namespace

void check_hull_signs(const Eigen::MatrixXd& gmat) {
    for (Eigen::Index a = 0; a < gmat.rows(); ++a) {
        if ((gmat.row(a).array() > 0.0).all() || (gmat.row(a).array() < 0.0).all())
            throw HullError("origin outside the convex hull of the moment vectors (coordinate " +
                            std::to_string(a + 1) + " has one strict sign)");
    }
}

DualSolution et_inner_solve(const Eigen::MatrixXd& gmat, double tol, int max_iter) {
    check_finite(gmat);
    check_hull_signs(gmat);
    const Eigen::Index m = gmat.rows();
    const double n = static_cast<double>(gmat.cols());
    const double floor = -std::log(n) - 1e-9;

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    EtState st = et_eval(gmat, lambda);
    for (int it = 0; it <= max_iter; ++it) {
        Eigen::VectorXd grad = gmat * st.w;
        double gn = grad.norm();
        if (gn <= tol) {
            return {lambda, st.w, gn, it, st.f};
        }
        if (it == max_iter) break;
        Eigen::MatrixXd hess = gmat * st.w.asDiagonal() * gmat.transpose() - grad * grad.transpose();
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-14 * hess.diagonal().maxCoeff()).all())
            throw HullError("tilting Hessian is singular: moment vectors do not span R^m");
        Eigen::VectorXd dir = -ldlt.solve(grad);
        double slope = grad.dot(dir);
        double step = 1.0;
        EtState trial;
        int halvings = 0;
        for (;; ++halvings) {
            trial = et_eval(gmat, lambda + step * dir);
            if (trial.f <= st.f + 1e-4 * step * slope) break;
            // objective differences at rounding level: fall back to the gradient
            if (-step * slope < 1e-13 * (1.0 + std::abs(st.f)) && (gmat * trial.w).norm() < gn) break;
            if (halvings == 60) {
                // no decrease possible from here: gradient is at rounding level
                if (gn <= 1e3 * tol) return {lambda, st.w, gn, it, st.f};
                throw NonConvergenceError("ET inner solve: line search failed, gradient norm " + std::to_string(gn));
            }
            step *= 0.5;
        }
        lambda += step * dir;
        st = trial;
        if (st.f < floor)
            throw HullError("origin outside the convex hull of the moment vectors (ET dual unbounded)");
    }
    throw NonConvergenceError("ET inner solve did not converge in " + std::to_string(max_iter) +
                              " iterations (origin may lie on the hull boundary)");
}

DualSolution el_inner_solve(const Eigen::MatrixXd& gmat, double tol, int max_iter) {
    check_finite(gmat);
    check_hull_signs(gmat);
    const Eigen::Index m = gmat.rows();
    const double n = static_cast<double>(gmat.cols());

    auto objective = [&](const Eigen::VectorXd& k, double& val) {
        Eigen::ArrayXd d = 1.0 - (k.transpose() * gmat).transpose().array();
        if (!(d > 0.0).all()) return false;
        val = -d.log().sum() / n;
        return true;
    };

    auto classify = [&](const std::string& why) -> DualSolution {
        et_inner_solve(gmat, 1e-8, 200);  // throws HullError when that is the cause
        throw NonConvergenceError("EL inner solve: " + why);
    };

    Eigen::VectorXd kappa = Eigen::VectorXd::Zero(m);
    double obj = 0.0;
    for (int it = 0; it <= max_iter; ++it) {
        Eigen::ArrayXd eps = 1.0 / (1.0 - (kappa.transpose() * gmat).transpose().array());
        Eigen::VectorXd grad = gmat * eps.matrix() / n;
        double gn = grad.norm();
        if (gn <= tol) {
            // gradient also vanishes at infinity when the origin is outside the hull
            if (std::abs(eps.sum() / n - 1.0) > 1e-8) return classify("weights do not sum to one");
            return {kappa, (eps / n).matrix(), gn, it, 0.0};
        }
        if (it == max_iter) break;
        Eigen::MatrixXd hess = gmat * eps.square().matrix().asDiagonal() * gmat.transpose() / n;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 1e-14 * hess.diagonal().maxCoeff()).all())
            throw HullError("EL Hessian is singular: moment vectors do not span R^m");
        Eigen::VectorXd dir = -ldlt.solve(grad);
        double slope = grad.dot(dir);
        double step = 1.0, trial = 0.0;
        int halvings = 0;
        for (;; ++halvings) {
            if (objective(kappa + step * dir, trial)) {
                if (trial <= obj + 1e-4 * step * slope) break;
                if (-step * slope < 1e-13 * (1.0 + std::abs(obj))) {
                    Eigen::ArrayXd te = 1.0 / (1.0 - ((kappa + step * dir).transpose() * gmat).transpose().array());
                    if ((gmat * te.matrix() / n).norm() < gn) break;
                }
            }
            if (halvings == 60) {
                if (gn <= 1e3 * tol) return {kappa, (eps / n).matrix(), gn, it, 0.0};
                return classify("line search failed, gradient norm " + std::to_string(gn));
            }
            step *= 0.5;
        }
        kappa += step * dir;
        obj = trial;
    }
    return classify("no convergence in " + std::to_string(max_iter) + " iterations");
}

}  // namespace gelx
