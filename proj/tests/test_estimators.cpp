#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gelx/dual.hpp"
#include "gelx/errors.hpp"
#include "gelx/estimators.hpp"
#include "gelx/rng.hpp"

using namespace gelx;

namespace {

// the stacked vectors written straight from their matrix form
Eigen::VectorXd etel_reference(const Eigen::VectorXd& g, const Eigen::MatrixXd& G, const BetaVector& b) {
    const IndexLayout& L = b.layout;
    double t = std::exp(b.lambda().dot(g)), tau = b.tau();
    Eigen::VectorXd k = b.kappa(), l = b.lambda();
    Eigen::VectorXd out(L.dim());
    out(0) = t - tau;
    out.segment(L.kappa(), L.m) = t * g;
    out.segment(L.lambda(), L.m) = (tau - t) * g + t * g * g.dot(k);
    out.segment(L.theta(), L.p) = t * G.transpose() * k + t * G.transpose() * l * g.dot(k) -
                                  t * G.transpose() * l + tau * G.transpose() * l;
    return out;
}

Eigen::VectorXd el_reference(const Eigen::VectorXd& g, const Eigen::MatrixXd& G, const BetaVector& b) {
    const IndexLayout& L = b.layout;
    double t = std::exp(b.lambda().dot(g)), e = 1.0 / (1.0 - b.kappa().dot(g));
    Eigen::VectorXd out(L.dim());
    out(0) = t - b.tau();
    out.segment(L.kappa(), L.m) = t * g;
    out.segment(L.lambda(), L.m) = e * g - t * g;
    out.segment(L.theta(), L.p) = e * G.transpose() * b.kappa();
    return out;
}

BetaVector random_beta(IndexLayout L, std::uint64_t seed, double scale) {
    Philox4x64 rng(seed);
    Eigen::VectorXd v(L.dim());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = scale * (2.0 * uniform_open(rng) - 1.0);
    v(0) += 1.0;
    return {L, v};
}

// the profiled EL first-order condition via the envelope theorem
double el_profile_slope(const MomentModel& model, const Dataset& d, double th) {
    Eigen::VectorXd t = Eigen::VectorXd::Constant(1, th);
    Eigen::MatrixXd g = moment_matrix(model, d, t);
    DualSolution s = el_inner_solve(g, 1e-14);
    double out = 0.0;
    Eigen::MatrixXd J(model.dim_g(), 1);
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        model.jacobian(d.obs(i), t, J);
        out += s.multiplier.dot(J.col(0)) / (1.0 - s.multiplier.dot(g.col(i)));
    }
    return out / d.n();
}

}  // namespace

TEST_CASE("beta vector blocks round-trip") {
    IndexLayout L(2, 1);
    BetaVector b = BetaVector::at_theta(L, Eigen::VectorXd::Constant(1, 0.7));
    CHECK(b.tau() == 1.0);
    CHECK(b.kappa().norm() == 0.0);
    CHECK(b.lambda().norm() == 0.0);
    CHECK(b.theta()(0) == 0.7);
    b.lambda()(1) = 3.0;
    CHECK(b.values(L.lambda() + 1) == 3.0);
    CHECK_THROWS_AS(BetaVector(L, Eigen::VectorXd::Zero(5)), DimensionError);
}

TEST_CASE("stacked vectors at beta star") {
    auto model = make_model({"MeanVarModel"});
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 2.0);
    BetaVector b = BetaVector::at_theta(model->layout(), Eigen::VectorXd::Constant(1, 1.0));
    Eigen::VectorXd want(6);
    want << 0, 1, 0, 0, 0, 0;
    CHECK((phi_etel(*model, x, b) - want).norm() == 0.0);
    CHECK((phi_el(*model, x, b) - want).norm() == 0.0);
}

TEST_CASE("EL third block off the origin") {
    auto model = make_model({"MeanVarModel"});
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 2.0);
    BetaVector b = BetaVector::at_theta(model->layout(), Eigen::VectorXd::Constant(1, 1.0));
    b.kappa()(0) = 0.1;
    Eigen::VectorXd f = phi_el(*model, x, b);
    CHECK(f(3) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(f(4) == 0.0);
    // G = (-1, -2), so e G'kappa = -0.1 / 0.9
    CHECK(f(5) == doctest::Approx(-1.0 / 9.0).epsilon(1e-14));
    b.kappa()(0) = 1.0;
    CHECK_THROWS_AS(phi_el(*model, x, b), DomainError);
}

TEST_CASE("stacked vectors match the matrix form") {
    for (const char* name : {"MeanVarModel", "SkewModel", "JustIdentModel"}) {
        auto model = make_model({name});
        Dataset d = simulate(*model, 20, 3);
        for (int r = 0; r < 20; ++r) {
            BetaVector b = random_beta(model->layout(), derive_seed(11, 0, r), 0.3);
            Eigen::VectorXd x = d.obs(r);
            Eigen::VectorXd g = eval_g(*model, x, b.theta());
            Eigen::MatrixXd G = g_jacobian(*model, x, b.theta());
            Eigen::VectorXd e = etel_reference(g, G, b);
            CHECK((phi_etel(*model, x, b) - e).cwiseAbs().maxCoeff() <= 1e-14 * (1 + e.cwiseAbs().maxCoeff()));
            if (b.kappa().dot(g) < 1.0) {
                Eigen::VectorXd l = el_reference(g, G, b);
                CHECK((phi_el(*model, x, b) - l).cwiseAbs().maxCoeff() <= 1e-14 * (1 + l.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("blocks one and two agree across systems") {
    auto model = make_model({"SkewModel"});
    Dataset d = simulate(*model, 10, 8);
    BetaVector b = random_beta(model->layout(), 77, 0.2);
    b.kappa().setZero();
    b.lambda().setZero();
    for (Eigen::Index i = 0; i < d.n(); ++i) {
        Eigen::VectorXd diff = phi_etel(*model, d.obs(i), b) - phi_el(*model, d.obs(i), b);
        CHECK(diff.head(3).norm() == 0.0);
    }
}

TEST_CASE("analytic Jacobian matches central differences") {
    auto model = make_model({"SkewModel"});
    Dataset d = simulate(*model, 50, 21);
    for (System sys : {System::ETEL, System::EL}) {
        StackedAverage avg(sys, *model, d);
        for (int r = 0; r < 5; ++r) {
            BetaVector b = random_beta(model->layout(), derive_seed(5, 1, r), 0.05);
            Eigen::MatrixXd J = avg.jacobian(b), F(J.rows(), J.cols());
            for (Eigen::Index j = 0; j < b.values.size(); ++j) {
                const double h = 1e-6;
                BetaVector p = b, m = b;
                p.values(j) += h;
                m.values(j) -= h;
                F.col(j) = (avg.residual(p) - avg.residual(m)) / (2 * h);
            }
            CHECK((J - F).cwiseAbs().maxCoeff() <= 1e-6 * (1 + J.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("inner duals on symmetric data") {
    Eigen::MatrixXd g(1, 4);
    g << -1, 1, -1, 1;
    auto et = et_inner_solve(g);
    auto el = el_inner_solve(g);
    CHECK(std::abs(et.multiplier(0)) <= 1e-12);
    CHECK(std::abs(el.multiplier(0)) <= 1e-12);
    CHECK(et.weights.sum() == doctest::Approx(1.0));
    CHECK(el.weights.minCoeff() > 0.0);
}

TEST_CASE("just-identified stacked solution is the sample mean") {
    auto model = make_model({"JustIdentModel", 0.5});
    Dataset d = simulate(*model, 100, 13);
    double xbar = d.x.row(0).mean();
    for (System sys : {System::ETEL, System::EL}) {
        SolveReport r = solve_stacked(sys, *model, d, Eigen::VectorXd::Constant(1, 0.0));
        REQUIRE(r.converged);
        CHECK(r.beta_hat.tau() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.beta_hat.kappa().norm() <= 1e-12);
        CHECK(r.beta_hat.lambda().norm() <= 1e-12);
        CHECK(r.beta_hat.theta()(0) == doctest::Approx(xbar).epsilon(1e-13));
    }
}

TEST_CASE("over-identified solves converge tightly") {
    auto model = make_model({"MeanVarModel"});
    Dataset d = simulate(*model, 200, 2024);
    Eigen::VectorXd th0 = gmm_estimate(*model, d, model->theta_star());
    for (System sys : {System::ETEL, System::EL}) {
        SolveReport r = solve_stacked(sys, *model, d, th0);
        CHECK(r.converged);
        CHECK(r.residual_norm <= 1e-10);
        CHECK(r.init_strategy == "profile");
        StackedAverage avg(sys, *model, d);
        CHECK(avg.residual(r.beta_hat).head(3).norm() <= 1e-10);
    }
}

TEST_CASE("stacked EL agrees with the nested profile solver") {
    auto model = make_model({"SkewModel"});
    for (int rep = 0; rep < 3; ++rep) {
        Dataset d = simulate(*model, 300, derive_seed(99, 0, rep));
        Eigen::VectorXd th0 = gmm_estimate(*model, d, model->theta_star());
        SolveReport r = solve_stacked(System::EL, *model, d, th0);
        double lo = th0(0) - 0.2, hi = th0(0) + 0.2;
        double flo = el_profile_slope(*model, d, lo);
        REQUIRE(flo * el_profile_slope(*model, d, hi) < 0.0);
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi), fm = el_profile_slope(*model, d, mid);
            if ((fm < 0) == (flo < 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        CHECK(std::abs(r.beta_hat.theta()(0) - 0.5 * (lo + hi)) <= 1e-8);
        // kappa of the stacked EL solution is the inner multiplier
        Eigen::MatrixXd g = moment_matrix(*model, d, r.beta_hat.theta());
        CHECK((el_inner_solve(g).multiplier - r.beta_hat.kappa()).norm() <= 1e-8);
    }
}

TEST_CASE("hull failures surface as errors") {
    auto model = make_model({"MeanVarModel"});
    Dataset d(Eigen::RowVector3d(5.0, 6.0, 7.0));
    for (System sys : {System::ETEL, System::EL})
        CHECK_THROWS_AS(solve_stacked(sys, *model, d, Eigen::VectorXd::Zero(1)), HullError);
}
