#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/LU>

#include "gelx/checks.hpp"
#include "gelx/errors.hpp"
#include "gelx/projections.hpp"

using namespace gelx;

namespace {

PopulationMoments<double> meanvar_moments() {
    PopulationMoments<double> pm;
    pm.G = Eigen::Vector2d(-1.0, 0.0);
    pm.Omega = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    return pm;
}

}  // namespace

TEST_CASE("analytic moments of the built-in models") {
    auto mv = make_model({"MeanVarModel"})->analytic_moments();
    REQUIRE(mv);
    CHECK((mv->G - Eigen::Vector2d(-1, 0)).norm() == 0.0);
    CHECK((mv->Omega - Eigen::Matrix2d(Eigen::Vector2d(1, 2).asDiagonal())).norm() == 0.0);
    auto ji = make_model({"JustIdentModel", std::nullopt, std::nullopt, 1.5})->analytic_moments();
    REQUIRE(ji);
    CHECK(ji->G(0, 0) == -1.0);
    CHECK(ji->Omega(0, 0) == doctest::Approx(2.25));
}

TEST_CASE("reference moments agree with analytic ones") {
    for (const char* name : {"MeanVarModel", "SkewModel", "JustIdentModel"}) {
        auto model = make_model({name});
        auto a = population_moments(*model, MomentMethod::Analytic);
        auto r = population_moments(*model, MomentMethod::ReferenceSample, 200000);
        CHECK((a.G - r.G).cwiseAbs().maxCoeff() <= 1e-3 * a.G.cwiseAbs().maxCoeff());
        CHECK((a.Omega - r.Omega).cwiseAbs().maxCoeff() <= 1e-3 * a.Omega.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("MeanVar projections") {
    auto ps = projection_set(meanvar_moments());
    Eigen::Matrix2d P;
    P << 0, 0, 0, 0.5;
    CHECK((ps.P - P).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((ps.H - Eigen::RowVector2d(-1, 0)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(ps.Sigma(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("just-identified projections") {
    PopulationMoments<double> pm;
    pm.G = Eigen::Matrix2d{{2.0, 0.5}, {-1.0, 1.0}};
    pm.Omega = Eigen::Matrix2d{{2.0, 0.3}, {0.3, 1.0}};
    auto ps = projection_set(pm);
    Eigen::Matrix2d Gi = pm.G.inverse();
    CHECK(ps.P.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((ps.H - Gi).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((ps.Sigma - Gi * pm.Omega * Gi.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    auto phi = phi_system(pm, ps);
    IndexLayout L(2, 2);
    Eigen::MatrixXd ll = phi.Phi_inv.block(L.lambda(), L.lambda(), 2, 2);
    CHECK((ll + pm.Omega.inverse()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("identities on random instances") {
    for (int i = 0; i < 20; ++i) {
        Eigen::Index m = 2 + i % 4, p = 1 + i % (m - 1);
        auto pm = random_population_moments(1234 + i, m, p);
        auto ps = projection_set(pm);
        CHECK(identity_residuals(pm, ps).max() <= 1e-10);
        auto phi = phi_system(pm, ps);
        CHECK(phi_inverse_residual(phi) <= 1e-10);
        IndexLayout L(m, p);
        CHECK((phi.Phi_inv.block(L.theta(), L.theta(), p, p) + ps.Sigma).norm() == 0.0);
    }
}

TEST_CASE("Phi times its closed-form inverse") {
    auto pm = meanvar_moments();
    auto phi = phi_system(pm, projection_set(pm));
    CHECK(phi.Phi.rows() == 6);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(6, 6);
    CHECK((phi.Phi * phi.Phi_inv - I).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("Phi with p = m uses the full partitioned inverse") {
    auto pm = random_population_moments(99, 3, 3);
    auto phi = phi_system(pm, projection_set(pm));
    CHECK(phi_inverse_residual(phi) <= 1e-10);
}

TEST_CASE("degenerate inputs are rejected") {
    PopulationMoments<double> pm = meanvar_moments();
    pm.G = Eigen::Vector2d::Zero();
    CHECK_THROWS_AS(projection_set(pm), IllConditionedError);
    pm = meanvar_moments();
    pm.Omega(1, 1) = 1e-14;
    CHECK_THROWS_AS(projection_set(pm), IllConditionedError);
    pm = meanvar_moments();
    pm.Omega(0, 1) = 0.5;
    CHECK_THROWS_AS(projection_set(pm), IllConditionedError);
    Eigen::MatrixXd G3(2, 3);
    G3.setRandom();
    CHECK_THROWS_AS(projection_set(G3, Eigen::MatrixXd::Identity(2, 2)), DimensionError);
}

TEST_CASE("long double instantiation") {
    auto pm = random_population_moments(5, 4, 2);
    PopulationMoments<long double> pl{pm.G.cast<long double>(), pm.Omega.cast<long double>()};
    auto ps = projection_set(pl);
    CHECK(identity_residuals(pl, ps).max() <= 1e-16L);
    CHECK((ps.P * pl.Omega * ps.P - ps.P).cwiseAbs().maxCoeff() <= 1e-16L);
}
