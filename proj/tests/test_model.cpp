#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gelx/dual.hpp"
#include "gelx/errors.hpp"
#include "gelx/model.hpp"
#include "gelx/projections.hpp"
#include "gelx/rng.hpp"

using namespace gelx;

TEST_CASE("philox matches numpy stream") {
    // numpy.random.Philox(key=[0x0123456789abcdef, 0xfedcba9876543210],
    //                     counter=[2**64-1, 0, 0, 0]).random_raw(8)
    Philox4x64 a({0x0123456789abcdefULL, 0xfedcba9876543210ULL}, {~0ULL, 0, 0, 0});
    const std::uint64_t want[8] = {0x2163e33e787b1bb7ULL, 0xa202a36bcc5d1269ULL, 0xcd4142c638d0fabaULL,
                                   0x9beb0fb3451467bbULL, 0x9ad206825d7ba305ULL, 0x04f4db986a0077d4ULL,
                                   0x9d234d416293f2c3ULL, 0xb7a21ee2a222f161ULL};
    for (auto w : want) CHECK(a() == w);
    // counter wraps from all ones to zero
    Philox4x64 b({0, 0}, {~0ULL, ~0ULL, ~0ULL, ~0ULL});
    CHECK(b() == 0x16554d9eca36314cULL);
    CHECK(b() == 0xdb20fe9d672d0fdcULL);
    CHECK(b() == 0xd7e772cee186176bULL);
    CHECK(b() == 0x7e68b68aec7ba23bULL);
}

TEST_CASE("derived seeds differ by replication") {
    CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
    CHECK(derive_seed(1, 0, 0) != derive_seed(1, 1, 0));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("quantiles invert the CDF") {
    for (double u : {1e-7, 0.01, 0.3, 0.5, 0.77, 0.999, 1 - 1e-7}) {
        double z = normal_quantile(u);
        double back = u <= 0.5 ? 0.5 * std::erfc(-z / std::sqrt(2.0)) : 1.0 - 0.5 * std::erfc(z / std::sqrt(2.0));
        CHECK(back == doctest::Approx(u).epsilon(1e-12));
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
    // reference values from scipy.stats.chi2.ppf
    // chi2 with 2 df is exponential with mean 2
    CHECK(chi2_even_quantile(0.5, 2) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-13));
    CHECK(chi2_even_quantile(0.95, 8) == doctest::Approx(15.50731305586545).epsilon(1e-12));
    CHECK(chi2_even_quantile(0.01, 8) == doctest::Approx(1.6464973726907703).epsilon(1e-11));
}

TEST_CASE("MeanVar moments and derivatives") {
    MeanVarModel mv;
    Eigen::VectorXd x(1), th(1);
    x << 2.0;
    th << 0.5;
    Eigen::VectorXd g = eval_g(mv, x, th);
    CHECK(g(0) == doctest::Approx(1.5));
    CHECK(g(1) == doctest::Approx(1.25));
    Eigen::MatrixXd G = g_jacobian(mv, x, th);
    CHECK(G(0, 0) == -1.0);
    CHECK(G(1, 0) == doctest::Approx(-3.0));
    Eigen::VectorXd bad(2);
    CHECK_THROWS_AS(eval_g(mv, bad, th), DimensionError);
}

TEST_CASE("jacobians agree with central differences") {
    SkewModel sk;
    Philox4x64 rng(7);
    NormalSampler<Philox4x64> nrm;
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x(1), th(1);
        x << 2.0 * nrm(rng);
        th << nrm(rng);
        Eigen::MatrixXd G = g_jacobian(sk, x, th);
        double h = 1e-6;
        Eigen::VectorXd tp = th, tm = th;
        tp(0) += h;
        tm(0) -= h;
        Eigen::VectorXd fd = (eval_g(sk, x, tp) - eval_g(sk, x, tm)) / (2 * h);
        CHECK((G.col(0) - fd).cwiseAbs().maxCoeff() <= 1e-5);
    }
}

TEST_CASE("simulated means") {
    MeanVarModel mv;
    Dataset d = simulate(mv, 100000, 1);
    CHECK(std::abs(d.x.mean()) <= 5.0 * std::pow(10.0, -2.5));
    for (const char* name : {"MeanVarModel", "SkewModel", "JustIdentModel"}) {
        auto model = make_model({name});
        Dataset big = simulate(*model, 1000000, 3);
        Eigen::VectorXd gbar = moment_matrix(*model, big, model->theta_star()).rowwise().mean();
        auto am = model->analytic_moments();
        double bound = 5.0 / 1000.0 * std::sqrt(am->Omega.norm());
        CHECK(gbar.norm() <= bound);
    }
}

TEST_CASE("same seed gives the same data") {
    SkewModel sk;
    CHECK(simulate(sk, 50, 9).x == simulate(sk, 50, 9).x);
    CHECK(simulate(sk, 50, 9).x != simulate(sk, 50, 10).x);
}

TEST_CASE("reference sample is tilted to exact moment balance") {
    for (const char* name : {"MeanVarModel", "SkewModel", "JustIdentModel"}) {
        auto model = make_model({name});
        WeightedSample ref = reference_sample(*model, 200000);
        CHECK(ref.w.sum() == doctest::Approx(1.0).epsilon(1e-14));
        Eigen::VectorXd eg = moment_matrix(*model, ref.data, model->theta_star()) * ref.w;
        CHECK(eg.norm() <= 1e-13);
        auto pm = population_moments(*model, ref);
        auto am = *model->analytic_moments();
        double rel = (pm.Omega - am.Omega).cwiseAbs().maxCoeff() / am.Omega.cwiseAbs().maxCoeff();
        CHECK(rel <= 1e-3);
        CHECK((pm.G - am.G).cwiseAbs().maxCoeff() <= 1e-3);
    }
}

TEST_CASE("csv round trip") {
    MeanVarModel mv;
    Dataset d = simulate(mv, 20, 4);
    const std::string path = (std::filesystem::temp_directory_path() / "gelx_roundtrip.csv").string();
    write_csv(path, d);
    Dataset e = read_csv(path);
    CHECK(e.x == d.x);
    std::filesystem::remove(path);
}

TEST_CASE("ET inner solve on three points") {
    Eigen::MatrixXd g(1, 3);
    g << -1, -1, 1;
    DualSolution s = et_inner_solve(g);
    CHECK(s.multiplier(0) == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
    CHECK(s.weights(2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("EL inner solve on three points") {
    // -2/(1+k) + 1/(1-k) = 0
    Eigen::MatrixXd g(1, 3);
    g << -1, -1, 1;
    DualSolution s = el_inner_solve(g);
    CHECK(s.multiplier(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(s.weights(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(s.weights(2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("hull failures are reported") {
    Eigen::MatrixXd g(1, 4);
    g << 0.5, 1, 2, 3;
    CHECK_THROWS_AS(et_inner_solve(g), HullError);
    CHECK_THROWS_AS(el_inner_solve(g), HullError);
    // each coordinate changes sign but the origin is still outside
    Eigen::MatrixXd h(2, 3);
    h << 1, -1, 2,
         -1, 1.5, -1;
    CHECK_THROWS_AS(et_inner_solve(h), HullError);
    CHECK_THROWS_AS(el_inner_solve(h), HullError);
}
