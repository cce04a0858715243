#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gelx/errors.hpp"
#include "gelx/expansion.hpp"
#include "gelx/rng.hpp"

using namespace gelx;

namespace {

const Population& skew() {
    static auto model = make_model({"SkewModel"});
    static Population pop = make_population(*model, 20000);
    return pop;
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

SampleStats skew_sample(int r, Eigen::Index n = 200) {
    return sample_stats(skew(), simulate(*skew().model, n, derive_seed(17, 0, r)));
}

}  // namespace

TEST_CASE("Psi_bar closed form") {
    ProjectionSet<double> ps;
    ps.P = Eigen::Matrix2d{{0.0, 0.0}, {0.0, 0.5}};
    ps.H = Eigen::RowVector2d(-1.0, 0.0);
    ps.Sigma = Eigen::MatrixXd::Ones(1, 1);
    ps.Omega_inv = Eigen::Vector2d(1.0, 0.5).asDiagonal();
    CHECK(psi_bar_closed(ps, Eigen::Vector2d::Zero()).norm() == 0.0);
    Eigen::VectorXd want(6);
    want << 0, 0, -0.5, 0, -0.5, 0;
    CHECK((psi_bar_closed(ps, Eigen::Vector2d(0, 1)) - want).norm() == 0.0);
}

TEST_CASE("Psi_bar closed form equals -Phi^-1 Phi_bar") {
    for (int r = 0; r < 10; ++r) {
        SampleStats ss = skew_sample(r);
        CHECK(max_abs(psi_bar_closed(skew().proj, ss.g_bar) - psi_bar_generic(skew().phi, ss.phi0_bar)) <= 1e-10);
    }
}

TEST_CASE("Var(Psi_bar) blocks") {
    const Population& sk = skew();
    IndexLayout L = sk.layout();
    Eigen::MatrixXd V = var_psi_bar(sk.proj);
    CHECK((V.block(L.theta(), L.theta(), L.p, L.p) - sk.proj.Sigma).norm() == 0.0);
    CHECK((V.block(L.kappa(), L.lambda(), L.m, L.m) - sk.proj.P).norm() == 0.0);
    CHECK(V.row(0).norm() == 0.0);

    auto ji = make_model({"JustIdentModel"});
    Population pj = make_population(*ji, 2000);
    Eigen::MatrixXd Vj = var_psi_bar(pj.proj);
    CHECK(std::abs(Vj(1, 1)) <= 1e-15);
    CHECK(std::abs(Vj(2, 2)) <= 1e-15);
}

TEST_CASE("Q_bar closed assembly and generic contraction") {
    const Population& sk = skew();
    IndexLayout L = sk.layout();
    for (int r = 0; r < 10; ++r) {
        SampleStats ss = skew_sample(r);
        ExpansionTerms qe = q_bar(System::ETEL, ss, sk, sk.etel);
        ExpansionTerms ql = q_bar(System::EL, ss, sk, sk.el);
        CHECK(max_abs(ql.q_generic - ql.q_closed) <= 1e-12);
        CHECK(max_abs(qe.q_generic - ql.q_generic) <= 1e-12);
        CHECK(ql.q_generic(0) == doctest::Approx(-0.5 * ss.g_bar.dot(sk.proj.P * ss.g_bar)).epsilon(1e-12));
        Eigen::VectorXd gap = ql.q_generic.segment(L.lambda(), L.m) - ql.q_generic.segment(L.kappa(), L.m);
        CHECK(max_abs(gap - 0.5 * sk.proj.Omega_inv * ql.s_lambda) <= 1e-12);
        CHECK(ql.s_lambda.norm() > 0.0);
    }
}

TEST_CASE("Q_bar difference pieces vanish separately") {
    const Population& sk = skew();
    for (int r = 0; r < 10; ++r) {
        QDiffDecomposition d = q_diff_decomposition(skew_sample(r), sk, sk.diff);
        CHECK(max_abs(d.first_order) <= 1e-12);
        CHECK(max_abs(d.second_order) <= 1e-12);
    }
}

TEST_CASE("Xi weights") {
    IndexLayout L(2, 1);
    XiWeights w;
    CHECK(w(L, 5, 5) == 1.0);
    CHECK(w(L, 5, 2) == 1.5);
    CHECK(w(L, 0, 5) == 1.5);
    CHECK(w(L, 1, 3) == 3.0);
}

TEST_CASE("R_bar difference terms") {
    const Population& sk = skew();
    for (int r = 0; r < 10; ++r) {
        SampleStats ss = skew_sample(r);
        ExpansionTerms q = q_bar(System::ETEL, ss, sk, sk.etel);
        RDiffReport rd = r_diff_terms(ss, sk, sk.diff, q);
        CHECK(max_abs(rd.term1 - rd.term1_closed) <= 1e-12);
        CHECK(max_abs(rd.term1_closed + rd.term2_cancel) <= 1e-12);
        CHECK(max_abs(rd.term3) <= 1e-10);
        CHECK(max_abs(rd.term4_weighted) <= 1e-12);
        CHECK(max_abs(rd.term2_xi7) > 1e-6);
    }
}

TEST_CASE("Xi7 coefficient against an explicit loop") {
    const Population& sk = skew();
    IndexLayout L = sk.layout();
    const Eigen::Index D = L.dim();
    SampleStats ss = skew_sample(3);
    ExpansionTerms q = q_bar(System::ETEL, ss, sk, sk.etel);
    RDiffReport rd = r_diff_terms(ss, sk, sk.diff, q);
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(L.p);
    for (Eigen::Index l = 0; l < L.p; ++l)
        for (Eigen::Index a = 0; a < D; ++a)
            for (Eigen::Index j = 0; j < D; ++j)
                for (Eigen::Index k = 0; k < D; ++k)
                    direct(l) -= sk.phi.Phi_inv(L.theta() + l, a) * sk.diff.phi2(a, j, k) * q.q_generic(j) *
                                 q.psi_bar(k);
    CHECK(max_abs(direct - rd.term2) <= 1e-12);
    CHECK(max_abs(direct - rd.term2_cancel - rd.term2_xi7) <= 1e-12);
    // the opposite sign, or a unit coefficient, misses the direct value
    CHECK(max_abs(direct - rd.term2_cancel + rd.term2_xi7) > 1e-6);
    CHECK(max_abs(direct - rd.term2_cancel - 2.0 * rd.term2_xi7) > 1e-6);
}

TEST_CASE("R_bar terms need third derivatives") {
    const Population& sk = skew();
    SampleStats ss = skew_sample(0);
    ExpansionTerms q = q_bar(System::ETEL, ss, sk, sk.etel);
    CHECK_THROWS_AS(r_diff_terms(ss, sk, sk.etel, q), DimensionError);
}

TEST_CASE("estimator difference study") {
    auto ji = make_model({"JustIdentModel"});
    StudyReport z = expansion_difference_study(*ji, {30, 60}, 50, 4);
    CHECK(z.all_zero);
    CHECK(!z.slope_defined);
    for (const auto& row : z.rows) CHECK(row.median_abs_diff == 0.0);

    auto mv = make_model({"MeanVarModel"});
    StudyReport one = expansion_difference_study(*mv, {50, 100}, 1, 4);
    CHECK(!one.slope_defined);
    CHECK(one.rows.size() == 2);

    StudyReport s = expansion_difference_study(*mv, {50, 100, 200, 400}, 200, 4);
    REQUIRE(s.slope_defined);
    CHECK(s.slope < -1.0);
    CHECK(s.slope > -2.0);
    CHECK(!s.all_zero);

    StudyReport again = expansion_difference_study(*mv, {50, 100, 200, 400}, 200, 4);
    CHECK(again.slope == s.slope);
}

TEST_CASE("study aborts when solvers fail too often") {
    auto mv = make_model({"MeanVarModel"});
    CHECK_THROWS_AS(expansion_difference_study(*mv, {3}, 100, 1), StudyError);
}
