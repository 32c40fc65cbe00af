#include <gtest/gtest.h>

#include <cmath>

#include "gark/errors.hpp"
#include "gark/tableau.hpp"

using namespace gark;

namespace {

const double kGamma = 1.0 - std::sqrt(2.0) / 2.0;

GarkTableau with_explicit_weights(const GarkTableau& t, Eigen::VectorXd bE) {
    std::vector<std::vector<GarkTableau::Matrix>> a{{t.a(0, 0), t.a(0, 1)}, {t.a(1, 0), t.a(1, 1)}};
    return GarkTableau(a, {std::move(bE), t.b(1)}, t.schedule(), t.declared_order(), t.name(),
                       t.declares_internal_consistency(), t.stiff_stage());
}

}  // namespace

TEST(Tableau, Imex22Structure) {
    const GarkTableau t = build_imex22(kGamma, kGamma);
    ASSERT_EQ(t.num_partitions(), 2);
    EXPECT_EQ(t.stages(0), 2);
    EXPECT_EQ(t.declared_order(), 2);
    EXPECT_DOUBLE_EQ(t.a(0, 0, 1, 0), 1.0 / (2.0 * kGamma));
    EXPECT_DOUBLE_EQ(t.a(0, 1, 1, 0), 1.0 / (2.0 * kGamma));
    EXPECT_DOUBLE_EQ(t.a(1, 0, 0, 0), kGamma);
    EXPECT_DOUBLE_EQ(t.a(1, 1, 0, 0), kGamma);
    EXPECT_FALSE(t.is_implicit(0, 0));
    EXPECT_TRUE(t.is_implicit(1, 1));
    const std::vector<StageRef> expected{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
    EXPECT_EQ(t.schedule(), expected);
    ASSERT_TRUE(t.stiff_stage().has_value());
    EXPECT_EQ(*t.stiff_stage(), (StageRef{1, 1}));
}

TEST(Tableau, EqualWeightsWhenAlphaIsGamma) {
    const GarkTableau t = build_imex22(kGamma, kGamma);
    EXPECT_DOUBLE_EQ(t.b(0)(0), 1.0 - kGamma);
    EXPECT_DOUBLE_EQ(t.b(0)(1), kGamma);
    EXPECT_EQ(t.b(0), t.b(1));
}

TEST(Tableau, AlphaHalfGivesUnitCoupling) {
    const GarkTableau t = build_imex22(kGamma, 0.5);
    EXPECT_DOUBLE_EQ(t.a(0, 0, 1, 0), 1.0);
}

TEST(Tableau, SecondOrderCondition) {
    const GarkTableau t = build_imex22(kGamma, kGamma);
    const Eigen::VectorXd c = t.abscissae(0, 0);
    EXPECT_NEAR(t.b(0).dot(c), 0.5, 1e-15);
}

TEST(Tableau, ZeroAlphaRejected) { EXPECT_THROW(build_imex22(kGamma, 0.0), InvalidParameter); }

TEST(Tableau, NonstandardGammaAccepted) {
    const GarkTableau t = build_imex22(0.4, 0.4);
    EXPECT_DOUBLE_EQ(t.a(1, 1, 0, 0), 0.4);
}

TEST(Tableau, AdjointCoefficients) {
    const AdjointTableau adj = adjoint_coefficients(build_imex22(kGamma, kGamma));
    EXPECT_DOUBLE_EQ(adj.bbar(0)(0), 1.0 - kGamma);
    EXPECT_DOUBLE_EQ(adj.bbar(0)(1), kGamma);
    EXPECT_NEAR(adj.abar(0, 0)(0, 1), 0.7071067811865475, 1e-15);
    EXPECT_NEAR(adj.abar(1, 1)(1, 1), kGamma, 1e-15);
}

TEST(Tableau, AdjointScheduleReversed) {
    const GarkTableau t = build_imex22();
    const AdjointTableau adj = adjoint_coefficients(t);
    const std::vector<StageRef> expected{{1, 1}, {0, 1}, {1, 0}, {0, 0}};
    EXPECT_EQ(adj.schedule(), expected);
}

TEST(Tableau, AdjointTransformIsInvolution) {
    const GarkTableau t = build_imex22(kGamma, 0.3);
    const AdjointTableau twice = adjoint_coefficients(adjoint_coefficients(t).coefficients());
    for (int q = 0; q < 2; ++q) {
        for (int m = 0; m < 2; ++m) {
            EXPECT_LE((twice.abar(q, m) - t.a(q, m)).cwiseAbs().maxCoeff(), 1e-14);
        }
    }
}

TEST(Tableau, ZeroWeightRejectedWithLocation) {
    const GarkTableau t = with_explicit_weights(build_imex22(), Eigen::Vector2d(1.0, 0.0));
    try {
        adjoint_coefficients(t);
        FAIL() << "expected UnsupportedTableau";
    } catch (const UnsupportedTableau& e) {
        EXPECT_EQ(e.partition(), 0);
        EXPECT_EQ(e.stage(), 1);
    }
}

TEST(Tableau, ValidateDefaultIsClean) {
    const ValidationReport r = validate(build_imex22(kGamma, kGamma));
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(validate(build_imex22(1.0 + std::sqrt(2.0) / 2.0, 0.5)).ok());
}

TEST(Tableau, ValidateReportsOrderOneViolation) {
    const ValidationReport r = validate(with_explicit_weights(build_imex22(), Eigen::Vector2d(0.5, 0.4)));
    ASSERT_TRUE(r.has("order1"));
    for (const auto& issue : r.issues) {
        if (issue.invariant == "order1") EXPECT_NEAR(issue.residual, 0.1, 1e-15);
    }
}

TEST(Tableau, ValidateReportsCyclicSchedule) {
    GarkTableau::Matrix a(2, 2);
    a << 0.0, 0.5, 0.5, 0.0;
    const GarkTableau t({{a}}, {Eigen::Vector2d(0.5, 0.5)}, {{0, 0}, {0, 1}}, 1, "cyclic");
    EXPECT_TRUE(validate(t).has("schedule"));
}

TEST(Tableau, ValidateReportsStiffAccuracy) {
    const GarkTableau t = build_imex22();
    std::vector<std::vector<GarkTableau::Matrix>> a{{t.a(0, 0), t.a(0, 1)}, {t.a(1, 0), t.a(1, 1)}};
    a[1][1](1, 1) += 1e-3;
    const GarkTableau bad(a, {t.b(0), t.b(1)}, t.schedule(), 2, "bad", false, t.stiff_stage());
    EXPECT_TRUE(validate(bad).has("stiff_accuracy"));
}

TEST(Tableau, PermutationSwapsPartitions) {
    const GarkTableau t = build_imex22();
    const GarkTableau p = permute_partitions(t, {1, 0});
    EXPECT_EQ(p.a(0, 1), t.a(1, 0));
    EXPECT_EQ(p.b(0), t.b(1));
    EXPECT_EQ(*p.stiff_stage(), (StageRef{0, 1}));
    EXPECT_TRUE(validate(p).ok());
}

TEST(Tableau, JsonRoundTrip) {
    const GarkTableau t = build_imex22(kGamma, 0.3);
    const GarkTableau r = tableau_from_json(to_json(t));
    for (int q = 0; q < 2; ++q) {
        EXPECT_EQ(r.b(q), t.b(q));
        for (int m = 0; m < 2; ++m) EXPECT_EQ(r.a(q, m), t.a(q, m));
    }
    EXPECT_EQ(r.schedule(), t.schedule());
    EXPECT_EQ(r.stiff_stage(), t.stiff_stage());
}
