#include <gtest/gtest.h>

#include <cmath>

#include "gark/errors.hpp"
#include "gark/integrator.hpp"
#include "gark/problems.hpp"
#include "test_support.hpp"

using namespace gark;
using gark::test::scalar;
using gark::test::scalar_system;

namespace {

const double kGamma = 1.0 - std::sqrt(2.0) / 2.0;

double sdirk_stability(double z) {
    Eigen::Matrix2d A;
    A << kGamma, 0.0, 1.0 - kGamma, kGamma;
    const Eigen::Vector2d b(1.0 - kGamma, kGamma);
    return 1.0 + z * b.dot((Eigen::Matrix2d::Identity() - z * A).lu().solve(Eigen::Vector2d::Ones()));
}

}  // namespace

TEST(Step, ZeroRightHandSide) {
    const auto s = scalar_system(0.0, 0.0);
    const StepResult r = step(*s, build_imex22(), 0.0, 0.3, scalar(2.5));
    EXPECT_EQ(r.y_next[0], 2.5);
}

TEST(Step, ExplicitStabilityPolynomial) {
    for (double z : {-0.7, 0.2, -1.9}) {
        const auto s = scalar_system(z, 0.0);
        const StepResult r = step(*s, build_imex22(kGamma, kGamma), 0.0, 1.0, scalar(1.0));
        EXPECT_NEAR(r.y_next[0], 1.0 + z + 0.5 * z * z, 1e-14);
    }
}

TEST(Step, ImplicitStabilityFunction) {
    for (double z : {-0.5, -4.0, -50.0}) {
        const auto s = scalar_system(0.0, z);
        const StepResult r = step(*s, build_imex22(), 0.0, 1.0, scalar(1.0));
        EXPECT_NEAR(r.y_next[0], sdirk_stability(z), 1e-13);
    }
}

TEST(Step, StiffAccuracy) {
    const auto s = scalar_system(-0.4, -3.0);
    const GarkTableau t = build_imex22();
    const StepResult r = step(*s, t, 0.0, 0.5, scalar(1.0));
    EXPECT_NEAR(r.y_next[0], r.stages.values[1][1][0], 1e-15);
    EXPECT_NEAR(combine_step(t, 0.5, scalar(1.0), r.stages.slopes)[0], r.y_next[0], 1e-15);
    const Vector arg = stage_argument(t, 1, 1, 0.5, scalar(1.0), r.stages.slopes, true);
    EXPECT_NEAR(arg[0], r.y_next[0], 1e-15);
}

TEST(Step, StageTimes) {
    const auto s = scalar_system(-1.0, -1.0);
    const GarkTableau t = build_imex22();
    const StepResult r = step(*s, t, 1.0, 0.2, scalar(1.0));
    EXPECT_DOUBLE_EQ(r.stages.times[0][0], 1.0);
    EXPECT_NEAR(r.stages.times[1][0], 1.0 + kGamma * 0.2, 1e-15);
    EXPECT_NEAR(r.stages.times[1][1], 1.2, 1e-15);
}

TEST(Step, NewtonFailureReported) {
    FunctionSystem::Partition zero{[](double, const Vector& y, Vector& out) { out = Vector::Zero(y.size()); },
                                   [](double, const Vector& y) { return SparseMatrix(y.size(), y.size()); }};
    // y' = y^2 with a wrong Jacobian: Newton cannot converge in one iteration
    FunctionSystem::Partition blowup{[](double, const Vector& y, Vector& out) { out = y.cwiseProduct(y); },
                                     [](double, const Vector& y) { return SparseMatrix(y.size(), y.size()); }};
    const FunctionSystem s(1, {zero, blowup});
    StageSolverConfig cfg;
    cfg.max_iterations = 1;
    try {
        integrate(s, build_imex22(), TimeGrid::uniform(0.0, 1.0, 3), scalar(1.0), cfg);
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.iterations(), 1);
        EXPECT_GT(e.residual_norm(), 0.0);
        EXPECT_EQ(e.step_index(), 0);
    }
}

TEST(Step, InvalidSolverConfig) {
    StageSolverConfig cfg;
    cfg.max_iterations = 0;
    EXPECT_THROW(cfg.check(), InvalidParameter);
}

TEST(Integrate, ZeroProblemIsConstant) {
    const ProblemInstance p = make_zero(5);
    const ForwardTrajectory tr = integrate(p, build_imex22(), TimeGrid::uniform(0.0, 1.0, 7));
    ASSERT_EQ(tr.states.size(), 8u);
    for (const auto& y : tr.states) EXPECT_EQ(y, p.initial);
    EXPECT_EQ(tr.stages.size(), 7u);
}

TEST(Integrate, StorageModes) {
    const auto s = scalar_system(-1.0, -2.0);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 10);
    const GarkStepper stepper(*s, build_imex22());
    const auto full = integrate(stepper, g, scalar(1.0));
    const auto states = integrate(stepper, g, scalar(1.0), StorageMode::kStates);
    const auto ends = integrate(stepper, g, scalar(1.0), StorageMode::kEndpoints);
    EXPECT_EQ(states.states.size(), 11u);
    EXPECT_TRUE(states.stages.empty());
    EXPECT_EQ(ends.states.size(), 2u);
    EXPECT_EQ(ends.final_state(), full.final_state());
    EXPECT_EQ(states.state(4), full.state(4));
}

TEST(Integrate, ObserverSeesEveryStep) {
    const auto s = scalar_system(-1.0, -2.0);
    const GarkStepper stepper(*s, build_imex22());
    std::size_t calls = 0;
    integrate(stepper, TimeGrid::uniform(0.0, 1.0, 6), scalar(1.0), StorageMode::kEndpoints,
              [&](std::size_t n, double, double, const Vector&, const StepResult&) { EXPECT_EQ(n, calls++); });
    EXPECT_EQ(calls, 6u);
}

TEST(Integrate, ScalarSecondOrderAgainstExponential) {
    const double mu0 = -0.8, mu1 = -2.5;
    const auto s = scalar_system(mu0, mu1);
    std::vector<double> err;
    for (int k = 0; k < 5; ++k) {
        const auto tr = integrate(*s, build_imex22(), TimeGrid::uniform(0.0, 1.0, 10u << k), scalar(1.0));
        err.push_back(std::abs(tr.final_state()[0] - std::exp(mu0 + mu1)));
    }
    for (std::size_t k = 2; k < err.size(); ++k) {
        const double order = std::log2(err[k - 1] / err[k]);
        EXPECT_GE(order, 1.8);
        EXPECT_LE(order, 2.2);
    }
}

TEST(Integrate, ToyLinearSecondOrder) {
    const ProblemInstance p = make_toy_linear();
    const GarkTableau t = align_with_problem(build_imex22(), p);
    std::vector<double> err;
    for (int k = 0; k < 4; ++k) {
        const auto tr = integrate(p, t, TimeGrid::uniform(p.t0, p.tF, 8u << k));
        err.push_back((tr.final_state() - p.exact(p.tF)).norm());
    }
    EXPECT_NEAR(std::log2(err[2] / err[3]), 2.0, 0.2);
}

TEST(Integrate, FrozenJacobianMatchesFullNewtonOnLinearProblem) {
    const ProblemFamily fam(nlohmann::json{{"problem", "gray_scott"}, {"grid", {{"nx", 4}, {"ny", 4}}}});
    const ProblemInstance p = fam.instantiate();
    const GarkTableau t = align_with_problem(build_imex22(), p);
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 10);
    StageSolverConfig frozen;
    frozen.jacobian_reuse = JacobianReuse::kFreezePerStep;
    const auto a = integrate(p, t, g);
    const auto b = integrate(p, t, g, frozen);
    EXPECT_LE(gark::test::rel_inf(b.final_state(), a.final_state()), 1e-9);
}

TEST(Integrate, ConjugateGradientMatchesDirect) {
    const ProblemFamily fam(nlohmann::json{{"problem", "calvo"}, {"grid", {{"nx", 8}, {"ny", 4}}}});
    const ProblemInstance p = fam.instantiate();
    const GarkTableau t = align_with_problem(build_imex22(), p);
    StageSolverConfig cg;
    cg.linear_solver = LinearSolverKind::kConjugateGradient;
    const TimeGrid g = TimeGrid::uniform(0.0, 1.5, 10);
    EXPECT_LE(gark::test::rel_inf(integrate(p, t, g, cg).final_state(), integrate(p, t, g).final_state()), 1e-9);
}

TEST(Integrate, FactorizationCacheReused) {
    const ProblemFamily fam(nlohmann::json{{"problem", "calvo"}, {"grid", {{"nx", 8}, {"ny", 4}}}});
    const ProblemInstance p = fam.instantiate();
    auto cache = std::make_shared<FactorizationCache>();
    const GarkStepper stepper(*p.system, align_with_problem(build_imex22(), p), {}, cache);
    integrate(stepper, TimeGrid::uniform(0.0, 1.5, 20), p.initial);
    EXPECT_EQ(cache->size(), 1u);
}

TEST(Integrate, AlignmentPutsImplicitSideOnStiffPartition) {
    const ProblemInstance p = make_calvo(ProblemFamily(nlohmann::json{{"problem", "calvo"}}).default_grid());
    const GarkTableau t = align_with_problem(build_imex22(), p);
    EXPECT_TRUE(t.is_implicit(p.stiff_partition, 0));
    EXPECT_FALSE(t.is_implicit(1 - p.stiff_partition, 0));
}
