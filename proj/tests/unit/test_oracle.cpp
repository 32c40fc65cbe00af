#include <gtest/gtest.h>

#include <algorithm>

#include "gark/adjoint.hpp"
#include "gark/errors.hpp"
#include "gark/oracle.hpp"
#include "gark/problems.hpp"
#include "test_support.hpp"

using namespace gark;
using gark::test::rel_inf;

TEST(DensePropagator, ZeroJacobiansGiveIdentity) {
    const auto s = gark::test::linear_system(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3));
    const auto p = oracle::dense_step_propagator(*s, build_imex22(), 0.0, 0.4, Vector::Ones(3));
    EXPECT_EQ(p.phi, Eigen::MatrixXd::Identity(3, 3));
}

TEST(DensePropagator, ExplicitScalar) {
    const double z = -0.9;
    const auto s = gark::test::scalar_system(z, 0.0);
    const auto p = oracle::dense_step_propagator(*s, build_imex22(), 0.0, 1.0, gark::test::scalar(1.0));
    EXPECT_NEAR(p.phi(0, 0), 1.0 + z + 0.5 * z * z, 1e-14);
}

TEST(DensePropagator, DenseStepAgreesWithIntegrator) {
    const auto rp = oracle::random_split_system(3, 5);
    const GarkTableau t = build_imex22();
    StageSolverConfig tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    tight.max_iterations = 50;
    const Vector a = oracle::dense_step(*rp.system, t, 0.0, 0.05, rp.y0);
    const Vector b = step(*rp.system, t, 0.0, 0.05, rp.y0, tight).y_next;
    EXPECT_LE(rel_inf(a, b), 1e-12);
}

TEST(DensePropagator, DualityOnRandomSystems) {
    const GarkTableau t = build_imex22();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto rp = oracle::random_split_system(seed, 4);
        const double h = 0.05;
        const StepResult fwd = step(*rp.system, t, 0.0, h, rp.y0);
        const auto p = oracle::dense_step_propagator(*rp.system, t, 0.0, h, rp.y0, &fwd.stages.values);
        const Vector lam = Vector::LinSpaced(4, 1.0, -2.0);
        const Vector expected = p.phi.transpose() * lam;
        EXPECT_LE(rel_inf(adjoint_step_mu(*rp.system, t, fwd.stages, h, lam).lambda, expected), 1e-10);
    }
}

TEST(DensePropagator, CapEnforced) {
    const auto s = gark::test::linear_system(Eigen::MatrixXd::Zero(5, 5), Eigen::MatrixXd::Zero(5, 5));
    EXPECT_THROW(oracle::dense_step_propagator(*s, build_imex22(), 0.0, 0.1, Vector::Ones(5), nullptr, 4), Error);
}

TEST(SensitivityMatrix, IdentityAndChain) {
    const auto rp = oracle::random_split_system(9, 4);
    const GarkTableau t = build_imex22();
    const TimeGrid g = TimeGrid::uniform(0.0, 0.3, 6);
    const Eigen::MatrixXd I = oracle::numerical_sensitivity_matrix(*rp.system, t, g, rp.y0, 3, 3);
    EXPECT_EQ(I, Eigen::MatrixXd::Identity(4, 4));
    const Eigen::MatrixXd s61 = oracle::numerical_sensitivity_matrix(*rp.system, t, g, rp.y0, 1, 6);
    const Eigen::MatrixXd s64 = oracle::numerical_sensitivity_matrix(*rp.system, t, g, rp.y0, 4, 6);
    const Eigen::MatrixXd s41 = oracle::numerical_sensitivity_matrix(*rp.system, t, g, rp.y0, 1, 4);
    EXPECT_LE((s64 * s41 - s61).cwiseAbs().maxCoeff(), 1e-13 * s61.cwiseAbs().maxCoeff());
}

TEST(SensitivityMatrix, MatchesSweep) {
    const auto rp = oracle::random_split_system(17, 5);
    const GarkTableau t = build_imex22();
    const TimeGrid g = TimeGrid::uniform(0.0, 0.4, 8);
    StageSolverConfig tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    tight.max_iterations = 50;
    const ForwardTrajectory fwd = integrate(*rp.system, t, g, rp.y0, tight);
    const AdjointTrajectory adj = sweep(*rp.system, t, fwd, *rp.goal);
    const Vector qy = rp.goal->gradient(fwd.final_state());
    for (std::size_t n : {0u, 3u, 7u}) {
        const Eigen::MatrixXd S = oracle::numerical_sensitivity_matrix(*rp.system, t, g, rp.y0, n, 8);
        EXPECT_LE(rel_inf(adj.lambda[n], S.transpose() * qy), 1e-10);
    }
}

TEST(FdSensitivity, LinearProblemMatchesAdjoint) {
    Eigen::MatrixXd a0(2, 2), a1(2, 2);
    a0 << -0.5, 1.0, 0.0, -0.3;
    a1 << -3.0, 0.0, 1.0, -6.0;
    const auto s = gark::test::linear_system(a0, a1);
    const GarkTableau t = build_imex22();
    const TimeGrid g = TimeGrid::uniform(0.0, 1.0, 5);
    const ForwardTrajectory fwd = integrate(*s, t, g, Eigen::Vector2d(1.0, 2.0));
    const LinearGoal goal(Eigen::Vector2d(1.0, 1.0));
    const AdjointTrajectory adj = sweep(*s, t, fwd, goal);
    for (std::size_t n = 0; n < 5; ++n) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            const double fd = oracle::fd_sensitivity(*s, goal, t, g, fwd.state(n), n, j);
            EXPECT_NEAR(fd, adj.lambda[n][j], 1e-9 * std::abs(adj.lambda[n][j]));
        }
    }
}

TEST(FdSensitivity, SmallGrayScott) {
    const ProblemFamily fam(nlohmann::json{{"problem", "gray_scott"}, {"tF", 0.5}, {"grid", {{"nx", 2}, {"ny", 2}}}});
    const ProblemInstance p = fam.instantiate();
    const GarkTableau t = align_with_problem(build_imex22(), p);
    const TimeGrid g = TimeGrid::uniform(0.0, 0.5, 5);
    StageSolverConfig tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-14;
    tight.max_iterations = 50;
    const ForwardTrajectory fwd = integrate(p, t, g, tight);
    const AdjointTrajectory adj = sweep(*p.system, t, fwd, *p.goal);
    for (std::size_t n : {0u, 2u}) {
        for (Eigen::Index j = 0; j < p.system->dimension(); j += 3) {
            const double fd = oracle::fd_sensitivity(*p.system, *p.goal, t, g, fwd.state(n), n, j, 0.0, tight);
            const double scale = std::max(std::abs(adj.lambda[n][j]), adj.lambda[n].lpNorm<Eigen::Infinity>() * 1e-3);
            EXPECT_LE(std::abs(fd - adj.lambda[n][j]) / scale, 1e-5) << "n " << n << " j " << j;
        }
    }
}

TEST(FdSensitivity, EpsilonSweepIsVShaped) {
    const auto rp = oracle::random_split_system(5, 4);
    const GarkTableau t = build_imex22();
    const TimeGrid g = TimeGrid::uniform(0.0, 0.4, 4);
    StageSolverConfig tight;
    tight.rtol = 1e-14;
    tight.atol = 1e-15;
    tight.max_iterations = 50;
    const ForwardTrajectory fwd = integrate(*rp.system, t, g, rp.y0, tight);
    const AdjointTrajectory adj = sweep(*rp.system, t, fwd, *rp.goal);
    std::vector<double> err;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-10, 1e-12}) {
        const double fd = oracle::fd_sensitivity(*rp.system, *rp.goal, t, g, rp.y0, 0, 1, eps, tight);
        err.push_back(std::abs(fd - adj.lambda[0][1]) / std::abs(adj.lambda[0][1]));
    }
    const auto best = std::min_element(err.begin(), err.end());
    EXPECT_LT(*best, 1e-6);
    EXPECT_GT(err.front(), *best);
    EXPECT_GT(err.back(), *best);
}

TEST(RandomSystem, DeterministicPerSeed) {
    const auto a = oracle::random_split_system(123, 6);
    const auto b = oracle::random_split_system(123, 6);
    const auto c = oracle::random_split_system(124, 6);
    EXPECT_EQ(a.y0, b.y0);
    EXPECT_EQ(a.system->evaluate(1, 0.2, a.y0), b.system->evaluate(1, 0.2, b.y0));
    EXPECT_NE(a.y0, c.y0);
    EXPECT_EQ(a.system->num_partitions(), 2);
    EXPECT_FALSE(a.system->is_linear(0));
}
