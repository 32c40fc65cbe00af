#include <gtest/gtest.h>

#include <random>

#include "gark/errors.hpp"
#include "gark/mesh.hpp"

using namespace gark;

namespace {

TensorGrid2D unit_grid(int nx, int ny, BoundaryKind k = BoundaryKind::kNeumannZero) {
    return TensorGrid2D::uniform(0.0, 1.0, nx, 0.0, 1.0, ny, BoundaryCondition::all(k));
}

Vector sample(const TensorGrid2D& g, double (*f)(double, double)) {
    Vector v(g.num_unknowns());
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        const auto [i, j] = g.unknown_node(k);
        v[k] = f(g.xs()[i], g.ys()[j]);
    }
    return v;
}

}  // namespace

TEST(TimeGrid, HalveSingleInterval) {
    EXPECT_EQ(halve_all_steps(TimeGrid({0.0, 1.0})).nodes(), (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(TimeGrid, HalveUneven) {
    const TimeGrid h = halve_all_steps(TimeGrid({0.0, 0.4, 1.0}));
    const std::vector<double> expected{0.0, 0.2, 0.4, 0.7, 1.0};
    ASSERT_EQ(h.num_steps(), 4u);
    for (std::size_t n = 0; n < expected.size(); ++n) EXPECT_NEAR(h.t(n), expected[n], 1e-15);
}

TEST(TimeGrid, BsvdReferenceSchedule) {
    const TimeGrid g = TimeGrid::with_step(0.0, 4.0, 0.02);
    const TimeGrid h = halve_all_steps(g);
    EXPECT_EQ(g.num_steps(), 200u);
    EXPECT_EQ(h.num_steps(), 400u);
    EXPECT_NEAR(h.max_step(), 0.01, 1e-14);
    const auto idx = embed_time_nodes(g, h);
    for (std::size_t n = 0; n < idx.size(); ++n) EXPECT_EQ(idx[n], 2 * n);
}

TEST(TimeGrid, HalveMarkedSteps) {
    const TimeGrid h = halve_marked_steps(TimeGrid::uniform(0.0, 1.0, 4), {1, 3});
    EXPECT_EQ(h.num_steps(), 6u);
    EXPECT_NEAR(h.t(2), 0.375, 1e-15);
}

TEST(TimeGrid, RejectsNonIncreasing) { EXPECT_THROW(TimeGrid({0.0, 0.0}), GridError); }

TEST(TensorGrid, RefineUniform) {
    const TensorGrid2D g = TensorGrid2D::uniform(0.0, 2.0, 2, 0.0, 1.0, 10, BoundaryCondition{});
    const TensorGrid2D f = refine_uniform(g);
    EXPECT_EQ(f.xs(), (std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0}));
    EXPECT_EQ(f.ny_cells(), 20);
    for (double y : g.ys()) EXPECT_NE(std::find(f.ys().begin(), f.ys().end(), y), f.ys().end());
}

TEST(TensorGrid, RefineUniformTenToTwenty) {
    const TensorGrid2D f = refine_uniform(unit_grid(10, 10));
    EXPECT_EQ(f.nx_cells(), 20);
    EXPECT_EQ(f.ny_cells(), 20);
}

TEST(TensorGrid, DirichletNodesAreNotUnknowns) {
    const TensorGrid2D g = unit_grid(4, 2, BoundaryKind::kDirichletZero);
    EXPECT_EQ(g.num_unknowns(), 3);
    EXPECT_FALSE(g.is_unknown(0, 1));
    EXPECT_TRUE(g.is_unknown(1, 1));
}

TEST(TensorGrid, NodeWeightsIntegrateArea) {
    const std::vector<double> w = refine_marked(unit_grid(3, 5), {{1, 2}}).node_weights();
    double s = 0.0;
    for (double v : w) s += v;
    EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(TensorGrid, RefineMarkedSingleCell) {
    const TensorGrid2D r = refine_marked(unit_grid(4, 4), {{0, 0}});
    EXPECT_EQ(r.nx_cells(), 5);
    EXPECT_EQ(r.ny_cells(), 5);
    EXPECT_DOUBLE_EQ(r.xs()[1], 0.125);
    EXPECT_DOUBLE_EQ(r.ys()[1], 0.125);
}

TEST(TensorGrid, RefineMarkedAllIsUniform) {
    const TensorGrid2D g = unit_grid(3, 2);
    std::set<CellIndex> all;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) all.insert({i, j});
    }
    EXPECT_EQ(refine_marked(g, all), refine_uniform(g));
}

TEST(TensorGrid, RefineMarkedSharedIntervalOnce) {
    const TensorGrid2D r = refine_marked(unit_grid(4, 4), {{1, 0}, {1, 3}});
    EXPECT_EQ(r.nx_cells(), 5);
    EXPECT_EQ(r.ny_cells(), 6);
}

TEST(TensorGrid, RefineMarkedEmptyIsIdentity) {
    const TensorGrid2D g = unit_grid(4, 3);
    EXPECT_EQ(refine_marked(g, {}), g);
}

TEST(TensorGrid, JsonRoundTrip) {
    const TensorGrid2D g = refine_marked(unit_grid(4, 3, BoundaryKind::kDirichletZero), {{2, 1}});
    EXPECT_EQ(grid_from_json(to_json(g)), g);
}

TEST(GridTransfer, ConstantField) {
    const TensorGrid2D c = unit_grid(5, 4);
    const GridTransfer t(c, refine_uniform(c));
    const Vector p = t.project(Vector::Constant(t.fine().num_unknowns(), 3.0));
    EXPECT_EQ(p, Vector::Constant(c.num_unknowns(), 3.0));
}

TEST(GridTransfer, LinearFieldInjected) {
    const TensorGrid2D c = unit_grid(5, 4);
    const GridTransfer t(c, refine_uniform(c));
    const auto fx = [](double x, double) { return x; };
    EXPECT_EQ(t.project(sample(t.fine(), fx)), sample(c, fx));
}

TEST(GridTransfer, InjectionMatchesCoordinates) {
    const TensorGrid2D c = refine_marked(unit_grid(4, 4, BoundaryKind::kDirichletZero), {{1, 2}});
    const TensorGrid2D f = refine_uniform(c);
    const GridTransfer t(c, f);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vector v(f.num_unknowns());
    for (auto& x : v) x = U(rng);
    const Vector p = t.project(v);
    for (Eigen::Index k = 0; k < c.num_unknowns(); ++k) {
        const auto [i, j] = c.unknown_node(k);
        Eigen::Index match = -1;
        for (Eigen::Index m = 0; m < f.num_unknowns(); ++m) {
            const auto [fi, fj] = f.unknown_node(m);
            if (std::abs(f.xs()[fi] - c.xs()[i]) < 1e-12 && std::abs(f.ys()[fj] - c.ys()[j]) < 1e-12) match = m;
        }
        ASSERT_GE(match, 0);
        EXPECT_EQ(p[k], v[match]);
    }
}

TEST(GridTransfer, RoundTripIsIdentity) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (const auto bc : {BoundaryKind::kNeumannZero, BoundaryKind::kDirichletZero}) {
        const TensorGrid2D c = refine_marked(unit_grid(6, 5, bc), {{0, 0}, {4, 3}});
        const GridTransfer t(c, refine_uniform(c));
        Vector v(2 * c.num_unknowns());
        for (auto& x : v) x = U(rng);
        EXPECT_EQ(t.project(t.prolong(v)), v);
    }
}

TEST(GridTransfer, ProlongIsExactForBilinear) {
    const TensorGrid2D c = unit_grid(3, 3);
    const GridTransfer t(c, refine_uniform(c));
    const auto f = [](double x, double y) { return 1.0 + 2.0 * x - y + 0.5 * x * y; };
    EXPECT_LE((t.prolong(sample(c, f)) - sample(t.fine(), f)).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(GridTransfer, MissingNodeRejected) {
    EXPECT_THROW(GridTransfer(unit_grid(4, 4), unit_grid(3, 3)), GridError);
}
