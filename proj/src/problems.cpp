#include "gark/problems.hpp"

#include <cmath>
#include <numbers>

#include "gark/errors.hpp"

namespace gark {

namespace calvo {

double g(double x) {
    return x <= 2.0 ? (x + 1.0) * (2.0 * x - 21.0 / 4.0) : (3.0 - x) * (x - 23.0 / 4.0);
}

// At the kink the one-sided values 4 and -2 are averaged, which is what a
// symmetric three-point difference centred on x = 2 sees.
double g_second(double x) {
    if (x == 2.0) return 1.0;
    return x < 2.0 ? 4.0 : -2.0;
}

double exact(double t, double x, double y) {
    return (2.0 + std::cos(std::numbers::pi * t)) / 30.0 * g(x) * (y * y - 1.0);
}

double forcing(double t, double x, double y, double nu) {
    const double pi = std::numbers::pi;
    const double s = (2.0 + std::cos(pi * t)) / 30.0;
    const double ds = -pi * std::sin(pi * t) / 30.0;
    const double Y = y * y - 1.0;
    const double u = s * g(x) * Y;
    const double ut = ds * g(x) * Y;
    const double lap = s * (g_second(x) * Y + 2.0 * g(x));
    return ut - nu * lap - u + u * u * u;
}

}  // namespace calvo

namespace bsvd {

double diffusion(double x, double y) {
    double d = 0.0;
    for (double yi : {0.6, 0.75, 0.9}) {
        d += std::exp(-100.0 * ((x - 0.5) * (x - 0.5) + (y - yi) * (y - yi)));
    }
    return 0.1 * d;
}

double reaction(double u) { return 10.0 * (1.0 - u * u) * (u + 0.6); }

double initial(double x, double y) {
    return 2.0 * std::exp(-10.0 * ((x - 0.5) * (x - 0.5) + (y + 0.1) * (y + 0.1))) - 1.0;
}

}  // namespace bsvd

namespace gray_scott {

std::pair<double, double> initial(double x, double y) {
    if (x >= 0.75 && x <= 1.25) {
        const double sx = std::sin(4.0 * std::numbers::pi * x);
        const double sy = std::sin(4.0 * std::numbers::pi * y);
        const double v = 0.25 * sx * sx * sy * sy;
        return {1.0 - 2.0 * v, v};
    }
    return {0.0, 1.0};
}

}  // namespace gray_scott

namespace {

void check_domain(const TensorGrid2D& g, double x0, double x1, double y0, double y1, const char* name) {
    const double tol = 1e-12;
    if (std::abs(g.xs().front() - x0) > tol || std::abs(g.xs().back() - x1) > tol ||
        std::abs(g.ys().front() - y0) > tol || std::abs(g.ys().back() - y1) > tol) {
        throw GridError(std::string(name) + " grid does not cover the problem domain");
    }
}

Vector sample(const TensorGrid2D& g, const std::function<double(double, double)>& fn) {
    Vector v(g.num_unknowns());
    for (Eigen::Index k = 0; k < g.num_unknowns(); ++k) {
        const auto [i, j] = g.unknown_node(k);
        v[k] = fn(g.xs()[i], g.ys()[j]);
    }
    return v;
}

}  // namespace

ProblemInstance make_calvo(const TensorGrid2D& grid, double nu, double t0, double tF) {
    if (!(nu > 0.0)) throw InvalidParameter("calvo diffusion coefficient must be positive");
    check_domain(grid, -1.0, 3.0, -1.0, 1.0, "calvo");
    if (!(grid.bc() == BoundaryCondition::all(BoundaryKind::kDirichletZero))) {
        throw GridError("calvo needs homogeneous Dirichlet boundaries");
    }
    SparseMatrix L = nu * discretize_laplacian(grid);
    std::vector<double> xk(grid.num_unknowns()), yk(grid.num_unknowns());
    for (Eigen::Index k = 0; k < grid.num_unknowns(); ++k) {
        const auto [i, j] = grid.unknown_node(k);
        xk[k] = grid.xs()[i];
        yk[k] = grid.ys()[j];
    }
    auto reaction = [xk, yk, nu](double t, Eigen::Index k, const double* u, double* r) {
        r[0] = u[0] - u[0] * u[0] * u[0] + calvo::forcing(t, xk[k], yk[k], nu);
    };
    auto reaction_jac = [](double, Eigen::Index, const double* u, double* j) {
        j[0] = 1.0 - 3.0 * u[0] * u[0];
    };
    ProblemInstance p;
    p.name = "calvo";
    p.system = std::make_shared<ReactionDiffusionSystem>(1, grid.num_unknowns(), std::move(L),
                                                         reaction, reaction_jac);
    p.grid = grid;
    p.species = 1;
    p.initial = sample(grid, [t0](double x, double y) { return calvo::exact(t0, x, y); });
    p.t0 = t0;
    p.tF = tF;
    p.goal = integral_goal(grid);
    p.exact = [grid](double t) {
        return sample(grid, [t](double x, double y) { return calvo::exact(t, x, y); });
    };
    p.stiff_partition = 0;
    return p;
}

ProblemInstance make_gray_scott(const TensorGrid2D& grid, double f, double k, double d_u,
                                double d_v, double t0, double tF, std::vector<bool> goal_species) {
    if (!(f > 0.0 && k > 0.0 && d_u > 0.0 && d_v > 0.0)) {
        throw InvalidParameter("gray-scott parameters must be positive");
    }
    check_domain(grid, 0.0, 2.0, 0.0, 2.0, "gray_scott");
    const Eigen::Index n = grid.num_unknowns();
    const SparseMatrix L = discretize_laplacian(grid);
    std::vector<Eigen::Triplet<double>> trip;
    for (int outer = 0; outer < L.outerSize(); ++outer) {
        for (SparseMatrix::InnerIterator it(L, outer); it; ++it) {
            trip.emplace_back(it.row(), it.col(), d_u * it.value());
            trip.emplace_back(n + it.row(), n + it.col(), d_v * it.value());
        }
    }
    SparseMatrix D(2 * n, 2 * n);
    D.setFromTriplets(trip.begin(), trip.end());

    auto reaction = [f, k](double, Eigen::Index, const double* y, double* r) {
        const double u = y[0], v = y[1];
        r[0] = -u * v * v + f * (1.0 - u);
        r[1] = u * v * v - (f + k) * v;
    };
    auto reaction_jac = [f, k](double, Eigen::Index, const double* y, double* j) {
        const double u = y[0], v = y[1];
        j[0] = -v * v - f;
        j[1] = -2.0 * u * v;
        j[2] = v * v;
        j[3] = 2.0 * u * v - (f + k);
    };
    ProblemInstance p;
    p.name = "gray_scott";
    p.system = std::make_shared<ReactionDiffusionSystem>(2, n, std::move(D), reaction, reaction_jac);
    p.grid = grid;
    p.species = 2;
    p.initial.resize(2 * n);
    for (Eigen::Index q = 0; q < n; ++q) {
        const auto [i, j] = grid.unknown_node(q);
        const auto [u, v] = gray_scott::initial(grid.xs()[i], grid.ys()[j]);
        p.initial[q] = u;
        p.initial[n + q] = v;
    }
    p.t0 = t0;
    p.tF = tF;
    p.goal = integral_goal(grid, 2, std::move(goal_species));
    p.stiff_partition = 0;
    return p;
}

ProblemInstance make_bsvd(const TensorGrid2D& grid, double t0, double tF) {
    check_domain(grid, 0.0, 1.0, 0.0, 1.0, "bsvd");
    SparseMatrix D = discretize_laplacian(grid, bsvd::diffusion);
    auto reaction = [](double, Eigen::Index, const double* u, double* r) { r[0] = bsvd::reaction(u[0]); };
    auto reaction_jac = [](double, Eigen::Index, const double* u, double* j) {
        const double x = u[0];
        j[0] = 10.0 * ((1.0 - x * x) - 2.0 * x * (x + 0.6));
    };
    ProblemInstance p;
    p.name = "bsvd";
    p.system = std::make_shared<ReactionDiffusionSystem>(1, grid.num_unknowns(), std::move(D),
                                                         reaction, reaction_jac);
    p.grid = grid;
    p.species = 1;
    p.initial = sample(grid, bsvd::initial);
    p.t0 = t0;
    p.tF = tF;
    p.goal = integral_goal(grid);
    p.stiff_partition = 0;
    return p;
}

ProblemInstance make_toy_linear(double t0, double tF) {
    Eigen::Matrix3d A0, A1;
    A0 << -1.0, 0.5, 0.0, 0.5, -1.0, 0.2, 0.0, 0.2, -0.5;
    A1 << -10.0, 2.0, 0.0, 2.0, -10.0, 2.0, 0.0, 2.0, -10.0;
    auto partition = [](const Eigen::Matrix3d& A, const char* name) {
        SparseMatrix S = A.sparseView();
        return FunctionSystem::Partition{
            [A](double, const Vector& y, Vector& out) { out = A * y; },
            [S](double, const Vector&) { return S; }, true, name};
    };
    ProblemInstance p;
    p.name = "toy_linear";
    p.system = std::make_shared<FunctionSystem>(
        3, std::vector<FunctionSystem::Partition>{partition(A0, "nonstiff"), partition(A1, "stiff")});
    p.initial = Vector(3);
    p.initial << 1.0, 0.5, -0.3;
    p.t0 = t0;
    p.tF = tF;
    Vector w(3);
    w << 1.0, 2.0, 3.0;
    p.goal = std::make_shared<LinearGoal>(w);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(A0 + A1);
    const Vector y0 = p.initial;
    p.exact = [eig, y0, t0](double t) -> Vector {
        const Eigen::Vector3d e = (eig.eigenvalues() * (t - t0)).array().exp();
        return eig.eigenvectors() * e.asDiagonal() * eig.eigenvectors().transpose() * y0;
    };
    p.stiff_partition = 1;
    return p;
}

ProblemInstance make_zero(Eigen::Index d, double t0, double tF) {
    auto part = [d](const char* name) {
        return FunctionSystem::Partition{[d](double, const Vector&, Vector& out) { out = Vector::Zero(d); },
                                         [d](double, const Vector&) { return SparseMatrix(d, d); }, true,
                                         name};
    };
    ProblemInstance p;
    p.name = "zero";
    p.system = std::make_shared<FunctionSystem>(
        d, std::vector<FunctionSystem::Partition>{part("explicit"), part("implicit")});
    p.initial = Vector::LinSpaced(d, 1.0, static_cast<double>(d));
    p.t0 = t0;
    p.tF = tF;
    p.goal = std::make_shared<LinearGoal>(Vector::Ones(d));
    const Vector y0 = p.initial;
    p.exact = [y0](double) { return y0; };
    p.stiff_partition = 1;
    return p;
}

// ---------------------------------------------------------------- families

namespace {

struct Defaults {
    int nx, ny;
    double tF;
};

Defaults defaults_for(const std::string& problem) {
    if (problem == "calvo") return {20, 10, 1.5};
    if (problem == "gray_scott") return {10, 10, 50.0};
    if (problem == "bsvd") return {40, 40, 7.0};
    if (problem == "toy_linear" || problem == "zero") return {0, 0, 1.0};
    throw InvalidParameter("unknown problem '" + problem + "'");
}

}  // namespace

ProblemFamily::ProblemFamily(nlohmann::json config) : config_(std::move(config)) {
    problem_ = config_.value("problem", std::string("calvo"));
    const auto d = defaults_for(problem_);
    t0_ = config_.value("t0", 0.0);
    tF_ = config_.value("tF", d.tF);
    if (!(tF_ > t0_)) throw InvalidParameter("problem needs tF > t0");
    if (!config_.contains("grid")) config_["grid"] = {{"nx", d.nx}, {"ny", d.ny}};
    if (!config_.contains("params")) config_["params"] = nlohmann::json::object();
}

bool ProblemFamily::spatial() const noexcept {
    return problem_ == "calvo" || problem_ == "gray_scott" || problem_ == "bsvd";
}

TensorGrid2D ProblemFamily::uniform_grid(int nx, int ny) const {
    if (problem_ == "calvo") {
        return TensorGrid2D::uniform(-1.0, 3.0, nx, -1.0, 1.0, ny,
                                     BoundaryCondition::all(BoundaryKind::kDirichletZero));
    }
    if (problem_ == "gray_scott") {
        return TensorGrid2D::uniform(0.0, 2.0, nx, 0.0, 2.0, ny,
                                     BoundaryCondition::all(BoundaryKind::kNeumannZero));
    }
    if (problem_ == "bsvd") {
        return TensorGrid2D::uniform(0.0, 1.0, nx, 0.0, 1.0, ny,
                                     BoundaryCondition::all(BoundaryKind::kNeumannZero));
    }
    throw InvalidParameter("problem '" + problem_ + "' has no spatial grid");
}

TensorGrid2D ProblemFamily::default_grid() const {
    const auto& g = config_.at("grid");
    return uniform_grid(g.at("nx").get<int>(), g.at("ny").get<int>());
}

ProblemInstance ProblemFamily::instantiate(const TensorGrid2D& grid) const {
    const auto& prm = config_.at("params");
    if (problem_ == "calvo") return make_calvo(grid, prm.value("nu", 0.1), t0_, tF_);
    if (problem_ == "gray_scott") {
        std::vector<bool> mask;
        if (prm.contains("goal_species")) mask = prm["goal_species"].get<std::vector<bool>>();
        return make_gray_scott(grid, prm.value("f", 0.024), prm.value("k", 0.06),
                               prm.value("d_u", 8e-2), prm.value("d_v", 4e-2), t0_, tF_, mask);
    }
    if (problem_ == "bsvd") return make_bsvd(grid, t0_, tF_);
    return instantiate();
}

ProblemInstance ProblemFamily::instantiate() const {
    if (problem_ == "toy_linear") return make_toy_linear(t0_, tF_);
    if (problem_ == "zero") {
        return make_zero(config_.at("params").value("dimension", 4), t0_, tF_);
    }
    return instantiate(default_grid());
}

}  // namespace gark
