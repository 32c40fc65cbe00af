#include "gark/oracle.hpp"

#include <cmath>
#include <random>

#include "gark/errors.hpp"

namespace gark::oracle {

namespace {

struct Layout {
    std::vector<std::vector<Eigen::Index>> offset;
    Eigen::Index stages = 0;
};

Layout layout(const GarkTableau& t) {
    Layout L;
    L.offset.resize(t.num_partitions());
    for (int q = 0; q < t.num_partitions(); ++q) {
        for (int i = 0; i < t.stages(q); ++i) L.offset[q].push_back(L.stages++);
    }
    return L;
}

void check_size(const SplitOdeSystem& system, Eigen::Index cap) {
    if (system.dimension() > cap) {
        throw InvalidParameter("dense oracle limited to " + std::to_string(cap) + " unknowns");
    }
}

/// Solves all stage equations at once with a dense Newton iteration.
std::vector<std::vector<Vector>> solve_stages(const SplitOdeSystem& sys, const GarkTableau& t,
                                              double t_n, double h, const Vector& y_n) {
    const Eigen::Index d = sys.dimension();
    const Layout L = layout(t);
    const Eigen::Index S = L.stages;
    Vector Y(S * d);
    for (Eigen::Index s = 0; s < S; ++s) Y.segment(s * d, d) = y_n;

    auto unpack = [&](const Vector& Z) {
        std::vector<std::vector<Vector>> v(t.num_partitions());
        for (int q = 0; q < t.num_partitions(); ++q) {
            for (int i = 0; i < t.stages(q); ++i) v[q].push_back(Z.segment(L.offset[q][i] * d, d));
        }
        return v;
    };

    for (int iter = 0; iter < 60; ++iter) {
        const auto stages = unpack(Y);
        Vector R(S * d);
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S * d, S * d);
        std::vector<std::vector<Vector>> f(t.num_partitions());
        std::vector<std::vector<Eigen::MatrixXd>> J(t.num_partitions());
        for (int m = 0; m < t.num_partitions(); ++m) {
            for (int j = 0; j < t.stages(m); ++j) {
                const double T = t_n + t.stage_time_fraction(m, j) * h;
                f[m].push_back(sys.evaluate(m, T, stages[m][j]));
                J[m].push_back(Eigen::MatrixXd(sys.jacobian(m, T, stages[m][j])));
            }
        }
        for (int q = 0; q < t.num_partitions(); ++q) {
            for (int i = 0; i < t.stages(q); ++i) {
                const Eigen::Index r = L.offset[q][i] * d;
                Vector acc = Vector::Zero(d);
                for (int m = 0; m < t.num_partitions(); ++m) {
                    for (int j = 0; j < t.stages(m); ++j) {
                        const double a = t.a(q, m, i, j);
                        if (a == 0.0) continue;
                        acc += a * f[m][j];
                        M.block(r, L.offset[m][j] * d, d, d) -= h * a * J[m][j];
                    }
                }
                R.segment(r, d) = stages[q][i] - y_n - h * acc;
            }
        }
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        if (!lu.isInvertible()) throw LinearSolveError("dense stage system is singular");
        const Vector dY = lu.solve(-R);
        Y += dY;
        if (dY.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + Y.lpNorm<Eigen::Infinity>())) break;
    }
    return unpack(Y);
}

}  // namespace

DensePropagator dense_step_propagator(const SplitOdeSystem& sys, const GarkTableau& t, double t_n,
                                      double h, const Vector& y_n,
                                      const std::vector<std::vector<Vector>>* stage_values,
                                      Eigen::Index cap) {
    check_size(sys, cap);
    const Eigen::Index d = sys.dimension();
    const Layout L = layout(t);
    const Eigen::Index S = L.stages;
    DensePropagator out;
    out.stage_values = stage_values ? *stage_values : solve_stages(sys, t, t_n, h, y_n);

    std::vector<std::vector<Eigen::MatrixXd>> J(t.num_partitions());
    for (int m = 0; m < t.num_partitions(); ++m) {
        for (int j = 0; j < t.stages(m); ++j) {
            const double T = t_n + t.stage_time_fraction(m, j) * h;
            J[m].push_back(Eigen::MatrixXd(sys.jacobian(m, T, out.stage_values[m][j])));
        }
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S * d, S * d);
    Eigen::MatrixXd rhs(S * d, d);
    for (int q = 0; q < t.num_partitions(); ++q) {
        for (int i = 0; i < t.stages(q); ++i) {
            const Eigen::Index r = L.offset[q][i] * d;
            rhs.block(r, 0, d, d).setIdentity();
            for (int m = 0; m < t.num_partitions(); ++m) {
                for (int j = 0; j < t.stages(m); ++j) {
                    const double a = t.a(q, m, i, j);
                    if (a != 0.0) M.block(r, L.offset[m][j] * d, d, d) -= h * a * J[m][j];
                }
            }
        }
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) throw LinearSolveError("tangent stage system is singular");
    const Eigen::MatrixXd dY = lu.solve(rhs);
    out.phi = Eigen::MatrixXd::Identity(d, d);
    for (int q = 0; q < t.num_partitions(); ++q) {
        for (int i = 0; i < t.stages(q); ++i) {
            out.phi += h * t.b(q)(i) * J[q][i] * dY.block(L.offset[q][i] * d, 0, d, d);
        }
    }
    return out;
}

Vector dense_step(const SplitOdeSystem& sys, const GarkTableau& t, double t_n, double h,
                  const Vector& y_n, Eigen::Index cap) {
    check_size(sys, cap);
    const auto stages = solve_stages(sys, t, t_n, h, y_n);
    Vector y = y_n;
    for (int q = 0; q < t.num_partitions(); ++q) {
        for (int i = 0; i < t.stages(q); ++i) {
            y += h * t.b(q)(i) * sys.evaluate(q, t_n + t.stage_time_fraction(q, i) * h, stages[q][i]);
        }
    }
    return y;
}

double fd_sensitivity(const SplitOdeSystem& system, const GoalFunction& goal, const GarkTableau& tableau,
                      const TimeGrid& grid, const Vector& y_n, std::size_t n, Eigen::Index j, double eps,
                      const StageSolverConfig& cfg) {
    if (eps <= 0.0) eps = 1e-6 * (1.0 + std::abs(y_n[j]));
    auto goal_from = [&](const Vector& start) {
        if (n == grid.num_steps()) return goal.value(start);
        return goal.value(integrate(system, tableau, grid.tail(n), start, cfg, StorageMode::kEndpoints).final_state());
    };
    Vector plus = y_n, minus = y_n;
    plus[j] += eps;
    minus[j] -= eps;
    return (goal_from(plus) - goal_from(minus)) / (2.0 * eps);
}

Eigen::MatrixXd numerical_sensitivity_matrix(const SplitOdeSystem& system, const GarkTableau& tableau,
                                             const TimeGrid& grid, const Vector& y0, std::size_t n1,
                                             std::size_t n2, Eigen::Index cap) {
    check_size(system, cap);
    if (n1 > n2 || n2 > grid.num_steps()) throw InvalidParameter("need 0 <= n1 <= n2 <= N");
    Vector y = y0;
    for (std::size_t n = 0; n < n1; ++n) y = dense_step(system, tableau, grid.t(n), grid.step(n), y, cap);
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(system.dimension(), system.dimension());
    for (std::size_t n = n1; n < n2; ++n) {
        const DensePropagator p = dense_step_propagator(system, tableau, grid.t(n), grid.step(n), y, nullptr, cap);
        S = p.phi * S;
        y = dense_step(system, tableau, grid.t(n), grid.step(n), y, cap);
    }
    return S;
}

RandomProblem random_split_system(std::uint64_t seed, Eigen::Index d) {
    if (d < 1 || d > 10) throw InvalidParameter("random systems are limited to 1..10 unknowns");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto rand_matrix = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = U(rng);
        }
        return m;
    };
    auto rand_vector = [&](Eigen::Index r) {
        Vector v(r);
        for (Eigen::Index i = 0; i < r; ++i) v[i] = U(rng);
        return v;
    };
    const Eigen::MatrixXd A0 = rand_matrix(d, d);
    const Eigen::MatrixXd B = rand_matrix(d, d);
    const Eigen::MatrixXd A1 = -5.0 * (B * B.transpose() / static_cast<double>(d) +
                                       Eigen::MatrixXd::Identity(d, d));
    const Vector s0 = 0.5 * rand_vector(d);
    const Vector forcing = 0.3 * rand_vector(d);
    const double beta = 0.5;

    FunctionSystem::Partition p0{
        [A0, s0](double, const Vector& y, Vector& out) { out = A0 * y + s0.cwiseProduct(y.array().sin().matrix()); },
        [A0, s0](double, const Vector& y) {
            Eigen::MatrixXd J = A0;
            J.diagonal() += s0.cwiseProduct(y.array().cos().matrix());
            return SparseMatrix(J.sparseView());
        },
        false, "nonstiff"};
    FunctionSystem::Partition p1{
        [A1, forcing, beta](double t, const Vector& y, Vector& out) {
            out = A1 * y - beta * y.array().cube().matrix() + std::cos(t) * forcing;
        },
        [A1, beta](double, const Vector& y) {
            Eigen::MatrixXd J = A1;
            J.diagonal() -= 3.0 * beta * y.array().square().matrix();
            return SparseMatrix(J.sparseView());
        },
        false, "stiff"};

    RandomProblem rp;
    rp.system = std::make_shared<FunctionSystem>(d, std::vector<FunctionSystem::Partition>{p0, p1});
    const Vector w = rand_vector(d);
    const Vector c = 0.5 * rand_vector(d);
    rp.goal = std::make_shared<FunctionGoal>(
        [w, c](const Vector& y) { return w.dot(y) + 0.5 * y.dot(c.cwiseProduct(y)); },
        [w, c](const Vector& y) -> Vector { return w + c.cwiseProduct(y); });
    rp.y0 = rand_vector(d);
    return rp;
}

}  // namespace gark::oracle
