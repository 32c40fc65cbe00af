#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "gark/integrator.hpp"
#include "gark/problems.hpp"
#include "gark/split_system.hpp"
#include "gark/tableau.hpp"

namespace gark::oracle {

inline constexpr Eigen::Index kDenseCap = 64;

/// Phi = d y_{n+1} / d y_n, dense.
struct DensePropagator {
    Eigen::MatrixXd phi;
    /// Stage values the linearization was taken at, indexed [q][i].
    std::vector<std::vector<Vector>> stage_values;
};

/// Tangent-linear propagator of one GARK step, assembled as one dense block
/// system over all stages:
///   (I - h [a^{q,m}_{i,j} J^{(m)}_j]) dY = 1 (x) I,  Phi = I + h sum b J dY.
/// Stage values come from a monolithic dense Newton solve of all stage
/// equations unless `stage_values` is given.
DensePropagator dense_step_propagator(const SplitOdeSystem& system, const GarkTableau& tableau,
                                      double t_n, double h, const Vector& y_n,
                                      const std::vector<std::vector<Vector>>* stage_values = nullptr,
                                      Eigen::Index cap = kDenseCap);

/// The step itself from the same dense Newton solve.
Vector dense_step(const SplitOdeSystem& system, const GarkTableau& tableau, double t_n, double h,
                  const Vector& y_n, Eigen::Index cap = kDenseCap);

/// [Q(y_N(y_n + eps e_j)) - Q(y_N(y_n - eps e_j))] / (2 eps), re-integrating
/// from step n with the forward integrator. eps <= 0 picks 1e-6 (1 + |y_nj|).
double fd_sensitivity(const SplitOdeSystem& system, const GoalFunction& goal,
                      const GarkTableau& tableau, const TimeGrid& grid, const Vector& y_n,
                      std::size_t n, Eigen::Index j, double eps = 0.0,
                      const StageSolverConfig& cfg = {});

/// S = d y_{n2} / d y_{n1} as a product of dense step propagators along the
/// dense-Newton trajectory started from y0 at t_0.
Eigen::MatrixXd numerical_sensitivity_matrix(const SplitOdeSystem& system, const GarkTableau& tableau,
                                             const TimeGrid& grid, const Vector& y0, std::size_t n1,
                                             std::size_t n2, Eigen::Index cap = kDenseCap);

/// Seeded random split system with two nonlinear partitions and a nonlinear
/// goal; partition 1 is the stiffer one.
struct RandomProblem {
    std::shared_ptr<SplitOdeSystem> system;
    std::shared_ptr<GoalFunction> goal;
    Vector y0;
};
RandomProblem random_split_system(std::uint64_t seed, Eigen::Index dimension);

}  // namespace gark::oracle
