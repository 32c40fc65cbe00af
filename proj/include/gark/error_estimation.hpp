#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gark/adjoint.hpp"
#include "gark/integrator.hpp"
#include "gark/mesh.hpp"
#include "gark/problems.hpp"
#include "json.hpp"

namespace gark {

/// r_n = y~(t_n) - y^_n for n = 1..N; entry 0 is unused.
struct TemporalResiduals {
    std::vector<Vector> r;
};

/// One coarse step from every refined state: y^_n = step(y~(t_{n-1})).
/// The refined trajectory must store states and contain every coarse node.
TemporalResiduals temporal_residuals(const GarkStepper& coarse, const TimeGrid& coarse_grid,
                                     const ForwardTrajectory& time_refined);

/// Same, with the reference states supplied directly (e.g. an exact solution).
TemporalResiduals temporal_residuals(const GarkStepper& coarse, const TimeGrid& coarse_grid,
                                     const std::function<Vector(std::size_t n)>& reference_state);

/// How the coarse stage arguments Y~ are formed from the refined data.
enum class StageArgument {
    kProjected,      ///< P Y~ of the refined stage values
    kReconstructed,  ///< P y~_n + h sum a P k~ (self term included)
};

/// r^{x,(q)}_{n,i} = P k~^{(q)}_{n,i} - f^{(q)}_coarse(T_{n,i}, Y~^{(q)}_{n,i}), indexed [n][q][i].
struct SpatialResiduals {
    std::vector<std::vector<std::vector<Vector>>> r;
};

/// Residuals of one step. `transfer` may be null when both live on the same grid.
std::vector<std::vector<Vector>> spatial_residual_step(const SplitOdeSystem& coarse_system,
                                                       const GarkTableau& tableau, double h,
                                                       const Vector& refined_y_n,
                                                       const StageRecord& refined_stages,
                                                       const GridTransfer* transfer,
                                                       StageArgument argument = StageArgument::kProjected);

SpatialResiduals spatial_residuals(const SplitOdeSystem& coarse_system, const GarkTableau& tableau,
                                   const TimeGrid& coarse_grid, const ForwardTrajectory& space_refined,
                                   const GridTransfer* transfer,
                                   StageArgument argument = StageArgument::kProjected);

/// Componentwise mu^T r pairings accumulated over steps and stages, per partition.
struct SpatialContributions {
    std::vector<Vector> componentwise;

    explicit SpatialContributions(int partitions = 0, Eigen::Index dimension = 0);
    void add_step(const AdjointStageRecord& adjoint_step,
                  const std::vector<std::vector<Vector>>& residual_step);
    double total(int q) const { return componentwise.at(q).sum(); }
};

SpatialContributions pair_spatial(const AdjointTrajectory& adjoint, const SpatialResiduals& residuals);

struct ErrorReport {
    std::string problem;
    double psi_num = 0.0;
    std::optional<double> psi_ref;
    std::optional<double> e_ref;
    double e_time = 0.0;
    std::vector<double> e_space;  ///< per partition
    std::vector<std::string> partition_names;
    /// Q_fine(y~) - Q_coarse(P y~) on the space-refined final state: the
    /// defect of the coarse goal quadrature, which no residual can see.
    std::optional<double> e_goal;
    double total = 0.0;
    std::optional<double> accuracy;
    /// lambda_n^T r_n for steps n = 1..N (entry n-1 covers [t_{n-1}, t_n]).
    std::vector<double> step_map;
    /// Per partition, per cell (index j * nx_cells + i).
    std::vector<std::vector<double>> cell_maps;
    /// Per-cell split of e_goal (empty without it).
    std::vector<double> goal_cell_map;
    int nx_cells = 0;
    int ny_cells = 0;
    std::size_t num_steps = 0;

    std::vector<double> total_cell_map() const;
};

/// Builds the report. `grid` (may be null) enables per-cell maps; `species`
/// is the number of stacked fields in the state.
ErrorReport assemble_report(const AdjointTrajectory& adjoint, const TemporalResiduals& temporal,
                            const SpatialContributions& spatial, double psi_num,
                            std::optional<double> psi_ref, const TensorGrid2D* grid, int species,
                            std::vector<std::string> partition_names);

/// Adds the goal quadrature term and updates total and accuracy.
void add_goal_term(ErrorReport& report, double value, std::vector<double> cell_map);

struct GoalQuadrature {
    double value = 0.0;
    std::vector<double> cell_map;  ///< per coarse cell; sums to value for linear goals
};

/// Q_fine(y) - Q_coarse(P y) for a state y on the fine grid of `transfer`.
/// The cell map splits the weighted nodal terms g * y (g the goal gradient)
/// of both grids evenly among the coarse cells containing each node.
GoalQuadrature goal_quadrature_defect(const GoalFunction& coarse_goal, const GoalFunction& fine_goal,
                                      const GridTransfer& transfer, const Vector& fine_state, int species);

/// Per-cell split of nodal contributions: each node's value is divided
/// evenly among the cells it touches.
std::vector<double> nodes_to_cells(const TensorGrid2D& grid, const Vector& nodal, int species);

struct EstimateOptions {
    StageSolverConfig solver;
    StageArgument stage_argument = StageArgument::kProjected;
    /// Directory for cached reference final states; empty disables caching.
    std::string reference_cache_dir;
    /// Include the goal quadrature term in the total.
    bool goal_quadrature = true;
};

struct EstimateResult {
    ErrorReport report;
    std::optional<TensorGrid2D> space;
    TimeGrid time;
};

/// The four-solution pipeline: numerical (dt, dx), time-refined (dt/2, dx),
/// space-refined (dt, dx/2) and reference (dt/2, dx/2). Grid-free problems
/// use the time-refined solution as reference and report no spatial terms.
EstimateResult estimate_errors(const ProblemFamily& family, const TensorGrid2D* space,
                               const TimeGrid& time, const GarkTableau& tableau,
                               const EstimateOptions& options = {});

nlohmann::json to_json(const ErrorReport& r, bool include_maps = true);
/// Header and one row: goal, reference error, E_1, E_2.., total, accuracy.
std::string report_csv(const ErrorReport& r);

}  // namespace gark
