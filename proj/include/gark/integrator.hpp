#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "gark/linalg.hpp"
#include "gark/mesh.hpp"
#include "gark/problems.hpp"
#include "gark/split_system.hpp"
#include "gark/tableau.hpp"
#include "json.hpp"

namespace gark {

enum class JacobianReuse {
    kReassemblePerStage,  ///< full Newton: J^{(q)} at every iterate
    kFreezePerStep,       ///< J^{(q)}(t_n, y_n) for every stage of the step
};

struct StageSolverConfig {
    double rtol = 1e-10;
    double atol = 1e-12;
    int max_iterations = 20;
    LinearSolverKind linear_solver = LinearSolverKind::kSparseDirect;
    double cg_tolerance = 1e-12;
    JacobianReuse jacobian_reuse = JacobianReuse::kReassemblePerStage;

    void check() const;
};

/// Stage data of one step, indexed [partition][stage].
struct StageRecord {
    std::vector<std::vector<Vector>> values;
    std::vector<std::vector<Vector>> slopes;
    std::vector<std::vector<double>> times;
};

struct StepResult {
    Vector y_next;
    StageRecord stages;
    int newton_iterations = 0;
};

enum class StorageMode {
    kFull,       ///< states and stage records
    kStates,     ///< states only
    kEndpoints,  ///< y_0 and y_N only
};

struct ForwardTrajectory {
    TimeGrid grid;
    StorageMode storage = StorageMode::kFull;
    /// y_0..y_N (only y_0 and y_N for kEndpoints).
    std::vector<Vector> states;
    /// One record per step for kFull, empty otherwise.
    std::vector<StageRecord> stages;

    const Vector& final_state() const { return states.back(); }
    const Vector& state(std::size_t n) const;
};

/// y_n + h sum_{(m,j)} a^{q,m}_{i,j} k^{(m)}_j, accumulated in schedule order.
/// The self term (m,j) = (q,i) is included only when `include_self` is set.
/// Forward stages and residual reconstructions both go through this routine
/// so identical inputs give identical bits.
Vector stage_argument(const GarkTableau& t, int q, int i, double h, const Vector& y_n,
                      const std::vector<std::vector<Vector>>& slopes, bool include_self);

/// y_n + h sum_{q,i} b^{(q)}_i k^{(q)}_i in schedule order.
Vector combine_step(const GarkTableau& t, double h, const Vector& y_n,
                    const std::vector<std::vector<Vector>>& slopes);

/// One-step GARK solver bound to a system and tableau.
class GarkStepper {
public:
    GarkStepper(const SplitOdeSystem& system, const GarkTableau& tableau, StageSolverConfig cfg = {},
                std::shared_ptr<FactorizationCache> cache = nullptr);

    StepResult step(double t_n, double h, const Vector& y_n) const;

    const SplitOdeSystem& system() const noexcept { return system_; }
    const GarkTableau& tableau() const noexcept { return tableau_; }
    const StageSolverConfig& config() const noexcept { return cfg_; }
    const std::shared_ptr<FactorizationCache>& cache() const noexcept { return cache_; }

private:
    const SplitOdeSystem& system_;
    GarkTableau tableau_;
    StageSolverConfig cfg_;
    std::shared_ptr<FactorizationCache> cache_;
};

StepResult step(const SplitOdeSystem& system, const GarkTableau& tableau, double t_n, double h,
                const Vector& y_n, const StageSolverConfig& cfg = {});

using StepObserver =
    std::function<void(std::size_t n, double t_n, double h, const Vector& y_n, const StepResult&)>;

ForwardTrajectory integrate(const GarkStepper& stepper, const TimeGrid& grid, const Vector& y0,
                            StorageMode storage = StorageMode::kFull,
                            const StepObserver& observer = nullptr);

ForwardTrajectory integrate(const SplitOdeSystem& system, const GarkTableau& tableau,
                            const TimeGrid& grid, const Vector& y0, const StageSolverConfig& cfg = {},
                            StorageMode storage = StorageMode::kFull);

ForwardTrajectory integrate(const ProblemInstance& problem, const GarkTableau& tableau,
                            const TimeGrid& grid, const StageSolverConfig& cfg = {},
                            StorageMode storage = StorageMode::kFull);

/// Partition permutation of a two-partition IMEX tableau that puts its
/// implicit side on the problem's stiff partition.
GarkTableau align_with_problem(const GarkTableau& tableau, const ProblemInstance& problem);

}  // namespace gark
