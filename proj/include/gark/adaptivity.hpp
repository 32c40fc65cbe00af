#pragma once

#include <cstddef>
#include <set>
#include <vector>

#include "gark/error_estimation.hpp"
#include "gark/errors.hpp"
#include "gark/mesh.hpp"
#include "gark/problems.hpp"
#include "gark/tableau.hpp"
#include "json.hpp"

namespace gark {

enum class MarkingBasis {
    kTotal,         ///< percentile of the summed spatial map
    kPerPartition,  ///< percentile of each partition map, union of the sets
    kUnion = kPerPartition,
};

struct RefinementConfig {
    double space_pct = 90.0;
    double time_pct = 80.0;
    int stages = 4;
    MarkingBasis basis = MarkingBasis::kUnion;
    /// Partitions whose map has an l1 norm below this fraction of the largest
    /// one are left out of per-partition marking.
    double negligible_partition = 1e-10;
    /// Also mark on the goal quadrature map (per-partition basis only).
    bool mark_goal_quadrature = false;
    EstimateOptions estimate;

    void check() const;
};

/// Indices whose |value| is at least the nearest-rank pct-th percentile of
/// all |values|; ties are included. An all-zero map marks nothing.
std::vector<std::size_t> mark_percentile(const std::vector<double>& contributions, double pct);

struct RefinementStageLog {
    int stage = 0;
    TensorGrid2D space_before;
    TimeGrid time_before;
    TensorGrid2D space_after;
    TimeGrid time_after;
    std::set<CellIndex> marked_cells;
    std::set<std::size_t> marked_steps;
    ErrorReport report;
};

struct StageGrids {
    TensorGrid2D space;
    TimeGrid time;
};

/// Estimate on the given numerical grids, then mark and refine them unless `mark` is false.
RefinementStageLog refine_stage(const ProblemFamily& family, const StageGrids& grids,
                                const GarkTableau& tableau, const RefinementConfig& cfg, int stage_index = 0,
                                bool mark = true);

/// Thrown when a stage fails; carries the logs of the stages that completed.
class CampaignError : public Error {
public:
    CampaignError(const std::string& what, std::vector<RefinementStageLog> completed)
        : Error(what), completed_(std::move(completed)) {}
    const std::vector<RefinementStageLog>& completed() const noexcept { return completed_; }

private:
    std::vector<RefinementStageLog> completed_;
};

using StageCallback = std::function<void(const RefinementStageLog&)>;

/// cfg.stages refinements followed by a final estimate: cfg.stages + 1 logs.
std::vector<RefinementStageLog> run_campaign(const ProblemFamily& family, const StageGrids& initial,
                                             const GarkTableau& tableau, const RefinementConfig& cfg,
                                             const StageCallback& on_stage = nullptr);

/// Least-squares slope of -log2|E_ref| against the stage index.
double fitted_decay_order(const std::vector<RefinementStageLog>& logs);

nlohmann::json to_json(const RefinementStageLog& log);
/// Two-panel summary: goal, reference error, estimate, accuracy, then E_1.. per stage.
std::string campaign_csv(const std::vector<RefinementStageLog>& logs);

}  // namespace gark
