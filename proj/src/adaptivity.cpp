#include "gark/adaptivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gark/io.hpp"

namespace gark {

void RefinementConfig::check() const {
    if (!(space_pct > 0.0 && space_pct < 100.0) || !(time_pct > 0.0 && time_pct < 100.0)) {
        throw InvalidParameter("percentiles must lie in (0, 100)");
    }
    if (stages < 0) throw InvalidParameter("number of stages must be non-negative");
}

std::vector<std::size_t> mark_percentile(const std::vector<double>& contributions, double pct) {
    if (contributions.empty()) throw InvalidParameter("cannot mark an empty map");
    if (!(pct > 0.0 && pct <= 100.0)) throw InvalidParameter("percentile must lie in (0, 100]");
    std::vector<double> a(contributions.size());
    std::transform(contributions.begin(), contributions.end(), a.begin(), [](double v) { return std::abs(v); });
    if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; })) return {};
    std::vector<double> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    const double threshold = sorted[rank - 1];
    std::vector<std::size_t> marked;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] >= threshold) marked.push_back(k);
    }
    return marked;
}

RefinementStageLog refine_stage(const ProblemFamily& family, const StageGrids& grids,
                                const GarkTableau& tableau, const RefinementConfig& cfg, int stage_index,
                                bool mark) {
    cfg.check();
    EstimateResult est = estimate_errors(family, &grids.space, grids.time, tableau, cfg.estimate);
    RefinementStageLog log{stage_index, grids.space, grids.time, grids.space, grids.time, {}, {},
                           std::move(est.report)};
    if (!mark) return log;
    const ErrorReport& rep = log.report;
    const int cx = grids.space.nx_cells();

    std::set<std::size_t> cells;
    auto add_marks = [&](const std::vector<double>& map) {
        for (auto c : mark_percentile(map, cfg.space_pct)) cells.insert(c);
    };
    if (cfg.basis == MarkingBasis::kTotal) {
        std::vector<double> total = rep.total_cell_map();
        if (!cfg.mark_goal_quadrature) {
            for (std::size_t c = 0; c < rep.goal_cell_map.size(); ++c) total[c] -= rep.goal_cell_map[c];
        }
        add_marks(total);
    } else {
        std::vector<std::vector<double>> maps = rep.cell_maps;
        if (cfg.mark_goal_quadrature && !rep.goal_cell_map.empty()) maps.push_back(rep.goal_cell_map);
        double largest = 0.0;
        std::vector<double> l1;
        for (const auto& m : maps) {
            double s = 0.0;
            for (double v : m) s += std::abs(v);
            l1.push_back(s);
            largest = std::max(largest, s);
        }
        for (std::size_t q = 0; q < maps.size(); ++q) {
            if (l1[q] == 0.0 || l1[q] < cfg.negligible_partition * largest) continue;
            add_marks(maps[q]);
        }
    }
    for (auto c : cells) {
        log.marked_cells.insert({static_cast<int>(c % static_cast<std::size_t>(cx)),
                                 static_cast<int>(c / static_cast<std::size_t>(cx))});
    }
    for (auto n : mark_percentile(rep.step_map, cfg.time_pct)) log.marked_steps.insert(n);

    log.space_after = refine_marked(grids.space, log.marked_cells);
    log.time_after = log.marked_steps.empty() ? grids.time : halve_marked_steps(grids.time, log.marked_steps);
    return log;
}

std::vector<RefinementStageLog> run_campaign(const ProblemFamily& family, const StageGrids& initial,
                                             const GarkTableau& tableau, const RefinementConfig& cfg,
                                             const StageCallback& on_stage) {
    cfg.check();
    std::vector<RefinementStageLog> logs;
    StageGrids grids = initial;
    for (int s = 0; s <= cfg.stages; ++s) {
        try {
            logs.push_back(refine_stage(family, grids, tableau, cfg, s, s < cfg.stages));
        } catch (const std::exception& e) {
            throw CampaignError("refinement stage " + std::to_string(s) + " failed: " + e.what(),
                                std::move(logs));
        }
        if (on_stage) on_stage(logs.back());
        grids = {logs.back().space_after, logs.back().time_after};
    }
    return logs;
}

double fitted_decay_order(const std::vector<RefinementStageLog>& logs) {
    std::vector<double> x, y;
    for (const auto& l : logs) {
        if (!l.report.e_ref || *l.report.e_ref == 0.0) continue;
        x.push_back(l.stage);
        y.push_back(-std::log2(std::abs(*l.report.e_ref)));
    }
    if (x.size() < 2) return std::nan("");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

nlohmann::json to_json(const RefinementStageLog& log) {
    using nlohmann::json;
    json cells = json::array();
    for (const auto& [i, j] : log.marked_cells) cells.push_back({i, j});
    json j;
    j["stage"] = log.stage;
    j["space_before"] = to_json(log.space_before);
    j["space_after"] = to_json(log.space_after);
    j["time_before"] = log.time_before.nodes();
    j["time_after"] = log.time_after.nodes();
    j["marked_cells"] = cells;
    j["marked_steps"] = std::vector<std::size_t>(log.marked_steps.begin(), log.marked_steps.end());
    j["report"] = to_json(log.report, false);
    j["psi_ref"] = log.report.psi_ref ? json(*log.report.psi_ref) : json(nullptr);
    j["e_ref"] = log.report.e_ref ? json(*log.report.e_ref) : json(nullptr);
    j["e_est"] = log.report.total;
    j["accuracy"] = log.report.accuracy ? json(*log.report.accuracy) : json(nullptr);
    j["nodes"] = log.space_before.nx_nodes() * log.space_before.ny_nodes();
    j["steps"] = log.time_before.num_steps();
    return j;
}

std::string campaign_csv(const std::vector<RefinementStageLog>& logs) {
    auto f = [](double v) { return io::format_sci(v, 5); };
    auto fo = [&](const std::optional<double>& v) { return v ? f(*v) : std::string(); };
    std::ostringstream os;
    os << "stage,nx_cells,ny_cells,steps,goal_ref,ref_error,estimate,accuracy,E_1";
    const std::size_t P = logs.empty() ? 0 : logs.front().report.e_space.size();
    for (std::size_t q = 0; q < P; ++q) os << ",E_" << q + 2;
    const bool goal_term = !logs.empty() && logs.front().report.e_goal.has_value();
    if (goal_term) os << ",E_goal";
    os << '\n';
    for (const auto& l : logs) {
        os << l.stage << ',' << l.space_before.nx_cells() << ',' << l.space_before.ny_cells() << ','
           << l.time_before.num_steps() << ',' << fo(l.report.psi_ref) << ',' << fo(l.report.e_ref) << ','
           << f(l.report.total) << ',' << fo(l.report.accuracy) << ',' << f(l.report.e_time);
        for (double e : l.report.e_space) os << ',' << f(e);
        if (goal_term) os << ',' << fo(l.report.e_goal);
        os << '\n';
    }
    return os.str();
}

}  // namespace gark
