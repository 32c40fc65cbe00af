#include "gark/error_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "gark/errors.hpp"
#include "gark/io.hpp"

namespace gark {

// ------------------------------------------------------------- residuals

TemporalResiduals temporal_residuals(const GarkStepper& coarse, const TimeGrid& coarse_grid,
                                     const ForwardTrajectory& time_refined) {
    if (time_refined.storage == StorageMode::kEndpoints) {
        throw InvalidParameter("time-refined trajectory must store its states");
    }
    const auto idx = embed_time_nodes(coarse_grid, time_refined.grid);
    return temporal_residuals(coarse, coarse_grid,
                              [&](std::size_t n) -> Vector { return time_refined.states[idx[n]]; });
}

TemporalResiduals temporal_residuals(const GarkStepper& coarse, const TimeGrid& coarse_grid,
                                     const std::function<Vector(std::size_t n)>& reference_state) {
    const std::size_t N = coarse_grid.num_steps();
    TemporalResiduals out;
    out.r.resize(N + 1);
    Vector prev = reference_state(0);
    for (std::size_t n = 1; n <= N; ++n) {
        Vector cur = reference_state(n);
        const StepResult s = coarse.step(coarse_grid.t(n - 1), coarse_grid.step(n - 1), prev);
        out.r[n] = cur - s.y_next;
        prev = std::move(cur);
    }
    return out;
}

std::vector<std::vector<Vector>> spatial_residual_step(const SplitOdeSystem& coarse_system,
                                                       const GarkTableau& t, double h,
                                                       const Vector& refined_y_n,
                                                       const StageRecord& refined,
                                                       const GridTransfer* transfer,
                                                       StageArgument argument) {
    const int P = t.num_partitions();
    auto project = [&](const Vector& v) -> Vector { return transfer ? transfer->project(v) : v; };
    std::vector<std::vector<Vector>> K(P), r(P);
    for (int q = 0; q < P; ++q) {
        K[q].resize(t.stages(q));
        r[q].resize(t.stages(q));
        for (int i = 0; i < t.stages(q); ++i) K[q][i] = project(refined.slopes[q][i]);
    }
    const Vector y_n = argument == StageArgument::kReconstructed ? project(refined_y_n) : Vector();
    Vector f(coarse_system.dimension());
    for (const auto& s : t.schedule()) {
        const int q = s.partition, i = s.stage;
        const Vector Y = argument == StageArgument::kProjected
                             ? project(refined.values[q][i])
                             : stage_argument(t, q, i, h, y_n, K, true);
        coarse_system.evaluate(q, refined.times[q][i], Y, f);
        r[q][i] = K[q][i] - f;
    }
    return r;
}

SpatialResiduals spatial_residuals(const SplitOdeSystem& coarse_system, const GarkTableau& tableau,
                                   const TimeGrid& coarse_grid, const ForwardTrajectory& space_refined,
                                   const GridTransfer* transfer, StageArgument argument) {
    if (space_refined.grid.nodes() != coarse_grid.nodes()) {
        throw TimeGridMismatch("space-refined trajectory must use the numerical time grid");
    }
    if (space_refined.storage != StorageMode::kFull) {
        throw InvalidParameter("space-refined trajectory must store stages");
    }
    SpatialResiduals out;
    out.r.reserve(coarse_grid.num_steps());
    for (std::size_t n = 0; n < coarse_grid.num_steps(); ++n) {
        out.r.push_back(spatial_residual_step(coarse_system, tableau, coarse_grid.step(n),
                                              space_refined.states[n], space_refined.stages[n],
                                              transfer, argument));
    }
    return out;
}

// ---------------------------------------------------------------- pairing

SpatialContributions::SpatialContributions(int partitions, Eigen::Index dimension)
    : componentwise(static_cast<std::size_t>(partitions), Vector::Zero(dimension)) {}

void SpatialContributions::add_step(const AdjointStageRecord& adjoint_step,
                                    const std::vector<std::vector<Vector>>& residual_step) {
    if (adjoint_step.mu.size() != residual_step.size() || residual_step.size() != componentwise.size()) {
        throw InvalidParameter("adjoint and residual records are not index compatible");
    }
    for (std::size_t q = 0; q < residual_step.size(); ++q) {
        for (std::size_t i = 0; i < residual_step[q].size(); ++i) {
            componentwise[q].array() += adjoint_step.mu[q][i].array() * residual_step[q][i].array();
        }
    }
}

SpatialContributions pair_spatial(const AdjointTrajectory& adjoint, const SpatialResiduals& residuals) {
    if (residuals.r.size() != adjoint.stages.size()) {
        throw InvalidParameter("residuals and adjoint cover different numbers of steps");
    }
    if (residuals.r.empty()) return SpatialContributions();
    SpatialContributions c(static_cast<int>(residuals.r[0].size()), adjoint.lambda.back().size());
    for (std::size_t n = 0; n < residuals.r.size(); ++n) c.add_step(adjoint.stages[n], residuals.r[n]);
    return c;
}

// ----------------------------------------------------------------- report

std::vector<double> nodes_to_cells(const TensorGrid2D& grid, const Vector& nodal, int species) {
    const Eigen::Index n = grid.num_unknowns();
    if (nodal.size() != species * n) throw InvalidParameter("nodal map has the wrong length");
    const int cx = grid.nx_cells(), cy = grid.ny_cells();
    std::vector<double> cells(grid.num_cells(), 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        double v = 0.0;
        for (int s = 0; s < species; ++s) v += nodal[s * n + k];
        if (v == 0.0) continue;
        const auto [i, j] = grid.unknown_node(k);
        int touching[4][2];
        int count = 0;
        for (int dj = -1; dj <= 0; ++dj) {
            for (int di = -1; di <= 0; ++di) {
                const int ci = i + di, cj = j + dj;
                if (ci < 0 || ci >= cx || cj < 0 || cj >= cy) continue;
                touching[count][0] = ci;
                touching[count][1] = cj;
                ++count;
            }
        }
        const double share = v / count;
        for (int c = 0; c < count; ++c) {
            cells[static_cast<std::size_t>(touching[c][1]) * cx + touching[c][0]] += share;
        }
    }
    return cells;
}

std::vector<double> ErrorReport::total_cell_map() const {
    if (cell_maps.empty()) return {};
    std::vector<double> total(cell_maps[0].size(), 0.0);
    for (const auto& m : cell_maps) {
        for (std::size_t c = 0; c < m.size(); ++c) total[c] += m[c];
    }
    for (std::size_t c = 0; c < goal_cell_map.size(); ++c) total[c] += goal_cell_map[c];
    return total;
}

void add_goal_term(ErrorReport& report, double value, std::vector<double> cell_map) {
    report.e_goal = value;
    report.goal_cell_map = std::move(cell_map);
    report.total += value;
    if (report.e_ref && *report.e_ref != 0.0) report.accuracy = (report.total - *report.e_ref) / *report.e_ref;
}

namespace {

/// Coarse cells along one axis that contain coordinate x.
std::vector<int> containing_cells(const std::vector<double>& coarse, double x) {
    const double tol = 1e-12 * (coarse.back() - coarse.front());
    const auto it = std::lower_bound(coarse.begin(), coarse.end(), x - tol);
    const int a = static_cast<int>(it - coarse.begin());
    const int cells = static_cast<int>(coarse.size()) - 1;
    std::vector<int> out;
    if (it != coarse.end() && std::abs(*it - x) <= tol) {
        if (a - 1 >= 0) out.push_back(a - 1);
        if (a < cells) out.push_back(a);
    } else if (a >= 1 && a - 1 < cells) {
        out.push_back(a - 1);
    }
    return out;
}

void add_nodal_to_coarse_cells(const TensorGrid2D& coarse, const TensorGrid2D& grid, const Vector& nodal,
                               int species, double sign, std::vector<double>& cells) {
    const Eigen::Index n = grid.num_unknowns();
    for (Eigen::Index k = 0; k < n; ++k) {
        double v = 0.0;
        for (int s = 0; s < species; ++s) v += nodal[s * n + k];
        if (v == 0.0) continue;
        const auto [i, j] = grid.unknown_node(k);
        const auto cx = containing_cells(coarse.xs(), grid.xs()[i]);
        const auto cy = containing_cells(coarse.ys(), grid.ys()[j]);
        const double share = sign * v / static_cast<double>(cx.size() * cy.size());
        for (int b : cy) {
            for (int a : cx) cells[static_cast<std::size_t>(b) * coarse.nx_cells() + a] += share;
        }
    }
}

}  // namespace

GoalQuadrature goal_quadrature_defect(const GoalFunction& coarse_goal, const GoalFunction& fine_goal,
                                      const GridTransfer& transfer, const Vector& fine_state, int species) {
    const Vector coarse_state = transfer.project(fine_state);
    GoalQuadrature out;
    out.value = fine_goal.value(fine_state) - coarse_goal.value(coarse_state);
    out.cell_map.assign(transfer.coarse().num_cells(), 0.0);
    const Vector gf = fine_goal.gradient(fine_state).cwiseProduct(fine_state);
    const Vector gc = coarse_goal.gradient(coarse_state).cwiseProduct(coarse_state);
    add_nodal_to_coarse_cells(transfer.coarse(), transfer.fine(), gf, species, 1.0, out.cell_map);
    add_nodal_to_coarse_cells(transfer.coarse(), transfer.coarse(), gc, species, -1.0, out.cell_map);
    return out;
}

ErrorReport assemble_report(const AdjointTrajectory& adjoint, const TemporalResiduals& temporal,
                            const SpatialContributions& spatial, double psi_num,
                            std::optional<double> psi_ref, const TensorGrid2D* grid, int species,
                            std::vector<std::string> partition_names) {
    const std::size_t N = adjoint.lambda.size() - 1;
    if (temporal.r.size() != N + 1) throw InvalidParameter("temporal residuals do not match the adjoint");
    ErrorReport rep;
    rep.psi_num = psi_num;
    rep.psi_ref = psi_ref;
    rep.num_steps = N;
    rep.step_map.resize(N);
    rep.e_time = 0.0;
    for (std::size_t n = 1; n <= N; ++n) {
        rep.step_map[n - 1] = adjoint.lambda[n].dot(temporal.r[n]);
        rep.e_time += rep.step_map[n - 1];
    }
    rep.partition_names = std::move(partition_names);
    rep.e_space.clear();
    for (std::size_t q = 0; q < spatial.componentwise.size(); ++q) {
        rep.e_space.push_back(spatial.total(static_cast<int>(q)));
        if (grid != nullptr) {
            rep.cell_maps.push_back(nodes_to_cells(*grid, spatial.componentwise[q], species));
        }
    }
    if (grid != nullptr) {
        rep.nx_cells = grid->nx_cells();
        rep.ny_cells = grid->ny_cells();
    }
    rep.total = rep.e_time;
    for (double e : rep.e_space) rep.total += e;
    if (psi_ref) {
        rep.e_ref = *psi_ref - psi_num;
        if (*rep.e_ref != 0.0) rep.accuracy = (rep.total - *rep.e_ref) / *rep.e_ref;
    }
    return rep;
}

// --------------------------------------------------------------- pipeline

namespace {

nlohmann::json solver_json(const StageSolverConfig& c) {
    return {{"rtol", c.rtol},
            {"atol", c.atol},
            {"max_iterations", c.max_iterations},
            {"linear_solver", static_cast<int>(c.linear_solver)},
            {"cg_tolerance", c.cg_tolerance},
            {"jacobian_reuse", static_cast<int>(c.jacobian_reuse)}};
}

Vector reference_final_state(const ProblemInstance& fine, const GarkTableau& tableau,
                             const TimeGrid& grid, const EstimateOptions& options,
                             const std::shared_ptr<FactorizationCache>& cache,
                             const nlohmann::json& family_config) {
    std::string path;
    if (!options.reference_cache_dir.empty()) {
        nlohmann::json key = {{"problem", family_config},
                              {"grid", fine.grid ? to_json(*fine.grid) : nlohmann::json()},
                              {"time", grid.nodes()},
                              {"tableau", to_json(tableau)},
                              {"solver", solver_json(options.solver)}};
        io::ensure_directory(options.reference_cache_dir);
        path = (std::filesystem::path(options.reference_cache_dir) / ("ref-" + io::content_hash(key) + ".bin")).string();
        if (auto v = io::load_vector(path); v && v->size() == fine.system->dimension()) return *v;
    }
    const GarkStepper stepper(*fine.system, tableau, options.solver, cache);
    Vector y = integrate(stepper, grid, fine.initial, StorageMode::kEndpoints).final_state();
    if (!path.empty()) io::save_vector(path, y);
    return y;
}

}  // namespace

EstimateResult estimate_errors(const ProblemFamily& family, const TensorGrid2D* space,
                               const TimeGrid& time, const GarkTableau& imex,
                               const EstimateOptions& options) {
    const bool spatial = family.spatial();
    if (spatial && space == nullptr) throw InvalidParameter("spatial problem needs a grid");
    const ProblemInstance coarse = spatial ? family.instantiate(*space) : family.instantiate();
    const GarkTableau tableau = align_with_problem(imex, coarse);
    const TimeGrid time_fine = halve_all_steps(time);

    auto coarse_cache = std::make_shared<FactorizationCache>(options.solver.linear_solver,
                                                             options.solver.cg_tolerance);
    const GarkStepper coarse_stepper(*coarse.system, tableau, options.solver, coarse_cache);

    // numerical solution and its adjoint
    const ForwardTrajectory numerical = integrate(coarse_stepper, time, coarse.initial, StorageMode::kFull);
    const double psi_num = coarse.goal->value(numerical.final_state());
    SweepOptions so;
    so.store_theta = false;
    so.store_ell = false;
    so.cache = coarse_cache;
    const AdjointTrajectory adjoint = sweep(*coarse.system, tableau, numerical, *coarse.goal, so);

    // time-refined solution and temporal residuals
    TemporalResiduals temporal;
    {
        const ForwardTrajectory refined = integrate(coarse_stepper, time_fine, coarse.initial, StorageMode::kStates);
        temporal = temporal_residuals(coarse_stepper, time, refined);
        if (!spatial) {
            ErrorReport rep = assemble_report(adjoint, temporal, SpatialContributions(), psi_num,
                                              coarse.goal->value(refined.final_state()), nullptr,
                                              coarse.species, {});
            rep.problem = family.problem();
            return {std::move(rep), std::nullopt, time};
        }
    }

    // space-refined solution, residuals paired on the fly
    const TensorGrid2D fine_grid = refine_uniform(*space);
    const ProblemInstance fine = family.instantiate(fine_grid);
    const GridTransfer transfer(*space, fine_grid);
    auto fine_cache = std::make_shared<FactorizationCache>(options.solver.linear_solver,
                                                           options.solver.cg_tolerance);
    SpatialContributions contributions(tableau.num_partitions(), coarse.system->dimension());
    Vector y_space_refined;
    {
        const GarkStepper fine_stepper(*fine.system, tableau, options.solver, fine_cache);
        y_space_refined = integrate(fine_stepper, time, fine.initial, StorageMode::kEndpoints,
                  [&](std::size_t n, double, double h, const Vector& y_n, const StepResult& r) {
                      contributions.add_step(adjoint.stages[n],
                                             spatial_residual_step(*coarse.system, tableau, h, y_n,
                                                                   r.stages, &transfer,
                                                                   options.stage_argument));
                  }).final_state();
    }

    // reference solution
    const Vector y_ref = reference_final_state(fine, tableau, time_fine, options, fine_cache, family.config());
    const double psi_ref = fine.goal->value(y_ref);

    std::vector<std::string> names;
    for (int q = 0; q < coarse.system->num_partitions(); ++q) names.push_back(coarse.system->partition_name(q));
    ErrorReport rep = assemble_report(adjoint, temporal, contributions, psi_num, psi_ref, space,
                                      coarse.species, std::move(names));
    rep.problem = family.problem();
    if (options.goal_quadrature) {
        GoalQuadrature gq = goal_quadrature_defect(*coarse.goal, *fine.goal, transfer, y_space_refined, coarse.species);
        add_goal_term(rep, gq.value, std::move(gq.cell_map));
    }
    return {std::move(rep), *space, time};
}

// ---------------------------------------------------------------- output

nlohmann::json to_json(const ErrorReport& r, bool include_maps) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["problem"] = r.problem;
    j["psi_num"] = r.psi_num;
    j["psi_ref"] = opt(r.psi_ref);
    j["e_ref"] = opt(r.e_ref);
    j["e_time"] = r.e_time;
    json parts = json::array();
    for (std::size_t q = 0; q < r.e_space.size(); ++q) {
        parts.push_back({{"partition", q},
                         {"name", q < r.partition_names.size() ? r.partition_names[q] : ""},
                         {"estimate", r.e_space[q]}});
    }
    j["e_space"] = parts;
    j["e_goal"] = opt(r.e_goal);
    j["total"] = r.total;
    j["accuracy"] = opt(r.accuracy);
    j["num_steps"] = r.num_steps;
    if (include_maps) {
        j["step_map"] = r.step_map;
        j["cell_maps"] = r.cell_maps;
        j["goal_cell_map"] = r.goal_cell_map;
        j["nx_cells"] = r.nx_cells;
        j["ny_cells"] = r.ny_cells;
    }
    return j;
}

std::string report_csv(const ErrorReport& r) {
    auto f = [](double v) { return io::format_sci(v, 5); };
    auto fo = [&](const std::optional<double>& v) { return v ? f(*v) : std::string(); };
    std::ostringstream os;
    os << "goal_ref,goal_num,ref_error,E_1";
    for (std::size_t q = 0; q < r.e_space.size(); ++q) os << ",E_" << q + 2;
    if (r.e_goal) os << ",E_goal";
    os << ",total,accuracy\n";
    os << fo(r.psi_ref) << ',' << f(r.psi_num) << ',' << fo(r.e_ref) << ',' << f(r.e_time);
    for (double e : r.e_space) os << ',' << f(e);
    if (r.e_goal) os << ',' << f(*r.e_goal);
    os << ',' << f(r.total) << ',' << fo(r.accuracy) << '\n';
    return os.str();
}

}  // namespace gark
