#include "gark/integrator.hpp"

#include <cmath>
#include <map>

#include "gark/errors.hpp"

namespace gark {

void StageSolverConfig::check() const {
    if (!(rtol > 0.0) || !(atol > 0.0)) throw InvalidParameter("solver tolerances must be positive");
    if (max_iterations < 1) throw InvalidParameter("max_iterations must be at least 1");
    if (!(cg_tolerance > 0.0)) throw InvalidParameter("cg tolerance must be positive");
}

const Vector& ForwardTrajectory::state(std::size_t n) const {
    if (storage == StorageMode::kEndpoints) {
        if (n == 0) return states.front();
        if (n == grid.num_steps()) return states.back();
        throw InvalidParameter("intermediate states were not stored");
    }
    return states.at(n);
}

Vector stage_argument(const GarkTableau& t, int q, int i, double h, const Vector& y_n,
                      const std::vector<std::vector<Vector>>& slopes, bool include_self) {
    Vector y = y_n;
    for (const auto& s : t.schedule()) {
        const double a = t.a(q, s.partition, i, s.stage);
        if (a == 0.0) continue;
        if (s.partition == q && s.stage == i && !include_self) continue;
        y += (h * a) * slopes[s.partition][s.stage];
    }
    return y;
}

Vector combine_step(const GarkTableau& t, double h, const Vector& y_n,
                    const std::vector<std::vector<Vector>>& slopes) {
    Vector y = y_n;
    for (const auto& s : t.schedule()) {
        const double b = t.b(s.partition)(s.stage);
        if (b == 0.0) continue;
        y += (h * b) * slopes[s.partition][s.stage];
    }
    return y;
}

GarkStepper::GarkStepper(const SplitOdeSystem& system, const GarkTableau& tableau,
                         StageSolverConfig cfg, std::shared_ptr<FactorizationCache> cache)
    : system_(system), tableau_(tableau), cfg_(cfg), cache_(std::move(cache)) {
    cfg_.check();
    if (tableau_.num_partitions() != system_.num_partitions()) {
        throw InvalidParameter("tableau and system have different partition counts");
    }
    const auto report = validate(tableau_);
    if (report.has("schedule")) {
        throw InvalidParameter("tableau stage schedule is not executable: " + report.issues.front().detail);
    }
    if (!cache_) cache_ = std::make_shared<FactorizationCache>(cfg_.linear_solver, cfg_.cg_tolerance);
}

StepResult GarkStepper::step(double t_n, double h, const Vector& y_n) const {
    const GarkTableau& t = tableau_;
    const int P = t.num_partitions();
    const Eigen::Index d = system_.dimension();
    if (y_n.size() != d) throw InvalidParameter("state has the wrong dimension");

    StepResult out;
    auto& rec = out.stages;
    rec.values.resize(P);
    rec.slopes.resize(P);
    rec.times.resize(P);
    for (int q = 0; q < P; ++q) {
        rec.values[q].resize(t.stages(q));
        rec.slopes[q].resize(t.stages(q));
        rec.times[q].resize(t.stages(q));
    }

    // Per-step state for the frozen-Jacobian policy.
    std::map<int, SparseMatrix> frozen_jacobian;
    std::map<std::pair<int, double>, std::unique_ptr<ShiftedSolver>> frozen_solvers;

    for (const auto& s : t.schedule()) {
        const int q = s.partition, i = s.stage;
        const double T = t_n + t.stage_time_fraction(q, i) * h;
        rec.times[q][i] = T;
        Vector base = stage_argument(t, q, i, h, y_n, rec.slopes, false);
        const double c = h * t.a(q, q, i, i);

        if (c == 0.0) {
            Vector k(d);
            system_.evaluate(q, T, base, k);
            rec.values[q][i] = std::move(base);
            rec.slopes[q][i] = std::move(k);
            continue;
        }

        Vector Y = y_n;
        Vector k(d);
        bool converged = false;
        double gnorm = 0.0;
        int iter = 0;
        const bool linear = system_.is_linear(q);
        for (;;) {
            system_.evaluate(q, T, Y, k);
            if (linear && iter == 1) {
                converged = true;
                break;
            }
            const Vector G = base + c * k - Y;
            gnorm = G.lpNorm<Eigen::Infinity>();
            if (gnorm <= cfg_.atol + cfg_.rtol * Y.lpNorm<Eigen::Infinity>()) {
                converged = true;
                break;
            }
            if (iter >= cfg_.max_iterations) break;
            ++iter;
            Vector dY;
            if (linear) {
                const SparseMatrix J = system_.jacobian(q, T, Y);
                dY = cache_->get(q, J, c).solve(G);
            } else if (cfg_.jacobian_reuse == JacobianReuse::kFreezePerStep) {
                auto it = frozen_jacobian.find(q);
                if (it == frozen_jacobian.end()) {
                    it = frozen_jacobian.emplace(q, system_.jacobian(q, t_n, y_n)).first;
                }
                auto& solver = frozen_solvers[{q, c}];
                if (!solver) {
                    solver = std::make_unique<ShiftedSolver>(it->second, c, cfg_.linear_solver,
                                                             cfg_.cg_tolerance);
                }
                dY = solver->solve(G);
            } else {
                const ShiftedSolver solver(system_.jacobian(q, T, Y), c, cfg_.linear_solver,
                                           cfg_.cg_tolerance);
                dY = solver.solve(G);
            }
            Y += dY;
        }
        out.newton_iterations += iter;
        if (!converged) {
            throw StepFailure("Newton iteration for stage (" + std::to_string(q) + "," +
                                  std::to_string(i) + ") did not converge",
                              iter, gnorm);
        }
        rec.values[q][i] = std::move(Y);
        rec.slopes[q][i] = std::move(k);
    }

    out.y_next = combine_step(t, h, y_n, rec.slopes);
    return out;
}

StepResult step(const SplitOdeSystem& system, const GarkTableau& tableau, double t_n, double h,
                const Vector& y_n, const StageSolverConfig& cfg) {
    return GarkStepper(system, tableau, cfg).step(t_n, h, y_n);
}

ForwardTrajectory integrate(const GarkStepper& stepper, const TimeGrid& grid, const Vector& y0,
                            StorageMode storage, const StepObserver& observer) {
    ForwardTrajectory traj{grid, storage, {}, {}};
    const std::size_t N = grid.num_steps();
    if (storage != StorageMode::kEndpoints) traj.states.reserve(N + 1);
    if (storage == StorageMode::kFull) traj.stages.reserve(N);
    traj.states.push_back(y0);
    Vector y = y0;
    for (std::size_t n = 0; n < N; ++n) {
        StepResult r;
        try {
            r = stepper.step(grid.t(n), grid.step(n), y);
        } catch (const StepFailure& e) {
            throw StepFailure(std::string(e.what()) + " at step " + std::to_string(n), e.iterations(),
                              e.residual_norm(), static_cast<std::ptrdiff_t>(n));
        }
        if (observer) observer(n, grid.t(n), grid.step(n), y, r);
        y = std::move(r.y_next);
        if (storage != StorageMode::kEndpoints) traj.states.push_back(y);
        if (storage == StorageMode::kFull) traj.stages.push_back(std::move(r.stages));
    }
    if (storage == StorageMode::kEndpoints) traj.states.push_back(y);
    return traj;
}

ForwardTrajectory integrate(const SplitOdeSystem& system, const GarkTableau& tableau,
                            const TimeGrid& grid, const Vector& y0, const StageSolverConfig& cfg,
                            StorageMode storage) {
    return integrate(GarkStepper(system, tableau, cfg), grid, y0, storage);
}

ForwardTrajectory integrate(const ProblemInstance& problem, const GarkTableau& tableau,
                            const TimeGrid& grid, const StageSolverConfig& cfg, StorageMode storage) {
    return integrate(*problem.system, tableau, grid, problem.initial, cfg, storage);
}

GarkTableau align_with_problem(const GarkTableau& tableau, const ProblemInstance& problem) {
    if (tableau.num_partitions() != 2) return tableau;
    auto has_implicit = [&](int q) {
        for (int i = 0; i < tableau.stages(q); ++i) {
            if (tableau.is_implicit(q, i)) return true;
        }
        return false;
    };
    const bool i0 = has_implicit(0), i1 = has_implicit(1);
    if (i0 == i1) return tableau;
    const int implicit = i0 ? 0 : 1;
    if (implicit == problem.stiff_partition) return tableau;
    return permute_partitions(tableau, {1, 0});
}

}  // namespace gark
