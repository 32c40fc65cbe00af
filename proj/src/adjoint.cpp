#include "gark/adjoint.hpp"

#include <optional>

#include "gark/errors.hpp"

namespace gark {

namespace {

template <class T>
std::vector<std::vector<T>> shaped(const GarkTableau& t) {
    std::vector<std::vector<T>> v(t.num_partitions());
    for (int q = 0; q < t.num_partitions(); ++q) v[q].resize(t.stages(q));
    return v;
}

/// Solves (I - c J)^T x = rhs, reusing cached factorizations of linear partitions.
Vector transposed_stage_solve(const SplitOdeSystem& system, int q, const SparseMatrix& J, double c,
                              const Vector& rhs, FactorizationCache* cache) {
    try {
        if (cache != nullptr && system.is_linear(q)) return cache->get(q, J, c).solve_transpose(rhs);
        const LinearSolverKind kind = cache != nullptr ? cache->kind() : LinearSolverKind::kSparseDirect;
        return ShiftedSolver(J, c, kind).solve_transpose(rhs);
    } catch (const LinearSolveError& e) {
        throw AdjointStepError(std::string("adjoint stage solve failed: ") + e.what());
    } catch (const InvalidParameter& e) {
        throw AdjointStepError(std::string("adjoint stage solve failed: ") + e.what());
    }
}

const StageJacobians& ensure_jacobians(const SplitOdeSystem& system, const StageRecord& stages,
                                       const StageJacobians* given, StageJacobians& storage) {
    if (given != nullptr) return *given;
    storage = stage_jacobians(system, stages);
    return storage;
}

void check_inputs(const SplitOdeSystem& system, const GarkTableau& t, const StageRecord& stages,
                  const Vector& lambda_next) {
    if (t.num_partitions() != system.num_partitions()) {
        throw InvalidParameter("tableau and system have different partition counts");
    }
    if (static_cast<int>(stages.values.size()) != t.num_partitions()) {
        throw InvalidParameter("stage record does not match the tableau");
    }
    if (lambda_next.size() != system.dimension()) throw InvalidParameter("adjoint has the wrong dimension");
}

}  // namespace

StageJacobians stage_jacobians(const SplitOdeSystem& system, const StageRecord& stages) {
    StageJacobians J(stages.values.size());
    for (std::size_t q = 0; q < stages.values.size(); ++q) {
        const int qi = static_cast<int>(q);
        SparseMatrix shared;
        for (std::size_t i = 0; i < stages.values[q].size(); ++i) {
            if (system.is_linear(qi) && i > 0) {
                J[q].push_back(shared);
                continue;
            }
            J[q].push_back(system.jacobian(qi, stages.times[q][i], stages.values[q][i]));
            if (i == 0) shared = J[q].back();
        }
    }
    return J;
}

AdjointStepResult adjoint_step_theta(const SplitOdeSystem& system, const GarkTableau& t,
                                     const StageRecord& stages, double h, const Vector& lambda_next,
                                     FactorizationCache* cache, const StageJacobians* jacobians) {
    check_inputs(system, t, stages, lambda_next);
    StageJacobians local;
    const auto& J = ensure_jacobians(system, stages, jacobians, local);
    AdjointStepResult out;
    auto& theta = out.stages.theta = shaped<Vector>(t);
    const auto& sched = t.schedule();
    for (auto it = sched.rbegin(); it != sched.rend(); ++it) {
        const int q = it->partition, i = it->stage;
        Vector acc = t.b(q)(i) * lambda_next;
        for (auto jt = sched.rbegin(); jt != it; ++jt) {
            const double a = t.a(jt->partition, q, jt->stage, i);
            if (a != 0.0) acc += a * theta[jt->partition][jt->stage];
        }
        Vector rhs = h * (J[q][i].transpose() * acc);
        const double c = h * t.a(q, q, i, i);
        theta[q][i] = c == 0.0 ? std::move(rhs) : transposed_stage_solve(system, q, J[q][i], c, rhs, cache);
    }
    out.lambda = lambda_next;
    for (auto it = sched.rbegin(); it != sched.rend(); ++it) out.lambda += theta[it->partition][it->stage];
    return out;
}

AdjointStepResult adjoint_step_mu(const SplitOdeSystem& system, const GarkTableau& t,
                                  const StageRecord& stages, double h, const Vector& lambda_next,
                                  FactorizationCache* cache, const StageJacobians* jacobians) {
    check_inputs(system, t, stages, lambda_next);
    StageJacobians local;
    const auto& J = ensure_jacobians(system, stages, jacobians, local);
    AdjointStepResult out;
    auto& mu = out.stages.mu = shaped<Vector>(t);
    auto& theta = out.stages.theta = shaped<Vector>(t);
    const auto& sched = t.schedule();
    for (auto it = sched.rbegin(); it != sched.rend(); ++it) {
        const int q = it->partition, i = it->stage;
        Vector acc = t.b(q)(i) * lambda_next;
        for (auto jt = sched.rbegin(); jt != it; ++jt) {
            const double a = t.a(jt->partition, q, jt->stage, i);
            if (a != 0.0) acc += a * theta[jt->partition][jt->stage];
        }
        Vector rhs = h * acc;
        const double c = h * t.a(q, q, i, i);
        mu[q][i] = c == 0.0 ? std::move(rhs) : transposed_stage_solve(system, q, J[q][i], c, rhs, cache);
        theta[q][i] = J[q][i].transpose() * mu[q][i];
    }
    out.lambda = lambda_next;
    for (auto it = sched.rbegin(); it != sched.rend(); ++it) out.lambda += theta[it->partition][it->stage];
    return out;
}

AdjointStepResult adjoint_step_ell(const SplitOdeSystem& system, const AdjointTableau& adj,
                                   const StageRecord& stages, double h, const Vector& lambda_next,
                                   FactorizationCache* cache, const StageJacobians* jacobians,
                                   bool keep_Lambda) {
    const GarkTableau& t = adj.coefficients();
    check_inputs(system, t, stages, lambda_next);
    StageJacobians local;
    const auto& J = ensure_jacobians(system, stages, jacobians, local);
    AdjointStepResult out;
    auto& ell = out.stages.ell = shaped<Vector>(t);
    if (keep_Lambda) out.stages.Lambda = shaped<Vector>(t);
    const auto& sched = adj.schedule();  // already reversed
    for (auto it = sched.begin(); it != sched.end(); ++it) {
        const int q = it->partition, i = it->stage;
        Vector Lam = lambda_next;
        for (auto jt = sched.begin(); jt != it; ++jt) {
            const double a = t.a(q, jt->partition, i, jt->stage);
            if (a != 0.0) Lam += (h * a) * ell[jt->partition][jt->stage];
        }
        Vector rhs = J[q][i].transpose() * Lam;
        const double abar_ii = t.a(q, q, i, i);
        const double c = h * abar_ii;
        ell[q][i] = c == 0.0 ? std::move(rhs) : transposed_stage_solve(system, q, J[q][i], c, rhs, cache);
        if (keep_Lambda) {
            if (c != 0.0) Lam += c * ell[q][i];
            out.stages.Lambda[q][i] = std::move(Lam);
        }
    }
    out.lambda = lambda_next;
    for (const auto& s : sched) {
        out.lambda += (h * t.b(s.partition)(s.stage)) * ell[s.partition][s.stage];
    }
    return out;
}

AdjointTrajectory sweep(const SplitOdeSystem& system, const GarkTableau& tableau,
                        const ForwardTrajectory& forward, const GoalFunction& goal,
                        const SweepOptions& options) {
    if (forward.storage != StorageMode::kFull || forward.stages.size() != forward.grid.num_steps()) {
        throw InvalidParameter("adjoint sweep needs a fully stored forward trajectory");
    }
    const std::size_t N = forward.grid.num_steps();
    auto cache = options.cache;
    if (!cache) cache = std::make_shared<FactorizationCache>();

    bool nonzero_weights = true;
    for (int q = 0; q < tableau.num_partitions(); ++q) {
        for (int i = 0; i < tableau.stages(q); ++i) nonzero_weights &= tableau.b(q)(i) != 0.0;
    }
    std::optional<AdjointTableau> adj;
    if (nonzero_weights) adj = adjoint_coefficients(tableau);
    if (options.independent_forms && !adj) {
        throw UnsupportedTableau("independent ell recursion needs nonzero weights", -1, -1);
    }

    AdjointTrajectory out{forward.grid, {}, {}, {}, {}, {}};
    out.lambda.assign(N + 1, Vector());
    out.stages.resize(N);
    out.lambda[N] = goal.gradient(forward.final_state());
    if (options.independent_forms) {
        out.lambda_theta.assign(N + 1, Vector());
        out.lambda_ell.assign(N + 1, Vector());
        out.independent_stages.resize(N);
        out.lambda_theta[N] = out.lambda[N];
        out.lambda_ell[N] = out.lambda[N];
    }

    for (std::size_t n = N; n-- > 0;) {
        const double h = forward.grid.step(n);
        const StageRecord& rec = forward.stages[n];
        const StageJacobians J = stage_jacobians(system, rec);
        AdjointStepResult r = adjoint_step_mu(system, tableau, rec, h, out.lambda[n + 1], cache.get(), &J);
        out.lambda[n] = std::move(r.lambda);
        AdjointStageRecord& s = out.stages[n];
        if (options.store_ell && adj) {
            s.ell.resize(r.stages.theta.size());
            for (std::size_t q = 0; q < r.stages.theta.size(); ++q) {
                for (std::size_t i = 0; i < r.stages.theta[q].size(); ++i) {
                    s.ell[q].push_back(r.stages.theta[q][i] / (h * tableau.b(static_cast<int>(q))(i)));
                }
            }
        }
        if (options.store_theta) s.theta = std::move(r.stages.theta);
        if (options.store_mu) s.mu = std::move(r.stages.mu);

        if (options.independent_forms) {
            AdjointStepResult th =
                adjoint_step_theta(system, tableau, rec, h, out.lambda_theta[n + 1], cache.get(), &J);
            AdjointStepResult el = adjoint_step_ell(system, *adj, rec, h, out.lambda_ell[n + 1],
                                                    cache.get(), &J, options.keep_Lambda);
            out.lambda_theta[n] = std::move(th.lambda);
            out.lambda_ell[n] = std::move(el.lambda);
            auto& ind = out.independent_stages[n];
            ind.theta = std::move(th.stages.theta);
            ind.ell = std::move(el.stages.ell);
            ind.Lambda = std::move(el.stages.Lambda);
        }
    }
    return out;
}

}  // namespace gark
