#pragma once

#include <memory>
#include <vector>

#include "gark/integrator.hpp"
#include "gark/linalg.hpp"
#include "gark/split_system.hpp"
#include "gark/tableau.hpp"

namespace gark {

/// Jacobians J^{(q)}(T_{n,i}, Y^{(q)}_{n,i}) of one step, indexed [q][i].
using StageJacobians = std::vector<std::vector<SparseMatrix>>;

StageJacobians stage_jacobians(const SplitOdeSystem& system, const StageRecord& stages);

/// Stage adjoints of one step, indexed [q][i]. Families that were not
/// computed are left empty.
struct AdjointStageRecord {
    std::vector<std::vector<Vector>> theta;
    std::vector<std::vector<Vector>> mu;
    std::vector<std::vector<Vector>> ell;
    std::vector<std::vector<Vector>> Lambda;  ///< only with keep_Lambda
};

struct AdjointStepResult {
    Vector lambda;  ///< lambda_n
    AdjointStageRecord stages;
};

/// theta^{(q)}_i = h J^T (b_i lambda_{n+1} + sum a^{m,q}_{j,i} theta^{(m)}_j),
/// lambda_n = lambda_{n+1} + sum theta.
AdjointStepResult adjoint_step_theta(const SplitOdeSystem& system, const GarkTableau& tableau,
                                     const StageRecord& stages, double h, const Vector& lambda_next,
                                     FactorizationCache* cache = nullptr,
                                     const StageJacobians* jacobians = nullptr);

/// mu^{(q)}_i = h b_i lambda_{n+1} + h sum a^{m,q}_{j,i} J^{(m)T}_j mu^{(m)}_j,
/// lambda_n = lambda_{n+1} + sum J^T mu. theta = J^T mu is returned as well.
AdjointStepResult adjoint_step_mu(const SplitOdeSystem& system, const GarkTableau& tableau,
                                  const StageRecord& stages, double h, const Vector& lambda_next,
                                  FactorizationCache* cache = nullptr,
                                  const StageJacobians* jacobians = nullptr);

/// Lambda^{(q)}_i = lambda_{n+1} + h sum abar^{q,m}_{i,j} ell^{(m)}_j,
/// ell = J^T Lambda, lambda_n = lambda_{n+1} + h sum bbar ell.
AdjointStepResult adjoint_step_ell(const SplitOdeSystem& system, const AdjointTableau& adjoint,
                                   const StageRecord& stages, double h, const Vector& lambda_next,
                                   FactorizationCache* cache = nullptr,
                                   const StageJacobians* jacobians = nullptr,
                                   bool keep_Lambda = false);

struct SweepOptions {
    /// Also run the theta and ell recursions on their own and keep their lambdas.
    bool independent_forms = false;
    bool store_mu = true;
    /// theta = J^T mu and ell = theta/(h b) from the production recursion.
    bool store_theta = true;
    bool store_ell = true;
    bool keep_Lambda = false;
    std::shared_ptr<FactorizationCache> cache;
};

struct AdjointTrajectory {
    TimeGrid grid;
    /// lambda_0..lambda_N from the production (mu) recursion.
    std::vector<Vector> lambda;
    /// One record per step.
    std::vector<AdjointStageRecord> stages;
    /// Filled with independent_forms.
    std::vector<Vector> lambda_theta;
    std::vector<Vector> lambda_ell;
    std::vector<AdjointStageRecord> independent_stages;
};

/// Reverse sweep along a fully stored forward trajectory, starting from
/// lambda_N = Q_y(y_N).
AdjointTrajectory sweep(const SplitOdeSystem& system, const GarkTableau& tableau,
                        const ForwardTrajectory& forward, const GoalFunction& goal,
                        const SweepOptions& options = {});

}  // namespace gark
