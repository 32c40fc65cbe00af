#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace gark {

/// One stage of one partition, 0-based.
struct StageRef {
    int partition = 0;
    int stage = 0;

    friend bool operator==(const StageRef&, const StageRef&) = default;
};

/// Coefficients of a GARK method with P partitions.
///
/// coupling[q][m] is A^{q,m} of shape s(q) x s(m). Stage (q,i) evaluates
/// f^{(q)} at t_n + c^{(q,q)}_i h. The constructor checks shapes only; use
/// validate() for the algebraic invariants.
class GarkTableau {
public:
    using Matrix = Eigen::MatrixXd;
    using Weights = Eigen::VectorXd;

    GarkTableau(std::vector<std::vector<Matrix>> coupling, std::vector<Weights> weights,
                std::vector<StageRef> schedule, int declared_order, std::string name = {},
                bool internally_consistent = false,
                std::optional<StageRef> stiff_stage = std::nullopt);

    int num_partitions() const noexcept { return static_cast<int>(weights_.size()); }
    int stages(int q) const { return static_cast<int>(weights_.at(q).size()); }
    int total_stages() const noexcept;

    const Matrix& a(int q, int m) const { return coupling_.at(q).at(m); }
    double a(int q, int m, int i, int j) const { return coupling_[q][m](i, j); }
    const Weights& b(int q) const { return weights_.at(q); }

    /// c^{(q,m)} = A^{q,m} 1
    Eigen::VectorXd abscissae(int q, int m) const;
    /// c^{(q,q)}_i, used for stage times.
    double stage_time_fraction(int q, int i) const;
    bool is_implicit(int q, int i) const { return coupling_[q][q](i, i) != 0.0; }

    const std::vector<StageRef>& schedule() const noexcept { return schedule_; }
    int declared_order() const noexcept { return declared_order_; }
    const std::string& name() const noexcept { return name_; }
    bool declares_internal_consistency() const noexcept { return internally_consistent_; }
    /// Stage whose value equals y_{n+1} when the method is stiffly accurate.
    const std::optional<StageRef>& stiff_stage() const noexcept { return stiff_stage_; }

private:
    std::vector<std::vector<Matrix>> coupling_;
    std::vector<Weights> weights_;
    std::vector<StageRef> schedule_;
    int declared_order_;
    std::string name_;
    bool internally_consistent_;
    std::optional<StageRef> stiff_stage_;
};

/// Transformed coefficients for the GARK-form adjoint.
///
/// coefficients().a(m,q)(i,j) = b^{(q)}_j a^{q,m}_{j,i} / b^{(m)}_i, weights
/// are copied, and the schedule is the reverse of the forward schedule.
class AdjointTableau {
public:
    explicit AdjointTableau(GarkTableau coefficients) : coefficients_(std::move(coefficients)) {}

    const GarkTableau& coefficients() const noexcept { return coefficients_; }
    const Eigen::MatrixXd& abar(int q, int m) const { return coefficients_.a(q, m); }
    const Eigen::VectorXd& bbar(int q) const { return coefficients_.b(q); }
    const std::vector<StageRef>& schedule() const noexcept { return coefficients_.schedule(); }

private:
    GarkTableau coefficients_;
};

struct ValidationIssue {
    std::string invariant;  ///< "shape", "internal_consistency", "schedule", "order1", "order2", "stiff_accuracy"
    std::string detail;
    double residual = 0.0;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
    bool has(const std::string& invariant) const;
};

inline constexpr double kCoefficientTolerance = 1e-12;

/// Two-stage second-order IMEX GARK method. Partition 0 is explicit,
/// partition 1 implicit. gamma other than 1 -+ sqrt(2)/2 is accepted with a
/// warning on stderr.
GarkTableau build_imex22(double gamma, double alpha);
GarkTableau build_imex22();

double imex22_default_gamma();

/// Reorders partitions: partition p of the result is partition perm[p] of t.
GarkTableau permute_partitions(const GarkTableau& t, const std::vector<int>& perm);

/// Throws UnsupportedTableau naming the first zero weight.
AdjointTableau adjoint_coefficients(const GarkTableau& t);

ValidationReport validate(const GarkTableau& t);

nlohmann::json to_json(const GarkTableau& t);
GarkTableau tableau_from_json(const nlohmann::json& j);

}  // namespace gark
