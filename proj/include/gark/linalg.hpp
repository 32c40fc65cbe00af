#pragma once

#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gark {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class LinearSolverKind {
    kSparseDirect,
    kConjugateGradient,  ///< symmetric stage matrices only
};

/// Factorized stage matrix M = I - shift * J.
///
/// Solves with M and with M^T share one factorization when the direct
/// solver is used; the iterative path keeps both operators.
class ShiftedSolver {
public:
    ShiftedSolver(const SparseMatrix& jacobian, double shift, LinearSolverKind kind,
                  double cg_tolerance = 1e-12);
    ~ShiftedSolver();
    ShiftedSolver(ShiftedSolver&&) noexcept;
    ShiftedSolver& operator=(ShiftedSolver&&) noexcept;

    Vector solve(const Vector& rhs) const;
    Vector solve_transpose(const Vector& rhs) const;

    double shift() const noexcept { return shift_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double shift_;
};

/// Factorizations of I - c*J for partitions with a constant Jacobian, keyed
/// on (partition, c). Keys match when c agrees to 1e-13 relative so that
/// step sizes differing only by rounding share a factorization.
class FactorizationCache {
public:
    FactorizationCache(LinearSolverKind kind = LinearSolverKind::kSparseDirect,
                       double cg_tolerance = 1e-12)
        : kind_(kind), cg_tolerance_(cg_tolerance) {}

    const ShiftedSolver& get(int partition, const SparseMatrix& jacobian, double shift);

    std::size_t size() const;
    LinearSolverKind kind() const noexcept { return kind_; }

private:
    struct Entry {
        int partition;
        double shift;
        std::unique_ptr<ShiftedSolver> solver;
    };
    LinearSolverKind kind_;
    double cg_tolerance_;
    mutable std::mutex mutex_;
    std::vector<Entry> entries_;
};

SparseMatrix sparse_identity(Eigen::Index n);

}  // namespace gark
