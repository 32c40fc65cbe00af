#include "gark/linalg.hpp"

#include <cmath>
#include <variant>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "gark/errors.hpp"

namespace gark {

namespace {

using DirectSolver = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
using IterativeSolver = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper>;

bool is_symmetric(const SparseMatrix& m) {
    const SparseMatrix diff = m - SparseMatrix(m.transpose());
    const double scale = std::max(1.0, m.norm());
    return diff.norm() <= 1e-13 * scale;
}

}  // namespace

struct ShiftedSolver::Impl {
    SparseMatrix matrix;
    std::unique_ptr<DirectSolver> direct;
    std::unique_ptr<IterativeSolver> iterative;
};

SparseMatrix sparse_identity(Eigen::Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

ShiftedSolver::ShiftedSolver(const SparseMatrix& jacobian, double shift, LinearSolverKind kind,
                             double cg_tolerance)
    : impl_(std::make_unique<Impl>()), shift_(shift) {
    impl_->matrix = sparse_identity(jacobian.rows()) - shift * jacobian;
    impl_->matrix.makeCompressed();
    if (kind == LinearSolverKind::kSparseDirect) {
        impl_->direct = std::make_unique<DirectSolver>();
        impl_->direct->compute(impl_->matrix);
        if (impl_->direct->info() != Eigen::Success) {
            throw LinearSolveError("sparse LU factorization of the stage matrix failed");
        }
    } else {
        if (!is_symmetric(impl_->matrix)) {
            throw InvalidParameter("conjugate-gradient stage solves require a symmetric stage matrix");
        }
        impl_->iterative = std::make_unique<IterativeSolver>();
        impl_->iterative->setTolerance(cg_tolerance);
        impl_->iterative->compute(impl_->matrix);
    }
}

ShiftedSolver::~ShiftedSolver() = default;
ShiftedSolver::ShiftedSolver(ShiftedSolver&&) noexcept = default;
ShiftedSolver& ShiftedSolver::operator=(ShiftedSolver&&) noexcept = default;

Vector ShiftedSolver::solve(const Vector& rhs) const {
    if (impl_->direct) {
        Vector x = impl_->direct->solve(rhs);
        if (impl_->direct->info() != Eigen::Success) {
            throw LinearSolveError("sparse LU solve failed");
        }
        return x;
    }
    Vector x = impl_->iterative->solve(rhs);
    if (impl_->iterative->info() != Eigen::Success) {
        throw LinearSolveError("conjugate-gradient stage solve did not converge");
    }
    return x;
}

Vector ShiftedSolver::solve_transpose(const Vector& rhs) const {
    if (impl_->direct) {
        Vector x = impl_->direct->transpose().solve(rhs);
        return x;
    }
    // symmetric by construction
    return solve(rhs);
}

const ShiftedSolver& FactorizationCache::get(int partition, const SparseMatrix& jacobian,
                                             double shift) {
    std::lock_guard lock(mutex_);
    for (const auto& e : entries_) {
        if (e.partition == partition &&
            std::abs(e.shift - shift) <= 1e-13 * std::max(std::abs(shift), std::abs(e.shift))) {
            return *e.solver;
        }
    }
    entries_.push_back(
        {partition, shift, std::make_unique<ShiftedSolver>(jacobian, shift, kind_, cg_tolerance_)});
    return *entries_.back().solver;
}

std::size_t FactorizationCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

}  // namespace gark
