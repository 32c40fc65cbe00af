#pragma once

#include <memory>
#include <vector>

#include "gark/linalg.hpp"
#include "gark/split_system.hpp"

namespace gark::test {

/// y' = A0 y + A1 y with dense matrices stored sparse.
inline std::shared_ptr<FunctionSystem> linear_system(const Eigen::MatrixXd& a0, const Eigen::MatrixXd& a1) {
    auto part = [](const Eigen::MatrixXd& a, const char* name) {
        const SparseMatrix s = a.sparseView();
        return FunctionSystem::Partition{
            [a](double, const Vector& y, Vector& out) { out = a * y; },
            [s](double, const Vector&) { return s; },
            true,
            name,
        };
    };
    return std::make_shared<FunctionSystem>(a0.rows(), std::vector{part(a0, "p0"), part(a1, "p1")});
}

/// Scalar y' = mu0 y + mu1 y.
inline std::shared_ptr<FunctionSystem> scalar_system(double mu0, double mu1) {
    return linear_system(Eigen::MatrixXd::Constant(1, 1, mu0), Eigen::MatrixXd::Constant(1, 1, mu1));
}

inline Vector scalar(double v) { return Vector::Constant(1, v); }

inline double rel_inf(const Vector& a, const Vector& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), 1e-300);
}

}  // namespace gark::test
