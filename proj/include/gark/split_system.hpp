#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gark/linalg.hpp"
#include "gark/mesh.hpp"

namespace gark {

/// y' = sum_q f^{(q)}(t, y).
///
/// Implementations are pure functions of (t, y) and safe to call concurrently.
class SplitOdeSystem {
public:
    virtual ~SplitOdeSystem() = default;

    virtual Eigen::Index dimension() const = 0;
    virtual int num_partitions() const = 0;

    virtual void evaluate(int q, double t, const Vector& y, Vector& out) const = 0;
    virtual SparseMatrix jacobian(int q, double t, const Vector& y) const = 0;

    /// True when J^{(q)} is independent of t and y, so that stage matrices can
    /// be factored once per distinct step coefficient.
    virtual bool is_linear(int /*q*/) const { return false; }
    virtual std::string partition_name(int q) const { return "partition" + std::to_string(q); }

    Vector evaluate(int q, double t, const Vector& y) const;
    Vector jacobian_action(int q, double t, const Vector& y, const Vector& v) const;
    Vector jacobian_transpose_action(int q, double t, const Vector& y, const Vector& v) const;
    /// Sum over all partitions.
    Vector evaluate_total(double t, const Vector& y) const;
};

/// Scalar goal Q(y) with gradient.
class GoalFunction {
public:
    virtual ~GoalFunction() = default;
    virtual double value(const Vector& y) const = 0;
    virtual Vector gradient(const Vector& y) const = 0;
};

class LinearGoal final : public GoalFunction {
public:
    explicit LinearGoal(Vector weights) : w_(std::move(weights)) {}
    double value(const Vector& y) const override { return w_.dot(y); }
    Vector gradient(const Vector&) const override { return w_; }
    const Vector& weights() const noexcept { return w_; }

private:
    Vector w_;
};

class FunctionGoal final : public GoalFunction {
public:
    FunctionGoal(std::function<double(const Vector&)> value, std::function<Vector(const Vector&)> gradient)
        : value_(std::move(value)), gradient_(std::move(gradient)) {}
    double value(const Vector& y) const override { return value_(y); }
    Vector gradient(const Vector& y) const override { return gradient_(y); }

private:
    std::function<double(const Vector&)> value_;
    std::function<Vector(const Vector&)> gradient_;
};

/// System assembled from callables, one per partition.
class FunctionSystem final : public SplitOdeSystem {
public:
    using Rhs = std::function<void(double, const Vector&, Vector&)>;
    using Jac = std::function<SparseMatrix(double, const Vector&)>;

    struct Partition {
        Rhs f;
        Jac jacobian;
        bool linear = false;
        std::string name;
    };

    FunctionSystem(Eigen::Index dimension, std::vector<Partition> partitions)
        : dim_(dimension), parts_(std::move(partitions)) {}

    Eigen::Index dimension() const override { return dim_; }
    int num_partitions() const override { return static_cast<int>(parts_.size()); }
    void evaluate(int q, double t, const Vector& y, Vector& out) const override;
    SparseMatrix jacobian(int q, double t, const Vector& y) const override;
    bool is_linear(int q) const override { return parts_.at(q).linear; }
    std::string partition_name(int q) const override;

private:
    Eigen::Index dim_;
    std::vector<Partition> parts_;
};

/// Diffusion-reaction on a tensor grid, species-major state.
/// Partition 0 is the constant linear diffusion operator, partition 1 the
/// pointwise reaction (possibly time dependent).
class ReactionDiffusionSystem final : public SplitOdeSystem {
public:
    /// Reaction at one node: (t, node index, values of each species) -> rates.
    using Reaction = std::function<void(double t, Eigen::Index node, const double* u, double* rate)>;
    /// Local Jacobian d rate_a / d u_b, written row-major into jac[a*S+b].
    using ReactionJacobian =
        std::function<void(double t, Eigen::Index node, const double* u, double* jac)>;

    ReactionDiffusionSystem(int species, Eigen::Index nodes, SparseMatrix diffusion,
                            Reaction reaction, ReactionJacobian reaction_jacobian);

    Eigen::Index dimension() const override { return species_ * nodes_; }
    int num_partitions() const override { return 2; }
    void evaluate(int q, double t, const Vector& y, Vector& out) const override;
    SparseMatrix jacobian(int q, double t, const Vector& y) const override;
    bool is_linear(int q) const override { return q == 0; }
    std::string partition_name(int q) const override { return q == 0 ? "diffusion" : "reaction"; }

    const SparseMatrix& diffusion() const noexcept { return diffusion_; }

private:
    int species_;
    Eigen::Index nodes_;
    SparseMatrix diffusion_;
    Reaction reaction_;
    ReactionJacobian reaction_jacobian_;
};

/// 5-point flux-form operator for div(k grad u) on the grid's unknowns:
/// (Lu)_i = sum over directions of (F_{i+1/2} - F_{i-1/2}) / w_i with
/// F_{i+1/2} = k_{i+1/2} (u_{i+1} - u_i)/(x_{i+1} - x_i), arithmetic face
/// averages of k, w_i the half-interval sum. Neumann edges drop the outer flux,
/// Dirichlet edges drop the constrained neighbour.
SparseMatrix discretize_laplacian(const TensorGrid2D& grid,
                                  const std::function<double(double, double)>& k);
SparseMatrix discretize_laplacian(const TensorGrid2D& grid);

/// Trapezoid quadrature over the domain. With `species` > 1 the weights act on
/// the species whose mask entry is true (default: only the first).
std::shared_ptr<LinearGoal> integral_goal(const TensorGrid2D& grid, int species = 1,
                                          std::vector<bool> species_mask = {});

}  // namespace gark
