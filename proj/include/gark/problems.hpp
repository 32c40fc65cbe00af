#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gark/mesh.hpp"
#include "gark/split_system.hpp"
#include "json.hpp"

namespace gark {

/// A split system bound to a grid, with initial data, time span and goal.
struct ProblemInstance {
    std::string name;
    std::shared_ptr<const SplitOdeSystem> system;
    std::optional<TensorGrid2D> grid;
    int species = 1;
    Vector initial;
    double t0 = 0.0;
    double tF = 1.0;
    std::shared_ptr<const GoalFunction> goal;
    /// Exact semi-discrete state at time t, when known.
    std::function<Vector(double)> exact;
    /// Partition that the implicit side of an IMEX method should integrate.
    int stiff_partition = 0;
};

/// A problem definition that can be instantiated on any grid of its domain.
///
/// Configured from {"problem", "grid": {"nx", "ny"}, "t0", "tF", "params": {...}}.
/// Known problems: calvo, gray_scott, bsvd, toy_linear, zero.
class ProblemFamily {
public:
    explicit ProblemFamily(nlohmann::json config);

    const std::string& problem() const noexcept { return problem_; }
    double t0() const noexcept { return t0_; }
    double tF() const noexcept { return tF_; }
    const nlohmann::json& config() const noexcept { return config_; }
    bool spatial() const noexcept;

    /// Uniform grid of the problem's domain with nx x ny cells.
    TensorGrid2D uniform_grid(int nx, int ny) const;
    /// Grid named in the configuration.
    TensorGrid2D default_grid() const;

    ProblemInstance instantiate(const TensorGrid2D& grid) const;
    /// For grid-free problems (toy_linear, zero).
    ProblemInstance instantiate() const;

private:
    nlohmann::json config_;
    std::string problem_;
    double t0_;
    double tF_;
};

ProblemInstance make_calvo(const TensorGrid2D& grid, double nu = 0.1, double t0 = 0.0, double tF = 1.5);
ProblemInstance make_gray_scott(const TensorGrid2D& grid, double f = 0.024, double k = 0.06,
                                double d_u = 8e-2, double d_v = 4e-2, double t0 = 0.0,
                                double tF = 50.0, std::vector<bool> goal_species = {});
ProblemInstance make_bsvd(const TensorGrid2D& grid, double t0 = 0.0, double tF = 7.0);

/// y' = A0 y + A1 y with small fixed matrices; exact solution via the matrix
/// exponential.
ProblemInstance make_toy_linear(double t0 = 0.0, double tF = 1.0);
/// y' = 0 on d unknowns.
ProblemInstance make_zero(Eigen::Index d = 4, double t0 = 0.0, double tF = 1.0);

namespace calvo {
/// Piecewise quadratic x-profile, C1 at x = 2.
double g(double x);
double g_second(double x);
double exact(double t, double x, double y);
/// u*_t - nu Lap u* - u* + u*^3
double forcing(double t, double x, double y, double nu);
}  // namespace calvo

namespace bsvd {
double diffusion(double x, double y);
double reaction(double u);
double initial(double x, double y);
}  // namespace bsvd

namespace gray_scott {
/// (u, v) at t = 0.
std::pair<double, double> initial(double x, double y);
}  // namespace gray_scott

}  // namespace gark
