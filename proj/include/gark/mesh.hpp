#pragma once

#include <array>
#include <cstddef>
#include <set>
#include <utility>
#include <vector>

#include "gark/linalg.hpp"
#include "json.hpp"

namespace gark {

/// Strictly increasing time nodes t_0 < ... < t_N with N >= 1.
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> nodes);

    /// N equal steps on [t0, tF]; the last node is exactly tF.
    static TimeGrid uniform(double t0, double tF, std::size_t steps);
    /// Equal steps of size dt; (tF - t0)/dt must be an integer to 1e-9.
    static TimeGrid with_step(double t0, double tF, double dt);

    std::size_t num_steps() const noexcept { return nodes_.size() - 1; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    double t(std::size_t n) const { return nodes_[n]; }
    double step(std::size_t n) const { return nodes_[n + 1] - nodes_[n]; }
    double max_step() const;
    double t0() const noexcept { return nodes_.front(); }
    double tF() const noexcept { return nodes_.back(); }

    /// Sub-grid with nodes t_first .. t_N.
    TimeGrid tail(std::size_t first) const;

private:
    std::vector<double> nodes_;
};

/// Inserts t_n + h_n/2 into every step.
TimeGrid halve_all_steps(const TimeGrid& g);
/// Inserts t_n + h_n/2 into the steps listed (0-based step indices).
TimeGrid halve_marked_steps(const TimeGrid& g, const std::set<std::size_t>& steps);

/// Index of each node of `coarse` inside `fine`; throws TimeGridMismatch when a
/// coarse node is missing.
std::vector<std::size_t> embed_time_nodes(const TimeGrid& coarse, const TimeGrid& fine);

enum class BoundaryKind { kDirichletZero, kNeumannZero };

/// Edge order: left (x = x_0), right, bottom (y = y_0), top.
struct BoundaryCondition {
    std::array<BoundaryKind, 4> edges{BoundaryKind::kNeumannZero, BoundaryKind::kNeumannZero,
                                      BoundaryKind::kNeumannZero, BoundaryKind::kNeumannZero};

    static BoundaryCondition all(BoundaryKind k) { return {{k, k, k, k}}; }
    friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

using CellIndex = std::pair<int, int>;

/// Tensor-product grid with nodes (x_i, y_j). Unknowns are the nodes not on a
/// Dirichlet edge, numbered row by row with x running fastest.
class TensorGrid2D {
public:
    TensorGrid2D(std::vector<double> xs, std::vector<double> ys, BoundaryCondition bc);

    static TensorGrid2D uniform(double x0, double x1, int nx_cells, double y0, double y1,
                                int ny_cells, BoundaryCondition bc);

    const std::vector<double>& xs() const noexcept { return xs_; }
    const std::vector<double>& ys() const noexcept { return ys_; }
    const BoundaryCondition& bc() const noexcept { return bc_; }

    int nx_cells() const noexcept { return static_cast<int>(xs_.size()) - 1; }
    int ny_cells() const noexcept { return static_cast<int>(ys_.size()) - 1; }
    int nx_nodes() const noexcept { return static_cast<int>(xs_.size()); }
    int ny_nodes() const noexcept { return static_cast<int>(ys_.size()); }
    std::size_t num_cells() const noexcept {
        return static_cast<std::size_t>(nx_cells()) * static_cast<std::size_t>(ny_cells());
    }

    Eigen::Index num_unknowns() const noexcept { return num_unknowns_; }
    /// -1 for nodes fixed by a Dirichlet edge.
    Eigen::Index unknown_index(int i, int j) const { return node_to_unknown_[node_id(i, j)]; }
    std::pair<int, int> unknown_node(Eigen::Index k) const { return unknown_to_node_[k]; }
    bool is_unknown(int i, int j) const { return unknown_index(i, j) >= 0; }

    /// Trapezoid weights per node, products of half-interval sums.
    std::vector<double> node_weights() const;
    double cell_area(int i, int j) const {
        return (xs_[i + 1] - xs_[i]) * (ys_[j + 1] - ys_[j]);
    }

    friend bool operator==(const TensorGrid2D& a, const TensorGrid2D& b) {
        return a.xs_ == b.xs_ && a.ys_ == b.ys_ && a.bc_ == b.bc_;
    }

private:
    std::size_t node_id(int i, int j) const {
        return static_cast<std::size_t>(j) * xs_.size() + static_cast<std::size_t>(i);
    }

    std::vector<double> xs_;
    std::vector<double> ys_;
    BoundaryCondition bc_;
    std::vector<Eigen::Index> node_to_unknown_;
    std::vector<std::pair<int, int>> unknown_to_node_;
    Eigen::Index num_unknowns_ = 0;
};

TensorGrid2D refine_uniform(const TensorGrid2D& g);

/// Bisects every x- and y-interval that bounds a marked cell (i, j).
TensorGrid2D refine_marked(const TensorGrid2D& g, const std::set<CellIndex>& marked_cells);

/// Transfer between a coarse grid and a fine grid containing all coarse nodes.
/// Vectors holding several species stacked one after another are handled
/// block by block.
class GridTransfer {
public:
    GridTransfer(const TensorGrid2D& coarse, const TensorGrid2D& fine);

    const TensorGrid2D& coarse() const noexcept { return coarse_; }
    const TensorGrid2D& fine() const noexcept { return fine_; }

    /// Nodal injection fine -> coarse.
    Vector project(const Vector& fine_values) const;
    /// Bilinear interpolation coarse -> fine.
    Vector prolong(const Vector& coarse_values) const;

    /// Fine unknown index of each coarse unknown.
    const std::vector<Eigen::Index>& injection_map() const noexcept { return injection_; }

private:
    TensorGrid2D coarse_;
    TensorGrid2D fine_;
    std::vector<Eigen::Index> injection_;
    SparseMatrix prolongation_;
};

nlohmann::json to_json(const TensorGrid2D& g);
TensorGrid2D grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TimeGrid& g);

}  // namespace gark
