#include "gark/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gark/errors.hpp"

namespace gark {

namespace {

void check_increasing(const std::vector<double>& v, const char* what, std::size_t min_size) {
    if (v.size() < min_size) {
        throw GridError(std::string(what) + " needs at least " + std::to_string(min_size) + " nodes");
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k])) throw GridError(std::string(what) + " has a non-finite node");
        if (k > 0 && !(v[k] > v[k - 1])) {
            throw GridError(std::string(what) + " nodes must be strictly increasing");
        }
    }
}

std::vector<double> bisect(const std::vector<double>& v, const std::vector<bool>& marked) {
    std::vector<double> out;
    out.reserve(2 * v.size());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) {
        out.push_back(v[k]);
        if (marked[k]) out.push_back(v[k] + 0.5 * (v[k + 1] - v[k]));
    }
    out.push_back(v.back());
    return out;
}

/// Index of each entry of `sub` within `super`, matched to a tolerance
/// relative to the coordinate extent.
std::vector<int> embed_coordinates(const std::vector<double>& sub, const std::vector<double>& super) {
    const double tol = 1e-12 * std::max(1.0, std::abs(super.back() - super.front()));
    std::vector<int> idx(sub.size(), -1);
    std::size_t k = 0;
    for (std::size_t s = 0; s < sub.size(); ++s) {
        while (k < super.size() && super[k] < sub[s] - tol) ++k;
        if (k == super.size() || std::abs(super[k] - sub[s]) > tol) {
            throw GridError("fine grid does not contain coarse node coordinate " + std::to_string(sub[s]));
        }
        idx[s] = static_cast<int>(k);
    }
    return idx;
}

/// Coarse interval and local coordinate of point x.
std::pair<int, double> locate(const std::vector<double>& xs, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    int a = static_cast<int>(it - xs.begin()) - 1;
    a = std::clamp(a, 0, static_cast<int>(xs.size()) - 2);
    double t = (x - xs[a]) / (xs[a + 1] - xs[a]);
    if (std::abs(t) < 1e-12) t = 0.0;
    if (std::abs(1.0 - t) < 1e-12) t = 1.0;
    return {a, t};
}

}  // namespace

// ---------------------------------------------------------------- TimeGrid

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    check_increasing(nodes_, "time grid", 2);
}

TimeGrid TimeGrid::uniform(double t0, double tF, std::size_t steps) {
    if (steps == 0) throw GridError("time grid needs at least one step");
    if (!(tF > t0)) throw GridError("time grid needs tF > t0");
    std::vector<double> nodes(steps + 1);
    const double h = (tF - t0) / static_cast<double>(steps);
    for (std::size_t n = 0; n <= steps; ++n) nodes[n] = t0 + static_cast<double>(n) * h;
    nodes.back() = tF;
    return TimeGrid(std::move(nodes));
}

TimeGrid TimeGrid::with_step(double t0, double tF, double dt) {
    if (!(dt > 0.0)) throw GridError("time step must be positive");
    const double ratio = (tF - t0) / dt;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        throw GridError("time step does not divide the interval evenly");
    }
    return uniform(t0, tF, static_cast<std::size_t>(steps));
}

double TimeGrid::max_step() const {
    double h = 0.0;
    for (std::size_t n = 0; n < num_steps(); ++n) h = std::max(h, step(n));
    return h;
}

TimeGrid TimeGrid::tail(std::size_t first) const {
    if (first >= num_steps()) throw GridError("tail must keep at least one step");
    return TimeGrid(std::vector<double>(nodes_.begin() + static_cast<std::ptrdiff_t>(first), nodes_.end()));
}

TimeGrid halve_all_steps(const TimeGrid& g) {
    return TimeGrid(bisect(g.nodes(), std::vector<bool>(g.num_steps(), true)));
}

TimeGrid halve_marked_steps(const TimeGrid& g, const std::set<std::size_t>& steps) {
    std::vector<bool> marked(g.num_steps(), false);
    for (auto n : steps) {
        if (n >= g.num_steps()) throw GridError("marked step index out of range");
        marked[n] = true;
    }
    return TimeGrid(bisect(g.nodes(), marked));
}

std::vector<std::size_t> embed_time_nodes(const TimeGrid& coarse, const TimeGrid& fine) {
    try {
        const auto idx = embed_coordinates(coarse.nodes(), fine.nodes());
        return std::vector<std::size_t>(idx.begin(), idx.end());
    } catch (const GridError&) {
        throw TimeGridMismatch("refined time grid does not contain every coarse time node");
    }
}

// ------------------------------------------------------------ TensorGrid2D

TensorGrid2D::TensorGrid2D(std::vector<double> xs, std::vector<double> ys, BoundaryCondition bc)
    : xs_(std::move(xs)), ys_(std::move(ys)), bc_(bc) {
    check_increasing(xs_, "x coordinates", 3);
    check_increasing(ys_, "y coordinates", 3);
    const int nx = nx_nodes(), ny = ny_nodes();
    node_to_unknown_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), -1);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const bool fixed = (i == 0 && bc_.edges[0] == BoundaryKind::kDirichletZero) ||
                               (i == nx - 1 && bc_.edges[1] == BoundaryKind::kDirichletZero) ||
                               (j == 0 && bc_.edges[2] == BoundaryKind::kDirichletZero) ||
                               (j == ny - 1 && bc_.edges[3] == BoundaryKind::kDirichletZero);
            if (fixed) continue;
            node_to_unknown_[node_id(i, j)] = num_unknowns_++;
            unknown_to_node_.emplace_back(i, j);
        }
    }
    if (num_unknowns_ == 0) throw GridError("grid has no unknowns");
}

TensorGrid2D TensorGrid2D::uniform(double x0, double x1, int nx_cells, double y0, double y1,
                                   int ny_cells, BoundaryCondition bc) {
    if (nx_cells < 2 || ny_cells < 2) throw GridError("grid needs at least 2 cells per direction");
    std::vector<double> xs(nx_cells + 1), ys(ny_cells + 1);
    for (int i = 0; i <= nx_cells; ++i) xs[i] = x0 + (x1 - x0) * i / nx_cells;
    for (int j = 0; j <= ny_cells; ++j) ys[j] = y0 + (y1 - y0) * j / ny_cells;
    xs.back() = x1;
    ys.back() = y1;
    return TensorGrid2D(std::move(xs), std::move(ys), bc);
}

std::vector<double> TensorGrid2D::node_weights() const {
    auto half_sums = [](const std::vector<double>& v) {
        std::vector<double> w(v.size(), 0.0);
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            const double h = v[k + 1] - v[k];
            w[k] += 0.5 * h;
            w[k + 1] += 0.5 * h;
        }
        return w;
    };
    const auto wx = half_sums(xs_), wy = half_sums(ys_);
    std::vector<double> w(static_cast<std::size_t>(num_unknowns_));
    for (Eigen::Index k = 0; k < num_unknowns_; ++k) {
        const auto [i, j] = unknown_to_node_[k];
        w[k] = wx[i] * wy[j];
    }
    return w;
}

TensorGrid2D refine_uniform(const TensorGrid2D& g) {
    return TensorGrid2D(bisect(g.xs(), std::vector<bool>(g.nx_cells(), true)),
                        bisect(g.ys(), std::vector<bool>(g.ny_cells(), true)), g.bc());
}

TensorGrid2D refine_marked(const TensorGrid2D& g, const std::set<CellIndex>& marked_cells) {
    if (marked_cells.empty()) return g;
    std::vector<bool> mx(g.nx_cells(), false), my(g.ny_cells(), false);
    for (const auto& [i, j] : marked_cells) {
        if (i < 0 || i >= g.nx_cells() || j < 0 || j >= g.ny_cells()) {
            throw GridError("marked cell (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range");
        }
        mx[i] = true;
        my[j] = true;
    }
    return TensorGrid2D(bisect(g.xs(), mx), bisect(g.ys(), my), g.bc());
}

// ------------------------------------------------------------ GridTransfer

GridTransfer::GridTransfer(const TensorGrid2D& coarse, const TensorGrid2D& fine)
    : coarse_(coarse), fine_(fine) {
    if (!(coarse.bc() == fine.bc())) throw GridError("grid transfer needs matching boundary conditions");
    const auto ix = embed_coordinates(coarse.xs(), fine.xs());
    const auto iy = embed_coordinates(coarse.ys(), fine.ys());
    injection_.resize(static_cast<std::size_t>(coarse.num_unknowns()));
    for (Eigen::Index k = 0; k < coarse.num_unknowns(); ++k) {
        const auto [i, j] = coarse.unknown_node(k);
        const Eigen::Index f = fine.unknown_index(ix[i], iy[j]);
        if (f < 0) throw GridError("coarse unknown maps to a constrained fine node");
        injection_[k] = f;
    }

    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index k = 0; k < fine.num_unknowns(); ++k) {
        const auto [i, j] = fine.unknown_node(k);
        const auto [a, tx] = locate(coarse.xs(), fine.xs()[i]);
        const auto [b, ty] = locate(coarse.ys(), fine.ys()[j]);
        const double wx[2] = {1.0 - tx, tx};
        const double wy[2] = {1.0 - ty, ty};
        for (int dj = 0; dj < 2; ++dj) {
            for (int di = 0; di < 2; ++di) {
                const double w = wx[di] * wy[dj];
                if (w == 0.0) continue;
                const Eigen::Index c = coarse.unknown_index(a + di, b + dj);
                if (c >= 0) trip.emplace_back(k, c, w);
            }
        }
    }
    prolongation_.resize(fine.num_unknowns(), coarse.num_unknowns());
    prolongation_.setFromTriplets(trip.begin(), trip.end());

}

Vector GridTransfer::project(const Vector& fine_values) const {
    const Eigen::Index nf = fine_.num_unknowns(), nc = coarse_.num_unknowns();
    if (fine_values.size() % nf != 0) throw GridError("fine vector length is not a multiple of the fine unknowns");
    const Eigen::Index species = fine_values.size() / nf;
    Vector out(species * nc);
    for (Eigen::Index s = 0; s < species; ++s) {
        for (Eigen::Index k = 0; k < nc; ++k) out[s * nc + k] = fine_values[s * nf + injection_[k]];
    }
    return out;
}

Vector GridTransfer::prolong(const Vector& coarse_values) const {
    const Eigen::Index nf = fine_.num_unknowns(), nc = coarse_.num_unknowns();
    if (coarse_values.size() % nc != 0) throw GridError("coarse vector length is not a multiple of the coarse unknowns");
    const Eigen::Index species = coarse_values.size() / nc;
    Vector out(species * nf);
    for (Eigen::Index s = 0; s < species; ++s) {
        out.segment(s * nf, nf) = prolongation_ * coarse_values.segment(s * nc, nc);
    }
    return out;
}

// -------------------------------------------------------------------- JSON

namespace {
const char* bc_name(BoundaryKind k) {
    return k == BoundaryKind::kDirichletZero ? "dirichlet_zero" : "neumann_zero";
}
BoundaryKind bc_from(const std::string& s) {
    if (s == "dirichlet_zero") return BoundaryKind::kDirichletZero;
    if (s == "neumann_zero") return BoundaryKind::kNeumannZero;
    throw GridError("unknown boundary tag " + s);
}
}  // namespace

nlohmann::json to_json(const TensorGrid2D& g) {
    nlohmann::json j;
    j["x"] = g.xs();
    j["y"] = g.ys();
    j["bc"] = {{"left", bc_name(g.bc().edges[0])},
               {"right", bc_name(g.bc().edges[1])},
               {"bottom", bc_name(g.bc().edges[2])},
               {"top", bc_name(g.bc().edges[3])}};
    return j;
}

TensorGrid2D grid_from_json(const nlohmann::json& j) {
    BoundaryCondition bc;
    const auto& b = j.at("bc");
    bc.edges = {bc_from(b.at("left")), bc_from(b.at("right")), bc_from(b.at("bottom")),
                bc_from(b.at("top"))};
    return TensorGrid2D(j.at("x").get<std::vector<double>>(), j.at("y").get<std::vector<double>>(), bc);
}

nlohmann::json to_json(const TimeGrid& g) { return nlohmann::json{{"t", g.nodes()}}; }

}  // namespace gark
