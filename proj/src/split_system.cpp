#include "gark/split_system.hpp"

#include "gark/errors.hpp"

namespace gark {

Vector SplitOdeSystem::evaluate(int q, double t, const Vector& y) const {
    Vector out(dimension());
    evaluate(q, t, y, out);
    return out;
}

Vector SplitOdeSystem::jacobian_action(int q, double t, const Vector& y, const Vector& v) const {
    return jacobian(q, t, y) * v;
}

Vector SplitOdeSystem::jacobian_transpose_action(int q, double t, const Vector& y,
                                                 const Vector& v) const {
    return jacobian(q, t, y).transpose() * v;
}

Vector SplitOdeSystem::evaluate_total(double t, const Vector& y) const {
    Vector total = Vector::Zero(dimension());
    Vector tmp(dimension());
    for (int q = 0; q < num_partitions(); ++q) {
        evaluate(q, t, y, tmp);
        total += tmp;
    }
    return total;
}

void FunctionSystem::evaluate(int q, double t, const Vector& y, Vector& out) const {
    out.resize(dim_);
    parts_.at(q).f(t, y, out);
}

SparseMatrix FunctionSystem::jacobian(int q, double t, const Vector& y) const {
    return parts_.at(q).jacobian(t, y);
}

std::string FunctionSystem::partition_name(int q) const {
    const auto& n = parts_.at(q).name;
    return n.empty() ? SplitOdeSystem::partition_name(q) : n;
}

ReactionDiffusionSystem::ReactionDiffusionSystem(int species, Eigen::Index nodes,
                                                 SparseMatrix diffusion, Reaction reaction,
                                                 ReactionJacobian reaction_jacobian)
    : species_(species),
      nodes_(nodes),
      diffusion_(std::move(diffusion)),
      reaction_(std::move(reaction)),
      reaction_jacobian_(std::move(reaction_jacobian)) {
    if (species_ < 1 || species_ > 8) throw InvalidParameter("between 1 and 8 species supported");
    if (diffusion_.rows() != species_ * nodes_ || diffusion_.cols() != species_ * nodes_) {
        throw InvalidParameter("diffusion operator does not match the state size");
    }
    diffusion_.makeCompressed();
}

void ReactionDiffusionSystem::evaluate(int q, double t, const Vector& y, Vector& out) const {
    out.resize(dimension());
    if (q == 0) {
        out.noalias() = diffusion_ * y;
        return;
    }
    double u[8], r[8];
    for (Eigen::Index k = 0; k < nodes_; ++k) {
        for (int s = 0; s < species_; ++s) u[s] = y[s * nodes_ + k];
        reaction_(t, k, u, r);
        for (int s = 0; s < species_; ++s) out[s * nodes_ + k] = r[s];
    }
}

SparseMatrix ReactionDiffusionSystem::jacobian(int q, double t, const Vector& y) const {
    if (q == 0) return diffusion_;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(nodes_ * species_ * species_));
    double u[8], jac[64];
    for (Eigen::Index k = 0; k < nodes_; ++k) {
        for (int s = 0; s < species_; ++s) u[s] = y[s * nodes_ + k];
        reaction_jacobian_(t, k, u, jac);
        for (int a = 0; a < species_; ++a) {
            for (int b = 0; b < species_; ++b) {
                trip.emplace_back(a * nodes_ + k, b * nodes_ + k, jac[a * species_ + b]);
            }
        }
    }
    SparseMatrix J(dimension(), dimension());
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
}

SparseMatrix discretize_laplacian(const TensorGrid2D& grid,
                                  const std::function<double(double, double)>& k) {
    const auto& xs = grid.xs();
    const auto& ys = grid.ys();
    const int nx = grid.nx_nodes(), ny = grid.ny_nodes();

    std::vector<double> knode(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double v = k(xs[i], ys[j]);
            if (!(v > 0.0)) throw InvalidParameter("diffusion coefficient must be positive on every node");
            knode[static_cast<std::size_t>(j) * nx + i] = v;
        }
    }
    auto kat = [&](int i, int j) { return knode[static_cast<std::size_t>(j) * nx + i]; };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(grid.num_unknowns()) * 5);
    for (Eigen::Index row = 0; row < grid.num_unknowns(); ++row) {
        const auto [i, j] = grid.unknown_node(row);
        const double wx = 0.5 * ((i + 1 < nx ? xs[i + 1] : xs[i]) - (i > 0 ? xs[i - 1] : xs[i]));
        const double wy = 0.5 * ((j + 1 < ny ? ys[j + 1] : ys[j]) - (j > 0 ? ys[j - 1] : ys[j]));
        double diag = 0.0;
        auto face = [&](int ni, int nj, double spacing, double width) {
            const double kf = 0.5 * (kat(i, j) + kat(ni, nj));
            const double c = kf / (spacing * width);
            diag -= c;
            const Eigen::Index col = grid.unknown_index(ni, nj);
            if (col >= 0) trip.emplace_back(row, col, c);
        };
        if (i > 0) face(i - 1, j, xs[i] - xs[i - 1], wx);
        if (i + 1 < nx) face(i + 1, j, xs[i + 1] - xs[i], wx);
        if (j > 0) face(i, j - 1, ys[j] - ys[j - 1], wy);
        if (j + 1 < ny) face(i, j + 1, ys[j + 1] - ys[j], wy);
        trip.emplace_back(row, row, diag);
    }
    SparseMatrix L(grid.num_unknowns(), grid.num_unknowns());
    L.setFromTriplets(trip.begin(), trip.end());
    L.makeCompressed();
    return L;
}

SparseMatrix discretize_laplacian(const TensorGrid2D& grid) {
    return discretize_laplacian(grid, [](double, double) { return 1.0; });
}

std::shared_ptr<LinearGoal> integral_goal(const TensorGrid2D& grid, int species,
                                          std::vector<bool> species_mask) {
    if (species < 1) throw InvalidParameter("species count must be positive");
    if (species_mask.empty()) {
        species_mask.assign(static_cast<std::size_t>(species), false);
        species_mask[0] = true;
    }
    if (static_cast<int>(species_mask.size()) != species) {
        throw InvalidParameter("species mask has the wrong length");
    }
    const auto w = grid.node_weights();
    const Eigen::Index n = grid.num_unknowns();
    Vector weights = Vector::Zero(species * n);
    for (int s = 0; s < species; ++s) {
        if (!species_mask[s]) continue;
        for (Eigen::Index k = 0; k < n; ++k) weights[s * n + k] = w[k];
    }
    return std::make_shared<LinearGoal>(std::move(weights));
}

}  // namespace gark
