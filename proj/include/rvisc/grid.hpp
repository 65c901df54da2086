#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "rvisc/manifold.hpp"

namespace rvisc {

// Convex combination of grid values approximating a function at a point.
struct Interpolant {
    std::array<int, 4> nodes{};
    std::array<double, 4> weights{};
    int count = 0;

    double apply(const Vec& values) const {
        double s = 0.0;
        for (int i = 0; i < count; ++i) s += weights[i] * values[nodes[i]];
        return s;
    }
};

// Semi-Lagrangian stencil of one node. Directions are unit vectors in the
// node frame: e_1..e_n first, then (e_i + e_j)/sqrt2 and (e_i - e_j)/sqrt2
// for i < j. plus[d] interpolates u at exp_x(step[d] dir[d]), minus[d] at
// exp_x(-step[d] dir[d]).
struct NodeStencil {
    std::vector<double> step;
    std::vector<Interpolant> plus, minus;
};

class Grid {
public:
    const ManifoldPtr& model() const { return model_; }
    int resolution() const { return resolution_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    int dim() const { return model_->dim(); }
    const Point& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<Point>& nodes() const { return nodes_; }
    const Mat& frame(int i) const { return frames_[static_cast<std::size_t>(i)]; }
    const std::vector<std::array<int, 2>>& edges() const { return edges_; }
    // Mean mesh edge length.
    double spacing() const { return spacing_; }
    // Largest semi-Lagrangian step.
    double stencil_step() const { return step_; }
    const NodeStencil& stencil(int i) const { return stencils_[static_cast<std::size_t>(i)]; }
    // Unit stencil directions in frame coordinates.
    const std::vector<Vec>& directions() const { return directions_; }

    Interpolant locate(const Point& p) const;
    double interpolate(const Vec& values, const Point& p) const { return locate(p).apply(values); }

    friend std::shared_ptr<const Grid> build_grid(const ManifoldPtr& m, int resolution, double step_scale);

private:
    Interpolant locate_sphere(const Vec& unit) const;
    Interpolant locate_torus(const Vec& x) const;
    void build_stencils(double step_scale);

    ManifoldPtr model_;
    int resolution_ = 0;
    std::vector<Point> nodes_;
    std::vector<Mat> frames_;
    std::vector<std::array<int, 2>> edges_;
    double spacing_ = 0.0;
    double step_ = 0.0;
    std::vector<Vec> directions_;
    std::vector<NodeStencil> stencils_;

    // Icosphere face hierarchy: faces_[level] lists vertex triples; children
    // of face f at level l are children_[l][f] at level l + 1.
    std::vector<std::vector<std::array<int, 3>>> faces_;
    std::vector<std::vector<std::array<int, 4>>> children_;
    std::vector<Vec> unit_;
};

using GridPtr = std::shared_ptr<const Grid>;

// Sphere(2, r): icosphere with 10 * 4^resolution + 2 nodes.
// FlatTorus(2): resolution x resolution lattice.
// On the sphere the stencil step is step_scale * sqrt(spacing * r), capped
// below inj / 4; on the torus it is the lattice spacing (axis directions) and
// its diagonal (rotated directions), so stencil points are lattice nodes.
GridPtr build_grid(const ManifoldPtr& m, int resolution, double step_scale = 1.0);

struct GridFunction {
    GridPtr grid;
    Vec values;

    GridFunction() = default;
    GridFunction(GridPtr g, Vec v);
    static GridFunction constant(GridPtr g, double c);

    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }
};

// Largest |f_i - f_j| over mesh edges.
double edge_modulus(const Grid& g, const Vec& f);

// Nodal values of sum_k a_k sin(<w_k, x> + p_k) in ambient coordinates, with
// random amplitudes in [-1, 1], |w_k| in [0.5, 2.5] and phases.
Vec smooth_random_values(const Grid& g, std::uint64_t seed, int terms = 4);

// Dense table of pairwise geodesic distances between grid nodes.
class PairwiseDistances {
public:
    explicit PairwiseDistances(const Grid& g);
    double operator()(int i, int j) const { return d_[static_cast<std::size_t>(i) * n_ + j]; }
    int size() const { return static_cast<int>(n_); }

private:
    std::size_t n_;
    std::vector<double> d_;
};

}  // namespace rvisc
