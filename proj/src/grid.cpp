#include "rvisc/grid.hpp"

#include <cmath>
#include <map>

#include "rvisc/parallel.hpp"

namespace rvisc {

namespace {

double det3(const Vec& a, const Vec& b, const Vec& c) {
    return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
}

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

}  // namespace

Interpolant Grid::locate_sphere(const Vec& unit) const {
    // Barycentric coordinates of the central projection onto the flat face;
    // the score is the smallest normalized coordinate (>= 0 inside).
    const auto bary = [&](const std::array<int, 3>& f, std::array<double, 3>& w) {
        const Vec &a = unit_[f[0]], &b = unit_[f[1]], &c = unit_[f[2]];
        w = {det3(unit, b, c), det3(a, unit, c), det3(a, b, unit)};
        const double s = w[0] + w[1] + w[2];
        if (s <= 0) return -std::numeric_limits<double>::infinity();
        for (double& x : w) x /= s;
        return std::min({w[0], w[1], w[2]});
    };
    std::array<double, 3> w{};
    int best = 0;
    double score = -std::numeric_limits<double>::infinity();
    for (int f = 0; f < static_cast<int>(faces_[0].size()); ++f) {
        const double s = bary(faces_[0][f], w);
        if (s > score) score = s, best = f;
    }
    for (std::size_t level = 0; level + 1 < faces_.size(); ++level) {
        const auto& kids = children_[level][static_cast<std::size_t>(best)];
        score = -std::numeric_limits<double>::infinity();
        int next = kids[0];
        for (int k : kids) {
            const double s = bary(faces_[level + 1][k], w);
            if (s > score) score = s, next = k;
        }
        best = next;
    }
    const auto& f = faces_.back()[static_cast<std::size_t>(best)];
    bary(f, w);
    Interpolant it;
    double total = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double wi = std::max(0.0, w[i]);
        if (wi <= 1e-14) continue;
        it.nodes[it.count] = f[i];
        it.weights[it.count] = wi;
        ++it.count;
        total += wi;
    }
    for (int i = 0; i < it.count; ++i) it.weights[i] /= total;
    return it;
}

Interpolant Grid::locate_torus(const Vec& x) const {
    const auto& t = static_cast<const FlatTorus&>(*model_);
    const int n = resolution_;
    const Vec p = t.wrap(x);
    std::array<int, 2> lo{};
    std::array<double, 2> fr{};
    for (int a = 0; a < 2; ++a) {
        const double s = p[a] / (t.periods()[a] / n);
        double fl = std::floor(s);
        double f = s - fl;
        if (f > 1.0 - 1e-12) fl += 1.0, f = 0.0;
        if (f < 1e-12) f = 0.0;
        lo[a] = static_cast<int>(fl) % n;
        fr[a] = f;
    }
    Interpolant it;
    for (int dj = 0; dj < 2; ++dj)
        for (int di = 0; di < 2; ++di) {
            const double w = (di ? fr[0] : 1.0 - fr[0]) * (dj ? fr[1] : 1.0 - fr[1]);
            if (w == 0.0) continue;
            it.nodes[it.count] = (lo[0] + di) % n + n * ((lo[1] + dj) % n);
            it.weights[it.count] = w;
            ++it.count;
        }
    return it;
}

Interpolant Grid::locate(const Point& p) const {
    if (model_->kind() == ModelKind::Sphere) return locate_sphere(p.coords.normalized());
    return locate_torus(p.coords);
}

void Grid::build_stencils(double step_scale) {
    const int n = dim();
    directions_.clear();
    for (int i = 0; i < n; ++i) directions_.push_back(Vec::Unit(n, i));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            directions_.push_back((Vec::Unit(n, i) + Vec::Unit(n, j)) / std::sqrt(2.0));
            directions_.push_back((Vec::Unit(n, i) - Vec::Unit(n, j)) / std::sqrt(2.0));
        }

    std::vector<double> steps(directions_.size());
    if (model_->kind() == ModelKind::Sphere) {
        const double r = static_cast<const Sphere&>(*model_).radius();
        const double k = std::min(step_scale * std::sqrt(spacing_ * r), 0.99 * model_->global_injectivity_radius() / 4);
        std::fill(steps.begin(), steps.end(), k);
    } else {
        const Vec& per = static_cast<const FlatTorus&>(*model_).periods();
        const Vec dx = per / resolution_;
        std::size_t d = 0;
        for (int i = 0; i < n; ++i) steps[d++] = dx[i];
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                // Lands on lattice nodes when the periods agree.
                const double k = std::sqrt(2.0) * std::min(dx[i], dx[j]);
                steps[d++] = k;
                steps[d++] = k;
            }
    }
    step_ = *std::max_element(steps.begin(), steps.end());

    stencils_.assign(nodes_.size(), NodeStencil{});
    parallel_for(nodes_.size(), [&](std::size_t i) {
        NodeStencil& s = stencils_[i];
        s.step = steps;
        const Vec& x = nodes_[i].coords;
        for (std::size_t d = 0; d < directions_.size(); ++d) {
            const Vec amb = frames_[i] * directions_[d];
            s.plus.push_back(locate({model_->exp_at(x, steps[d] * amb)}));
            s.minus.push_back(locate({model_->exp_at(x, -steps[d] * amb)}));
        }
    });
}

GridPtr build_grid(const ManifoldPtr& m, int resolution, double step_scale) {
    if (!m) throw ArgumentError("build_grid: null model");
    if (!(step_scale > 0)) throw ArgumentError("build_grid: step scale must be positive");
    auto g = std::shared_ptr<Grid>(new Grid());
    g->model_ = m;
    g->resolution_ = resolution;

    if (m->kind() == ModelKind::Sphere && m->dim() == 2) {
        if (resolution < 0 || resolution > 7) throw ArgumentError("build_grid: sphere resolution must be in [0, 7]");
        const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
        std::vector<Vec>& u = g->unit_;
        for (Vec v : {v3(-1, phi, 0), v3(1, phi, 0), v3(-1, -phi, 0), v3(1, -phi, 0), v3(0, -1, phi), v3(0, 1, phi),
                      v3(0, -1, -phi), v3(0, 1, -phi), v3(phi, 0, -1), v3(phi, 0, 1), v3(-phi, 0, -1), v3(-phi, 0, 1)})
            u.push_back(v.normalized());
        std::vector<std::array<int, 3>> root = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
        for (auto& f : root)
            if (det3(u[f[0]], u[f[1]], u[f[2]]) < 0) std::swap(f[1], f[2]);
        g->faces_.push_back(root);
        for (int level = 0; level < resolution; ++level) {
            std::map<std::pair<int, int>, int> mid;
            const auto midpoint = [&](int a, int b) {
                const auto key = std::minmax(a, b);
                auto it = mid.find(key);
                if (it != mid.end()) return it->second;
                u.push_back((u[a] + u[b]).normalized());
                const int id = static_cast<int>(u.size()) - 1;
                mid.emplace(key, id);
                return id;
            };
            std::vector<std::array<int, 3>> next;
            std::vector<std::array<int, 4>> kids;
            for (const auto& f : g->faces_.back()) {
                const int ab = midpoint(f[0], f[1]), bc = midpoint(f[1], f[2]), ca = midpoint(f[2], f[0]);
                const int base = static_cast<int>(next.size());
                next.push_back({f[0], ab, ca});
                next.push_back({ab, f[1], bc});
                next.push_back({ca, bc, f[2]});
                next.push_back({ab, bc, ca});
                kids.push_back({base, base + 1, base + 2, base + 3});
            }
            g->children_.push_back(std::move(kids));
            g->faces_.push_back(std::move(next));
        }
        const double r = static_cast<const Sphere&>(*m).radius();
        for (const Vec& v : u) g->nodes_.push_back(m->make_point(r * v));
        std::map<std::pair<int, int>, bool> seen;
        for (const auto& f : g->faces_.back())
            for (int e = 0; e < 3; ++e) {
                const auto key = std::minmax(f[e], f[(e + 1) % 3]);
                if (seen.emplace(key, true).second) g->edges_.push_back({key.first, key.second});
            }
    } else if (m->kind() == ModelKind::FlatTorus && m->dim() == 2) {
        if (resolution < 12) throw ArgumentError("build_grid: torus resolution must be at least 12");
        const Vec& per = static_cast<const FlatTorus&>(*m).periods();
        for (int j = 0; j < resolution; ++j)
            for (int i = 0; i < resolution; ++i) {
                Vec c(2);
                c << per[0] * i / resolution, per[1] * j / resolution;
                g->nodes_.push_back(m->make_point(c));
            }
        for (int j = 0; j < resolution; ++j)
            for (int i = 0; i < resolution; ++i) {
                const int id = i + resolution * j;
                g->edges_.push_back({id, (i + 1) % resolution + resolution * j});
                g->edges_.push_back({id, i + resolution * ((j + 1) % resolution)});
            }
    } else {
        throw ArgumentError("build_grid: only Sphere(2, r) and FlatTorus(2) grids are supported, got " + m->name());
    }

    double total = 0.0;
    for (const auto& e : g->edges_) total += m->dist(g->nodes_[e[0]].coords, g->nodes_[e[1]].coords);
    g->spacing_ = total / static_cast<double>(g->edges_.size());
    for (const auto& p : g->nodes_) g->frames_.push_back(m->frame(p));
    g->build_stencils(step_scale);
    return g;
}

GridFunction::GridFunction(GridPtr g, Vec v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw ArgumentError("GridFunction: null grid");
    if (values.size() != grid->size()) throw ArgumentError("GridFunction: value count does not match the grid");
    if (!values.allFinite()) throw ArgumentError("GridFunction: values must be finite");
}

GridFunction GridFunction::constant(GridPtr g, double c) {
    const int n = g->size();
    return GridFunction(std::move(g), Vec::Constant(n, c));
}

double edge_modulus(const Grid& g, const Vec& f) {
    double m = 0.0;
    for (const auto& e : g.edges()) m = std::max(m, std::abs(f[e[0]] - f[e[1]]));
    return m;
}

Vec smooth_random_values(const Grid& g, std::uint64_t seed, int terms) {
    Rng rng(seed);
    const int amb = g.model()->ambient_dim();
    std::vector<Vec> omega;
    std::vector<double> amp, phase;
    for (int k = 0; k < terms; ++k) {
        omega.push_back(rng.unit_vector(amb) * rng.uniform(0.5, 2.5));
        amp.push_back(rng.uniform(-1.0, 1.0));
        phase.push_back(rng.uniform(0.0, 2 * M_PI));
    }
    Vec out = Vec::Zero(g.size());
    for (int i = 0; i < g.size(); ++i)
        for (int k = 0; k < terms; ++k) out[i] += amp[k] * std::sin(omega[k].dot(g.node(i).coords) + phase[k]);
    return out;
}

PairwiseDistances::PairwiseDistances(const Grid& g) : n_(static_cast<std::size_t>(g.size())), d_(n_ * n_) {
    const Manifold& m = *g.model();
    parallel_for(n_, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n_; ++j)
            d_[i * n_ + j] = m.dist(g.node(static_cast<int>(i)).coords, g.node(static_cast<int>(j)).coords);
    });
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < i; ++j) d_[i * n_ + j] = d_[j * n_ + i];
}

}  // namespace rvisc
