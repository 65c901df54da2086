#include <cmath>

#include "doctest.h"
#include "rvisc/grid.hpp"

using namespace rvisc;

TEST_CASE("grid node counts") {
    auto s2 = make_sphere(2, 1.0);
    for (int res = 0; res <= 4; ++res) CHECK(build_grid(s2, res)->size() == 10 * (1 << (2 * res)) + 2);
    auto t2 = make_torus(Vec::Constant(2, 1.0));
    CHECK(build_grid(t2, 32)->size() == 1024);
    CHECK_THROWS_AS(build_grid(make_hyperbolic(2, 1.0), 2), ArgumentError);
    CHECK_THROWS_AS(build_grid(make_sphere(3, 1.0), 2), ArgumentError);
    CHECK_THROWS_AS(build_grid(t2, 4), ArgumentError);
}

TEST_CASE("icosphere mesh is regular") {
    auto s2 = make_sphere(2, 2.0);
    GridPtr g = build_grid(s2, 3);
    // Euler characteristic V - E + F = 2 with F = 2E/3.
    const long e = static_cast<long>(g->edges().size());
    CHECK(g->size() - e + 2 * e / 3 == 2);
    for (const auto& p : g->nodes()) CHECK(p.coords.norm() == doctest::Approx(2.0));
    // Mean edge length ~ icosahedron edge / 2^res, scaled by the radius.
    CHECK(g->spacing() == doctest::Approx(2.0 * 1.1071 / 8).epsilon(0.1));
}

TEST_CASE("stencil weights are convex and steps are small") {
    for (auto [m, res] : {std::pair{make_sphere(2, 1.0), 3}, std::pair{make_torus(Vec::Constant(2, 1.0)), 16}}) {
        GridPtr g = build_grid(m, res);
        CHECK(g->stencil_step() < m->global_injectivity_radius() / 4);
        for (int i = 0; i < g->size(); ++i) {
            const NodeStencil& s = g->stencil(i);
            CHECK(s.plus.size() == g->directions().size());
            for (const auto* side : {&s.plus, &s.minus})
                for (const Interpolant& it : *side) {
                    double sum = 0.0;
                    for (int k = 0; k < it.count; ++k) {
                        CHECK(it.weights[k] >= 0.0);
                        sum += it.weights[k];
                    }
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
                }
        }
    }
}

TEST_CASE("torus stencil points are lattice nodes") {
    GridPtr g = build_grid(make_torus(Vec::Constant(2, 1.0)), 16);
    for (int i = 0; i < g->size(); ++i)
        for (const Interpolant& it : g->stencil(i).plus) CHECK(it.count == 1);
}

TEST_CASE("interpolation error decays quadratically on the sphere") {
    auto s2 = make_sphere(2, 1.0);
    Rng rng(4);
    std::vector<Point> probes;
    for (int k = 0; k < 200; ++k) probes.push_back(s2->random_point(rng));
    double prev = 1e9;
    for (int res = 2; res <= 5; ++res) {
        GridPtr g = build_grid(s2, res);
        Vec f(g->size());
        for (int i = 0; i < g->size(); ++i) f[i] = g->node(i).coords[2] + g->node(i).coords[0] * g->node(i).coords[1];
        double err = 0.0;
        for (const auto& p : probes)
            err = std::max(err, std::abs(g->interpolate(f, p) - (p.coords[2] + p.coords[0] * p.coords[1])));
        CAPTURE(res);
        CHECK(err < prev / 3);
        prev = err;
    }
}

TEST_CASE("pairwise distances and edge modulus") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr g = build_grid(s2, 1);
    PairwiseDistances d(*g);
    CHECK(d.size() == g->size());
    for (int i = 0; i < g->size(); i += 5)
        for (int j = 0; j < g->size(); j += 7) {
            CHECK(d(i, j) == doctest::Approx(s2->distance(g->node(i), g->node(j))));
            CHECK(d(i, j) == d(j, i));
        }
    CHECK(edge_modulus(*g, Vec::Constant(g->size(), 3.0)) == 0.0);
    Vec z(g->size());
    for (int i = 0; i < g->size(); ++i) z[i] = g->node(i).coords[2];
    CHECK(edge_modulus(*g, z) <= g->spacing() * 2);
    CHECK_THROWS_AS(GridFunction(g, Vec::Zero(3)), ArgumentError);
}

TEST_CASE("smooth random values are deterministic and bounded") {
    GridPtr g = build_grid(make_sphere(2, 1.0), 2);
    const Vec a = smooth_random_values(*g, 5), b = smooth_random_values(*g, 5), c = smooth_random_values(*g, 6);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a.cwiseAbs().maxCoeff() <= 4.0);
    // Lipschitz with constant at most 4 * 2.5 in the ambient metric.
    CHECK(edge_modulus(*g, a) <= 10.0 * g->spacing() * 1.1);
}
