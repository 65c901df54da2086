#include <cmath>

#include "doctest.h"
#include "rvisc/solver.hpp"

using namespace rvisc;

namespace {

OperatorPtr helmholtz(const std::string& f) { return sum({scalar_term(), neg_trace(), source(parse_scalar_field(f))}); }

Vec node_values(const Grid& g, const std::function<double(const Vec&)>& f) {
    Vec v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = f(g.node(i).coords);
    return v;
}

double z_error(const GridFunction& u) {
    const Vec exact = node_values(*u.grid, [](const Vec& p) { return p[2] / 3.0; });
    return (u.values - exact).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("discrete jets of constants and coordinate functions") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr g2 = build_grid(s2, 2);
    CHECK(g2->size() == 162);
    const Vec c = Vec::Constant(g2->size(), 3.5);
    for (int i = 0; i < g2->size(); i += 7) {
        DiscreteJet j = discrete_jet(*g2, c, i);
        CHECK(j.zeta.norm() <= 1e-12);
        CHECK(j.A.norm() <= 1e-10);
    }

    // Laplacian of z on the unit sphere is -2 z; gradient is the projected axis.
    double prev_lap = 1e9, prev_grad = 1e9;
    for (int res = 2; res <= 5; ++res) {
        GridPtr g = build_grid(s2, res);
        const Vec z = node_values(*g, [](const Vec& p) { return p[2]; });
        double lap = 0.0, grad = 0.0;
        for (int i = 0; i < g->size(); ++i) {
            DiscreteJet j = discrete_jet(*g, z, i);
            lap = std::max(lap, std::abs(j.A.trace() + 2.0 * z[i]));
            const Vec exact = g->frame(i).transpose() * Vec::Unit(3, 2);
            grad = std::max(grad, (j.zeta - exact).norm());
        }
        CAPTURE(res);
        CHECK(lap < prev_lap);
        CHECK(grad < prev_grad);
        prev_lap = lap;
        prev_grad = grad;
    }
    CHECK(prev_lap < 0.05);

    // Fourier oracle on the torus.
    auto t2 = make_torus(Vec::Constant(2, 1.0));
    double prev = 1e9;
    for (int n : {16, 32, 64}) {
        GridPtr g = build_grid(t2, n);
        const Vec u = node_values(*g, [](const Vec& p) { return std::sin(2 * M_PI * p[0]); });
        double err = 0.0;
        for (int i = 0; i < g->size(); ++i) {
            DiscreteJet j = discrete_jet(*g, u, i);
            err = std::max(err, std::abs(j.A(0, 0) + 4 * M_PI * M_PI * u[i]));
            CHECK(std::abs(j.A(1, 1)) <= 1e-9);
            CHECK(std::abs(j.A(0, 1)) <= 1e-9);
        }
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev <= 0.01 * 4 * M_PI * M_PI);
}

TEST_CASE("scheme monotonicity probes") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr gs = build_grid(s2, 3);
    GridPtr gt = build_grid(make_torus(Vec::Constant(2, 1.0)), 16);
    Rng rng(21);
    for (const auto& g : {gs, gt})
        for (const auto& f : {helmholtz("coord:0"), neg_trace(), yamabe(3, constant_field(6), -1),
                              sum({scalar_term(), weighted_neg_trace(constant_field(2.0))})}) {
            Vec u(g->size());
            for (int i = 0; i < g->size(); ++i) u[i] = rng.uniform(0.0, 1.0);
            for (int probe = 0; probe < 100; ++probe) {
                const int node = rng.integer(0, g->size() - 1);
                const double base = discretize(*f, *g, u, node);
                const NodeStencil& s = g->stencil(node);
                for (const auto* side : {&s.plus, &s.minus})
                    for (const Interpolant& it : *side)
                        for (int k = 0; k < it.count; ++k) {
                            if (it.nodes[k] == node) continue;
                            Vec up = u;
                            up[it.nodes[k]] += 0.1;
                            CHECK(discretize(*f, *g, up, node) <= base + 1e-12);
                        }
            }
        }
}

TEST_CASE("fixed point solver oracles") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr g3 = build_grid(s2, 3);
    SolveResult c = solve_fixed_point(*helmholtz("const:2"), GridFunction::constant(g3, 0.0));
    CHECK(c.report.converged);
    CHECK((c.u.values.array() - 2.0).abs().maxCoeff() <= 1e-6);

    double prev = 1e9;
    for (int res = 3; res <= 5; ++res) {
        SolveResult r = solve_fixed_point(*helmholtz("coord:2"), GridFunction::constant(build_grid(s2, res), 0.0));
        REQUIRE(r.report.converged);
        const double err = z_error(r.u);
        CAPTURE(res);
        CHECK(err < prev);
        if (res == 4) CHECK(err <= 0.05);
        prev = err;
        // Residual history is nonincreasing after the first few iterations.
        for (std::size_t k = 10; k < r.report.residuals.size(); ++k)
            CHECK(r.report.residuals[k] <= r.report.residuals[k - 1] * (1 + 1e-9));
    }
}

TEST_CASE("initialisation independence and discrete comparison") {
    GridPtr g = build_grid(make_sphere(2, 1.0), 3);
    auto f = helmholtz("coord:0");
    SolveOptions o;
    o.tol = 1e-9;
    SolveResult a = solve_fixed_point(*f, GridFunction::constant(g, 10.0), o);
    SolveResult b = solve_fixed_point(*f, GridFunction::constant(g, -10.0), o);
    CHECK((a.u.values - b.u.values).cwiseAbs().maxCoeff() <= 2 * o.tol);

    Rng rng(8);
    const double gamma = monotonicity_estimate(*f, *g->model(), -2, 2);
    CHECK(gamma == doctest::Approx(1.0));
    for (int trial = 0; trial < 10; ++trial) {
        const Vec w = rng.unit_vector(3);
        const Vec bump = node_values(*g, [&](const Vec& p) { return std::sin(3 * w.dot(p)); });
        GridFunction u(g, a.u.values + rng.uniform(-0.3, 0.3) * bump + Vec::Constant(g->size(), rng.uniform(-0.2, 0.2)));
        GridFunction v(g, a.u.values + rng.uniform(-0.3, 0.3) * bump.cwiseAbs());
        ComparisonCheck cc = discrete_comparison(*f, u, v, gamma);
        CHECK(cc.holds);
    }
}

TEST_CASE("solver errors") {
    GridPtr g = build_grid(make_sphere(2, 1.0), 2);
    CHECK_THROWS_AS(solve_fixed_point(*scaled(-1.0, helmholtz("const:1")), GridFunction::constant(g, 0.0)),
                    ArgumentError);
    SolveOptions wild;
    wild.damping = 1.0;
    CHECK_THROWS_AS(solve_fixed_point(*helmholtz("coord:2"), GridFunction::constant(g, 0.0), wild), DivergenceError);
    SolveOptions capped;
    capped.max_iter = 3;
    SolveResult r = solve_fixed_point(*helmholtz("coord:2"), GridFunction::constant(g, 0.0), capped);
    CHECK_FALSE(r.report.converged);
    CHECK(r.report.iterations == 3);
    CHECK(r.report.residuals.size() == 4);
    CHECK(r.report.to_json().contains("wall_time_s"));
}

TEST_CASE("dirichlet problem on a polar cap") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr g = build_grid(s2, 3);
    const Point north{Vec::Unit(3, 2)};
    const std::vector<bool> pinned = geodesic_ball_mask(*g, north, 1.0);
    long free = std::count(pinned.begin(), pinned.end(), false);
    CHECK(free > 0);

    // Constants solve -Lap u = 0 and u - Lap u = c; u - Lap u = 0 obeys 0 <= u <= c.
    for (const auto& op : {neg_trace(), helmholtz("const:1.7")}) {
        SolveResult c = solve_dirichlet(*op, pinned, GridFunction::constant(g, 1.7), GridFunction::constant(g, 0.0));
        CHECK(c.report.converged);
        CHECK((c.u.values.array() - 1.7).abs().maxCoeff() <= 1e-6);
    }
    auto lap0 = helmholtz("const:0");
    SolveResult h = solve_dirichlet(*lap0, pinned, GridFunction::constant(g, 1.7), GridFunction::constant(g, 0.0));
    CHECK(h.u.values.minCoeff() >= 0.0);
    CHECK(h.u.values.maxCoeff() <= 1.7);
    CHECK(h.u.values.minCoeff() < 1.7);

    const Vec z = node_values(*g, [](const Vec& p) { return p[2]; });
    GridFunction f(g, z);
    SolveResult r = solve_dirichlet(*helmholtz("coord:2"), pinned, f, GridFunction::constant(g, 0.0));
    REQUIRE(r.report.converged);
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < g->size(); ++i) {
        lo = std::min(lo, z[i]);
        hi = std::max(hi, z[i]);
    }
    for (int i = 0; i < g->size(); ++i) {
        if (pinned[static_cast<std::size_t>(i)]) {
            CHECK(r.u.values[i] == z[i]);
        } else {
            CHECK(r.u.values[i] >= lo - 1e-9);
            CHECK(r.u.values[i] <= hi + 1e-9);
        }
    }

    const std::vector<bool> all = geodesic_ball_mask(*g, north, 0.0);
    SolveResult empty = solve_dirichlet(*lap0, all, f, GridFunction::constant(g, 5.0));
    CHECK(empty.u.values == z);
    CHECK_THROWS_AS(solve_dirichlet(*lap0, std::vector<bool>(g->size(), false), f, f), ArgumentError);
}

TEST_CASE("perron iteration") {
    GridPtr g = build_grid(make_sphere(2, 1.0), 3);
    auto f = helmholtz("const:2");
    PerronOptions o;
    o.tol = 1e-9;
    PerronResult p = perron_iterate(*f, GridFunction::constant(g, 0.0), GridFunction::constant(g, 10.0), o);
    CHECK(p.report.converged);
    CHECK(p.report.ordered);
    CHECK(p.report.min_increment >= 0.0);
    CHECK((p.u.values.array() - 2.0).abs().maxCoeff() <= 2 * o.tol);

    SolveOptions so;
    so.tol = 1e-9;
    SolveResult fp = solve_fixed_point(*f, GridFunction::constant(g, 0.0), so);
    CHECK((fp.u.values - p.u.values).cwiseAbs().maxCoeff() <= 2 * o.tol);

    PerronResult same = perron_iterate(*f, GridFunction::constant(g, 2.0), GridFunction::constant(g, 2.0));
    CHECK(same.report.sweeps == 0);
    CHECK((same.u.values.array() == 2.0).all());

    // Non-constant problem with the exact discrete solution bracketed.
    auto fz = helmholtz("coord:2");
    PerronResult pz = perron_iterate(*fz, GridFunction::constant(g, -1.0), GridFunction::constant(g, 1.0), o);
    CHECK(pz.report.converged);
    CHECK(pz.report.ordered);
    SolveResult sz = solve_fixed_point(*fz, GridFunction::constant(g, 0.0), so);
    CHECK((sz.u.values - pz.u.values).cwiseAbs().maxCoeff() <= 2 * o.tol);

    CHECK_THROWS_AS(perron_iterate(*f, GridFunction::constant(g, 3.0), GridFunction::constant(g, 1.0)), ArgumentError);
    CHECK_THROWS_AS(perron_iterate(*f, GridFunction::constant(g, 5.0), GridFunction::constant(g, 10.0)), ArgumentError);
    CHECK_THROWS_AS(perron_iterate(*f, GridFunction::constant(g, 0.0), GridFunction::constant(g, 1.0)), ArgumentError);
}

TEST_CASE("viscosity residual") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr g = build_grid(s2, 4);
    auto f2 = helmholtz("const:2");
    ViscosityReport c = verify_viscosity_residual(*f2, GridFunction::constant(g, 2.0));
    CHECK(c.sub_violation <= 1e-9);
    CHECK(c.super_violation <= 1e-9);
    CHECK(c.pass);

    auto fz = helmholtz("coord:2");
    SolveResult r = solve_fixed_point(*fz, GridFunction::constant(g, 0.0));
    ViscosityReport ok = verify_viscosity_residual(*fz, r.u);
    CHECK(ok.pass);
    CHECK(ok.sub_violation <= g->spacing());
    CHECK(ok.super_violation <= g->spacing());

    Vec bumped = r.u.values;
    bumped[40] += 0.5;
    ViscosityReport bad = verify_viscosity_residual(*fz, GridFunction(g, bumped), 2.0);
    CHECK_FALSE(bad.pass);
    CHECK(bad.sub_node == 40);
    CHECK(bad.sub_violation == doctest::Approx(0.5).epsilon(0.1));
    bumped[40] -= 1.0;
    ViscosityReport low = verify_viscosity_residual(*fz, GridFunction(g, bumped), 2.0);
    CHECK(low.super_node == 40);
    CHECK(low.super_violation == doctest::Approx(0.5).epsilon(0.1));

    auto id = scalar_term();
    CHECK(verify_viscosity_residual(*id, GridFunction::constant(g, 0.7)).sub_violation == doctest::Approx(0.7));
    CHECK(verify_viscosity_residual(*id, GridFunction::constant(g, -0.7)).super_violation == doctest::Approx(0.7));
}

TEST_CASE("yamabe solve") {
    GridPtr g = build_grid(make_sphere(2, 1.0), 3);
    YamabeOptions o;
    o.solve.tol = 1e-9;
    SolveResult a = yamabe_solve(constant_field(6), GridFunction::constant(g, 1.0), o);
    SolveResult b = yamabe_solve(constant_field(6), GridFunction::constant(g, 2.5), o);
    CHECK(a.report.converged);
    CHECK(b.report.converged);
    CHECK(a.u.values.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(b.u.values.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((a.u.values - b.u.values).cwiseAbs().maxCoeff() <= 2 * o.solve.tol);
    CHECK(a.u.values.minCoeff() >= 0.0);

    YamabeOptions lin = o;
    lin.s_prime = 0.0;
    CHECK(yamabe_solve(parse_scalar_field("affine:3,1,2"), GridFunction::constant(g, 1.0), lin)
              .u.values.cwiseAbs()
              .maxCoeff() <= 1e-6);
    YamabeOptions five = o;
    five.n = 5;
    CHECK(yamabe_solve(constant_field(2), GridFunction::constant(g, 1.0), five).u.values.cwiseAbs().maxCoeff() <= 1e-6);

    CHECK_THROWS_AS(yamabe_solve(parse_scalar_field("coord:2"), GridFunction::constant(g, 1.0), o), DomainError);
    CHECK_THROWS_AS(yamabe_solve(constant_field(6), GridFunction::constant(g, -1.0), o), ArgumentError);
    YamabeOptions bad = o;
    bad.s_prime = 1.0;
    CHECK_THROWS_AS(yamabe_solve(constant_field(6), GridFunction::constant(g, 1.0), bad), ArgumentError);
    GridPtr torus = build_grid(make_torus(Vec::Constant(2, 1.0)), 12);
    CHECK_THROWS_AS(yamabe_solve(constant_field(6), GridFunction::constant(torus, 1.0), o), ArgumentError);
}
