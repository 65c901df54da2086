#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "rvisc/jets.hpp"

using namespace rvisc;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

// Random smooth function on R^3 restricted to the model.
struct SmoothField {
    std::vector<Vec> omega;
    std::vector<double> amp, phase;

    SmoothField(Rng& rng, int terms = 4) {
        for (int k = 0; k < terms; ++k) {
            omega.push_back(rng.unit_vector(3) * rng.uniform(0.5, 2.5));
            amp.push_back(rng.uniform(-1.0, 1.0));
            phase.push_back(rng.uniform(0.0, 2 * M_PI));
        }
    }
    double operator()(const Vec& p) const {
        double s = 0.0;
        for (std::size_t k = 0; k < omega.size(); ++k) s += amp[k] * std::sin(omega[k].dot(p) + phase[k]);
        return s;
    }
};

}  // namespace

TEST_CASE("jet test: half squared distance is twice differentiable") {
    auto s2 = make_sphere(2, 1.0);
    Point p{vec({0, 0, 1})};
    ScalarField f = [&](const Point& q) { return 0.5 * std::pow(s2->distance(p, q), 2); };
    Jet2 jet = make_jet(*s2, p, 0.0, Vec::Zero(2), Mat::Identity(2, 2));
    CHECK(quadratic_jet_test(*s2, f, jet, JetSide::Sub).accept);
    CHECK(quadratic_jet_test(*s2, f, jet, JetSide::Super).accept);
}

TEST_CASE("jet test: cone at its vertex") {
    auto e2 = make_euclidean(2);
    Point p{vec({0.3, -0.2})};
    ScalarField cone = [&](const Point& q) { return e2->distance(p, q); };
    Jet2 flat = make_jet(*e2, p, 0.0, Vec::Zero(2), 5.0 * Mat::Identity(2, 2));
    CHECK(quadratic_jet_test(*e2, cone, flat, JetSide::Sub).accept);
    CHECK_FALSE(quadratic_jet_test(*e2, cone, flat, JetSide::Super).accept);

    Jet2 steep = make_jet(*e2, p, 0.0, vec({1.2, 0.5}), Mat::Zero(2, 2));
    JetVerdict v = quadratic_jet_test(*e2, cone, steep, JetSide::Sub);
    REQUIRE_FALSE(v.accept);
    REQUIRE(v.witness.has_value());
    const Vec w = v.witness->components.normalized();
    CHECK(w.dot(vec({1.2, 0.5}).normalized()) > 0.9);
}

TEST_CASE("jet test: smooth function with strict slack, convexity, smooth shifts") {
    auto s2 = make_sphere(2, 1.0);
    Rng rng(12);
    SmoothField sf(rng);
    ScalarField f = [&](const Point& q) { return sf(q.coords); };
    Point x = s2->random_point(rng);
    const Vec g = chart_gradient(*s2, f, x);
    const Mat h = chart_hessian(*s2, f, x);
    Jet2 sub = make_jet(*s2, x, f(x), g, h - 0.1 * Mat::Identity(2, 2));
    CHECK(quadratic_jet_test(*s2, f, sub, JetSide::Sub).accept);
    CHECK_FALSE(quadratic_jet_test(*s2, f, sub, JetSide::Super).accept);
    Jet2 super = make_jet(*s2, x, f(x), g, h + 0.1 * Mat::Identity(2, 2));
    CHECK(quadratic_jet_test(*s2, f, super, JetSide::Super).accept);

    // Midpoint of two accepted subjets is accepted on the same samples.
    Jet2 other = make_jet(*s2, x, f(x), g, h - 2.0 * Mat::Identity(2, 2));
    REQUIRE(quadratic_jet_test(*s2, f, other, JetSide::Sub).accept);
    Jet2 mid = make_jet(*s2, x, f(x), g, 0.5 * (sub.A.matrix + other.A.matrix));
    CHECK(quadratic_jet_test(*s2, f, mid, JetSide::Sub).accept);

    // Subtracting a C^2 psi and its jet leaves verdicts unchanged.
    SmoothField sp(rng);
    ScalarField psi = [&](const Point& q) { return sp(q.coords); };
    ScalarField diff = [&](const Point& q) { return f(q) - psi(q); };
    const Vec gp = chart_gradient(*s2, psi, x);
    const Mat hp = chart_hessian(*s2, psi, x);
    for (double delta : {-0.1, 0.1, 3.0}) {
        Jet2 j = make_jet(*s2, x, f(x), g, h + delta * Mat::Identity(2, 2));
        Jet2 js = make_jet(*s2, x, f(x) - psi(x), g - gp, h + delta * Mat::Identity(2, 2) - hp);
        for (auto side : {JetSide::Sub, JetSide::Super})
            CHECK(quadratic_jet_test(*s2, f, j, side).accept == quadratic_jet_test(*s2, diff, js, side).accept);
    }

    JetTestOptions big;
    big.radii = {4.0};
    CHECK_THROWS_AS(quadratic_jet_test(*s2, f, sub, JetSide::Sub, big), DomainError);
}

TEST_CASE("chart transfer") {
    auto s2 = make_sphere(2, 1.0);
    Point p{vec({0, 0, 1})};
    ScalarField half_sq = [&](const Point& q) { return 0.5 * std::pow(s2->distance(p, q), 2); };
    ScalarField cone = [&](const Point& q) { return s2->distance(p, q); };
    ScalarField constant = [](const Point&) { return 4.0; };
    Jet2 id = make_jet(*s2, p, 0.0, Vec::Zero(2), Mat::Identity(2, 2));
    Jet2 steep = make_jet(*s2, p, 0.0, vec({1.5, 0}), Mat::Zero(2, 2));
    Jet2 zero = make_jet(*s2, p, 4.0, Vec::Zero(2), Mat::Zero(2, 2));
    for (auto side : {JetSide::Sub, JetSide::Super}) {
        CHECK(chart_transfer_check(*s2, half_sq, id, side).agree);
        CHECK(chart_transfer_check(*s2, cone, steep, side).agree);
        auto c = chart_transfer_check(*s2, constant, zero, side);
        CHECK(c.agree);
        CHECK(c.on_manifold.accept);
    }

    // Height function z on the unit sphere: Hess z = -z g.
    Rng rng(2);
    for (int k = 0; k < 10; ++k) {
        Point x = s2->random_point(rng);
        ScalarField height = [](const Point& q) { return q.coords[2]; };
        CHECK((chart_hessian(*s2, height, x) + x.coords[2] * Mat::Identity(2, 2)).norm() < 1e-6);
    }
}

TEST_CASE("lemma correction term") {
    auto s2 = make_sphere(2, 1.0);
    Rng rng(6);
    SmoothField sf(rng);
    ScalarField phi = [&](const Point& q) { return sf(q.coords); };
    Point x{vec({0, 0, 1})};
    VectorField axis = [&](const Point& q) { return s2->make_tangent(q, vec({0.3, 1.0, -0.4})); };

    LemmaCorrection at_x = lemma_correction_term(*s2, phi, x, x, axis);
    CHECK(std::abs(at_x.correction) <= 1e-8);
    CHECK(std::abs(at_x.defect()) <= 1e-5);

    auto e2 = make_euclidean(2);
    ScalarField pe = [&](const Point& q) { return std::sin(q.coords[0]) * std::cos(2 * q.coords[1]); };
    VectorField ve = [](const Point& q) { return TangentVector{q, vec({1.0 + q.coords[1], -0.5})}; };
    LemmaCorrection flat = lemma_correction_term(*e2, pe, {vec({0, 0})}, {vec({0.7, -0.3})}, ve);
    CHECK(std::abs(flat.correction) <= 1e-6);

    // y at distance 0.5: angular field gives a nonzero defect between the two
    // second derivatives, matched by the correction.
    Point y = s2->exp(x, {x, vec({0.5, 0, 0})});
    VectorField angular = [&](const Point& q) { return s2->make_tangent(q, vec({-q.coords[1], q.coords[0], 0})); };
    VectorField tilted = [&](const Point& q) { return s2->make_tangent(q, vec({0, 1, 0})); };
    for (const auto& field : {axis, angular, tilted}) {
        LemmaCorrection c = lemma_correction_term(*s2, phi, x, y, field);
        CHECK(std::abs(c.defect()) <= 1e-5);
    }
    LemmaCorrection c = lemma_correction_term(*s2, phi, x, y, tilted);
    CHECK(std::abs(c.correction) > 1e-3);
    CHECK(std::abs(c.chart_second - c.manifold_second) > 1e-3);

    // A radial field pulls back to a radial line, whose image is a geodesic.
    VectorField radial = [&](const Point& q) {
        TangentVector t = s2->log(q, x);
        t.components /= -s2->norm(t);
        return t;
    };
    CHECK(std::abs(lemma_correction_term(*s2, phi, x, y, radial).correction) <= 1e-6);
    CHECK_THROWS_AS(lemma_correction_term(*s2, phi, x, Point{vec({0, 0, -1})}, axis), DomainError);
}

TEST_CASE("condition (*) verification") {
    auto e2 = make_euclidean(2);
    Point x{vec({0, 0})}, y{vec({1, 0})};
    HessianPair zero{x, y, Mat::Zero(4, 4)};
    const double eps = canonical_epsilon(zero);
    CHECK(eps == 0.5);
    const auto diag = [](double a) { return a * Mat::Identity(2, 2); };
    CHECK(verify_condition_star({zero, eps, {x, diag(-1)}, {y, diag(1)}}).holds);
    CHECK(verify_condition_star({zero, eps, {x, diag(-2)}, {y, diag(0)}}).holds);
    CHECK_FALSE(verify_condition_star({zero, eps, {x, diag(-2.5)}, {y, diag(0)}}).holds);
    CHECK_FALSE(verify_condition_star({zero, eps, {x, diag(0.1)}, {y, diag(0)}}).holds);

    HessianPair he = hessian_phi_alpha(e2, x, y, 3.0);
    CHECK(verify_condition_star(make_star_condition(he, {x, Mat::Zero(2, 2)}, {y, Mat::Zero(2, 2)})).holds);

    StarCandidates none = generate_star_candidates(zero, eps, 5, 1);
    REQUIRE(none.pairs.size() + none.skipped == 5);
    for (const auto& [p, q] : none.pairs) {
        CHECK(verify_condition_star({zero, eps, p, q}).holds);
    }
}

TEST_CASE("star candidates satisfy (*) and the order consequences") {
    auto s2 = make_sphere(2, 1.0);
    Point np{vec({0, 0, 1})}, eq{vec({1, 0, 0})};
    HessianPair a = hessian_phi_alpha(s2, np, eq, 1.0);
    StarCandidates c = generate_star_candidates(a, canonical_epsilon(a), 200, 3);
    CHECK(c.pairs.size() + c.skipped == 200);
    CHECK(c.skipped == 0);
    for (const auto& [p, q] : c.pairs) {
        CHECK(verify_condition_star(make_star_condition(a, p, q)).holds);
        CHECK(check_P_leq_LQ(*s2, np, eq, p, q).holds);
    }

    auto h2 = make_hyperbolic(2, 1.0);
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        Point x = h2->random_point(rng);
        TangentVector u = h2->random_tangent(x, rng);
        u.components *= rng.uniform(0.1, 3.0) / h2->norm(u);
        Point y = h2->exp(x, u);
        const double alpha = std::pow(2.0, rng.integer(0, 8));
        HessianPair ah = hessian_phi_alpha(h2, x, y, alpha);
        const double d = h2->distance(x, y);
        for (const auto& [p, q] : generate_star_candidates(ah, canonical_epsilon(ah), 20, trial).pairs)
            CHECK(check_P_leq_LQ(*h2, x, y, p, q, 1.5 * alpha * d * d).holds);
    }

    // Equality case.
    SymBilinear q{eq, Mat(vec({1.0, -2.0}).asDiagonal())};
    SymBilinear p = s2->parallel_transport(eq, np, q);
    OrderVerdict ov = check_P_leq_LQ(*s2, np, eq, p, q);
    CHECK(ov.holds);
    CHECK(std::abs(ov.margin) < 1e-12);
}

TEST_CASE("doubling diagnostic") {
    auto s2 = make_sphere(2, 1.0);
    GridPtr g = build_grid(s2, 3);
    PairwiseDistances table(*g);
    Rng rng(13);
    SmoothField su(rng), sv(rng);
    Vec u(g->size()), v(g->size());
    for (int i = 0; i < g->size(); ++i) {
        u[i] = su(g->node(i).coords);
        v[i] = sv(g->node(i).coords);
    }
    std::vector<double> alphas;
    for (int k = 0; k <= 12; ++k) alphas.push_back(std::pow(2.0, k));

    DoublingTrace shifted = doubling_diagnostic(GridFunction(g, v + Vec::Constant(g->size(), 0.7)), GridFunction(g, v),
                                                {1024.0, 4096.0}, &table);
    for (const auto& r : shifted.records) CHECK(r.m_alpha == doctest::Approx(0.7).epsilon(1e-12));

    // Large alpha: the diagonal wins for u = v.
    DoublingTrace same = doubling_diagnostic(GridFunction(g, v), GridFunction(g, v), {4096.0}, &table);
    CHECK(same.records[0].m_alpha == 0.0);
    CHECK(same.records[0].x_idx == same.records[0].y_idx);

    DoublingTrace t = doubling_diagnostic(GridFunction(g, u), GridFunction(g, v), alphas, &table);
    REQUIRE(t.records.size() == alphas.size());
    for (std::size_t k = 1; k < t.records.size(); ++k) CHECK(t.records[k].m_alpha <= t.records[k - 1].m_alpha);
    CHECK(t.records.front().alpha_d_sq > 0.0);
    CHECK(t.records.back().alpha_d_sq < t.records.front().alpha_d_sq);
    CHECK(t.records.back().m_alpha - (u - v).maxCoeff() <= edge_modulus(*g, u - v) + 1e-12);
    CHECK(t.records.back().m_alpha >= (u - v).maxCoeff());

    const std::string csv = t.to_csv();
    CHECK(csv.rfind("alpha,m_alpha,d,alpha_d_sq,x_idx,y_idx\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 14);
    CHECK_THROWS_AS(doubling_diagnostic(GridFunction(g, u), GridFunction(g, v), {2.0, 1.0}, &table), ArgumentError);
}

TEST_CASE("jet limits") {
    auto s2 = make_sphere(2, 1.0);
    Point x{vec({0, 0, 1})};
    Jet2 limit = make_jet(*s2, x, 1.5, vec({0.2, -0.1}), Mat(vec({1.0, -0.5}).asDiagonal()));
    CHECK(jet_limit_check(*s2, std::vector<Jet2>(10, limit), limit).converges);

    std::vector<Jet2> moving, oscillating;
    for (int k = 1; k <= 40; ++k) {
        const double t = std::pow(0.6, k);
        Point xk = s2->exp(x, {x, vec({t, 0.5 * t, 0})});
        TangentVector z = s2->parallel_transport(x, xk, limit.zeta);
        SymBilinear a = s2->parallel_transport(x, xk, limit.A);
        moving.push_back({xk, limit.value + t, z, a});
        SymBilinear b = a;
        b.matrix(0, 0) += (k % 2 == 0 ? 0.5 : -0.5);
        oscillating.push_back({xk, limit.value, z, b});
    }
    CHECK(jet_limit_check(*s2, moving, limit).converges);
    CHECK_FALSE(jet_limit_check(*s2, oscillating, limit).converges);
    CHECK_FALSE(jet_limit_check(*s2, {}, limit).converges);
}
