#include <cmath>

#include "doctest.h"
#include "rvisc/operators.hpp"

using namespace rvisc;

namespace {

Mat diag(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

const Point kNorth{(Vec(3) << 0, 0, 1).finished()};

}  // namespace

TEST_CASE("operator evaluation examples") {
    const Vec z = Vec::Zero(2);
    CHECK(neg_trace()->eval(kNorth, 0.0, z, Mat::Identity(2, 2)) == -2.0);
    CHECK(neg_detplus()->eval(kNorth, 0.0, z, diag(2, -3)) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(yamabe(3, constant_field(6), -1)->eval(kNorth, 1.0, z, Mat::Zero(2, 2)) == 7.0);
    // 4(n-1)/(n-2) = 8 at n = 3, exponent 5.
    CHECK(yamabe(3, constant_field(6), -1)->eval(kNorth, 2.0, z, Mat::Identity(2, 2)) == 12.0 + 32.0 - 16.0);

    CHECK(detplus(diag(2, 3)) == doctest::Approx(6.0));
    CHECK(detplus(diag(2, -3)) == doctest::Approx(2.0));
    CHECK(detplus(diag(-1, -2)) == 1.0);
    CHECK(detplus(diag(0, -2)) == 0.0);

    auto s2 = make_sphere(2, 1.0);
    const TangentVector zeta = s2->make_tangent(kNorth, (Vec(3) << 1, 0, 0).finished());
    CHECK(neg_trace()->eval(*s2, kNorth, 0.0, zeta, {kNorth, Mat::Identity(2, 2)}) == -2.0);
    const Point east{(Vec(3) << 1, 0, 0).finished()};
    CHECK_THROWS_AS(neg_trace()->eval(*s2, kNorth, 0.0, zeta, {east, Mat::Identity(2, 2)}), ArgumentError);
}

TEST_CASE("builder flags and errors") {
    CHECK(neg_trace()->flags().degenerate_elliptic);
    CHECK(neg_detplus()->flags().degenerate_elliptic);
    auto y = yamabe(3, constant_field(6), -1);
    CHECK(y->flags().proper);
    CHECK(y->gamma() == 6.0);
    CHECK_FALSE(yamabe(3, constant_field(-1), -1)->flags().proper);
    CHECK_THROWS_AS(yamabe(2, constant_field(1), 0), ArgumentError);
    // n = 5 gives the exponent 7/3.
    auto y5 = yamabe(5, constant_field(1), -1);
    CHECK(y5->r_min() == 0.0);
    CHECK_THROWS_AS(y5->eval(kNorth, -0.5, Vec::Zero(2), Mat::Zero(2, 2)), DomainError);
    CHECK(y5->eval(kNorth, 1.0, Vec::Zero(2), Mat::Zero(2, 2)) == doctest::Approx(2.0));
    CHECK_NOTHROW(y->eval(kNorth, -0.5, Vec::Zero(2), Mat::Zero(2, 2)));

    auto m = max_of({sum({scalar_term(), neg_trace()}), scalar_term(2.0)});
    CHECK(m->flags().proper);
    CHECK(m->flags().degenerate_elliptic);
    CHECK(m->gamma() == 1.0);
    CHECK_FALSE(scaled(-1.0, neg_trace())->flags().degenerate_elliptic);
    CHECK_THROWS_AS(sum({}), ArgumentError);

    CHECK_THROWS_AS(parse_scalar_field("const"), ArgumentError);
    CHECK_THROWS_AS(parse_scalar_field("wave:1"), ArgumentError);
    CHECK_THROWS_AS(parse_scalar_field("affine:1,2"), ArgumentError);
    CHECK(parse_scalar_field("affine:1,2,2")(kNorth) == 3.0);
    CHECK(*parse_scalar_field("const:6").constant == 6.0);
}

TEST_CASE("max-type catalog operator evaluates finitely on the sphere") {
    auto s2 = make_sphere(2, 1.0);
    auto f = example_5_3(parse_scalar_field("coord:0"), parse_scalar_field("affine:0.5,1,2"), 2, 1, 3, 1);
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const Point x = s2->random_point(rng);
        CHECK(std::isfinite(f->eval(x, rng.uniform(-2, 2), rng.normal_vector(2), rng.symmetric(2))));
    }
    // At A = 0, zeta = 0 the first branch is r - 0 - 0 - f^2 (detplus of the zero form is 0).
    CHECK(f->eval(kNorth, 1.0, Vec::Zero(2), Mat::Zero(2, 2)) == doctest::Approx(1.0));
    CHECK(f->eval(kNorth, 1.0, Vec::Zero(2), -Mat::Identity(2, 2)) == doctest::Approx(1.0 - 0.0));
}

TEST_CASE("json catalog") {
    auto y = operator_from_json(nlohmann::json::parse(R"({"op":"yamabe","n":3,"S":"const:6","S_prime":-1})"));
    CHECK(y->eval(kNorth, 1.0, Vec::Zero(2), Mat::Zero(2, 2)) == 7.0);
    auto lap = operator_from_json(nlohmann::json::parse(
        R"({"op":"sum","terms":[{"op":"scalar_term"},{"op":"neg_trace"},{"op":"source","f":"coord:2"}]})"));
    CHECK(lap->eval(kNorth, 1.0, Vec::Zero(2), Mat::Identity(2, 2)) == -2.0);
    auto again = operator_from_json(lap->to_json());
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
        const Mat a = rng.symmetric(2);
        CHECK(again->eval(kNorth, 0.3, Vec::Zero(2), a) == lap->eval(kNorth, 0.3, Vec::Zero(2), a));
    }
    for (const auto& name : operator_catalog()) {
        nlohmann::json j = {{"op", name}};
        if (name == "sum" || name == "max" || name == "min") j["terms"] = {{{"op", "neg_trace"}}};
        if (name == "scaled" || name == "odd_power") j["term"] = {{"op", "neg_trace"}};
        CHECK_NOTHROW(operator_from_json(j));
    }
    CHECK_THROWS_AS(operator_from_json({{"op", "laplace"}}), ArgumentError);
    CHECK_THROWS_AS(operator_from_json({{"n", 3}}), ArgumentError);
    CHECK_THROWS_AS(operator_from_json({{"op", "yamabe"}, {"n", 2}}), ArgumentError);
}

TEST_CASE("degenerate ellipticity check") {
    auto s2 = make_sphere(2, 1.0);
    OperatorSampling o;
    o.samples = 10000;
    for (const auto& f : {neg_trace(), neg_min_eigenvalue(), neg_max_eigenvalue(),
                          sum({scalar_term(), neg_trace(), source(parse_scalar_field("coord:2"))}),
                          max_of({neg_trace(), neg_min_eigenvalue()}), min_of({neg_trace(), scaled(3.0, neg_max_eigenvalue())}),
                          odd_power(2, neg_trace()), weighted_neg_trace(constant_field(0.5)),
                          yamabe(3, constant_field(6), -1), yamabe(5, constant_field(2), -1)}) {
        CAPTURE(f->to_json().dump());
        CHECK(ellipticity_check(*f, *s2, o).pass);
    }
    CheckReport bad = ellipticity_check(*scaled(-1.0, neg_trace()), *s2, o);
    CHECK_FALSE(bad.pass);
    CHECK(bad.details.contains("witness_A"));

    // -detplus is not monotone across the sign change of an eigenvalue.
    CHECK(-detplus(diag(2, 0.1)) > -detplus(diag(2, -1)));
    CHECK_FALSE(ellipticity_check(*neg_detplus(), *s2, o).pass);
    OperatorSampling psd = o;
    psd.psd_only = true;
    CHECK(ellipticity_check(*neg_detplus(), *s2, psd).pass);
}

TEST_CASE("monotonicity estimate") {
    auto s2 = make_sphere(2, 1.0);
    CHECK(monotonicity_estimate(*sum({scalar_term(), neg_min_eigenvalue()}), *s2, -2, 2) >= 1.0 - 1e-12);
    CHECK(monotonicity_estimate(*neg_trace(), *s2, -2, 2) == 0.0);
    CHECK(monotonicity_estimate(*yamabe(3, constant_field(6), -1), *s2, 0, 2) >= 6.0 - 1e-9);
    CHECK(monotonicity_estimate(*yamabe(3, constant_field(6), 0), *s2, 0, 2) == doctest::Approx(6.0));
}

TEST_CASE("parallel translation invariance") {
    for (const auto& m : {make_sphere(2, 1.0), make_hyperbolic(2, 1.0), make_sphere(3, 2.0)}) {
        OperatorSampling o;
        o.samples = 2000;
        CAPTURE(m->name());
        const double trace_tol = m->kind() == ModelKind::Hyperbolic ? 1e-10 : 1e-12;
        CHECK(invariance_check(*neg_trace(), *m, o).max_violation <= trace_tol);
        CHECK(invariance_check(*neg_detplus(), *m, o, 1e-10).pass);
        CHECK(invariance_check(*example_5_3(constant_field(1), constant_field(0), 2, 1, 1, 0), *m, o, 1e-9).pass);
    }
    auto s2 = make_sphere(2, 1.0);
    OperatorSpec axis("axis", [](const Point&, double, const Vec& z, const Mat&) { return z[0]; }, {true, true, true});
    CHECK_FALSE(invariance_check(axis, *s2).pass);
    CHECK_THROWS_AS(invariance_check(*source(parse_scalar_field("coord:2")), *s2), ArgumentError);
}

TEST_CASE("intrinsic modulus estimate") {
    auto s2 = make_sphere(2, 1.0);
    const std::vector<double> bins{0.01, 0.05, 0.1, 0.5, 1.0};
    OperatorSampling o;
    o.samples = 5000;
    ModulusTable inv = intrinsic_modulus_estimate(*neg_detplus(), *s2, bins, o);
    CHECK(inv.pass);
    CHECK(inv.omega.back() <= 1e-9);

    // S(x) r with S = z: |S(y) - S(x)| <= d(x, y) and |r| <= 2.
    OperatorSpec sr("sr", [](const Point& x, double r, const Vec&, const Mat&) { return x.coords[2] * r; },
                    {true, false, false});
    ModulusTable t = intrinsic_modulus_estimate(sr, *s2, bins, o, 0.05);
    for (std::size_t k = 0; k < bins.size(); ++k) {
        CHECK(t.omega[k] <= 2.0 * bins[k] + 1e-9);
        if (k) CHECK(t.omega[k] >= t.omega[k - 1]);
    }
    CHECK(t.pass);

    OperatorSpec step("step", [](const Point& x, double, const Vec&, const Mat&) { return x.coords[2] > 0 ? 1.0 : 0.0; },
                      {true, false, false});
    o.samples = 20000;
    ModulusTable s = intrinsic_modulus_estimate(step, *s2, {0.05, 0.1, 0.5, 1.0}, o, 0.05);
    CHECK_FALSE(s.pass);
    CHECK(s.omega[0] == 1.0);
}

TEST_CASE("two-flat modulus estimate") {
    auto s2 = make_sphere(2, 1.0);
    const std::vector<double> deltas{0.0, 0.01, 0.1, 1.0};
    const std::vector<double> dists{0.01, 0.1, 0.5};
    OperatorSampling o;
    o.samples = 2000;
    TwoFlatTable tr = twoflat_modulus_estimate(*neg_trace(), *s2, deltas, dists, o);
    for (const auto& c : tr.cells) CHECK(c.eps_hat <= 2.0 * c.delta + 1e-9);
    CHECK(tr.pass);

    TwoFlatTable ev = twoflat_modulus_estimate(*neg_min_eigenvalue(), *s2, deltas, dists, o);
    for (const auto& c : ev.cells) CHECK(c.eps_hat <= c.delta + 1e-9);
    CHECK(ev.pass);

    auto weighted = weighted_neg_trace(parse_scalar_field("affine:2,0.5,2"));
    TwoFlatTable w = twoflat_modulus_estimate(*weighted, *s2, deltas, dists, o, 0.1);
    // Nonincreasing as delta decreases at fixed d.
    for (std::size_t i = 0; i + 1 < w.cells.size(); ++i)
        if (w.cells[i].d == w.cells[i + 1].d) CHECK(w.cells[i].eps_hat <= w.cells[i + 1].eps_hat + 1e-12);
    CHECK(w.pass);
    CHECK(w.cells.back().eps_hat > w.cells.front().eps_hat);
}
