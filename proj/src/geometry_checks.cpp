#include "rvisc/geometry_checks.hpp"

#include <cmath>

#include "rvisc/parallel.hpp"

namespace rvisc {

namespace {

struct Row {
    double iso = 0, roundtrip = 0, inverse = 0, additivity = 0, symmetry = 0, triangle = 0, curvature = 0;
    bool curvature_sampled = false;
};

Point nearby(const Manifold& m, const Point& x, Rng& rng) {
    TangentVector u = m.random_tangent(x, rng);
    u.components *= 0.9 * std::min(m.injectivity_radius(x), 3.0) * rng.uniform() / m.norm(u);
    return m.exp(x, u);
}

}  // namespace

std::vector<CheckReport> geometry_suite(const ManifoldPtr& mp, const GeometrySuiteOptions& opts) {
    if (!mp) throw ArgumentError("geometry_suite: null model");
    const Manifold& m = *mp;
    const auto n = static_cast<std::size_t>(std::max(0L, opts.samples));
    std::vector<Row> rows(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(opts.seed, i);
        Row& r = rows[i];
        const Point x = m.random_point(rng);
        const Point y = nearby(m, x, rng);
        const TangentVector v = m.random_tangent(x, rng), w = m.random_tangent(x, rng);
        const TangentVector lv = m.parallel_transport(x, y, v), lw = m.parallel_transport(x, y, w);
        r.iso = std::abs(m.metric(y, lv, lw) - m.metric(x, v, w));
        r.roundtrip = m.norm({x, m.parallel_transport(y, x, lv).components - v.components});

        TangentVector u = m.random_tangent(x, rng);
        u.components *= 0.9 * std::min(m.injectivity_radius(x), 3.0) * rng.uniform() / m.norm(u);
        r.inverse = m.norm({x, m.log(x, m.exp(x, u)).components - u.components});

        const double d = m.distance(x, y);
        if (d > 1e-6) {
            GeodesicSegment seg(mp, x, y);
            const double t = seg.length() * rng.uniform();
            r.additivity = std::abs(m.distance(x, seg.point_at(t)) - t);
        }
        r.symmetry = std::abs(d - m.distance(y, x));
        const Point z = nearby(m, x, rng);
        r.triangle = std::max(0.0, m.distance(x, z) - d - m.distance(y, z));

        const double vw = m.metric(x, v, w), vv = m.metric(x, v, v), ww = m.metric(x, w, w);
        if (m.dim() >= 2 && vv * ww - vw * vw > 1e-2 * vv * ww) {
            const double k = m.sectional_curvature(x, v, w);
            r.curvature_sampled = true;
            if (const auto c = m.constant_curvature())
                r.curvature = std::abs(k - *c);
            else
                r.curvature = std::max({0.0, m.min_curvature() - k, k - m.max_curvature()});
        }
    });

    const auto report = [&](const char* name, double tol, auto field) {
        CheckReport rep;
        rep.check = name;
        rep.model = m.name();
        rep.samples = opts.samples;
        rep.tolerance = tol;
        for (const Row& r : rows) rep.max_violation = std::max(rep.max_violation, field(r));
        rep.pass = rep.max_violation <= tol;
        return rep;
    };
    std::vector<CheckReport> out;
    out.push_back(report("transport_isometry", 1e-9, [](const Row& r) { return r.iso; }));
    out.push_back(report("transport_roundtrip", 1e-9, [](const Row& r) { return r.roundtrip; }));
    out.push_back(report("exp_log_inverse", 1e-9, [](const Row& r) { return r.inverse; }));
    out.push_back(report("geodesic_additivity", 1e-9, [](const Row& r) { return r.additivity; }));
    out.push_back(report("distance_symmetry", 1e-12, [](const Row& r) { return r.symmetry; }));
    out.push_back(report("triangle_inequality", 1e-9, [](const Row& r) { return r.triangle; }));
    CheckReport curv = report("sectional_curvature", 1e-9, [](const Row& r) { return r.curvature; });
    long sampled = 0;
    for (const Row& r : rows) sampled += r.curvature_sampled ? 1 : 0;
    curv.details["planes_sampled"] = sampled;
    out.push_back(curv);
    return out;
}

}  // namespace rvisc
