#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "rvisc/geometry_checks.hpp"
#include "rvisc/grid.hpp"
#include "rvisc/jacobi.hpp"
#include "rvisc/jets.hpp"
#include "rvisc/operators.hpp"
#include "rvisc/solver.hpp"

namespace rvisc::cli {

using nlohmann::json;

std::string fmt(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Number: return "number";
        case Kind::Integer: return "integer";
        case Kind::Boolean: return "boolean";
        case Kind::String: return "string";
        case Kind::Object: return "object";
        case Kind::Array: return "array";
        case Kind::NumberOrString: return "number or string";
    }
    return "?";
}

bool matches(const json& v, Kind k) {
    switch (k) {
        case Kind::Number: return v.is_number();
        case Kind::Integer: return v.is_number_integer();
        case Kind::Boolean: return v.is_boolean();
        case Kind::String: return v.is_string();
        case Kind::Object: return v.is_object();
        case Kind::Array: return v.is_array();
        case Kind::NumberOrString: return v.is_number() || v.is_string();
    }
    return false;
}

template <class T>
T take(json& cfg, const char* key, T fallback) {
    if (!cfg.contains(key)) cfg[key] = fallback;
    return cfg[key].get<T>();
}

json take_json(json& cfg, const char* key, json fallback) {
    if (!cfg.contains(key)) cfg[key] = std::move(fallback);
    return cfg[key];
}

ScalarFieldSpec field_from(const json& v) {
    if (v.is_number()) return constant_field(v.get<double>());
    return parse_scalar_field(v.get<std::string>());
}

ManifoldPtr model_from(const json& j, const std::string& where) {
    try {
        return manifold_from_json(j);
    } catch (const ArgumentError& e) {
        throw UsageError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw UsageError(where + ": " + e.what());
    } catch (const json::exception& e) {
        throw UsageError(where + ": " + e.what());
    }
}

OperatorPtr operator_from(const json& j, const std::string& where) {
    try {
        return operator_from_json(j);
    } catch (const ArgumentError& e) {
        throw UsageError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw UsageError(where + ": " + e.what());
    }
}

ScalarFieldSpec field_arg(const json& v, const std::string& where) {
    try {
        return field_from(v);
    } catch (const ArgumentError& e) {
        throw UsageError(where + ": " + e.what());
    }
}

const json kSphere = {{"model", "sphere"}, {"dim", 2}, {"radius", 1.0}};
const json kHyperbolic = {{"model", "hyperbolic"}, {"dim", 2}, {"curvature", -1.0}};
const json kTorus = {{"model", "torus"}, {"dim", 2}, {"periods", 1.0}};
const json kEuclidean = {{"model", "euclidean"}, {"dim", 2}};

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

GridPtr grid_from(json& cfg) {
    const ManifoldPtr m = model_from(take_json(cfg, "model", kSphere), "model");
    const int res = take<int>(cfg, "resolution", m->kind() == ModelKind::FlatTorus ? 24 : 3);
    const double scale = take<double>(cfg, "step_scale", 1.0);
    try {
        return build_grid(m, res, scale);
    } catch (const ArgumentError& e) {
        throw UsageError(std::string("grid: ") + e.what());
    }
}

std::string coords_header(const Grid& g) {
    std::string h;
    for (int k = 0; k < g.model()->ambient_dim(); ++k) h += ",x" + std::to_string(k);
    return h;
}

std::string coords_row(const Grid& g, int i) {
    std::string s;
    for (Eigen::Index k = 0; k < g.node(i).coords.size(); ++k) s += "," + fmt(g.node(i).coords[k]);
    return s;
}

Vec field_values(const Grid& g, const ScalarFieldSpec& f) {
    Vec v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = f(g.node(i));
    return v;
}

json checks_json(const std::vector<CheckReport>& rs) {
    json a = json::array();
    for (const auto& r : rs) a.push_back(r.to_json());
    return a;
}

bool all_pass(const std::vector<CheckReport>& rs) {
    return std::all_of(rs.begin(), rs.end(), [](const CheckReport& r) { return r.pass; });
}

// geometry-check --------------------------------------------------------------

Outcome geometry_check(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg, {{"model", Kind::Object}, {"models", Kind::Array}, {"samples", Kind::Integer}}, "geometry-check");
    if (cfg.contains("model") && cfg.contains("models"))
        throw UsageError("geometry-check: give either 'model' or 'models'");
    json models = cfg.contains("models") ? cfg["models"] : json::array({take_json(cfg, "model", kSphere)});
    GeometrySuiteOptions opts;
    opts.samples = take<long>(cfg, "samples", 1000);
    opts.seed = ctx.seed;
    if (opts.samples < 1) throw UsageError("geometry-check: samples must be positive");

    std::vector<CheckReport> all;
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto rs = geometry_suite(model_from(models[k], "models[" + std::to_string(k) + "]"), opts);
        all.insert(all.end(), rs.begin(), rs.end());
    }
    std::ostringstream csv;
    csv << "model,check,samples,max_violation,tolerance,pass\n";
    for (const auto& r : all)
        csv << r.model << ',' << r.check << ',' << r.samples << ',' << fmt(r.max_violation) << ','
            << fmt(r.tolerance) << ',' << (r.pass ? "PASS" : "FAIL") << '\n';
    write_file(ctx.out / "geometry_check.csv", csv.str());
    return {all_pass(all), {{"checks", checks_json(all)}}};
}

// hessian-sign ----------------------------------------------------------------

// d^2 phi(v, L v) for constant curvature K along a geodesic of length l.
double parallel_pair_closed_form(double k, double l, double v_normal_sq) {
    if (k > 0) {
        const double s = std::sqrt(k) * l;
        return -4.0 * l * std::sqrt(k) * (1.0 - std::cos(s)) / std::sin(s) * v_normal_sq;
    }
    if (k < 0) {
        const double s = std::sqrt(-k) * l;
        return 4.0 * l * std::sqrt(-k) * (std::cosh(s) - 1.0) / std::sinh(s) * v_normal_sq;
    }
    return 0.0;
}

Outcome hessian_sign(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg,
             {{"model", Kind::Object},
              {"samples", Kind::Integer},
              {"min_length", Kind::Number},
              {"max_length", Kind::Number},
              {"normal_only", Kind::Boolean},
              {"k0", Kind::Number},
              {"tol", Kind::Number},
              {"closed_form_tol", Kind::Number}},
             "hessian-sign");
    const ManifoldPtr m = model_from(take_json(cfg, "model", kSphere), "model");
    ParallelPairSampling opts;
    opts.samples = take<long>(cfg, "samples", 10000);
    opts.seed = ctx.seed;
    opts.min_length = take<double>(cfg, "min_length", 0.05);
    opts.max_length = take<double>(cfg, "max_length", 0.0);
    opts.normal_only = take<bool>(cfg, "normal_only", false);
    const double tol = take<double>(cfg, "tol", 1e-8);
    const double cf_tol = take<double>(cfg, "closed_form_tol", 1e-6);
    std::optional<double> k0;
    if (cfg.contains("k0")) k0 = cfg["k0"].get<double>();
    else if (m->min_curvature() < 0) k0 = -m->min_curvature();
    if (k0) cfg["k0"] = *k0;

    std::vector<CheckReport> checks;
    try {
        checks.push_back(check_sign_condition(m, opts, tol));
        if (k0) checks.push_back(check_curvature_bound(m, *k0, opts, tol));
    } catch (const ArgumentError& e) {
        throw UsageError(std::string("hessian-sign: ") + e.what());
    }

    const auto samples = sample_parallel_pairs(m, opts);
    const auto kc = m->constant_curvature();
    std::ostringstream csv;
    csv << "index,length,value,v_norm_sq,v_normal_sq,closed_form,bound\n";
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        csv << i << ',' << fmt(s.length) << ',' << fmt(s.value) << ',' << fmt(s.v_norm_sq) << ','
            << fmt(s.v_normal_sq) << ',';
        if (kc) {
            const double cf = parallel_pair_closed_form(*kc, s.length, s.v_normal_sq);
            const double scale = std::max(std::abs(cf), s.length * s.length * s.v_norm_sq);
            if (scale > 0) worst_rel = std::max(worst_rel, std::abs(s.value - cf) / scale);
            csv << fmt(cf);
        }
        csv << ',';
        if (k0) csv << fmt(2.0 * *k0 * s.length * s.length * s.v_norm_sq);
        csv << '\n';
    }
    if (kc) {
        CheckReport r;
        r.check = "closed_form";
        r.model = m->name();
        r.samples = static_cast<long>(samples.size());
        r.max_violation = worst_rel;
        r.tolerance = cf_tol;
        r.pass = worst_rel <= cf_tol;
        r.details = {{"curvature", *kc}};
        checks.push_back(r);
    }
    write_file(ctx.out / "hessian_sign.csv", csv.str());
    return {all_pass(checks), {{"checks", checks_json(checks)}}};
}

// comparison-demo -------------------------------------------------------------

Outcome comparison_demo(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg,
             {{"model", Kind::Object},
              {"resolution", Kind::Integer},
              {"step_scale", Kind::Number},
              {"alpha_max_exponent", Kind::Integer},
              {"star_model", Kind::Object},
              {"star_samples", Kind::Integer},
              {"star_batch", Kind::Integer},
              {"floor_factor", Kind::Number},
              {"order_tol", Kind::Number}},
             "comparison-demo");
    const GridPtr g = grid_from(cfg);
    const int kmax = take<int>(cfg, "alpha_max_exponent", 12);
    const double floor_factor = take<double>(cfg, "floor_factor", 10.0);
    const long star_samples = take<long>(cfg, "star_samples", 1000);
    const int batch = take<int>(cfg, "star_batch", 10);
    const double order_tol = take<double>(cfg, "order_tol", 1e-9);
    const ManifoldPtr sm = model_from(take_json(cfg, "star_model", cfg["model"]), "star_model");
    if (kmax < 0 || batch < 1 || star_samples < 0) throw UsageError("comparison-demo: bad sampling sizes");

    std::vector<double> alphas;
    for (int k = 0; k <= kmax; ++k) alphas.push_back(std::ldexp(1.0, k));
    const GridFunction u(g, smooth_random_values(*g, 2 * ctx.seed + 1));
    const GridFunction v(g, smooth_random_values(*g, 2 * ctx.seed + 2));
    const PairwiseDistances table(*g);
    const DoublingTrace trace = doubling_diagnostic(u, v, alphas, &table);
    const DoublingTrace same = doubling_diagnostic(u, u, alphas, &table);
    write_file(ctx.out / "doubling.csv", trace.to_csv());
    write_file(ctx.out / "doubling_equal.csv", same.to_csv());

    const Vec diff = u.values - v.values;
    const double h = g->spacing();
    const auto& last = trace.records.back();
    const double floor = last.alpha * h * h;
    const double modulus = edge_modulus(*g, diff);
    const double gap = std::abs(last.m_alpha - diff.maxCoeff());

    CheckReport decay;
    decay.check = "doubling_decay";
    decay.model = g->model()->name();
    decay.samples = static_cast<long>(alphas.size());
    decay.max_violation = last.alpha_d_sq;
    decay.tolerance = floor_factor * floor;
    decay.pass = last.alpha_d_sq <= decay.tolerance;
    decay.details = {{"spacing", h}, {"floor", floor}, {"first_alpha_d_sq", trace.records.front().alpha_d_sq}};

    CheckReport limit;
    limit.check = "doubling_limit";
    limit.model = decay.model;
    limit.samples = decay.samples;
    limit.max_violation = gap;
    limit.tolerance = modulus;
    limit.pass = gap <= modulus;
    limit.details = {{"m_final", last.m_alpha}, {"max_diff", diff.maxCoeff()}};

    CheckReport equal;
    equal.check = "doubling_equal";
    equal.model = decay.model;
    equal.samples = decay.samples;
    double min_m = 0.0;
    for (const auto& r : same.records) min_m = std::min(min_m, r.m_alpha);
    equal.max_violation = std::max(std::abs(same.records.back().m_alpha), -min_m);
    equal.tolerance = 0.0;
    equal.pass = equal.max_violation == 0.0;

    // Star candidates at random pairs (x, y, alpha).
    Rng rng(ctx.seed * 7919 + 17);
    const double k0 = std::max(0.0, -sm->min_curvature());
    const double dmax = std::min(3.0, 0.8 * sm->global_injectivity_radius());
    std::ostringstream csv;
    csv << "index,alpha,d,star_holds,lower_margin,upper_margin,order_holds,order_margin,slack\n";
    long index = 0, star_fail = 0, order_fail = 0, skipped = 0;
    double worst_order = std::numeric_limits<double>::infinity();
    for (long t = 0; index < star_samples; ++t) {
        const Point x = sm->random_point(rng);
        TangentVector w = sm->random_tangent(x, rng);
        w.components *= rng.uniform(0.1, dmax) / sm->norm(w);
        const Point y = sm->exp(x, w);
        const double alpha = std::ldexp(1.0, rng.integer(0, 8));
        const double d = sm->distance(x, y);
        const HessianPair a = hessian_phi_alpha(sm, x, y, alpha);
        const int n = static_cast<int>(std::min<long>(batch, star_samples - index));
        const StarCandidates c = generate_star_candidates(a, canonical_epsilon(a), n, ctx.seed * 1000003 + t);
        skipped += c.skipped;
        const double slack = 1.5 * k0 * alpha * d * d;
        for (const auto& [p, q] : c.pairs) {
            const StarVerdict sv = verify_condition_star(make_star_condition(a, p, q));
            const OrderVerdict ov = check_P_leq_LQ(*sm, x, y, p, q, slack, order_tol);
            star_fail += !sv.holds;
            order_fail += !ov.holds;
            worst_order = std::min(worst_order, ov.margin);
            csv << index++ << ',' << fmt(alpha) << ',' << fmt(d) << ',' << (sv.holds ? 1 : 0) << ','
                << fmt(sv.lower_margin) << ',' << fmt(sv.upper_margin) << ',' << (ov.holds ? 1 : 0) << ','
                << fmt(ov.margin) << ',' << fmt(slack) << '\n';
        }
        if (c.pairs.empty() && t > 10 * star_samples) break;
    }
    write_file(ctx.out / "star.csv", csv.str());

    CheckReport star;
    star.check = "star_candidates";
    star.model = sm->name();
    star.samples = index;
    star.max_violation = static_cast<double>(star_fail + order_fail);
    star.tolerance = 0.0;
    star.pass = star_fail == 0 && order_fail == 0 && index == star_samples;
    star.details = {{"star_failures", star_fail},
                    {"order_failures", order_fail},
                    {"skipped", skipped},
                    {"min_order_margin", index ? worst_order : 0.0},
                    {"K0", k0}};

    const std::vector<CheckReport> checks{decay, limit, equal, star};
    return {all_pass(checks), {{"checks", checks_json(checks)}}};
}

// solve -----------------------------------------------------------------------

const json kHelmholtzZ = {{"op", "sum"},
                          {"terms",
                           {{{"op", "scalar_term"}, {"c", 1.0}},
                            {{"op", "neg_trace"}},
                            {{"op", "source"}, {"f", "coord:2"}}}}};

SolveOptions solve_options(json& cfg) {
    SolveOptions o;
    o.tol = take<double>(cfg, "tol", 1e-8);
    o.max_iter = take<int>(cfg, "max_iter", 200000);
    o.damping = take<double>(cfg, "damping", 0.0);
    o.lipschitz_every = take<int>(cfg, "lipschitz_every", 100);
    return o;
}

const Schema kSolveSchema = {{"model", Kind::Object},
                             {"resolution", Kind::Integer},
                             {"step_scale", Kind::Number},
                             {"operator", Kind::Object},
                             {"initial", Kind::NumberOrString},
                             {"exact", Kind::NumberOrString},
                             {"error_tol", Kind::Number},
                             {"tol", Kind::Number},
                             {"max_iter", Kind::Integer},
                             {"damping", Kind::Number},
                             {"lipschitz_every", Kind::Integer},
                             {"dirichlet", Kind::Object},
                             {"verify_viscosity", Kind::Boolean},
                             {"viscosity_tol_factor", Kind::Number}};

Outcome solve(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg, kSolveSchema, "solve");
    const GridPtr g = grid_from(cfg);
    const OperatorPtr f = operator_from(take_json(cfg, "operator", kHelmholtzZ), "operator");
    const ScalarFieldSpec init = field_arg(take_json(cfg, "initial", 0.0), "initial");
    const SolveOptions opts = solve_options(cfg);
    const bool dirichlet = cfg.contains("dirichlet");
    const bool verify = take<bool>(cfg, "verify_viscosity", !dirichlet);
    const double visc_factor = take<double>(cfg, "viscosity_tol_factor", 10.0);
    if (!f->flags().degenerate_elliptic) throw UsageError("solve: operator '" + f->name() + "' is not degenerate elliptic");

    const GridFunction u0(g, field_values(*g, init));
    SolveResult res;
    if (dirichlet) {
        json& d = cfg["dirichlet"];
        validate(d, {{"center", Kind::Array}, {"radius", Kind::Number}, {"boundary", Kind::NumberOrString}},
                 "solve.dirichlet");
        if (!d.contains("center") || !d.contains("radius") || !d.contains("boundary"))
            throw UsageError("solve.dirichlet: center, radius and boundary are required");
        Vec c(static_cast<Eigen::Index>(d["center"].size()));
        for (std::size_t k = 0; k < d["center"].size(); ++k) {
            if (!d["center"][k].is_number()) throw UsageError("solve.dirichlet: center must be numeric");
            c[static_cast<Eigen::Index>(k)] = d["center"][k].get<double>();
        }
        if (c.size() != g->model()->ambient_dim()) throw UsageError("solve.dirichlet: center has the wrong length");
        const Point center = g->model()->make_point(c);
        const auto mask = geodesic_ball_mask(*g, center, d["radius"].get<double>());
        const GridFunction boundary(g, field_values(*g, field_arg(d["boundary"], "solve.dirichlet.boundary")));
        try {
            res = solve_dirichlet(*f, mask, boundary, u0, opts);
        } catch (const ArgumentError& e) {
            throw UsageError(std::string("solve.dirichlet: ") + e.what());
        }
    } else {
        res = solve_fixed_point(*f, u0, opts);
    }

    std::optional<Vec> exact;
    if (cfg.contains("exact")) exact = field_values(*g, field_arg(cfg["exact"], "exact"));

    std::ostringstream csv;
    csv << "node" << coords_header(*g) << ",value" << (exact ? ",exact,error" : "") << '\n';
    for (int i = 0; i < g->size(); ++i) {
        csv << i << coords_row(*g, i) << ',' << fmt(res.u[i]);
        if (exact) csv << ',' << fmt((*exact)[i]) << ',' << fmt(std::abs(res.u[i] - (*exact)[i]));
        csv << '\n';
    }
    write_file(ctx.out / "solution.csv", csv.str());

    json results = {{"nodes", g->size()}, {"spacing", g->spacing()}, {"solve", res.report.to_json()}};
    bool pass = res.report.converged;
    if (exact) {
        const double err = (res.u.values - *exact).cwiseAbs().maxCoeff();
        results["sup_error"] = err;
        if (cfg.contains("error_tol")) {
            results["error_tol"] = cfg["error_tol"];
            pass = pass && err <= cfg["error_tol"].get<double>();
        }
    }
    if (verify) {
        const ViscosityReport vr = verify_viscosity_residual(*f, res.u, visc_factor);
        results["viscosity"] = vr.to_json();
        pass = pass && vr.pass;
    } else {
        results["viscosity"] = nullptr;
    }
    return {pass, results};
}

// yamabe ----------------------------------------------------------------------

Outcome yamabe(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg,
             {{"model", Kind::Object},
              {"resolution", Kind::Integer},
              {"step_scale", Kind::Number},
              {"n", Kind::Integer},
              {"S", Kind::NumberOrString},
              {"S_prime", Kind::Number},
              {"initial", Kind::Array},
              {"tol", Kind::Number},
              {"max_iter", Kind::Integer},
              {"damping", Kind::Number},
              {"lipschitz_every", Kind::Integer},
              {"agree_tol", Kind::Number},
              {"zero_tol", Kind::Number}},
             "yamabe");
    const GridPtr g = grid_from(cfg);
    YamabeOptions yo;
    yo.n = take<int>(cfg, "n", 3);
    yo.s_prime = take<double>(cfg, "S_prime", -1.0);
    const ScalarFieldSpec s = field_arg(take_json(cfg, "S", "const:6"), "S");
    const json inits = take_json(cfg, "initial", json::array({0.5, 2.0}));
    if (!cfg.contains("tol")) cfg["tol"] = 1e-10;
    yo.solve = solve_options(cfg);
    const double agree_tol = take<double>(cfg, "agree_tol", 1e-6);
    const double zero_tol = take<double>(cfg, "zero_tol", 1e-6);
    if (inits.empty()) throw UsageError("yamabe: 'initial' must not be empty");

    std::vector<SolveResult> runs;
    json reports = json::array();
    for (std::size_t k = 0; k < inits.size(); ++k) {
        if (!matches(inits[k], Kind::NumberOrString)) throw UsageError("yamabe: initial values must be numbers or fields");
        const GridFunction u0(g, field_values(*g, field_arg(inits[k], "initial")));
        try {
            runs.push_back(yamabe_solve(s, u0, yo));
        } catch (const ArgumentError& e) {
            throw UsageError(std::string("yamabe: ") + e.what());
        } catch (const DomainError& e) {
            throw UsageError(std::string("yamabe: ") + e.what());
        }
        reports.push_back(runs.back().report.to_json());
    }

    std::ostringstream csv;
    csv << "node" << coords_header(*g);
    for (std::size_t k = 0; k < runs.size(); ++k) csv << ",u" << k;
    csv << '\n';
    for (int i = 0; i < g->size(); ++i) {
        csv << i << coords_row(*g, i);
        for (const auto& r : runs) csv << ',' << fmt(r.u[i]);
        csv << '\n';
    }
    write_file(ctx.out / "yamabe.csv", csv.str());

    bool converged = true;
    double spread = 0.0, sup = 0.0;
    for (const auto& r : runs) {
        converged = converged && r.report.converged;
        spread = std::max(spread, (r.u.values - runs.front().u.values).cwiseAbs().maxCoeff());
        sup = std::max(sup, r.u.values.cwiseAbs().maxCoeff());
    }
    // u = 0 solves the equation and S > 0 makes it the only solution.
    const bool pass = converged && spread <= agree_tol && sup <= zero_tol;
    return {pass,
            {{"solves", reports},
             {"converged", converged},
             {"max_spread", spread},
             {"sup_abs", sup}}};
}

// report ----------------------------------------------------------------------

Outcome operators_section(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg, {{"samples", Kind::Integer}, {"model", Kind::Object}}, "operators");
    const long samples = take<long>(cfg, "samples", 10000);
    const ManifoldPtr m = model_from(take_json(cfg, "model", kSphere), "model");
    OperatorSampling o;
    o.samples = samples;
    o.seed = ctx.seed;

    const std::vector<OperatorPtr> builders = {neg_trace(),
                                               neg_detplus(),
                                               neg_min_eigenvalue(),
                                               neg_max_eigenvalue(),
                                               scalar_term(1.0),
                                               source(parse_scalar_field("coord:2")),
                                               weighted_neg_trace(parse_scalar_field("const:2")),
                                               example_5_3(constant_field(1.0), constant_field(0.0)),
                                               yamabe(3, constant_field(6.0), -1.0)};
    std::vector<CheckReport> checks;
    for (const auto& b : builders) {
        CheckReport r = ellipticity_check(*b, *m, o);
        r.check = "ellipticity:" + b->name();
        checks.push_back(r);
    }
    for (const auto& b : {neg_trace(), neg_detplus()}) {
        CheckReport r = invariance_check(*b, *m, o, 1e-10);
        r.check = "invariance:" + b->name();
        checks.push_back(r);
    }
    const OperatorPtr y = yamabe(3, constant_field(6.0), -1.0);
    const double gamma = monotonicity_estimate(*y, *m, 0.0, 2.0, samples, ctx.seed);
    CheckReport mono;
    mono.check = "monotonicity:yamabe";
    mono.model = m->name();
    mono.samples = samples;
    mono.max_violation = std::max(0.0, 6.0 - gamma);
    mono.tolerance = 0.0;
    mono.pass = gamma >= 6.0;
    mono.details = {{"gamma_hat", gamma}, {"min_S", 6.0}};
    checks.push_back(mono);

    std::ostringstream csv;
    csv << "check,model,samples,max_violation,tolerance,pass\n";
    for (const auto& r : checks)
        csv << r.check << ',' << r.model << ',' << r.samples << ',' << fmt(r.max_violation) << ','
            << fmt(r.tolerance) << ',' << (r.pass ? "PASS" : "FAIL") << '\n';
    write_file(ctx.out / "operators.csv", csv.str());
    return {all_pass(checks), {{"checks", checks_json(checks)}}};
}

struct Section {
    std::string name;
    std::string command;
    std::function<json(const json&)> config;
};

Outcome report(Context& ctx) {
    json& cfg = ctx.config;
    validate(cfg, {{"sections", Kind::Array}, {"resolution", Kind::Integer}, {"samples", Kind::Integer}}, "report");
    const int res = take<int>(cfg, "resolution", 3);
    const long samples = take<long>(cfg, "samples", 1000);

    const std::vector<Section> catalog = {
        {"geometry", "geometry-check",
         [&](const json&) {
             return json{{"models",
                          {kSphere, kHyperbolic, kTorus, kEuclidean,
                           {{"model", "product"}, {"factors", {kSphere, kHyperbolic}}}}},
                         {"samples", samples}};
         }},
        {"hessian_sphere", "hessian-sign", [&](const json&) { return json{{"model", kSphere}, {"samples", samples}}; }},
        {"hessian_hyperbolic", "hessian-sign",
         [&](const json&) { return json{{"model", kHyperbolic}, {"samples", samples}, {"max_length", 3.0}}; }},
        {"hessian_euclidean", "hessian-sign",
         [&](const json&) { return json{{"model", kEuclidean}, {"samples", samples}}; }},
        {"comparison_sphere", "comparison-demo",
         [&](const json&) { return json{{"resolution", res}, {"star_samples", samples}}; }},
        {"comparison_hyperbolic", "comparison-demo",
         [&](const json&) {
             return json{{"resolution", res}, {"star_samples", samples}, {"star_model", kHyperbolic}};
         }},
        {"solve_constant", "solve",
         [&](const json&) {
             return json{{"resolution", res},
                         {"operator",
                          {{"op", "sum"},
                           {"terms", {{{"op", "scalar_term"}}, {{"op", "neg_trace"}}, {{"op", "source"}, {"f", 2.0}}}}}},
                         {"exact", 2.0},
                         {"error_tol", 1e-6}};
         }},
        {"solve_z", "solve",
         [&](const json&) {
             return json{{"resolution", res}, {"exact", "affine:0,0.3333333333333333,2"}, {"error_tol", 0.05}};
         }},
        {"yamabe", "yamabe", [&](const json&) { return json{{"resolution", res}}; }},
        {"operators", "operators", [&](const json&) { return json{{"samples", 10 * samples}}; }},
    };
    std::vector<std::string> wanted;
    for (const auto& s : catalog) wanted.push_back(s.name);
    if (cfg.contains("sections")) {
        wanted.clear();
        for (const auto& s : cfg["sections"]) {
            if (!s.is_string()) throw UsageError("report: sections must be strings");
            const auto name = s.get<std::string>();
            if (std::none_of(catalog.begin(), catalog.end(), [&](const Section& c) { return c.name == name; }))
                throw UsageError("report: unknown section '" + name + "'");
            wanted.push_back(name);
        }
    }
    cfg["sections"] = wanted;

    bool pass = true;
    json sections = json::object();
    std::ostringstream csv;
    csv << "section,command,pass\n";
    for (const auto& s : catalog) {
        if (std::find(wanted.begin(), wanted.end(), s.name) == wanted.end()) continue;
        Context sub;
        sub.config = s.config(cfg);
        sub.out = ctx.out / s.name;
        sub.seed = ctx.seed;
        const Outcome o = run_command(s.command, sub);
        pass = pass && o.pass;
        sections[s.name] = {{"command", s.command}, {"pass", o.pass}};
        csv << s.name << ',' << s.command << ',' << (o.pass ? "PASS" : "FAIL") << '\n';
    }
    write_file(ctx.out / "report.csv", csv.str());
    return {pass, {{"sections", sections}}};
}

using CommandFn = Outcome (*)(Context&);

const std::map<std::string, CommandFn>& commands() {
    static const std::map<std::string, CommandFn> table = {{"geometry-check", geometry_check},
                                                           {"hessian-sign", hessian_sign},
                                                           {"comparison-demo", comparison_demo},
                                                           {"solve", solve},
                                                           {"yamabe", yamabe},
                                                           {"report", report},
                                                           {"operators", operators_section}};
    return table;
}

std::string file_stem(const std::string& command) {
    std::string s = command;
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

}  // namespace

void validate(const json& config, const Schema& schema, const std::string& where) {
    if (!config.is_object()) throw UsageError(where + ": config must be a JSON object");
    for (const auto& [key, value] : config.items()) {
        if (key == "seed" || key == "threads") {
            if (!value.is_number_integer() || value.get<long long>() < 0)
                throw UsageError(where + ": '" + key + "' must be a nonnegative integer");
            continue;
        }
        const auto it = schema.find(key);
        if (it == schema.end()) throw UsageError(where + ": unknown key '" + key + "'");
        if (!matches(value, it->second))
            throw UsageError(where + ": '" + key + "' must be " + kind_name(it->second));
    }
}

std::vector<std::string> command_names() {
    return {"geometry-check", "hessian-sign", "comparison-demo", "solve", "yamabe", "report"};
}

Outcome run_command(const std::string& name, Context& ctx) {
    const auto it = commands().find(name);
    if (it == commands().end()) throw UsageError("unknown command '" + name + "'");
    ctx.config["seed"] = ctx.seed;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = it->second(ctx);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json doc = {{"command", name},
                      {"config", ctx.config},
                      {"pass", o.pass},
                      {"wall_time_s", wall},
                      {"results", o.results}};
    write_file(ctx.out / (file_stem(name) + ".json"), doc.dump(2) + "\n");
    return o;
}

}  // namespace rvisc::cli
