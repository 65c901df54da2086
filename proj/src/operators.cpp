#include "rvisc/operators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <tuple>

#include "rvisc/errors.hpp"
#include "rvisc/parallel.hpp"
#include "rvisc/random.hpp"

namespace rvisc {

namespace {

Vec eigenvalues(const Mat& a) {
    return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly).eigenvalues();
}

std::vector<double> split_numbers(const std::string& body, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ArgumentError("scalar field: bad number in '" + text + "'");
        }
    }
    return out;
}

int coord_index(double k, const std::string& text) {
    if (k < 0 || k != std::floor(k)) throw ArgumentError("scalar field: bad coordinate index in '" + text + "'");
    return static_cast<int>(k);
}

double coord(const Point& x, int k) {
    if (k >= x.coords.size()) throw ArgumentError("scalar field: coordinate index exceeds the ambient dimension");
    return x.coords[k];
}

double ipow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

OperatorFlags combine_flags(const std::vector<OperatorPtr>& terms) {
    OperatorFlags f{true, true, true};
    for (const auto& t : terms) {
        f.degenerate_elliptic = f.degenerate_elliptic && t->flags().degenerate_elliptic;
        f.proper = f.proper && t->flags().proper;
        f.x_independent = f.x_independent && t->flags().x_independent;
    }
    return f;
}

nlohmann::json terms_json(const std::vector<OperatorPtr>& terms) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& t : terms) a.push_back(t->to_json());
    return a;
}

double terms_r_min(const std::vector<OperatorPtr>& terms) {
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) r = std::max(r, t->r_min());
    return r;
}

void require_terms(const std::vector<OperatorPtr>& terms, const char* what) {
    if (terms.empty()) throw ArgumentError(std::string(what) + ": no terms");
    for (const auto& t : terms)
        if (!t) throw ArgumentError(std::string(what) + ": null term");
}

OperatorPtr make(OperatorSpec s) { return std::make_shared<const OperatorSpec>(std::move(s)); }

// Shared sampler for the structural checks.
struct Sample {
    Point x;
    double r;
    Vec zeta;
    Mat a;
};

Sample draw(const Manifold& m, Rng& rng, const OperatorSampling& o, double r_lo) {
    const int n = m.dim();
    Sample s{m.random_point(rng), rng.uniform(r_lo, o.r_hi), o.zeta_scale * rng.normal_vector(n), Mat()};
    s.a = o.psd_only ? rng.psd(n, o.a_scale) : rng.symmetric(n, o.a_scale);
    return s;
}

double effective_r_lo(const OperatorSpec& f, const OperatorSampling& o) {
    const double lo = std::max(o.r_lo, f.r_min());
    if (!(lo < o.r_hi)) throw ArgumentError("operator sampling: empty r range");
    return lo;
}

// Point at distance t from x along a random direction, within the normal chart.
Point point_at_distance(const Manifold& m, const Point& x, double t, Rng& rng) {
    const Vec u = m.frame(x) * rng.unit_vector(m.dim());
    return Point{m.exp_at(x.coords, t * u)};
}

double chart_limit(const Manifold& m, const Point& x) { return std::min(0.99 * m.injectivity_radius(x), 3.0); }

}  // namespace

ScalarFieldSpec constant_field(double c) {
    std::ostringstream os;
    os << std::setprecision(17) << "const:" << c;
    return {os.str(), [c](const Point&) { return c; }, c};
}

ScalarFieldSpec parse_scalar_field(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ArgumentError("scalar field: expected kind:params, got '" + text + "'");
    const std::string kind = text.substr(0, colon);
    const std::vector<double> p = split_numbers(text.substr(colon + 1), text);
    const auto need = [&](std::size_t k) {
        if (p.size() != k) throw ArgumentError("scalar field: wrong parameter count in '" + text + "'");
    };
    if (kind == "const") {
        need(1);
        ScalarFieldSpec s = constant_field(p[0]);
        s.text = text;
        return s;
    }
    if (kind == "coord") {
        need(1);
        const int k = coord_index(p[0], text);
        return {text, [k](const Point& x) { return coord(x, k); }, std::nullopt};
    }
    if (kind == "affine") {
        need(3);
        const double a = p[0], b = p[1];
        const int k = coord_index(p[2], text);
        return {text, [a, b, k](const Point& x) { return a + b * coord(x, k); }, std::nullopt};
    }
    if (kind == "step") {
        need(2);
        const int k = coord_index(p[0], text);
        const double t = p[1];
        return {text, [k, t](const Point& x) { return coord(x, k) > t ? 1.0 : 0.0; }, std::nullopt};
    }
    throw ArgumentError("scalar field: unknown kind '" + kind + "'");
}

OperatorSpec::OperatorSpec(std::string name, OperatorFn fn, OperatorFlags flags, double gamma, nlohmann::json params)
    : name_(std::move(name)), fn_(std::move(fn)), flags_(flags), gamma_(gamma), params_(std::move(params)) {
    if (!fn_) throw ArgumentError("OperatorSpec: empty evaluation function");
    if (!(gamma_ >= 0)) throw ArgumentError("OperatorSpec: gamma must be nonnegative");
}

nlohmann::json OperatorSpec::to_json() const {
    nlohmann::json j = params_;
    j["op"] = name_;
    return j;
}

double OperatorSpec::eval(const Manifold& m, const Point& x, double r, const TangentVector& zeta,
                          const SymBilinear& a) const {
    if (!m.same_point(zeta.base, x) || !m.same_point(a.base, x))
        throw ArgumentError("OperatorSpec::eval: zeta and A must be based at x");
    return fn_(x, r, m.to_frame(zeta), a.matrix);
}

OperatorSpec OperatorSpec::with_r_min(double r) const {
    OperatorSpec s = *this;
    s.r_min_ = r;
    return s;
}

OperatorSpec OperatorSpec::with_moduli(std::vector<std::string> moduli) const {
    OperatorSpec s = *this;
    s.moduli_ = std::move(moduli);
    return s;
}

double detplus(const Mat& a) {
    double p = 1.0;
    for (double l : eigenvalues(a))
        if (l >= 0.0) p *= l;
    return p;
}

double detplus(const SymBilinear& a) { return detplus(a.matrix); }

OperatorPtr neg_trace() {
    return make({"neg_trace", [](const Point&, double, const Vec&, const Mat& a) { return -a.trace(); },
                 {true, true, true}});
}

OperatorPtr neg_detplus() {
    return make({"neg_detplus", [](const Point&, double, const Vec&, const Mat& a) { return -detplus(a); },
                 {true, true, true}});
}

OperatorPtr neg_min_eigenvalue() {
    return make({"neg_min_eigenvalue",
                 [](const Point&, double, const Vec&, const Mat& a) { return -eigenvalues(a).minCoeff(); },
                 {true, true, true}});
}

OperatorPtr neg_max_eigenvalue() {
    return make({"neg_max_eigenvalue",
                 [](const Point&, double, const Vec&, const Mat& a) { return -eigenvalues(a).maxCoeff(); },
                 {true, true, true}});
}

OperatorPtr scalar_term(double c) {
    return make({"scalar_term", [c](const Point&, double r, const Vec&, const Mat&) { return c * r; },
                 {true, c >= 0, true}, std::max(c, 0.0), {{"c", c}}});
}

OperatorPtr source(const ScalarFieldSpec& f) {
    return make({"source", [f](const Point& x, double, const Vec&, const Mat&) { return -f(x); },
                 {true, true, f.constant.has_value()}, 0.0, {{"f", f.text}}});
}

OperatorPtr weighted_neg_trace(const ScalarFieldSpec& a) {
    const bool nonneg = a.constant && *a.constant >= 0;
    return make({"weighted_neg_trace", [a](const Point& x, double, const Vec&, const Mat& m) { return -a(x) * m.trace(); },
                 {nonneg, nonneg, a.constant.has_value()}, 0.0, {{"a", a.text}}});
}

OperatorPtr sum(std::vector<OperatorPtr> terms) {
    require_terms(terms, "sum");
    double gamma = 0.0;
    for (const auto& t : terms) gamma += t->gamma();
    const OperatorFlags flags = combine_flags(terms);
    const double r_min = terms_r_min(terms);
    const nlohmann::json params = {{"terms", terms_json(terms)}};
    return make(OperatorSpec("sum",
                             [terms](const Point& x, double r, const Vec& z, const Mat& a) {
                                 double s = 0.0;
                                 for (const auto& t : terms) s += t->eval(x, r, z, a);
                                 return s;
                             },
                             flags, gamma, params)
                    .with_r_min(r_min));
}

OperatorPtr max_of(std::vector<OperatorPtr> terms) {
    require_terms(terms, "max");
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& t : terms) gamma = std::min(gamma, t->gamma());
    return make(OperatorSpec("max",
                             [terms](const Point& x, double r, const Vec& z, const Mat& a) {
                                 double s = -std::numeric_limits<double>::infinity();
                                 for (const auto& t : terms) s = std::max(s, t->eval(x, r, z, a));
                                 return s;
                             },
                             combine_flags(terms), gamma, {{"terms", terms_json(terms)}})
                    .with_r_min(terms_r_min(terms)));
}

OperatorPtr min_of(std::vector<OperatorPtr> terms) {
    require_terms(terms, "min");
    double gamma = std::numeric_limits<double>::infinity();
    for (const auto& t : terms) gamma = std::min(gamma, t->gamma());
    return make(OperatorSpec("min",
                             [terms](const Point& x, double r, const Vec& z, const Mat& a) {
                                 double s = std::numeric_limits<double>::infinity();
                                 for (const auto& t : terms) s = std::min(s, t->eval(x, r, z, a));
                                 return s;
                             },
                             combine_flags(terms), gamma, {{"terms", terms_json(terms)}})
                    .with_r_min(terms_r_min(terms)));
}

OperatorPtr scaled(double c, OperatorPtr f) {
    if (!f) throw ArgumentError("scaled: null operator");
    OperatorFlags flags = f->flags();
    if (c < 0) flags.degenerate_elliptic = flags.proper = false;
    const double r_min = f->r_min();
    const nlohmann::json params = {{"c", c}, {"term", f->to_json()}};
    const double gamma = c >= 0 ? c * f->gamma() : 0.0;
    return make(OperatorSpec(
                    "scaled", [c, f](const Point& x, double r, const Vec& z, const Mat& a) { return c * f->eval(x, r, z, a); },
                    flags, gamma, params)
                    .with_r_min(r_min));
}

OperatorPtr compose(std::function<double(double)> g, std::string g_name, OperatorPtr f) {
    if (!f || !g) throw ArgumentError("compose: null argument");
    const double r_min = f->r_min();
    const nlohmann::json params = {{"g", g_name}, {"term", f->to_json()}};
    const OperatorFlags flags = f->flags();
    return make(OperatorSpec(
                    "compose", [g, f](const Point& x, double r, const Vec& z, const Mat& a) { return g(f->eval(x, r, z, a)); },
                    flags, 0.0, params)
                    .with_r_min(r_min));
}

OperatorPtr odd_power(int k, OperatorPtr f) {
    if (k < 0) throw ArgumentError("odd_power: k must be nonnegative");
    const int e = 2 * k + 1;
    return compose([e](double v) { return ipow(v, e); }, "pow" + std::to_string(e), std::move(f));
}

OperatorPtr example_5_3(const ScalarFieldSpec& f, const ScalarFieldSpec& g, int p, int q, int s, int k) {
    if (p < 0 || q < 0 || s < 0 || k < 0) throw ArgumentError("example_5_3: exponents must be natural numbers");
    const auto first = [f, p, q, s, k](const Point& x, double r, const Vec& z, const Mat& a) {
        const double nz = z.norm();
        const double fx = f(x);
        return r - eigenvalues(a).minCoeff() * ipow(nz, p) - ipow(a.trace(), 2 * q + 1) * ipow(nz, s) -
               ipow(detplus(a), 2 * k + 1) * fx * fx;
    };
    const auto fn = [first, g](const Point& x, double r, const Vec& z, const Mat& a) {
        return std::max(first(x, r, z, a), r - g(x));
    };
    const bool xi = f.constant.has_value() && g.constant.has_value();
    return make({"example_5_3", fn, {true, true, xi}, 1.0,
                 {{"f", f.text}, {"g", g.text}, {"p", p}, {"q", q}, {"s", s}, {"k", k}}});
}

OperatorPtr yamabe(int n, const ScalarFieldSpec& s, double s_prime) {
    if (n < 3) throw ArgumentError("yamabe: dimension parameter n must be at least 3");
    const double expo = static_cast<double>(n + 2) / (n - 2);
    const bool integer = (n + 2) % (n - 2) == 0;
    const double coef = 4.0 * (n - 1) / (n - 2);
    const auto fn = [s, s_prime, expo, integer, coef](const Point& x, double r, const Vec&, const Mat& a) {
        if (r < 0 && !integer) throw DomainError("yamabe: r < 0 with a non-integer exponent");
        const double p = integer ? ipow(r, static_cast<int>(std::lround(expo))) : std::pow(r, expo);
        return s(x) * r - s_prime * p - coef * a.trace();
    };
    const bool known = s.constant.has_value();
    const double smin = known ? *s.constant : 0.0;
    const bool proper = known && smin > 0 && s_prime <= 0;
    OperatorSpec spec("yamabe", fn, {true, proper, known}, proper ? smin : 0.0,
                      {{"n", n}, {"S", s.text}, {"S_prime", s_prime}});
    return make(spec.with_r_min(integer ? -std::numeric_limits<double>::infinity() : 0.0));
}

namespace {

ScalarFieldSpec field_param(const nlohmann::json& j, const char* key, const char* fallback) {
    if (!j.contains(key)) return parse_scalar_field(fallback);
    const auto& v = j.at(key);
    if (v.is_number()) return constant_field(v.get<double>());
    if (v.is_string()) return parse_scalar_field(v.get<std::string>());
    throw ArgumentError(std::string("operator json: field '") + key + "' must be a number or string");
}

std::vector<OperatorPtr> json_terms(const nlohmann::json& j) {
    if (!j.contains("terms") || !j.at("terms").is_array()) throw ArgumentError("operator json: 'terms' array required");
    std::vector<OperatorPtr> out;
    for (const auto& t : j.at("terms")) out.push_back(operator_from_json(t));
    return out;
}

template <class T>
T num(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ArgumentError(std::string("operator json: '") + key + "' must be a number");
    return j.at(key).get<T>();
}

}  // namespace

std::vector<std::string> operator_catalog() {
    return {"neg_trace", "neg_detplus", "neg_min_eigenvalue", "neg_max_eigenvalue", "scalar_term",
            "source",    "weighted_neg_trace", "sum",          "max",          "min",
            "scaled",    "odd_power",   "example_5_3",        "yamabe"};
}

OperatorPtr operator_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("op") || !j.at("op").is_string())
        throw ArgumentError("operator json: object with string 'op' required");
    const std::string op = j.at("op").get<std::string>();
    if (op == "neg_trace") return neg_trace();
    if (op == "neg_detplus") return neg_detplus();
    if (op == "neg_min_eigenvalue") return neg_min_eigenvalue();
    if (op == "neg_max_eigenvalue") return neg_max_eigenvalue();
    if (op == "scalar_term") return scalar_term(num(j, "c", 1.0));
    if (op == "source") return source(field_param(j, "f", "const:0"));
    if (op == "weighted_neg_trace") return weighted_neg_trace(field_param(j, "a", "const:1"));
    if (op == "sum") return sum(json_terms(j));
    if (op == "max") return max_of(json_terms(j));
    if (op == "min") return min_of(json_terms(j));
    if (op == "scaled") {
        if (!j.contains("term")) throw ArgumentError("operator json: 'scaled' needs 'term'");
        return scaled(num(j, "c", 1.0), operator_from_json(j.at("term")));
    }
    if (op == "odd_power") {
        if (!j.contains("term")) throw ArgumentError("operator json: 'odd_power' needs 'term'");
        return odd_power(num(j, "k", 0), operator_from_json(j.at("term")));
    }
    if (op == "example_5_3")
        return example_5_3(field_param(j, "f", "const:1"), field_param(j, "g", "const:0"), num(j, "p", 1),
                           num(j, "q", 0), num(j, "s", 1), num(j, "k", 0));
    if (op == "yamabe") return yamabe(num(j, "n", 3), field_param(j, "S", "const:1"), num(j, "S_prime", 0.0));
    throw ArgumentError("operator json: unknown op '" + op + "'");
}

CheckReport ellipticity_check(const OperatorSpec& f, const Manifold& m, const OperatorSampling& opts, double tol) {
    const double r_lo = effective_r_lo(f, opts);
    const auto n = static_cast<std::size_t>(std::max(0L, opts.samples));
    std::vector<double> viol(n);
    std::vector<Mat> wa(n), wb(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(opts.seed, i);
        Sample s = draw(m, rng, opts, r_lo);
        // Alternate full-rank and rank-one increments.
        Mat inc;
        if (i % 2 == 0) {
            inc = rng.psd(m.dim(), rng.uniform(0.0, 2.0) * opts.a_scale);
        } else {
            const Vec u = rng.normal_vector(m.dim());
            inc = rng.uniform(0.0, 2.0) * opts.a_scale * u * u.transpose();
        }
        const Mat b = s.a + inc;
        viol[i] = f.eval(s.x, s.r, s.zeta, b) - f.eval(s.x, s.r, s.zeta, s.a);
        wa[i] = s.a;
        wb[i] = b;
    });
    CheckReport rep;
    rep.check = "ellipticity";
    rep.model = m.name();
    rep.samples = opts.samples;
    rep.tolerance = tol;
    rep.details["operator"] = f.to_json();
    rep.details["psd_only"] = opts.psd_only;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (viol[i] > viol[worst]) worst = i;
    rep.max_violation = n ? std::max(0.0, viol[worst]) : 0.0;
    rep.pass = rep.max_violation <= tol;
    if (!rep.pass) {
        const auto to_vec = [](const Mat& a) {
            std::vector<double> v(a.data(), a.data() + a.size());
            return v;
        };
        rep.details["witness_A"] = to_vec(wa[worst]);
        rep.details["witness_B"] = to_vec(wb[worst]);
    }
    return rep;
}

double monotonicity_estimate(const OperatorSpec& f, const Manifold& m, double r_lo, double r_hi, long samples,
                             std::uint64_t seed) {
    r_lo = std::max(r_lo, f.r_min());
    if (!(r_lo < r_hi)) throw ArgumentError("monotonicity_estimate: empty r range");
    const auto n = static_cast<std::size_t>(std::max(0L, samples));
    std::vector<double> q(n);
    OperatorSampling o;
    parallel_for(n, [&](std::size_t i) {
        Rng rng(seed, i);
        Sample s = draw(m, rng, o, r_lo);
        double a = rng.uniform(r_lo, r_hi), b = rng.uniform(r_lo, r_hi);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-6) b = std::min(r_hi, a + 1e-3), a = b - 1e-3;
        q[i] = (f.eval(s.x, b, s.zeta, s.a) - f.eval(s.x, a, s.zeta, s.a)) / (b - a);
    });
    double g = std::numeric_limits<double>::infinity();
    for (double v : q) g = std::min(g, v);
    return std::max(0.0, g);
}

CheckReport invariance_check(const OperatorSpec& f, const Manifold& m, const OperatorSampling& opts, double tol) {
    if (!f.flags().x_independent) throw ArgumentError("invariance_check: operator depends on x");
    const double r_lo = effective_r_lo(f, opts);
    const auto n = static_cast<std::size_t>(std::max(0L, opts.samples));
    std::vector<double> diff(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(opts.seed, i);
        Sample s = draw(m, rng, opts, r_lo);
        const Point y = point_at_distance(m, s.x, rng.uniform(0.0, chart_limit(m, s.x)), rng);
        const Mat t = m.transport_matrix(s.x, y);
        diff[i] = std::abs(f.eval(y, s.r, t * s.zeta, t * s.a * t.transpose()) - f.eval(s.x, s.r, s.zeta, s.a));
    });
    CheckReport rep;
    rep.check = "invariance";
    rep.model = m.name();
    rep.samples = opts.samples;
    rep.tolerance = tol;
    rep.details["operator"] = f.to_json();
    for (double d : diff) rep.max_violation = std::max(rep.max_violation, d);
    rep.pass = rep.max_violation <= tol;
    return rep;
}

nlohmann::json ModulusTable::to_json() const { return {{"t", t}, {"omega", omega}, {"counts", counts}, {"pass", pass}}; }

ModulusTable intrinsic_modulus_estimate(const OperatorSpec& f, const Manifold& m, const std::vector<double>& bins,
                                        const OperatorSampling& opts, double tol) {
    if (bins.empty()) throw ArgumentError("intrinsic_modulus_estimate: no bins");
    for (std::size_t k = 0; k < bins.size(); ++k)
        if (!(bins[k] > (k ? bins[k - 1] : 0.0))) throw ArgumentError("intrinsic_modulus_estimate: bins must increase");
    const double r_lo = effective_r_lo(f, opts);
    const auto n = static_cast<std::size_t>(std::max(0L, opts.samples));
    std::vector<double> val(n), dist(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng(opts.seed, i);
        Sample s = draw(m, rng, opts, r_lo);
        const std::size_t b = i % bins.size();
        const double lo = b ? bins[b - 1] : 0.0;
        const double t = std::min(rng.uniform(lo, bins[b]), chart_limit(m, s.x));
        const Point y = point_at_distance(m, s.x, t, rng);
        // Sampled (eta, Q) live at y; the transported copies at x.
        const Mat tyx = m.transport_matrix(y, s.x);
        val[i] = std::abs(f.eval(y, s.r, s.zeta, s.a) - f.eval(s.x, s.r, tyx * s.zeta, tyx * s.a * tyx.transpose()));
        dist[i] = m.distance(s.x, y);
    });
    ModulusTable tab;
    tab.t = bins;
    tab.omega.assign(bins.size(), 0.0);
    tab.counts.assign(bins.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = static_cast<std::size_t>(std::lower_bound(bins.begin(), bins.end(), dist[i]) - bins.begin());
        const std::size_t k = std::min(b, bins.size() - 1);
        tab.omega[k] = std::max(tab.omega[k], val[i]);
        ++tab.counts[k];
    }
    for (std::size_t k = 1; k < bins.size(); ++k) tab.omega[k] = std::max(tab.omega[k], tab.omega[k - 1]);
    tab.pass = tab.omega[0] <= tol;
    return tab;
}

nlohmann::json TwoFlatTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : cells) rows.push_back({{"delta", c.delta}, {"d", c.d}, {"eps_hat", c.eps_hat}});
    return {{"cells", rows}, {"pass", pass}};
}

TwoFlatTable twoflat_modulus_estimate(const OperatorSpec& f, const Manifold& m, const std::vector<double>& deltas,
                                      const std::vector<double>& dists, const OperatorSampling& opts, double tol) {
    if (deltas.empty() || dists.empty()) throw ArgumentError("twoflat_modulus_estimate: empty grid");
    for (double d : deltas)
        if (!(d >= 0)) throw ArgumentError("twoflat_modulus_estimate: deltas must be nonnegative");
    for (double d : dists)
        if (!(d >= 0)) throw ArgumentError("twoflat_modulus_estimate: distances must be nonnegative");
    const double r_lo = effective_r_lo(f, opts);
    const auto n = static_cast<std::size_t>(std::max(0L, opts.samples));
    const int dim = m.dim();
    TwoFlatTable tab;
    for (double d : dists)
        for (double delta : deltas) {
            std::vector<double> val(n);
            parallel_for(n, [&](std::size_t i) {
                Rng rng(opts.seed, i);
                Sample s = draw(m, rng, opts, r_lo);
                const double t = std::min(d * rng.uniform(), chart_limit(m, s.x));
                const Point y = point_at_distance(m, s.x, t, rng);
                const Mat q = rng.symmetric(dim, opts.a_scale);
                const Mat slack = rng.psd(dim, rng.uniform(0.0, opts.a_scale));
                const Mat tyx = m.transport_matrix(y, s.x);
                const Mat p = tyx * q * tyx.transpose() + delta * Mat::Identity(dim, dim) - slack;
                const Vec zy = m.transport_matrix(s.x, y) * s.zeta;
                val[i] = f.eval(y, s.r, zy, q) - f.eval(s.x, s.r, s.zeta, p);
            });
            double e = 0.0;
            for (double v : val) e = std::max(e, v);
            tab.cells.push_back({delta, d, e});
        }
    const auto best = std::min_element(tab.cells.begin(), tab.cells.end(), [](const auto& a, const auto& b) {
        return std::tie(a.d, a.delta) < std::tie(b.d, b.delta);
    });
    tab.pass = best->eps_hat <= tol;
    return tab;
}

}  // namespace rvisc
