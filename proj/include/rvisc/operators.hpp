#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rvisc/manifold.hpp"
#include "rvisc/report.hpp"

namespace rvisc {

// Real function on the manifold, parsed from "const:c", "coord:k",
// "affine:a,b,k" (a + b x_k) or "step:k,t" (1 if x_k > t else 0).
struct ScalarFieldSpec {
    std::string text;
    std::function<double(const Point&)> fn;
    // Known constant value, if any.
    std::optional<double> constant;

    double operator()(const Point& x) const { return fn(x); }
};

ScalarFieldSpec parse_scalar_field(const std::string& text);
ScalarFieldSpec constant_field(double c);

struct OperatorFlags {
    bool degenerate_elliptic = false;
    bool proper = false;
    bool x_independent = true;
};

// F(x, r, zeta, A) with zeta and A in frame(x) coordinates.
using OperatorFn = std::function<double(const Point& x, double r, const Vec& zeta, const Mat& a)>;

class OperatorSpec;
using OperatorPtr = std::shared_ptr<const OperatorSpec>;

class OperatorSpec {
public:
    OperatorSpec(std::string name, OperatorFn fn, OperatorFlags flags, double gamma = 0.0,
                 nlohmann::json params = nlohmann::json::object());

    const std::string& name() const { return name_; }
    const OperatorFlags& flags() const { return flags_; }
    // Strong monotonicity constant in r; 0 means unknown.
    double gamma() const { return gamma_; }
    // Values of r below this raise DomainError in eval.
    double r_min() const { return r_min_; }
    const std::vector<std::string>& moduli() const { return moduli_; }
    nlohmann::json to_json() const;

    double eval(const Point& x, double r, const Vec& zeta, const Mat& a) const { return fn_(x, r, zeta, a); }
    // zeta and A must be based at x.
    double eval(const Manifold& m, const Point& x, double r, const TangentVector& zeta, const SymBilinear& a) const;

    OperatorSpec with_r_min(double r) const;
    OperatorSpec with_moduli(std::vector<std::string> moduli) const;

private:
    std::string name_;
    OperatorFn fn_;
    OperatorFlags flags_;
    double gamma_;
    nlohmann::json params_;
    double r_min_ = -std::numeric_limits<double>::infinity();
    std::vector<std::string> moduli_;
};

// Product of the nonnegative eigenvalues; 1 when there are none.
double detplus(const Mat& a);
double detplus(const SymBilinear& a);

OperatorPtr neg_trace();
OperatorPtr neg_detplus();
OperatorPtr neg_min_eigenvalue();
OperatorPtr neg_max_eigenvalue();
// c r.
OperatorPtr scalar_term(double c = 1.0);
// -f(x).
OperatorPtr source(const ScalarFieldSpec& f);
// -a(x) trace(A).
OperatorPtr weighted_neg_trace(const ScalarFieldSpec& a);
OperatorPtr sum(std::vector<OperatorPtr> terms);
OperatorPtr max_of(std::vector<OperatorPtr> terms);
OperatorPtr min_of(std::vector<OperatorPtr> terms);
OperatorPtr scaled(double c, OperatorPtr f);
// g o F for nondecreasing g.
OperatorPtr compose(std::function<double(double)> g, std::string g_name, OperatorPtr f);
OperatorPtr odd_power(int k, OperatorPtr f);
// max{r - l1(A)|z|^p - tr(A)^(2q+1)|z|^s - detplus(A)^(2k+1) f^2, r - g}.
OperatorPtr example_5_3(const ScalarFieldSpec& f, const ScalarFieldSpec& g, int p = 1, int q = 0, int s = 1, int k = 0);
// S(x) r - S' r^((n+2)/(n-2)) - 4(n-1)/(n-2) trace(A).
OperatorPtr yamabe(int n, const ScalarFieldSpec& s, double s_prime);

// {"op": name, ...}; see README for the catalog.
OperatorPtr operator_from_json(const nlohmann::json& j);
std::vector<std::string> operator_catalog();

struct OperatorSampling {
    long samples = 10000;
    std::uint64_t seed = 1;
    double r_lo = -2.0;
    double r_hi = 2.0;
    double zeta_scale = 1.0;
    double a_scale = 1.0;
    // Restrict sampled forms to the positive semidefinite cone.
    bool psd_only = false;
};

// max over sampled A <= B of F(B) - F(A).
CheckReport ellipticity_check(const OperatorSpec& f, const Manifold& m, const OperatorSampling& opts = {},
                              double tol = 1e-10);
// min over sampled s < r in [r_lo, r_hi] of (F(r) - F(s)) / (r - s).
double monotonicity_estimate(const OperatorSpec& f, const Manifold& m, double r_lo, double r_hi, long samples = 10000,
                             std::uint64_t seed = 1);
// max over sampled (x, y, zeta, A) of |F(y, r, L zeta, L A) - F(x, r, zeta, A)|.
CheckReport invariance_check(const OperatorSpec& f, const Manifold& m, const OperatorSampling& opts = {},
                             double tol = 1e-9);

struct ModulusTable {
    std::vector<double> t;
    std::vector<double> omega;
    std::vector<long> counts;
    bool pass = false;
    nlohmann::json to_json() const;
};

// Running sup over distance of |F(y, r, eta, Q) - F(x, r, L_yx eta, L_yx Q)|.
// PASS iff the first bin is within tol.
ModulusTable intrinsic_modulus_estimate(const OperatorSpec& f, const Manifold& m, const std::vector<double>& bins,
                                        const OperatorSampling& opts = {}, double tol = 1e-9);

struct TwoFlatCell {
    double delta = 0.0;
    double d = 0.0;
    double eps_hat = 0.0;
};

struct TwoFlatTable {
    std::vector<TwoFlatCell> cells;
    bool pass = false;
    nlohmann::json to_json() const;
};

// sup of F(y, r, L_xy zeta, Q) - F(x, r, zeta, P) over P <= L_yx Q + delta I,
// d(x, y) <= d. Common random numbers are used across cells. PASS iff the
// cell with the smallest delta and d is within tol.
TwoFlatTable twoflat_modulus_estimate(const OperatorSpec& f, const Manifold& m, const std::vector<double>& deltas,
                                      const std::vector<double>& dists, const OperatorSampling& opts = {},
                                      double tol = 1e-9);

}  // namespace rvisc
