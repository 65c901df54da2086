#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rvisc/grid.hpp"
#include "rvisc/jacobi.hpp"

namespace rvisc {

// Second-order jet (zeta, A) at x together with the function value r.
struct Jet2 {
    Point x;
    double value = 0.0;
    TangentVector zeta;
    SymBilinear A;
};

Jet2 make_jet(const Manifold& m, const Point& x, double value, const Vec& zeta_frame, const Mat& a_frame);

enum class JetSide { Sub, Super };

using ScalarField = std::function<double(const Point&)>;
using ChartFunction = std::function<double(const Vec&)>;
using VectorField = std::function<TangentVector(const Point&)>;

struct JetTestOptions {
    std::vector<double> radii{1e-1, 1e-2, 1e-3, 1e-4};
    int directions = 200;
    // Allowed normalized residual at radius rho is tol_factor * rho.
    double tol_factor = 10.0;
    std::uint64_t seed = 1;
};

struct JetVerdict {
    bool accept = true;
    // min over radii of (tol(rho) + signed normalized residual); >= 0 iff accept.
    double margin = 0.0;
    std::optional<TangentVector> witness;
    std::vector<double> worst_per_radius;
};

// Sampled test of f(exp_x v) >= f(x) + <zeta, v> + 1/2 <A v, v> + o(|v|^2)
// (reversed for Super). ACCEPT means no violation at the sampled scales.
JetVerdict quadratic_jet_test(const Manifold& m, const ScalarField& f, const Jet2& jet, JetSide side,
                              const JetTestOptions& opts = {});
// Same test for a function on T_x M given in frame coordinates, jet at 0.
JetVerdict chart_jet_test(const ChartFunction& g, const Vec& zeta, const Mat& a, JetSide side,
                          const JetTestOptions& opts = {});

struct ChartTransferReport {
    JetVerdict on_manifold;
    JetVerdict in_chart;
    bool agree = false;
};

ChartTransferReport chart_transfer_check(const Manifold& m, const ScalarField& f, const Jet2& jet, JetSide side,
                                         const JetTestOptions& opts = {});

// Central differences of f o exp_x in frame coordinates.
Vec chart_gradient(const Manifold& m, const ScalarField& f, const Point& x, double step = 1e-5);
Mat chart_hessian(const Manifold& m, const ScalarField& f, const Point& x, double step = 1e-4);

struct LemmaCorrection {
    double correction = 0.0;
    // Second derivative of psi = phi o exp_x along Vtilde at w_y.
    double chart_second = 0.0;
    // Second derivative of phi along the geodesic with velocity V(y).
    double manifold_second = 0.0;
    double defect() const { return chart_second - manifold_second - correction; }
};

// <grad phi(y), sigma''(0)> with sigma(t) = exp_x(w_y + t Vtilde(w_y)),
// w_y = log_x y and Vtilde the pull-back of V by exp_x.
LemmaCorrection lemma_correction_term(const Manifold& m, const ScalarField& phi, const Point& x, const Point& y,
                                      const VectorField& v);

struct StarCondition {
    HessianPair A;
    double epsilon = 0.0;
    SymBilinear P;
    SymBilinear Q;
};

// epsilon = 1 / (2 (1 + |A|)).
StarCondition make_star_condition(const HessianPair& a, const SymBilinear& p, const SymBilinear& q);
double canonical_epsilon(const HessianPair& a);

struct StarVerdict {
    bool holds = false;
    // Smallest eigenvalues of diag(P, -Q) + (1/eps + |A|) I and of
    // A + eps A^2 - diag(P, -Q).
    double lower_margin = 0.0;
    double upper_margin = 0.0;
};

StarVerdict verify_condition_star(const StarCondition& sc, double tol = 1e-10);

struct StarCandidates {
    std::vector<std::pair<SymBilinear, SymBilinear>> pairs;
    int requested = 0;
    int skipped = 0;
};

// B = A + eps A^2, P = B11 - s I - R1, Q = s I - B22 + R2 with R1, R2 random
// PSD and s = 2 |B12| plus random slack, clipped by the lower bound of (*).
StarCandidates generate_star_candidates(const HessianPair& a, double epsilon, int n, std::uint64_t seed);

struct OrderVerdict {
    bool holds = false;
    double margin = 0.0;
};

// P <= L_yx(Q) + slack I at x.
OrderVerdict check_P_leq_LQ(const Manifold& m, const Point& x, const Point& y, const SymBilinear& p,
                            const SymBilinear& q, double slack_rhs = 0.0, double tol = 1e-9);

struct DoublingRecord {
    double alpha = 0.0;
    double m_alpha = 0.0;
    double d = 0.0;
    double alpha_d_sq = 0.0;
    int x_idx = 0;
    int y_idx = 0;
};

struct DoublingTrace {
    std::vector<DoublingRecord> records;
    std::string to_csv() const;
};

// Exact grid maximisation of u(x) - v(y) - (alpha/2) d(x, y)^2 for each alpha.
DoublingTrace doubling_diagnostic(const GridFunction& u, const GridFunction& v, const std::vector<double>& alphas,
                                  const PairwiseDistances* table = nullptr);

struct JetLimitOptions {
    double tol = 1e-6;
    // Convergence is judged on this trailing fraction of the sequence.
    double tail_fraction = 0.25;
};

struct JetLimitReport {
    bool converges = false;
    std::vector<double> errors;
};

// Convergence of (x_n, r_n, zeta_n, A_n) to the candidate, tested on the
// vector fields obtained by projecting ambient axes and their pairwise sums.
JetLimitReport jet_limit_check(const Manifold& m, const std::vector<Jet2>& sequence, const Jet2& limit,
                               const JetLimitOptions& opts = {});

}  // namespace rvisc
