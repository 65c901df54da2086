#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "rvisc/grid.hpp"
#include "rvisc/operators.hpp"

namespace rvisc {

// Finite-difference jet at a node, in frame(node) coordinates.
struct DiscreteJet {
    Vec zeta;
    Mat A;
};

// zeta_i from central differences along e_i; A_ii from second differences
// along e_i; A_ij from the rotated directions (e_i +- e_j)/sqrt 2.
DiscreteJet discrete_jet(const Grid& g, const Vec& u, int node);
// F(x_i, u_i, zeta_i, A_i).
double discretize(const OperatorSpec& f, const Grid& g, const Vec& u, int node);
Vec apply_scheme(const OperatorSpec& f, const Grid& g, const Vec& u);
// Finite-difference estimate of dF_h(u)_i / du_i at every node.
Vec self_derivative(const OperatorSpec& f, const Grid& g, const Vec& u);

struct SolveOptions {
    // u <- u - theta F_h(u); 0 selects theta = 1 / (1.05 max_i dF_i/du_i).
    double damping = 0.0;
    double tol = 1e-8;
    int max_iter = 200000;
    // Re-estimate the self-derivative every this many iterations (0 = never).
    int lipschitz_every = 100;
    // Divergence: residual above this multiple of the initial residual, or non-finite.
    double divergence_factor = 1e6;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> residuals;
    double final_residual = 0.0;
    double wall_time_s = 0.0;
    bool converged = false;
    double damping = 0.0;
    double lipschitz = 0.0;
    nlohmann::json to_json() const;
};

struct SolveResult {
    GridFunction u;
    SolveReport report;
};

// Damped fixed point for F_h(u) = 0 with F proper (F = r + G for u + G = 0).
SolveResult solve_fixed_point(const OperatorSpec& f, const GridFunction& u0, const SolveOptions& opts = {});

// true where d(node, center) >= radius (pinned nodes).
std::vector<bool> geodesic_ball_mask(const Grid& g, const Point& center, double radius);

// Pinned nodes keep their value in f; the residual is taken over free nodes.
SolveResult solve_dirichlet(const OperatorSpec& f, const std::vector<bool>& pinned, const GridFunction& boundary,
                            const GridFunction& u0, const SolveOptions& opts = {});

struct PerronOptions {
    int max_sweeps = 200000;
    double tol = 1e-8;
    double damping = 0.0;
};

struct PerronReport {
    int sweeps = 0;
    bool converged = false;
    double final_residual = 0.0;
    // Smallest nodal increment w_{k+1} - w_k over all sweeps.
    double min_increment = 0.0;
    // usub <= w_k <= usuper held after every sweep.
    bool ordered = true;
    double sub_residual = 0.0;
    double super_residual = 0.0;
    std::vector<double> residuals;
    nlohmann::json to_json() const;
};

struct PerronResult {
    GridFunction u;
    PerronReport report;
};

// w_{k+1} = min(usuper, max(w_k, w_k - theta F_h(w_k))) from w_0 = usub.
// Requires usub <= usuper, F_h(usub) <= h and F_h(usuper) >= -h.
PerronResult perron_iterate(const OperatorSpec& f, const GridFunction& usub, const GridFunction& usuper,
                            const PerronOptions& opts = {});

struct ViscosityReport {
    double sub_violation = 0.0;
    double super_violation = 0.0;
    int sub_node = -1;
    int super_node = -1;
    double threshold = 0.0;
    bool pass = false;
    nlohmann::json to_json() const;
};

// Least-squares quadratic fit to interpolated samples at radii k and k/2,
// lifted until it touches from above (superjet) or below (subjet); F is
// evaluated on both. PASS iff both violations are within tol_factor * h.
ViscosityReport verify_viscosity_residual(const OperatorSpec& f, const GridFunction& u, double tol_factor = 10.0);

struct ComparisonCheck {
    double max_diff = 0.0;
    double sub_slack = 0.0;
    double super_slack = 0.0;
    double bound = 0.0;
    bool holds = false;
};

// max(u - v) <= (max F_h(u)^+ + max (-F_h(v))^+) / gamma.
ComparisonCheck discrete_comparison(const OperatorSpec& f, const GridFunction& u, const GridFunction& v, double gamma);

struct YamabeOptions {
    int n = 3;
    double s_prime = -1.0;
    SolveOptions solve;
};

// Fixed point for S r - S' r^((n+2)/(n-2)) - 4(n-1)/(n-2) trace(A) on a
// Sphere(2, r) grid used as the computational domain.
SolveResult yamabe_solve(const ScalarFieldSpec& s, const GridFunction& u0, const YamabeOptions& opts = {});

}  // namespace rvisc
