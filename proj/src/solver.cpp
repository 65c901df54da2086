#include "rvisc/solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rvisc/errors.hpp"
#include "rvisc/parallel.hpp"

namespace rvisc {

namespace {

template <class Value>
DiscreteJet jet_with(const Grid& g, const Value& value, double u0, int node) {
    const int n = g.dim();
    const NodeStencil& s = g.stencil(node);
    const auto at = [&](const Interpolant& it) {
        double v = 0.0;
        for (int k = 0; k < it.count; ++k) v += it.weights[k] * value(it.nodes[k]);
        return v;
    };
    const auto second = [&](std::size_t d) {
        const double k = s.step[d];
        return (at(s.plus[d]) + at(s.minus[d]) - 2.0 * u0) / (k * k);
    };
    DiscreteJet j{Vec(n), Mat(n, n)};
    for (int i = 0; i < n; ++i) {
        const auto d = static_cast<std::size_t>(i);
        j.zeta[i] = (at(s.plus[d]) - at(s.minus[d])) / (2.0 * s.step[d]);
        j.A(i, i) = second(d);
    }
    std::size_t d = static_cast<std::size_t>(n);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k, d += 2) j.A(i, k) = j.A(k, i) = 0.5 * (second(d) - second(d + 1));
    return j;
}

double sup_norm(const Vec& v, const std::vector<bool>* pinned) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!pinned || !(*pinned)[static_cast<std::size_t>(i)]) m = std::max(m, std::abs(v[i]));
    return m;
}

double max_self_derivative(const OperatorSpec& f, const Grid& g, const Vec& u, const std::vector<bool>* pinned) {
    const Vec d = self_derivative(f, g, u);
    double m = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (!pinned || !(*pinned)[static_cast<std::size_t>(i)]) m = std::max(m, d[i]);
    return m;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SolveResult iterate(const OperatorSpec& f, const GridFunction& u0, const std::vector<bool>* pinned,
                    const SolveOptions& opts) {
    if (!f.flags().degenerate_elliptic) throw ArgumentError("solver: operator is not flagged degenerate elliptic");
    if (!(opts.tol > 0) || opts.max_iter < 0) throw ArgumentError("solver: bad tolerance or iteration limit");
    if (opts.damping < 0 || opts.damping > 1) throw ArgumentError("solver: damping must lie in [0, 1]");
    const auto t0 = std::chrono::steady_clock::now();
    const Grid& g = *u0.grid;
    Vec u = u0.values;
    SolveReport rep;

    const bool any_free = !pinned || std::find(pinned->begin(), pinned->end(), false) != pinned->end();
    if (!any_free) {
        rep.converged = true;
        rep.wall_time_s = seconds_since(t0);
        return {GridFunction(u0.grid, u), rep};
    }

    const auto choose_theta = [&](const Vec& at) {
        rep.lipschitz = max_self_derivative(f, g, at, pinned);
        if (!(rep.lipschitz > 0))
            throw ArgumentError("solver: F_h is not increasing in the nodal value; set the damping explicitly");
        return 1.0 / (1.05 * rep.lipschitz);
    };
    double theta = opts.damping > 0 ? opts.damping : choose_theta(u);
    rep.damping = theta;

    Vec F = apply_scheme(f, g, u);
    double res = sup_norm(F, pinned);
    const double res0 = std::max(res, opts.tol);
    rep.residuals.push_back(res);
    while (res > opts.tol && rep.iterations < opts.max_iter) {
        for (Eigen::Index i = 0; i < u.size(); ++i)
            if (!pinned || !(*pinned)[static_cast<std::size_t>(i)]) u[i] -= theta * F[i];
        ++rep.iterations;
        F = apply_scheme(f, g, u);
        res = sup_norm(F, pinned);
        rep.residuals.push_back(res);
        if (!std::isfinite(res) || res > opts.divergence_factor * res0) {
            std::ostringstream os;
            os << "solver diverged at iteration " << rep.iterations << ": residual " << res << " (initial " << res0
               << ")";
            throw DivergenceError(os.str());
        }
        if (opts.damping == 0 && opts.lipschitz_every > 0 && rep.iterations % opts.lipschitz_every == 0) {
            theta = choose_theta(u);
            rep.damping = theta;
        }
    }
    rep.final_residual = res;
    rep.converged = res <= opts.tol;
    rep.wall_time_s = seconds_since(t0);
    return {GridFunction(u0.grid, u), rep};
}

void require_same_grid(const GridFunction& a, const GridFunction& b, const char* what) {
    if (!a.grid || a.grid != b.grid) throw ArgumentError(std::string(what) + ": functions must share a grid");
}

// Monomials of degree 3 in n variables.
std::vector<std::array<int, 3>> cubic_monomials(int n) {
    std::vector<std::array<int, 3>> out;
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int c = b; c < n; ++c) out.push_back({a, b, c});
    return out;
}

}  // namespace

DiscreteJet discrete_jet(const Grid& g, const Vec& u, int node) {
    if (u.size() != g.size()) throw ArgumentError("discrete_jet: value count does not match the grid");
    if (node < 0 || node >= g.size()) throw ArgumentError("discrete_jet: node out of range");
    return jet_with(g, [&](int j) { return u[j]; }, u[node], node);
}

double discretize(const OperatorSpec& f, const Grid& g, const Vec& u, int node) {
    const DiscreteJet j = discrete_jet(g, u, node);
    return f.eval(g.node(node), u[node], j.zeta, j.A);
}

Vec apply_scheme(const OperatorSpec& f, const Grid& g, const Vec& u) {
    if (u.size() != g.size()) throw ArgumentError("apply_scheme: value count does not match the grid");
    Vec out(g.size());
    parallel_for(static_cast<std::size_t>(g.size()), [&](std::size_t i) {
        const int node = static_cast<int>(i);
        const DiscreteJet j = jet_with(g, [&](int k) { return u[k]; }, u[node], node);
        out[node] = f.eval(g.node(node), u[node], j.zeta, j.A);
    });
    return out;
}

Vec self_derivative(const OperatorSpec& f, const Grid& g, const Vec& u) {
    if (u.size() != g.size()) throw ArgumentError("self_derivative: value count does not match the grid");
    Vec out(g.size());
    parallel_for(static_cast<std::size_t>(g.size()), [&](std::size_t i) {
        const int node = static_cast<int>(i);
        const double eps = 1e-6 * std::max(1.0, std::abs(u[node]));
        const double up = u[node] + eps;
        const DiscreteJet j0 = jet_with(g, [&](int k) { return u[k]; }, u[node], node);
        const DiscreteJet j1 = jet_with(g, [&](int k) { return k == node ? up : u[k]; }, up, node);
        out[node] = (f.eval(g.node(node), up, j1.zeta, j1.A) - f.eval(g.node(node), u[node], j0.zeta, j0.A)) / eps;
    });
    return out;
}

nlohmann::json SolveReport::to_json() const {
    return {{"iterations", iterations},   {"residual_history", residuals}, {"final_residual", final_residual},
            {"wall_time_s", wall_time_s}, {"converged", converged},        {"damping", damping},
            {"lipschitz_estimate", lipschitz}};
}

SolveResult solve_fixed_point(const OperatorSpec& f, const GridFunction& u0, const SolveOptions& opts) {
    return iterate(f, u0, nullptr, opts);
}

std::vector<bool> geodesic_ball_mask(const Grid& g, const Point& center, double radius) {
    const Manifold& m = *g.model();
    std::vector<bool> pinned(static_cast<std::size_t>(g.size()));
    for (int i = 0; i < g.size(); ++i) pinned[static_cast<std::size_t>(i)] = m.distance(g.node(i), center) >= radius;
    return pinned;
}

SolveResult solve_dirichlet(const OperatorSpec& f, const std::vector<bool>& pinned, const GridFunction& boundary,
                            const GridFunction& u0, const SolveOptions& opts) {
    require_same_grid(boundary, u0, "solve_dirichlet");
    if (pinned.size() != static_cast<std::size_t>(boundary.grid->size()))
        throw ArgumentError("solve_dirichlet: mask size does not match the grid");
    if (std::find(pinned.begin(), pinned.end(), true) == pinned.end())
        throw ArgumentError("solve_dirichlet: boundary mask is empty");
    Vec start = u0.values;
    for (std::size_t i = 0; i < pinned.size(); ++i)
        if (pinned[i]) start[static_cast<Eigen::Index>(i)] = boundary.values[static_cast<Eigen::Index>(i)];
    return iterate(f, GridFunction(u0.grid, start), &pinned, opts);
}

nlohmann::json PerronReport::to_json() const {
    return {{"sweeps", sweeps},
            {"converged", converged},
            {"final_residual", final_residual},
            {"min_increment", min_increment},
            {"ordered", ordered},
            {"sub_residual", sub_residual},
            {"super_residual", super_residual},
            {"residual_history", residuals}};
}

PerronResult perron_iterate(const OperatorSpec& f, const GridFunction& usub, const GridFunction& usuper,
                            const PerronOptions& opts) {
    require_same_grid(usub, usuper, "perron_iterate");
    if (!f.flags().degenerate_elliptic) throw ArgumentError("perron_iterate: operator is not flagged degenerate elliptic");
    if ((usub.values.array() > usuper.values.array()).any())
        throw ArgumentError("perron_iterate: usub must not exceed usuper");
    const Grid& g = *usub.grid;
    const double h = g.spacing();
    PerronReport rep;
    rep.sub_residual = apply_scheme(f, g, usub.values).maxCoeff();
    rep.super_residual = apply_scheme(f, g, usuper.values).minCoeff();
    if (rep.sub_residual > h) throw ArgumentError("perron_iterate: usub is not a discrete subsolution");
    if (rep.super_residual < -h) throw ArgumentError("perron_iterate: usuper is not a discrete supersolution");

    double theta = opts.damping;
    if (theta == 0) {
        const double l = std::max(max_self_derivative(f, g, usub.values, nullptr),
                                  max_self_derivative(f, g, usuper.values, nullptr));
        if (!(l > 0)) throw ArgumentError("perron_iterate: F_h is not increasing in the nodal value");
        theta = 1.0 / (1.05 * l);
    }
    Vec w = usub.values;
    rep.min_increment = std::numeric_limits<double>::infinity();
    for (;;) {
        const Vec F = apply_scheme(f, g, w);
        rep.final_residual = F.cwiseAbs().maxCoeff();
        rep.residuals.push_back(rep.final_residual);
        if (rep.final_residual <= opts.tol || rep.sweeps >= opts.max_sweeps) break;
        const Vec next = usuper.values.cwiseMin(w.cwiseMax(w - theta * F));
        rep.min_increment = std::min(rep.min_increment, (next - w).minCoeff());
        rep.ordered = rep.ordered && (next.array() >= usub.values.array()).all() &&
                      (next.array() <= usuper.values.array()).all() && (next.array() >= w.array()).all();
        w = next;
        ++rep.sweeps;
    }
    if (rep.sweeps == 0) rep.min_increment = 0.0;
    rep.converged = rep.final_residual <= opts.tol;
    return {GridFunction(usub.grid, w), rep};
}

nlohmann::json ViscosityReport::to_json() const {
    return {{"sub_violation", sub_violation}, {"super_violation", super_violation}, {"sub_node", sub_node},
            {"super_node", super_node},       {"threshold", threshold},             {"pass", pass}};
}

ViscosityReport verify_viscosity_residual(const OperatorSpec& f, const GridFunction& u, double tol_factor) {
    const Grid& g = *u.grid;
    const Manifold& m = *g.model();
    const int n = g.dim();
    const auto cubes = cubic_monomials(n);
    const int nq = n * (n + 1) / 2;
    const int cols = 1 + n + nq + static_cast<int>(cubes.size());
    const auto& dirs = g.directions();
    const std::size_t nodes = static_cast<std::size_t>(g.size());
    std::vector<double> sub(nodes), super(nodes);

    parallel_for(nodes, [&](std::size_t idx) {
        const int i = static_cast<int>(idx);
        const NodeStencil& s = g.stencil(i);
        const Mat& fr = g.frame(i);
        const Vec& x = g.node(i).coords;
        std::vector<Vec> ys;
        std::vector<double> vals;
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            const double k = s.step[d];
            ys.push_back(k * dirs[d]);
            vals.push_back(s.plus[d].apply(u.values));
            ys.push_back(-k * dirs[d]);
            vals.push_back(s.minus[d].apply(u.values));
            for (double sign : {1.0, -1.0}) {
                const Vec y = sign * 0.5 * k * dirs[d];
                ys.push_back(y);
                vals.push_back(g.interpolate(u.values, Point{m.exp_at(x, fr * y)}));
            }
        }
        const auto rows = static_cast<Eigen::Index>(ys.size());
        Mat design(rows, cols);
        Vec rhs(rows);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Vec& y = ys[static_cast<std::size_t>(r)];
            int c = 0;
            design(r, c++) = 1.0;
            for (int a = 0; a < n; ++a) design(r, c++) = y[a];
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) design(r, c++) = a == b ? 0.5 * y[a] * y[a] : y[a] * y[b];
            for (const auto& t : cubes) design(r, c++) = y[t[0]] * y[t[1]] * y[t[2]];
            rhs[r] = vals[static_cast<std::size_t>(r)];
        }
        const Vec coef = design.colPivHouseholderQr().solve(rhs);
        Vec zeta = coef.segment(1, n);
        Mat A(n, n);
        int c = 1 + n;
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) A(a, b) = A(b, a) = coef[c++];
        const double u0 = u.values[i];
        // Residuals of the test polynomial shifted through u(x).
        double cplus = 0.0, cminus = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Vec& y = ys[static_cast<std::size_t>(r)];
            const double poly = u0 + design.row(r).segment(1, cols - 1).dot(coef.segment(1, cols - 1));
            const double e = rhs[r] - poly;
            const double q = 2.0 * e / y.squaredNorm();
            cplus = std::max(cplus, q);
            cminus = std::max(cminus, -q);
        }
        const Mat id = Mat::Identity(n, n);
        sub[idx] = std::max(0.0, f.eval(g.node(i), u0, zeta, A + cplus * id));
        super[idx] = std::max(0.0, -f.eval(g.node(i), u0, zeta, A - cminus * id));
    });

    ViscosityReport rep;
    for (std::size_t i = 0; i < nodes; ++i) {
        if (sub[i] > rep.sub_violation || rep.sub_node < 0) rep.sub_violation = sub[i], rep.sub_node = static_cast<int>(i);
        if (super[i] > rep.super_violation || rep.super_node < 0)
            rep.super_violation = super[i], rep.super_node = static_cast<int>(i);
    }
    rep.threshold = tol_factor * g.spacing();
    rep.pass = rep.sub_violation <= rep.threshold && rep.super_violation <= rep.threshold;
    return rep;
}

ComparisonCheck discrete_comparison(const OperatorSpec& f, const GridFunction& u, const GridFunction& v, double gamma) {
    require_same_grid(u, v, "discrete_comparison");
    if (!(gamma > 0)) throw ArgumentError("discrete_comparison: gamma must be positive");
    const Grid& g = *u.grid;
    ComparisonCheck c;
    c.max_diff = (u.values - v.values).maxCoeff();
    c.sub_slack = std::max(0.0, apply_scheme(f, g, u.values).maxCoeff());
    c.super_slack = std::max(0.0, -apply_scheme(f, g, v.values).minCoeff());
    c.bound = (c.sub_slack + c.super_slack) / gamma;
    c.holds = c.max_diff <= c.bound + 1e-12;
    return c;
}

SolveResult yamabe_solve(const ScalarFieldSpec& s, const GridFunction& u0, const YamabeOptions& opts) {
    const Grid& g = *u0.grid;
    if (g.model()->kind() != ModelKind::Sphere) throw ArgumentError("yamabe_solve: the grid must live on a sphere");
    if (opts.s_prime > 0) throw ArgumentError("yamabe_solve: S' must be nonpositive");
    for (int i = 0; i < g.size(); ++i)
        if (!(s(g.node(i)) > 0)) throw DomainError("yamabe_solve: S must be positive at every node");
    if ((u0.values.array() < 0).any()) throw ArgumentError("yamabe_solve: initial iterate must be nonnegative");
    return solve_fixed_point(*yamabe(opts.n, s, opts.s_prime), u0, opts.solve);
}

}  // namespace rvisc
