#include "rvisc/jets.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rvisc/parallel.hpp"

namespace rvisc {

namespace {

double min_eigenvalue(const Mat& a) {
    return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

struct RawVerdict {
    JetVerdict verdict;
    Vec witness;
};

RawVerdict run_jet_test(int n, const ChartFunction& g, const Vec& zeta, const Mat& a, JetSide side,
                        const JetTestOptions& opts) {
    if (opts.directions <= 0 || opts.radii.empty()) throw ArgumentError("jet test: empty sample set");
    Rng rng(opts.seed);
    std::vector<Vec> dirs;
    for (int k = 0; k < opts.directions; ++k) dirs.push_back(rng.unit_vector(n));

    const double g0 = g(Vec::Zero(n));
    const double sign = side == JetSide::Sub ? 1.0 : -1.0;
    RawVerdict out;
    out.verdict.margin = std::numeric_limits<double>::infinity();
    for (double rho : opts.radii) {
        double worst = std::numeric_limits<double>::infinity();
        Vec worst_v;
        for (const Vec& d : dirs) {
            const Vec v = rho * d;
            const double res = (g(v) - g0 - zeta.dot(v) - 0.5 * v.dot(a * v)) / (rho * rho);
            if (sign * res < worst) worst = sign * res, worst_v = v;
        }
        out.verdict.worst_per_radius.push_back(worst);
        const double margin = worst + opts.tol_factor * rho;
        if (margin < out.verdict.margin) {
            out.verdict.margin = margin;
            out.witness = worst_v;
        }
    }
    out.verdict.accept = out.verdict.margin >= 0.0;
    return out;
}

void check_radii(const Manifold& m, const Point& x, const JetTestOptions& opts) {
    for (double r : opts.radii)
        if (!(r > 0 && r < m.injectivity_radius(x))) throw DomainError("jet test: radius outside the injectivity radius");
}

}  // namespace

Jet2 make_jet(const Manifold& m, const Point& x, double value, const Vec& zeta_frame, const Mat& a_frame) {
    if (zeta_frame.size() != m.dim() || a_frame.rows() != m.dim() || a_frame.cols() != m.dim())
        throw ArgumentError("make_jet: dimension mismatch");
    return {x, value, m.from_frame(x, zeta_frame), {x, 0.5 * (a_frame + a_frame.transpose())}};
}

JetVerdict quadratic_jet_test(const Manifold& m, const ScalarField& f, const Jet2& jet, JetSide side,
                              const JetTestOptions& opts) {
    check_radii(m, jet.x, opts);
    const Mat fr = m.frame(jet.x);
    const auto g = [&](const Vec& c) { return f(Point{m.exp_at(jet.x.coords, fr * c)}); };
    RawVerdict r = run_jet_test(m.dim(), g, m.to_frame(jet.zeta), jet.A.matrix, side, opts);
    if (!r.verdict.accept) r.verdict.witness = TangentVector{jet.x, fr * r.witness};
    return r.verdict;
}

JetVerdict chart_jet_test(const ChartFunction& g, const Vec& zeta, const Mat& a, JetSide side,
                          const JetTestOptions& opts) {
    RawVerdict r = run_jet_test(static_cast<int>(zeta.size()), g, zeta, a, side, opts);
    if (!r.verdict.accept) r.verdict.witness = TangentVector{Point{Vec::Zero(zeta.size())}, r.witness};
    return r.verdict;
}

ChartTransferReport chart_transfer_check(const Manifold& m, const ScalarField& f, const Jet2& jet, JetSide side,
                                         const JetTestOptions& opts) {
    ChartTransferReport rep;
    rep.on_manifold = quadratic_jet_test(m, f, jet, side, opts);
    const Mat fr = m.frame(jet.x);
    const Point x = jet.x;
    const ChartFunction pulled = [&m, &f, fr, x](const Vec& c) { return f(Point{m.exp_at(x.coords, fr * c)}); };
    rep.in_chart = chart_jet_test(pulled, m.to_frame(jet.zeta), jet.A.matrix, side, opts);
    rep.agree = rep.on_manifold.accept == rep.in_chart.accept;
    return rep;
}

Vec chart_gradient(const Manifold& m, const ScalarField& f, const Point& x, double step) {
    const Mat fr = m.frame(x);
    Vec g(m.dim());
    for (int i = 0; i < m.dim(); ++i)
        g[i] = (f({m.exp_at(x.coords, step * fr.col(i))}) - f({m.exp_at(x.coords, -step * fr.col(i))})) / (2 * step);
    return g;
}

Mat chart_hessian(const Manifold& m, const ScalarField& f, const Point& x, double step) {
    const Mat fr = m.frame(x);
    const int n = m.dim();
    const auto g = [&](const Vec& c) { return f({m.exp_at(x.coords, step * (fr * c))}); };
    const double g0 = f(x);
    Mat h(n, n);
    for (int i = 0; i < n; ++i) {
        const Vec ei = Vec::Unit(n, i);
        h(i, i) = (g(ei) - 2 * g0 + g(-ei)) / (step * step);
        for (int j = i + 1; j < n; ++j) {
            const Vec ej = Vec::Unit(n, j);
            h(i, j) = h(j, i) = (g(ei + ej) - g(ei - ej) - g(ej - ei) + g(-ei - ej)) / (4 * step * step);
        }
    }
    return h;
}

LemmaCorrection lemma_correction_term(const Manifold& m, const ScalarField& phi, const Point& x, const Point& y,
                                      const VectorField& v) {
    if (!(m.distance(x, y) < m.injectivity_radius(x)))
        throw DomainError("lemma_correction_term: y is outside the normal chart at x");
    const int n = m.dim();
    const Vec w = m.same_point(x, y) ? Vec::Zero(m.ambient_dim()) : m.log(x, y).components;
    const Mat fx = m.frame(x);

    // d exp_x at w in frame(x) -> frame(y) coordinates.
    const double dstep = 1e-6;
    Mat dexp(n, n);
    for (int j = 0; j < n; ++j) {
        const Vec col = (m.exp_at(x.coords, w + dstep * fx.col(j)) - m.exp_at(x.coords, w - dstep * fx.col(j))) /
                        (2 * dstep);
        dexp.col(j) = m.to_frame(m.make_tangent(y, col));
    }
    const TangentVector vy = v(y);
    const Vec vt = fx * dexp.partialPivLu().solve(m.to_frame(vy));

    const auto sigma = [&](double t) { return Point{m.exp_at(x.coords, w + t * vt)}; };
    const double h = 1e-4;
    // Covariant acceleration from normal coordinates centred at y.
    const Vec acc = (m.log_at(y.coords, sigma(h).coords) + m.log_at(y.coords, sigma(-h).coords)) / (h * h);
    const Vec grad = chart_gradient(m, phi, y);

    LemmaCorrection out;
    out.correction = grad.dot(m.to_frame(m.make_tangent(y, acc)));
    const double p0 = phi(y);
    out.chart_second = (phi(sigma(h)) - 2 * p0 + phi(sigma(-h))) / (h * h);
    out.manifold_second = (phi({m.exp_at(y.coords, h * vy.components)}) - 2 * p0 +
                           phi({m.exp_at(y.coords, -h * vy.components)})) /
                          (h * h);
    return out;
}

double canonical_epsilon(const HessianPair& a) { return 1.0 / (2.0 * (1.0 + a.norm())); }

StarCondition make_star_condition(const HessianPair& a, const SymBilinear& p, const SymBilinear& q) {
    return {a, canonical_epsilon(a), p, q};
}

StarVerdict verify_condition_star(const StarCondition& sc, double tol) {
    const int n = sc.A.dim();
    if (sc.P.matrix.rows() != n || sc.Q.matrix.rows() != n) throw ArgumentError("verify_condition_star: dimension mismatch");
    if (!(sc.epsilon > 0)) throw ArgumentError("verify_condition_star: epsilon must be positive");
    Mat d = Mat::Zero(2 * n, 2 * n);
    d.topLeftCorner(n, n) = sc.P.matrix;
    d.bottomRightCorner(n, n) = -sc.Q.matrix;
    const Mat& a = sc.A.form;
    const double lam = 1.0 / sc.epsilon + sc.A.norm();
    StarVerdict v;
    v.lower_margin = min_eigenvalue(d + lam * Mat::Identity(2 * n, 2 * n));
    v.upper_margin = min_eigenvalue(a + sc.epsilon * a * a - d);
    v.holds = v.lower_margin >= -tol && v.upper_margin >= -tol;
    return v;
}

StarCandidates generate_star_candidates(const HessianPair& a, double epsilon, int n, std::uint64_t seed) {
    if (!(epsilon > 0)) throw ArgumentError("generate_star_candidates: epsilon must be positive");
    const int k = a.dim();
    const Mat b = a.form + epsilon * a.form * a.form;
    const Mat b11 = b.topLeftCorner(k, k), b22 = b.bottomRightCorner(k, k);
    const double b12 = Eigen::JacobiSVD<Mat>(b.topRightCorner(k, k)).singularValues()[0];
    const double floor = 1.0 / epsilon + a.norm();
    const Mat id = Mat::Identity(k, k);

    StarCandidates out;
    out.requested = n;
    for (int i = 0; i < n; ++i) {
        Rng rng(seed, static_cast<std::uint64_t>(i));
        const Mat r1 = rng.psd(k, rng.uniform(0.0, 0.5));
        const Mat r2 = rng.psd(k, rng.uniform(0.0, 0.5));
        double s = 2.0 * b12 + rng.uniform(0.0, 1.0);
        // Keep diag(P, -Q) >= -(1/eps + |A|) I.
        s = std::min({s, floor + min_eigenvalue(b11 - r1), floor + min_eigenvalue(b22 - r2)});
        if (s < b12) {
            ++out.skipped;
            continue;
        }
        out.pairs.push_back({SymBilinear{a.x, b11 - s * id - r1}, SymBilinear{a.y, s * id - b22 + r2}});
    }
    return out;
}

OrderVerdict check_P_leq_LQ(const Manifold& m, const Point& x, const Point& y, const SymBilinear& p,
                            const SymBilinear& q, double slack_rhs, double tol) {
    if (!m.same_point(p.base, x) || !m.same_point(q.base, y))
        throw ArgumentError("check_P_leq_LQ: forms are based at the wrong points");
    const SymBilinear lq = m.parallel_transport(y, x, q);
    OrderVerdict v;
    v.margin = min_eigenvalue(lq.matrix + slack_rhs * Mat::Identity(m.dim(), m.dim()) - p.matrix);
    v.holds = v.margin >= -tol;
    return v;
}

std::string DoublingTrace::to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17) << "alpha,m_alpha,d,alpha_d_sq,x_idx,y_idx\n";
    for (const auto& r : records)
        os << r.alpha << ',' << r.m_alpha << ',' << r.d << ',' << r.alpha_d_sq << ',' << r.x_idx << ',' << r.y_idx
           << '\n';
    return os.str();
}

DoublingTrace doubling_diagnostic(const GridFunction& u, const GridFunction& v, const std::vector<double>& alphas,
                                  const PairwiseDistances* table) {
    if (!u.grid || u.grid != v.grid) throw ArgumentError("doubling_diagnostic: u and v must share a grid");
    const int n = u.grid->size();
    if (n == 0) throw ArgumentError("doubling_diagnostic: empty grid");
    for (std::size_t k = 1; k < alphas.size(); ++k)
        if (!(alphas[k] > alphas[k - 1])) throw ArgumentError("doubling_diagnostic: alphas must increase");
    std::optional<PairwiseDistances> own;
    if (!table) table = &own.emplace(*u.grid);

    DoublingTrace trace;
    std::vector<double> row_best(static_cast<std::size_t>(n));
    std::vector<int> row_arg(static_cast<std::size_t>(n));
    for (double alpha : alphas) {
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            double best = -std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int j = 0; j < n; ++j) {
                const double d = (*table)(static_cast<int>(i), j);
                const double val = u.values[static_cast<Eigen::Index>(i)] - v.values[j] - 0.5 * alpha * d * d;
                if (val > best) best = val, arg = j;
            }
            row_best[i] = best;
            row_arg[i] = arg;
        });
        int bi = 0;
        for (int i = 1; i < n; ++i)
            if (row_best[static_cast<std::size_t>(i)] > row_best[static_cast<std::size_t>(bi)]) bi = i;
        const int bj = row_arg[static_cast<std::size_t>(bi)];
        const double d = (*table)(bi, bj);
        trace.records.push_back({alpha, row_best[static_cast<std::size_t>(bi)], d, alpha * d * d, bi, bj});
    }
    return trace;
}

JetLimitReport jet_limit_check(const Manifold& m, const std::vector<Jet2>& sequence, const Jet2& limit,
                               const JetLimitOptions& opts) {
    const int amb = m.ambient_dim();
    std::vector<Vec> family;
    for (int i = 0; i < amb; ++i) family.push_back(Vec::Unit(amb, i));
    for (int i = 0; i < amb; ++i)
        for (int j = i + 1; j < amb; ++j) family.push_back(Vec::Unit(amb, i) + Vec::Unit(amb, j));

    const auto pairings = [&](const Jet2& j) {
        std::vector<double> out;
        const Vec z = m.to_frame(j.zeta);
        for (const Vec& e : family) {
            const Vec c = m.to_frame(m.make_tangent(j.x, e));
            out.push_back(z.dot(c));
            out.push_back(c.dot(j.A.matrix * c));
        }
        return out;
    };
    const std::vector<double> target = pairings(limit);

    JetLimitReport rep;
    for (const Jet2& j : sequence) {
        const std::vector<double> p = pairings(j);
        double e = m.distance(j.x, limit.x) + std::abs(j.value - limit.value);
        double worst = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) worst = std::max(worst, std::abs(p[k] - target[k]));
        rep.errors.push_back(e + worst);
    }
    if (sequence.empty()) return rep;
    const auto tail = static_cast<std::size_t>(
        std::max(1.0, std::ceil(opts.tail_fraction * static_cast<double>(sequence.size()))));
    rep.converges = true;
    for (std::size_t k = sequence.size() - tail; k < sequence.size(); ++k)
        rep.converges = rep.converges && rep.errors[k] <= opts.tol;
    return rep;
}

}  // namespace rvisc
