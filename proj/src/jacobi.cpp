#include "rvisc/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "rvisc/parallel.hpp"

namespace rvisc {

namespace {

// Solutions of y'' + mu y = 0 with (C, S)(0) = (1, 0), (C', S')(0) = (0, 1).
struct Mode {
    double c, dc, s, ds;
};

Mode mode_at(double mu, double t) {
    if (std::abs(mu) <= 1e-13) return {1.0, 0.0, t, 1.0};
    if (mu > 0) {
        const double k = std::sqrt(mu);
        return {std::cos(k * t), -k * std::sin(k * t), std::sin(k * t) / k, std::cos(k * t)};
    }
    const double k = std::sqrt(-mu);
    return {std::cosh(k * t), k * std::sinh(k * t), std::sinh(k * t) / k, std::cosh(k * t)};
}

bool use_closed_form(const GeodesicSegment& seg, JacobiMethod method) {
    if (method == JacobiMethod::ClosedForm) return true;
    if (method == JacobiMethod::Shooting) return false;
    return seg.manifold().kind() != ModelKind::Product;
}

struct ModalData {
    Eigen::SelfAdjointEigenSolver<Mat> eig;
    double length;
};

ModalData modal_data(const GeodesicSegment& seg) {
    ModalData d{Eigen::SelfAdjointEigenSolver<Mat>(curvature_matrix(seg, 0.0)), seg.length()};
    for (Eigen::Index i = 0; i < d.eig.eigenvalues().size(); ++i) {
        const double mu = d.eig.eigenvalues()[i];
        if (mu > 1e-13 && std::abs(std::sin(std::sqrt(mu) * d.length)) < 1e-10)
            throw SingularBvpError("jacobi: endpoints are conjugate");
    }
    return d;
}

// RK4 for Y'' = -M(t) Y on the half-step profile; returns (Y, Y') at the end
// and optionally the node values.
template <class Store>
std::pair<Mat, Mat> integrate(const CurvatureProfile& p, Mat y, Mat dy, Store&& store) {
    const double h = p.step();
    store(0, y, dy);
    for (int k = 0; k < p.intervals(); ++k) {
        const Mat& m0 = p.at_half(2 * k);
        const Mat& m1 = p.at_half(2 * k + 1);
        const Mat& m2 = p.at_half(2 * k + 2);
        const Mat k1y = dy, k1v = -m0 * y;
        const Mat k2y = dy + 0.5 * h * k1v, k2v = -m1 * (y + 0.5 * h * k1y);
        const Mat k3y = dy + 0.5 * h * k2v, k3v = -m1 * (y + 0.5 * h * k2y);
        const Mat k4y = dy + h * k3v, k4v = -m2 * (y + h * k3y);
        y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        store(k + 1, y, dy);
    }
    return {y, dy};
}

void require_at(const Manifold& m, const Point& p, const TangentVector& v, const char* what) {
    if (!m.same_point(p, v.base)) throw ArgumentError(std::string(what) + ": vector is based at the wrong point");
}

}  // namespace

Mat curvature_matrix(const GeodesicSegment& seg, double t) {
    const Manifold& m = seg.manifold();
    const Mat e = seg.frame_at(t);
    const Vec p = t == 0.0 ? seg.start().coords : seg.point_at(t).coords;
    const Vec g = e.col(0);
    const Eigen::Index n = e.cols();
    Mat r(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vec rj = m.curvature_at(p, e.col(j), g, g);
        for (Eigen::Index i = 0; i < n; ++i) r(i, j) = m.inner(p, e.col(i), rj);
    }
    return 0.5 * (r + r.transpose());
}

CurvatureProfile::CurvatureProfile(const GeodesicSegment& seg, int intervals)
    : n_(intervals), length_(seg.length()) {
    if (intervals < 2 || intervals % 2 != 0) throw ArgumentError("curvature profile: intervals must be even");
    m_.resize(static_cast<std::size_t>(2 * n_ + 1));
    parallel_for(m_.size(), [&](std::size_t k) {
        m_[k] = curvature_matrix(seg, length_ * static_cast<double>(k) / (2.0 * n_));
    });
}

JacobiField::JacobiField(GeodesicSegment seg, JacobiMethod method, FrameField field, Mat second)
    : seg_(std::move(seg)), method_(method), field_(std::move(field)), second_(std::move(second)) {}

TangentVector JacobiField::value_at(int k) const {
    return seg_.vector_at(field_.step() * k, field_.value.col(k));
}

TangentVector JacobiField::derivative_at(int k) const {
    return seg_.vector_at(field_.step() * k, field_.deriv.col(k));
}

double JacobiField::boundary_term() const {
    const int n = intervals();
    return field_.value.col(n).dot(field_.deriv.col(n)) - field_.value.col(0).dot(field_.deriv.col(0));
}

double JacobiEndpointMap::second_variation(const Vec& a, const Vec& w) const {
    const Vec d0 = d0_a * a + d0_w * w;
    const Vec dl = dl_a * a + dl_w * w;
    return 2.0 * length * (w.dot(dl) - a.dot(d0));
}

JacobiEndpointMap jacobi_endpoint_map(const GeodesicSegment& seg, JacobiMethod method,
                                      const CurvatureProfile* profile) {
    JacobiEndpointMap out;
    out.length = seg.length();
    const int n = seg.manifold().dim();
    if (use_closed_form(seg, method)) {
        const ModalData md = modal_data(seg);
        Vec d0a(n), d0w(n), dla(n), dlw(n);
        for (int i = 0; i < n; ++i) {
            const Mode e = mode_at(md.eig.eigenvalues()[i], md.length);
            d0a[i] = -e.c / e.s;
            d0w[i] = 1.0 / e.s;
            dla[i] = e.dc - e.ds * e.c / e.s;
            dlw[i] = e.ds / e.s;
        }
        const Mat& u = md.eig.eigenvectors();
        out.d0_a = u * d0a.asDiagonal() * u.transpose();
        out.d0_w = u * d0w.asDiagonal() * u.transpose();
        out.dl_a = u * dla.asDiagonal() * u.transpose();
        out.dl_w = u * dlw.asDiagonal() * u.transpose();
        return out;
    }

    std::optional<CurvatureProfile> own;
    if (!profile) profile = &own.emplace(seg);
    const Mat id = Mat::Identity(n, n), zero = Mat::Zero(n, n);
    const auto none = [](int, const Mat&, const Mat&) {};
    const auto [phi, dphi] = integrate(*profile, id, zero, none);
    const auto [psi, dpsi] = integrate(*profile, zero, id, none);
    Eigen::JacobiSVD<Mat> svd(psi, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() < 1e-10 * std::max(1.0, seg.length()))
        throw SingularBvpError("jacobi: endpoints are conjugate");
    const Mat psi_inv = svd.solve(id);
    out.d0_w = psi_inv;
    out.d0_a = -psi_inv * phi;
    out.dl_a = dphi + dpsi * out.d0_a;
    out.dl_w = dpsi * out.d0_w;
    return out;
}

JacobiField solve_jacobi_bvp(const GeodesicSegment& seg, const TangentVector& v, const TangentVector& w,
                             JacobiMethod method, const CurvatureProfile* profile) {
    const Manifold& m = seg.manifold();
    require_at(m, seg.start(), v, "solve_jacobi_bvp");
    require_at(m, seg.end(), w, "solve_jacobi_bvp");
    const Vec a = seg.coords_at(0.0, v);
    const Vec b = seg.coords_at(seg.length(), w);
    const int n = m.dim();
    const int steps = profile ? profile->intervals() : kJacobiIntervals;
    const double len = seg.length();

    FrameField f;
    f.length = len;
    f.value.resize(n, steps + 1);
    f.deriv.resize(n, steps + 1);
    Mat second(n, steps + 1);

    if (use_closed_form(seg, method)) {
        const ModalData md = modal_data(seg);
        const Mat& u = md.eig.eigenvectors();
        const Vec am = u.transpose() * a, wm = u.transpose() * b;
        Vec bm(n);
        for (int i = 0; i < n; ++i) {
            const Mode e = mode_at(md.eig.eigenvalues()[i], len);
            bm[i] = (wm[i] - am[i] * e.c) / e.s;
        }
        Vec y(n), dy(n), ddy(n);
        for (int k = 0; k <= steps; ++k) {
            const double t = len * k / steps;
            for (int i = 0; i < n; ++i) {
                const double mu = md.eig.eigenvalues()[i];
                const Mode e = mode_at(mu, t);
                y[i] = am[i] * e.c + bm[i] * e.s;
                dy[i] = am[i] * e.dc + bm[i] * e.ds;
                ddy[i] = std::abs(mu) <= 1e-13 ? 0.0 : -mu * y[i];
            }
            f.value.col(k) = u * y;
            f.deriv.col(k) = u * dy;
            second.col(k) = u * ddy;
        }
        return JacobiField(seg, JacobiMethod::ClosedForm, std::move(f), std::move(second));
    }

    std::optional<CurvatureProfile> own;
    if (!profile) profile = &own.emplace(seg);
    const JacobiEndpointMap map = jacobi_endpoint_map(seg, JacobiMethod::Shooting, profile);
    const Vec d0 = map.d0_a * a + map.d0_w * b;
    integrate(*profile, Mat(a), Mat(d0), [&](int k, const Mat& y, const Mat& dy) {
        f.value.col(k) = y.col(0);
        f.deriv.col(k) = dy.col(0);
        second.col(k) = -profile->at_node(k) * y.col(0);
    });
    return JacobiField(seg, JacobiMethod::Shooting, std::move(f), std::move(second));
}

double jacobi_residual(const JacobiField& x, const CurvatureProfile& profile) {
    if (profile.intervals() != x.intervals()) throw ArgumentError("jacobi_residual: grid mismatch");
    double r = 0.0;
    for (int k = 1; k < x.intervals(); ++k)
        r = std::max(r, (x.second().col(k) + profile.at_node(k) * x.coeffs(k)).norm());
    return r;
}

double index_form(const CurvatureProfile& profile, const FrameField& z) {
    const int n = z.intervals();
    if (n != profile.intervals()) throw ArgumentError("index_form: field and profile grids differ");
    if (std::abs(z.length - profile.length()) > 1e-12 * std::max(1.0, z.length))
        throw ArgumentError("index_form: field and profile lengths differ");
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        const Vec c = z.value.col(k);
        const double g = z.deriv.col(k).squaredNorm() - c.dot(profile.at_node(k) * c);
        const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        sum += wgt * g;
    }
    return sum * profile.step() / 3.0;
}

double index_form(const GeodesicSegment& seg, const FrameField& z) {
    return index_form(CurvatureProfile(seg, z.intervals()), z);
}

FrameField frame_linear_field(const GeodesicSegment& seg, const TangentVector& v, const TangentVector& w,
                              int intervals) {
    const Manifold& m = seg.manifold();
    require_at(m, seg.start(), v, "frame_linear_field");
    require_at(m, seg.end(), w, "frame_linear_field");
    const Vec a = seg.coords_at(0.0, v);
    const Vec b = seg.coords_at(seg.length(), w);
    FrameField f;
    f.length = seg.length();
    f.value.resize(a.size(), intervals + 1);
    f.deriv.resize(a.size(), intervals + 1);
    for (int k = 0; k <= intervals; ++k) {
        const double s = static_cast<double>(k) / intervals;
        f.value.col(k) = a + s * (b - a);
        f.deriv.col(k) = (b - a) / f.length;
    }
    return f;
}

std::pair<TangentVector, TangentVector> grad_distance_sq(const Manifold& m, const Point& x, const Point& y) {
    const double d = m.distance(x, y);
    if (!(d < std::min(m.injectivity_radius(x), m.injectivity_radius(y))))
        throw DomainError("grad_distance_sq: points are not within the injectivity radius");
    TangentVector gx = m.log(x, y), gy = m.log(y, x);
    gx.components *= -2.0;
    gy.components *= -2.0;
    return {gx, gy};
}

double HessianPair::value(const Manifold& m, const TangentVector& v, const TangentVector& w) const {
    require_at(m, x, v, "HessianPair::value");
    require_at(m, y, w, "HessianPair::value");
    Vec c(form.rows());
    c << m.to_frame(v), m.to_frame(w);
    return c.dot(form * c);
}

double HessianPair::norm() const {
    return Eigen::SelfAdjointEigenSolver<Mat>(form, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

Mat polarize(int size, const std::function<double(const Vec&)>& q) {
    Mat h(size, size);
    Vec diag(size);
    for (int i = 0; i < size; ++i) diag[i] = q(Vec::Unit(size, i));
    for (int i = 0; i < size; ++i) {
        h(i, i) = diag[i];
        for (int j = i + 1; j < size; ++j) {
            const double s = q(Vec::Unit(size, i) + Vec::Unit(size, j));
            h(i, j) = h(j, i) = 0.5 * (s - diag[i] - diag[j]);
        }
    }
    return h;
}

}  // namespace

HessianPair hessian_distance_sq(const ManifoldPtr& m, const Point& x, const Point& y, JacobiMethod method) {
    const GeodesicSegment seg(m, x, y);
    const JacobiEndpointMap map = jacobi_endpoint_map(seg, method);
    const int n = m->dim();
    const Mat hs = polarize(2 * n, [&](const Vec& z) { return map.second_variation(z.head(n), z.tail(n)); });

    // Change of basis from frame(x) (+) frame(y) to the parallel frame.
    const Mat fx = m->frame(x), fy = m->frame(y);
    const Mat e0 = seg.start_frame(), el = seg.frame_at(seg.length());
    Mat b = Mat::Zero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            b(i, j) = m->inner(x.coords, e0.col(i), fx.col(j));
            b(n + i, n + j) = m->inner(y.coords, el.col(i), fy.col(j));
        }
    Mat h = b.transpose() * hs * b;
    return {x, y, 0.5 * (h + h.transpose())};
}

HessianPair hessian_phi_alpha(const ManifoldPtr& m, const Point& x, const Point& y, double alpha) {
    return hessian_distance_sq(m, x, y).scaled(0.5 * alpha);
}

HessianPair fd_hessian_distance_sq(const ManifoldPtr& m, const Point& x, const Point& y, double step) {
    if (m->same_point(x, y)) throw DomainError("fd_hessian_distance_sq: coincident points");
    const int n = m->dim();
    const Mat fx = m->frame(x), fy = m->frame(y);
    const auto f = [&](const Vec& z, double s) {
        const double d = m->dist(m->exp_at(x.coords, s * (fx * z.head(n))), m->exp_at(y.coords, s * (fy * z.tail(n))));
        return d * d;
    };
    const double f0 = f(Vec::Zero(2 * n), 0.0);
    const Mat h = polarize(2 * n, [&](const Vec& z) { return (f(z, step) - 2.0 * f0 + f(z, -step)) / (step * step); });
    return {x, y, h};
}

double hessian_on_parallel_pair(const ManifoldPtr& m, const Point& x, const Point& y, const TangentVector& v,
                                JacobiMethod method) {
    require_at(*m, x, v, "hessian_on_parallel_pair");
    const GeodesicSegment seg(m, x, y);
    const TangentVector lv = m->parallel_transport(x, y, v);
    return jacobi_endpoint_map(seg, method).second_variation(seg.coords_at(0.0, v), seg.coords_at(seg.length(), lv));
}

std::vector<ParallelPairSample> sample_parallel_pairs(const ManifoldPtr& m, const ParallelPairSampling& opts) {
    if (opts.samples < 0) throw ArgumentError("sample_parallel_pairs: negative sample count");
    const double hi = opts.max_length > 0 ? opts.max_length : std::min(0.9 * m->global_injectivity_radius(), 3.0);
    if (!(opts.min_length > 0 && opts.min_length < hi && hi < m->global_injectivity_radius()))
        throw ArgumentError("sample_parallel_pairs: invalid length range");
    std::vector<ParallelPairSample> out(static_cast<std::size_t>(opts.samples));
    parallel_for(out.size(), [&](std::size_t k) {
        Rng rng(opts.seed, k);
        ParallelPairSample& s = out[k];
        s.x = m->random_point(rng);
        TangentVector u = m->random_tangent(s.x, rng);
        u.components /= m->norm(u);
        const double len = rng.uniform(opts.min_length, hi);
        s.y = m->exp(s.x, {s.x, len * u.components});
        s.v = m->random_tangent(s.x, rng);
        const GeodesicSegment seg(m, s.x, s.y);
        const TangentVector g = seg.velocity_at(0.0);
        if (opts.normal_only) s.v.components -= m->metric(s.x, s.v, g) * g.components;
        s.v.components *= rng.uniform(0.5, 2.0) / std::max(m->norm(s.v), 1e-300);
        s.length = seg.length();
        s.v_norm_sq = m->metric(s.x, s.v, s.v);
        const double tang = m->metric(s.x, s.v, g);
        s.v_normal_sq = std::max(0.0, s.v_norm_sq - tang * tang);
        const TangentVector lv = m->parallel_transport(s.x, s.y, s.v);
        s.value = jacobi_endpoint_map(seg).second_variation(seg.coords_at(0.0, s.v), seg.coords_at(s.length, lv));
    });
    return out;
}

CheckReport check_sign_condition(const ManifoldPtr& m, const ParallelPairSampling& opts, double tol) {
    const auto samples = sample_parallel_pairs(m, opts);
    const bool upper = m->min_curvature() >= 0.0;
    const bool lower = m->max_curvature() <= 0.0;
    double lo = 0.0, hi = 0.0, viol = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double val = samples[k].value;
        lo = k == 0 ? val : std::min(lo, val);
        hi = k == 0 ? val : std::max(hi, val);
        if (upper) viol = std::max(viol, val);
        if (lower) viol = std::max(viol, -val);
    }
    CheckReport r;
    r.check = "hessian_sign";
    r.model = m->name();
    r.samples = static_cast<long>(samples.size());
    r.max_violation = viol;
    r.tolerance = tol;
    r.pass = viol <= tol;
    r.details = {{"min_value", lo},
                 {"max_value", hi},
                 {"asserted", upper ? (lower ? "flat" : "nonpositive") : (lower ? "nonnegative" : "none")}};
    return r;
}

CheckReport check_curvature_bound(const ManifoldPtr& m, double k0, const ParallelPairSampling& opts, double tol) {
    if (k0 < 0) throw ArgumentError("check_curvature_bound: K0 must be nonnegative");
    if (m->min_curvature() < -k0 - 1e-12)
        throw ArgumentError("check_curvature_bound: sectional curvature is below -K0");
    const auto samples = sample_parallel_pairs(m, opts);
    double viol = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) viol = std::max(viol, s.value - 2.0 * k0 * s.length * s.length * s.v_norm_sq);
    CheckReport r;
    r.check = "hessian_curvature_bound";
    r.model = m->name();
    r.samples = static_cast<long>(samples.size());
    r.max_violation = samples.empty() ? 0.0 : std::max(0.0, viol);
    r.tolerance = tol;
    r.pass = r.max_violation <= tol;
    r.details = {{"K0", k0}, {"max_signed_excess", samples.empty() ? 0.0 : viol}};
    return r;
}

CheckReport index_minimality_check(const GeodesicSegment& seg, const TangentVector& v, const TangentVector& w,
                                   int n_trials, std::uint64_t seed, double tol) {
    const CurvatureProfile profile(seg);
    const JacobiField x = solve_jacobi_bvp(seg, v, w, JacobiMethod::Auto, &profile);
    const double ix = index_form(profile, x.field());
    const double ip = index_form(profile, frame_linear_field(seg, v, w));
    const int n = seg.manifold().dim();
    const int steps = profile.intervals();
    const double len = seg.length();

    std::vector<double> gaps(static_cast<std::size_t>(std::max(0, n_trials)));
    parallel_for(gaps.size(), [&](std::size_t trial) {
        Rng rng(seed, trial);
        FrameField z = x.field();
        const double scale = rng.uniform(0.01, 1.0);
        std::vector<Vec> sines;
        for (int j = 0; j < 4; ++j) sines.push_back(scale * rng.normal_vector(n) / (j + 1));
        // Piecewise-linear bump with its kink on a Simpson panel boundary.
        const int kink = 2 * rng.integer(1, steps / 2 - 1);
        const Vec peak = scale * rng.normal_vector(n);
        const double tk = len * kink / steps;
        for (int k = 0; k <= steps; ++k) {
            const double t = len * k / steps;
            for (int j = 0; j < 4; ++j) {
                const double om = (j + 1) * M_PI / len;
                z.value.col(k) += sines[j] * std::sin(om * t);
                z.deriv.col(k) += sines[j] * om * std::cos(om * t);
            }
            if (k <= kink) {
                z.value.col(k) += peak * (t / tk);
                z.deriv.col(k) += peak / tk;
            } else {
                z.value.col(k) += peak * ((len - t) / (len - tk));
                z.deriv.col(k) -= peak / (len - tk);
            }
        }
        // The kink node carries the left derivative; Simpson weights it 2 as
        // the end of one panel and the start of the next, so swap in the
        // right derivative for the second half.
        const Vec dl = z.deriv.col(kink);
        const Vec dr = dl - peak / tk - peak / (len - tk);
        const double kink_fix = (dr.squaredNorm() - dl.squaredNorm()) * profile.step() / 3.0;
        gaps[trial] = index_form(profile, z) + kink_fix - ix;
    });

    double viol = std::max(0.0, ix - ip);
    double min_gap = std::numeric_limits<double>::infinity();
    for (double g : gaps) {
        viol = std::max(viol, -g);
        min_gap = std::min(min_gap, g);
    }
    CheckReport r;
    r.check = "index_minimality";
    r.model = seg.manifold().name();
    r.samples = n_trials;
    r.max_violation = viol;
    r.tolerance = tol;
    r.pass = viol <= tol;
    r.details = {{"index_jacobi", ix},
                 {"index_frame_linear", ip},
                 {"boundary_term", x.boundary_term()},
                 {"min_gap", gaps.empty() ? 0.0 : min_gap}};
    return r;
}

}  // namespace rvisc
