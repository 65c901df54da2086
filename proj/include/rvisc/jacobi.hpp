#pragma once

#include <utility>
#include <vector>

#include "rvisc/manifold.hpp"
#include "rvisc/report.hpp"

namespace rvisc {

// Uniform grid used for Jacobi fields and the index-form quadrature.
inline constexpr int kJacobiIntervals = 2048;

enum class JacobiMethod { Auto, ClosedForm, Shooting };

// Matrices M(t)_ij = <R(E_j, g')g', E_i> in the parallel frame E of the
// segment, sampled at the half steps t = k l / (2N), k = 0..2N.
class CurvatureProfile {
public:
    explicit CurvatureProfile(const GeodesicSegment& seg, int intervals = kJacobiIntervals);

    int intervals() const { return n_; }
    double length() const { return length_; }
    double step() const { return length_ / n_; }
    const Mat& at_half(int k) const { return m_[static_cast<std::size_t>(k)]; }
    const Mat& at_node(int k) const { return m_[static_cast<std::size_t>(2 * k)]; }

private:
    int n_;
    double length_;
    std::vector<Mat> m_;
};

// Curvature matrix at gamma(t) in the parallel frame.
Mat curvature_matrix(const GeodesicSegment& seg, double t);

// Vector field along a segment in parallel-frame coordinates, sampled at the
// N + 1 nodes t_k = k l / N. Column k holds the coefficients at t_k.
struct FrameField {
    double length = 0.0;
    Mat value;
    Mat deriv;

    int intervals() const { return static_cast<int>(value.cols()) - 1; }
    double step() const { return length / intervals(); }
};

class JacobiField {
public:
    JacobiField(GeodesicSegment seg, JacobiMethod method, FrameField field, Mat second);

    const GeodesicSegment& segment() const { return seg_; }
    JacobiMethod method() const { return method_; }
    const FrameField& field() const { return field_; }
    // X'' coefficients at the nodes.
    const Mat& second() const { return second_; }
    int intervals() const { return field_.intervals(); }

    Vec coeffs(int k) const { return field_.value.col(k); }
    Vec deriv_coeffs(int k) const { return field_.deriv.col(k); }
    TangentVector value_at(int k) const;
    TangentVector derivative_at(int k) const;

    // <X(l), X'(l)> - <X(0), X'(0)>.
    double boundary_term() const;

private:
    GeodesicSegment seg_;
    JacobiMethod method_;
    FrameField field_;
    Mat second_;
};

// Linear map from boundary data to boundary derivatives of the Jacobi field
// with X(0) = a, X(l) = w (parallel-frame coordinates):
//   X'(0) = d0_a a + d0_w w,   X'(l) = dl_a a + dl_w w.
struct JacobiEndpointMap {
    double length = 0.0;
    Mat d0_a, d0_w, dl_a, dl_w;

    // 2 l (<X(l), X'(l)> - <X(0), X'(0)>).
    double second_variation(const Vec& a, const Vec& w) const;
};

JacobiEndpointMap jacobi_endpoint_map(const GeodesicSegment& seg, JacobiMethod method = JacobiMethod::Auto,
                                      const CurvatureProfile* profile = nullptr);

JacobiField solve_jacobi_bvp(const GeodesicSegment& seg, const TangentVector& v, const TangentVector& w,
                             JacobiMethod method = JacobiMethod::Auto, const CurvatureProfile* profile = nullptr);

// max over interior nodes of |X'' + R(X, g')g'|.
double jacobi_residual(const JacobiField& x, const CurvatureProfile& profile);

// Composite Simpson rule for the integral of |Z'|^2 - <R(Z, g')g', Z>.
double index_form(const CurvatureProfile& profile, const FrameField& z);
double index_form(const GeodesicSegment& seg, const FrameField& z);

// Field with coefficients linear in t between the given endpoint vectors.
// For w = L_xy v this is the parallel field.
FrameField frame_linear_field(const GeodesicSegment& seg, const TangentVector& v, const TangentVector& w,
                              int intervals = kJacobiIntervals);

// Gradient of phi = d^2: (-2 log_x y, -2 log_y x).
std::pair<TangentVector, TangentVector> grad_distance_sq(const Manifold& m, const Point& x, const Point& y);

// Second derivative of d^2 on T_x M x T_y M as a 2n x 2n matrix in
// frame(x) (+) frame(y).
struct HessianPair {
    Point x, y;
    Mat form;

    int dim() const { return static_cast<int>(form.rows() / 2); }
    Mat xx() const { return form.topLeftCorner(dim(), dim()); }
    Mat xy() const { return form.topRightCorner(dim(), dim()); }
    Mat yy() const { return form.bottomRightCorner(dim(), dim()); }
    double value(const Manifold& m, const TangentVector& v, const TangentVector& w) const;
    HessianPair scaled(double s) const { return {x, y, s * form}; }
    // Spectral norm, sup |eigenvalue|.
    double norm() const;
};

HessianPair hessian_distance_sq(const ManifoldPtr& m, const Point& x, const Point& y,
                                JacobiMethod method = JacobiMethod::Auto);
// Hessian of (alpha / 2) d^2.
HessianPair hessian_phi_alpha(const ManifoldPtr& m, const Point& x, const Point& y, double alpha);
// Second central differences of d(exp_x(s v), exp_y(s w))^2, polarized.
HessianPair fd_hessian_distance_sq(const ManifoldPtr& m, const Point& x, const Point& y, double step = 1e-4);

// d^2 phi(x, y)(v, L_xy v).
double hessian_on_parallel_pair(const ManifoldPtr& m, const Point& x, const Point& y, const TangentVector& v,
                                JacobiMethod method = JacobiMethod::Auto);

struct ParallelPairSample {
    Point x, y;
    TangentVector v;
    double length = 0.0;
    double value = 0.0;
    double v_norm_sq = 0.0;
    // Squared norm of the part of v normal to the geodesic.
    double v_normal_sq = 0.0;
};

struct ParallelPairSampling {
    long samples = 1000;
    std::uint64_t seed = 1;
    double min_length = 0.05;
    // <= 0 selects 0.9 * injectivity radius, capped at 3.
    double max_length = 0.0;
    bool normal_only = false;
};

std::vector<ParallelPairSample> sample_parallel_pairs(const ManifoldPtr& m, const ParallelPairSampling& opts);

// Sign of d^2 phi(v, L v): <= tol on K >= 0 models, >= -tol on K <= 0 models.
CheckReport check_sign_condition(const ManifoldPtr& m, const ParallelPairSampling& opts, double tol = 1e-8);
// d^2 phi(v, L v) <= 2 K0 d^2 |v|^2 when sectional curvature >= -K0.
CheckReport check_curvature_bound(const ManifoldPtr& m, double k0, const ParallelPairSampling& opts,
                                  double tol = 1e-8);
// I(X, X) <= I(Z, Z) for random competitors with the same boundary values,
// and for the frame-linear field.
CheckReport index_minimality_check(const GeodesicSegment& seg, const TangentVector& v, const TangentVector& w,
                                   int n_trials, std::uint64_t seed, double tol = 1e-8);

}  // namespace rvisc
