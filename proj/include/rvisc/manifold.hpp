#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rvisc/errors.hpp"
#include "rvisc/random.hpp"

namespace rvisc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Stand-in for an infinite injectivity radius (Euclidean, hyperbolic).
// Every precondition compares distances with `<`, so this behaves as +inf.
inline constexpr double kInfiniteRadius = 1.0e300;

// Embedding coordinates for spheres and the hyperboloid, wrapped chart
// coordinates for tori, plain coordinates for Euclidean space.
struct Point {
    Vec coords;
};

// Ambient components. Covectors use the same type through the metric.
struct TangentVector {
    Point base;
    Vec components;
};

// Symmetric form stored in the orthonormal frame `Manifold::frame(base)`.
struct SymBilinear {
    Point base;
    Mat matrix;
};

enum class ModelKind { Euclidean, Sphere, Hyperbolic, FlatTorus, Product };

class Manifold;
using ManifoldPtr = std::shared_ptr<const Manifold>;

// Model manifold with closed-form geometry. Public members validate their
// arguments and forward to the per-model implementation.
class Manifold : public std::enable_shared_from_this<Manifold> {
public:
    virtual ~Manifold() = default;

    virtual ModelKind kind() const = 0;
    virtual int dim() const = 0;
    virtual int ambient_dim() const = 0;
    virtual std::string name() const = 0;
    virtual nlohmann::json to_json() const = 0;
    // Sectional curvature when it is the same for every plane and point.
    virtual std::optional<double> constant_curvature() const = 0;
    // Lower and upper bounds on sectional curvature.
    virtual double min_curvature() const = 0;
    virtual double max_curvature() const = 0;

    double metric(const Point& x, const TangentVector& v, const TangentVector& w) const;
    double norm(const TangentVector& v) const;
    Point exp(const Point& x, const TangentVector& v) const;
    TangentVector log(const Point& x, const Point& y) const;
    double distance(const Point& x, const Point& y) const;
    TangentVector parallel_transport(const Point& x, const Point& y, const TangentVector& v) const;
    SymBilinear parallel_transport(const Point& x, const Point& y, const SymBilinear& a) const;
    TangentVector curvature_operator(const Point& x, const TangentVector& u, const TangentVector& v,
                                     const TangentVector& w) const;
    double sectional_curvature(const Point& x, const TangentVector& u, const TangentVector& v) const;
    double injectivity_radius(const Point& x) const { return inj_radius(x.coords); }
    // Inf of the injectivity radius over the manifold.
    virtual double global_injectivity_radius() const = 0;

    // ambient_dim x dim matrix whose columns are an orthonormal basis of T_x,
    // obtained by Gram-Schmidt seeded from the coordinate axes.
    Mat frame(const Point& x) const { return frame_at(x.coords); }
    // Coordinates of v in frame(v.base).
    Vec to_frame(const TangentVector& v) const;
    TangentVector from_frame(const Point& x, const Vec& coeffs) const;
    // Matrix T with to_frame(L_xy F_x c) = T c.
    Mat transport_matrix(const Point& x, const Point& y) const;

    // Normalises raw coordinates onto the model (sphere radius, torus wrap).
    virtual Point make_point(const Vec& coords) const = 0;
    // Orthogonal projection of an ambient vector onto T_x.
    TangentVector make_tangent(const Point& x, const Vec& ambient) const;
    bool same_point(const Point& a, const Point& b) const;

    Point random_point(Rng& rng) const { return random_point_impl(rng); }
    TangentVector random_tangent(const Point& x, Rng& rng, double scale = 1.0) const;

    // Raw kernels on ambient vectors; no validation.
    virtual double inner(const Vec& x, const Vec& v, const Vec& w) const = 0;
    virtual Vec exp_at(const Vec& x, const Vec& v) const = 0;
    virtual Vec log_at(const Vec& x, const Vec& y) const = 0;
    virtual double dist(const Vec& x, const Vec& y) const = 0;
    virtual Vec transport_at(const Vec& x, const Vec& y, const Vec& v) const = 0;
    virtual Vec curvature_at(const Vec& x, const Vec& u, const Vec& v, const Vec& w) const = 0;
    virtual double inj_radius(const Vec& x) const = 0;
    virtual Mat frame_at(const Vec& x) const = 0;
    virtual Vec project_at(const Vec& x, const Vec& ambient) const = 0;

protected:
    virtual Point random_point_impl(Rng& rng) const = 0;
    void require_base(const Point& x, const TangentVector& v, const char* what) const;
};

class Euclidean final : public Manifold {
public:
    explicit Euclidean(int n);
    ModelKind kind() const override { return ModelKind::Euclidean; }
    int dim() const override { return n_; }
    int ambient_dim() const override { return n_; }
    std::string name() const override;
    nlohmann::json to_json() const override;
    std::optional<double> constant_curvature() const override { return 0.0; }
    double min_curvature() const override { return 0.0; }
    double max_curvature() const override { return 0.0; }
    double global_injectivity_radius() const override { return kInfiniteRadius; }
    Point make_point(const Vec& coords) const override;

    double inner(const Vec&, const Vec& v, const Vec& w) const override { return v.dot(w); }
    Vec exp_at(const Vec& x, const Vec& v) const override { return x + v; }
    Vec log_at(const Vec& x, const Vec& y) const override { return y - x; }
    double dist(const Vec& x, const Vec& y) const override { return (y - x).norm(); }
    Vec transport_at(const Vec&, const Vec&, const Vec& v) const override { return v; }
    Vec curvature_at(const Vec&, const Vec& u, const Vec&, const Vec&) const override {
        return Vec::Zero(u.size());
    }
    double inj_radius(const Vec&) const override { return kInfiniteRadius; }
    Mat frame_at(const Vec&) const override { return Mat::Identity(n_, n_); }
    Vec project_at(const Vec&, const Vec& a) const override { return a; }

protected:
    Point random_point_impl(Rng& rng) const override;

private:
    int n_;
};

// Round sphere of the given radius embedded in R^{n+1}; K = 1/radius^2.
class Sphere final : public Manifold {
public:
    Sphere(int n, double radius = 1.0);
    ModelKind kind() const override { return ModelKind::Sphere; }
    int dim() const override { return n_; }
    int ambient_dim() const override { return n_ + 1; }
    std::string name() const override;
    nlohmann::json to_json() const override;
    std::optional<double> constant_curvature() const override { return 1.0 / (r_ * r_); }
    double min_curvature() const override { return 1.0 / (r_ * r_); }
    double max_curvature() const override { return 1.0 / (r_ * r_); }
    double global_injectivity_radius() const override { return M_PI * r_; }
    double radius() const { return r_; }
    Point make_point(const Vec& coords) const override;
    // radius * e_n (last ambient axis).
    Point north_pole() const;

    double inner(const Vec&, const Vec& v, const Vec& w) const override { return v.dot(w); }
    Vec exp_at(const Vec& x, const Vec& v) const override;
    Vec log_at(const Vec& x, const Vec& y) const override;
    double dist(const Vec& x, const Vec& y) const override;
    Vec transport_at(const Vec& x, const Vec& y, const Vec& v) const override;
    Vec curvature_at(const Vec& x, const Vec& u, const Vec& v, const Vec& w) const override;
    double inj_radius(const Vec&) const override { return M_PI * r_; }
    Mat frame_at(const Vec& x) const override;
    Vec project_at(const Vec& x, const Vec& a) const override;

protected:
    Point random_point_impl(Rng& rng) const override;

private:
    int n_;
    double r_;
};

// Hyperboloid model {<x,x>_L = -1/K0, x_0 > 0} in Minkowski space R^{1,n};
// K = -K0. Coordinate 0 is the timelike one.
class Hyperbolic final : public Manifold {
public:
    Hyperbolic(int n, double k0 = 1.0);
    ModelKind kind() const override { return ModelKind::Hyperbolic; }
    int dim() const override { return n_; }
    int ambient_dim() const override { return n_ + 1; }
    std::string name() const override;
    nlohmann::json to_json() const override;
    std::optional<double> constant_curvature() const override { return -k0_; }
    double min_curvature() const override { return -k0_; }
    double max_curvature() const override { return -k0_; }
    double global_injectivity_radius() const override { return kInfiniteRadius; }
    double k0() const { return k0_; }
    Point make_point(const Vec& coords) const override;
    // Lift of chart coordinates y in R^n to the hyperboloid.
    Point from_chart(const Vec& y) const;
    Point origin() const;
    // Sampling stays inside this geodesic ball about the origin.
    static constexpr double kSampleRadius = 2.0;

    double inner(const Vec&, const Vec& v, const Vec& w) const override { return minkowski(v, w); }
    Vec exp_at(const Vec& x, const Vec& v) const override;
    Vec log_at(const Vec& x, const Vec& y) const override;
    double dist(const Vec& x, const Vec& y) const override;
    Vec transport_at(const Vec& x, const Vec& y, const Vec& v) const override;
    Vec curvature_at(const Vec& x, const Vec& u, const Vec& v, const Vec& w) const override;
    double inj_radius(const Vec&) const override { return kInfiniteRadius; }
    Mat frame_at(const Vec& x) const override;
    Vec project_at(const Vec& x, const Vec& a) const override;

    static double minkowski(const Vec& a, const Vec& b) {
        return -a[0] * b[0] + a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
    }

protected:
    Point random_point_impl(Rng& rng) const override;

private:
    int n_;
    double k0_;
    double rho_;  // 1/sqrt(K0)
};

// R^n / (periods), coordinates kept in [0, p_i).
class FlatTorus final : public Manifold {
public:
    explicit FlatTorus(Vec periods);
    ModelKind kind() const override { return ModelKind::FlatTorus; }
    int dim() const override { return static_cast<int>(p_.size()); }
    int ambient_dim() const override { return static_cast<int>(p_.size()); }
    std::string name() const override;
    nlohmann::json to_json() const override;
    std::optional<double> constant_curvature() const override { return 0.0; }
    double min_curvature() const override { return 0.0; }
    double max_curvature() const override { return 0.0; }
    double global_injectivity_radius() const override { return 0.5 * p_.minCoeff(); }
    const Vec& periods() const { return p_; }
    Point make_point(const Vec& coords) const override;

    double inner(const Vec&, const Vec& v, const Vec& w) const override { return v.dot(w); }
    Vec exp_at(const Vec& x, const Vec& v) const override;
    Vec log_at(const Vec& x, const Vec& y) const override;
    double dist(const Vec& x, const Vec& y) const override;
    Vec transport_at(const Vec&, const Vec&, const Vec& v) const override { return v; }
    Vec curvature_at(const Vec&, const Vec& u, const Vec&, const Vec&) const override {
        return Vec::Zero(u.size());
    }
    double inj_radius(const Vec&) const override { return 0.5 * p_.minCoeff(); }
    Mat frame_at(const Vec&) const override { return Mat::Identity(p_.size(), p_.size()); }
    Vec project_at(const Vec&, const Vec& a) const override { return a; }

    Vec wrap(const Vec& x) const;
    Vec wrapped_difference(const Vec& x, const Vec& y) const;

protected:
    Point random_point_impl(Rng& rng) const override;

private:
    Vec p_;
};

// Riemannian product; everything acts factor by factor on concatenated
// ambient coordinates.
class Product final : public Manifold {
public:
    explicit Product(std::vector<ManifoldPtr> factors);
    ModelKind kind() const override { return ModelKind::Product; }
    int dim() const override { return dim_; }
    int ambient_dim() const override { return ambient_; }
    std::string name() const override;
    nlohmann::json to_json() const override;
    std::optional<double> constant_curvature() const override;
    double min_curvature() const override;
    double max_curvature() const override;
    double global_injectivity_radius() const override;
    const std::vector<ManifoldPtr>& factors() const { return factors_; }
    Point make_point(const Vec& coords) const override;

    double inner(const Vec& x, const Vec& v, const Vec& w) const override;
    Vec exp_at(const Vec& x, const Vec& v) const override;
    Vec log_at(const Vec& x, const Vec& y) const override;
    double dist(const Vec& x, const Vec& y) const override;
    Vec transport_at(const Vec& x, const Vec& y, const Vec& v) const override;
    Vec curvature_at(const Vec& x, const Vec& u, const Vec& v, const Vec& w) const override;
    double inj_radius(const Vec& x) const override;
    Mat frame_at(const Vec& x) const override;
    Vec project_at(const Vec& x, const Vec& a) const override;

    Vec block(const Vec& v, std::size_t k) const { return v.segment(offsets_[k], factors_[k]->ambient_dim()); }

protected:
    Point random_point_impl(Rng& rng) const override;

private:
    std::vector<ManifoldPtr> factors_;
    std::vector<Eigen::Index> offsets_;
    std::vector<Eigen::Index> frame_offsets_;
    int dim_ = 0;
    int ambient_ = 0;
};

// {"model": "sphere", "dim": 2, "radius": 1.0}
// {"model": "euclidean", "dim": 3}
// {"model": "hyperbolic", "dim": 2, "curvature": -1.0}   (or "K0": 1.0)
// {"model": "torus", "dim": 2, "periods": 1.0}           (scalar or list)
// {"model": "product", "factors": [ {...}, {...} ]}
ManifoldPtr manifold_from_json(const nlohmann::json& j);

ManifoldPtr make_euclidean(int n);
ManifoldPtr make_sphere(int n, double radius = 1.0);
ManifoldPtr make_hyperbolic(int n, double k0 = 1.0);
ManifoldPtr make_torus(const Vec& periods);
ManifoldPtr make_product(std::vector<ManifoldPtr> factors);

// Unit-speed minimizing geodesic from start to end together with a parallel
// orthonormal frame E_1..E_n, E_1 = gamma'.
class GeodesicSegment {
public:
    GeodesicSegment(ManifoldPtr m, const Point& x, const Point& y);

    const Manifold& manifold() const { return *m_; }
    const ManifoldPtr& manifold_ptr() const { return m_; }
    const Point& start() const { return x_; }
    const Point& end() const { return y_; }
    double length() const { return length_; }

    Point point_at(double t) const;
    TangentVector velocity_at(double t) const;
    // ambient_dim x dim, columns E_i(t).
    Mat frame_at(double t) const;
    const Mat& start_frame() const { return frame0_; }

    // Frame coefficients of a vector based at gamma(t).
    Vec coords_at(double t, const TangentVector& v) const;
    TangentVector vector_at(double t, const Vec& coeffs) const;

private:
    ManifoldPtr m_;
    Point x_, y_;
    double length_;
    Vec direction_;  // unit gamma'(0), ambient
    Mat frame0_;
};

GeodesicSegment geodesic_segment(const ManifoldPtr& m, const Point& x, const Point& y);

}  // namespace rvisc
