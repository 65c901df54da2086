#include "rvisc/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rvisc {

namespace {

constexpr double kSameBaseTol = 1e-9;

// Gram-Schmidt of the ambient axes (in order) after projection onto T_x,
// under the inner product `ip`. Axes whose residual is short are skipped.
template <class Project, class Inner>
Mat gram_schmidt_axes(int ambient, int n, const std::vector<int>& axes, const Project& project, const Inner& ip) {
    Mat frame(ambient, n);
    int found = 0;
    for (int axis : axes) {
        if (found == n) break;
        Vec e = Vec::Zero(ambient);
        e[axis] = 1.0;
        Vec v = project(e);
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < found; ++k) v -= ip(frame.col(k), v) * frame.col(k);
        const double nv = std::sqrt(std::max(ip(v, v), 0.0));
        if (nv < 0.25) continue;
        frame.col(found++) = v / nv;
    }
    if (found < n) throw std::logic_error("frame construction failed");
    return frame;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifold (validated entry points)

void Manifold::require_base(const Point& x, const TangentVector& v, const char* what) const {
    if (v.components.size() != ambient_dim())
        throw ArgumentError(std::string(what) + ": tangent vector has wrong size");
    if (!same_point(x, v.base))
        throw ArgumentError(std::string(what) + ": tangent vector is not based at the given point");
}

bool Manifold::same_point(const Point& a, const Point& b) const {
    if (a.coords.size() != b.coords.size()) return false;
    const double scale = 1.0 + a.coords.cwiseAbs().maxCoeff();
    return (a.coords - b.coords).cwiseAbs().maxCoeff() <= kSameBaseTol * scale;
}

double Manifold::metric(const Point& x, const TangentVector& v, const TangentVector& w) const {
    require_base(x, v, "metric");
    require_base(x, w, "metric");
    return inner(x.coords, v.components, w.components);
}

double Manifold::norm(const TangentVector& v) const {
    return std::sqrt(std::max(inner(v.base.coords, v.components, v.components), 0.0));
}

Point Manifold::exp(const Point& x, const TangentVector& v) const {
    require_base(x, v, "exp");
    return make_point(exp_at(x.coords, v.components));
}

TangentVector Manifold::log(const Point& x, const Point& y) const {
    return {x, log_at(x.coords, y.coords)};
}

double Manifold::distance(const Point& x, const Point& y) const { return dist(x.coords, y.coords); }

TangentVector Manifold::parallel_transport(const Point& x, const Point& y, const TangentVector& v) const {
    require_base(x, v, "parallel_transport");
    const double d = dist(x.coords, y.coords);
    if (!(d < std::min(inj_radius(x.coords), inj_radius(y.coords))))
        throw DomainError("parallel_transport: points are not within the injectivity radius");
    return {y, transport_at(x.coords, y.coords, v.components)};
}

SymBilinear Manifold::parallel_transport(const Point& x, const Point& y, const SymBilinear& a) const {
    if (!same_point(x, a.base)) throw ArgumentError("parallel_transport: form is not based at x");
    const Mat t = transport_matrix(x, y);
    // <L A v, v>_y = <A L^{-1} v, L^{-1} v>_x and L^{-1} = T^T in orthonormal frames.
    Mat out = t * a.matrix * t.transpose();
    return {y, 0.5 * (out + out.transpose())};
}

TangentVector Manifold::curvature_operator(const Point& x, const TangentVector& u, const TangentVector& v,
                                           const TangentVector& w) const {
    require_base(x, u, "curvature_operator");
    require_base(x, v, "curvature_operator");
    require_base(x, w, "curvature_operator");
    return {x, curvature_at(x.coords, u.components, v.components, w.components)};
}

double Manifold::sectional_curvature(const Point& x, const TangentVector& u, const TangentVector& v) const {
    require_base(x, u, "sectional_curvature");
    require_base(x, v, "sectional_curvature");
    const double uu = inner(x.coords, u.components, u.components);
    const double vv = inner(x.coords, v.components, v.components);
    const double uv = inner(x.coords, u.components, v.components);
    const double area2 = uu * vv - uv * uv;
    if (area2 <= 1e-14 * uu * vv || uu == 0.0 || vv == 0.0)
        throw DomainError("sectional_curvature: vectors are linearly dependent");
    const Vec r = curvature_at(x.coords, u.components, v.components, v.components);
    return inner(x.coords, r, u.components) / area2;
}

Vec Manifold::to_frame(const TangentVector& v) const {
    const Mat f = frame_at(v.base.coords);
    Vec c(f.cols());
    for (Eigen::Index i = 0; i < f.cols(); ++i) c[i] = inner(v.base.coords, f.col(i), v.components);
    return c;
}

TangentVector Manifold::from_frame(const Point& x, const Vec& coeffs) const {
    if (coeffs.size() != dim()) throw ArgumentError("from_frame: coefficient vector has wrong size");
    return {x, frame_at(x.coords) * coeffs};
}

Mat Manifold::transport_matrix(const Point& x, const Point& y) const {
    const double d = dist(x.coords, y.coords);
    if (!(d < std::min(inj_radius(x.coords), inj_radius(y.coords))))
        throw DomainError("transport: points are not within the injectivity radius");
    const Mat fx = frame_at(x.coords);
    const Mat fy = frame_at(y.coords);
    Mat t(dim(), dim());
    for (int j = 0; j < dim(); ++j) {
        const Vec lv = transport_at(x.coords, y.coords, fx.col(j));
        for (int i = 0; i < dim(); ++i) t(i, j) = inner(y.coords, fy.col(i), lv);
    }
    return t;
}

TangentVector Manifold::make_tangent(const Point& x, const Vec& ambient) const {
    if (ambient.size() != ambient_dim()) throw ArgumentError("make_tangent: wrong size");
    return {x, project_at(x.coords, ambient)};
}

TangentVector Manifold::random_tangent(const Point& x, Rng& rng, double scale) const {
    return from_frame(x, scale * rng.normal_vector(dim()));
}

// ---------------------------------------------------------------------------
// Euclidean

Euclidean::Euclidean(int n) : n_(n) {
    if (n < 1) throw ArgumentError("Euclidean: dimension must be >= 1");
}

std::string Euclidean::name() const { return "Euclidean(" + std::to_string(n_) + ")"; }

nlohmann::json Euclidean::to_json() const { return {{"model", "euclidean"}, {"dim", n_}}; }

Point Euclidean::make_point(const Vec& c) const {
    if (c.size() != n_) throw ArgumentError("Euclidean: point has wrong size");
    return {c};
}

Point Euclidean::random_point_impl(Rng& rng) const { return {rng.normal_vector(n_)}; }

// ---------------------------------------------------------------------------
// Sphere

Sphere::Sphere(int n, double radius) : n_(n), r_(radius) {
    if (n < 1) throw ArgumentError("Sphere: dimension must be >= 1");
    if (!(radius > 0.0)) throw ArgumentError("Sphere: radius must be > 0");
}

std::string Sphere::name() const {
    std::ostringstream s;
    s << "Sphere(" << n_ << ", " << r_ << ")";
    return s.str();
}

nlohmann::json Sphere::to_json() const { return {{"model", "sphere"}, {"dim", n_}, {"radius", r_}}; }

Point Sphere::make_point(const Vec& c) const {
    if (c.size() != n_ + 1) throw ArgumentError("Sphere: point has wrong size");
    const double nc = c.norm();
    if (nc == 0.0) throw ArgumentError("Sphere: cannot normalise the zero vector");
    return {c * (r_ / nc)};
}

Point Sphere::north_pole() const {
    Vec c = Vec::Zero(n_ + 1);
    c[n_] = r_;
    return {c};
}

Vec Sphere::exp_at(const Vec& x, const Vec& v) const {
    const double nv = v.norm();
    if (nv == 0.0) return x;
    const double a = nv / r_;
    Vec y = std::cos(a) * x + (r_ * std::sin(a) / nv) * v;
    return y * (r_ / y.norm());
}

Vec Sphere::log_at(const Vec& x, const Vec& y) const {
    const double c = x.dot(y) / r_;             // r cos(theta)
    Vec u = y - (x.dot(y) / (r_ * r_)) * x;     // r sin(theta) * unit
    const double nu = u.norm();
    if (nu <= 1e-14 * r_) {
        if (c < 0.0) throw DomainError("Sphere::log: antipodal points (cut locus)");
        return Vec::Zero(x.size());
    }
    const double theta = std::atan2(nu, c);
    return (r_ * theta / nu) * u;
}

double Sphere::dist(const Vec& x, const Vec& y) const {
    const double c = x.dot(y) / r_;
    const double s = (y - (x.dot(y) / (r_ * r_)) * x).norm();
    return r_ * std::atan2(s, c);
}

Vec Sphere::transport_at(const Vec& x, const Vec& y, const Vec& v) const {
    const double denom = r_ * r_ + x.dot(y);
    if (denom <= 1e-14 * r_ * r_) throw DomainError("Sphere::transport: antipodal points (cut locus)");
    return v - (y.dot(v) / denom) * (x + y);
}

Vec Sphere::curvature_at(const Vec&, const Vec& u, const Vec& v, const Vec& w) const {
    const double k = 1.0 / (r_ * r_);
    return k * (v.dot(w) * u - u.dot(w) * v);
}

Mat Sphere::frame_at(const Vec& x) const {
    const Vec xh = x / x.norm();
    auto project = [&](const Vec& a) -> Vec { return a - xh.dot(a) * xh; };
    auto ip = [](const auto& a, const auto& b) { return a.dot(b); };
    std::vector<int> axes(n_ + 1);
    for (int i = 0; i <= n_; ++i) axes[i] = i;
    return gram_schmidt_axes(n_ + 1, n_, axes, project, ip);
}

Vec Sphere::project_at(const Vec& x, const Vec& a) const { return a - (x.dot(a) / x.squaredNorm()) * x; }

Point Sphere::random_point_impl(Rng& rng) const { return make_point(rng.unit_vector(n_ + 1)); }

// ---------------------------------------------------------------------------
// Hyperbolic

Hyperbolic::Hyperbolic(int n, double k0) : n_(n), k0_(k0), rho_(0.0) {
    if (n < 1) throw ArgumentError("Hyperbolic: dimension must be >= 1");
    if (!(k0 > 0.0)) throw ArgumentError("Hyperbolic: curvature parameter K0 must be > 0");
    rho_ = 1.0 / std::sqrt(k0);
}

std::string Hyperbolic::name() const {
    std::ostringstream s;
    s << "Hyperbolic(" << n_ << ", " << -k0_ << ")";
    return s.str();
}

nlohmann::json Hyperbolic::to_json() const {
    return {{"model", "hyperbolic"}, {"dim", n_}, {"curvature", -k0_}};
}

Point Hyperbolic::make_point(const Vec& c) const {
    if (c.size() != n_ + 1) throw ArgumentError("Hyperbolic: point has wrong size");
    return from_chart(c.tail(n_));
}

Point Hyperbolic::from_chart(const Vec& y) const {
    Vec c(n_ + 1);
    c[0] = std::sqrt(rho_ * rho_ + y.squaredNorm());
    c.tail(n_) = y;
    return {c};
}

Point Hyperbolic::origin() const { return from_chart(Vec::Zero(n_)); }

Vec Hyperbolic::exp_at(const Vec& x, const Vec& v) const {
    const double nv = std::sqrt(std::max(minkowski(v, v), 0.0));
    if (nv == 0.0) return x;
    const double a = nv / rho_;
    Vec y = std::cosh(a) * x + (rho_ * std::sinh(a) / nv) * v;
    return from_chart(y.tail(n_)).coords;
}

Vec Hyperbolic::log_at(const Vec& x, const Vec& y) const {
    const double xy = minkowski(x, y);
    Vec u = y + (xy / (rho_ * rho_)) * x;
    const double nu = std::sqrt(std::max(minkowski(u, u), 0.0));
    if (nu == 0.0) return Vec::Zero(x.size());
    const double d = rho_ * std::asinh(nu / rho_);
    return (d / nu) * u;
}

double Hyperbolic::dist(const Vec& x, const Vec& y) const {
    const double xy = minkowski(x, y);
    Vec u = y + (xy / (rho_ * rho_)) * x;
    const double nu = std::sqrt(std::max(minkowski(u, u), 0.0));
    return rho_ * std::asinh(nu / rho_);
}

Vec Hyperbolic::transport_at(const Vec& x, const Vec& y, const Vec& v) const {
    const double denom = rho_ * rho_ - minkowski(x, y);
    return v + (minkowski(y, v) / denom) * (x + y);
}

Vec Hyperbolic::curvature_at(const Vec&, const Vec& u, const Vec& v, const Vec& w) const {
    return -k0_ * (minkowski(v, w) * u - minkowski(u, w) * v);
}

Mat Hyperbolic::frame_at(const Vec& x) const {
    auto project = [&](const Vec& a) -> Vec { return project_at(x, a); };
    auto ip = [](const auto& a, const auto& b) { return minkowski(a, b); };
    // Spatial axes first, then the timelike one.
    std::vector<int> axes(n_ + 1);
    for (int i = 0; i < n_; ++i) axes[i] = i + 1;
    axes[n_] = 0;
    return gram_schmidt_axes(n_ + 1, n_, axes, project, ip);
}

Vec Hyperbolic::project_at(const Vec& x, const Vec& a) const {
    return a + (minkowski(x, a) / (rho_ * rho_)) * x;
}

Point Hyperbolic::random_point_impl(Rng& rng) const {
    const Point o = origin();
    // Uniform direction, radius uniform in [0, kSampleRadius].
    Vec dir = Vec::Zero(n_ + 1);
    dir.tail(n_) = rng.unit_vector(n_);
    const double r = kSampleRadius * rng.uniform();
    return {exp_at(o.coords, r * dir)};
}

// ---------------------------------------------------------------------------
// FlatTorus

FlatTorus::FlatTorus(Vec periods) : p_(std::move(periods)) {
    if (p_.size() < 1) throw ArgumentError("FlatTorus: dimension must be >= 1");
    if ((p_.array() <= 0.0).any()) throw ArgumentError("FlatTorus: periods must be > 0");
}

std::string FlatTorus::name() const {
    std::ostringstream s;
    s << "FlatTorus(" << p_.size() << ", [";
    for (Eigen::Index i = 0; i < p_.size(); ++i) s << (i ? ", " : "") << p_[i];
    s << "])";
    return s.str();
}

nlohmann::json FlatTorus::to_json() const {
    return {{"model", "torus"}, {"dim", p_.size()}, {"periods", std::vector<double>(p_.data(), p_.data() + p_.size())}};
}

Vec FlatTorus::wrap(const Vec& x) const {
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = std::fmod(x[i], p_[i]);
        if (v < 0.0) v += p_[i];
        if (v >= p_[i]) v -= p_[i];
        out[i] = v;
    }
    return out;
}

Vec FlatTorus::wrapped_difference(const Vec& x, const Vec& y) const {
    Vec d = y - x;
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] -= p_[i] * std::round(d[i] / p_[i]);
    return d;
}

Point FlatTorus::make_point(const Vec& c) const {
    if (c.size() != p_.size()) throw ArgumentError("FlatTorus: point has wrong size");
    return {wrap(c)};
}

Vec FlatTorus::exp_at(const Vec& x, const Vec& v) const { return wrap(x + v); }

Vec FlatTorus::log_at(const Vec& x, const Vec& y) const {
    Vec d = wrapped_difference(x, y);
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (std::abs(std::abs(d[i]) - 0.5 * p_[i]) <= 1e-14 * p_[i])
            throw DomainError("FlatTorus::log: points on the cut locus");
    return d;
}

double FlatTorus::dist(const Vec& x, const Vec& y) const { return wrapped_difference(x, y).norm(); }

Point FlatTorus::random_point_impl(Rng& rng) const {
    Vec c(p_.size());
    for (Eigen::Index i = 0; i < p_.size(); ++i) c[i] = rng.uniform(0.0, p_[i]);
    return {c};
}

// ---------------------------------------------------------------------------
// Product

Product::Product(std::vector<ManifoldPtr> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw ArgumentError("Product: needs at least one factor");
    for (const auto& f : factors_) {
        if (!f) throw ArgumentError("Product: null factor");
        offsets_.push_back(ambient_);
        frame_offsets_.push_back(dim_);
        ambient_ += f->ambient_dim();
        dim_ += f->dim();
    }
}

std::string Product::name() const {
    std::string s = "Product(";
    for (std::size_t k = 0; k < factors_.size(); ++k) s += (k ? " x " : "") + factors_[k]->name();
    return s + ")";
}

nlohmann::json Product::to_json() const {
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& f : factors_) fs.push_back(f->to_json());
    return {{"model", "product"}, {"factors", fs}};
}

std::optional<double> Product::constant_curvature() const {
    // Mixed planes have zero curvature, so the product is of constant
    // curvature only when it is flat.
    if (min_curvature() == 0.0 && max_curvature() == 0.0) return 0.0;
    return std::nullopt;
}

// Planes spanning two factors are flat; one-dimensional factors carry no planes.
double Product::min_curvature() const {
    if (factors_.size() == 1) return factors_[0]->min_curvature();
    double k = 0.0;
    for (const auto& f : factors_)
        if (f->dim() >= 2) k = std::min(k, f->min_curvature());
    return k;
}

double Product::max_curvature() const {
    if (factors_.size() == 1) return factors_[0]->max_curvature();
    double k = 0.0;
    for (const auto& f : factors_)
        if (f->dim() >= 2) k = std::max(k, f->max_curvature());
    return k;
}

double Product::global_injectivity_radius() const {
    double r = kInfiniteRadius;
    for (const auto& f : factors_) r = std::min(r, f->global_injectivity_radius());
    return r;
}

Point Product::make_point(const Vec& c) const {
    if (c.size() != ambient_) throw ArgumentError("Product: point has wrong size");
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) = factors_[k]->make_point(block(c, k)).coords;
    return {out};
}

double Product::inner(const Vec& x, const Vec& v, const Vec& w) const {
    double s = 0.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) s += factors_[k]->inner(block(x, k), block(v, k), block(w, k));
    return s;
}

Vec Product::exp_at(const Vec& x, const Vec& v) const {
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) = factors_[k]->exp_at(block(x, k), block(v, k));
    return out;
}

Vec Product::log_at(const Vec& x, const Vec& y) const {
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) = factors_[k]->log_at(block(x, k), block(y, k));
    return out;
}

double Product::dist(const Vec& x, const Vec& y) const {
    double s = 0.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        const double d = factors_[k]->dist(block(x, k), block(y, k));
        s += d * d;
    }
    return std::sqrt(s);
}

Vec Product::transport_at(const Vec& x, const Vec& y, const Vec& v) const {
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) =
            factors_[k]->transport_at(block(x, k), block(y, k), block(v, k));
    return out;
}

Vec Product::curvature_at(const Vec& x, const Vec& u, const Vec& v, const Vec& w) const {
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) =
            factors_[k]->curvature_at(block(x, k), block(u, k), block(v, k), block(w, k));
    return out;
}

double Product::inj_radius(const Vec& x) const {
    double r = kInfiniteRadius;
    for (std::size_t k = 0; k < factors_.size(); ++k) r = std::min(r, factors_[k]->inj_radius(block(x, k)));
    return r;
}

Mat Product::frame_at(const Vec& x) const {
    Mat f = Mat::Zero(ambient_, dim_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        f.block(offsets_[k], frame_offsets_[k], factors_[k]->ambient_dim(), factors_[k]->dim()) =
            factors_[k]->frame_at(block(x, k));
    return f;
}

Vec Product::project_at(const Vec& x, const Vec& a) const {
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) = factors_[k]->project_at(block(x, k), block(a, k));
    return out;
}

Point Product::random_point_impl(Rng& rng) const {
    Vec out(ambient_);
    for (std::size_t k = 0; k < factors_.size(); ++k)
        out.segment(offsets_[k], factors_[k]->ambient_dim()) = factors_[k]->random_point(rng).coords;
    return {out};
}

// ---------------------------------------------------------------------------
// Construction

ManifoldPtr make_euclidean(int n) { return std::make_shared<Euclidean>(n); }
ManifoldPtr make_sphere(int n, double radius) { return std::make_shared<Sphere>(n, radius); }
ManifoldPtr make_hyperbolic(int n, double k0) { return std::make_shared<Hyperbolic>(n, k0); }
ManifoldPtr make_torus(const Vec& periods) { return std::make_shared<FlatTorus>(periods); }
ManifoldPtr make_product(std::vector<ManifoldPtr> factors) { return std::make_shared<Product>(std::move(factors)); }

ManifoldPtr manifold_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string())
        throw ArgumentError("model description must be an object with a string \"model\" field");
    const std::string model = j["model"].get<std::string>();
    auto get_dim = [&]() {
        if (!j.contains("dim") || !j["dim"].is_number_integer()) throw ArgumentError(model + ": integer \"dim\" required");
        return j["dim"].get<int>();
    };
    if (model == "euclidean") return make_euclidean(get_dim());
    if (model == "sphere") return make_sphere(get_dim(), j.value("radius", 1.0));
    if (model == "hyperbolic") {
        double k0 = 1.0;
        if (j.contains("curvature")) k0 = -j["curvature"].get<double>();
        if (j.contains("K0")) k0 = j["K0"].get<double>();
        return make_hyperbolic(get_dim(), k0);
    }
    if (model == "torus" || model == "flat_torus") {
        const int n = get_dim();
        Vec p(n);
        const auto& pj = j.contains("periods") ? j["periods"] : nlohmann::json(1.0);
        if (pj.is_number()) {
            p.setConstant(pj.get<double>());
        } else if (pj.is_array() && static_cast<int>(pj.size()) == n) {
            for (int i = 0; i < n; ++i) p[i] = pj[i].get<double>();
        } else {
            throw ArgumentError("torus: \"periods\" must be a number or a list of length dim");
        }
        return make_torus(p);
    }
    if (model == "product") {
        if (!j.contains("factors") || !j["factors"].is_array()) throw ArgumentError("product: \"factors\" list required");
        std::vector<ManifoldPtr> fs;
        for (const auto& f : j["factors"]) fs.push_back(manifold_from_json(f));
        return make_product(std::move(fs));
    }
    throw ArgumentError("unknown model \"" + model + "\"");
}

// ---------------------------------------------------------------------------
// GeodesicSegment

GeodesicSegment::GeodesicSegment(ManifoldPtr m, const Point& x, const Point& y)
    : m_(std::move(m)), x_(x), y_(y), length_(0.0) {
    const Manifold& mf = *m_;
    if (mf.same_point(x, y) || mf.dist(x.coords, y.coords) == 0.0)
        throw DomainError("geodesic_segment: coincident endpoints");
    length_ = mf.dist(x.coords, y.coords);
    if (!(length_ < std::min(mf.inj_radius(x.coords), mf.inj_radius(y.coords))))
        throw DomainError("geodesic_segment: endpoints beyond the injectivity radius");
    const Vec lg = mf.log_at(x.coords, y.coords);
    direction_ = lg / length_;

    // E_1 = gamma'(0), then Gram-Schmidt over the point frame.
    const Mat f = mf.frame_at(x.coords);
    const int n = mf.dim();
    frame0_.resize(mf.ambient_dim(), n);
    frame0_.col(0) = direction_;
    int found = 1;
    for (int k = 0; k < n && found < n; ++k) {
        Vec v = f.col(k);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < found; ++i) v -= mf.inner(x.coords, frame0_.col(i), v) * frame0_.col(i);
        const double nv = std::sqrt(std::max(mf.inner(x.coords, v, v), 0.0));
        if (nv < 0.25) continue;
        frame0_.col(found++) = v / nv;
    }
    if (found < n) throw std::logic_error("geodesic_segment: frame construction failed");
}

Point GeodesicSegment::point_at(double t) const {
    return {m_->exp_at(x_.coords, t * direction_)};
}

TangentVector GeodesicSegment::velocity_at(double t) const {
    if (t == 0.0) return {x_, direction_};
    const Point p = point_at(t);
    return {p, m_->transport_at(x_.coords, p.coords, direction_)};
}

Mat GeodesicSegment::frame_at(double t) const {
    if (t == 0.0) return frame0_;
    const Point p = point_at(t);
    Mat f(frame0_.rows(), frame0_.cols());
    for (Eigen::Index i = 0; i < frame0_.cols(); ++i) f.col(i) = m_->transport_at(x_.coords, p.coords, frame0_.col(i));
    return f;
}

Vec GeodesicSegment::coords_at(double t, const TangentVector& v) const {
    const Mat f = frame_at(t);
    Vec c(f.cols());
    for (Eigen::Index i = 0; i < f.cols(); ++i) c[i] = m_->inner(v.base.coords, f.col(i), v.components);
    return c;
}

TangentVector GeodesicSegment::vector_at(double t, const Vec& coeffs) const {
    return {point_at(t), frame_at(t) * coeffs};
}

GeodesicSegment geodesic_segment(const ManifoldPtr& m, const Point& x, const Point& y) {
    return GeodesicSegment(m, x, y);
}

}  // namespace rvisc
