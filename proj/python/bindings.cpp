#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rvisc/geometry_checks.hpp"
#include "rvisc/grid.hpp"
#include "rvisc/jacobi.hpp"
#include "rvisc/jets.hpp"
#include "rvisc/operators.hpp"
#include "rvisc/parallel.hpp"
#include "rvisc/solver.hpp"

namespace py = pybind11;
using namespace rvisc;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
    if (py::isinstance<py::str>(o)) return nlohmann::json::parse(o.cast<std::string>());
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::list reports(const std::vector<CheckReport>& rs) {
    py::list out;
    for (const auto& r : rs) out.append(to_py(r.to_json()));
    return out;
}

struct PyManifold {
    ManifoldPtr m;

    Point point(const Vec& x) const { return m->make_point(x); }
    TangentVector tangent(const Vec& x, const Vec& v) const { return {point(x), v}; }
};

struct PyGrid {
    GridPtr g;
};

struct PyOperator {
    OperatorPtr f;
};

GridFunction grid_function(const PyGrid& g, const Vec& values) {
    if (values.size() != g.g->size()) throw ArgumentError("values must have one entry per grid node");
    return {g.g, values};
}

SolveOptions solve_options(double tol, int max_iter, double damping) {
    SolveOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.damping = damping;
    return o;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Riemannian viscosity toolkit";

    py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);
    py::register_exception<ArgumentError>(mod, "ArgumentError", PyExc_ValueError);
    py::register_exception<SingularBvpError>(mod, "SingularBvpError", PyExc_RuntimeError);
    py::register_exception<DivergenceError>(mod, "DivergenceError", PyExc_RuntimeError);

    mod.def("set_thread_count", &set_thread_count);
    mod.def("thread_count", &thread_count);

    py::class_<PyManifold>(mod, "Manifold")
        .def_static(
            "from_json", [](const py::object& o) { return PyManifold{manifold_from_json(from_py(o))}; }, py::arg("spec"))
        .def_property_readonly("name", [](const PyManifold& s) { return s.m->name(); })
        .def_property_readonly("dim", [](const PyManifold& s) { return s.m->dim(); })
        .def_property_readonly("ambient_dim", [](const PyManifold& s) { return s.m->ambient_dim(); })
        .def_property_readonly("constant_curvature", [](const PyManifold& s) { return s.m->constant_curvature(); })
        .def_property_readonly("injectivity_radius", [](const PyManifold& s) { return s.m->global_injectivity_radius(); })
        .def("to_json", [](const PyManifold& s) { return to_py(s.m->to_json()); })
        .def("random_point",
             [](const PyManifold& s, std::uint64_t seed) {
                 Rng rng(seed);
                 return Vec(s.m->random_point(rng).coords);
             },
             py::arg("seed"))
        .def("project", [](const PyManifold& s, const Vec& x, const Vec& v) {
            return Vec(s.m->make_tangent(s.point(x), v).components);
        })
        .def("exp", [](const PyManifold& s, const Vec& x, const Vec& v) {
            return Vec(s.m->exp(s.point(x), s.tangent(x, v)).coords);
        })
        .def("log", [](const PyManifold& s, const Vec& x, const Vec& y) {
            return Vec(s.m->log(s.point(x), s.point(y)).components);
        })
        .def("distance", [](const PyManifold& s, const Vec& x, const Vec& y) {
            return s.m->distance(s.point(x), s.point(y));
        })
        .def("parallel_transport", [](const PyManifold& s, const Vec& x, const Vec& y, const Vec& v) {
            return Vec(s.m->parallel_transport(s.point(x), s.point(y), s.tangent(x, v)).components);
        })
        .def("sectional_curvature", [](const PyManifold& s, const Vec& x, const Vec& u, const Vec& v) {
            return s.m->sectional_curvature(s.point(x), s.tangent(x, u), s.tangent(x, v));
        })
        .def("frame", [](const PyManifold& s, const Vec& x) { return Mat(s.m->frame(s.point(x))); })
        .def("__repr__", [](const PyManifold& s) { return "<Manifold " + s.m->name() + ">"; });

    mod.def(
        "geometry_suite",
        [](const PyManifold& s, long samples, std::uint64_t seed) {
            return reports(geometry_suite(s.m, {samples, seed}));
        },
        py::arg("manifold"), py::arg("samples") = 1000, py::arg("seed") = 1);

    mod.def(
        "hessian_distance_sq",
        [](const PyManifold& s, const Vec& x, const Vec& y) { return Mat(hessian_distance_sq(s.m, s.point(x), s.point(y)).form); },
        py::arg("manifold"), py::arg("x"), py::arg("y"));

    auto sampling = [](long samples, std::uint64_t seed, double min_length, double max_length, bool normal_only) {
        ParallelPairSampling o;
        o.samples = samples;
        o.seed = seed;
        o.min_length = min_length;
        o.max_length = max_length;
        o.normal_only = normal_only;
        return o;
    };
    mod.def(
        "parallel_pair_samples",
        [sampling](const PyManifold& s, long samples, std::uint64_t seed, double min_length, double max_length,
                   bool normal_only) {
            const auto ps = sample_parallel_pairs(s.m, sampling(samples, seed, min_length, max_length, normal_only));
            Vec len(ps.size()), val(ps.size()), vn(ps.size()), vp(ps.size());
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const auto k = static_cast<Eigen::Index>(i);
                len[k] = ps[i].length;
                val[k] = ps[i].value;
                vn[k] = ps[i].v_norm_sq;
                vp[k] = ps[i].v_normal_sq;
            }
            py::dict d;
            d["length"] = len;
            d["value"] = val;
            d["v_norm_sq"] = vn;
            d["v_normal_sq"] = vp;
            return d;
        },
        py::arg("manifold"), py::arg("samples") = 1000, py::arg("seed") = 1, py::arg("min_length") = 0.05,
        py::arg("max_length") = 0.0, py::arg("normal_only") = false);
    mod.def(
        "check_sign_condition",
        [sampling](const PyManifold& s, long samples, std::uint64_t seed, double tol) {
            return to_py(check_sign_condition(s.m, sampling(samples, seed, 0.05, 0.0, false), tol).to_json());
        },
        py::arg("manifold"), py::arg("samples") = 1000, py::arg("seed") = 1, py::arg("tol") = 1e-8);
    mod.def(
        "check_curvature_bound",
        [sampling](const PyManifold& s, double k0, long samples, std::uint64_t seed, double tol) {
            return to_py(check_curvature_bound(s.m, k0, sampling(samples, seed, 0.05, 0.0, false), tol).to_json());
        },
        py::arg("manifold"), py::arg("k0"), py::arg("samples") = 1000, py::arg("seed") = 1, py::arg("tol") = 1e-8);

    py::class_<PyGrid>(mod, "Grid")
        .def(py::init([](const PyManifold& s, int resolution, double step_scale) {
                 return PyGrid{build_grid(s.m, resolution, step_scale)};
             }),
             py::arg("manifold"), py::arg("resolution"), py::arg("step_scale") = 1.0)
        .def_property_readonly("size", [](const PyGrid& g) { return g.g->size(); })
        .def_property_readonly("spacing", [](const PyGrid& g) { return g.g->spacing(); })
        .def_property_readonly("nodes",
                               [](const PyGrid& g) {
                                   Mat out(g.g->size(), g.g->model()->ambient_dim());
                                   for (int i = 0; i < g.g->size(); ++i) out.row(i) = g.g->node(i).coords.transpose();
                                   return out;
                               })
        .def("smooth_random_values", [](const PyGrid& g, std::uint64_t seed) { return smooth_random_values(*g.g, seed); })
        .def("edge_modulus", [](const PyGrid& g, const Vec& f) { return edge_modulus(*g.g, f); })
        .def("__len__", [](const PyGrid& g) { return g.g->size(); });

    py::class_<PyOperator>(mod, "Operator")
        .def_static(
            "from_json", [](const py::object& o) { return PyOperator{operator_from_json(from_py(o))}; }, py::arg("spec"))
        .def_property_readonly("name", [](const PyOperator& f) { return f.f->name(); })
        .def_property_readonly("gamma", [](const PyOperator& f) { return f.f->gamma(); })
        .def_property_readonly("degenerate_elliptic", [](const PyOperator& f) { return f.f->flags().degenerate_elliptic; })
        .def("to_json", [](const PyOperator& f) { return to_py(f.f->to_json()); })
        .def(
            "__call__",
            [](const PyOperator& f, const Vec& x, double r, const Vec& zeta, const Mat& a) {
                return f.f->eval(Point{x}, r, zeta, a);
            },
            py::arg("x"), py::arg("r"), py::arg("zeta"), py::arg("A"))
        .def("apply", [](const PyOperator& f, const PyGrid& g, const Vec& u) {
            return apply_scheme(*f.f, *g.g, grid_function(g, u).values);
        });
    mod.def("operator_catalog", &operator_catalog);

    mod.def(
        "ellipticity_check",
        [](const PyOperator& f, const PyManifold& s, long samples, std::uint64_t seed, bool psd_only) {
            OperatorSampling o;
            o.samples = samples;
            o.seed = seed;
            o.psd_only = psd_only;
            return to_py(ellipticity_check(*f.f, *s.m, o).to_json());
        },
        py::arg("op"), py::arg("manifold"), py::arg("samples") = 10000, py::arg("seed") = 1, py::arg("psd_only") = false);
    mod.def(
        "monotonicity_estimate",
        [](const PyOperator& f, const PyManifold& s, double r_lo, double r_hi, long samples, std::uint64_t seed) {
            return monotonicity_estimate(*f.f, *s.m, r_lo, r_hi, samples, seed);
        },
        py::arg("op"), py::arg("manifold"), py::arg("r_lo") = 0.0, py::arg("r_hi") = 2.0, py::arg("samples") = 10000,
        py::arg("seed") = 1);

    mod.def(
        "solve",
        [](const PyOperator& f, const PyGrid& g, const Vec& u0, double tol, int max_iter, double damping) {
            const SolveResult r = solve_fixed_point(*f.f, grid_function(g, u0), solve_options(tol, max_iter, damping));
            return py::make_tuple(r.u.values, to_py(r.report.to_json()));
        },
        py::arg("op"), py::arg("grid"), py::arg("u0"), py::arg("tol") = 1e-8, py::arg("max_iter") = 200000,
        py::arg("damping") = 0.0);
    mod.def(
        "solve_dirichlet",
        [](const PyOperator& f, const PyGrid& g, const std::vector<bool>& pinned, const Vec& boundary, const Vec& u0,
           double tol, int max_iter) {
            const SolveResult r = solve_dirichlet(*f.f, pinned, grid_function(g, boundary), grid_function(g, u0),
                                                  solve_options(tol, max_iter, 0.0));
            return py::make_tuple(r.u.values, to_py(r.report.to_json()));
        },
        py::arg("op"), py::arg("grid"), py::arg("pinned"), py::arg("boundary"), py::arg("u0"), py::arg("tol") = 1e-8,
        py::arg("max_iter") = 200000);
    mod.def(
        "geodesic_ball_mask",
        [](const PyGrid& g, const Vec& center, double radius) {
            return geodesic_ball_mask(*g.g, g.g->model()->make_point(center), radius);
        },
        py::arg("grid"), py::arg("center"), py::arg("radius"));
    mod.def(
        "perron",
        [](const PyOperator& f, const PyGrid& g, const Vec& usub, const Vec& usuper, double tol) {
            PerronOptions o;
            o.tol = tol;
            const PerronResult r = perron_iterate(*f.f, grid_function(g, usub), grid_function(g, usuper), o);
            return py::make_tuple(r.u.values, to_py(r.report.to_json()));
        },
        py::arg("op"), py::arg("grid"), py::arg("usub"), py::arg("usuper"), py::arg("tol") = 1e-8);
    mod.def(
        "verify_viscosity_residual",
        [](const PyOperator& f, const PyGrid& g, const Vec& u, double tol_factor) {
            return to_py(verify_viscosity_residual(*f.f, grid_function(g, u), tol_factor).to_json());
        },
        py::arg("op"), py::arg("grid"), py::arg("u"), py::arg("tol_factor") = 10.0);
    mod.def(
        "yamabe_solve",
        [](const PyGrid& g, const py::object& s, const Vec& u0, int n, double s_prime, double tol) {
            YamabeOptions o;
            o.n = n;
            o.s_prime = s_prime;
            o.solve.tol = tol;
            const ScalarFieldSpec field =
                py::isinstance<py::str>(s) ? parse_scalar_field(s.cast<std::string>()) : constant_field(s.cast<double>());
            const SolveResult r = yamabe_solve(field, grid_function(g, u0), o);
            return py::make_tuple(r.u.values, to_py(r.report.to_json()));
        },
        py::arg("grid"), py::arg("S"), py::arg("u0"), py::arg("n") = 3, py::arg("S_prime") = -1.0,
        py::arg("tol") = 1e-10);
    mod.def(
        "doubling_diagnostic",
        [](const PyGrid& g, const Vec& u, const Vec& v, const std::vector<double>& alphas) {
            const DoublingTrace t = doubling_diagnostic(grid_function(g, u), grid_function(g, v), alphas);
            py::list out;
            for (const auto& r : t.records) {
                py::dict d;
                d["alpha"] = r.alpha;
                d["m_alpha"] = r.m_alpha;
                d["d"] = r.d;
                d["alpha_d_sq"] = r.alpha_d_sq;
                d["x_idx"] = r.x_idx;
                d["y_idx"] = r.y_idx;
                out.append(d);
            }
            return out;
        },
        py::arg("grid"), py::arg("u"), py::arg("v"), py::arg("alphas"));
}
