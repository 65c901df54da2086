"""Geometry kernels, second-order jets and a monotone viscosity solver on model manifolds."""

from ._core import (
    ArgumentError,
    DivergenceError,
    DomainError,
    Grid,
    Manifold,
    Operator,
    SingularBvpError,
    check_curvature_bound,
    check_sign_condition,
    doubling_diagnostic,
    ellipticity_check,
    geodesic_ball_mask,
    geometry_suite,
    hessian_distance_sq,
    monotonicity_estimate,
    operator_catalog,
    parallel_pair_samples,
    perron,
    set_thread_count,
    solve,
    solve_dirichlet,
    thread_count,
    verify_viscosity_residual,
    yamabe_solve,
)


def sphere(dim=2, radius=1.0):
    return Manifold.from_json({"model": "sphere", "dim": dim, "radius": radius})


def hyperbolic(dim=2, curvature=-1.0):
    return Manifold.from_json({"model": "hyperbolic", "dim": dim, "curvature": curvature})


def euclidean(dim=2):
    return Manifold.from_json({"model": "euclidean", "dim": dim})


def torus(dim=2, periods=1.0):
    return Manifold.from_json({"model": "torus", "dim": dim, "periods": periods})


__all__ = [name for name in dir() if not name.startswith("_")]
