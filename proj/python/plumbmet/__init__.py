"""Hyperbolic fiber metrics of the degenerating plumbing family zw = t."""

from ._plumbmet import (  # noqa: F401
    blowup,
    curvature,
    cusp_density,
    fiber_area,
    grafted_density,
    ilog,
    indicial_roots,
    kmap,
    lambda_min,
    leading_series,
    newton,
    plumbing_density,
    solve_mode,
    st_from,
    sweep,
)

__all__ = [
    "blowup",
    "curvature",
    "cusp_density",
    "fiber_area",
    "grafted_density",
    "ilog",
    "indicial_roots",
    "kmap",
    "lambda_min",
    "leading_series",
    "newton",
    "plumbing_density",
    "solve_mode",
    "st_from",
    "sweep",
]
