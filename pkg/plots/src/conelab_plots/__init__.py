from .render import (
    KINDS,
    PlotJob,
    SchemaMismatch,
    render,
    render_convergence,
    render_kappa_profile,
    render_radial_density,
)

__all__ = [
    "KINDS",
    "PlotJob",
    "SchemaMismatch",
    "render",
    "render_convergence",
    "render_kappa_profile",
    "render_radial_density",
]
