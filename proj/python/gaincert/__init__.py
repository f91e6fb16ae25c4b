"""Certified upper bounds on the small-signal L2-gain of input-affine systems.

Thin python layer over the C++ core: mesh builders, the two gain analyses
(CPA and quadratic+CPA storage), refinement sweeps, and certificate checks.
"""

try:
    # Installed wheel: the extension lives inside the package.
    from ._gaincert import (  # noqa: F401
        GaincertError,
        Triangulation,
        bound_gain_cpa,
        bound_gain_hybrid,
        build_annulus,
        build_kuhn_grid,
        build_origin_fan_grid,
        check_certificate_json,
        empirical_ratios,
        refine,
        refinement_sweep,
        systems,
        validate_mesh,
    )
except ImportError:
    # Build tree: the extension sits next to the other binaries.
    from _gaincert import (  # noqa: F401
        GaincertError,
        Triangulation,
        bound_gain_cpa,
        bound_gain_hybrid,
        build_annulus,
        build_kuhn_grid,
        build_origin_fan_grid,
        check_certificate_json,
        empirical_ratios,
        refine,
        refinement_sweep,
        systems,
        validate_mesh,
    )

__all__ = [
    "GaincertError",
    "Triangulation",
    "bound_gain_cpa",
    "bound_gain_hybrid",
    "build_annulus",
    "build_kuhn_grid",
    "build_origin_fan_grid",
    "check_certificate_json",
    "empirical_ratios",
    "refine",
    "refinement_sweep",
    "systems",
    "validate_mesh",
]
