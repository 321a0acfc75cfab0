"""Convex samples, supporting planes, sections and ellipsoids."""

from mongelab.convex.ellipsoid import EllipsoidApprox, john_ellipsoid
from mongelab.convex.samples import (
    AnnulusMassReport,
    ConvexSample,
    SupportingPlane,
    annulus_mass_bound_check,
    cap_bound,
    from_pieces,
    radial_flux,
    random_convex,
    supporting_plane,
)
from mongelab.convex.sections import (
    GrowthFit,
    Section,
    SublevelGrowth,
    growth_exponent_fit,
    section_extract,
    section_height_scan,
    sublevel_growth_check,
    y_grid,
)

__all__ = [
    "AnnulusMassReport", "ConvexSample", "EllipsoidApprox", "GrowthFit", "Section",
    "SublevelGrowth", "SupportingPlane", "annulus_mass_bound_check", "cap_bound", "from_pieces",
    "growth_exponent_fit", "john_ellipsoid", "radial_flux", "random_convex",
    "section_extract", "section_height_scan", "sublevel_growth_check", "supporting_plane",
    "y_grid",
]
