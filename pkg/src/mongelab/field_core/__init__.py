"""Scalar fields, domains and second-order jets (real and complex)."""

from mongelab.field_core.domain import Domain, ball_volume, sphere_area
from mongelab.field_core.families import (
    PowerQuadraticField,
    QuadraticField,
    RadialPowerField,
    RescaledField,
    paraboloid,
)
from mongelab.field_core.grid import GridField, parse_grid, read_grid, write_grid
from mongelab.field_core.handle import (
    R_MIN,
    CallableField,
    ComplexJet,
    FieldHandle,
    Jet2,
    SingularSet,
)
from mongelab.field_core.jets import (
    DERIVED_QUANTITIES,
    DeterminantCertificate,
    complex_hessian_from_real,
    complex_jet,
    determinant_check,
    evaluate_jet,
    fd_step,
)

__all__ = [
    "CallableField", "ComplexJet", "DERIVED_QUANTITIES", "DeterminantCertificate", "Domain",
    "FieldHandle", "GridField", "Jet2", "PowerQuadraticField", "QuadraticField", "R_MIN",
    "RadialPowerField", "RescaledField", "SingularSet", "ball_volume", "complex_hessian_from_real",
    "complex_jet", "determinant_check", "evaluate_jet", "fd_step", "paraboloid", "parse_grid",
    "read_grid", "sphere_area", "write_grid",
]
