"""Computational lab for expanding toral endomorphisms and self-affine carpet measures."""

__version__ = "0.1.0"

from .system import (
    BudgetError,
    ConfigError,
    ExpandingToralSystem,
    SymbolicPoint,
    Word,
    doubling_map,
    embed,
    full_grid,
    induced_orbit,
    load_system,
    make_system,
    point_from_digits,
    point_from_symbols,
    s3_carpet,
    sample_point,
    shift,
)
from .measure import (
    CellBox,
    MeasureInterval,
    RestrictedMeasure,
    approx_square_measure,
    ball_measure,
    cylinder_measure,
    inverse_radius,
    local_dimension,
    measure_dimension,
    projection_measure,
    region_measure,
    restrict,
)
from .radii import RadiusSequence, critical_exponent
