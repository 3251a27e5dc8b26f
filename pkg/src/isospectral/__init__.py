"""Riemannian geometry of unitary orbits of density operators."""

from .connection import (
    ConnectionEvaluation,
    connection_form,
    field_metric,
    is_parallel_at,
    locked_inertia,
    moment_map,
    observable_field,
    submersion_metric,
    tangent_lift,
    uncertainty,
    xi_A,
)
from .control import (
    DistanceResult,
    GeodesicSolution,
    ShootingConfig,
    arnold_euler_flow,
    coadjoint,
    distance,
    distinguishable_geodesic,
    geodesic_from,
    sphere_chord_bound,
    synth_hamiltonian,
    two_eigenvalue_geodesic,
)
from .core import (
    Spectrum,
    gauge_algebra_basis,
    gauge_metric,
    hs_metric,
    spectrum_of,
    split_gauge,
    standard_purification,
)
from .dynamics import (
    MTReport,
    Trajectory,
    curve_length,
    energy_dispersion,
    evolve_schrodinger,
    evolve_von_neumann,
    horizontal_lift,
    is_distinguishable,
    mt_bound_report,
    neg_time_ordered_exp,
)
from .errors import (
    ConditioningError,
    DomainError,
    GeometryError,
    IntegrationDriftError,
    UnsupportedRankError,
    ValidationError,
)

__version__ = "0.1.0"
