"""Principal geodesic analysis on three symmetric geometries.

A numpy library for fitting geodesic subspaces to data on the n-sphere,
the positive-definite cone, and the rotation group; for the second-order
scale/curvature corrections of the fitted directions and projection
coefficients; and for the linear-difference diagnostics that estimate,
before any exact fit, how far tangent-space approximations will be from
the exact solutions.
"""

from .config import DEFAULT_TOLS, Tolerances
from .manifolds import (
    SPD,
    GeodesicSubspace,
    Manifold,
    Point,
    ProjectionResult,
    SpecialOrthogonal,
    Sphere,
    Tangent,
    TangentDataset,
    curvature_op,
    distance,
    exp,
    intrinsic_mean,
    intrinsic_variance,
    log,
    make_manifold,
    metric,
    project,
    project_info,
    sectional_curvature,
    tangent_angle,
)
from .pga import (
    CovarianceOperator,
    ExpansionResult,
    PgaResult,
    covariance,
    exact_pga,
    expansion,
    objective_series,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOLS",
    "Tolerances",
    "Manifold",
    "Sphere",
    "SPD",
    "SpecialOrthogonal",
    "Point",
    "Tangent",
    "GeodesicSubspace",
    "TangentDataset",
    "ProjectionResult",
    "make_manifold",
    "metric",
    "exp",
    "log",
    "distance",
    "intrinsic_mean",
    "intrinsic_variance",
    "project",
    "project_info",
    "curvature_op",
    "sectional_curvature",
    "tangent_angle",
    "CovarianceOperator",
    "PgaResult",
    "ExpansionResult",
    "covariance",
    "exact_pga",
    "expansion",
    "objective_series",
    "__version__",
]
