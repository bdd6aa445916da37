"""Geometries and manifold-generic statistics."""

from .base import (
    GeodesicSubspace,
    Manifold,
    Point,
    ProjectionResult,
    Tangent,
    TangentDataset,
    curvature_op,
    distance,
    exp,
    intrinsic_mean,
    intrinsic_mean_raw,
    intrinsic_variance,
    log,
    metric,
    project,
    project_info,
    sectional_curvature,
    tangent_angle,
)
from .sphere import Sphere
from .spd import SPD
from .rotations import SpecialOrthogonal

KINDS = {
    "sphere": Sphere,
    "spd": SPD,
    "so": SpecialOrthogonal,
}


def make_manifold(kind: str, **params) -> Manifold:
    """Instantiate a geometry from its kind string and parameters."""
    from ..errors import ValidationError

    if kind not in KINDS:
        raise ValidationError(f"unknown manifold kind {kind!r}")
    return KINDS[kind](**params)


__all__ = [
    "Manifold",
    "Point",
    "Tangent",
    "GeodesicSubspace",
    "TangentDataset",
    "ProjectionResult",
    "Sphere",
    "SPD",
    "SpecialOrthogonal",
    "make_manifold",
    "KINDS",
    "metric",
    "exp",
    "log",
    "distance",
    "intrinsic_mean",
    "intrinsic_mean_raw",
    "intrinsic_variance",
    "project",
    "project_info",
    "curvature_op",
    "sectional_curvature",
    "tangent_angle",
]
