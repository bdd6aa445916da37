"""The rotation group, its bi-invariant geometry, and group-side fitting.

Points are special orthogonal n x n matrices; tangents at p are matrices
with ``p^T v`` skew-symmetric, and the metric is

    <X, Y>_p = -tr(p^{-1} X p^{-1} Y) / 2,

a bi-invariant metric (left and right translations are isometries) under
which geodesics through the identity are matrix exponentials of skew
matrices, injective for angles below pi. All scale-series formulas of
the positive-definite cone carry over verbatim with the flipped trace
sign (see ``_series``); the sectional curvature here is non-negative.

Beyond the geometry this module implements the group-multiplication
variant of principal geodesic fitting (recursive variance removal), the
two-sided removal isometries it is built from, the series coefficients
of the mean displacement that removal causes, and quaternion helpers for
the n = 3 case, including a closed-form projection onto geodesics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..config import DEFAULT_TOLS, Tolerances
from ..errors import (
    OutOfInjectivityRadiusError,
    SchemaError,
    ValidationError,
)
from .. import linalg
from . import _series
from .base import intrinsic_mean_raw, tangent_angle
from .spd import MatrixManifold

__all__ = [
    "SpecialOrthogonal",
    "AltPgaConfig",
    "AltPgaStep",
    "alt_pga",
    "gamma_ab",
    "mean_displacement_series",
    "so_projection_coeff_series",
    "f14_so",
    "alpha1_so",
    "alpha1_so_curvature",
    "alpha2_so",
    "to_quaternion",
    "from_quaternion",
    "quat_geodesic",
    "quat_project_to_geodesic",
    "load_rotations_csv",
    "save_rotations_csv",
]


class SpecialOrthogonal(MatrixManifold):
    """Rotation group SO(n) with the bi-invariant metric."""

    kind = "so"
    trace_sign = -1

    def __init__(self, n: int):
        if n < 2:
            raise ValidationError("matrix dimension must be at least 2")
        self.n = int(n)

    @property
    def dim(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def injectivity_radius(self) -> float:
        return math.pi

    # -- validation -----------------------------------------------------------

    def check_point(self, x, tols: Tolerances = DEFAULT_TOLS) -> None:
        x = np.asarray(x)
        if x.shape != self.point_shape:
            raise ValidationError(f"point must have shape {self.point_shape}")
        err = float(np.linalg.norm(x @ x.T - np.eye(self.n)))
        if err > tols.unit_norm * self.n:
            raise ValidationError(f"point is not orthogonal ({err:.3e})")
        if np.linalg.det(x) < 0.0:
            raise ValidationError("point has determinant -1 (not a rotation)")

    def check_tangent(self, x, v, tols: Tolerances = DEFAULT_TOLS) -> None:
        v = np.asarray(v)
        if v.shape != self.point_shape:
            raise ValidationError(f"tangent must have shape {self.point_shape}")
        w = x.T @ v
        scale = max(float(np.linalg.norm(w)), 1e-300)
        if float(np.linalg.norm(w + w.T)) > tols.sym_rel * max(scale, 1.0) * 10:
            raise ValidationError("tangent is not skew at the base point")

    # -- metric and maps ---------------------------------------------------------

    def inner(self, x, u, v) -> float:
        a = x.T @ u
        b = x.T @ v
        return -0.5 * float(np.tensordot(a, b.T, axes=2))

    def exp(self, x, v) -> np.ndarray:
        w = _skewpart(x.T @ v)
        ang = _skew_norm(w)
        if ang > math.pi * (1 + 1e-12):
            raise OutOfInjectivityRadiusError(
                f"tangent norm {ang:.6f} exceeds pi"
            )
        return x @ linalg.mat_exp(w)

    def log(self, x, y) -> np.ndarray:
        return x @ linalg.mat_log_rot(x.T @ y)

    def dist(self, x, y) -> float:
        return _skew_norm(linalg.mat_log_rot(x.T @ y))

    def exp_differential(self, x, v, e) -> np.ndarray:
        w = _skewpart(x.T @ v)
        f = x.T @ e
        return x @ linalg.dexp(w, f)

    def tangent_project(self, x, w) -> np.ndarray:
        return x @ _skewpart(x.T @ np.asarray(w, dtype=float))

    def tangent_to_identity(self, x, v) -> np.ndarray:
        return _skewpart(x.T @ v)

    def tangent_basis(self, x) -> np.ndarray:
        basis = _skew_basis(self.n)
        if np.array_equal(x, np.eye(self.n)):
            return basis
        return np.stack([x @ b for b in basis])

    def tangent_coords(self, x, v) -> np.ndarray:
        w = self.tangent_to_identity(x, v)
        return np.array([_series.trace_inner(w, b, -1) for b in _skew_basis(self.n)])

    def tangent_from_coords(self, x, c) -> np.ndarray:
        w = np.tensordot(np.asarray(c, dtype=float), _skew_basis(self.n), axes=1)
        if np.array_equal(x, np.eye(self.n)):
            return w
        return x @ w


def _skewpart(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - a.T)


def _skew_norm(w: np.ndarray) -> float:
    return float(np.linalg.norm(w)) / math.sqrt(2.0)


_SKEW_BASIS_CACHE: dict = {}


def _skew_basis(n: int) -> np.ndarray:
    """Orthonormal basis E_ij - E_ji (i < j) of skew matrices at the identity."""
    if n not in _SKEW_BASIS_CACHE:
        out = []
        for i in range(n):
            for j in range(i + 1, n):
                b = np.zeros((n, n))
                b[i, j] = 1.0
                b[j, i] = -1.0
                out.append(b)
        arr = np.stack(out)
        arr.setflags(write=False)
        _SKEW_BASIS_CACHE[n] = arr
    return _SKEW_BASIS_CACHE[n]


# ---------------------------------------------------------------------------
# series coefficients (the SPD formulas with the flipped metric sign)
# ---------------------------------------------------------------------------


def so_projection_coeff_series(q, v):
    return _series.projection_coeff_series(q, v, -1)


def f14_so(tangents, v) -> float:
    return _series.quartic_objective_coeff(tangents, v, -1)


def alpha1_so(tangents, eigvecs, j: int) -> float:
    if j == 1:
        raise ValidationError("alpha is defined for j != 1")
    u = np.asarray(eigvecs, dtype=float)
    return _series.alpha1_trace(tangents, u[0], u[j - 1], -1)


def alpha1_so_curvature(tangents, eigvecs, j: int) -> float:
    if j == 1:
        raise ValidationError("alpha is defined for j != 1")
    u = np.asarray(eigvecs, dtype=float)
    return _series.alpha1_curvature(tangents, u[0], u[j - 1], -1)


def alpha2_so(tangents, eigvecs, j: int, **kwargs) -> float:
    from ..pga import alpha_k_numeric

    if j == 2:
        raise ValidationError("alpha is defined for j != 2")
    if j == 1:
        return alpha1_so(tangents, eigvecs, 2)  # symmetric coefficient matrix
    u = np.asarray(eigvecs, dtype=float)
    man = SpecialOrthogonal(u.shape[-1])
    return alpha_k_numeric(man, tangents, u, k=2, j=j, **kwargs)


# ---------------------------------------------------------------------------
# two-sided variance removal
# ---------------------------------------------------------------------------


def gamma_ab(v, t: float, a: float, p) -> np.ndarray:
    """Two-sided removal isometry ``exp(-a t v) p exp(-b t v)``, b = 1 - a.

    For every split it is an isometry of the bi-invariant metric; the
    split only redistributes the removal between the left and right
    factors. ``v`` is a skew tangent at the identity.
    """
    v = np.asarray(v, dtype=float)
    left = linalg.mat_exp(-a * t * v)
    right = linalg.mat_exp(-(1.0 - a) * t * v)
    return left @ np.asarray(p, dtype=float) @ right


def mean_displacement_series(tangents, v, case: str = "half") -> np.ndarray:
    """Leading coefficient of the mean displacement caused by removal.

    After removing the fitted coefficients along v from a mean-centered
    scaled family, the intrinsic mean moves by ``x(eps)``:

    * ``case="half"`` (a = b = 1/2): ``x(eps) = x3 eps^3 + O(eps^5)``;
    * ``case="left"`` (a = 1, b = 0): ``x(eps) = x2 eps^2 + O(eps^3)``.

    Both coefficients are skew matrices (tangents at the identity):

        x2 = (1/(4N)) sum_i tr(q_i v)(v q_i - q_i v)
        x3 = (1/(96N)) sum_i [ tr(q_i v)^2 (2 v q_i v - q_i v^2 - v^2 q_i)
                               - 4 tr(q_i v)(2 q_i v q_i - q_i^2 v - v q_i^2)
                               + 4 tr(q_i v)(tr(q_i^2 v^2) - tr(q_i v q_i v)) v ]
    """
    v = np.asarray(v, dtype=float)
    n = v.shape[0]
    total = np.zeros((n, n))
    if case == "left":
        for q in tangents:
            total += float(np.trace(q @ v)) * (v @ q - q @ v)
        out = total / (4.0 * len(tangents))
    elif case == "half":
        v2 = v @ v
        for q in tangents:
            qv = q @ v
            q2 = q @ q
            t = float(np.trace(qv))
            term = t * t * (2.0 * v @ qv - qv @ v - v2 @ q)
            term -= 4.0 * t * (2.0 * q @ v @ q - q2 @ v - v @ q2)
            term += 4.0 * t * float(np.trace(q2 @ v2) - np.trace(qv @ qv)) * v
            total += term
        out = total / (96.0 * len(tangents))
    else:
        raise ValidationError(f"unknown removal split case: {case!r}")
    return _skewpart(out)


@dataclass(frozen=True)
class AltPgaConfig:
    """Split weights and depth for group-side variance removal."""

    a: float
    b: float
    k_max: int = 2
    recenter: bool = False

    def __post_init__(self):
        if abs(self.a + self.b - 1.0) > 1e-12:
            raise ValidationError("split weights must satisfy a + b = 1")
        if self.k_max < 1:
            raise ValidationError("k_max must be at least 1")


@dataclass
class AltPgaStep:
    k: int
    direction: np.ndarray
    coeffs: np.ndarray
    angle_to_eigvec: float
    angle_to_pga: float
    mean_displacement: float
    reconstruction_error: float
    diagnostics: dict = field(default_factory=dict)


def alt_pga(points, cfg: AltPgaConfig, *, gtol_rel: float = 1e-10):
    """Principal directions by recursive variance removal (group side).

    Each round fits the best single geodesic through the mean, removes
    every point's fitted coefficient by the (a, b)-split isometries, and
    recurses on the transformed set. Reports, per direction: the angle
    to the corresponding tangent-covariance eigendirection, the angle to
    the corresponding direction of the subspace-based fit, the intrinsic
    mean displacement the removal caused, and the remaining variance.
    """
    from ..pga import covariance_raw, exact_pga

    points = [np.asarray(p, dtype=float) for p in points]
    n = points[0].shape[0]
    man = SpecialOrthogonal(n)
    eye = np.eye(n)

    mu = intrinsic_mean_raw(man, points, tol=1e-12)
    work = [mu.T @ p for p in points]  # left-translate the mean to the identity

    logs = np.stack([linalg.mat_log_rot(p) for p in work])
    _, eigdirs = covariance_raw(man, eye, logs)
    reference = exact_pga(
        work, cfg.k_max, manifold=man, mu=eye, gtol_rel=gtol_rel
    )

    steps = []
    base = eye
    for k in range(1, cfg.k_max + 1):
        fit = exact_pga(work, 1, manifold=man, mu=base, gtol_rel=gtol_rel)
        v = man.tangent_to_identity(base, fit.directions[0])
        t = np.array(
            [quat_project_to_geodesic(p, v) for p in work]
            if n == 3
            else [_geodesic_coeff_numeric(man, base, fit.directions[0], p) for p in work]
        )
        work = [gamma_ab(v, ti, cfg.a, p) for ti, p in zip(t, work)]

        new_mean = intrinsic_mean_raw(man, work, tol=1e-12)
        displacement = _skew_norm(linalg.mat_log_rot(new_mean))
        recon = float(
            np.mean([man.dist(new_mean, p) ** 2 for p in work])
        )
        steps.append(
            AltPgaStep(
                k=k,
                direction=v,
                coeffs=t,
                angle_to_eigvec=tangent_angle(man, eye, v, eigdirs[k - 1]),
                angle_to_pga=tangent_angle(
                    man, eye, v, man.tangent_to_identity(eye, reference.directions[k - 1])
                ),
                mean_displacement=displacement,
                reconstruction_error=recon,
                diagnostics={"converged": fit.diagnostics[0]["converged"]},
            )
        )
        if cfg.recenter:
            work = [new_mean.T @ p for p in work]
            base = eye
    return steps


def _geodesic_coeff_numeric(man, base, direction, p) -> float:
    res = man.project_span(base, direction[None], p)
    return float(res.coeffs[0])


# ---------------------------------------------------------------------------
# quaternions (n = 3)
# ---------------------------------------------------------------------------


def to_quaternion(r) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a 3x3 rotation, w >= 0."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ValidationError("quaternion conversion expects a 3x3 rotation")
    t = float(np.trace(r))
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s,
             (r[1, 0] - r[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(1.0 + r[i, i] - r[j, j] - r[k, k], 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    q = q / np.linalg.norm(q)
    if q[0] < 0 or (q[0] == 0 and q[np.nonzero(q)[0][0]] < 0):
        q = -q
    return q


def from_quaternion(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise ValidationError("quaternion must have four components")
    nq = float(np.linalg.norm(q))
    if abs(nq - 1.0) > 1e-12:
        raise ValidationError(f"quaternion is not unit (norm {nq:.15f})")
    w, x, y, z = q / nq
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def _axis_of(v) -> tuple:
    """Rotation axis and angle rate of a skew 3x3 tangent at the identity."""
    w = np.array([v[2, 1], v[0, 2], v[1, 0]])
    ang = float(np.linalg.norm(w))
    if ang == 0.0:
        raise ValidationError("zero tangent has no axis")
    return w / ang, ang


def quat_geodesic(v, t: float) -> np.ndarray:
    """Point exp(t v) of the geodesic at the identity, via quaternions.

    Direct quaternion exponential (no interpolation): for v skew with
    axis a and angle rate s, the point is the rotation with quaternion
    (cos(ts/2), sin(ts/2) a).
    """
    axis, rate = _axis_of(np.asarray(v, dtype=float))
    half = 0.5 * t * rate
    q = np.concatenate([[math.cos(half)], math.sin(half) * axis])
    if q[0] < 0:
        q = -q
    return from_quaternion(q / np.linalg.norm(q))


def quat_project_to_geodesic(p, v) -> float:
    """Closed-form projection coefficient of p onto the geodesic exp(t v).

    ``v`` must be a unit tangent at the identity (rotation-angle rate 1).
    The minimizing coefficient is ``t* = 2 atan2(<u, axis>, w)`` for the
    quaternion (w, u) of p in the w >= 0 hemisphere.
    """
    v = np.asarray(v, dtype=float)
    axis, rate = _axis_of(v)
    if abs(rate - 1.0) > 1e-9:
        raise ValidationError("geodesic direction must be a unit tangent")
    q = to_quaternion(np.asarray(p, dtype=float))
    return 2.0 * math.atan2(float(q[1:] @ axis), float(q[0]))


# ---------------------------------------------------------------------------
# CSV interchange for rotation datasets
# ---------------------------------------------------------------------------


def save_rotations_csv(path, rotations, fmt: str = "quat") -> None:
    """Write rotations as quaternion rows (w,x,y,z) or 9-column row-major."""
    if fmt not in ("quat", "matrix"):
        raise ValidationError(f"unknown rotation CSV format {fmt!r}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if fmt == "quat":
            writer.writerow(["w", "x", "y", "z"])
            for r in rotations:
                writer.writerow([f"{c:.17g}" for c in to_quaternion(r)])
        else:
            writer.writerow([f"r{i}{j}" for i in range(3) for j in range(3)])
            for r in rotations:
                writer.writerow([f"{c:.17g}" for c in np.asarray(r).ravel()])


def load_rotations_csv(path):
    """Read a rotation dataset written by :func:`save_rotations_csv`.

    Accepts 4-column quaternion rows or 9-column row-major matrices; a
    non-numeric first row is treated as a header.
    """
    rows = []
    with open(path, newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if line_no == 1:
                    continue  # header
                raise SchemaError(f"line {line_no}: non-numeric entry", field="row")
            if len(values) not in (4, 9):
                raise SchemaError(
                    f"line {line_no}: expected 4 or 9 columns, got {len(values)}",
                    field="row",
                )
            rows.append((line_no, values))
    out = []
    man = SpecialOrthogonal(3)
    for line_no, values in rows:
        if len(values) == 4:
            q = np.array(values)
            nq = float(np.linalg.norm(q))
            if abs(nq - 1.0) > 1e-6:
                raise SchemaError(
                    f"line {line_no}: quaternion norm {nq:.6f} is not 1", field="w"
                )
            r = from_quaternion(q / nq)
        else:
            r = np.array(values).reshape(3, 3)
            try:
                man.check_point(r)
            except ValidationError as exc:
                raise SchemaError(f"line {line_no}: {exc}", field="row") from exc
        out.append(r)
    if not out:
        raise SchemaError("no rotation rows found")
    return out
