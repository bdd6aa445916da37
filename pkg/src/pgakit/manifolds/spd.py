"""Positive definite matrices with the congruence-invariant geometry.

Points are symmetric positive definite n x n matrices, tangents are
symmetric matrices, and the metric is

    <X, Y>_p = tr(p^{-1} X p^{-1} Y) / 2,

for which the group action ``act(g, p) = g p g^T`` of invertible
matrices is a transitive action by isometries. Geodesics through the
identity are matrix exponentials ``exp(s v)``; everything is carried to
the identity through the action, where the series formulas of
``_series`` apply with sign +1.

The module adds the exact projection cost along a geodesic (evaluated
by a symmetric three-factor splitting of the relative displacement),
closed-form series coefficients for projection and the residual
objective, and the first- and second-direction sensitivity coefficients
that feed the direction corrections. The curvature here is non-positive,
which makes the cubic projection correction non-positive at acute
angles.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import DEFAULT_TOLS, Tolerances
from ..errors import LogDomainError, NotPositiveDefiniteError, ValidationError
from .. import linalg
from . import _series
from .base import Manifold

__all__ = [
    "SPD",
    "MatrixManifold",
    "act",
    "projection_objective",
    "spd_projection_coeff_series",
    "f14_spd",
    "alpha1_spd",
    "alpha1_spd_curvature",
    "alpha2_spd",
    "translate_by_base",
]


class MatrixManifold(Manifold):
    """Shared behavior of the two matrix geometries (sign-parametrized)."""

    trace_sign: int = +1

    @property
    def point_shape(self) -> tuple:
        return (self.n, self.n)

    def params(self) -> dict:
        return {"n": self.n}

    def inner_identity(self, u, v) -> float:
        return _series.trace_inner(u, v, self.trace_sign)

    def tangent_to_identity(self, x, v) -> np.ndarray:
        """Carry a tangent at x to the identity through the group action."""
        raise NotImplementedError

    def curvature(self, x, a, b, c) -> np.ndarray:
        n = x.shape[0]
        if np.linalg.norm(x - np.eye(n)) > 1e-9 * math.sqrt(n):
            raise ValidationError(
                "curvature operator is evaluated at the identity base point"
            )
        return _series.commutator(c, _series.commutator(a, b))

    def sectional(self, p, v, q) -> float:
        gram = self._plane_gram(p, v, q)
        vt = self.tangent_to_identity(p, v)
        qt = self.tangent_to_identity(p, q)
        num = _series.curvature_pairing(qt, vt, vt, qt, self.trace_sign)
        return float(num / gram)

    def random_point(self, rng, spread: float = 1.0) -> np.ndarray:
        v = self.random_tangent(rng, np.eye(self.n), spread)
        return self.exp(np.eye(self.n), v)


class SPD(MatrixManifold):
    """Cone of symmetric positive definite n x n matrices."""

    kind = "spd"
    trace_sign = +1

    def __init__(self, n: int):
        if n < 2:
            raise ValidationError("matrix dimension must be at least 2")
        self.n = int(n)

    @property
    def dim(self) -> int:
        return self.n * (self.n + 1) // 2

    # -- validation -----------------------------------------------------------

    def check_point(self, x, tols: Tolerances = DEFAULT_TOLS) -> None:
        x = np.asarray(x)
        if x.shape != self.point_shape:
            raise ValidationError(f"point must have shape {self.point_shape}")
        if not linalg.is_symmetric(x, tols.sym_rel):
            raise ValidationError("point is not symmetric")
        lam = linalg.sym_eig(x).values
        if float(np.min(lam)) <= 0.0:
            raise ValidationError(
                f"point is not positive definite (eigenvalue {float(np.min(lam)):.3e})"
            )

    def check_tangent(self, x, v, tols: Tolerances = DEFAULT_TOLS) -> None:
        v = np.asarray(v)
        if v.shape != self.point_shape:
            raise ValidationError(f"tangent must have shape {self.point_shape}")
        if not linalg.is_symmetric(v, tols.sym_rel):
            raise ValidationError("tangent is not symmetric")

    # -- metric and maps ---------------------------------------------------------

    def inner(self, x, u, v) -> float:
        pu = np.linalg.solve(x, u)
        pv = np.linalg.solve(x, v)
        return 0.5 * float(np.tensordot(pu, pv.T, axes=2))

    @staticmethod
    def _sqrt_factors(x):
        eig = linalg.sym_eig(x)
        lam = eig.values
        if float(np.min(lam)) <= 0.0:
            raise NotPositiveDefiniteError("base point is not positive definite")
        root = np.sqrt(lam)
        g = (eig.vectors * root) @ eig.vectors.T
        ginv = (eig.vectors / root) @ eig.vectors.T
        return 0.5 * (g + g.T), 0.5 * (ginv + ginv.T)

    def exp(self, x, v) -> np.ndarray:
        if _is_identity(x):
            return linalg.mat_exp(_sym(v))
        g, ginv = self._sqrt_factors(x)
        w = _sym(ginv @ v @ ginv)
        y = g @ linalg.mat_exp(w) @ g
        return _sym(y)

    def log(self, x, y) -> np.ndarray:
        if _is_identity(x):
            return linalg.mat_log_spd(_sym(y))
        g, ginv = self._sqrt_factors(x)
        m = _sym(ginv @ y @ ginv)
        return _sym(g @ linalg.mat_log_spd(m) @ g)

    def dist(self, x, y) -> float:
        if _is_identity(x):
            m = _sym(y)
        else:
            _, ginv = self._sqrt_factors(x)
            m = _sym(ginv @ y @ ginv)
        lam = linalg.sym_eig(m).values
        if float(np.min(lam)) <= 0.0:
            raise NotPositiveDefiniteError("target point is not positive definite")
        return math.sqrt(0.5 * float(np.sum(np.log(lam) ** 2)))

    def exp_differential(self, x, v, e) -> np.ndarray:
        if _is_identity(x):
            return _dexp_sym(_sym(v), _sym(e))
        g, ginv = self._sqrt_factors(x)
        w = _sym(ginv @ v @ ginv)
        f = _sym(ginv @ e @ ginv)
        return _sym(g @ _dexp_sym(w, f) @ g)

    def tangent_project(self, x, w) -> np.ndarray:
        return _sym(np.asarray(w, dtype=float))

    def tangent_to_identity(self, x, v) -> np.ndarray:
        if _is_identity(x):
            return _sym(v)
        _, ginv = self._sqrt_factors(x)
        return _sym(ginv @ v @ ginv)

    def tangent_basis(self, x) -> np.ndarray:
        basis = _sym_basis(self.n)
        if _is_identity(x):
            return basis
        g, _ = self._sqrt_factors(x)
        return np.stack([_sym(g @ b @ g) for b in basis])

    def tangent_coords(self, x, v) -> np.ndarray:
        w = self.tangent_to_identity(x, v)
        return np.array([_series.trace_inner(w, b, +1) for b in _sym_basis(self.n)])

    def tangent_from_coords(self, x, c) -> np.ndarray:
        w = np.tensordot(np.asarray(c, dtype=float), _sym_basis(self.n), axes=1)
        if _is_identity(x):
            return w
        g, _ = self._sqrt_factors(x)
        return _sym(g @ w @ g)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _is_identity(x: np.ndarray) -> bool:
    n = x.shape[0]
    d = x - np.eye(n)
    return float(np.max(np.abs(d))) < 1e-14


_SYM_BASIS_CACHE: dict = {}


def _sym_basis(n: int) -> np.ndarray:
    """Metric-orthonormal basis of symmetric matrices at the identity.

    Diagonal units scaled by sqrt(2), then symmetrized pairs E_ij + E_ji
    for i < j, in row-major order of (i, j).
    """
    if n not in _SYM_BASIS_CACHE:
        out = []
        for i in range(n):
            for j in range(i, n):
                b = np.zeros((n, n))
                if i == j:
                    b[i, i] = math.sqrt(2.0)
                else:
                    b[i, j] = b[j, i] = 1.0
                out.append(b)
        arr = np.stack(out)
        arr.setflags(write=False)
        _SYM_BASIS_CACHE[n] = arr
    return _SYM_BASIS_CACHE[n]


def _dexp_sym(x: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Derivative of the matrix exponential at a symmetric point.

    Divided-difference (Daleckii-Krein) form in the eigenbasis of x;
    agrees with the block-matrix identity in ``linalg.dexp`` and is much
    cheaper when the eigendecomposition is already the natural route.
    """
    eig = linalg.sym_eig(x)
    lam = eig.values
    u = eig.vectors
    et = u.T @ e @ u
    diff = lam[:, None] - lam[None, :]
    avg = 0.5 * (lam[:, None] + lam[None, :])
    half = 0.5 * diff
    # exp(a)-exp(b))/(a-b) = exp((a+b)/2) * sinh(d)/d, d = (a-b)/2
    small = np.abs(half) < 1e-6
    ratio = np.where(
        small,
        1.0 + half**2 / 6.0 + half**4 / 120.0,
        np.sinh(np.where(small, 1.0, half)) / np.where(small, 1.0, half),
    )
    k = np.exp(avg) * ratio
    return _sym(u @ (et * k) @ u.T)


def translate_by_base(points, base):
    """Congruence-translate a point set so that ``base`` maps to the identity.

    The translation ``p -> g^{-1} p g^{-1}`` with ``g = base^{1/2}`` is an
    isometry, so statistics computed at the identity carry back through g.
    """
    ginv = SPD(base.shape[0])._sqrt_factors(base)[1]
    return [_sym(ginv @ p @ ginv) for p in points]


# ---------------------------------------------------------------------------
# group action and series formulas (tangents at the identity)
# ---------------------------------------------------------------------------


def act(g, p) -> np.ndarray:
    """Congruence action ``g p g^T``; an isometry for any invertible g."""
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    if abs(float(np.linalg.det(g))) <= 1e-12:
        raise ValidationError("group element is numerically singular")
    return _sym(g @ p @ g.T)


def projection_objective(v, q, s: float, eps: float) -> float:
    """Squared distance from ``exp(eps q)`` to the geodesic point ``exp(s v)``.

    Evaluated through the symmetric splitting
    ``m = exp(-s v / 2) exp(eps q) exp(-s v / 2)`` whose log is the
    relative displacement; the value is ``tr(log(m)^2) / 2``.
    """
    v = _sym(np.asarray(v, dtype=float))
    q = _sym(np.asarray(q, dtype=float))
    half = linalg.mat_exp(-0.5 * s * v)
    m = _sym(half @ linalg.mat_exp(eps * q) @ half)
    lam = linalg.sym_eig(m).values
    if float(np.min(lam)) <= 0.0:
        raise LogDomainError("conjugated displacement left the log domain")
    return 0.5 * float(np.sum(np.log(lam) ** 2))


def spd_projection_coeff_series(q, v):
    """(t1, t3) of the geodesic projection coefficient; curvature <= 0
    makes t3 <= 0 whenever t1 > 0 and [q, v] != 0."""
    return _series.projection_coeff_series(q, v, +1)


def f14_spd(tangents, v) -> float:
    """Quartic scale coefficient of the first-direction residual objective."""
    return _series.quartic_objective_coeff(tangents, v, +1)


def alpha1_spd(tangents, eigvecs, j: int) -> float:
    """Sensitivity of the quartic objective coefficient at u_1 towards u_j."""
    if j == 1:
        raise ValidationError("alpha is defined for j != 1")
    u = np.asarray(eigvecs, dtype=float)
    return _series.alpha1_trace(tangents, u[0], u[j - 1], +1)


def alpha1_spd_curvature(tangents, eigvecs, j: int) -> float:
    """Curvature-tensor form of :func:`alpha1_spd` (cross-check route)."""
    if j == 1:
        raise ValidationError("alpha is defined for j != 1")
    u = np.asarray(eigvecs, dtype=float)
    return _series.alpha1_curvature(tangents, u[0], u[j - 1], +1)


def alpha2_spd(tangents, eigvecs, j: int, **kwargs) -> float:
    """Second-direction sensitivity coefficient, extracted numerically.

    For j > 2, evaluates the exact two-plane residual objective on a
    geometric scale ladder, removes the known quadratic coefficient,
    extrapolates the quartic coefficient, and differentiates it at u_2
    towards u_j by a symmetric step on the unit sphere (see
    ``pga.alpha_k_numeric``). The coefficient matrix is symmetric, so
    j = 1 falls back to the closed first-direction form.
    """
    from ..pga import alpha_k_numeric

    if j == 2:
        raise ValidationError("alpha is defined for j != 2")
    u = np.asarray(eigvecs, dtype=float)
    if j == 1:
        return alpha1_spd(tangents, eigvecs, 2)
    man = SPD(u.shape[-1])
    return alpha_k_numeric(man, tangents, u, k=2, j=j, **kwargs)
