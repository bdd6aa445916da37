"""The radius-r n-sphere and its closed-form fitting machinery.

Geometry
--------
Points live on ``S = {x in R^{n+1} : |x| = r}``; tangent vectors at p are
ambient vectors orthogonal to p, with the Euclidean dot product as the
metric. Geodesics are great circles:

    exp_p(v) = cos(|v|/r) p + r sin(|v|/r) v/|v|

and every 2-plane has sectional curvature 1/r^2.

Projection onto a geodesic subspace ``H = exp_mu(span(v_1..v_k))`` has a
closed form: project the ambient point onto span(mu, v_1..v_k) and scale
the result back to radius r. The cubic Taylor coefficient of the
projection coefficients in the data scale, the quartic coefficient of
the residual objective, and its directional derivatives (used by the
second-order direction corrections) are also closed forms; they live
here.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import DEFAULT_TOLS, Tolerances
from ..errors import CutLocusError, OutOfInjectivityRadiusError, ValidationError
from .base import Manifold, ProjectionResult

__all__ = [
    "Sphere",
    "projection_coeff_series",
    "exact_projection_coefficient",
    "f4_sphere",
    "alpha_sphere",
]


class Sphere(Manifold):
    """n-sphere of radius r embedded in R^{n+1}."""

    kind = "sphere"

    def __init__(self, n: int, r: float = 1.0):
        if n < 2:
            raise ValidationError("sphere dimension must be at least 2")
        if r <= 0:
            raise ValidationError("sphere radius must be positive")
        self.n = int(n)
        self.r = float(r)

    @property
    def dim(self) -> int:
        return self.n

    @property
    def point_shape(self) -> tuple:
        return (self.n + 1,)

    @property
    def injectivity_radius(self) -> float:
        return math.pi * self.r

    def params(self) -> dict:
        return {"n": self.n, "r": self.r}

    # -- validation ---------------------------------------------------------

    def check_point(self, x, tols: Tolerances = DEFAULT_TOLS) -> None:
        x = np.asarray(x)
        if x.shape != self.point_shape:
            raise ValidationError(
                f"sphere point must have shape {self.point_shape}, got {x.shape}"
            )
        err = abs(float(np.linalg.norm(x)) - self.r)
        if err > tols.unit_norm * max(self.r, 1.0):
            raise ValidationError(f"point norm off the sphere by {err:.3e}")

    def check_tangent(self, x, v, tols: Tolerances = DEFAULT_TOLS) -> None:
        v = np.asarray(v)
        if v.shape != self.point_shape:
            raise ValidationError(
                f"tangent must have shape {self.point_shape}, got {v.shape}"
            )
        ip = abs(float(np.dot(v, x)))
        scale = max(float(np.linalg.norm(v)) * self.r, 1.0)
        if ip > tols.unit_norm * scale:
            raise ValidationError(f"tangent not orthogonal to base point ({ip:.3e})")

    # -- metric and maps ------------------------------------------------------

    def inner(self, x, u, v) -> float:
        return float(np.dot(u, v))

    def exp(self, x, v) -> np.ndarray:
        u = float(np.linalg.norm(v))
        if u == 0.0:
            return x.copy()
        if u >= math.pi * self.r * (1 + 1e-12):
            raise OutOfInjectivityRadiusError(
                f"tangent norm {u:.6f} exceeds pi*r = {math.pi * self.r:.6f}"
            )
        t = u / self.r
        return math.cos(t) * x + (self.r * math.sin(t) / u) * v

    def log(self, x, y) -> np.ndarray:
        r2 = self.r * self.r
        c = float(np.dot(x, y)) / r2
        tau = y - c * x
        s = float(np.linalg.norm(tau)) / self.r
        if c <= -1.0 + DEFAULT_TOLS.cut_locus and s <= DEFAULT_TOLS.cut_locus:
            raise CutLocusError("log map undefined at the antipodal point")
        if s == 0.0:
            return np.zeros_like(x)
        theta = math.atan2(s, c)
        return (theta / s) * tau

    def dist(self, x, y) -> float:
        r2 = self.r * self.r
        c = float(np.dot(x, y)) / r2
        tau = y - c * x
        s = float(np.linalg.norm(tau)) / self.r
        return self.r * math.atan2(s, c)

    def exp_differential(self, x, v, e) -> np.ndarray:
        u = float(np.linalg.norm(v))
        if u < 1e-14 * self.r:
            return np.asarray(e, dtype=float).copy()
        vh = v / u
        a = float(np.dot(vh, e))
        t = u / self.r
        return (
            -(a / self.r) * math.sin(t) * x
            + a * math.cos(t) * vh
            + (self.r * math.sin(t) / u) * (e - a * vh)
        )

    def tangent_project(self, x, w) -> np.ndarray:
        return w - (float(np.dot(w, x)) / (self.r * self.r)) * x

    def tangent_basis(self, x) -> np.ndarray:
        xh = x / self.r
        rows = []
        for i in range(self.n + 1):
            w = np.zeros(self.n + 1)
            w[i] = 1.0
            w -= float(np.dot(w, xh)) * xh
            for u in rows:
                w -= float(np.dot(w, u)) * u
            nw = float(np.linalg.norm(w))
            if nw > 1e-6:
                rows.append(w / nw)
            if len(rows) == self.n:
                break
        if len(rows) != self.n:
            raise ValidationError("failed to build a tangent basis")
        return np.array(rows)

    def tangent_coords(self, x, v) -> np.ndarray:
        return self.tangent_basis(x) @ np.asarray(v, dtype=float)

    def tangent_from_coords(self, x, c) -> np.ndarray:
        return np.asarray(c, dtype=float) @ self.tangent_basis(x)

    # -- curvature --------------------------------------------------------------

    def sectional(self, p, v, q) -> float:
        self._plane_gram(p, v, q)  # degenerate-plane check only
        return 1.0 / (self.r * self.r)

    # -- sampling -----------------------------------------------------------------

    def random_point(self, rng, spread: float = 1.0) -> np.ndarray:
        w = rng.standard_normal(self.n + 1)
        return self.r * w / np.linalg.norm(w)

    # -- closed-form subspace projection ------------------------------------------

    def project_span(self, mu, basis, y, **kwargs) -> ProjectionResult:
        """Ambient projection onto span(mu, basis), rescaled to the sphere.

        The basis direction mu/r participates in the linear projection
        but carries no reported coefficient: coefficients are the log
        coordinates of the projected point along the given basis.
        """
        basis = np.asarray(basis, dtype=float)
        if basis.ndim == 1:
            basis = basis[None]
        a = basis @ y  # tangential components, shape (k,)
        radial = float(np.dot(mu, y)) / self.r  # r * cos(angle)
        tau = float(np.linalg.norm(a))
        wnorm2 = radial * radial + tau * tau
        if wnorm2 <= (1e-12 * self.r) ** 2:
            raise CutLocusError(
                "projection undefined: point orthogonal to the subspace"
            )
        w = (radial / self.r) * mu + np.tensordot(a, basis, axes=1)
        point = (self.r / math.sqrt(wnorm2)) * w
        phi = math.atan2(tau, radial)
        coeffs = (self.r * phi / tau) * a if tau > 0 else np.zeros_like(a)
        value = self.dist(point, y) ** 2
        return ProjectionResult(point=point, coeffs=coeffs, value=value)

    def project_span_numeric(self, mu, basis, y, **kwargs) -> ProjectionResult:
        """Generic coefficient minimization (independent of the closed form)."""
        from .base import _project_span_numeric

        return _project_span_numeric(self, mu, basis, y, **kwargs)


# ---------------------------------------------------------------------------
# series machinery
# ---------------------------------------------------------------------------


def projection_coeff_series(q, basis, m, r: float = 1.0):
    """Linear and cubic coefficients of one projection coefficient.

    For a point ``exp_mu(eps * q)`` projected onto the subspace spanned by
    the orthonormal ``basis`` (list of tangents at mu), the coefficient
    along ``basis[m]`` expands as ``t1*eps + t3*eps^3 + O(eps^5)`` with

        t1 = <q, v_m>,
        t3 = <q, v_m> (<q, q> - sum_j <q, v_j>^2) / (3 r^2).

    Returns ``(t1, t3)``.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[None]
    if not 0 <= m < len(basis):
        raise IndexError(f"basis index {m} out of range for k={len(basis)}")
    a = basis @ np.asarray(q, dtype=float)
    qq = float(np.dot(q, q))
    t1 = float(a[m])
    t3 = t1 * (qq - float(np.dot(a, a))) / (3.0 * r * r)
    return t1, t3


def exact_projection_coefficient(coeffs, qnorm, eps, m, r: float = 1.0) -> float:
    """Exact projection coefficient along basis[m], in scalar form.

    ``coeffs[j] = <q, v_j>`` are the tangential components of the (unit
    scale) tangent vector q and ``qnorm = |q|``. Evaluating the closed
    form through these scalars avoids forming the ambient point, which
    keeps full relative precision down to eps ~ 1e-8 (the ambient route
    loses absolutely ~1e-16, which swamps the tiny quintic remainders
    the order tests measure).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    t = eps * qnorm / r
    radial = math.cos(t)  # <mu, p_eps> / r
    a = math.sin(t) * coeffs / qnorm  # <v_j, p_eps> / r
    tau = float(np.linalg.norm(a))
    if tau == 0.0:
        return 0.0
    phi = math.atan2(tau, radial)
    return r * phi * float(a[m]) / tau


def f4_sphere(tangents, prior, v, r: float = 1.0) -> float:
    """Quartic scale coefficient of the residual objective on the sphere.

    ``prior`` holds the directions already fixed (possibly empty) and
    ``v`` the candidate direction; all orthonormal tangents at the common
    base point. With ``s_i = sum_j <q_i, prior_j>^2 + <q_i, v>^2``:

        f4 = (1/(3 N r^2)) * sum_i s_i * (s_i - <q_i, q_i>).
    """
    qs = np.asarray(tangents, dtype=float)
    v = np.asarray(v, dtype=float)
    prior = np.asarray(prior, dtype=float).reshape(-1, qs.shape[1])
    s = (qs @ v) ** 2
    if len(prior):
        s = s + np.sum((qs @ prior.T) ** 2, axis=1)
    qq = np.sum(qs * qs, axis=1)
    return float(np.mean(s * (s - qq)) / (3.0 * r * r))


def alpha_sphere(tangents, eigvecs, k, m, r: float = 1.0) -> float:
    """Directional derivative of the quartic objective coefficient.

    ``eigvecs`` are the orthonormal covariance eigendirections (rows,
    descending eigenvalue). Indices are 1-based and ``m != k``:

        alpha_{k,m} = (2/(3 N r^2)) *
            sum_i (2 sum_{j<=k} <q_i,u_j>^2 - <q_i,q_i>) <q_i,u_k> <q_i,u_m>.
    """
    if m == k:
        raise ValidationError("alpha is defined for m != k")
    qs = np.asarray(tangents, dtype=float)
    u = np.asarray(eigvecs, dtype=float)
    if not (1 <= k <= len(u)) or not (1 <= m <= len(u)):
        raise IndexError("eigendirection index out of range")
    g = qs @ u.T  # (N, K) components
    lead = 2.0 * np.sum(g[:, :k] ** 2, axis=1) - np.sum(qs * qs, axis=1)
    return float(
        2.0 / (3.0 * r * r) * np.mean(lead * g[:, k - 1] * g[:, m - 1])
    )
