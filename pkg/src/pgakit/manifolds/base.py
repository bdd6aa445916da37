"""Shared manifold contract and manifold-generic statistics.

Three concrete geometries implement this contract: the radius-r n-sphere
embedded in R^{n+1}, the cone of symmetric positive definite matrices
with its congruence-invariant metric, and the rotation group with its
bi-invariant metric. Points and tangents are small numpy arrays; the
wrapper types :class:`Point` and :class:`Tangent` carry the owning
manifold and validate the corresponding invariants on construction.

On top of the contract this module provides the statistics that do not
depend on which geometry is underneath: the intrinsic (Karcher) mean and
variance, projection onto geodesic subspaces, and curvature evaluation.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..config import DEFAULT_TOLS, Tolerances
from ..errors import (
    BaseMismatchError,
    CutLocusError,
    DegeneratePlaneError,
    NonConvergenceError,
    SolverError,
    UnsupportedManifoldError,
    ValidationError,
)

__all__ = [
    "Manifold",
    "Point",
    "Tangent",
    "GeodesicSubspace",
    "TangentDataset",
    "ProjectionResult",
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


class Manifold(abc.ABC):
    """Array-level operations of one geometry.

    Points and tangents are numpy arrays of shape ``point_shape``. All
    methods are pure; nothing here holds mutable state.
    """

    kind: str = "abstract"

    # -- structure ---------------------------------------------------------

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Dimension of the tangent spaces."""

    @property
    @abc.abstractmethod
    def point_shape(self) -> tuple:
        """Shape of the arrays representing points."""

    @property
    def injectivity_radius(self) -> float:
        return np.inf

    def params(self) -> dict:
        return {}

    def same_as(self, other: "Manifold") -> bool:
        return self.kind == other.kind and self.params() == other.params()

    # -- validation --------------------------------------------------------

    @abc.abstractmethod
    def check_point(self, x, tols: Tolerances = DEFAULT_TOLS) -> None:
        """Raise ValidationError unless x satisfies the point invariants."""

    @abc.abstractmethod
    def check_tangent(self, x, v, tols: Tolerances = DEFAULT_TOLS) -> None:
        """Raise ValidationError unless v is a tangent vector at x."""

    # -- metric and maps ----------------------------------------------------

    @abc.abstractmethod
    def inner(self, x, u, v) -> float:
        """Riemannian inner product of tangents u, v at x."""

    def norm(self, x, v) -> float:
        return float(np.sqrt(max(self.inner(x, v, v), 0.0)))

    @abc.abstractmethod
    def exp(self, x, v) -> np.ndarray:
        """Endpoint of the geodesic from x with initial velocity v."""

    @abc.abstractmethod
    def log(self, x, y) -> np.ndarray:
        """Initial velocity of the minimal geodesic from x to y."""

    def dist(self, x, y) -> float:
        return self.norm(x, self.log(x, y))

    @abc.abstractmethod
    def exp_differential(self, x, v, e) -> np.ndarray:
        """Derivative of ``exp(x, .)`` at v in direction e (ambient)."""

    @abc.abstractmethod
    def tangent_project(self, x, w) -> np.ndarray:
        """Project an ambient array onto the tangent space at x."""

    # -- tangent coordinates ------------------------------------------------

    @abc.abstractmethod
    def tangent_basis(self, x) -> np.ndarray:
        """Deterministic metric-orthonormal basis of T_x, shape (dim, *point_shape)."""

    def tangent_coords(self, x, v) -> np.ndarray:
        b = self.tangent_basis(x)
        return np.array([self.inner(x, bi, v) for bi in b])

    def tangent_from_coords(self, x, c) -> np.ndarray:
        b = self.tangent_basis(x)
        return np.tensordot(np.asarray(c, dtype=float), b, axes=1)

    # -- curvature -----------------------------------------------------------

    def curvature(self, x, a, b, c) -> np.ndarray:
        """Curvature operator R(a, b)c at x."""
        raise UnsupportedManifoldError(
            f"curvature operator not available on {self.kind}"
        )

    def sectional(self, p, v, q) -> float:
        """Sectional curvature of span(v, q) at p."""
        gram = self._plane_gram(p, v, q)
        r = self.curvature(p, q, v, v)
        return float(self.inner(p, r, q) / gram)

    def _plane_gram(self, p, v, q) -> float:
        qq = self.inner(p, q, q)
        vv = self.inner(p, v, v)
        qv = self.inner(p, q, v)
        gram = qq * vv - qv * qv
        if gram < 1e-14 * max(qq * vv, 1e-300):
            raise DegeneratePlaneError("tangent vectors span a degenerate plane")
        return gram

    # -- sampling ------------------------------------------------------------

    @abc.abstractmethod
    def random_point(self, rng, spread: float = 1.0) -> np.ndarray: ...

    def random_tangent(self, rng, x, scale: float = 1.0) -> np.ndarray:
        w = rng.standard_normal(self.point_shape)
        v = self.tangent_project(x, w)
        n = self.norm(x, v)
        if n < 1e-12:
            return self.random_tangent(rng, x, scale)
        return (scale / n) * v

    # -- subspace projection ---------------------------------------------------

    def project_span(self, mu, basis, y, **kwargs) -> "ProjectionResult":
        """Project y onto Exp_mu(span(basis)); numeric by default."""
        return _project_span_numeric(self, mu, basis, y, **kwargs)

    def __repr__(self) -> str:  # pragma: no cover
        args = ", ".join(f"{k}={v}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


# ---------------------------------------------------------------------------
# wrapper types
# ---------------------------------------------------------------------------


def _frozen_array(obj, name, value):
    arr = np.array(value, dtype=float)
    arr.setflags(write=False)
    object.__setattr__(obj, name, arr)
    return arr


@dataclass(frozen=True, eq=False)
class Point:
    """A point of one manifold; the array invariants are checked on creation."""

    manifold: Manifold
    value: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self, "value", self.value)
        self.manifold.check_point(arr)


@dataclass(frozen=True, eq=False)
class Tangent:
    """A tangent vector anchored at a base point."""

    base: Point
    vec: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self, "vec", self.vec)
        self.base.manifold.check_tangent(self.base.value, arr)

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold

    def norm(self) -> float:
        return self.manifold.norm(self.base.value, self.vec)


def _same_base(a: Point, b: Point, tols: Tolerances = DEFAULT_TOLS) -> bool:
    if not a.manifold.same_as(b.manifold):
        return False
    scale = max(float(np.linalg.norm(a.value)), 1.0)
    return float(np.linalg.norm(a.value - b.value)) <= 1e-9 * scale


def _require_same_base(p: Point, t: Tangent) -> None:
    if not _same_base(p, t.base):
        raise BaseMismatchError("tangent vector anchored at a different base point")


@dataclass(frozen=True, eq=False)
class GeodesicSubspace:
    """Exp_mu of the span of an orthonormal list of tangents at mu."""

    mu: Point
    basis: tuple

    def __post_init__(self):
        basis = tuple(self.basis)
        object.__setattr__(self, "basis", basis)
        man = self.mu.manifold
        for t in basis:
            _require_same_base(self.mu, t)
        for i, ti in enumerate(basis):
            for j, tj in enumerate(basis):
                g = man.inner(self.mu.value, ti.vec, tj.vec)
                want = 1.0 if i == j else 0.0
                if abs(g - want) > DEFAULT_TOLS.orthonormal:
                    raise ValidationError(
                        f"subspace basis not orthonormal: <b{i}, b{j}> = {g:.3e}"
                    )

    @property
    def k(self) -> int:
        return len(self.basis)

    def basis_array(self) -> np.ndarray:
        return np.stack([t.vec for t in self.basis])


@dataclass(frozen=True, eq=False)
class TangentDataset:
    """Base point plus tangent vectors; the canonical input to the fits.

    ``tangents`` is stacked with shape (N, *point_shape). ``epsilon`` is
    an optional common scale: the dataset stands for the points
    ``exp(mu, epsilon * q_i)``. On manifolds with a finite injectivity
    radius the scaled tangents must stay strictly inside it.
    """

    mu: Point
    tangents: np.ndarray
    epsilon: Optional[float] = None

    def __post_init__(self):
        arr = np.array(self.tangents, dtype=float)
        if arr.ndim == len(self.mu.manifold.point_shape):
            arr = arr[None]
        arr.setflags(write=False)
        object.__setattr__(self, "tangents", arr)
        man = self.mu.manifold
        for i, q in enumerate(arr):
            try:
                man.check_tangent(self.mu.value, q)
            except ValidationError as exc:
                raise ValidationError(f"tangent {i}: {exc}") from exc
        radius = man.injectivity_radius
        if np.isfinite(radius) and len(arr):
            eps = 1.0 if self.epsilon is None else float(self.epsilon)
            worst = max(man.norm(self.mu.value, q) for q in arr)
            if eps * worst >= radius:
                raise ValidationError(
                    f"scaled tangent norm {eps * worst:.6f} reaches the "
                    f"injectivity radius {radius:.6f}"
                )
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")

    @classmethod
    def from_tangents(cls, tangents: Sequence[Tangent], epsilon=None):
        if not tangents:
            raise ValidationError("empty tangent list")
        mu = tangents[0].base
        for t in tangents[1:]:
            _require_same_base(mu, t)
        return cls(mu, np.stack([t.vec for t in tangents]), epsilon)

    @property
    def n(self) -> int:
        return self.tangents.shape[0]

    @property
    def manifold(self) -> Manifold:
        return self.mu.manifold

    def coords(self) -> np.ndarray:
        """Tangent coordinates of all vectors, shape (N, dim)."""
        man, x = self.manifold, self.mu.value
        return np.stack([man.tangent_coords(x, q) for q in self.tangents])

    def points(self, epsilon=None) -> list:
        eps = self.epsilon if epsilon is None else epsilon
        eps = 1.0 if eps is None else eps
        man, x = self.manifold, self.mu.value
        return [Point(man, man.exp(x, eps * q)) for q in self.tangents]


# ---------------------------------------------------------------------------
# metric, maps, distance (wrapper level)
# ---------------------------------------------------------------------------


def metric(p: Point, x: Tangent, y: Tangent) -> float:
    """Riemannian inner product of two tangent vectors at p."""
    _require_same_base(p, x)
    _require_same_base(p, y)
    return p.manifold.inner(p.value, x.vec, y.vec)


def exp(p: Point, x: Tangent) -> Point:
    _require_same_base(p, x)
    return Point(p.manifold, p.manifold.exp(p.value, x.vec))


def log(p: Point, q: Point) -> Tangent:
    if not p.manifold.same_as(q.manifold):
        raise BaseMismatchError("points live on different manifolds")
    return Tangent(p, p.manifold.log(p.value, q.value))


def distance(p: Point, q: Point) -> float:
    if not p.manifold.same_as(q.manifold):
        raise BaseMismatchError("points live on different manifolds")
    return p.manifold.dist(p.value, q.value)


# ---------------------------------------------------------------------------
# intrinsic mean and variance
# ---------------------------------------------------------------------------


def intrinsic_mean_raw(
    man: Manifold,
    xs,
    x0=None,
    *,
    step: float = 1.0,
    tol: float = None,
    max_iter: int = 10_000,
    max_halvings: int = 60,
) -> np.ndarray:
    """Fixed-point iteration for the minimizer of mean squared distance.

    Update is ``mu <- exp(mu, step * mean(log(mu, x_i)))`` with the step
    halved whenever the gradient norm fails to decrease; widely dispersed
    spherical data needs the damping, everything else accepts step 1.
    """
    tol = DEFAULT_TOLS.stationarity if tol is None else tol
    xs = [np.asarray(x, dtype=float) for x in xs]
    if not xs:
        raise ValidationError("cannot average an empty point list")
    mu = np.array(xs[0] if x0 is None else x0, dtype=float)

    def grad_at(m):
        g = np.zeros(man.point_shape)
        for x in xs:
            g = g + man.log(m, x)
        g /= len(xs)
        return g, man.norm(m, g)

    g, gn = grad_at(mu)
    halvings = 0
    for _ in range(max_iter):
        if gn <= tol:
            return mu
        trial = man.exp(mu, step * g)
        g_t, gn_t = grad_at(trial)
        if gn_t < gn:
            mu, g, gn = trial, g_t, gn_t
            step = min(1.0, step * 1.5)
        else:
            step *= 0.5
            halvings += 1
            if halvings > max_halvings:
                raise NonConvergenceError(
                    f"intrinsic mean stalled (gradient norm {gn:.3e})"
                )
    raise NonConvergenceError(
        f"intrinsic mean did not reach stationarity {tol:.1e} "
        f"within {max_iter} iterations (gradient norm {gn:.3e})"
    )


def intrinsic_mean(points: Sequence[Point], x0: Point = None, **kwargs) -> Point:
    """Intrinsic (Karcher) mean of a list of points."""
    if not points:
        raise ValidationError("cannot average an empty point list")
    man = points[0].manifold
    for p in points[1:]:
        if not man.same_as(p.manifold):
            raise BaseMismatchError("points live on different manifolds")
    mu = intrinsic_mean_raw(
        man, [p.value for p in points], None if x0 is None else x0.value, **kwargs
    )
    return Point(man, mu)


def intrinsic_variance(points: Sequence[Point], mu: Point) -> float:
    """Mean squared geodesic distance from mu."""
    man = mu.manifold
    return float(np.mean([man.dist(mu.value, p.value) ** 2 for p in points]))


# ---------------------------------------------------------------------------
# projection onto geodesic subspaces
# ---------------------------------------------------------------------------


@dataclass
class ProjectionResult:
    point: np.ndarray
    coeffs: np.ndarray
    value: float  # squared distance from the projected point
    converged: bool = True
    nonunique: bool = False
    n_minima: int = 1


def _coeff_objective(man, mu, basis, y):
    def value(s):
        x = np.tensordot(s, basis, axes=1)
        return man.dist(man.exp(mu, x), y) ** 2

    def gradient(s):
        x = np.tensordot(s, basis, axes=1)
        p = man.exp(mu, x)
        l = man.log(p, y)
        return np.array(
            [
                -2.0 * man.inner(p, l, man.exp_differential(mu, x, b))
                for b in basis
            ]
        )

    return value, gradient


def _coeff_minimize(man, mu, basis, y, s0, gtol, max_iter=40):
    """Damped Newton (finite-difference Hessian of the exact gradient).

    Quadratic convergence makes stagnation a reliable floor detector:
    the iteration stops once the gradient norm fails to shrink, and the
    best iterate seen is returned.
    """
    value, gradient = _coeff_objective(man, mu, basis, y)
    s = np.asarray(s0, dtype=float).copy()
    k = s.size
    f = value(s)
    g = gradient(s)
    gn = float(np.linalg.norm(g))
    best = (gn, s.copy(), f)
    stagnant = 0
    # the coefficient Hessian is 2I up to curvature corrections; start
    # there and fall back to finite differences only if it stops working
    hess = 2.0 * np.eye(k)
    fresh_hess = False
    for _ in range(max_iter):
        if gn <= gtol:
            return s, f, True
        if hess is None:
            h_step = 1e-6 * (1.0 + float(np.linalg.norm(s)))
            hess = np.empty((k, k))
            for j in range(k):
                e = np.zeros(k)
                e[j] = h_step
                hess[:, j] = (gradient(s + e) - gradient(s - e)) / (2.0 * h_step)
            hess = 0.5 * (hess + hess.T)
            fresh_hess = True
        try:
            step = np.linalg.solve(hess, -g)
            ok = np.all(np.isfinite(step)) and float(step @ g) < 0
        except np.linalg.LinAlgError:
            ok = False
        if not ok:
            if not fresh_hess:
                hess = None
                continue
            step = -g / max(gn, 1e-30)
        alpha = 1.0
        improved = False
        for _ in range(40):
            s_new = s + alpha * step
            f_new = value(s_new)
            if np.isfinite(f_new) and f_new <= f + 1e-15 * max(abs(f), 1.0):
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        s, f = s_new, f_new
        g = gradient(s)
        gn_new = float(np.linalg.norm(g))
        # a stale Hessian that stops contracting gets rebuilt once
        if gn_new > 0.3 * gn and not fresh_hess:
            hess = None
        fresh_hess = False
        gn = gn_new
        if gn < best[0]:
            best = (gn, s.copy(), f)
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= 2:
                break
        if float(np.linalg.norm(alpha * step)) <= 1e-16 * (1.0 + float(np.linalg.norm(s))):
            break
    gn, s, f = best
    return s, f, gn <= gtol * 10


def _project_span_numeric(
    man,
    mu,
    basis,
    y,
    *,
    starts: int = 5,
    gtol: float = 1e-12,
    perturb_seed: int = 1234501,
):
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == len(man.point_shape):
        basis = basis[None]
    l0 = man.log(mu, y)
    s0 = np.array([man.inner(mu, b, l0) for b in basis])
    scale = float(np.linalg.norm(s0)) + 0.1 * man.dist(mu, y) + 1e-12
    gtol_abs = gtol * max(1.0, scale**2)

    seeds = [s0]
    if starts > 1:
        rng = np.random.Generator(np.random.Philox(perturb_seed))
        for _ in range(starts - 1):
            seeds.append(s0 + 0.25 * scale * rng.standard_normal(s0.shape))

    minima = []
    any_converged = False
    for seed in seeds:
        s, f, conv = _coeff_minimize(man, mu, basis, y, seed, gtol_abs)
        any_converged = any_converged or conv
        merged = False
        for known in minima:
            if np.linalg.norm(known[1] - s) <= 1e-5 * max(scale, 1.0):
                if f < known[0]:
                    known[0], known[1] = f, s
                merged = True
                break
        if not merged:
            minima.append([f, s])
    if not any_converged:
        raise NonConvergenceError("subspace projection did not converge")
    minima.sort(key=lambda m: m[0])
    f_best, s_best = minima[0]
    nonunique = any(
        m[0] - f_best <= DEFAULT_TOLS.nonunique_objective * max(1.0, abs(f_best))
        for m in minima[1:]
    )
    x = np.tensordot(s_best, basis, axes=1)
    return ProjectionResult(
        point=man.exp(mu, x),
        coeffs=s_best,
        value=f_best,
        converged=True,
        nonunique=nonunique,
        n_minima=len(minima),
    )


def project_info(p: Point, h: GeodesicSubspace, **kwargs) -> ProjectionResult:
    """Projection of p onto the geodesic subspace, with diagnostics."""
    man = p.manifold
    if not man.same_as(h.mu.manifold):
        raise BaseMismatchError("point and subspace live on different manifolds")
    return man.project_span(h.mu.value, h.basis_array(), p.value, **kwargs)


def project(p: Point, h: GeodesicSubspace, **kwargs) -> Point:
    """Closest point of the geodesic subspace (minimizer of distance)."""
    return Point(p.manifold, project_info(p, h, **kwargs).point)


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


def curvature_op(x: Tangent, y: Tangent, z: Tangent) -> Tangent:
    """Curvature operator R(x, y)z at the common base point.

    Only defined on the matrix geometries (the sphere's curvature is
    handled analytically) and, as all the series formulas, at the
    identity base point.
    """
    p = x.base
    _require_same_base(p, y)
    _require_same_base(p, z)
    return Tangent(p, p.manifold.curvature(p.value, x.vec, y.vec, z.vec))


def sectional_curvature(p: Point, v: Tangent, q: Tangent) -> float:
    """Sectional curvature of the plane spanned by v and q at p."""
    _require_same_base(p, v)
    _require_same_base(p, q)
    return p.manifold.sectional(p.value, v.vec, q.vec)


# ---------------------------------------------------------------------------
# small tangent utilities
# ---------------------------------------------------------------------------


def tangent_angle(man: Manifold, x, a, b, align: bool = True) -> float:
    """Angle between tangent directions, accurate down to ~1e-15 rad.

    Directions are compared up to sign when ``align`` is set (the fits
    determine directions only up to sign). Uses the chord formula, which
    keeps precision for nearly parallel vectors where arccos of the
    normalized inner product loses it.
    """
    na, nb = man.norm(x, a), man.norm(x, b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cannot measure the angle of a zero vector")
    u = a / na
    w = b / nb
    if align and man.inner(x, u, w) < 0:
        w = -w
    chord = man.norm(x, u - w)
    anti = man.norm(x, u + w)
    if chord <= anti:
        return 2.0 * float(np.arcsin(min(chord / 2.0, 1.0)))
    return float(np.pi) - 2.0 * float(np.arcsin(min(anti / 2.0, 1.0)))
