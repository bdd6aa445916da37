"""Geodesic principal component fitting and its scale-series approximations.

Three layers live here:

* tangent covariance: the symmetric operator ``L(v) = (2/N) sum <q_i, v> q_i``
  on the tangent space at the mean, whose eigendirections are the
  first-order (tangent PCA) approximation of the fitted directions;
* exact fitting: successive minimization of the mean squared residual to
  geodesic subspaces through the mean, each direction constrained to the
  unit sphere orthogonal to the previous ones;
* the expansion engine: when the data is scaled by eps towards the mean,
  the k-th fitted direction admits ``v_k(eps) = u_k + (sum_j c_kj u_j)
  eps^2 + O(eps^4)`` with a skew-symmetric coefficient matrix
  ``c_kj = alpha_kj / (beta_j - beta_k)`` built from per-geometry
  sensitivity coefficients alpha.

The sensitivity coefficients come from the geometry modules (closed
forms on the sphere and for the first direction on the matrix
geometries; ladder extraction for the second matrix direction, see
:func:`alpha_k_numeric`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .config import DEFAULT_TOLS
from .errors import (
    DegenerateSpectrumError,
    UnsupportedOrderError,
    ValidationError,
)
from .fitting import richardson_even_checked
from .manifolds.base import (
    Manifold,
    Point,
    Tangent,
    TangentDataset,
    _coeff_minimize,
    intrinsic_mean_raw,
    tangent_angle,
)

__all__ = [
    "CovarianceOperator",
    "PgaResult",
    "ExpansionResult",
    "covariance",
    "covariance_raw",
    "exact_pga",
    "expansion",
    "objective_series",
    "exact_objective",
    "alpha_k_numeric",
    "default_alpha",
    "make_fit_context",
]


# ---------------------------------------------------------------------------
# covariance operator
# ---------------------------------------------------------------------------


@dataclass
class CovarianceOperator:
    """Tangent covariance operator in a fixed orthonormal tangent basis."""

    manifold: Manifold
    mu: np.ndarray
    matrix: np.ndarray        # (K, K) representation of L
    values: np.ndarray        # eigenvalues, descending by magnitude
    vectors: np.ndarray       # orthonormal eigenvector columns (coords)
    basis: np.ndarray         # (K, *point_shape) tangent basis at mu
    degenerate: bool
    min_gap_rel: float

    @property
    def k(self) -> int:
        return self.values.size

    def direction(self, k: int) -> np.ndarray:
        """k-th eigendirection as a tangent array at mu (1-based)."""
        return np.tensordot(self.vectors[:, k - 1], self.basis, axes=1)

    @property
    def directions(self) -> np.ndarray:
        return np.stack([self.direction(k) for k in range(1, self.k + 1)])

    def apply(self, v) -> np.ndarray:
        """L(v) for a tangent array v at mu."""
        c = self.manifold.tangent_coords(self.mu, v)
        return np.tensordot(self.matrix @ c, self.basis, axes=1)


def covariance_raw(man: Manifold, mu, tangents) -> CovarianceOperator:
    tangents = np.asarray(tangents, dtype=float)
    if tangents.shape[0] < 2:
        raise ValidationError("covariance needs at least two tangent vectors")
    coords = np.stack([man.tangent_coords(mu, q) for q in tangents])
    n = coords.shape[0]
    mat = (2.0 / n) * coords.T @ coords
    eig = linalg.sym_eig(mat)
    beta1 = max(abs(eig.values[0]), 1e-300)
    gaps = np.abs(np.diff(eig.values))
    min_gap_rel = float(np.min(gaps) / beta1) if gaps.size else math.inf
    return CovarianceOperator(
        manifold=man,
        mu=np.asarray(mu, dtype=float),
        matrix=mat,
        values=eig.values,
        vectors=eig.vectors,
        basis=man.tangent_basis(mu),
        degenerate=min_gap_rel < DEFAULT_TOLS.spectrum_gap_rel,
        min_gap_rel=min_gap_rel,
    )


def covariance(dataset: TangentDataset) -> CovarianceOperator:
    """Covariance operator of a tangent dataset at its base point."""
    return covariance_raw(dataset.manifold, dataset.mu.value, dataset.tangents)


# ---------------------------------------------------------------------------
# fit contexts (objective and gradient of the residual with one free direction)
# ---------------------------------------------------------------------------


class _SphereFitContext:
    """Closed-form residual objective on the sphere.

    With the ambient components ``rho_i = <mu, p_i>/r`` and ``u_i =
    (<b_m, p_i>)_m`` in a tangent basis, the distance from p_i to its
    projection on the subspace spanned by (mu-direction, dirs) is
    ``r * arccos(|w_i|/r)`` with ``|w_i|^2 = rho_i^2 + |components|^2``.
    """

    def __init__(self, man, mu, points):
        self.man = man
        self.r = man.r
        p = np.stack([np.asarray(x, dtype=float) for x in points])
        self.basis = man.tangent_basis(mu)
        self.rho = (p @ mu) / self.r
        self.comp = p @ self.basis.T  # (N, K)
        self._prior_sq = np.zeros(p.shape[0])

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coords(self, v) -> np.ndarray:
        return self.basis @ np.asarray(v, dtype=float)

    def from_coords(self, c) -> np.ndarray:
        return np.asarray(c, dtype=float) @ self.basis

    def set_prior(self, prior_coords) -> None:
        prior = np.asarray(prior_coords, dtype=float).reshape(-1, self.dim)
        if len(prior):
            a = self.comp @ prior.T
            self._prior_sq = np.sum(a * a, axis=1)
        else:
            self._prior_sq = np.zeros(self.comp.shape[0])

    def _geometry(self, c):
        av = self.comp @ c
        w = np.sqrt(self.rho**2 + self._prior_sq + av**2)
        cosine = np.clip(w / self.r, -1.0, 1.0)
        theta = np.arccos(cosine)
        sine = np.sqrt(np.clip(1.0 - cosine**2, 0.0, None))
        ratio = np.where(sine > 1e-8, theta / np.where(sine > 1e-8, sine, 1.0), 1.0)
        return av, w, theta, ratio

    def objective(self, c) -> float:
        _, _, theta, _ = self._geometry(c)
        return float(self.r**2 * np.mean(theta**2))

    def gradient(self, c) -> np.ndarray:
        av, w, _, ratio = self._geometry(c)
        weight = -2.0 * self.r * ratio * av / np.where(w > 0, w, 1.0)
        return (weight @ self.comp) / self.comp.shape[0]

    def projection_coeff_last(self, c) -> np.ndarray:
        """Per-point projection coefficient along the free direction."""
        av, _, theta, _ = self._geometry(c)
        tangential = np.sqrt(np.clip(self._prior_sq + av**2, 1e-300, None))
        return self.r * theta * av / tangential


class _MatrixFitContext:
    """Residual objective on the matrix geometries (numeric projections).

    Data is carried to the identity through the isometric group action;
    directions returned by the solver are mapped back by the owner. Per
    point the subspace projection is solved by a damped Newton iteration
    warm-started from the previous evaluation, and the gradient with
    respect to the free direction uses the minimizer envelope: only the
    explicit dependence through the last basis direction survives.
    """

    def __init__(self, man, mu, points):
        self.man = man
        self.sign = man.trace_sign
        n = man.n
        self.eye = np.eye(n)
        if man.kind == "spd":
            from .manifolds.spd import translate_by_base

            self.points = translate_by_base(points, mu)
        else:
            self.points = [mu.T @ np.asarray(p, dtype=float) for p in points]
        self.basis = man.tangent_basis(self.eye)
        self.logs = np.stack([man.log(self.eye, p) for p in self.points])
        self.log_coords = np.stack(
            [man.tangent_coords(self.eye, l) for l in self.logs]
        )
        # inner projections must be solved well below the data scale or the
        # envelope gradient of the outer objective inherits their residual
        data_scale = float(np.mean(np.sum(self.log_coords**2, axis=1)))
        self._inner_gtol = 1e-13 * max(data_scale, 1e-300)
        self._prior = np.zeros((0, self.basis.shape[0]))
        self._warm = None
        self._cache_key = None
        self._cache = None

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coords(self, v) -> np.ndarray:
        # v expressed at the identity
        return self.man.tangent_coords(self.eye, v)

    def from_coords(self, c) -> np.ndarray:
        return np.tensordot(np.asarray(c, dtype=float), self.basis, axes=1)

    def set_prior(self, prior_coords) -> None:
        self._prior = np.asarray(prior_coords, dtype=float).reshape(-1, self.dim)
        self._warm = None
        self._cache_key = None

    def _solve(self, c):
        key = np.asarray(c, dtype=float).tobytes()
        if self._cache_key == key:
            return self._cache
        rows = np.vstack([self._prior, np.asarray(c, dtype=float)[None]])
        mats = np.tensordot(rows, self.basis, axes=1)  # (k, n, n)
        k = rows.shape[0]
        n_pts = len(self.points)
        if self._warm is None or self._warm.shape != (n_pts, k):
            self._warm = self.log_coords @ rows.T
        coeffs = np.empty((n_pts, k))
        values = np.empty(n_pts)
        xs = []
        for i, p in enumerate(self.points):
            s, f, _ = _coeff_minimize(
                self.man, self.eye, mats, p, self._warm[i], gtol=self._inner_gtol
            )
            coeffs[i] = s
            values[i] = f
            xs.append(np.tensordot(s, mats, axes=1))
        self._warm = coeffs
        self._cache_key = key
        self._cache = (coeffs, values, xs)
        return self._cache

    def objective(self, c) -> float:
        _, values, _ = self._solve(c)
        return float(np.mean(values))

    def gradient(self, c) -> np.ndarray:
        coeffs, _, xs = self._solve(c)
        g = np.zeros(self.dim)
        for i, p in enumerate(self.points):
            x = xs[i]
            y = self.man.exp(self.eye, x)
            l = self.man.log(y, p)
            if self.man.kind == "spd":
                yinv = np.linalg.inv(y)
                m = yinv @ l @ yinv
            else:
                m = y.T @ l @ y.T
            d_all = self._dexp_all(x)
            pair = -self.sign * np.einsum("ab,kba->k", m, d_all)
            g += coeffs[i, -1] * pair
        return g / len(self.points)

    def _dexp_all(self, x) -> np.ndarray:
        """Derivative of exp at x along every canonical basis direction."""
        if self.man.kind == "spd":
            eig = linalg.sym_eig(x)
            lam, u = eig.values, eig.vectors
            diff = 0.5 * (lam[:, None] - lam[None, :])
            avg = 0.5 * (lam[:, None] + lam[None, :])
            small = np.abs(diff) < 1e-6
            safe = np.where(small, 1.0, diff)
            ratio = np.where(small, 1.0 + diff**2 / 6.0, np.sinh(safe) / safe)
            kern = np.exp(avg) * ratio
            et = np.einsum("ab,kbc,cd->kad", u.T, self.basis, u)
            return np.einsum("ab,kbc,cd->kad", u, et * kern, u.T)
        return linalg.dexp(np.broadcast_to(x, self.basis.shape), self.basis)

    def projection_coeff_last(self, c) -> np.ndarray:
        coeffs, _, _ = self._solve(c)
        return coeffs[:, -1].copy()


def make_fit_context(man: Manifold, mu, points):
    if man.kind == "sphere":
        return _SphereFitContext(man, np.asarray(mu, dtype=float), points)
    if man.kind in ("spd", "so"):
        return _MatrixFitContext(man, np.asarray(mu, dtype=float), points)
    raise ValidationError(f"no fit context for manifold kind {man.kind!r}")


# ---------------------------------------------------------------------------
# exact fitting
# ---------------------------------------------------------------------------


@dataclass
class PgaResult:
    """Fitted unit directions (mutually orthogonal tangents at mu)."""

    manifold: Manifold
    mu: np.ndarray
    directions: np.ndarray     # (k_max, *point_shape), tangents at mu
    residuals: np.ndarray      # objective value per direction
    diagnostics: list = field(default_factory=list)

    def direction_tangents(self):
        p = Point(self.manifold, self.mu)
        return [Tangent(p, d) for d in self.directions]


def _as_arrays(points, manifold):
    if manifold is None:
        if not points or not isinstance(points[0], Point):
            raise ValidationError(
                "pass Point instances or provide manifold= explicitly"
            )
        manifold = points[0].manifold
        values = [p.value for p in points]
    else:
        values = [p.value if isinstance(p, Point) else np.asarray(p, dtype=float)
                  for p in points]
    return manifold, values


def exact_pga(
    points,
    k_max: int,
    *,
    manifold: Manifold = None,
    mu=None,
    gtol_rel: float = 1e-9,
    max_iter: int = 10_000,
    seed_directions=None,
    restarts: int = 3,
    restart_seed: int = 7654321,
) -> PgaResult:
    """Successive best-fitting geodesic subspace directions.

    Each direction minimizes the mean squared residual to the subspace
    spanned by the already-fixed directions plus the candidate, over
    unit tangents orthogonal to the fixed ones. Minimization is seeded
    at the covariance eigendirections (or at ``seed_directions`` when
    given, e.g. second-order corrected directions); on a degenerate
    covariance spectrum, deterministic random restarts are added and the
    best value kept. Directions are sign-aligned with the seeding
    eigendirections.
    """
    manifold, values = _as_arrays(points, manifold)
    if mu is None:
        mu = intrinsic_mean_raw(manifold, values)
    else:
        mu = mu.value if isinstance(mu, Point) else np.asarray(mu, dtype=float)
    if not 1 <= k_max <= manifold.dim:
        raise ValidationError(f"k_max must be in [1, {manifold.dim}]")

    logs = np.stack([manifold.log(mu, p) for p in values])
    cov = covariance_raw(manifold, mu, logs)
    coords_sq = np.stack([manifold.tangent_coords(mu, q) for q in logs])
    scale = max(float(np.mean(np.sum(coords_sq**2, axis=1))), 1e-300)

    ctx = make_fit_context(manifold, mu, values)
    seeds_given = None
    if seed_directions is not None:
        seeds_given = [np.asarray(s, dtype=float) for s in seed_directions]

    if manifold.kind == "sphere":
        eig_coords = cov.vectors.T  # rows are coordinate vectors
    else:
        # context works at the identity; carry eigendirections there
        eig_coords = np.stack(
            [
                ctx.coords(manifold.tangent_to_identity(mu, cov.direction(k)))
                for k in range(1, cov.k + 1)
            ]
        )

    rng = np.random.Generator(np.random.Philox(restart_seed))
    found = np.zeros((0, ctx.dim))
    directions = []
    residuals = []
    diagnostics = []

    # normalize the objective to O(1): keeps the line search conditioned
    # at small data scales and makes gtol_rel meaningful
    def norm_objective(c):
        return ctx.objective(c) / scale

    def norm_gradient(c):
        return ctx.gradient(c) / scale

    for k in range(1, k_max + 1):
        ctx.set_prior(found)
        seeds = []
        if seeds_given is not None and len(seeds_given) >= k:
            s = seeds_given[k - 1]
            if manifold.kind != "sphere":
                s = manifold.tangent_to_identity(mu, s)
            seeds.append(ctx.coords(s))
        seeds.append(eig_coords[k - 1])
        if cov.degenerate:
            for _ in range(restarts):
                seeds.append(rng.standard_normal(ctx.dim))
        best = None
        for idx, seed in enumerate(seeds):
            res = linalg.minimize_on_sphere(
                norm_objective,
                norm_gradient,
                seed,
                constraint_basis=found if len(found) else None,
                gtol=gtol_rel,
                max_iter=max_iter,
                stall_limit=40,
            )
            if best is None or res.fun < best.fun - 1e-15 * abs(best.fun):
                best = res
            if res.converged and idx == 0:
                break  # primary seed succeeded; skip fallbacks
        c = best.x
        if float(c @ eig_coords[k - 1]) < 0:
            c = -c
        found = np.vstack([found, c[None]])
        v = ctx.from_coords(c)
        if manifold.kind != "sphere":
            v = _tangent_from_identity(manifold, mu, v)
        directions.append(v)
        residuals.append(best.fun * scale)
        diagnostics.append(
            {
                "k": k,
                "converged": best.converged,
                "grad_norm": best.grad_norm,
                "iterations": best.iterations,
                "seeded_with": "given" if seeds_given is not None else "tangent_pca",
                "degenerate_spectrum": cov.degenerate,
            }
        )
    return PgaResult(
        manifold=manifold,
        mu=mu,
        directions=np.stack(directions),
        residuals=np.array(residuals),
        diagnostics=diagnostics,
    )


def _tangent_from_identity(man, mu, w):
    if man.kind == "spd":
        g, _ = man._sqrt_factors(mu)
        return 0.5 * ((g @ w @ g) + (g @ w @ g).T)
    return mu @ w


# ---------------------------------------------------------------------------
# exact objective on a fixed subspace (series extraction support)
# ---------------------------------------------------------------------------


def exact_objective(man: Manifold, mu, tangents, dirs, eps: float) -> float:
    """Mean squared residual of the eps-scaled family to a fixed subspace.

    ``dirs`` spans the subspace (stack of orthonormal tangents at mu);
    the points are ``exp(mu, eps * q_i)``.
    """
    dirs = np.asarray(dirs, dtype=float)
    points = [man.exp(mu, eps * q) for q in np.asarray(tangents, dtype=float)]
    ctx = make_fit_context(man, mu, points)
    ctx.set_prior(np.stack([ctx.coords(_carry(man, mu, d)) for d in dirs[:-1]])
                  if len(dirs) > 1 else np.zeros((0, ctx.dim)))
    return ctx.objective(ctx.coords(_carry(man, mu, dirs[-1])))


def _carry(man, mu, v):
    if man.kind == "sphere":
        return v
    return man.tangent_to_identity(mu, v)


def leading_objective_coeff(man, mu, tangents, prior, v) -> float:
    """Quadratic scale coefficient of the residual objective.

    ``(1/N) sum_i (<q_i, q_i> - sum_j <q_i, u_j>^2 - <q_i, v>^2)`` over
    the fixed earlier directions u_j.
    """
    total = 0.0
    for q in tangents:
        s = man.inner(mu, q, q) - man.inner(mu, q, v) ** 2
        for u in prior:
            s -= man.inner(mu, q, u) ** 2
        total += s
    return total / len(tangents)


_DEFAULT_LADDER = tuple(2.0 ** (-m) for m in range(4, 10))


def _quartic_numeric(man, mu, tangents, prior, v, ladder, rel_tol):
    f2 = leading_objective_coeff(man, mu, tangents, prior, v)
    dirs = np.concatenate([np.asarray(prior, dtype=float).reshape((-1,) + v.shape),
                           v[None]])
    eps = np.asarray(ladder, dtype=float)
    h = np.array(
        [
            (exact_objective(man, mu, tangents, dirs, e) - f2 * e * e) / e**4
            for e in eps
        ]
    )
    est, _ = richardson_even_checked(
        eps, h, stages=2, rel_tol=rel_tol, what="quartic objective coefficient"
    )
    return est


def alpha_k_numeric(
    man: Manifold,
    tangents,
    eigdirs,
    k: int,
    j: int,
    *,
    ladder=_DEFAULT_LADDER,
    fd_step: float = 0.05,
    rel_tol: float = 1e-4,
    mu=None,
) -> float:
    """Sensitivity coefficient by ladder extraction and differentiation.

    The quartic coefficient ``g4(v)`` of the exact residual objective
    (earlier directions frozen at the top eigendirections) is extracted
    by Richardson extrapolation on a geometric scale ladder after
    removing the known quadratic term, then differentiated at ``u_k``
    towards ``u_j`` by symmetric great-circle steps with one step-halving
    extrapolation. Raises SeriesExtractionUnstableError when the two
    ladder estimates disagree beyond ``rel_tol`` relative.
    """
    u = np.asarray(eigdirs, dtype=float)
    if j <= k:
        # the sensitivity matrix is symmetric (alpha_kj = alpha_jk); rows
        # below the diagonal come from the earlier-direction coefficients
        raise ValidationError("ladder extraction is defined for j > k")
    if mu is None:
        mu = np.eye(man.n) if man.kind != "sphere" else None
        if mu is None:
            raise ValidationError("mu is required on the sphere")
    prior = u[: k - 1]
    uk, uj = u[k - 1], u[j - 1]

    def g4_at(angle):
        v = math.cos(angle) * uk + math.sin(angle) * uj
        return _quartic_numeric(man, mu, tangents, prior, v, ladder, rel_tol)

    d_h = (g4_at(fd_step) - g4_at(-fd_step)) / (2.0 * fd_step)
    d_h2 = (g4_at(fd_step / 2) - g4_at(-fd_step / 2)) / fd_step
    return (4.0 * d_h2 - d_h) / 3.0


# ---------------------------------------------------------------------------
# the expansion engine
# ---------------------------------------------------------------------------


def default_alpha(man: Manifold, method: str = "quartic"):
    """Per-geometry sensitivity coefficient provider.

    Returns a callable ``alpha(mu, tangents, dirs, k, j)``. The sphere
    has closed forms at every order k; the matrix geometries at k = 1,
    with k = 2 through the analytic quartic subspace form
    (``method="quartic"``, the default: the ladder extraction agrees
    with it to ~1e-4 but costs minutes per coefficient at realistic
    sample sizes) or by ladder extraction (``method="numeric"``).
    """
    if man.kind == "sphere":
        from .manifolds.sphere import alpha_sphere

        def provider(mu, tangents, dirs, k, j):
            return alpha_sphere(tangents, dirs, k, j, r=man.r)

        return provider

    from .manifolds import _series

    sign = man.trace_sign

    def provider(mu, tangents, dirs, k, j):
        if k == 1:
            return _series.alpha1_trace(tangents, dirs[0], dirs[j - 1], sign)
        if k == 2:
            if method == "quartic":
                return _series.alpha_quartic(
                    tangents, dirs[:1], dirs[1], dirs[j - 1], sign
                )
            return alpha_k_numeric(man, tangents, dirs, k=2, j=j, mu=mu)
        raise UnsupportedOrderError(
            f"no quartic coefficient beyond the second direction on {man.kind}"
        )

    return provider


@dataclass
class ExpansionResult:
    """Eigendirections with their second-order scale corrections.

    ``correction[k-1, j-1]`` holds c_kj; rows beyond ``k_max`` are zero
    (no sensitivity coefficients available there) and the matrix is
    skew-symmetric on the computed block.
    """

    manifold: Manifold
    mu: np.ndarray
    values: np.ndarray
    directions: np.ndarray     # (K, *point_shape) eigendirections at mu
    correction: np.ndarray     # (K, K) skew coefficient matrix
    k_max: int

    def leading(self, k: int) -> np.ndarray:
        return self.directions[k - 1]

    def corrected(self, k: int, eps: float) -> np.ndarray:
        """Second-order direction estimate, renormalized to unit length.

        The raw series ``u_k + (sum_j c_kj u_j) eps^2`` is not exactly
        unit; comparisons and seeding use the normalized vector.
        """
        if not 1 <= k <= self.k_max:
            raise ValidationError(f"corrections available for k <= {self.k_max}")
        man = self.manifold
        v = self.leading(k) + eps * eps * np.tensordot(
            self.correction[k - 1], self.directions, axes=1
        )
        return v / man.norm(self.mu, v)

    def correction_tangent(self, k: int) -> np.ndarray:
        """The second-order term sum_j c_kj u_j itself."""
        return np.tensordot(self.correction[k - 1], self.directions, axes=1)


def expansion(
    dataset: TangentDataset,
    alpha_provider=None,
    k_max: Optional[int] = None,
    *,
    alpha_method: str = "quartic",
) -> ExpansionResult:
    """Second-order expansion of the fitted directions in the data scale.

    Requires distinct covariance eigenvalues on the coupled indices;
    raises DegenerateSpectrumError otherwise.
    """
    man = dataset.manifold
    mu = dataset.mu.value
    cov = covariance(dataset)
    kk = cov.k
    if k_max is None:
        k_max = kk if man.kind == "sphere" else min(2, kk)
    if not 1 <= k_max <= kk:
        raise ValidationError(f"k_max must be in [1, {kk}]")
    if cov.degenerate:
        raise DegenerateSpectrumError(
            f"covariance spectrum nearly degenerate "
            f"(min relative gap {cov.min_gap_rel:.3e})"
        )
    if alpha_provider is None:
        alpha_provider = default_alpha(man, method=alpha_method)

    if man.kind == "sphere":
        tangents = dataset.tangents
        dirs = cov.directions
        mu_arg = mu
    else:
        tangents = np.stack(
            [man.tangent_to_identity(mu, q) for q in dataset.tangents]
        )
        dirs = np.stack(
            [man.tangent_to_identity(mu, d) for d in cov.directions]
        )
        mu_arg = np.eye(man.n)

    beta = cov.values
    c = np.zeros((kk, kk))
    for k in range(1, k_max + 1):
        for j in range(k + 1, kk + 1):
            a = alpha_provider(mu_arg, tangents, dirs, k, j)
            c[k - 1, j - 1] = a / (beta[j - 1] - beta[k - 1])
            c[j - 1, k - 1] = -c[k - 1, j - 1]
    return ExpansionResult(
        manifold=man,
        mu=mu,
        values=beta,
        directions=cov.directions,
        correction=c,
        k_max=k_max,
    )


def objective_series(dataset: TangentDataset, v, k: int, prior=None):
    """Quadratic and quartic scale coefficients of the residual objective.

    ``prior`` defaults to the top k-1 covariance eigendirections (the
    locally-evaluated form the expansion uses). The quartic coefficient
    dispatches to the geometry: closed form on the sphere at every k and
    on the matrix geometries at k = 1; ladder extraction at k = 2 there.
    """
    man = dataset.manifold
    mu = dataset.mu.value
    v = np.asarray(v, dtype=float)
    if prior is None:
        cov = covariance(dataset)
        prior = [cov.direction(a) for a in range(1, k)]
    prior = list(prior)
    if len(prior) != k - 1:
        raise ValidationError(f"need exactly {k - 1} earlier directions")
    f2 = leading_objective_coeff(man, mu, dataset.tangents, prior, v)

    if man.kind == "sphere":
        from .manifolds.sphere import f4_sphere

        prior_arr = (
            np.stack(prior) if prior else np.zeros((0, man.n + 1))
        )
        f4 = f4_sphere(dataset.tangents, prior_arr, v, r=man.r)
        return f2, f4

    from .manifolds import _series

    tangents = np.stack([man.tangent_to_identity(mu, q) for q in dataset.tangents])
    v_i = man.tangent_to_identity(mu, v)
    prior_i = [man.tangent_to_identity(mu, u) for u in prior]
    if k == 1:
        return f2, _series.quartic_objective_coeff(tangents, v_i, man.trace_sign)
    if k == 2:
        f4 = _quartic_numeric(
            man, np.eye(man.n), tangents, np.stack(prior_i), v_i,
            _DEFAULT_LADDER, rel_tol=1e-4,
        )
        return f2, f4
    raise UnsupportedOrderError(
        f"no quartic coefficient beyond the second direction on {man.kind}"
    )
