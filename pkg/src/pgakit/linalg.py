"""Dense linear algebra and optimization primitives for small matrices.

Everything the three geometries need lives here: a cyclic-Jacobi
eigensolver for symmetric matrices (deterministic ordering and sign
convention), matrix exponentials with symmetric / rotation / general
paths, principal logarithms on the positive-definite cone and the
rotation group, the directional derivative of the matrix exponential,
and a projected-gradient minimizer over unit vectors subject to linear
orthogonality constraints.

Matrices are plain float64 numpy arrays. The exponential and its
derivative accept stacked inputs of shape (..., n, n).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import (
    CutLocusError,
    NonConvergenceError,
    NotPositiveDefiniteError,
    SolverError,
    ValidationError,
)

__all__ = [
    "EigenPairs",
    "sym_eig",
    "mat_exp",
    "mat_log_spd",
    "mat_log_rot",
    "dexp",
    "minimize_on_sphere",
    "SphereMinimizeResult",
]


# ---------------------------------------------------------------------------
# symmetric eigendecomposition (cyclic Jacobi)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues sorted descending by magnitude, orthonormal column vectors.

    The sign of each eigenvector is fixed so that its entry of largest
    magnitude is positive, which makes downstream results reproducible.
    """

    values: np.ndarray
    vectors: np.ndarray
    sweeps: int

    def min_gap(self) -> float:
        """Smallest |difference| between consecutive sorted eigenvalues."""
        if self.values.size < 2:
            return math.inf
        return float(np.min(np.abs(np.diff(self.values))))


def _check_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")


def is_symmetric(a: np.ndarray, rel_tol: float = 1e-12) -> bool:
    scale = np.linalg.norm(a)
    return float(np.linalg.norm(a - a.T)) <= rel_tol * max(scale, 1e-300)


def is_skew(a: np.ndarray, rel_tol: float = 1e-12) -> bool:
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return True
    return float(np.linalg.norm(a + a.T)) <= rel_tol * scale


def sym_eig(a, max_sweeps: int = 64) -> EigenPairs:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Raises NonConvergenceError if the off-diagonal mass has not dropped to
    rounding level after ``max_sweeps`` full sweeps (never observed below
    n ~ 64 in practice).
    """
    a = np.asarray(a, dtype=float)
    _check_square(a)
    if not is_symmetric(a):
        raise ValidationError("sym_eig requires a symmetric matrix")
    n = a.shape[0]
    w = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 1:
        return EigenPairs(values=w.diagonal().copy(), vectors=v, sweeps=0)

    scale = max(float(np.linalg.norm(w)), 1e-300)
    stop = 1e-15 * scale
    sweeps = 0
    off_mask = ~np.eye(n, dtype=bool)
    for sweeps in range(1, max_sweeps + 1):
        off = math.sqrt(float(np.sum(w[off_mask] ** 2)))
        if off <= stop:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                if abs(apq) <= 1e-20 * scale:
                    continue
                phi = 0.5 * math.atan2(2.0 * apq, w[q, q] - w[p, p])
                c, s = math.cos(phi), math.sin(phi)
                # columns, then rows (w <- J^T w J with J the plane rotation)
                wp, wq = w[:, p].copy(), w[:, q].copy()
                w[:, p] = c * wp - s * wq
                w[:, q] = s * wp + c * wq
                wp, wq = w[p, :].copy(), w[q, :].copy()
                w[p, :] = c * wp - s * wq
                w[q, :] = s * wp + c * wq
                w[p, q] = w[q, p] = 0.5 * (w[p, q] + w[q, p])
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NonConvergenceError(
            f"Jacobi sweeps exhausted ({max_sweeps}) without convergence"
        )

    values = w.diagonal().copy()
    order = np.argsort(-np.abs(values), kind="stable")
    values = values[order]
    vectors = v[:, order]
    # deterministic sign: largest-magnitude entry of each vector positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(n)])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    return EigenPairs(values=values, vectors=vectors, sweeps=sweeps)


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------

# degree-13 diagonal Pade coefficients for the scaling-and-squaring exponential
_PADE13_B = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_PADE13_THETA = 5.371920351148152


def _expm_general(a: np.ndarray) -> np.ndarray:
    """Scaling-and-squaring with a degree-13 Pade approximant, batched."""
    a = np.asarray(a, dtype=float)
    n = a.shape[-1]
    norms = np.abs(a).sum(axis=-2)  # 1-norms per matrix
    norm1 = float(np.max(norms)) if norms.size else 0.0
    s = 0
    if norm1 > _PADE13_THETA:
        s = max(0, int(math.ceil(math.log2(norm1 / _PADE13_THETA))))
        a = a / (2.0**s)
    b = _PADE13_B
    eye = np.broadcast_to(np.eye(n), a.shape)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6
        + b[5] * a4
        + b[3] * a2
        + b[1] * eye
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6
        + b[4] * a4
        + b[2] * a2
        + b[0] * eye
    )
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def _expm_sym(a: np.ndarray) -> np.ndarray:
    eig = sym_eig(a)
    r = (eig.vectors * np.exp(eig.values)) @ eig.vectors.T
    return 0.5 * (r + r.T)


def _skew3_vector(x: np.ndarray) -> np.ndarray:
    return np.array([x[2, 1], x[0, 2], x[1, 0]])


def _skew3(w) -> np.ndarray:
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def _expm_rot3(x: np.ndarray) -> np.ndarray:
    """Closed axis-angle exponential of a 3x3 skew matrix."""
    w = _skew3_vector(x)
    theta = float(np.linalg.norm(w))
    if theta < 1e-8:
        # series for sin(t)/t and (1-cos t)/t^2
        a = 1.0 - theta**2 / 6.0 + theta**4 / 120.0
        b = 0.5 - theta**2 / 24.0 + theta**4 / 720.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * x + b * (x @ x)


def mat_exp(x) -> np.ndarray:
    """Matrix exponential.

    Dispatches on structure: symmetric matrices go through the
    eigendecomposition (result is symmetric positive definite), 3x3 skew
    matrices through the closed axis-angle formula (result is a
    rotation), everything else (including stacked input) through
    scaling-and-squaring.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        _check_square(x)
        if is_symmetric(x):
            return _expm_sym(x)
        if x.shape[0] == 3 and is_skew(x):
            return _expm_rot3(x)
        return _expm_general(x)
    if x.ndim > 2 and x.shape[-1] == x.shape[-2]:
        return _expm_general(x)
    raise ValidationError(f"mat_exp expects (..., n, n) input, got shape {x.shape}")


def mat_log_spd(p) -> np.ndarray:
    """Principal logarithm of a symmetric positive definite matrix."""
    p = np.asarray(p, dtype=float)
    _check_square(p)
    if not is_symmetric(p):
        raise ValidationError("mat_log_spd requires a symmetric matrix")
    eig = sym_eig(p)
    lam_min = float(np.min(eig.values))
    if lam_min <= 0.0:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (eigenvalue {lam_min:.6e})"
        )
    r = (eig.vectors * np.log(eig.values)) @ eig.vectors.T
    return 0.5 * (r + r.T)


def _check_rotation(r: np.ndarray, tol: float = 1e-8) -> None:
    n = r.shape[0]
    if np.linalg.norm(r @ r.T - np.eye(n)) > tol * n:
        raise ValidationError("matrix is not orthogonal")
    if np.linalg.det(r) < 0.0:
        raise ValidationError("matrix has determinant -1 (not a rotation)")


def _denman_beavers_sqrt(a: np.ndarray, max_iter: int = 60) -> np.ndarray:
    y = a.copy()
    z = np.eye(a.shape[0])
    target = 1e-14 * max(float(np.linalg.norm(a)), 1.0)
    for _ in range(max_iter):
        yn = 0.5 * (y + np.linalg.inv(z))
        zn = 0.5 * (z + np.linalg.inv(y))
        y, z = yn, zn
        if np.linalg.norm(y @ y - a) <= target:
            return y
    raise SolverError("matrix square root iteration did not converge")


def _log_rot3(r: np.ndarray, cut_tol: float) -> np.ndarray:
    c = min(1.0, max(-1.0, 0.5 * (float(np.trace(r)) - 1.0)))
    sv = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = float(np.linalg.norm(sv))
    theta = math.atan2(s, c)
    if theta >= math.pi - cut_tol:
        raise CutLocusError(
            f"rotation angle {theta:.12f} within {cut_tol:.1e} of the cut locus"
        )
    if s < 1e-6 and c < 0.0:
        # near half-turn: axis magnitudes from the symmetric part, signs
        # from the (tiny) skew part
        m = 0.5 * (r + r.T)
        d = np.clip((np.diag(m) - c) / (1.0 - c), 0.0, None)
        i = int(np.argmax(d))
        axis = (m[:, i] - c * np.eye(3)[:, i]) / (1.0 - c)
        axis = axis / max(math.sqrt(d[i]), 1e-300)
        axis = axis / np.linalg.norm(axis)
        if float(axis @ sv) < 0.0:
            axis = -axis
        return theta * _skew3(axis)
    if s < 1e-6:
        factor = 1.0 + theta**2 / 6.0 + 7.0 * theta**4 / 360.0
    else:
        factor = theta / s
    x = factor * _skew3(sv)
    return 0.5 * (x - x.T)


def _log_rot_general(r: np.ndarray, cut_tol: float) -> np.ndarray:
    lam = np.linalg.eigvals(r)
    theta_max = float(np.max(np.abs(np.arctan2(lam.imag, lam.real))))
    if theta_max >= math.pi - cut_tol:
        raise CutLocusError(
            f"rotation angle {theta_max:.12f} within {cut_tol:.1e} of the cut locus"
        )
    n = r.shape[0]
    x = r.copy()
    k = 0
    while np.linalg.norm(x - np.eye(n)) > 0.25:
        x = _denman_beavers_sqrt(x)
        k += 1
        if k > 60:
            raise SolverError("inverse scaling of rotation logarithm stalled")
    # Gregory series: log x = 2 * atanh(z) with z = (x - I)(x + I)^{-1}
    z = np.linalg.solve((x + np.eye(n)).T, (x - np.eye(n)).T).T
    z2 = z @ z
    term = z.copy()
    out = z.copy()
    m = 1
    while np.linalg.norm(term) > 1e-18 and m < 60:
        term = term @ z2
        m += 2
        out = out + term / m
    out = (2.0**(k + 1)) * out
    return 0.5 * (out - out.T)


def mat_log_rot(r, cut_tol: float = 1e-8) -> np.ndarray:
    """Principal logarithm of a rotation matrix (skew-symmetric result).

    Requires the largest rotation angle to be strictly below pi; raises
    CutLocusError within ``cut_tol`` of it. The 3x3 case uses the closed
    axis-angle form, larger sizes use inverse scaling and squaring.
    """
    r = np.asarray(r, dtype=float)
    _check_square(r)
    _check_rotation(r)
    if r.shape[0] == 3:
        return _log_rot3(r, cut_tol)
    return _log_rot_general(r, cut_tol)


def dexp(x, v) -> np.ndarray:
    """Directional derivative of the matrix exponential at x along v.

    Uses the block identity: the exponential of [[x, v], [0, x]] carries
    the derivative in its upper-right block. Accepts stacked input.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    x, v = np.broadcast_arrays(x, v)
    n = x.shape[-1]
    if x.shape[-2] != n:
        raise ValidationError("dexp expects square matrices")
    block = np.zeros(x.shape[:-2] + (2 * n, 2 * n))
    block[..., :n, :n] = x
    block[..., :n, n:] = v
    block[..., n:, n:] = x
    return _expm_general(block)[..., :n, n:]


# ---------------------------------------------------------------------------
# projected-gradient minimization on the unit sphere
# ---------------------------------------------------------------------------


@dataclass
class SphereMinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str = ""


def _orthonormal_rows(basis) -> np.ndarray:
    if basis is None:
        return np.zeros((0, 0))
    b = np.atleast_2d(np.asarray(basis, dtype=float))
    if b.size == 0:
        return np.zeros((0, b.shape[-1]))
    rows = []
    for row in b:
        w = row.copy()
        for u in rows:
            w -= (w @ u) * u
        n = np.linalg.norm(w)
        if n > 1e-12:
            rows.append(w / n)
    return np.array(rows) if rows else np.zeros((0, b.shape[1]))


def minimize_on_sphere(
    fun,
    grad,
    x0,
    constraint_basis=None,
    *,
    gtol: float = 1e-8,
    max_iter: int = 10_000,
    armijo: float = 1e-4,
    stall_limit: int = 120,
) -> SphereMinimizeResult:
    """Minimize a function over unit vectors orthogonal to a fixed basis.

    Projected gradient descent with Barzilai-Borwein step sizes and an
    Armijo backtracking line search; iterates are retracted by
    renormalization and re-projected onto the orthogonal complement of
    ``constraint_basis`` every step, so the constraints hold exactly.

    Hitting ``max_iter`` is not fatal: the best iterate found is returned
    with ``converged=False``. The best iterate is the one with the
    smallest projected-gradient norm among those that did not increase
    the objective.
    """
    x0 = np.asarray(x0, dtype=float)
    basis = _orthonormal_rows(constraint_basis)
    if basis.size and basis.shape[1] != x0.size:
        raise ValidationError("constraint basis dimension does not match x0")

    def feasible(z):
        if basis.size:
            z = z - basis.T @ (basis @ z)
        nz = np.linalg.norm(z)
        if nz < 1e-300:
            raise ValidationError("iterate collapsed into the constraint span")
        return z / nz

    def rgrad(z, g_amb):
        if basis.size:
            g_amb = g_amb - basis.T @ (basis @ g_amb)
        return g_amb - (g_amb @ z) * z

    x = feasible(x0)
    fx = float(fun(x))
    g = rgrad(x, np.asarray(grad(x), dtype=float))
    gn = float(np.linalg.norm(g))
    f0 = fx
    best = (gn, x.copy(), fx)
    hist = deque([fx], maxlen=5)
    dx = dg = None
    t = 1.0 / max(1.0, gn)
    stall = 0
    iterations = 0

    for iterations in range(1, max_iter + 1):
        if gn <= gtol:
            return SphereMinimizeResult(x, fx, gn, iterations - 1, True)
        if dx is not None:
            sy = float(dx @ dg)
            ss = float(dx @ dx)
            if sy > 1e-300:
                t = min(max(ss / sy, 1e-16), 1e16)
        f_ref = max(hist)
        slack = 1e-15 * max(abs(f_ref), 1e-300)
        accepted = False
        for _ in range(60):
            xn = feasible(x - t * g)
            fn = float(fun(xn))
            if np.isfinite(fn) and fn <= f_ref - armijo * t * gn * gn + slack:
                accepted = True
                break
            t *= 0.5
            if t < 1e-20:
                break
        if not accepted:
            break
        g_new = rgrad(xn, np.asarray(grad(xn), dtype=float))
        gn_new = float(np.linalg.norm(g_new))
        dx, dg = xn - x, g_new - g
        x, fx, g, gn = xn, fn, g_new, gn_new
        hist.append(fx)
        if gn < best[0] and fx <= f0 + slack:
            best = (gn, x.copy(), fx)
            stall = 0
        else:
            stall += 1
            if stall >= stall_limit:
                break

    gn_b, x_b, f_b = best
    converged = gn_b <= gtol
    msg = "" if converged else "returned best iterate before reaching gtol"
    return SphereMinimizeResult(x_b, f_b, gn_b, iterations, converged, msg)
