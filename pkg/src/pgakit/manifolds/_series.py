"""Scale-series formulas shared by the two matrix geometries.

The positive-definite cone and the rotation group both have the matrix
exponential as the geodesic map at the identity, and metrics that are
opposite-signed multiples of the trace pairing:

    <X, Y> = sign * tr(X Y) / 2      (sign = +1 SPD, -1 rotations)

with curvature operator R(x, y)z = [z, [x, y]] (the normalization all
series coefficients in this package are written against). Every
expansion below therefore takes the metric sign as a parameter; the
geometry modules wrap them with their fixed sign.

All inputs are tangent matrices at the identity (symmetric for the SPD
cone, skew-symmetric for rotations). Formulas are stated per the scaled
family ``p_i(eps) = exp(eps * q_i)``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

__all__ = [
    "trace_inner",
    "commutator",
    "curvature_pairing",
    "projection_coeff_series",
    "subspace_coeff_series",
    "quartic_objective_coeff",
    "quartic_subspace_coeff",
    "alpha1_trace",
    "alpha1_curvature",
    "alpha_quartic",
    "residual_quartic_drop",
]


def trace_inner(a, b, sign: int) -> float:
    """Metric pairing ``sign * tr(a b) / 2`` at the identity."""
    return sign * 0.5 * float(np.tensordot(a, b.T, axes=2))


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def curvature_pairing(x, y, w, z, sign: int) -> float:
    """<R(x, y)w, z> with the commutator curvature operator."""
    return trace_inner(commutator(w, commutator(x, y)), z, sign)


def projection_coeff_series(q, v, sign: int):
    """Linear and cubic coefficients of the geodesic projection coefficient.

    For ``p(eps) = exp(eps q)`` projected onto the geodesic through the
    identity with unit direction v, the minimizing coefficient expands as
    ``t1*eps + t3*eps^3 + O(eps^5)`` with

        t1 = <q, v>,
        t3 = <q, v> <R(q, v)v, q> / 12.
    """
    t1 = trace_inner(q, v, sign)
    t3 = t1 * curvature_pairing(q, v, v, q, sign) / 12.0
    return t1, t3


def subspace_coeff_series(q, basis, sign: int):
    """Projection-coefficient series onto a k-dimensional subspace.

    ``basis`` is a stack of orthonormal tangents. Returns ``(t1, t3)``
    arrays of length k: coefficient a expands as ``t1[a]*eps +
    t3[a]*eps^3 + O(eps^5)`` where

        t1[a] = <q, b_a>,
        t3[a] = <R(q, b_a) X1, q> / 12,   X1 = sum_j t1[j] b_j.

    For k = 1 this reduces to :func:`projection_coeff_series`.
    """
    basis = np.asarray(basis, dtype=float)
    t1 = np.array([trace_inner(q, b, sign) for b in basis])
    x1 = np.tensordot(t1, basis, axes=1)
    t3 = np.array(
        [curvature_pairing(q, b, x1, q, sign) / 12.0 for b in basis]
    )
    return t1, t3


def quartic_objective_coeff(tangents, v, sign: int) -> float:
    """Quartic scale coefficient of the single-direction residual objective.

    Trace form (the metric sign multiplies the odd pairing count):

        f4 = sign/(48 N) * sum_i tr(q_i v)^2 { tr(q_i^2 v^2) - tr(q_i v q_i v) }.
    """
    total = 0.0
    for q in tangents:
        qv = q @ v
        t = float(np.trace(qv))
        total += t * t * float(np.trace(q @ q @ v @ v) - np.trace(qv @ qv))
    return sign * total / (48.0 * len(tangents))


def quartic_subspace_coeff(tangents, basis, sign: int) -> float:
    """Quartic coefficient of the residual objective for a whole subspace.

    Invariant form: with P_i the tangent projection of q_i onto the span,

        g4 = -(1/(12 N)) sum_i <R(q_i, P_i) P_i, q_i>.

    Reduces to :func:`quartic_objective_coeff` for a single direction;
    serves as the analytic cross-check of the ladder-extracted values.
    """
    basis = np.asarray(basis, dtype=float)
    total = 0.0
    for q in tangents:
        c = np.array([trace_inner(q, b, sign) for b in basis])
        p = np.tensordot(c, basis, axes=1)
        total += curvature_pairing(q, p, p, q, sign)
    return -total / (12.0 * len(tangents))


def alpha1_trace(tangents, u1, uj, sign: int) -> float:
    """First-direction sensitivity coefficient, trace form.

    alpha_{1,j} = sign/(48 N) * sum_i [
        tr(q u1)^2 tr(q^2 u1 uj + q^2 uj u1 - 2 q u1 q uj)
        + 2 tr(q u1) tr(q uj) tr(q^2 u1^2 - (q u1)^2) ].
    """
    total = 0.0
    for q in tangents:
        q2 = q @ q
        qu1 = q @ u1
        quj = q @ uj
        t1 = float(np.trace(qu1))
        tj = float(np.trace(quj))
        inner1 = float(
            np.trace(q2 @ u1 @ uj) + np.trace(q2 @ uj @ u1) - 2.0 * np.trace(qu1 @ quj)
        )
        inner2 = float(np.trace(q2 @ u1 @ u1) - np.trace(qu1 @ qu1))
        total += t1 * t1 * inner1 + 2.0 * t1 * tj * inner2
    return sign * total / (48.0 * len(tangents))


def alpha1_curvature(tangents, u1, uj, sign: int) -> float:
    """First-direction sensitivity coefficient, curvature-tensor form.

    Numerically identical to :func:`alpha1_trace`; kept as an independent
    route for cross-checking:

        alpha_{1,j} = -(1/(6N)) sum_i [ <q,u1>^2 R(q,u1,uj,q)
                                        + <q,u1><q,uj> R(q,u1,u1,q) ].
    """
    total = 0.0
    for q in tangents:
        c1 = trace_inner(q, u1, sign)
        cj = trace_inner(q, uj, sign)
        total += c1 * c1 * curvature_pairing(q, u1, uj, q, sign)
        total += c1 * cj * curvature_pairing(q, u1, u1, q, sign)
    return -total / (6.0 * len(tangents))


def alpha_quartic(tangents, prior, uk, uj, sign: int) -> float:
    """Directional derivative of the subspace quartic coefficient.

    Analytic form of ``d g_{k,4} at u_k towards u_j`` with the earlier
    directions replaced by ``prior`` (stack, possibly empty):

        alpha_{k,j} = -(1/(6N)) sum_i <R(q, D_i) P_i, q>,
        P_i = proj of q onto span(prior + [u_k]),
        D_i = <q,uj> u_k + <q,uk> u_j.
    """
    prior = np.asarray(prior, dtype=float).reshape((-1,) + uk.shape)
    basis = np.concatenate([prior, uk[None]], axis=0)
    total = 0.0
    for q in tangents:
        c = np.array([trace_inner(q, b, sign) for b in basis])
        p = np.tensordot(c, basis, axes=1)
        d = trace_inner(q, uj, sign) * uk + trace_inner(q, uk, sign) * uj
        total += curvature_pairing(q, d, p, q, sign)
    return -total / (6.0 * len(tangents))


def residual_quartic_drop(tangents, v0, v2, sign: int) -> float:
    """Scale^6 contribution of the quartic objective term to the residual gap.

    This is the coefficient of the difference ``f4(v0) - f4(v(eps))``
    when the fitted direction expands as ``v0 + v2 eps^2 + ...``:

        sign/(48 N) sum_i [ tr(q v0)^2 tr(2 q v0 q v2 - q^2 v0 v2 - q^2 v2 v0)
                            + 2 tr(q v0) tr(q v2) tr((q v0)^2 - q^2 v0^2) ].
    """
    if v0.shape != v2.shape:
        raise ValidationError("direction terms must share one shape")
    total = 0.0
    for q in tangents:
        q2 = q @ q
        qv0 = q @ v0
        qv2 = q @ v2
        t0 = float(np.trace(qv0))
        t2 = float(np.trace(qv2))
        inner1 = float(
            2.0 * np.trace(qv0 @ qv2) - np.trace(q2 @ v0 @ v2) - np.trace(q2 @ v2 @ v0)
        )
        inner2 = float(np.trace(qv0 @ qv0) - np.trace(q2 @ v0 @ v0))
        total += t0 * t0 * inner1 + 2.0 * t0 * t2 * inner2
    return sign * total / (48.0 * len(tangents))
