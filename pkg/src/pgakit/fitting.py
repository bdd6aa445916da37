"""Order-of-convergence fits and series-coefficient extraction.

Two small tools used throughout the experiments: an ordinary
least-squares fit of ln(value) against ln(scale), whose slope estimates
the order of a remainder term, and Richardson extrapolation on a
geometric scale ladder for reading a single Taylor coefficient off
exact function evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientGridError, SeriesExtractionUnstableError


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    window: tuple[float, float]

    def in_window(self, lo: float, hi: float) -> bool:
        return lo <= self.slope <= hi


def fit_loglog(scales, values, window=None) -> SlopeFit:
    """OLS fit of ln(values) vs ln(scales).

    Parameters
    ----------
    scales, values : array_like
        Positive abscissae and ordinates. Non-finite or non-positive
        entries are dropped (they carry no order information).
    window : (lo, hi), optional
        Restrict the fit to ``lo <= scale <= hi``.

    Returns
    -------
    SlopeFit with slope, intercept (of ln y), R^2 and the fitted window.
    """
    x = np.asarray(scales, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape:
        raise InsufficientGridError("scales and values must have the same length")
    mask = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if window is not None:
        lo, hi = window
        mask &= (x >= lo * (1 - 1e-12)) & (x <= hi * (1 + 1e-12))
    x, y = x[mask], y[mask]
    if x.size < 2:
        raise InsufficientGridError(
            f"need at least 2 usable grid points for a slope fit, got {x.size}"
        )
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        n_points=int(x.size),
        window=(float(x.min()), float(x.max())),
    )


def richardson_even(scales, values, stages=2):
    """Extrapolate ``values(eps) = c0 + c2*eps^2 + c4*eps^4 + ...`` to eps -> 0.

    ``scales`` must form a decreasing geometric ladder (constant ratio).
    Each stage eliminates the next even power. Returns ``(estimate,
    spread)`` where ``spread`` is the absolute difference between the two
    deepest entries of the final stage (an error proxy), or 0 when only
    one entry remains.
    """
    eps = np.asarray(scales, dtype=float)
    t = np.asarray(values, dtype=float).copy()
    if eps.ndim != 1 or eps.size != t.size:
        raise InsufficientGridError("scales and values must be 1-d and equal length")
    if eps.size < stages + 1:
        raise InsufficientGridError(
            f"need at least {stages + 1} ladder points for {stages} stages"
        )
    ratios = eps[:-1] / eps[1:]
    rho = float(ratios[0])
    if rho <= 1 or not np.allclose(ratios, rho, rtol=1e-10):
        raise InsufficientGridError("scales must form a decreasing geometric ladder")
    for m in range(1, stages + 1):
        f = rho ** (2 * m)
        t = (f * t[1:] - t[:-1]) / (f - 1.0)
    estimate = float(t[-1])
    spread = float(abs(t[-1] - t[-2])) if t.size >= 2 else 0.0
    return estimate, spread


def richardson_even_checked(scales, values, stages=2, rel_tol=1e-4, what="coefficient"):
    """Richardson extraction with a two-ladder consistency check.

    Runs the extrapolation on the full ladder and on the ladder with the
    deepest point dropped; raises SeriesExtractionUnstableError when the
    two estimates differ by more than ``rel_tol`` relative.
    """
    full, _ = richardson_even(scales, values, stages)
    part, _ = richardson_even(scales[:-1], values[:-1], stages)
    denom = max(abs(full), abs(part), 1e-300)
    rel = abs(full - part) / denom
    if rel > rel_tol and max(abs(full), abs(part)) > 1e-12:
        raise SeriesExtractionUnstableError(
            f"{what}: ladder estimates disagree by {rel:.3e} relative "
            f"({full:.6e} vs {part:.6e})"
        )
    return full, rel
