"""Central numerical tolerances.

All invariant checks across the package read their defaults from one
frozen record so they stay consistent; pass a modified copy to an
operation to tighten or relax an individual check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    sym_rel: float = 1e-12            # symmetry / skew-symmetry, relative to |A|
    unit_norm: float = 1e-10          # point and tangent normalization checks
    orthonormal: float = 1e-10        # basis orthonormality
    eigen_rel: float = 1e-9           # eigenpair residual, relative to |A|
    eigen_degenerate_rel: float = 1e-10  # eigenvalue-gap diagnostic, relative to |A|
    roundtrip: float = 1e-9           # exp/log round trips
    stationarity: float = 1e-9        # intrinsic-mean gradient norm
    gradient: float = 1e-8            # default projected-gradient target
    spectrum_gap_rel: float = 1e-8    # covariance gap floor, relative to beta_1
    cut_locus: float = 1e-8           # distance from the cut locus treated as on it
    nonunique_objective: float = 1e-6  # projection tie detection


DEFAULT_TOLS = Tolerances()


def with_overrides(**kwargs) -> Tolerances:
    """Copy of the defaults with the given fields replaced."""
    return replace(DEFAULT_TOLS, **kwargs)
