"""Dataset synthesis and file interchange.

Synthesis follows the experiments' recipes: tangent coordinates drawn
from independent normals whose variances decay geometrically across
coordinates (anisotropic, distinct covariance eigenvalues), and the
log-normal-style sphere sampler that exponentiates normal tangent draws
with a fixed anisotropic covariance.

Files: a JSON schema carrying either a base point plus tangents or a
bare point list (the loader then computes the intrinsic mean and logs),
and the rotation CSV formats from :mod:`pgakit.manifolds.rotations`.
Floats are serialized with 17 significant digits so reports round-trip
bit-exactly.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import SchemaError, ValidationError
from .manifolds import Point, TangentDataset, make_manifold
from .manifolds.base import Manifold, intrinsic_mean_raw

__all__ = [
    "substream",
    "anisotropic_variances",
    "sample_tangent_coords",
    "sample_dataset",
    "sphere_covariance",
    "sample_sphere_lognormal",
    "save_dataset",
    "load_dataset",
    "format_float",
]


# ---------------------------------------------------------------------------
# deterministic random streams
# ---------------------------------------------------------------------------


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent, reproducible generator for (seed, key...) labels.

    Counter-based Philox streams keyed by the seed and a spawn key, so
    runs and grid points can execute in any order with identical output.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def anisotropic_variances(dim: int, ratio: float = 20.0) -> np.ndarray:
    """Geometrically decaying variances from 1 down to 1/ratio."""
    if dim < 1:
        raise ValidationError("dimension must be positive")
    if ratio <= 1:
        raise ValidationError("variance ratio must exceed 1")
    return np.geomspace(1.0, 1.0 / ratio, dim)


def sample_tangent_coords(rng, dim: int, n: int, ratio: float = 20.0) -> np.ndarray:
    """Normal tangent coordinates with per-coordinate variances (N, dim)."""
    sd = np.sqrt(anisotropic_variances(dim, ratio))
    return rng.standard_normal((n, dim)) * sd


def sample_dataset(
    man: Manifold, rng, n: int, *, mu=None, ratio: float = 20.0, scale: float = 1.0
) -> TangentDataset:
    """Anisotropic tangent dataset at mu (identity / first canonical point)."""
    if mu is None:
        mu = _default_base(man)
    coords = scale * sample_tangent_coords(rng, man.dim, n, ratio)
    tangents = np.stack([man.tangent_from_coords(mu, c) for c in coords])
    return TangentDataset(Point(man, mu), tangents)


def _default_base(man: Manifold):
    if man.kind == "sphere":
        mu = np.zeros(man.n + 1)
        mu[0] = man.r
        return mu
    return np.eye(man.n)


def sphere_covariance(rng, dim: int, ratio: float = 20.0, trace: float = None):
    """Random covariance with geometric spectrum, ratio:1 largest to smallest.

    Normalized so that its trace equals ``trace`` (default (pi/2)^2, which
    puts the root-mean-square tangent norm near pi/2 at unit scale: close
    to the uniform-distribution value while keeping draws inside the
    injectivity radius).
    """
    lam = anisotropic_variances(dim, ratio)
    if trace is None:
        trace = (math.pi / 2.0) ** 2
    lam = lam * (trace / lam.sum())
    a = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return (q * lam) @ q.T, lam, q


def sample_sphere_lognormal(man, rng, n: int, kappa: float, cov_eig, *, mu=None):
    """Points ``exp_mu(q)`` with q normal of covariance kappa * Sigma.

    ``cov_eig`` is the (eigenvalues, eigenvectors) pair of Sigma in
    tangent coordinates. Draws whose norm reaches 99% of the injectivity
    radius are rejected and redrawn (rare; keeps the dataset valid).
    """
    if man.kind != "sphere":
        raise ValidationError("log-normal sampler is defined on the sphere")
    if mu is None:
        mu = _default_base(man)
    lam, q = cov_eig
    sd = np.sqrt(kappa * lam)
    limit = 0.99 * math.pi * man.r
    out = []
    guard = 0
    while len(out) < n:
        z = q @ (sd * rng.standard_normal(man.dim))
        if np.linalg.norm(z) < limit:
            out.append(z)
        else:
            guard += 1
            if guard > 100 * n:
                raise ValidationError("rejection sampler stuck; reduce kappa")
    coords = np.stack(out)
    tangents = np.stack([man.tangent_from_coords(mu, c) for c in coords])
    points = [man.exp(mu, t) for t in tangents]
    return points, tangents, mu


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def format_float(x: float) -> float:
    """Round-trip float through its 17-significant-digit decimal form."""
    return float(f"{float(x):.17g}")


def _flatten(man: Manifold, arr: np.ndarray) -> list:
    return [format_float(x) for x in np.asarray(arr, dtype=float).ravel()]


def _unflatten(man: Manifold, values, what: str, field: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    want = int(np.prod(man.point_shape))
    if arr.size != want:
        raise SchemaError(
            f"{what} has {arr.size} entries, expected {want}", field=field
        )
    return arr.reshape(man.point_shape)


def save_dataset(path, dataset: TangentDataset) -> None:
    """Write base point + tangents as JSON (matrices flattened row-major)."""
    man = dataset.manifold
    payload = {
        "manifold": man.kind,
        "params": man.params(),
        "mu": _flatten(man, dataset.mu.value),
        "tangents": [_flatten(man, q) for q in dataset.tangents],
    }
    if dataset.epsilon is not None:
        payload["epsilon"] = format_float(dataset.epsilon)
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def save_points(path, man: Manifold, points) -> None:
    """Write a bare point list as JSON."""
    payload = {
        "manifold": man.kind,
        "params": man.params(),
        "points": [_flatten(man, p) for p in points],
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def load_dataset(path) -> TangentDataset:
    """Read a dataset file; point-only files are centered at their mean.

    Invariant violations are reported with the offending field.
    """
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise SchemaError("top level must be an object")
    kind = payload.get("manifold")
    if kind is None:
        raise SchemaError("missing manifold kind", field="manifold")
    params = payload.get("params", {})
    try:
        man = make_manifold(kind, **params)
    except (TypeError, ValidationError) as exc:
        raise SchemaError(f"bad manifold parameters: {exc}", field="params") from exc

    if "tangents" in payload:
        if "mu" not in payload:
            raise SchemaError("tangents given without a base point", field="mu")
        mu = _unflatten(man, payload["mu"], "mu", "mu")
        try:
            man.check_point(mu)
        except ValidationError as exc:
            raise SchemaError(str(exc), field="mu") from exc
        tangents = []
        for i, row in enumerate(payload["tangents"]):
            q = _unflatten(man, row, f"tangents[{i}]", f"tangents[{i}]")
            if man.kind in ("spd", "so"):
                q = _tangent_cleanup(man, mu, q)
            try:
                man.check_tangent(mu, q)
            except ValidationError as exc:
                raise SchemaError(str(exc), field=f"tangents[{i}]") from exc
            tangents.append(q)
        eps = payload.get("epsilon")
        try:
            return TangentDataset(Point(man, mu), np.stack(tangents), eps)
        except ValidationError as exc:
            raise SchemaError(str(exc), field="tangents") from exc

    if "points" in payload:
        points = []
        for i, row in enumerate(payload["points"]):
            p = _unflatten(man, row, f"points[{i}]", f"points[{i}]")
            try:
                man.check_point(p)
            except ValidationError as exc:
                raise SchemaError(str(exc), field=f"points[{i}]") from exc
            points.append(p)
        if not points:
            raise SchemaError("empty point list", field="points")
        mu = intrinsic_mean_raw(man, points)
        tangents = np.stack([man.log(mu, p) for p in points])
        return TangentDataset(Point(man, mu), tangents)

    raise SchemaError("need either tangents or points", field="tangents")


def _tangent_cleanup(man, mu, q):
    # sym/skew structure survives the 17-digit round trip, but re-project
    # so validation tolerances are not eaten by serialization noise
    return man.tangent_project(mu, q)
