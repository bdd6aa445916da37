"""Command-line front end for the experiments and basic fitting tasks.

Subcommands
-----------
converge         direction-expansion convergence study (slopes near 2 / 4)
simulate-sphere  estimate-quality table over a concentration grid
altpga           group-side fitting comparison of the removal splits
indicators       resampled linear-difference indicator correlations
mean             intrinsic mean and variance of a dataset file
pga              exact fitted directions of a dataset file
project          per-point projection coefficients onto the leading subspace
expand           tangent covariance, correction matrix, corrected directions

Exit codes: 0 success, 2 invalid input or configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import format_float, load_dataset, save_dataset
from .errors import PgaKitError, ValidationError
from .experiments import (
    ExperimentConfig,
    run_altpga,
    run_converge,
    run_indicators,
    run_projection_converge,
    run_simulate_sphere,
    write_report,
)
from .manifolds import Point, TangentDataset, intrinsic_mean_raw
from .manifolds.rotations import load_rotations_csv
from .pga import exact_pga, expansion

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifold", choices=["sphere", "spd", "so"], default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--n-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--eps-grid", type=float, nargs="*", default=None)
    p.add_argument("--kappa-grid", type=float, nargs="*", default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--input", type=str, default=None)
    p.add_argument("--output", type=str, default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--no-recenter", action="store_true")
    p.add_argument(
        "--indicator-variant",
        choices=["component", "full", "squared"],
        default="component",
    )
    p.add_argument("--altpga-split", choices=["half", "left"], default="half")
    p.add_argument("--variance-ratio", type=float, default=20.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None, help="direction count / index")


_DEFAULTS = {
    "converge": {"manifold": "sphere", "dim": 10, "n_samples": 50, "runs": 5},
    "simulate-sphere": {"manifold": "sphere", "dim": 15, "n_samples": 100, "runs": 5},
    "altpga": {"manifold": "so", "dim": 3, "n_samples": 50, "runs": 20},
    "indicators": {"manifold": "spd", "dim": 3, "n_samples": 36, "runs": 20},
}


def _config(args, command: str) -> ExperimentConfig:
    d = _DEFAULTS.get(command, {})
    manifold = args.manifold or d.get("manifold", "sphere")
    dim = args.dim if args.dim is not None else d.get("dim", 10)
    if command == "converge" and args.manifold in ("spd", "so") and args.dim is None:
        dim = 3
    if command == "converge" and args.manifold in ("spd",) and args.n_samples is None:
        n_samples = 75
    else:
        n_samples = (
            args.n_samples if args.n_samples is not None else d.get("n_samples", 50)
        )
    kw = dict(
        manifold=manifold,
        dim=dim,
        radius=args.radius,
        n_samples=n_samples,
        seed=args.seed,
        eps_grid=tuple(args.eps_grid) if args.eps_grid else (),
        runs=args.runs if args.runs is not None else d.get("runs", 5),
        recenter=not args.no_recenter,
        indicator_variant=args.indicator_variant,
        altpga_split=args.altpga_split,
        variance_ratio=args.variance_ratio,
        scale=args.scale,
        output=args.output,
        fmt=args.format,
    )
    if args.kappa_grid:
        kw["kappa_grid"] = tuple(args.kappa_grid)
    if args.k is not None:
        kw["k_values"] = tuple(range(1, args.k + 1))
    return ExperimentConfig(**kw)


def _emit(report: dict, args) -> None:
    if args.output:
        write_report(report, args.output, args.format)
        print(f"report written to {args.output}")
    else:
        print(json.dumps(report, indent=1, sort_keys=True))


def _load_points(path: str):
    if path is None:
        raise ValidationError("--input is required for this subcommand")
    if path.endswith(".csv"):
        from .manifolds import SpecialOrthogonal

        points = load_rotations_csv(path)
        man = SpecialOrthogonal(3)
        mu = intrinsic_mean_raw(man, points)
        tangents = np.stack([man.log(mu, p) for p in points])
        return TangentDataset(Point(man, mu), tangents)
    return load_dataset(path)


def cmd_converge(args) -> int:
    cfg = _config(args, "converge")
    if args.projection_only:
        report = run_projection_converge(cfg)
    else:
        report = run_converge(cfg)
    _emit(report, args)
    bad = [s for s in report["slopes"] if not s["in_window"]]
    if bad:
        print(f"note: {len(bad)} slope(s) out of the expected window", file=sys.stderr)
    return EXIT_OK


def cmd_simulate_sphere(args) -> int:
    cfg = _config(args, "simulate-sphere")
    report = run_simulate_sphere(cfg)
    _emit(report, args)
    return EXIT_OK


def cmd_altpga(args) -> int:
    cfg = _config(args, "altpga")
    data = None
    if args.input:
        data = load_rotations_csv(args.input)
    report = run_altpga(cfg, data=data)
    _emit(report, args)
    return EXIT_OK


def cmd_indicators(args) -> int:
    cfg = _config(args, "indicators")
    data = None
    if args.input:
        ds = _load_points(args.input)
        man = ds.manifold
        data = [man.exp(ds.mu.value, q) for q in ds.tangents]
        cfg = ExperimentConfig(
            **{**cfg.__dict__, "manifold": man.kind, "dim": getattr(man, "n", cfg.dim)}
        )
    report = run_indicators(cfg, data=data)
    _emit(report, args)
    return EXIT_OK


def cmd_mean(args) -> int:
    ds = _load_points(args.input)
    man = ds.manifold
    mu = ds.mu.value
    var = float(np.mean([man.norm(mu, q) ** 2 for q in ds.tangents]))
    report = {
        "meta": {"experiment": "mean", "manifold": man.kind, "params": man.params()},
        "rows": [
            {
                "mu": [format_float(x) for x in mu.ravel()],
                "intrinsic_variance": format_float(var),
                "n_points": int(ds.n),
            }
        ],
    }
    _emit(report, args)
    return EXIT_OK


def cmd_pga(args) -> int:
    ds = _load_points(args.input)
    man = ds.manifold
    k_max = args.k or min(2, man.dim) if man.kind != "sphere" else (args.k or man.dim - 1)
    fit = exact_pga(
        [man.exp(ds.mu.value, q) for q in ds.tangents],
        k_max,
        manifold=man,
        mu=ds.mu.value,
    )
    rows = [
        {
            "k": i + 1,
            "direction": [format_float(x) for x in d.ravel()],
            "residual": format_float(r),
            "converged": diag["converged"],
        }
        for i, (d, r, diag) in enumerate(
            zip(fit.directions, fit.residuals, fit.diagnostics)
        )
    ]
    report = {
        "meta": {"experiment": "pga", "manifold": man.kind, "params": man.params(),
                 "mu": [format_float(x) for x in ds.mu.value.ravel()]},
        "rows": rows,
    }
    _emit(report, args)
    return EXIT_OK


def cmd_project(args) -> int:
    ds = _load_points(args.input)
    man = ds.manifold
    k = args.k or 1
    from .pga import covariance

    cov = covariance(ds)
    basis = np.stack([cov.direction(a) for a in range(1, k + 1)])
    rows = []
    for i, q in enumerate(ds.tangents):
        p = man.exp(ds.mu.value, q)
        res = man.project_span(ds.mu.value, basis, p)
        linear = [man.inner(ds.mu.value, b, q) for b in basis]
        rows.append(
            {
                "point": i,
                "coefficients": [format_float(c) for c in res.coeffs],
                "tangent_coefficients": [format_float(c) for c in linear],
                "residual_sq": format_float(res.value),
                "nonunique": res.nonunique,
            }
        )
    report = {
        "meta": {"experiment": "project", "manifold": man.kind,
                 "params": man.params(), "k": k},
        "rows": rows,
    }
    _emit(report, args)
    return EXIT_OK


def cmd_expand(args) -> int:
    ds = _load_points(args.input)
    man = ds.manifold
    k_max = args.k
    eps = ds.epsilon if ds.epsilon is not None else 1.0
    exp_res = expansion(ds, k_max=k_max)
    rows = [
        {
            "k": k,
            "eigenvalue": format_float(exp_res.values[k - 1]),
            "leading": [format_float(x) for x in exp_res.leading(k).ravel()],
            "corrected": [
                format_float(x) for x in exp_res.corrected(k, eps).ravel()
            ]
            if k <= exp_res.k_max
            else None,
        }
        for k in range(1, exp_res.values.size + 1)
    ]
    report = {
        "meta": {
            "experiment": "expand",
            "manifold": man.kind,
            "params": man.params(),
            "epsilon": format_float(eps),
            "correction_matrix": [
                [format_float(x) for x in row] for row in exp_res.correction
            ],
        },
        "rows": rows,
    }
    _emit(report, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pgakit",
        description="geodesic principal component fitting and its series diagnostics",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    handlers = {}
    for name, fn, extra in (
        ("converge", cmd_converge, True),
        ("simulate-sphere", cmd_simulate_sphere, False),
        ("altpga", cmd_altpga, False),
        ("indicators", cmd_indicators, False),
        ("mean", cmd_mean, False),
        ("pga", cmd_pga, False),
        ("project", cmd_project, False),
        ("expand", cmd_expand, False),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "converge":
            p.add_argument(
                "--projection-only",
                action="store_true",
                help="study projection coefficients instead of directions",
            )
        handlers[name] = fn
    parser.set_defaults(handlers=handlers)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = args.handlers[args.command]
    try:
        return handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PgaKitError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
