"""Command-line front end: reproducible pipelines with CSV/JSON artifacts.

Subcommands: kernel, verify-algebra, correlate, sample, estimate, functional.
Exit codes: 0 success, 1 validation/tolerance failure, 2 usage error.  Every
JSON artifact embeds the fully resolved configuration; timestamps live in a
separate metadata field so payloads stay byte-reproducible under a fixed seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import verify_algebra
from .correlations import correlation
from .errors import FreeGasError, ParameterError
from .functionals import (
    box_indicator,
    characteristic_series,
    empirical_characteristic,
    fredholm_value,
    gaussian_bump,
    tabulated_function,
)
from .kernels import (
    Kernel,
    build_kernel,
    density_from_config,
    require_valid,
    validate_density,
    write_kernel_csv,
)
from .samplers import (
    GridDiscretization,
    Window,
    count_statistics,
    discretize_kernel,
    estimate_intensity,
    estimate_pair_correlation,
    read_points_csv,
    run_replicas,
    write_points_csv,
)


def _floats(text):
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _add_density_args(p):
    p.add_argument("--config", "--density", dest="config", help="density config file (key = value lines)")
    p.add_argument("--family", choices=["fermi_dirac", "zero_temp", "bose", "tabulated"])
    p.add_argument("--statistics", choices=["fermion", "boson"])
    p.add_argument("--d", type=int, default=None, help="spatial dimension")
    p.add_argument("--beta", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--kf", type=float)
    p.add_argument("--z", type=float)
    p.add_argument("--grid", help="comma-separated radii for a tabulated density")
    p.add_argument("--values", help="comma-separated khat values for a tabulated density")


def _density_of(args):
    if args.config:
        dens = density_from_config(args.config)
    elif args.family:
        entries = {"family": args.family, "d": str(args.d if args.d is not None else 3)}
        if args.statistics:
            entries["statistics"] = args.statistics
        for key in ("beta", "mu", "mass", "kf", "z", "grid", "values"):
            val = getattr(args, key)
            if val is not None and not (key == "mass" and args.family != "fermi_dirac"):
                entries[key] = str(val)
        dens = density_from_config(entries)
    else:
        raise ParameterError("give either --config or --family with its parameters")
    require_valid(dens)
    return dens


def _density_config_dict(dens):
    out = {"family": dens.family, "statistics": dens.statistics, "d": dens.d}
    for key in ("beta", "mu", "mass", "kf", "z"):
        val = getattr(dens, key)
        if val is not None:
            out[key] = val
    if dens.grid is not None:
        out["grid"] = list(map(float, dens.grid))
        out["values"] = list(map(float, dens.values))
    return out


def _write_json(payload, out):
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _with_metadata(config, results):
    return {
        "config": config,
        "results": results,
        "metadata": {"timestamp": datetime.now(timezone.utc).isoformat(), "version": __version__},
    }


def _window_of(args):
    return Window(tuple(_floats(args.window)))


def _grid_of(args, window):
    cells = [int(c) for c in _floats(args.cells)]
    if len(cells) == 1 and window.d > 1:
        cells = cells * window.d
    return GridDiscretization(window, tuple(cells))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_kernel(args):
    dens = _density_of(args)
    if args.validate:
        report = validate_density(dens)
        payload = _with_metadata(
            _density_config_dict(dens),
            {
                "ok": report.ok,
                "min_value": report.min_value,
                "max_value": report.max_value,
                "bound": report.bound,
                "l1_norm": report.l1_norm,
                "violations": report.violations,
                "messages": report.messages,
            },
        )
        _write_json(payload, args.out if args.out else None)
        return 0 if report.ok else 1
    kern = build_kernel(dens, strategy=args.strategy)
    if args.scan:
        start, stop, num = args.scan.split(":")
        xs = np.zeros((int(num), dens.d))
        xs[:, 0] = np.linspace(float(start), float(stop), int(num))
        if not args.out:
            raise ParameterError("--scan needs --out for the CSV")
        write_kernel_csv(kern, xs, args.out)
        return 0
    if not args.at:
        raise ParameterError("give --at, --scan, or --validate")
    for spec in args.at:
        vals = _floats(spec)
        if len(vals) == 1 and dens.d > 1:
            vals = vals * dens.d
        if len(vals) != dens.d:
            raise ParameterError(f"--at needs {dens.d} components")
        print(f"{kern.evaluate(np.asarray(vals)):.10g}")
    return 0


def _cmd_verify_algebra(args):
    report = verify_algebra(
        m=args.m, seed=args.seed, draws=args.draws, boson_m=args.boson_m, n_max=args.nmax
    )
    config = {
        "m": args.m,
        "seed": args.seed,
        "draws": args.draws,
        "boson_m": args.boson_m,
        "n_max": args.nmax,
    }
    _write_json(_with_metadata(config, {"checks": report}), args.out)
    failed = [r["check"] for r in report if r.get("gate") and not r.get("passed", True)]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_correlate(args):
    dens = _density_of(args)
    kern = build_kernel(dens)
    rows, header = [], None
    with open(args.points, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            if k == 0:
                try:
                    [float(v) for v in row]
                except ValueError:
                    header = row
                    continue
            rows.append([float(v) for v in row])
    out_rows = []
    for row in rows:
        if len(row) % dens.d:
            raise ParameterError(f"row length {len(row)} is not a multiple of d={dens.d}")
        pts = np.asarray(row, dtype=float).reshape(-1, dens.d)
        out_rows.append(row + [correlation(kern, pts).value])
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(header + ["value"])
        for row in out_rows:
            writer.writerow([f"{v:.17g}" for v in row])
    return 0


def _resolved_sampling_config(args, dens, window, grid):
    return {
        "statistics": args.statistics or dens.statistics,
        "density": _density_config_dict(dens),
        "window": list(window.extents),
        "cells": list(grid.cells),
        "replicas": args.replicas,
        "seed": args.seed,
    }


def _cmd_sample(args):
    dens = _density_of(args)
    statistics = args.statistics or dens.statistics
    window = _window_of(args)
    grid = _grid_of(args, window)
    if window.d != dens.d:
        raise ParameterError("window dimension disagrees with the density")
    kern = build_kernel(dens)
    configs, backend = run_replicas(
        statistics, grid, args.replicas, args.seed, kernel=kern, density=dens
    )
    write_points_csv(configs, args.out_points)
    mean, var = count_statistics(configs)
    results = {
        "mean_count": mean,
        "count_variance": var,
        "kappa0": kern.kappa0,
        "expected_mean_count": kern.kappa0 * window.volume,
    }
    if statistics == "fermion":
        results["eigenvalue_clamp"] = backend.clamp_magnitude
        results["kernel_trace"] = backend.trace
    else:
        results["frequency_nodes"] = backend.n_freq
    payload = _with_metadata(_resolved_sampling_config(args, dens, window, grid), results)
    if args.out_summary:
        _write_json(payload, args.out_summary)
    return 0


def _cmd_estimate(args):
    window = _window_of(args)
    configs = read_points_csv(args.points, window)
    intensity = args.intensity
    kern = None
    if intensity is None:
        if not (args.config or args.family):
            raise ParameterError("give --intensity or a density for the normalization")
        kern = build_kernel(_density_of(args))
        intensity = kern.kappa0
    inten = estimate_intensity(configs, window, bins=args.bins)
    edges = np.linspace(0.0, args.rmax, args.rbins + 1)
    pc = estimate_pair_correlation(configs, window, edges, intensity)
    results = {
        "replicas": len(configs),
        "intensity_global": inten.global_mean,
        "intensity_global_stderr": inten.global_stderr,
        "intensity_edges": list(inten.edges),
        "intensity_mean": list(inten.mean),
        "intensity_stderr": list(inten.stderr),
        "g2_edges": list(pc.edges),
        "g2": [v if np.isfinite(v) else None for v in pc.g],
        "g2_stderr": list(pc.stderr),
        "g2_pair_counts": list(pc.pair_counts),
        "normalizing_intensity": intensity,
    }
    for spec in args.f or []:
        fv = empirical_characteristic(configs, parse_test_function(spec))
        results.setdefault("empirical_characteristic", []).append(
            {"f": spec, "re": fv.value.real, "im": fv.value.imag, "error": fv.error}
        )
    config = {
        "points": args.points,
        "window": list(window.extents),
        "bins": args.bins,
        "rmax": args.rmax,
        "rbins": args.rbins,
    }
    _write_json(_with_metadata(config, results), args.out)
    return 0


def parse_test_function(spec):
    """Parse 'kind:key=val;key=val' with comma-separated vector values."""
    kind, _, rest = spec.partition(":")
    params = {}
    for item in rest.split(";"):
        if not item.strip():
            continue
        key, _, val = item.partition("=")
        params[key.strip()] = _floats(val)
    if kind == "gaussian":
        return gaussian_bump(params["center"], params["width"][0], params["amplitude"][0])
    if kind == "indicator":
        amp = params.get("amplitude", [1.0])[0]
        return box_indicator(params["lo"], params["hi"], amp)
    if kind == "tabulated":
        return tabulated_function(params["grid"], params["values"])
    raise ParameterError(f"unknown test-function kind {kind!r}")


def _cmd_functional(args):
    dens = _density_of(args)
    statistics = args.statistics or dens.statistics
    window = _window_of(args)
    grid = _grid_of(args, window)
    kern = build_kernel(dens)
    fn = parse_test_function(args.f)
    methods = ["series", "fredholm", "empirical"] if args.method == "all" else [args.method]
    results = {}
    disc = None
    for method in methods:
        if method == "series":
            fv = characteristic_series(kern, fn, grid, args.nmax, statistics, seed=args.seed)
        elif method == "fredholm":
            disc = disc or discretize_kernel(kern, grid)
            fv = fredholm_value(disc, fn, statistics)
        else:
            configs, _ = run_replicas(
                statistics, grid, args.replicas, args.seed, kernel=kern, density=dens
            )
            fv = empirical_characteristic(configs, fn)
        results[method] = {
            "re": fv.value.real,
            "im": fv.value.imag,
            "error": fv.error,
            "detail": fv.detail,
        }
    config = _resolved_sampling_config(args, dens, window, grid)
    config.update({"f": args.f, "nmax": args.nmax, "method": args.method})
    _write_json(_with_metadata(config, results), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="freegas",
        description="fermion/boson point processes of free gases: kernels, exact algebra checks, sampling, functionals",
    )
    parser.add_argument("--version", action="version", version=f"freegas {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="evaluate or validate a kernel / momentum density")
    _add_density_args(p)
    p.add_argument("--at", action="append", help="evaluate kappa at a point (comma-separated components)")
    p.add_argument("--scan", help="start:stop:num scan along the first axis (CSV via --out)")
    p.add_argument("--strategy", choices=["closed_form", "quadrature"])
    p.add_argument("--validate", action="store_true", help="emit a density validation report")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("verify-algebra", help="machine-precision checks of the field algebra")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--boson-m", type=int, default=2)
    p.add_argument("--nmax", type=int, default=6, help="boson occupation cutoff")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify_algebra)

    p = sub.add_parser("correlate", help="append det/per correlation values to point tuples")
    _add_density_args(p)
    p.add_argument("--points", required=True, help="CSV of flattened point tuples")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("sample", help="draw configurations of the process in a window")
    _add_density_args(p)
    p.add_argument("--window", required=True, help="comma-separated extents")
    p.add_argument("--cells", default="512", help="cells per axis")
    p.add_argument("--replicas", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-points", required=True)
    p.add_argument("--out-summary")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="empirical intensity and pair correlation from a points CSV")
    _add_density_args(p)
    p.add_argument("--points", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--rmax", type=float, default=3.0)
    p.add_argument("--rbins", type=int, default=12)
    p.add_argument("--intensity", type=float, help="normalizing intensity (default kappa0 of the density)")
    p.add_argument("--f", action="append", help="also report the empirical characteristic value of this test function")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("functional", help="characteristic functional by series/fredholm/empirical routes")
    _add_density_args(p)
    p.add_argument("--window", required=True)
    p.add_argument("--cells", default="512")
    p.add_argument("--f", required=True, help="test function, e.g. gaussian:center=5;width=0.5;amplitude=0.6")
    p.add_argument("--method", choices=["series", "fredholm", "empirical", "all"], default="all")
    p.add_argument("--nmax", type=int, default=3)
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_functional)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FreeGasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
