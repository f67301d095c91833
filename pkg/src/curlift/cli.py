"""Command-line front end: run the shipped experiments and emit results.

Subcommands: brachistochrone | denoise | stereo | register | selftest.
Exit codes: 0 ok, 2 usage error, 3 input error, 4 solver divergence.
"""

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .formats import (
    FormatError,
    read_config,
    read_cost_volume,
    read_pgm,
    read_ppm,
    to_uint8,
    write_csv,
    write_pgm,
    write_report,
)
from .lifting import CostVolume
from .problems import (
    build_brachistochrone,
    build_denoise,
    build_registration,
    build_scalar_lifting,
    cycloid_through,
    extract_map,
    extract_scalar,
    fiber_concentration,
    warm_start,
)
from .solver import SolverConfig, SolverDivergence, pdhg_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_DIVERGED = 4


class InputError(Exception):
    """Invalid or missing input data."""


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------


def _parse_pair(text, cast, name):
    parts = str(text).replace("x", ",").split(",")
    if len(parts) != 2:
        raise InputError(f"{name} must be two values, got {text!r}")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError:
        raise InputError(f"{name} must be two {cast.__name__}s, got {text!r}")


def _merge_config(args, defaults):
    """Resolve option values: CLI flag > config file > default."""
    file_cfg = {}
    if args.config:
        try:
            file_cfg = read_config(args.config)
        except FileNotFoundError:
            raise InputError(f"config file not found: {args.config}")
    out = {}
    for key, (cast, default) in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
        elif key in file_cfg:
            try:
                out[key] = cast(file_cfg[key])
            except ValueError:
                raise InputError(
                    f"config value for {key} is not a {cast.__name__}: "
                    f"{file_cfg[key]!r}")
        else:
            out[key] = default
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    return out


_SOLVER_KEYS = {
    "max_iters": (int, 50_000),
    "tol": (float, 1e-4),
    "check_every": (int, 50),
}


def _solver_config(cfg):
    return SolverConfig(max_iters=cfg["max_iters"], tol=cfg["tol"],
                        check_every=cfg["check_every"])


def _add_common(p):
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--check-every", dest="check_every", type=int)


def _outdir(cfg_out):
    out = Path(cfg_out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _report_fields(built, result, elapsed):
    rep = result.report
    fields = {
        "kind": built.spec.kind,
        "cells": "x".join(str(c) for c in built.complex.cells),
        "energy": rep.energy,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "primal_residual": rep.rel_primal,
        "dual_residual": rep.rel_dual,
    }
    for name, val in rep.violations.items():
        fields[f"violation_{name}"] = val
    fields["wall_time_s"] = f"{elapsed:.3f}"
    return fields


def _load_gray(path):
    """Load a PGM or PPM as floats in [0, 1]; color collapses to luminance."""
    if not os.path.exists(path):
        raise InputError(f"input file not found: {path}")
    try:
        if str(path).lower().endswith(".ppm"):
            img = read_ppm(path).mean(axis=2)
        else:
            img = read_pgm(path).astype(float)
    except FormatError as e:
        raise InputError(str(e))
    return img / 255.0


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def run_brachistochrone(args):
    defaults = {
        "grid": (str, "25x14"),
        "g": (float, 9.81),
        "hx": (float, 0.8),
        "hy": (float, 1.0),
        **_SOLVER_KEYS,
    }
    cfg = _merge_config(args, defaults)
    cells = _parse_pair(cfg["grid"], int, "--grid")
    if min(cells) < 1 or cfg["g"] <= 0 or cfg["hx"] <= 0 or cfg["hy"] <= 0:
        raise InputError("grid, g, and spacings must be positive")
    out = _outdir(cfg["out"] if "out" in cfg else args.out)

    t0 = time.perf_counter()
    built = build_brachistochrone(cells=cells, spacing=(cfg["hx"], cfg["hy"]),
                                  g=cfg["g"])
    result = pdhg_run(built.problem, _solver_config(cfg))
    sol = extract_scalar(built, result.T)
    elapsed = time.perf_counter() - t0

    # extracted values live on the column (cell) centers
    xs = (np.arange(cells[0]) + 0.5) * cfg["hx"]
    y0 = built.y_origin[0]
    x_end = cells[0] * cfg["hx"]
    y_end = y0 + cells[1] * cfg["hy"]
    try:
        y_of_x, radius = cycloid_through((0.0, y0), (x_end, y_end),
                                         g=cfg["g"])
    except ValueError as e:
        raise InputError(f"infeasible grid for the descent oracle: {e}")
    cyc = np.array([y_of_x(x) for x in xs])
    err = np.where(sol.valid, np.abs(sol.values - cyc), np.nan)
    write_csv(out / "curve.csv", ["column", "x", "y", "cycloid", "abs_error"],
              [(i, xs[i], sol.values[i], cyc[i], err[i])
               for i in range(len(xs))])

    fields = _report_fields(built, result, elapsed)
    fields["cycloid_radius"] = radius
    fields["max_cycloid_error"] = float(np.nanmax(err[sol.valid]))
    write_report(out / "report.txt", fields)
    return EXIT_OK


def run_denoise(args):
    defaults = {
        "labels": (int, 8),
        "data_weight": (float, 8.0),
        "label_lo": (float, 0.0),
        "label_hi": (float, 1.0),
        **_SOLVER_KEYS,
    }
    cfg = _merge_config(args, defaults)
    if cfg["labels"] < 2 or cfg["data_weight"] <= 0:
        raise InputError("labels must be >= 2, data_weight positive")
    img = _load_gray(args.input)
    out = _outdir(args.out)

    t0 = time.perf_counter()
    built = build_denoise(img, labels=cfg["labels"],
                          label_range=(cfg["label_lo"], cfg["label_hi"]),
                          data_weight=cfg["data_weight"])
    result = pdhg_run(built.problem, _solver_config(cfg))
    sol = extract_scalar(built, result.T)
    elapsed = time.perf_counter() - t0

    vals = np.where(sol.valid, sol.values, 0.0)
    write_pgm(out / "denoised.pgm",
              to_uint8(vals, cfg["label_lo"], cfg["label_hi"]))
    write_csv(out / "values.csv", ["row", "col", "value", "valid"],
              [(i, j, vals[i, j], int(sol.valid[i, j]))
               for i in range(vals.shape[0]) for j in range(vals.shape[1])])
    fields = _report_fields(built, result, elapsed)
    fields["distinct_values"] = int(np.unique(np.round(vals, 6)).size)
    write_report(out / "report.txt", fields)
    return EXIT_OK


def run_stereo(args):
    defaults = {
        "data_weight": (float, 1.0),
        "label_lo": (float, 0.0),
        "label_hi": (float, 1.0),
        **_SOLVER_KEYS,
    }
    cfg = _merge_config(args, defaults)
    if cfg["data_weight"] <= 0 or cfg["label_hi"] <= cfg["label_lo"]:
        raise InputError("data_weight positive, label range increasing")
    if not os.path.exists(args.volume):
        raise InputError(f"input file not found: {args.volume}")
    try:
        vol = read_cost_volume(args.volume)
    except FormatError as e:
        raise InputError(str(e))
    if vol.shape[2] < 2 or vol.shape[0] < 2 or vol.shape[1] < 2:
        raise InputError("cost volume needs >= 2 nodes per axis")
    out = _outdir(args.out)

    t0 = time.perf_counter()
    hy = (cfg["label_hi"] - cfg["label_lo"]) / (vol.shape[2] - 1)
    rho = CostVolume(vol.astype(float), spacing=(1.0, 1.0, hy))
    built = build_scalar_lifting(rho, data_weight=cfg["data_weight"],
                                 label_origin=cfg["label_lo"])
    result = pdhg_run(built.problem, _solver_config(cfg))
    sol = extract_scalar(built, result.T)
    elapsed = time.perf_counter() - t0

    vals = np.where(sol.valid, sol.values, cfg["label_lo"])
    write_pgm(out / "disparity.pgm",
              to_uint8(vals, cfg["label_lo"], cfg["label_hi"]))
    write_csv(out / "disparity.csv", ["row", "col", "value", "valid"],
              [(i, j, vals[i, j], int(sol.valid[i, j]))
               for i in range(vals.shape[0]) for j in range(vals.shape[1])])
    write_report(out / "report.txt", _report_fields(built, result, elapsed))
    return EXIT_OK


def run_register(args):
    defaults = {
        "epsilon": (float, 0.1),
        "shift": (str, "0,0"),
        "weight": (float, 1.0),
        **_SOLVER_KEYS,
    }
    cfg = _merge_config(args, defaults)
    if cfg["epsilon"] <= 0:
        raise InputError("epsilon must be positive")
    shift = _parse_pair(cfg["shift"], int, "--shift")
    fixed = _load_gray(args.fixed)
    moving = _load_gray(args.moving)
    if fixed.shape != moving.shape:
        raise InputError(
            f"image shapes differ: {fixed.shape} vs {moving.shape}")
    out = _outdir(args.out)

    t0 = time.perf_counter()
    built = build_registration(fixed, moving, eps=cfg["epsilon"],
                               boundary_shift=shift,
                               data_weight=cfg["weight"])
    result = pdhg_run(built.problem, _solver_config(cfg),
                      x0=warm_start(built))
    sol = extract_map(built, result.T)
    elapsed = time.perf_counter() - t0

    nx, ny = fixed.shape

    def field_rows(values, valid):
        for i in range(values.shape[0]):
            for j in range(values.shape[1]):
                u = values[i, j] - (np.array([i, j]) + 0.5)
                yield (i, j, u[0], u[1], int(valid[i, j]))

    hdr = ["row", "col", "du_row", "du_col", "valid"]
    write_csv(out / "forward.csv", hdr, field_rows(sol.values, sol.valid))
    write_csv(out / "backward.csv", hdr,
              field_rows(sol.backward, sol.backward_valid))

    # warped preview: pull the moving image back through the forward map
    warped = np.zeros_like(fixed)
    for i in range(nx):
        for j in range(ny):
            if sol.valid[i, j]:
                ti = int(np.clip(np.floor(sol.values[i, j, 0]), 0, nx - 1))
                tj = int(np.clip(np.floor(sol.values[i, j, 1]), 0, ny - 1))
                warped[i, j] = moving[ti, tj]
    write_pgm(out / "warped.pgm", to_uint8(warped))

    fields = _report_fields(built, result, elapsed)
    conc = fiber_concentration(built, result.T, top=2)
    fields["min_fiber_concentration"] = float(np.min(conc))
    write_report(out / "report.txt", fields)
    return EXIT_OK


def run_selftest(args):
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, True, ""))
        except Exception as e:  # noqa: BLE001 - report and continue
            checks.append((name, False, str(e)))

    from .cubical import Chain, Cochain, CubicalComplex, pairing
    from .lifting import BrachistochroneCost, polyconvex_consistency
    from .multivector import project_comass_ball_rows, prox_mass_rows

    rng = np.random.default_rng(0)

    def chain_identities():
        cx = CubicalComplex(rng.random((3, 3, 3)) < 0.8)
        for k in range(1, 4):
            B1 = cx.boundary_matrix(k)
            if k >= 2:
                B2 = cx.boundary_matrix(k - 1)
                assert abs(B2 @ B1).max() == 0.0
            T = Chain(cx, k, rng.standard_normal(cx.num_cubes(k)))
            w = Cochain(cx, k - 1, rng.standard_normal(cx.num_cubes(k - 1)))
            dw = Cochain(cx, k, cx.coboundary_matrix(k) @ w.coeffs)
            lhs = pairing(T.boundary(), w)
            rhs = pairing(T, dw)
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def moreau():
        q = rng.standard_normal((50, 6))
        p = project_comass_ball_rows(q, 1.0)
        v = prox_mass_rows(q, 1.0)
        assert np.max(np.abs((v + p) - q)) < 1e-12

    def polyconvex():
        model = BrachistochroneCost(g=9.81, y_min=1.0)
        worst = polyconvex_consistency(model, lo=(0.0, 1.0), hi=(5.0, 5.0),
                                       trials=200, seed=1)
        assert worst < 1e-9

    check("chain-identities", chain_identities)
    check("moreau-identity", moreau)
    check("polyconvex-consistency", polyconvex)

    ok = True
    for name, passed, msg in checks:
        line = f"{name}: {'ok' if passed else 'FAIL'}"
        if msg:
            line += f" ({msg})"
        print(line)
        ok = ok and passed
    return EXIT_OK if ok else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="curlift",
        description="Convexify variational problems by lifting to currents.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("brachistochrone", help="time-of-descent curve")
    b.add_argument("--grid", help="domain cells, e.g. 25x14")
    b.add_argument("--g", type=float, help="gravity")
    b.add_argument("--hx", type=float, help="horizontal cell size")
    b.add_argument("--hy", type=float, help="vertical cell size")
    _add_common(b)
    b.set_defaults(func=run_brachistochrone)

    d = sub.add_parser("denoise", help="total-variation image denoising")
    d.add_argument("--input", required=True, help="grayscale PGM image")
    d.add_argument("--labels", type=int)
    d.add_argument("--data-weight", dest="data_weight", type=float)
    d.add_argument("--label-lo", dest="label_lo", type=float)
    d.add_argument("--label-hi", dest="label_hi", type=float)
    _add_common(d)
    d.set_defaults(func=run_denoise)

    s = sub.add_parser("stereo", help="disparity from a matching cost volume")
    s.add_argument("--volume", required=True, help="cost volume file")
    s.add_argument("--data-weight", dest="data_weight", type=float)
    s.add_argument("--label-lo", dest="label_lo", type=float)
    s.add_argument("--label-hi", dest="label_hi", type=float)
    _add_common(s)
    s.set_defaults(func=run_stereo)

    r = sub.add_parser("register", help="dense image correspondence")
    r.add_argument("--fixed", required=True, help="fixed image (PGM/PPM)")
    r.add_argument("--moving", required=True, help="moving image (PGM/PPM)")
    r.add_argument("--epsilon", type=float, help="mass regularization weight")
    r.add_argument("--shift", help="boundary correspondence, e.g. 2,1")
    r.add_argument("--weight", type=float, help="data term weight")
    _add_common(r)
    r.set_defaults(func=run_register)

    t = sub.add_parser("selftest", help="run built-in property checks")
    t.set_defaults(func=run_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else EXIT_USAGE

    threads = os.environ.get("LIFT_THREADS")
    limits = None
    if threads:
        try:
            nthreads = max(1, int(threads))
        except ValueError:
            print("error[usage]: LIFT_THREADS must be an integer",
                  file=sys.stderr)
            return EXIT_USAGE
        import threadpoolctl
        limits = threadpoolctl.threadpool_limits(limits=nthreads)

    try:
        return args.func(args)
    except InputError as e:
        print(f"error[input]: {e}", file=sys.stderr)
        return EXIT_INPUT
    except SolverDivergence as e:
        print(f"error[divergence]: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    finally:
        if limits is not None:
            limits.unregister()


if __name__ == "__main__":
    sys.exit(main())
