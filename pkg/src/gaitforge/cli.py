"""Command-line workflows: passive seeding, continuation runs, the
indirect-vs-direct comparison study, library verification and plot-data
export.

Angles are degrees at this surface (and only here); files and the API use
radians. Configuration precedence is flags > GAITFORGE_* environment
variables > defaults. Exit codes: 0 success, 1 numerical failure, 2 usage
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .compass_gait import PASSIVE_GUESSES, WalkerParams, make_ocp
from .continuation import ContinuationConfig, run_continuation
from .direct import DirectDecision, DirectShooting, InputBasis
from .errors import GaitforgeError
from .indirect import IndirectDecision, IndirectShooting
from .integrate import ToleranceConfig
from .library_io import (LibraryFormatError, read_library, read_seed,
                         seed_decision, write_compare_csv, write_library,
                         write_plot_data, write_seed, CompareRow)
from .reconstruct import find_passive_gait, seed_diagnostics, seed_from_passive

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2


class ModelEntry:
    def __init__(self, factory, passive_guesses, sigma_names, degree_params):
        self.factory = factory
        self.passive_guesses = passive_guesses
        self.sigma_names = sigma_names
        self.degree_params = degree_params


MODELS = {
    "compass-gait": ModelEntry(
        factory=lambda: make_ocp(WalkerParams()),
        passive_guesses=PASSIVE_GUESSES,
        sigma_names=("gamma", "v_avg"),
        degree_params={"gamma"},
    ),
}


def _env(name, default, cast=float):
    raw = os.environ.get(f"GAITFORGE_{name}")
    if raw is None:
        return default
    return cast(raw)


def _tolerances(args) -> ToleranceConfig:
    return ToleranceConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _add_common(parser):
    parser.add_argument("--newton-tol", type=float,
                        default=_env("NEWTON_TOL", 1e-8))
    parser.add_argument("--rel-tol", type=float,
                        default=_env("REL_TOL", 1e-9))
    parser.add_argument("--abs-tol", type=float,
                        default=_env("ABS_TOL", 1e-10))
    parser.add_argument("--fd-step", type=float,
                        default=_env("FD_STEP", 1e-9))
    parser.add_argument("--threads", type=int,
                        default=_env("THREADS", os.cpu_count() or 1, int),
                        help="Jacobian column workers for the per-column "
                             "evaluator (the default batched evaluator is "
                             "vectorized instead)")


def _model(name: str) -> ModelEntry:
    if name not in MODELS:
        raise SystemExit(EXIT_USAGE)
    return MODELS[name]


def _param_index(entry: ModelEntry, name: str) -> int:
    try:
        return entry.sigma_names.index(name)
    except ValueError:
        print(f"error: unknown parameter {name!r}; model parameters are "
              f"{entry.sigma_names}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _to_internal(entry: ModelEntry, name: str, value: float) -> float:
    return np.radians(value) if name in entry.degree_params else value


def _to_cli(entry: ModelEntry, name: str, value: float) -> float:
    return np.degrees(value) if name in entry.degree_params else value


# ---------------------------------------------------------------------------
def cmd_passive(args) -> int:
    entry = _model(args.model)
    ocp = entry.factory()
    tol = _tolerances(args)
    guesses = entry.passive_guesses.get(args.branch)
    if guesses is None and (args.guess_T is None or args.guess_x0 is None
                            or args.guess_free is None):
        print(f"error: no bundled guess for branch {args.branch!r}; provide "
              "--guess-T/--guess-x0/--guess-free", file=sys.stderr)
        return EXIT_USAGE
    guess_T = args.guess_T if args.guess_T is not None else guesses["T"]
    guess_x0 = (np.array([float(v) for v in args.guess_x0.split(",")])
                if args.guess_x0 is not None else guesses["x0"])
    free_name = entry.sigma_names[args.free_index]
    if args.guess_free is not None:
        guess_free = _to_internal(entry, free_name, args.guess_free)
    else:
        guess_free = guesses["gamma"]
    sigma_template = np.zeros(ocp.n_sigma)
    sigma_template[1] = args.v_avg

    shooter = IndirectShooting(ocp, tol=tol, fd_step=args.fd_step,
                               threads=args.threads)
    passive = find_passive_gait(ocp, sigma_template, args.free_index,
                                guess_T, guess_x0, guess_free,
                                branch=args.branch, ivp_tol=tol)
    chi = seed_from_passive(ocp, passive, shooter)
    diag = seed_diagnostics(ocp, passive, shooter)
    diag["seed_residual_inf"] = shooter.residual(chi, passive.sigma).inf_norm
    write_seed(args.output, args.model, passive, chi, diag)
    print(f"passive gait ({args.branch}): T* = {passive.T_star:.8f}, "
          f"{free_name} = "
          f"{_to_cli(entry, free_name, passive.free_value):.8f}"
          f"{' deg' if free_name in entry.degree_params else ''}, "
          f"seed residual = {diag['seed_residual_inf']:.3e}")
    print(f"wrote {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
def _load_start_point(args):
    """Resolve the continuation start from a seed or library file.

    Returns (chi_vec, sigma_template, basis_or_None).
    """
    doc = json.loads(Path(args.seed).read_text())
    schema = doc.get("schema", "")
    if schema.startswith("gaitforge/seed"):
        chi, sigma = seed_decision(read_seed(args.seed))
        return chi.flatten(), sigma, None
    lib, full = read_library(args.seed)
    meta = full["metadata"]
    last = lib.points[-1]
    sigma = np.asarray(meta["sigma_template"], dtype=float)
    sigma[int(meta["parameter_index"])] = last.sigma
    basis = None
    if meta.get("method") == "direct":
        basis = InputBasis(meta["basis"]["kind"], int(meta["basis"]["n_xi"]),
                           bool(meta["basis"].get("normalized", False)))
    return last.chi.copy(), sigma, basis


def cmd_continue(args) -> int:
    entry = _model(args.model)
    ocp = entry.factory()
    tol = _tolerances(args)
    pidx = _param_index(entry, args.param)
    pname = args.param
    sigma_end = _to_internal(entry, pname, args.sigma_end)

    chi_vec, sigma_template, basis = _load_start_point(args)
    sigma_start = float(sigma_template[pidx])

    if args.method == "indirect":
        if basis is not None:
            print("error: seed file holds a direct decision; rerun with "
                  "--method direct", file=sys.stderr)
            return EXIT_USAGE
        shooter = IndirectShooting(ocp, tol=tol, fd_step=args.fd_step,
                                   threads=args.threads)
        res_fn, jac_fn = shooter.curve_functions(sigma_template, pidx)
        nu0 = np.concatenate([chi_vec, [sigma_start]])
    else:
        if basis is None:
            # project the indirect start onto the requested input basis
            basis = InputBasis(args.basis, args.n_xi)
            ind = IndirectShooting(ocp, tol=tol, fd_step=args.fd_step)
            chi_ind = IndirectDecision.unflatten(chi_vec, ocp.n_x, ocp.n_u,
                                                 ocp.n_omega)
            ds = DirectShooting(ocp, basis, tol=tol, fd_step=args.fd_step,
                                threads=args.threads)
            ts = np.linspace(0.0, chi_ind.T, 400)
            us = ind.input_trajectory(chi_ind, sigma_template, ts)[:, 0]
            seed = ds.seed_from_input(chi_ind.T, chi_ind.x0,
                                      lambda t: np.interp(t, ts, us),
                                      sigma_template)
            sol = ds.solve(seed, sigma_template, tol=args.newton_tol)
            chi_vec = sol.flatten()
        else:
            ds = DirectShooting(ocp, basis, tol=tol, fd_step=args.fd_step,
                                threads=args.threads)
        res_fn, jac_fn = ds.curve_functions(sigma_template, pidx)
        nu0 = np.concatenate([chi_vec, [sigma_start]])

    cfg = ContinuationConfig(
        sigma_start=sigma_start, sigma_end=sigma_end, h=args.h,
        h_min=args.h_min, h_max=args.h_max, newton_tol=args.newton_tol,
        max_steps=args.max_steps, verbose=args.verbose)

    status = EXIT_OK
    try:
        lib = run_continuation(res_fn, jac_fn, nu0, cfg)
    except GaitforgeError as exc:
        lib = getattr(exc, "partial_library", None)
        print(f"error: {exc}", file=sys.stderr)
        status = EXIT_NUMERICAL
        if lib is None:
            return status

    metadata = {
        "model": args.model,
        "method": args.method,
        "parameter": pname,
        "parameter_index": pidx,
        "sigma_template": sigma_template.tolist(),
        "tolerances": {"newton_tol": args.newton_tol,
                       "rel_tol": args.rel_tol, "abs_tol": args.abs_tol,
                       "fd_step": args.fd_step},
    }
    costs = []
    classifications = []
    if args.method == "indirect":
        for pt in lib.points:
            chi = IndirectDecision.unflatten(pt.chi, ocp.n_x, ocp.n_u,
                                             ocp.n_omega)
            sig = sigma_template.copy()
            sig[pidx] = pt.sigma
            costs.append(shooter.cost(chi, sig))
            classifications.append(None)
    else:
        metadata["basis"] = {"kind": basis.kind, "n_xi": basis.n_xi,
                             "normalized": basis.normalized}
        for pt in lib.points:
            chi_hat = DirectDecision.unflatten(pt.chi, ocp.n_x, basis.n_xi,
                                               ocp.n_omega)
            sig = sigma_template.copy()
            sig[pidx] = pt.sigma
            costs.append(ds.cost(chi_hat, sig))
            classifications.append(
                ds.classify(chi_hat, sig) if args.classify else None)
    write_library(args.output, lib, metadata, costs, classifications)

    turning = [f"{_to_cli(entry, pname, s):.6g}"
               for s in lib.metadata.get("turning_sigmas", [])]
    print(f"{len(lib.points)} points, {lib.n_turning_points} turning "
          f"points{(' at ' + pname + ' = ' + ', '.join(turning)) if turning else ''}; "
          f"final {pname} = "
          f"{_to_cli(entry, pname, lib.points[-1].sigma):.8g}"
          f"{' deg' if pname in entry.degree_params else ''}")
    print(f"wrote {args.output}")
    return status


# ---------------------------------------------------------------------------
def _parse_nxi_range(text: str):
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def cmd_compare(args) -> int:
    entry = _model(args.model)
    ocp = entry.factory()
    tol = _tolerances(args)
    tight = ToleranceConfig(rel_tol=1e-12, abs_tol=1e-14)

    lib, full = read_library(args.reference)
    meta = full["metadata"]
    if meta.get("method") != "indirect":
        print("error: --reference must be an indirect library",
              file=sys.stderr)
        return EXIT_USAGE
    pidx = int(meta["parameter_index"])
    sigma = np.asarray(meta["sigma_template"], dtype=float)
    sigma[pidx] = lib.points[-1].sigma

    shooter = IndirectShooting(ocp, tol=tol, fd_step=args.fd_step)
    chi_vec = lib.points[-1].chi.copy()
    # polish the reference on tight-tolerance residuals so the cost gap is
    # meaningful down to ~1e-12
    sh_tight = IndirectShooting(ocp, tol=tight, fd_step=args.fd_step)
    for _ in range(4):
        r = sh_tight(chi_vec, sigma)
        if np.abs(r).max() < 1e-11:
            break
        R, _ = sh_tight.jacobian(
            IndirectDecision.unflatten(chi_vec, ocp.n_x, ocp.n_u,
                                       ocp.n_omega), sigma)
        chi_vec = chi_vec - np.linalg.solve(R, r)
    chi_ref = IndirectDecision.unflatten(chi_vec, ocp.n_x, ocp.n_u,
                                         ocp.n_omega)
    c_ind = sh_tight.cost(chi_ref, sigma, tight)
    R_ind, _ = shooter.jacobian(chi_ref, sigma)
    cond_ind = float(np.linalg.cond(R_ind))
    t0 = time.perf_counter()
    shooter.residual(chi_ref, sigma)
    t_ind_ms = (time.perf_counter() - t0) * 1e3
    print(f"indirect reference: T = {chi_ref.T:.8f}, cost = {c_ind:.8e}, "
          f"cond(R) = {cond_ind:.4e}")

    ts = np.linspace(0.0, chi_ref.T, 400)
    us = shooter.input_trajectory(chi_ref, sigma, ts)[:, 0]

    n_xis = _parse_nxi_range(args.n_xi)
    rows = []
    series = {}
    for kind in args.bases.split(","):
        kind = kind.strip()
        for n_xi in n_xis:
            if kind == "bspline" and n_xi < 4:
                continue
            t0 = time.perf_counter()
            try:
                ds = DirectShooting(ocp, InputBasis(kind, n_xi), tol=tol,
                                    fd_step=args.fd_step)
                seed = ds.seed_from_input(
                    chi_ref.T, chi_ref.x0,
                    lambda t: np.interp(t, ts, us), sigma)
                sol = ds.solve(seed, sigma, tol=args.newton_tol)
                R_hat, _ = ds.jacobian(sol, sigma)
                cond = float(np.linalg.cond(R_hat))
                cls = ds.classify(sol, sigma, R_hat)
                ds_tight = DirectShooting(ocp, InputBasis(kind, n_xi),
                                          tol=tight, fd_step=args.fd_step)
                sol_t = ds_tight.solve(sol, sigma, tol=1e-11)
                cost = ds_tight.cost(sol_t, sigma, tight)
                t1 = time.perf_counter()
                ds.residual(sol, sigma)
                wall = (time.perf_counter() - t1) * 1e3
                rows.append(CompareRow(kind, n_xi, cond, cost,
                                       (cost - c_ind) / c_ind, cls, wall))
                print(f"{kind} n_xi={n_xi}: cond={cond:.4e} "
                      f"rel_err={(cost - c_ind) / c_ind:.4e} {cls}")
            except Exception as exc:
                rows.append(CompareRow(kind, n_xi, None, None, None, None,
                                       None, error=f"{type(exc).__name__}"))
                print(f"{kind} n_xi={n_xi}: failed ({type(exc).__name__}: "
                      f"{exc})", file=sys.stderr)
            series.setdefault(f"cond_{kind}", []).append(
                (n_xi, rows[-1].cond_number))
            series.setdefault(f"relerr_{kind}", []).append(
                (n_xi, rows[-1].rel_cost_error_vs_indirect))
            series.setdefault(f"walltime_{kind}", []).append(
                (n_xi, rows[-1].wall_time_ms))

    write_compare_csv(args.output, rows)
    print(f"wrote {args.output}")
    if args.plot_dir:
        outdir = Path(args.plot_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        for name, pairs in series.items():
            pairs = [(x, y) for x, y in pairs if y is not None]
            if pairs:
                write_plot_data(outdir / f"{name}.dat",
                                [p[0] for p in pairs], [p[1] for p in pairs],
                                header=f"{name}; n_xi vs value")
        write_plot_data(outdir / "cond_indirect.dat", n_xis,
                        [cond_ind] * len(n_xis),
                        header="indirect Jacobian condition number "
                               "(independent of n_xi)")
        write_plot_data(outdir / "walltime_indirect.dat", n_xis,
                        [t_ind_ms] * len(n_xis),
                        header="indirect residual wall time per evaluation "
                               "[ms]; informative only, hardware dependent")
        print(f"wrote plot data to {outdir}/")
    return EXIT_OK


# ---------------------------------------------------------------------------
def cmd_verify(args) -> int:
    try:
        lib, full = read_library(args.library)
    except LibraryFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    meta = full["metadata"]
    entry = _model(meta["model"])
    ocp = entry.factory()
    tols = meta.get("tolerances", {})
    tol = ToleranceConfig(rel_tol=tols.get("rel_tol", 1e-9),
                          abs_tol=tols.get("abs_tol", 1e-10))
    newton_tol = tols.get("newton_tol", 1e-8)
    pidx = int(meta["parameter_index"])
    sigma_template = np.asarray(meta["sigma_template"], dtype=float)
    method = meta.get("method", "indirect")

    if method == "direct":
        basis = InputBasis(meta["basis"]["kind"], int(meta["basis"]["n_xi"]),
                           bool(meta["basis"].get("normalized", False)))
        ds = DirectShooting(ocp, basis, tol=tol,
                            fd_step=tols.get("fd_step", 1e-9))
    else:
        shooter = IndirectShooting(ocp, tol=tol,
                                   fd_step=tols.get("fd_step", 1e-9))

    failures = []
    for i, (pt, rec) in enumerate(zip(lib.points, full["points"])):
        sig = sigma_template.copy()
        sig[pidx] = pt.sigma
        tn = abs(np.linalg.norm(pt.tangent) - 1.0)
        if tn > 1e-12:
            failures.append(f"point {i}: tangent norm off by {tn:.2e}")
        if method == "indirect":
            chi = IndirectDecision.unflatten(pt.chi, ocp.n_x, ocp.n_u,
                                             ocp.n_omega)
            res = shooter.residual(chi, sig).inf_norm
            if res > newton_tol:
                failures.append(f"point {i}: residual {res:.3e} exceeds "
                                f"{newton_tol}")
            dH = shooter.hamiltonian_range(chi, sig, n_samples=100)
            H0 = shooter.hamiltonian_range(chi, sig, n_samples=1)
            if dH > 1e-6 * (1.0 + abs(H0)):
                failures.append(f"point {i}: Hamiltonian drift {dH:.3e}")
            if rec.get("cost") is not None:
                c = shooter.cost(chi, sig)
                if abs(c - rec["cost"]) > 1e-10 * max(1.0, abs(c)):
                    failures.append(
                        f"point {i}: stored cost {rec['cost']!r} vs "
                        f"recomputed {c!r}")
        else:
            chi_hat = DirectDecision.unflatten(pt.chi, ocp.n_x, basis.n_xi,
                                               ocp.n_omega)
            res = float(np.max(np.abs(ds.residual(chi_hat, sig))))
            if res > newton_tol:
                failures.append(f"point {i}: residual {res:.3e} exceeds "
                                f"{newton_tol}")
            if rec.get("cost") is not None:
                c = ds.cost(chi_hat, sig)
                if abs(c - rec["cost"]) > 1e-10 * max(1.0, abs(c)):
                    failures.append(
                        f"point {i}: stored cost {rec['cost']!r} vs "
                        f"recomputed {c!r}")

    if failures:
        for f in failures:
            print(f"FAIL {f}", file=sys.stderr)
        print(f"{len(failures)} check(s) failed over {len(lib.points)} "
              f"points", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"all checks passed ({len(lib.points)} points)")
    return EXIT_OK


# ---------------------------------------------------------------------------
def cmd_export(args) -> int:
    lib, full = read_library(args.library)
    meta = full["metadata"]
    entry = _model(meta["model"])
    pname = meta["parameter"]
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sig = np.array([_to_cli(entry, pname, p.sigma) for p in lib.points])
    columns = {"T": [p.chi[0] for p in lib.points],
               "cost": [rec.get("cost") for rec in full["points"]],
               "residual": [p.residual_norm for p in lib.points]}
    if meta.get("method") == "indirect":
        ocp = entry.factory()
        n_x = ocp.n_x
        columns["u0"] = [p.chi[1 + 2 * n_x + 1] for p in lib.points]
        for j in range(n_x):
            columns[f"p0_{j + 1}"] = [p.chi[1 + n_x + j] for p in lib.points]
    wanted = args.columns.split(",") if args.columns else list(columns)
    for name in wanted:
        name = name.strip()
        if name not in columns:
            print(f"error: unknown column {name!r}; available: "
                  f"{sorted(columns)}", file=sys.stderr)
            return EXIT_USAGE
        ys = columns[name]
        if any(y is None for y in ys):
            continue
        write_plot_data(outdir / f"{pname}_vs_{name}.dat", sig, ys,
                        header=f"{pname}{' [deg]' if pname in entry.degree_params else ''}"
                               f" vs {name}")
    print(f"wrote plot data to {outdir}/")
    return EXIT_OK


# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gaitforge",
        description="Libraries of optimal periodic gaits via indirect "
                    "shooting and pseudo-arclength continuation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("passive", help="find a passive gait and write an "
                                        "indirect seed file")
    pp.add_argument("--model", required=True, choices=sorted(MODELS))
    pp.add_argument("--v-avg", type=float, default=0.1,
                    help="average speed operating condition [sqrt(g l_o)]")
    pp.add_argument("--branch", default="long",
                    help="period branch tag (long|short for compass-gait)")
    pp.add_argument("--free-index", type=int, default=0,
                    help="index of the sigma component solved for")
    pp.add_argument("--guess-T", type=float, default=None)
    pp.add_argument("--guess-x0", type=str, default=None,
                    help="comma-separated state guess")
    pp.add_argument("--guess-free", type=float, default=None,
                    help="guess for the free sigma component (degrees for "
                         "angles)")
    pp.add_argument("-o", "--output", default="seed.json")
    _add_common(pp)
    pp.set_defaults(func=cmd_passive)

    pc = sub.add_parser("continue", help="trace a gait family from a seed "
                                         "or library file")
    pc.add_argument("--model", default="compass-gait",
                    choices=sorted(MODELS))
    pc.add_argument("--method", choices=("indirect", "direct"),
                    default="indirect")
    pc.add_argument("--seed", required=True,
                    help="seed file, or library file whose last point "
                         "starts the run")
    pc.add_argument("--param", required=True,
                    help="continuation parameter name (gamma|v_avg)")
    pc.add_argument("--sigma-end", type=float, required=True,
                    help="target parameter value (degrees for gamma)")
    pc.add_argument("--h", type=float, default=0.01, help="initial step")
    pc.add_argument("--h-min", type=float, default=1e-9)
    pc.add_argument("--h-max", type=float, default=0.06)
    pc.add_argument("--max-steps", type=int, default=3000)
    pc.add_argument("--basis", choices=("bezier", "bspline"),
                    default="bspline",
                    help="input basis when projecting an indirect seed for "
                         "--method direct")
    pc.add_argument("--n-xi", type=int, default=4)
    pc.add_argument("--classify", action=argparse.BooleanOptionalAction,
                    default=True,
                    help="second-order classification per point (direct "
                         "method only)")
    pc.add_argument("--verbose", action="store_true",
                    help="line-delimited progress records on stderr")
    pc.add_argument("-o", "--output", default="library.json")
    _add_common(pc)
    pc.set_defaults(func=cmd_continue)

    pm = sub.add_parser("compare", help="indirect vs direct study over "
                                        "input parameterizations")
    pm.add_argument("--model", default="compass-gait",
                    choices=sorted(MODELS))
    pm.add_argument("--reference", required=True,
                    help="indirect library; its last point is the "
                         "reference gait")
    pm.add_argument("--n-xi", default="4:12",
                    help="range lo:hi or comma list")
    pm.add_argument("--bases", default="bezier,bspline")
    pm.add_argument("-o", "--output", default="compare.csv")
    pm.add_argument("--plot-dir", default=None)
    _add_common(pm)
    pm.set_defaults(func=cmd_compare)

    pv = sub.add_parser("verify", help="re-check a library file")
    pv.add_argument("library")
    pv.set_defaults(func=cmd_verify)

    pe = sub.add_parser("export", help="emit two-column plot data from a "
                                       "library")
    pe.add_argument("library")
    pe.add_argument("--outdir", default="plot-data")
    pe.add_argument("--columns", default=None,
                    help="comma list (default: all available)")
    pe.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GaitforgeError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    except LibraryFormatError as exc:
        print(json.dumps({"error": "LibraryFormatError",
                          "message": str(exc)}), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
