"""Command-line front end.

Subcommands ``bounds``, ``density``, ``simulate`` and ``validate`` read a model
file (or the name of a shipped model), print a JSON summary to stdout and, with
``--out DIR``, write the JSON and CSV artifacts there.

Exit codes: 0 success, 1 numerical failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from . import bochner, bounds, config, inversion, montecarlo, reference, sdp
from .cf_ode import build_ode, residual
from .collocation import FrequencyGrid, parametrize

SCHEMA_VERSION = 1
EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload or {}


# --- helpers --------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, arrays become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def _header(mf: config.ModelFile, command: str, settings: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "model": {"name": mf.name, "fingerprint": mf.model.fingerprint(), **mf.model.to_dict()},
        "config": settings,
    }


def _csv_with_header(meta: dict, body: str) -> str:
    line = json.dumps(_clean(meta), sort_keys=True, separators=(",", ":"))
    return f"# {line}\n{body}"


class _Writer:
    def __init__(self, out: str | None):
        self.dir = Path(out) if out else None
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str) -> None:
        if self.dir is not None:
            (self.dir / name).write_text(text, encoding="utf-8")


def _grid(mf: config.ModelFile, args) -> FrequencyGrid:
    base = mf.grid or FrequencyGrid(1.0, 30)
    h = args.h if args.h is not None else base.h
    q = args.q if args.q is not None else base.q
    substeps = args.substeps if args.substeps is not None else base.substeps
    try:
        return FrequencyGrid(float(h), int(q), int(substeps))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _solver(mf: config.ModelFile, args) -> sdp.Settings:
    s = mf.solver
    if args.max_iter is not None:
        s = dataclasses.replace(s, max_iter=args.max_iter)
    return s


def _orders(args, n: int) -> list[int]:
    if not args.k:
        return list(range(1, n + 1))
    bad = [k for k in args.k if not 1 <= k <= n]
    if bad:
        raise UsageError(f"moment order(s) {bad} outside 1..{n}")
    return sorted(set(args.k))


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# --- commands -------------------------------------------------------------------


def cmd_bounds(args) -> tuple[int, dict]:
    mf = config.load(args.model)
    grid = _grid(mf, args)
    settings = _solver(mf, args)
    prog = bounds.BochnerProgram(mf.model, grid)
    orders = _orders(args, prog.n)
    result = bounds.MomentBounds({k: prog.interval(k, settings) for k in orders}, grid,
                                 mf.model.fingerprint())
    cfg = {"grid": grid.to_dict(), "orders": orders, "solver": dataclasses.asdict(settings)}
    payload = _header(mf, "bounds", cfg)
    payload["bounds"] = [result[k].to_dict() | {"width": result[k].width} for k in orders]
    failed = [k for k in orders if not result[k].ok]

    writer = _Writer(args.out)
    if args.q_schedule:
        schedule = args.q_schedule
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise UsageError("--q-schedule must be strictly increasing")
        rows = []
        for k in orders:
            for q, iv in bounds.refine(mf.model, k, schedule, grid.h, grid.substeps, settings):
                rows.append({"k": k, "q": q, **iv.to_dict()})
                if not iv.ok:
                    failed.append(k)
        payload["config"]["q_schedule"] = schedule
        payload["refinement"] = rows
        body = "k,q,lower,upper,width,lower_status,upper_status\n" + "".join(
            f"{r['k']},{r['q']},{r['lower']!r},{r['upper']!r},"
            f"{_width(r)!r},{r['lower_solver']['status']},{r['upper_solver']['status']}\n"
            for r in rows
        )
        writer.write("refinement.csv", _csv_with_header(_header(mf, "bounds", payload["config"]), body))
    if args.lift is not None:
        try:
            lifted = bounds.lift_moments(mf.model, args.lift, result)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        payload["config"]["lift_cutoff"] = args.lift
        payload["lifted"] = [lifted[k].to_dict() for k in sorted(lifted)]
        for d in payload["lifted"]:
            d.pop("lower_solver")
            d.pop("upper_solver")

    writer.write("bounds.json", dumps(payload))
    if failed:
        payload["error"] = f"solver did not reach optimality for order(s) {sorted(set(failed))}"
        return EXIT_NUMERIC, payload
    return EXIT_OK, payload


def _width(r: dict) -> float:
    lo, hi = r["lower"], r["upper"]
    return hi - lo if lo is not None and hi is not None else float("inf")


def _cf_csv(omega, phi) -> str:
    buf = io.StringIO()
    buf.write("omega,re,im\n")
    for w, p in zip(omega, phi):
        buf.write(f"{float(w)!r},{float(p.real)!r},{float(p.imag)!r}\n")
    return buf.getvalue()


def cmd_density(args) -> tuple[int, dict]:
    mf = config.load(args.model)
    grid = _grid(mf, args)
    settings = _solver(mf, args)
    n = build_ode(mf.model).order
    cfg: dict = {"grid": grid.to_dict()}
    payload = _header(mf, "density", cfg)

    b = None
    pinned: dict[int, float] = {}
    if args.moments is not None:
        if len(args.moments) > n:
            raise UsageError(f"model has order {n}; got {len(args.moments)} moments")
        pinned = {k + 1: v for k, v in enumerate(args.moments) if not math.isnan(v)}
        cfg["moments"] = args.moments
    else:
        choice = args.choice
        cfg["moment_choice"] = choice
        cfg["solver"] = dataclasses.asdict(settings)
        prog = bounds.BochnerProgram(mf.model, grid)
        orders = range(1, n + 1) if choice == "midpoint" else [int(choice[3:])]
        ivs = {k: prog.interval(k, settings) for k in orders}
        payload["bounds"] = [ivs[k].to_dict() for k in orders]
        if not all(iv.ok for iv in ivs.values()):
            raise NumericFailure("solver did not reach optimality", payload)
        b = bounds.MomentBounds(ivs, grid, mf.model.fingerprint())
        if choice != "midpoint":
            # moment k at its lower bound, the others from the optimal point
            k = orders[0]
            x = ivs[k].lower_solution.x
            pinned = {j + 1: float(v) for j, v in enumerate(prog.moments_of(x))}
            b = None
    try:
        est = bounds.estimate_cf(mf.model, grid, pinned or None, b)
    except bounds.InfeasiblePinning as exc:
        raise NumericFailure(str(exc), payload) from None

    lo = args.x_min if args.x_min is not None else mf.density.x_min
    hi = args.x_max if args.x_max is not None else mf.density.x_max
    points = args.points if args.points is not None else mf.density.points
    # invert the samples on every collocation node, which resolve |x| <= pi / step
    lo = -math.pi / grid.h if lo is None else lo
    hi = math.pi / grid.h if hi is None else hi
    try:
        x = inversion.default_x_grid(grid.step, points, lo, hi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg["x_range"] = [float(x[0]), float(x[-1]), int(points)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", inversion.TruncationWarning)
        phi, step = inversion.coarsen(est.phi, grid.step, float(np.abs(x).max()))
        dens = inversion.invert(phi, step, x)
    extra = {}
    exact = reference.exact_density_for(mf.model)
    if exact is not None:
        extra["exact"] = exact(x)
        payload["l1_to_exact"] = float(trapezoid(np.abs(dens.values - extra["exact"]), x))
    ok_psd, min_eig = est.psd_check(1e-6)
    payload["moments"] = {str(k + 1): float(v) for k, v in enumerate(est.moments)}
    payload["density"] = {
        "mass": dens.mass, "mass_ok": dens.mass_ok, "negative_mass": dens.negative_mass,
        "min_value": dens.min_value,
        "cutoff": dens.cutoff, "tail_magnitude": dens.tail_magnitude,
        "imag_residue": dens.imag_residue,
        "warnings": [str(w.message) for w in caught],
    }
    payload["psd_check"] = {"passed": ok_psd, "min_eigenvalue": min_eig}

    writer = _Writer(args.out)
    head = _header(mf, "density", cfg)
    writer.write("density.csv", _csv_with_header(head, dens.to_csv(extra=extra)))
    writer.write("cf.csv", _csv_with_header(head, _cf_csv(est.omega, est.phi)))
    writer.write("density.json", dumps(payload))
    return EXIT_OK, payload


def cmd_simulate(args) -> tuple[int, dict]:
    mf = config.load(args.model)
    overrides = {
        "dt": args.dt, "t_end": args.t_end, "burn_in": args.burn_in, "paths": args.paths,
        "seed": args.seed, "x0": args.x0, "record_every": args.record_every,
        "workers": args.workers,
    }
    try:
        cfg = mf.sim_config(**overrides)
    except config.ModelFileError as exc:
        raise UsageError(str(exc)) from None
    payload = _header(mf, "simulate", cfg.to_dict())
    try:
        stats = montecarlo.simulate(mf.model, cfg)
    except montecarlo.NegativeDiffusion as exc:
        raise NumericFailure(str(exc), payload) from None
    summary = stats.to_dict()
    summary.pop("config")
    summary["mean_ci95"] = list(stats.confidence_interval(1))
    summary["variance"] = stats.variance
    payload["statistics"] = summary
    writer = _Writer(args.out)
    writer.write("histogram.csv", _csv_with_header(_header(mf, "simulate", cfg.to_dict()),
                                                  stats.histogram_csv()))
    writer.write("simulation.json", dumps(payload))
    if stats.blowup_fraction > 0.01:
        payload["error"] = f"{stats.blowups} of {stats.paths} paths blew up (|x| > 1e12)"
        return EXIT_NUMERIC, payload
    return EXIT_OK, payload


def _read_cf_csv(path: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read characteristic-function samples from {path}: {exc}") from None
    if data.shape[1] != 3:
        raise UsageError(f"{path}: expected columns omega,re,im")
    return data[:, 1] + 1j * data[:, 2]


def cmd_validate(args) -> tuple[int, dict]:
    mf = config.load(args.model)
    grid = _grid(mf, args)
    settings = _solver(mf, args)
    checks = []

    def record(name, passed, **margins):
        checks.append({"name": name, "passed": bool(passed), **margins})

    if args.cf_file:
        phi = _read_cf_csv(args.cf_file)
        try:
            t = bochner.toeplitz_from_samples(phi, tol=1e-6)
            ok, lo = bochner.psd_check(bochner.real_embedding(t), 1e-8)
            record("injected_cf_psd", ok, min_eigenvalue=lo, max_modulus=float(np.abs(phi).max()))
        except ValueError as exc:
            record("injected_cf_psd", False, error=str(exc))
    else:
        prog = bounds.BochnerProgram(mf.model, grid)
        ivs = {k: prog.interval(k, settings) for k in range(1, prog.n + 1)}
        for k, iv in ivs.items():
            record(f"bounds_mu{k}_optimal", iv.ok, statuses=list(iv.statuses))
            record(f"bounds_mu{k}_ordered", iv.lower <= iv.upper, lower=iv.lower, upper=iv.upper)
        if all(iv.ok for iv in ivs.values()):
            mb = bounds.MomentBounds(ivs, grid, mf.model.fingerprint())
            try:
                est = bounds.estimate_cf(mf.model, grid, bounds=mb)
                ok, lo = est.psd_check(1e-6)
                record("midpoint_cf_psd", ok, min_eigenvalue=lo)
                record("midpoint_cf_normalized", abs(est.phi[0] - 1) <= 1e-12,
                       deviation=float(abs(est.phi[0] - 1)))
                record("reduced_residual", est.reduced_residual <= 1e-8, residual=est.reduced_residual)
                ode = build_ode(mf.model)
                samples = parametrize(ode, grid).samples(est.moments)[1:]
                w = grid.nodes[1:]
                res = np.abs(residual(ode, w, samples))
                scale = np.abs(ode.coeffs(w) * samples).max(axis=1)
                worst = float((res / scale).max())
                record("ode_residual", worst <= 1e-10, relative_residual=worst)
            except bounds.InfeasiblePinning as exc:
                record("midpoint_cf_psd", False, error=str(exc))
        exact = reference.exact_cf_for(mf.model)
        if exact is not None:
            phi = np.asarray(exact(grid.test_frequencies))
            ok, lo = bochner.psd_check(bochner.real_embedding(bochner.toeplitz_from_samples(phi)), 1e-8)
            record("oracle_cf_psd", ok, min_eigenvalue=lo)
        if args.q_schedule:
            for k in range(1, prog.n + 1):
                seq = bounds.refine(mf.model, k, args.q_schedule, grid.h, grid.substeps, settings)
                slack = 10 * settings.tol_gap * (1 + max(abs(iv.lower) + abs(iv.upper) for _, iv in seq))
                lows = [iv.lower for _, iv in seq]
                ups = [iv.upper for _, iv in seq]
                worst = max([a - b for a, b in zip(lows, lows[1:])]
                            + [b - a for a, b in zip(ups, ups[1:])] + [-math.inf])
                record(f"nested_mu{k}", worst <= slack, worst_violation=worst, slack=slack)

    cfg = {"grid": grid.to_dict(), "solver": dataclasses.asdict(settings),
           "q_schedule": args.q_schedule, "cf_file": args.cf_file}
    payload = _header(mf, "validate", cfg)
    payload["checks"] = checks
    payload["passed"] = all(c["passed"] for c in checks)
    _Writer(args.out).write("validate.json", dumps(payload))
    return (EXIT_OK if payload["passed"] else EXIT_NUMERIC), payload


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfbounds",
        description="Moment bounds and densities of stationary polynomial SDEs.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p, grid=True):
        p.add_argument("--model", required=True,
                       help="model TOML file, or the name of a shipped model (logistic, ou, vg_cubic)")
        p.add_argument("--out", help="directory for JSON/CSV artifacts")
        if grid:
            p.add_argument("--h", type=float, help="test-frequency spacing")
            p.add_argument("--q", type=int, help="number of test frequencies after zero")
            p.add_argument("--substeps", type=int, help="collocation steps per test spacing")
            p.add_argument("--max-iter", type=int, help="solver iteration cap")

    p = sub.add_parser("bounds", help="bound stationary moments")
    common(p)
    p.add_argument("--k", type=int, action="append", help="moment order (repeatable; default all)")
    p.add_argument("--q-schedule", type=_parse_ints, help="comma-separated increasing q values")
    p.add_argument("--lift", type=int, metavar="CUTOFF", help="lift bounds to orders up to CUTOFF")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("density", help="estimate the CF and invert it to a density")
    common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--moments", type=_parse_floats,
                   help="explicit moments mu_1,...; 'nan' leaves an entry free")
    g.add_argument("--choice", default="midpoint",
                   help="'midpoint' of all bounds, or 'minK' to pin mu_K at its lower bound")
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--points", type=int)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("simulate", help="Euler-Maruyama Monte Carlo ensemble")
    common(p, grid=False)
    for name, typ in (("dt", float), ("t-end", float), ("burn-in", float), ("paths", int),
                      ("seed", int), ("x0", float), ("record-every", int), ("workers", int)):
        p.add_argument(f"--{name}", type=typ)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="run invariant checks")
    common(p)
    p.add_argument("--q-schedule", type=_parse_ints)
    p.add_argument("--cf-file", help="CSV (omega,re,im) of samples to check instead of the pipeline")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command == "density" and args.choice != "midpoint" and not (
        args.choice.startswith("min") and args.choice[3:].isdigit()
    ):
        parser.error(f"--choice must be 'midpoint' or 'minK', got {args.choice!r}")
    try:
        code, payload = args.func(args)
    except config.ModelFileError as exc:
        print(f"cfbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"cfbounds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericFailure as exc:
        payload = {**exc.payload, "error": str(exc)}
        sys.stdout.write(dumps(payload))
        print(f"cfbounds: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(dumps(payload))
    if code != EXIT_OK and "error" in payload:
        print(f"cfbounds: numerical failure: {payload['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
