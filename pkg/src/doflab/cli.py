"""Command-line front end: check, plan, enumerate, simulate and pipeline.

Input files are JSON objects ``{"K": 3, "M": [3, 2, 2], "N": 3, "d": [[...]]}``
where ``d[i][j]`` is the demand from user i+1 to user j+1 (in the file's own
user order; the tool sorts users by antenna count internally and reports back
in the file's order). ``enumerate`` needs no ``d``.

Exit codes: 0 success/feasible, 2 infeasible or unresolved, 1 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, bounds, detour, ssa
from .model import DoFTuple, NetworkConfig, derive_profile

__all__ = ["InputError", "RunReport", "load_input", "run_pipeline", "main"]

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2
CSV_COLUMNS = ("power", "sum_rate", "slope_window_flag")
DEFAULT_TOLERANCE = 0.05


class InputError(ValueError):
    pass


def load_input(path: str, need_tuple: bool = True) -> tuple[NetworkConfig, DoFTuple | None]:
    """Parse an input file into a sorted config and the tuple in sorted labels."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError("input must be a JSON object")
    try:
        M, N = raw["M"], raw["N"]
        K = raw.get("K", len(M))
        if K != len(M):
            raise InputError(f"K={K} but M lists {len(M)} users")
        cfg = NetworkConfig.from_unsorted(M, N)
        d = None
        if need_tuple or "d" in raw:
            d = cfg.canonical_tuple(np.asarray(raw["d"]))
            if d.K != K:
                raise InputError(f"d is {d.K}x{d.K} but K={K}")
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid input: {exc}") from exc
    return cfg, d


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _tuple_json(cfg: NetworkConfig, d: DoFTuple) -> list[list[int]]:
    return cfg.original_tuple(d).array().tolist()


def _profile_json(cfg: NetworkConfig, d: DoFTuple) -> dict:
    prof = derive_profile(cfg, d)
    lab = lambda n: cfg.labels[n] + 1  # noqa: E731
    form = prof.cycle_form
    return {
        "nbar": prof.nbar,
        "mbar": {str(lab(i)): m for i, m in enumerate(prof.mbar)},
        "cycleForm": None
        if not form.exceeded
        else {
            "kind": form.kind.value,
            "cycle": [lab(n) for n in form.cycle],
            "outsider": None if form.outsider is None else lab(form.outsider),
            "direction": form.direction,
        },
    }


def _tolerances() -> dict:
    return {
        "rankRtol": ssa.RANK_RTOL,
        "alignTol": ssa.ALIGN_TOL,
        "slopeRelTol": DEFAULT_TOLERANCE,
    }


def _parse_grid(text: str | None) -> np.ndarray:
    if text is None:
        return ssa.default_power_grid()
    try:
        grid = np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError as exc:
        raise InputError(f"bad --power-grid: {exc}") from exc
    if grid.size < 3:
        raise InputError("--power-grid needs at least 3 points")
    return grid


def _write_rates(path: str, fit: ssa.SlopeFit) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for P, r, flag in zip(fit.powers, fit.sum_rates, fit.window):
            w.writerow([repr(float(P)), repr(float(r)), int(flag)])


@dataclass
class RunReport:
    """Everything one pipeline run produced, stage by stage.

    A certificate is present only if the plan resolved; stage failures are
    recorded under ``errors`` instead of aborting the run.
    """

    config: dict
    tuple: list
    bound_report: dict | None = None
    detour_plan: dict | None = None
    certificate: dict | None = None
    slope: dict | None = None
    timing: dict | None = None
    errors: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.errors or self.certificate is None:
            return EXIT_NEGATIVE
        return EXIT_OK if self.certificate["allTrue"] else EXIT_NEGATIVE

    def to_json(self) -> dict:
        if self.certificate is not None:
            assert self.detour_plan is not None and self.detour_plan["scheme"] != "unresolved"
        out = {
            "version": __version__,
            "tolerances": _tolerances(),
            "config": self.config,
            "tuple": self.tuple,
            "boundReport": self.bound_report,
            "detourPlan": self.detour_plan,
            "certificate": self.certificate,
            "slope": self.slope,
            "errors": self.errors,
        }
        if self.timing is not None:
            out["timing"] = self.timing
        return out


def _simulate(cfg, d, seed, trials, grid, tolerance):
    """Design, certify and fit the slope for a tuple with N̄ <= N."""
    prof = derive_profile(cfg, d)
    ch = ssa.generate_channels(cfg, prof, seed)
    design = ssa.design_for(cfg, d, ch)
    cert = design.certificate
    fit = None
    slope = None
    if cert.all_true:
        fit = ssa.rate_curve(cfg, d, seed, grid, trials)
        expected = d.total
        err = abs(fit.slope - expected) / expected if expected else abs(fit.slope)
        slope = {
            "estimate": fit.slope,
            "expectedStreams": expected,
            "relativeError": err,
            "tolerance": tolerance,
            "withinTolerance": bool(err <= tolerance),
            "trials": trials,
        }
    return cert, fit, slope


def run_pipeline(
    cfg: NetworkConfig,
    d: DoFTuple,
    seed: int = 0,
    trials: int = 20,
    grid=None,
    tolerance: float = DEFAULT_TOLERANCE,
    timing: bool = False,
) -> tuple[RunReport, ssa.SlopeFit | None]:
    grid = ssa.default_power_grid() if grid is None else grid
    clock: dict[str, float] = {}
    t0 = time.perf_counter()
    rep = RunReport(config=cfg.to_json(), tuple=_tuple_json(cfg, d))
    report = bounds.check(cfg, d)
    rep.bound_report = report.to_json(cfg.labels)
    clock["check"] = time.perf_counter() - t0
    fit = None
    if not report.feasible:
        rep.errors.append("outside the outer bound; nothing to plan")
    else:
        p = detour.plan(cfg, d)
        rep.detour_plan = p.to_json(cfg)
        clock["plan"] = time.perf_counter() - t0
        if p.resolved:
            try:
                cert, fit, slope = _simulate(cfg, p.modified, seed, trials, grid, tolerance)
                rep.certificate = cert.to_json(cfg.labels)
                rep.slope = slope
            except (ssa.AlignmentInfeasible, ssa.RelayZFInfeasible) as exc:
                rep.errors.append(f"{type(exc).__name__}: {exc}")
            clock["simulate"] = time.perf_counter() - t0
    if timing:
        rep.timing = clock
    return rep, fit


def cmd_check(args) -> int:
    cfg, d = load_input(args.input)
    report = bounds.check(cfg, d)
    out = report.to_json(cfg.labels)
    out["profile"] = _profile_json(cfg, d)
    print(_dump(out))
    return EXIT_OK if report.feasible else EXIT_NEGATIVE


def cmd_plan(args) -> int:
    cfg, d = load_input(args.input)
    try:
        p = detour.plan(cfg, d)
    except detour.InfeasibleDemand as exc:
        print(_dump({"scheme": None, "boundReport": exc.report.to_json(cfg.labels)}))
        return EXIT_NEGATIVE
    out = p.to_json(cfg)
    out["profile"] = _profile_json(cfg, d)
    print(_dump(out))
    return EXIT_OK if p.resolved else EXIT_NEGATIVE


def cmd_enumerate(args) -> int:
    cfg, _ = load_input(args.input, need_tuple=False)
    w = csv.writer(sys.stdout)
    K = cfg.K
    w.writerow([f"d{i + 1}{j + 1}" for i in range(K) for j in range(K) if i != j])
    try:
        for t in bounds.iter_region(cfg, args.cap):
            w.writerow(cfg.original_tuple(t).flat)
    except bounds.SearchSpaceTooLarge as exc:
        raise InputError(str(exc)) from exc
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, d = load_input(args.input)
    grid = _parse_grid(args.power_grid)
    report = bounds.check(cfg, d)
    if not report.feasible:
        print(_dump({"error": "outside the outer bound", "boundReport": report.to_json(cfg.labels)}))
        return EXIT_NEGATIVE
    target = d
    if derive_profile(cfg, d).nbar > cfg.N:
        p = detour.plan(cfg, d)
        if not p.resolved:
            print(_dump({"error": "relay oversubscribed and no detour resolves it", "detourPlan": p.to_json(cfg)}))
            return EXIT_NEGATIVE
        target = p.modified
    try:
        cert, fit, slope = _simulate(cfg, target, args.seed, args.trials, grid, args.tolerance)
    except (ssa.AlignmentInfeasible, ssa.RelayZFInfeasible) as exc:
        print(_dump({"error": f"{type(exc).__name__}: {exc}"}))
        return EXIT_NEGATIVE
    print(_dump({
        "version": __version__,
        "tolerances": _tolerances(),
        "simulatedTuple": _tuple_json(cfg, target),
        "certificate": cert.to_json(cfg.labels),
        "slope": slope,
    }))
    if args.rates_csv and fit is not None:
        _write_rates(args.rates_csv, fit)
    ok = cert.all_true and slope is not None and slope["withinTolerance"]
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_pipeline(args) -> int:
    cfg, d = load_input(args.input)
    grid = _parse_grid(args.power_grid)
    rep, fit = run_pipeline(cfg, d, args.seed, args.trials, grid, args.tolerance, args.timing)
    text = _dump(rep.to_json())
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.rates_csv and fit is not None:
        _write_rates(args.rates_csv, fit)
    return rep.exit_code


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors, not the "infeasible" exit code argparse uses
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="doflab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="test a tuple against the outer bound")
    p.add_argument("input")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("plan", help="plan direct SSA or a detour")
    p.add_argument("input")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("enumerate", help="list every feasible tuple with entries <= cap as CSV")
    p.add_argument("input")
    p.add_argument("--cap", type=int, required=True)
    p.set_defaults(fn=cmd_enumerate)

    for name, fn, helptext in (
        ("simulate", cmd_simulate, "certify an SSA design and fit the DoF slope"),
        ("pipeline", cmd_pipeline, "check, plan and simulate, writing one report"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--power-grid", default=None, help="comma-separated powers")
        p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
        p.add_argument("--rates-csv", default=None, help="write per-power sum rates here")
        p.set_defaults(fn=fn)
        if name == "pipeline":
            p.add_argument("--output", default=None)
            p.add_argument("--timing", action="store_true", help="include wall-clock timings")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
