"""Command-line front end.

    singdeg solve --config run.json [--out DIR]
    singdeg sweep --config sweep.json [--jobs K] [--out DIR]
    singdeg manufactured --dim 3 --p 1 --gamma 2 --cells 64,128,256 [--out DIR]
    singdeg report --in DIR

Exit codes: 0 success, 1 failed verdict, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .model import Claim, CoefficientSpec, ProblemSpec, SourceSpec
from .solver import SolverError, SolverOptions
from .trace import CSV_COLUMNS
from .verify import Protocol, VerdictReport, claim_verdicts, manufactured_study, run_experiment

log = logging.getLogger("singdeg")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_CASE_CAP = 10_000
MMS_ORDER_MIN = 1.8
# sup errors below this are round-off: the scheme reproduces the solution exactly
MMS_EXACT = 1e-10


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Fixed CSV formatting: 17 significant digits, empty for undefined."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8", newline="")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_SPEC_KEYS = {"dimension", "p", "gamma", "coeff", "source", "m"}
_COEFF_KEYS = {"profile", "alpha", "beta"}
_SOURCE_KEYS = {"kind", "amplitude", "a_exp", "level"}
_PROTOCOL_KEYS = {
    "n_schedule", "cells", "grading", "rho", "tol_fix", "max_iter", "damping", "source_rule",
    "stabilized_slope", "growing_slope", "slope_window",
}
_RUN_KEYS = {"spec", "protocol", "output"}
_SWEEP_KEYS = {"base", "grid", "max_cases", "output", "jobs"}


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _number(v, where):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return float(v)


def spec_from_dict(d: dict) -> ProblemSpec:
    _check_keys(d, _SPEC_KEYS, "spec")
    for key in ("dimension", "p", "gamma"):
        if key not in d:
            raise ConfigError(f"spec: missing {key!r}")
    coeff = d.get("coeff", {})
    _check_keys(coeff, _COEFF_KEYS, "spec.coeff")
    source = d.get("source", {})
    _check_keys(source, _SOURCE_KEYS, "spec.source")
    try:
        c = CoefficientSpec(
            profile=coeff.get("profile", "constant"),
            alpha=_number(coeff.get("alpha", 1.0), "spec.coeff.alpha"),
            beta=_number(coeff.get("beta", coeff.get("alpha", 1.0)), "spec.coeff.beta"),
        )
        s = SourceSpec(
            kind=source.get("kind", "constant"),
            amplitude=_number(source.get("amplitude", 1.0), "spec.source.amplitude"),
            a_exp=_number(source.get("a_exp", 0.0), "spec.source.a_exp"),
            level=source.get("level"),
        )
        m = d.get("m")
        m = s.summability(int(d["dimension"])) if m is None else _number(m, "spec.m")
        if s.kind == "power" and m == math.inf and s.a_exp > 0 and s.amplitude > 0:
            raise ConfigError("spec.m is required for power sources")
        return ProblemSpec(
            dimension=int(_number(d["dimension"], "spec.dimension")),
            p=_number(d["p"], "spec.p"),
            gamma=_number(d["gamma"], "spec.gamma"),
            coeff=c,
            source=s,
            m=m,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"spec: {exc}") from exc


def spec_to_dict(spec: ProblemSpec) -> dict:
    src = {"kind": spec.source.kind, "amplitude": spec.source.amplitude, "a_exp": spec.source.a_exp}
    if spec.source.level is not None:
        src["level"] = spec.source.level
    return {
        "dimension": spec.dimension,
        "p": spec.p,
        "gamma": spec.gamma,
        "coeff": {"profile": spec.coeff.profile, "alpha": spec.coeff.alpha, "beta": spec.coeff.beta},
        "source": src,
        "m": spec.m if math.isfinite(spec.m) else "inf",
    }


def protocol_from_dict(d: dict) -> Protocol:
    _check_keys(d, _PROTOCOL_KEYS, "protocol")
    try:
        sched = [int(v) for v in d.get("n_schedule", [2**k for k in range(7)])]
        cells = [int(v) for v in d.get("cells", [256])]
        if not sched or not cells:
            raise ConfigError("protocol: n_schedule and cells must be non-empty")
        if sched[0] < 1 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigError("protocol: n_schedule must be strictly increasing and start at >= 1")
        if any(c < 8 for c in cells):
            raise ConfigError("protocol: every mesh needs at least 8 cells")
        opts = SolverOptions(
            tol_fix=float(d.get("tol_fix", 1e-10)),
            max_iter=int(d.get("max_iter", 500)),
            damping=float(d.get("damping", 1.0)),
            source_rule=str(d.get("source_rule", "auto")),
        )
        return Protocol(
            n_schedule=tuple(sched),
            cells=tuple(cells),
            grading=float(d.get("grading", 1.0)),
            rho=float(d.get("rho", 0.8)),
            opts=opts,
            stabilized_slope=float(d.get("stabilized_slope", 0.05)),
            growing_slope=float(d.get("growing_slope", 0.3)),
            slope_window=int(d.get("slope_window", 3)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"protocol: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    protocol: Protocol
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _check_keys(d, _RUN_KEYS, "config")
        if "spec" not in d:
            raise ConfigError("config: missing 'spec'")
        return cls(spec_from_dict(d["spec"]), protocol_from_dict(d.get("protocol", {})), d.get("output"))


@dataclass(frozen=True)
class SweepConfig:
    base: dict
    grid: Dict[str, list]
    max_cases: int = DEFAULT_CASE_CAP
    output: Optional[str] = None
    jobs: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        _check_keys(d, _SWEEP_KEYS, "sweep")
        if "base" not in d or "grid" not in d:
            raise ConfigError("sweep: needs 'base' and 'grid'")
        grid = d["grid"]
        if not isinstance(grid, dict) or not grid:
            raise ConfigError("sweep: grid must be a non-empty object")
        for key, values in grid.items():
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep: grid entry {key!r} must be a non-empty list")
        return cls(d["base"], grid, int(d.get("max_cases", DEFAULT_CASE_CAP)), d.get("output"), int(d.get("jobs", 1)))

    def size(self) -> int:
        return math.prod(len(v) for v in self.grid.values())

    def cases(self) -> List[dict]:
        """Cross product of the grid, keys in lexicographic order, values in list order."""
        keys = sorted(self.grid)
        out = []
        for combo in itertools.product(*(self.grid[k] for k in keys)):
            cfg = copy.deepcopy(self.base)
            for key, value in zip(keys, combo):
                _set_path(cfg, key, copy.deepcopy(value))
            out.append(cfg)
        return out


def _set_path(d: dict, dotted: str, value):
    parts = dotted.split(".")
    for part in parts[:-1]:
        d = d.setdefault(part, {})
        if not isinstance(d, dict):
            raise ConfigError(f"sweep: cannot descend into {dotted!r}")
    d[parts[-1]] = value


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# report serialisation
# ---------------------------------------------------------------------------


def report_to_dict(report: VerdictReport) -> dict:
    verdicts = claim_verdicts(report)
    finals = {}
    for cells, trace in sorted(report.traces.items()):
        row = trace.final.as_dict()
        finals[str(cells)] = {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in row.items()}
    return {
        "spec": spec_to_dict(report.spec),
        "exponents": report.spec.exponents().as_dict(),
        "regime": report.prediction.as_dict(),
        "protocol": report.protocol.as_dict(),
        "overall": report.overall,
        "claims": {c.value: verdicts[c] for c in sorted(verdicts, key=lambda c: c.value)},
        "checks": [c.as_dict() for c in report.checks],
        "final_norms": finals,
    }


def trace_rows(report: VerdictReport) -> List[list]:
    rows = []
    for cells in sorted(report.traces):
        for r in report.traces[cells].rows:
            rows.append([getattr(r, c) for c in CSV_COLUMNS])
    return rows


def write_run(report: VerdictReport, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "trace.csv", CSV_COLUMNS, trace_rows(report))
    write_json(out / "report.json", report_to_dict(report))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(config: str, out: Optional[str] = None) -> int:
    try:
        cfg = RunConfig.from_dict(_load_json(config))
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    target = Path(out or cfg.output or "out")
    try:
        report = run_experiment(cfg.spec, cfg.protocol)
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    write_run(report, target)
    print(f"{report.prediction.case_id.value}: overall {'PASS' if report.overall else 'FAIL'} -> {target}")
    for c in report.failed():
        print(f"  failed: {c.name} measured={c.measured:.6g} bound={c.bound_or_target:.6g} ({c.detail})")
    return EXIT_OK if report.overall else EXIT_FAILED


_CLAIM_ORDER = [c.value for c in Claim]
_SUMMARY_NORMS = ("L2", "Linf", "Lmss", "H1", "LsigmaGrad", "H1interior", "PowerH1")
SUMMARY_COLUMNS = ("case", "status", "regime", "overall") + tuple(_CLAIM_ORDER) + tuple(_SUMMARY_NORMS)


def _run_case(args):
    """Worker: run one sweep case and return its summary row."""
    idx, raw, outdir = args
    case_id = f"case-{idx:04d}"
    blank = [""] * (len(_CLAIM_ORDER) + len(_SUMMARY_NORMS))
    try:
        cfg = RunConfig.from_dict(raw)
    except ConfigError as exc:
        return [case_id, "config_error", "", "0"] + blank, str(exc)
    try:
        report = run_experiment(cfg.spec, cfg.protocol)
    except SolverError as exc:
        return [case_id, "solver_error", "", "0"] + blank, str(exc)
    write_run(report, Path(outdir) / case_id)
    verdicts = claim_verdicts(report)
    claims = []
    for name in _CLAIM_ORDER:
        claim = Claim(name)
        claims.append("" if claim not in verdicts else ("pass" if verdicts[claim] else "fail"))
    final = report.traces[max(report.traces)].final
    norms = [fmt(getattr(final, k)) for k in _SUMMARY_NORMS]
    return [case_id, "ok", report.prediction.case_id.value, fmt(report.overall)] + claims + norms, None


def cmd_sweep(config: str, jobs: Optional[int] = None, out: Optional[str] = None) -> int:
    try:
        sweep = SweepConfig.from_dict(_load_json(config))
        if sweep.size() > sweep.max_cases:
            raise ConfigError(f"sweep has {sweep.size()} cases, above the cap of {sweep.max_cases}")
        cases = sweep.cases()
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    target = Path(out or sweep.output or "sweep_out")
    target.mkdir(parents=True, exist_ok=True)
    work = [(i, c, str(target)) for i, c in enumerate(cases)]
    k = max(1, jobs or sweep.jobs)
    if k == 1:
        results = [_run_case(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=k) as pool:
            results = list(pool.map(_run_case, work))
    rows = []
    failed = False
    for row, err in results:
        rows.append(row)
        if err is not None:
            log.warning("%s: %s", row[0], err)
        if row[1] != "ok" or row[3] != "1":
            failed = True
    write_csv(target / "summary.csv", SUMMARY_COLUMNS, rows)
    print(f"{len(rows)} cases -> {target / 'summary.csv'}; {'some verdicts failed' if failed else 'all passed'}")
    return EXIT_FAILED if failed else EXIT_OK


def cmd_manufactured(dim: int, p: float, gamma: float, cells: Sequence[int], n: int = 1000,
                     out: Optional[str] = None) -> int:
    if len(cells) < 3:
        log.error("manufactured study needs at least 3 mesh sizes, got %d", len(cells))
        return EXIT_CONFIG
    if any(b != 2 * a for a, b in zip(cells, cells[1:])):
        log.error("mesh sizes must double: %s", list(cells))
        return EXIT_CONFIG
    try:
        ProblemSpec(dim, p, gamma, source=SourceSpec.manufactured(n))
        study = manufactured_study(dim, p, gamma, cells, n)
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    errors = study["errors"]
    order = study["order"]
    target = Path(out or ".")
    target.mkdir(parents=True, exist_ok=True)
    write_csv(target / "mms.csv", ("cells", "h", "sup_error"), [[c, 1.0 / c, e] for c, e in zip(cells, errors)])
    print("cells   sup error")
    for c, e in zip(cells, errors):
        print(f"{c:6d}  {e:.6e}")
    if max(errors[-3:]) <= MMS_EXACT:
        print("errors at round-off level: the scheme reproduces the exact solution")
        return EXIT_OK
    print(f"observed order: {'inconclusive' if order is None else f'{order:.4f}'}")
    return EXIT_OK if order is not None and order >= MMS_ORDER_MIN else EXIT_FAILED


def cmd_report(indir: str) -> int:
    path = Path(indir) / "report.json"
    try:
        rep = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        log.error("cannot read %s: %s", path, exc)
        return EXIT_CONFIG
    spec = rep["spec"]
    print(f"N={spec['dimension']} p={spec['p']} gamma={spec['gamma']} m={spec['m']} source={spec['source']}")
    regime = rep["regime"]
    print(f"regime {regime['case_id']}  claims {', '.join(regime['claims']) or '(none)'}  bounded={regime['bounded']}")
    for name, ok in rep.get("claims", {}).items():
        print(f"  claim {name:<20s} {'pass' if ok else 'FAIL'}")
    print("checks:")
    for c in rep["checks"]:
        tag = "PASS" if c["passed"] else "FAIL"
        kind = "" if c["mandatory"] else " (info)"
        m = "-" if c["measured"] is None else f"{c['measured']:.6g}"
        b = "-" if c["bound"] is None else f"{c['bound']:.6g}"
        print(f"  [{tag}] {c['name']}{kind}: measured {m} vs {b}  {c['detail']}")
    print(f"overall: {'PASS' if rep['overall'] else 'FAIL'}")
    return EXIT_OK


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="singdeg", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")

    s = sub.add_parser("sweep", help="run the cross product of a sweep config")
    s.add_argument("--config", required=True)
    s.add_argument("--jobs", type=int)
    s.add_argument("--out")

    s = sub.add_parser("manufactured", help="manufactured-solution convergence study")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--cells", type=_int_list, default=[64, 128, 256])
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--out")

    s = sub.add_parser("report", help="pretty-print a stored report.json")
    s.add_argument("--in", dest="indir", required=True)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.command == "solve":
        return cmd_solve(args.config, args.out)
    if args.command == "sweep":
        return cmd_sweep(args.config, args.jobs, args.out)
    if args.command == "manufactured":
        return cmd_manufactured(args.dim, args.p, args.gamma, args.cells, args.n, args.out)
    return cmd_report(args.indir)


def main_exit():  # pragma: no cover
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_exit()
