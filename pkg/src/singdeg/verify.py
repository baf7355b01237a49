"""Executable checks of the existence/regularity statements.

Everything here consumes solver outcomes and returns :class:`CheckResult`
records; :func:`run_experiment` dispatches the checks that the predicted
regime calls for and bundles them into a :class:`VerdictReport`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .mesh import DiscreteField, RadialMesh, build_radial_mesh, grad_lp_seminorm
from .model import Case, Claim, ProblemSpec, RegimePrediction, SourceSpec, classify_regime, manufactured_profile, truncate
from .solver import SolveOutcome, SolverOptions, continuation_sequence, picard_solve, source_cell_integrals
from .trace import NormTrace

__all__ = [
    "Trend",
    "CheckResult",
    "VerdictReport",
    "Protocol",
    "CLAIM_NORMS",
    "manufactured_case",
    "manufactured_study",
    "convergence_order",
    "energy_terms",
    "check_energy_inequality",
    "check_weighted_energy_inequality",
    "check_monotonicity",
    "check_nonnegative",
    "check_interior_positivity",
    "hat_functions",
    "weak_residual",
    "trend_slope",
    "classify_trace",
    "run_experiment",
    "claim_verdicts",
]

ENERGY_TOL = 0.05
MONOTONE_REL = 1e-6
INTERIOR_FLOOR = 1e-6
INTERIOR_SLACK = 1e-8
CROSS_MESH_TOL = 0.05
RESIDUAL_FLOOR = 1e-12


class Trend(str, enum.Enum):
    STABILIZED = "Stabilized"
    GROWING = "Growing"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound_or_target: float
    tolerance: float
    detail: str = ""
    mandatory: bool = True

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "mandatory": self.mandatory,
            "measured": _finite_or_none(self.measured),
            "bound": _finite_or_none(self.bound_or_target),
            "tolerance": _finite_or_none(self.tolerance),
            "detail": self.detail,
        }


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class Protocol:
    n_schedule: Tuple[int, ...] = tuple(2**k for k in range(7))
    cells: Tuple[int, ...] = (256,)
    grading: float = 1.0
    rho: float = 0.8
    opts: SolverOptions = SolverOptions()
    stabilized_slope: float = 0.05
    growing_slope: float = 0.3
    slope_window: int = 3

    def __post_init__(self):
        if len(self.n_schedule) < 1 or not self.cells:
            raise ValueError("protocol needs a non-empty schedule and at least one mesh")
        if not (0 < self.rho < 1):
            raise ValueError("rho must lie in (0, 1)")
        if not (0 < self.stabilized_slope < self.growing_slope):
            raise ValueError("need 0 < stabilized_slope < growing_slope")

    def as_dict(self) -> dict:
        return {
            "n_schedule": list(self.n_schedule),
            "cells": list(self.cells),
            "grading": self.grading,
            "rho": self.rho,
            "tol_fix": self.opts.tol_fix,
            "max_iter": self.opts.max_iter,
            "damping": self.opts.damping,
            "source_rule": self.opts.source_rule,
            "stabilized_slope": self.stabilized_slope,
            "growing_slope": self.growing_slope,
            "slope_window": self.slope_window,
        }


@dataclass
class VerdictReport:
    spec: ProblemSpec
    prediction: RegimePrediction
    protocol: Protocol
    checks: List[CheckResult] = field(default_factory=list)
    traces: Dict[int, NormTrace] = field(default_factory=dict)
    outcomes: Dict[int, List[SolveOutcome]] = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks if c.mandatory)

    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if c.mandatory and not c.passed]

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> List[str]:
        return [c.name for c in self.checks]


# ---------------------------------------------------------------------------
# manufactured solution
# ---------------------------------------------------------------------------


def manufactured_case(N: int, p: float, gamma: float, n: int):
    """Exact solution 1 - r^2 and the level-n source that produces it (a = 1).

    Raises if the source reaches the truncation level n anywhere on [0, 1],
    because T_n would then alter the equation the exact solution satisfies.
    """
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    exact, _, source = manufactured_profile(N, p, gamma, n)
    peak = float(np.max(source(np.linspace(0.0, 1.0, 20001))))
    if peak >= n:
        raise ValueError(f"manufactured source reaches {peak:.4g} >= n={n}; truncation would corrupt the oracle")
    return exact, source


def manufactured_study(N: int, p: float, gamma: float, cells: Sequence[int] = (64, 128, 256),
                       n: int = 1000, opts: SolverOptions = SolverOptions()) -> dict:
    """Sup-norm errors against 1 - r^2 on a sequence of uniform meshes."""
    exact, _ = manufactured_case(N, p, gamma, n)
    spec = ProblemSpec(N, p, gamma, source=SourceSpec.manufactured(n))
    errors = []
    for m in cells:
        mesh = build_radial_mesh(N, m)
        out = picard_solve(mesh, spec, n, None, opts)
        errors.append(float(np.max(np.abs(out.field.values - exact(mesh.nodes)))))
    order = convergence_order(errors[-3:]) if len(errors) >= 3 else None
    return {"cells": list(cells), "errors": errors, "order": order}


def convergence_order(errors: Sequence[float]) -> Optional[float]:
    """Observed order from errors at h, h/2, h/4; None when the triple is not decreasing."""
    e = [float(x) for x in errors]
    if len(e) != 3:
        raise ValueError("need exactly three errors")
    if any(not (x > 0) for x in e):
        raise ValueError("errors must be positive")
    if not (e[0] > e[1] > e[2]):
        return None
    return math.log2(e[1] / e[2])


# ---------------------------------------------------------------------------
# energy, monotonicity, positivity
# ---------------------------------------------------------------------------


def _exact_source_integral(mesh: RadialMesh, spec: ProblemSpec) -> float:
    return float(np.sum(source_cell_integrals(mesh, spec)))


def energy_terms(mesh: RadialMesh, spec: ProblemSpec, field: DiscreteField) -> Tuple[float, float]:
    """(4 alpha gamma / (gamma+1-p)^2) |grad u^((gamma+1-p)/2)|^2 and the integral of f."""
    k = (spec.gamma + 1.0 - spec.p) / 2.0
    semi = grad_lp_seminorm(field.map(lambda v: np.maximum(v, 0.0) ** k), 2.0, 1.0)
    lhs = 4.0 * spec.coeff.alpha * spec.gamma / (spec.gamma + 1.0 - spec.p) ** 2 * semi**2
    return lhs, _exact_source_integral(mesh, spec)


def _require_case3(spec: ProblemSpec):
    if classify_regime(spec).case_id is not Case.CASE_3:
        raise ValueError("energy inequality applies only to gamma > p + 1")


def check_energy_inequality(mesh: RadialMesh, spec: ProblemSpec, outcome: SolveOutcome,
                            tol: float = ENERGY_TOL, field: Optional[DiscreteField] = None) -> CheckResult:
    """Power-gradient bound with its explicit constant: LHS <= (1 + tol) * int f."""
    _require_case3(spec)
    u = outcome.field if field is None else field
    lhs, rhs = energy_terms(mesh, spec, u)
    passed = lhs <= (1.0 + tol) * rhs
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return CheckResult(
        "energy_inequality", bool(passed), lhs, rhs, tol,
        f"n={outcome.level} cells={mesh.cells} LHS/int f={ratio:.6f}",
    )


def check_weighted_energy_inequality(mesh: RadialMesh, spec: ProblemSpec, outcome: SolveOutcome,
                                     tol: float = ENERGY_TOL, mandatory: bool = False) -> CheckResult:
    """The bound that testing with u^gamma actually yields:

        alpha gamma sum |grad u|^2 u^(gamma-1) / (1 + T_n(u))^p <= int f.

    Evaluated with the scheme's own face quantities, so it is the discrete
    identity for the converged level-n solution.
    """
    _require_case3(spec)
    u = outcome.field.values
    n = outcome.level
    h = mesh.spacing
    du = np.diff(u)
    dphi = np.diff(u**spec.gamma)
    ubar = 0.5 * (u[:-1] + u[1:])
    weight = spec.coeff.alpha * mesh.face_areas / (h * (1.0 + truncate(ubar, n)) ** spec.p)
    lhs = float(np.sum(weight * du * dphi))
    rhs = _exact_source_integral(mesh, spec)
    return CheckResult(
        "weighted_energy_inequality", bool(lhs <= (1.0 + tol) * rhs), lhs, rhs, tol,
        f"n={n} cells={mesh.cells}", mandatory,
    )


def check_monotonicity(outcomes: Sequence[SolveOutcome], rel: float = MONOTONE_REL) -> CheckResult:
    """u_n <= u_(n+1) + rel * (1 + |u_(n+1)|_inf) at every node, for consecutive outcomes."""
    if len(outcomes) < 2:
        raise ValueError("need at least two outcomes")
    mesh = outcomes[0].field.mesh
    worst = -math.inf
    where = ""
    for lo, hi in zip(outcomes, outcomes[1:]):
        if not hi.field.mesh.same_as(mesh):
            raise ValueError("outcomes live on different meshes")
        excess = lo.field.values - hi.field.values - rel * (1.0 + hi.field.sup)
        k = int(np.argmax(excess))
        if excess[k] > worst:
            worst = float(excess[k])
            where = f"levels {lo.level}->{hi.level} at r={mesh.nodes[k]:.4f}"
    return CheckResult("monotonicity", worst <= 0.0, worst, 0.0, rel, f"worst excess {worst:.3e} ({where})")


def check_nonnegative(outcomes: Sequence[SolveOutcome]) -> CheckResult:
    low = min(float(o.field.values.min()) for o in outcomes)
    return CheckResult("nonnegativity", low >= 0.0, low, 0.0, 0.0, f"min nodal value {low:.3e}")


def check_interior_positivity(outcomes: Sequence[SolveOutcome], floor: float = INTERIOR_FLOOR,
                              slack: float = INTERIOR_SLACK) -> CheckResult:
    """interior_min >= floor at every level and non-decreasing in n within ``slack``."""
    mins = np.array([o.interior_min for o in outcomes])
    drops = np.diff(mins)
    worst_drop = float(-drops.min()) if drops.size else 0.0
    passed = bool(mins.min() >= floor and worst_drop <= slack)
    return CheckResult(
        "interior_positivity", passed, float(mins.min()), floor, slack,
        f"min over levels {mins.min():.6g}; largest decrease {max(worst_drop, 0.0):.3e}",
    )


# ---------------------------------------------------------------------------
# weak form
# ---------------------------------------------------------------------------


def hat_functions(centers: Sequence[float] = (0.15, 0.3, 0.45, 0.6, 0.75), width: float = 0.15):
    """Piecewise-linear bumps max(0, 1 - |r - c| / width); supports stay in r <= 0.9."""
    centers = tuple(float(c) for c in centers)
    if max(centers) + width > 0.9 + 1e-12:
        raise ValueError("test-function supports must stay inside r <= 0.9")

    def make(c):
        return lambda r: np.maximum(0.0, 1.0 - np.abs(np.asarray(r) - c) / width)

    return [make(c) for c in centers]


def weak_residual(mesh: RadialMesh, spec: ProblemSpec, field: DiscreteField, n: int,
                  tests=None) -> float:
    """Normalised defect of the weak formulation against interior hat functions.

    For each test function phi the two sides are

        sum over faces  a phi' u' / (1 + T_n(u))^p * |face| * h
        sum over cells  T_n(f) phi / (u + 1/n)^gamma * |cell|

    and the defect is their difference divided by the larger of the two.
    """
    tests = hat_functions() if tests is None else tests
    u = field.values
    r = mesh.nodes
    h = mesh.spacing
    cell_f = source_cell_integrals(mesh, spec)
    vol = mesh.cell_volumes
    src = truncate(cell_f / vol, n) * vol
    ubar = 0.5 * (u[:-1] + u[1:])
    flux = spec.coeff(mesh.faces) * mesh.face_areas * np.diff(u) / (h * (1.0 + np.abs(truncate(ubar, n))) ** spec.p)
    worst = 0.0
    for phi_fn in tests:
        phi = phi_fn(r)
        support = phi > 0
        if np.any(u[support] < RESIDUAL_FLOOR):
            raise ValueError("field vanishes on a test-function support; the weak form is undefined there")
        lhs = float(np.sum(flux * np.diff(phi)))
        rhs = float(np.sum(src * phi / (u + 1.0 / n) ** spec.gamma))
        scale = max(abs(lhs), abs(rhs))
        if scale > 0:
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# trace classification
# ---------------------------------------------------------------------------


def trend_slope(levels: Sequence[float], norms: Sequence[float]) -> float:
    """Least-squares slope of log(norm) against log(n)."""
    y = np.asarray(norms, dtype=float)
    if np.all(y == 0):
        return 0.0
    y = np.log(np.maximum(y, np.finfo(float).tiny))
    x = np.log(np.asarray(levels, dtype=float))
    x = x - x.mean()
    return float(np.dot(x, y - y.mean()) / np.dot(x, x))


def classify_trace(trace: NormTrace, norm_key: str, stabilized: float = 0.05, growing: float = 0.3,
                   window: int = 3) -> Trend:
    if len(trace) < 4:
        raise ValueError("trend classification needs at least 4 levels")
    rows = trace.rows[-window:]
    slope = trend_slope([r.n for r in rows], [getattr(r, norm_key) for r in rows])
    if slope < stabilized:
        return Trend.STABILIZED
    if slope > growing:
        return Trend.GROWING
    return Trend.INCONCLUSIVE


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

CLAIM_NORMS = {
    Claim.GLOBAL_H1: ("H1",),
    Claim.LM_DOUBLE_STAR_POWER: ("Lmss",),
    Claim.W1_SIGMA: ("LsigmaGrad",),
    Claim.LOCAL_H1_PLUS_POWER_H1: ("H1interior", "PowerH1"),
    Claim.L_INFINITY: ("Linf",),
}

_INFO_NORMS = ("L2", "Linf", "H1", "H1interior", "PowerH1", "LsigmaGrad", "Lmss")


def _claimed_norms(pred: RegimePrediction) -> List[str]:
    keys = []
    for claim in sorted(pred.claims, key=lambda c: c.value):
        for k in CLAIM_NORMS[claim]:
            if k not in keys:
                keys.append(k)
    return keys


def _stabilization_check(trace, key, protocol, mesh_cells, mandatory):
    rows = trace.rows[-protocol.slope_window:]
    slope = trend_slope([r.n for r in rows], [getattr(r, key) for r in rows])
    trend = classify_trace(trace, key, protocol.stabilized_slope, protocol.growing_slope, protocol.slope_window)
    return CheckResult(
        f"stabilized[{key}]@{mesh_cells}", trend is Trend.STABILIZED, slope, protocol.stabilized_slope, 0.0,
        f"{trend.value}; final value {getattr(trace.final, key):.10g}", mandatory,
    )


def _active_window_slope(trace, key, protocol, mesh_cells):
    """Slope over the last levels at which truncation was still active (informational)."""
    active = [r for r in trace.rows if r.TruncActive]
    if len(active) < protocol.slope_window:
        return None
    rows = active[-protocol.slope_window:]
    slope = trend_slope([r.n for r in rows], [getattr(r, key) for r in rows])
    return CheckResult(
        f"active_window_slope[{key}]@{mesh_cells}", slope < protocol.stabilized_slope, slope,
        protocol.stabilized_slope, 0.0, f"levels {[r.n for r in rows]}", False,
    )


def run_experiment(spec: ProblemSpec, protocol: Protocol = Protocol()) -> VerdictReport:
    """Solve the continuation on every mesh of the protocol and evaluate the predicted claims."""
    pred = classify_regime(spec)
    report = VerdictReport(spec, pred, protocol)
    covered = pred.case_id is not Case.OUT_OF_THEOREM
    claimed = _claimed_norms(pred)
    meshes = {}
    for cells in sorted(set(protocol.cells)):
        mesh = build_radial_mesh(spec.dimension, cells, protocol.grading)
        outcomes, trace = continuation_sequence(mesh, spec, protocol.n_schedule, protocol.opts, protocol.rho)
        meshes[cells] = mesh
        report.traces[cells] = trace
        report.outcomes[cells] = outcomes

    checks = report.checks
    for cells, outcomes in report.outcomes.items():
        mesh, trace = meshes[cells], report.traces[cells]
        for chk in (check_nonnegative(outcomes), check_interior_positivity(outcomes)):
            checks.append(_rename(chk, f"{chk.name}@{cells}", covered))
        if len(outcomes) >= 2:
            chk = check_monotonicity(outcomes)
            checks.append(_rename(chk, f"monotonicity@{cells}", covered))
        if len(trace) >= 4:
            for key in claimed:
                checks.append(_stabilization_check(trace, key, protocol, cells, covered))
                info = _active_window_slope(trace, key, protocol, cells)
                if info is not None:
                    checks.append(info)
            for key in _INFO_NORMS:
                if key not in claimed and trace.has(key):
                    checks.append(_stabilization_check(trace, key, protocol, cells, False))
        if pred.case_id is Case.CASE_3:
            chk = check_energy_inequality(mesh, spec, outcomes[-1])
            checks.append(_rename(chk, f"energy_inequality@{cells}", True))
            chk = check_weighted_energy_inequality(mesh, spec, outcomes[-1])
            checks.append(_rename(chk, f"weighted_energy_inequality@{cells}", False))

    finest = sorted(report.traces)[-2:]
    if len(finest) == 2:
        coarse, fine = (report.traces[c].final for c in finest)
        for key in claimed:
            a, b = getattr(coarse, key), getattr(fine, key)
            diff = abs(a - b) / max(abs(b), np.finfo(float).tiny)
            checks.append(CheckResult(
                f"cross_mesh[{key}]", diff <= CROSS_MESH_TOL, diff, CROSS_MESH_TOL, 0.0,
                f"{finest[0]} cells: {a:.10g}, {finest[1]} cells: {b:.10g}", covered,
            ))
    return report


def _rename(chk: CheckResult, name: str, mandatory: bool) -> CheckResult:
    return CheckResult(name, chk.passed, chk.measured, chk.bound_or_target, chk.tolerance, chk.detail, mandatory)


def claim_verdicts(report: VerdictReport) -> Dict[Claim, bool]:
    """Pass/fail per predicted claim, from the mandatory checks that test it."""
    out = {}
    for claim in report.prediction.claims:
        keys = CLAIM_NORMS[claim]
        related = [
            c for c in report.checks
            if c.mandatory and (
                any(c.name.startswith(f"stabilized[{k}]") or c.name == f"cross_mesh[{k}]" for k in keys)
                or (claim is Claim.LOCAL_H1_PLUS_POWER_H1 and c.name.startswith("energy_inequality"))
            )
        ]
        out[claim] = bool(related) and all(c.passed for c in related)
    return out
