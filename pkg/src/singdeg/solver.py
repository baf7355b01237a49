"""Finite-volume solver for the truncated level-n problems.

At level n the problem is

    -div( a grad u / (1 + |T_n(u)|)^p ) = T_n(f) / (|u| + 1/n)^gamma,   u = 0 on r = 1.

Each Picard step freezes both the degenerate coefficient and the singular
denominator at the current iterate, which leaves a tridiagonal M-matrix
system. Levels are chained by warm-started continuation in n.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .mesh import DiscreteField, RadialMesh, integrate_function, integrate_power_source, interior_min
from .model import ProblemSpec, truncate

__all__ = [
    "SolverError",
    "NonConvergence",
    "MaximumPrincipleViolation",
    "SingularPivot",
    "TridiagonalSystem",
    "SolverOptions",
    "SolveOutcome",
    "source_cell_integrals",
    "assemble_frozen_system",
    "solve_tridiagonal",
    "picard_solve",
    "continuation_sequence",
]

PIVOT_FLOOR = 1e-300
MIN_DAMPING = 1.0 / 16.0
DEFAULT_RHO = 0.8


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    def __init__(self, level: int, last_change: float, iterations: int):
        self.level = level
        self.last_change = last_change
        self.iterations = iterations
        super().__init__(
            f"level n={level}: no convergence after {iterations} iterations (last change {last_change:.3e})"
        )


class MaximumPrincipleViolation(SolverError):
    pass


class SingularPivot(SolverError):
    pass


@dataclass(frozen=True, eq=False)
class TridiagonalSystem:
    """``lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1] = rhs[i]``.

    ``lower[0]`` and ``upper[-1]`` are unused and stored as 0.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    @property
    def size(self) -> int:
        return len(self.diag)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[1:] += self.lower[1:] * u[:-1]
        out[:-1] += self.upper[:-1] * u[1:]
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)

    def is_m_matrix(self) -> bool:
        off = np.abs(self.lower) + np.abs(self.upper)
        return bool(
            np.all(self.lower <= 0) and np.all(self.upper <= 0) and np.all(self.diag >= off * (1 - 1e-12))
        )


@dataclass(frozen=True)
class SolverOptions:
    tol_fix: float = 1e-10
    max_iter: int = 500
    damping: float = 1.0
    # "auto": closed form for constant/power sources, nodal sampling for smooth
    # manufactured ones; "exact": quadrature of every cell integral
    source_rule: str = "auto"

    def __post_init__(self):
        if self.source_rule not in ("auto", "exact"):
            raise ValueError(f"source_rule must be 'auto' or 'exact', got {self.source_rule!r}")
        if not (self.tol_fix > 0):
            raise ValueError("tol_fix must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be an integer >= 1")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    field: DiscreteField
    level: int
    iterations: int
    final_change: float
    truncation_active: bool
    interior_min: float
    damping: float = 1.0


def source_cell_integrals(mesh: RadialMesh, spec: ProblemSpec, rule: str = "auto") -> np.ndarray:
    """Source mass of every control volume.

    Constant and power sources are integrated in closed form. A smooth
    manufactured source is sampled at the node (``rule="auto"``), so the
    quadrature matches the nodal treatment of the singular denominator;
    ``rule="exact"`` integrates it by Gauss quadrature instead.
    """
    src = spec.source
    if src.kind == "constant":
        return src.amplitude * np.asarray(mesh.cell_volumes)
    if src.kind == "power":
        return integrate_power_source(mesh, src.amplitude, src.a_exp)
    if rule == "exact":
        return integrate_function(mesh, spec.source_function())
    return spec.source_function()(mesh.nodes) * mesh.cell_volumes


def _coefficients(mesh: RadialMesh, spec: ProblemSpec, n: int, u: np.ndarray) -> np.ndarray:
    face_u = 0.5 * (u[:-1] + u[1:])
    a = spec.coeff(mesh.faces)
    return a * mesh.face_areas / (mesh.spacing * (1.0 + np.abs(truncate(face_u, n))) ** spec.p)


def _rhs(mesh, spec, n, u, cell_f):
    vol = mesh.cell_volumes[:-1]
    avg = truncate(cell_f[:-1] / vol, n)
    return avg * vol / (np.abs(u[:-1]) + 1.0 / n) ** spec.gamma


def assemble_frozen_system(
    mesh: RadialMesh,
    spec: ProblemSpec,
    n: int,
    frozen: DiscreteField,
    cell_sources: Optional[np.ndarray] = None,
) -> TridiagonalSystem:
    """Linear system for the level-n problem with coefficient and source frozen at ``frozen``.

    Unknowns are the nodes 0..M-1; the boundary node is eliminated by u(1) = 0
    and the origin row carries zero flux through r = 0.
    """
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    if frozen.mesh is not mesh and not frozen.mesh.same_as(mesh):
        raise ValueError("frozen field lives on a different mesh")
    u = frozen.values
    if np.any(u < 0):
        raise ValueError("frozen field must be non-negative")
    if cell_sources is None:
        cell_sources = source_cell_integrals(mesh, spec)
    k = _coefficients(mesh, spec, n, u)
    diag = k.copy()
    diag[1:] += k[:-1]
    lower = np.zeros_like(k)
    lower[1:] = -k[:-1]
    upper = np.zeros_like(k)
    upper[:-1] = -k[:-1]
    return TridiagonalSystem(lower, diag, upper, _rhs(mesh, spec, n, u, cell_sources))


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """Thomas algorithm: forward elimination then back substitution."""
    a, b, c, d = sys.lower, sys.diag, sys.upper, sys.rhs
    size = len(b)
    cp = np.empty(size)
    dp = np.empty(size)
    pivot = b[0]
    if abs(pivot) < PIVOT_FLOOR:
        raise SingularPivot("zero pivot in row 0")
    cp[0] = c[0] / pivot
    dp[0] = d[0] / pivot
    for i in range(1, size):
        pivot = b[i] - a[i] * cp[i - 1]
        if abs(pivot) < PIVOT_FLOOR:
            raise SingularPivot(f"zero pivot in row {i}")
        cp[i] = c[i] / pivot
        dp[i] = (d[i] - a[i] * dp[i - 1]) / pivot
    x = np.empty(size)
    x[-1] = dp[-1]
    for i in range(size - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def _apply_map(mesh, spec, n, u, cell_f):
    """One application of the frozen-coefficient solution map."""
    sys = assemble_frozen_system(mesh, spec, n, DiscreteField(mesh, u), cell_f)
    w = np.zeros_like(u)
    w[:-1] = solve_tridiagonal(sys)
    return w


def _truncation_active(mesh, n, u, cell_f) -> bool:
    avg = cell_f[:-1] / mesh.cell_volumes[:-1]
    return bool(u.max() >= n or np.any(avg > n))


def picard_solve(
    mesh: RadialMesh,
    spec: ProblemSpec,
    n: int,
    init: Optional[DiscreteField] = None,
    opts: SolverOptions = SolverOptions(),
    rho: float = DEFAULT_RHO,
) -> SolveOutcome:
    """Damped fixed-point iteration for the level-n problem.

    Convergence is measured on the undamped map: the iteration stops once
    ``|S(u) - u|_inf <= tol_fix * |S(u)|_inf`` and returns ``S(u)``. The damping
    factor is halved (down to 1/16) whenever that change grows.
    """
    if n < 1:
        raise ValueError(f"level must be >= 1, got {n}")
    cell_f = source_cell_integrals(mesh, spec, opts.source_rule)
    u = np.zeros_like(mesh.nodes) if init is None else np.array(init.values, dtype=float)
    if np.any(u < 0):
        raise ValueError("initial field must be non-negative")
    u[-1] = 0.0
    lam = opts.damping
    prev = np.inf
    change = np.inf
    for it in range(1, opts.max_iter + 1):
        w = _apply_map(mesh, spec, n, u, cell_f)
        if np.any(w < 0):
            raise MaximumPrincipleViolation(
                f"level n={n}: frozen solve produced min {w.min():.3e} < 0 (mesh too coarse or assembly bug)"
            )
        scale = np.max(np.abs(w))
        diff = np.max(np.abs(w - u))
        change = 0.0 if diff == 0 else diff / max(scale, np.finfo(float).tiny)
        if change <= opts.tol_fix:
            field = DiscreteField(mesh, w)
            return SolveOutcome(
                field=field,
                level=n,
                iterations=it,
                final_change=float(change),
                truncation_active=_truncation_active(mesh, n, w, cell_f),
                interior_min=interior_min(field, rho),
                damping=lam,
            )
        if change > prev and lam > MIN_DAMPING:
            lam = max(lam / 2.0, MIN_DAMPING)
        prev = change
        u = (1.0 - lam) * u + lam * w
        np.maximum(u, 0.0, out=u)
    raise NonConvergence(n, float(change), opts.max_iter)


def continuation_sequence(
    mesh: RadialMesh,
    spec: ProblemSpec,
    n_schedule: Sequence[int],
    opts: SolverOptions = SolverOptions(),
    rho: float = DEFAULT_RHO,
) -> Tuple[List[SolveOutcome], "NormTrace"]:
    """Solve the levels of ``n_schedule`` in order, each warm-started from the last."""
    from .trace import NormTrace, trace_row

    levels = [int(n) for n in n_schedule]
    if not levels or levels[0] < 1 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"n_schedule must be strictly increasing and start >= 1, got {list(n_schedule)}")
    outcomes: List[SolveOutcome] = []
    rows = []
    init = None
    for n in levels:
        out = picard_solve(mesh, spec, n, init, opts, rho)
        outcomes.append(out)
        rows.append(trace_row(mesh, spec, out, rho, opts.source_rule))
        init = out.field
    return outcomes, NormTrace(tuple(rows))
