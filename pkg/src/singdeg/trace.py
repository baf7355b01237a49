"""Per-level norm records of a continuation run."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from .mesh import RadialMesh, grad_lp_seminorm, lp_norm
from .model import ProblemSpec, truncate

__all__ = ["CSV_COLUMNS", "TraceRow", "NormTrace", "trace_row"]

CSV_COLUMNS = (
    "n", "cells", "L2", "Linf", "Lmss", "H1", "LsigmaGrad", "H1interior",
    "PowerH1", "IntF", "InteriorMin", "TruncActive", "Iters",
)


@dataclass(frozen=True)
class TraceRow:
    n: int
    cells: int
    L2: float
    Linf: float
    Lmss: Optional[float]
    H1: float
    LsigmaGrad: Optional[float]
    H1interior: float
    PowerH1: Optional[float]
    IntF: float
    InteriorMin: float
    TruncActive: bool
    Iters: int
    IntAbsF: float = 0.0
    # seminorm of (1+u)^((1-p+delta)/2) - 1; diagnostic only
    DeltaPowerH1: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NormTrace:
    rows: Tuple[TraceRow, ...]

    def __post_init__(self):
        levels = [r.n for r in self.rows]
        if levels != sorted(levels):
            raise ValueError("trace rows must be ordered by level")

    def __len__(self):
        return len(self.rows)

    @property
    def levels(self) -> np.ndarray:
        return np.array([r.n for r in self.rows], dtype=float)

    def column(self, key: str) -> np.ndarray:
        vals = [getattr(r, key) for r in self.rows]
        if any(v is None for v in vals):
            raise KeyError(f"norm {key!r} is undefined for this problem")
        return np.array(vals, dtype=float)

    def has(self, key: str) -> bool:
        return all(getattr(r, key) is not None for r in self.rows)

    @property
    def final(self) -> TraceRow:
        return self.rows[-1]


def trace_row(mesh: RadialMesh, spec: ProblemSpec, outcome, rho: float = 0.8, source_rule: str = "auto") -> TraceRow:
    """Every tracked norm of one solved level."""
    from .solver import source_cell_integrals

    u = outcome.field
    table = spec.exponents()
    n = outcome.level
    cell_f = source_cell_integrals(mesh, spec, source_rule)
    avg = cell_f / mesh.cell_volumes
    int_tn = float(np.sum(truncate(avg, n) * mesh.cell_volumes))

    lmss = table.lmss_exponent
    lmss_norm = lp_norm(u, lmss) if lmss is not None and lmss >= 1 else None
    sigma = table.sigma
    sigma_norm = grad_lp_seminorm(u, sigma, 1.0) if sigma is not None and sigma >= 1 else None
    k = table.power_exponent
    power = grad_lp_seminorm(u.map(lambda v: v**k), 2.0, 1.0) if k is not None else None
    dpow = None
    if table.delta is not None:
        e = (1.0 - spec.p + table.delta) / 2.0
        if e > 0:
            dpow = grad_lp_seminorm(u.map(lambda v: (1.0 + v) ** e - 1.0), 2.0, 1.0)

    return TraceRow(
        n=n,
        cells=mesh.cells,
        L2=lp_norm(u, 2.0),
        Linf=u.sup,
        Lmss=lmss_norm,
        H1=grad_lp_seminorm(u, 2.0, 1.0),
        LsigmaGrad=sigma_norm,
        H1interior=grad_lp_seminorm(u, 2.0, rho),
        PowerH1=power,
        IntF=int_tn,
        InteriorMin=outcome.interior_min,
        TruncActive=outcome.truncation_active,
        Iters=outcome.iterations,
        IntAbsF=float(np.sum(cell_f)),
        DeltaPowerH1=dpow,
    )

