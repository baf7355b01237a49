"""The fixed grid of problems used by the acceptance suite and the demos."""
from __future__ import annotations

from typing import Dict, List

from .model import CoefficientSpec, ProblemSpec, SourceSpec

__all__ = ["acceptance_grid", "grid_config_dicts", "LONG_SCHEDULE", "SHORT_SCHEDULE"]

SHORT_SCHEDULE = tuple(2**k for k in range(7))
# long enough that truncation switches off on 256- and 512-cell meshes
LONG_SCHEDULE = tuple(2**k for k in range(41))


def _power(N, p, gamma, m, a_exp=None):
    a = N / (m + 0.05) if a_exp is None else a_exp
    return ProblemSpec(N, p, gamma, CoefficientSpec(), SourceSpec.power(1.0, a), m=m)


def acceptance_grid() -> Dict[str, ProblemSpec]:
    """Twelve problems: six per dimension, constant and power sources, every regime."""
    out = {}
    for N in (3, 4):
        m1a, m1b = (1.3, 1.1) if N == 3 else (1.6, 1.15)
        out[f"N{N}-Case1a-const"] = ProblemSpec(N, 0.5, 0.5)
        out[f"N{N}-Case1a-power"] = _power(N, 1.0, 1.0, m1a)
        out[f"N{N}-Case1b-power"] = _power(N, 1.0, 1.0, m1b)
        out[f"N{N}-Case2-power"] = _power(N, 1.0, 2.0, 1.0, N - 0.1)
        out[f"N{N}-Case3-const"] = ProblemSpec(N, 0.5, 2.0)
        out[f"N{N}-Case3-power"] = _power(N, 0.5, 2.0, 1.0, N - 0.5)
    return out


def grid_config_dicts(n_schedule=SHORT_SCHEDULE, cells=(256,)) -> List[dict]:
    """The grid as ``solve`` configs, in the order of :func:`acceptance_grid`."""
    out = []
    for spec in acceptance_grid().values():
        src = {"kind": spec.source.kind, "amplitude": spec.source.amplitude, "a_exp": spec.source.a_exp}
        out.append({
            "spec": {
                "dimension": spec.dimension, "p": spec.p, "gamma": spec.gamma,
                "source": src, "m": "inf" if spec.m == float("inf") else spec.m,
            },
            "protocol": {"n_schedule": list(n_schedule), "cells": list(cells)},
        })
    return out
