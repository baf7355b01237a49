"""Radial vertex-centred grid on the unit ball of R^N and the discrete norms on it.

Nodes 0 = r_0 < ... < r_M = 1 carry the unknowns. Node i owns the control
volume between the neighbouring face midpoints (the origin cell starts at 0,
the boundary cell ends at 1). Volumes and face areas carry the exact
r^(N-1) weight times the unit-sphere measure, so sums over cells are
integrals over the N-dimensional ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "sphere_measure",
    "ball_volume",
    "RadialMesh",
    "DiscreteField",
    "build_radial_mesh",
    "integrate_power_source",
    "integrate_function",
    "lp_norm",
    "grad_lp_seminorm",
    "interior_min",
]

MIN_CELLS = 8


def sphere_measure(N: int) -> float:
    """Surface measure of the unit sphere in R^N, 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def ball_volume(N: int) -> float:
    return math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class RadialMesh:
    dimension: int
    nodes: np.ndarray
    faces: np.ndarray
    cell_bounds: np.ndarray
    cell_volumes: np.ndarray
    face_areas: np.ndarray
    grading: float = 1.0

    @property
    def cells(self) -> int:
        return len(self.nodes) - 1

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def omega(self) -> float:
        return sphere_measure(self.dimension)

    def same_as(self, other: "RadialMesh") -> bool:
        return (
            self is other
            or (self.dimension == other.dimension and np.array_equal(self.nodes, other.nodes))
        )


def build_radial_mesh(N: int, cells: int, grading: float = 1.0) -> RadialMesh:
    """Graded mesh with nodes r_i = (i/M)^grading.

    ``grading > 1`` clusters nodes at the origin, ``grading < 1`` at the boundary.
    """
    if int(N) != N or N < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {N}")
    if int(cells) != cells or cells < MIN_CELLS:
        raise ValueError(f"need at least {MIN_CELLS} cells, got {cells}")
    if not (grading > 0):
        raise ValueError(f"grading must be positive, got {grading}")
    N, M = int(N), int(cells)
    nodes = (np.arange(M + 1) / M) ** grading
    nodes[-1] = 1.0
    faces = 0.5 * (nodes[:-1] + nodes[1:])
    bounds = np.concatenate(([0.0], faces, [1.0]))
    omega = sphere_measure(N)
    volumes = omega / N * np.diff(bounds**N)
    areas = omega * faces ** (N - 1)
    return RadialMesh(N, _frozen(nodes), _frozen(faces), _frozen(bounds),
                      _frozen(volumes), _frozen(areas), float(grading))


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Nodal values on a mesh; values[-1] is the Dirichlet datum at r = 1."""

    mesh: RadialMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.mesh.nodes.shape:
            raise ValueError(f"field has {v.size} values, mesh has {self.mesh.nodes.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def zeros(cls, mesh: RadialMesh) -> "DiscreteField":
        return cls(mesh, np.zeros_like(mesh.nodes))

    @classmethod
    def from_function(cls, mesh: RadialMesh, fn) -> "DiscreteField":
        return cls(mesh, fn(mesh.nodes))

    def map(self, fn) -> "DiscreteField":
        return DiscreteField(self.mesh, fn(self.values))

    def __mul__(self, c: float) -> "DiscreteField":
        return DiscreteField(self.mesh, self.values * c)

    __rmul__ = __mul__

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def integrate_power_source(mesh: RadialMesh, amplitude: float, a_exp: float) -> np.ndarray:
    """Exact per-cell integrals of amplitude * r^(-a_exp) over the ball."""
    N = mesh.dimension
    if a_exp >= N:
        raise ValueError(f"r^-{a_exp} is not integrable near 0 in dimension {N}")
    if amplitude == 0:
        return np.zeros_like(mesh.cell_volumes)
    k = N - a_exp
    return amplitude * mesh.omega / k * np.diff(mesh.cell_bounds**k)


def integrate_function(mesh: RadialMesh, fn, points: int = 8) -> np.ndarray:
    """Per-cell integrals of a smooth radial function by Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(points)
    lo, hi = mesh.cell_bounds[:-1, None], mesh.cell_bounds[1:, None]
    half = 0.5 * (hi - lo)
    r = lo + half * (x + 1.0)
    vals = fn(r) * r ** (mesh.dimension - 1)
    return mesh.omega * np.sum(half * w * vals, axis=1)


def lp_norm(field: DiscreteField, s: float) -> float:
    """Discrete L^s norm (nodal value times cell volume); ``s = inf`` gives the max."""
    if not (s >= 1):
        raise ValueError(f"Lebesgue exponent must be >= 1, got {s}")
    u = np.abs(field.values)
    if math.isinf(s):
        return float(u.max())
    scale = u.max()
    if scale == 0:
        return 0.0
    # scaled to keep large exponents from overflowing
    return float(scale * np.sum((u / scale) ** s * field.mesh.cell_volumes) ** (1.0 / s))


def grad_lp_seminorm(field: DiscreteField, s: float, window: float = 1.0) -> float:
    """L^s norm of the face gradients over the faces with r <= window."""
    if not (s >= 1):
        raise ValueError(f"Lebesgue exponent must be >= 1, got {s}")
    if not (window > 0):
        raise ValueError(f"window must be positive, got {window}")
    mesh = field.mesh
    h = mesh.spacing
    g = np.abs(np.diff(field.values) / h)
    keep = mesh.faces <= window
    g, weight = g[keep], (mesh.face_areas * h)[keep]
    if g.size == 0 or g.max() == 0:
        return 0.0
    scale = g.max()
    return float(scale * np.sum((g / scale) ** s * weight) ** (1.0 / s))


def interior_min(field: DiscreteField, rho: float = 0.8) -> float:
    """Smallest nodal value on the ball r <= rho."""
    if not (0 < rho < 1):
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return float(field.values[field.mesh.nodes <= rho].min())
