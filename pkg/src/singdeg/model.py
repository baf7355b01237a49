"""Problem data, truncation, and exponent arithmetic.

The continuous problem is

    -div( a(x) grad u / (1 + |u|)^p ) = f / |u|^gamma   in the unit ball B_1 of R^N,
                                    u = 0            on its boundary,

with 0 < alpha <= a <= beta, f >= 0 in L^m. Only radial data are supported.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "GAMMA_EQ_TOL",
    "CoefficientSpec",
    "SourceSpec",
    "ProblemSpec",
    "ExponentTable",
    "Case",
    "Claim",
    "RegimePrediction",
    "truncate",
    "exponent_table",
    "classify_regime",
    "manufactured_profile",
]

# |gamma - (p + 1)| below this counts as the critical case gamma = p + 1
GAMMA_EQ_TOL = 1e-12

_PROFILE_SAMPLES = 1001


def truncate(s, n):
    """Clamp ``s`` to ``[-n, n]``. Works on scalars and arrays."""
    if n < 1:
        raise ValueError(f"truncation level must be >= 1, got {n}")
    if np.ndim(s) == 0:
        return float(min(max(s, -n), n))
    return np.clip(s, -n, n)


# ---------------------------------------------------------------------------
# coefficient and source
# ---------------------------------------------------------------------------

_PROFILES = ("constant", "linear", "quadratic")


@dataclass(frozen=True)
class CoefficientSpec:
    """Radial diffusion coefficient a(r) with bounds alpha <= a <= beta.

    ``constant``   a(r) = alpha
    ``linear``     a(r) = alpha + (beta - alpha) r
    ``quadratic``  a(r) = beta - (beta - alpha) r^2
    """

    profile: str = "constant"
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown coefficient profile {self.profile!r}; expected one of {_PROFILES}")
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta >= self.alpha) or not math.isfinite(self.beta):
            raise ValueError(f"need alpha <= beta < inf, got alpha={self.alpha}, beta={self.beta}")
        r = np.linspace(0.0, 1.0, _PROFILE_SAMPLES)
        a = self(r)
        if np.any(a < self.alpha * (1 - 1e-14)) or np.any(a > self.beta * (1 + 1e-14)):
            raise ValueError("coefficient profile leaves [alpha, beta]")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.profile == "constant":
            return np.full_like(r, self.alpha)
        if self.profile == "linear":
            return self.alpha + (self.beta - self.alpha) * r
        return self.beta - (self.beta - self.alpha) * r**2


def manufactured_profile(dimension: int, p: float, gamma: float, n: int):
    """Closed forms for the manufactured level-``n`` problem with a = 1.

    Returns ``(exact, operator, source)`` callables of r, where
    ``exact(r) = 1 - r^2``, ``operator`` is the degenerate operator applied to
    it, and ``source = (exact + 1/n)^gamma * operator``.
    """

    def exact(r):
        return 1.0 - np.asarray(r, dtype=float) ** 2

    def operator(r):
        r2 = np.asarray(r, dtype=float) ** 2
        w = 2.0 - r2
        return 2.0 * w ** (-p) * (dimension + 2.0 * p * r2 / w)

    def source(r):
        return (exact(r) + 1.0 / n) ** gamma * operator(r)

    return exact, operator, source


_SOURCE_KINDS = ("constant", "power", "manufactured")


@dataclass(frozen=True)
class SourceSpec:
    """Non-negative radial source.

    ``constant``      f = amplitude
    ``power``         f = amplitude * r^(-a_exp)
    ``manufactured``  f = f_n of :func:`manufactured_profile` (needs ``level``);
                      dimension/p/gamma are taken from the owning problem.
    """

    kind: str = "constant"
    amplitude: float = 1.0
    a_exp: float = 0.0
    level: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _SOURCE_KINDS:
            raise ValueError(f"unknown source kind {self.kind!r}; expected one of {_SOURCE_KINDS}")
        if not (self.amplitude >= 0) or not math.isfinite(self.amplitude):
            raise ValueError(f"source amplitude must be finite and >= 0, got {self.amplitude}")
        if self.a_exp < 0:
            raise ValueError(f"a_exp must be >= 0, got {self.a_exp}")
        if self.kind == "manufactured" and (self.level is None or self.level < 1):
            raise ValueError("manufactured source needs an integer level >= 1")

    @classmethod
    def constant(cls, c: float = 1.0) -> "SourceSpec":
        return cls("constant", amplitude=c)

    @classmethod
    def power(cls, amplitude: float, a_exp: float) -> "SourceSpec":
        return cls("power", amplitude=amplitude, a_exp=a_exp)

    @classmethod
    def manufactured(cls, level: int) -> "SourceSpec":
        return cls("manufactured", level=level)

    @property
    def is_zero(self) -> bool:
        return self.kind != "manufactured" and self.amplitude == 0.0

    def summability(self, dimension: int) -> float:
        """Sup of the admissible Lebesgue exponents: f in L^m for m < this."""
        if self.kind == "power" and self.a_exp > 0 and self.amplitude > 0:
            return dimension / self.a_exp
        return math.inf


@dataclass(frozen=True)
class ProblemSpec:
    dimension: int
    p: float
    gamma: float
    coeff: CoefficientSpec = field(default_factory=CoefficientSpec)
    source: SourceSpec = field(default_factory=SourceSpec)
    m: float = math.inf
    radius: float = 1.0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 3:
            raise ValueError(f"dimension must be an integer >= 3, got {self.dimension}")
        # p = 0 is the classical (coercive) limit, kept for the manufactured study
        if not (self.p >= 0) or not math.isfinite(self.p):
            raise ValueError(f"p must be finite and >= 0, got {self.p}")
        if not (self.gamma > 0) or not math.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma}")
        if not (self.m >= 1):
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.radius != 1.0:
            raise ValueError("only the unit ball is supported (radius = 1)")
        src = self.source
        if src.kind == "power":
            if src.a_exp >= self.dimension:
                raise ValueError(f"r^-{src.a_exp} is not integrable in dimension {self.dimension}")
            if src.amplitude > 0 and src.a_exp * self.m >= self.dimension:
                raise ValueError(
                    f"r^-{src.a_exp} is not in L^{self.m} in dimension {self.dimension} (need a_exp*m < N)"
                )

    def source_function(self) -> Callable:
        """Pointwise f(r); the power kind is infinite at r = 0."""
        src = self.source
        if src.kind == "constant":
            return lambda r: np.full_like(np.asarray(r, dtype=float), src.amplitude)
        if src.kind == "power":
            def f(r):
                r = np.asarray(r, dtype=float)
                with np.errstate(divide="ignore"):
                    return src.amplitude * r ** (-src.a_exp)
            return f
        return manufactured_profile(self.dimension, self.p, self.gamma, src.level)[2]

    def exponents(self) -> "ExponentTable":
        return exponent_table(self.dimension, self.p, self.gamma, self.m)


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentTable:
    """Exponents and thresholds of the existence/regularity theory.

    Fields that are undefined for the given data (vanishing or negative
    denominator, or ``m`` outside the range where they make sense) are None.
    """

    dimension: int
    p: float
    gamma: float
    m: float
    two_star: float
    one_star: float
    m_double_star: Optional[float]
    sigma: Optional[float]
    m_hi: Optional[float]
    m_lo: Optional[float]
    delta: Optional[float]
    theta: Optional[float]

    @property
    def m_hi_conjugate(self) -> Optional[float]:
        if self.m_hi is None or self.m_hi <= 1:
            return None
        return self.m_hi / (self.m_hi - 1.0)

    @property
    def lmss_exponent(self) -> Optional[float]:
        """m**(gamma + 1 - p), the Lebesgue exponent of case (1a)."""
        if self.m_double_star is None:
            return None
        return self.m_double_star * (self.gamma + 1.0 - self.p)

    @property
    def power_exponent(self) -> Optional[float]:
        """(gamma + 1 - p) / 2, the power of u that lies in H^1_0 in case (3)."""
        k = (self.gamma + 1.0 - self.p) / 2.0
        return k if k > 0 else None

    def as_dict(self) -> dict:
        return {
            "two_star": self.two_star,
            "one_star": self.one_star,
            "m_double_star": self.m_double_star,
            "sigma": self.sigma,
            "m_hi": self.m_hi,
            "m_lo": self.m_lo,
            "delta": self.delta,
            "theta": self.theta,
            "lmss_exponent": self.lmss_exponent,
            "power_exponent": self.power_exponent,
        }


def _ratio(num, den):
    if not math.isfinite(num) or not math.isfinite(den) or den <= 0:
        return None
    return num / den


def exponent_table(N: int, p: float, gamma: float, m: float) -> ExponentTable:
    if int(N) != N or N < 3:
        raise ValueError(f"exponent table needs an integer N >= 3, got {N}")
    if p < 0 or gamma <= 0 or not (m >= 1):
        raise ValueError(f"need p >= 0, gamma > 0, m >= 1; got p={p}, gamma={gamma}, m={m}")
    N = int(N)
    two_star = 2.0 * N / (N - 2)
    one_star = N / (N - 1.0)
    finite = math.isfinite(m)

    mss = _ratio(N * m, N - 2.0 * m) if finite else None
    sigma = _ratio(N * m * (gamma + 1.0 - p), N - m * (p + 1.0 - gamma)) if finite else None
    m_hi = _ratio(two_star, two_star - p - 1.0 + gamma)
    lo = _ratio(one_star, 2.0 * one_star - p - 1.0 + gamma)
    m_lo = None if lo is None else max(1.0, lo)
    num = (1.0 - p) * N * (m - 1.0) + gamma * m * (N - 2.0) if finite else math.nan
    delta = _ratio(num, N - 2.0 * m) if finite else None
    # theta is the same quotient written over 2m - N; it is used with m < N/2,
    # so only a vanishing denominator makes it undefined
    theta = None
    if finite and 2.0 * m != N:
        theta = ((p - 1.0) * N * (m - 1.0) - gamma * m * (N - 2.0)) / (2.0 * m - N)
    return ExponentTable(N, p, gamma, m, two_star, one_star, mss, sigma, m_hi, m_lo, delta, theta)


# ---------------------------------------------------------------------------
# regime classification
# ---------------------------------------------------------------------------


class Case(str, enum.Enum):
    CASE_1A = "Case1a"
    CASE_1B = "Case1b"
    CASE_2 = "Case2"
    CASE_3 = "Case3"
    OUT_OF_THEOREM = "OutOfTheorem"


class Claim(str, enum.Enum):
    GLOBAL_H1 = "GlobalH1"
    LM_DOUBLE_STAR_POWER = "LmDoubleStarPower"
    W1_SIGMA = "W1Sigma"
    LOCAL_H1_PLUS_POWER_H1 = "LocalH1PlusPowerH1"
    L_INFINITY = "LInfinity"


@dataclass(frozen=True)
class RegimePrediction:
    case_id: Case
    bounded: bool
    claims: frozenset
    sigma: Optional[float] = None
    power: Optional[float] = None
    lmss_exponent: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "case_id": self.case_id.value,
            "bounded": self.bounded,
            "claims": sorted(c.value for c in self.claims),
            "sigma": self.sigma,
            "power": self.power,
            "lmss_exponent": self.lmss_exponent,
        }


def _regime(p: float, gamma: float) -> str:
    if abs(gamma - (p + 1.0)) <= GAMMA_EQ_TOL:
        return "critical"
    if gamma > p + 1.0:
        return "super"
    if gamma < p - 1.0:
        return "out"
    return "sub"


def classify_regime(spec: ProblemSpec) -> RegimePrediction:
    N, p, gamma, m = spec.dimension, spec.p, spec.gamma, spec.m
    table = spec.exponents()
    bounded = m > N / 2.0
    claims = set()
    regime = _regime(p, gamma)
    if regime == "out":
        return RegimePrediction(Case.OUT_OF_THEOREM, bounded, frozenset())
    if regime == "sub":
        if m >= table.m_hi:
            case = Case.CASE_1A
            claims.add(Claim.GLOBAL_H1)
            if m < N / 2.0:
                claims.add(Claim.LM_DOUBLE_STAR_POWER)
        elif m > table.m_lo:
            case = Case.CASE_1B
            claims.add(Claim.W1_SIGMA)
        else:
            return RegimePrediction(Case.OUT_OF_THEOREM, bounded, frozenset())
    elif regime == "critical":
        case = Case.CASE_2
        claims.add(Claim.GLOBAL_H1)
    else:
        case = Case.CASE_3
        claims.add(Claim.LOCAL_H1_PLUS_POWER_H1)
    if bounded:
        claims.add(Claim.L_INFINITY)
    return RegimePrediction(
        case,
        bounded,
        frozenset(claims),
        sigma=table.sigma if case is Case.CASE_1B else None,
        power=table.power_exponent if case is Case.CASE_3 else None,
        lmss_exponent=table.lmss_exponent if Claim.LM_DOUBLE_STAR_POWER in claims else None,
    )
