"""Geometry, occupancy and arrival kernels shared by the analytic and Monte Carlo engines."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate, special

SPEED_OF_LIGHT = 3e8  # m/s


class Scheme(str, Enum):
    NORA = "nora"
    ORA = "ora"


class ArrivalKind(str, Enum):
    UNIFORM = "uniform"
    BETA = "beta"


@dataclass(frozen=True)
class CellGeometry:
    """Circular cell of radius ``d_c`` (m) with RMS delay spread ``t_rms`` (s)."""

    d_c: float
    t_rms: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.d_c > 0:
            raise ValueError(f"d_c must be > 0, got {self.d_c!r}")
        if not self.t_rms >= 0:
            raise ValueError(f"t_rms must be >= 0, got {self.t_rms!r}")
        if self.c != SPEED_OF_LIGHT:
            raise ValueError(f"c is fixed at {SPEED_OF_LIGHT}, got {self.c!r}")


@dataclass(frozen=True)
class ArrivalModel:
    """Arrival-time distribution over ``[0, T_AP]`` (ms)."""

    kind: ArrivalKind = ArrivalKind.UNIFORM
    T_AP: float = 10000.0
    alpha: float = 3.0
    beta: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ArrivalKind(self.kind))
        if not self.T_AP >= 0:
            raise ValueError(f"T_AP must be >= 0, got {self.T_AP!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"beta shape parameters must be > 0, got ({self.alpha!r}, {self.beta!r})")

    def density(self, t):
        """p(t) in 1/ms; zero outside [0, T_AP]."""
        t = np.asarray(t, dtype=float)
        T = self.T_AP
        inside = (t >= 0) & (t <= T)
        if self.kind is ArrivalKind.UNIFORM:
            return np.where(inside, 1.0 / T, 0.0)
        x = np.clip(t / T, 0.0, 1.0)
        return np.where(inside, _beta_pdf(x, self.alpha, self.beta) / T, 0.0)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.T_AP == 0:
            return np.where(t >= 0, 1.0, 0.0)
        x = np.clip(t / self.T_AP, 0.0, 1.0)
        if self.kind is ArrivalKind.UNIFORM:
            return x
        return special.betainc(self.alpha, self.beta, x)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind is ArrivalKind.UNIFORM:
            return rng.uniform(0.0, self.T_AP, size=n)
        return self.T_AP * rng.beta(self.alpha, self.beta, size=n)


def _beta_pdf(x, a, b):
    return np.exp((a - 1) * np.log(np.maximum(x, 1e-300)) + (b - 1) * np.log(np.maximum(1 - x, 1e-300))
                  - special.betaln(a, b))


def default_detection_prob(l):
    """Table default p_l = 1 - exp(-l)."""
    return 1.0 - np.exp(-np.asarray(l, dtype=float))


@dataclass(frozen=True)
class PreamblePool:
    R: int = 54
    L: int = 10
    p_l: Callable = field(default=default_detection_prob, compare=False)

    def __post_init__(self):
        if self.R < 2:
            raise ValueError(f"R must be >= 2, got {self.R!r}")
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L!r}")
        p = self.detection_probs()
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise ValueError(f"p_l must lie in [0, 1] for l = 1..{self.L}, got {p.tolist()}")

    def detection_probs(self) -> np.ndarray:
        """p_l for l = 1..L as an array of length L."""
        p = np.asarray(self.p_l(np.arange(1, self.L + 1)), dtype=float)
        return np.broadcast_to(p, (self.L,)).copy()


def distance_density(x: float, geom: CellGeometry) -> float:
    """Density of the UE-to-eNB distance for UEs uniform over the cell disk."""
    if not 0 < x < geom.d_c:
        raise ValueError(f"distance {x!r} outside (0, d_c={geom.d_c})")
    return 2.0 * x / geom.d_c ** 2


def sample_distances(n: int, geom: CellGeometry, rng: np.random.Generator) -> np.ndarray:
    # inverse CDF of 2x/d_c^2
    return geom.d_c * np.sqrt(rng.uniform(0.0, 1.0, size=n))


def delta_t_density(y, geom: CellGeometry):
    """Density of the arrival-time gap |d1 - d2|/c between two same-preamble UEs."""
    y = np.asarray(y, dtype=float)
    d, c = geom.d_c, geom.c
    f = 4 * c / (3 * d ** 4) * (2 * d ** 3 - 3 * d ** 2 * c * y + c ** 3 * y ** 3)
    return np.where((y > 0) & (y < d / c), f, 0.0)


def separability_probabilities(geom: CellGeometry) -> tuple[float, float]:
    """(p_s1, p_s2): probability the two arrivals are closer / farther apart than t_rms."""
    d, c, t = geom.d_c, geom.c, geom.t_rms
    if t * c >= d:
        return 1.0, 0.0
    p_s1 = 4 * c / (3 * d ** 4) * (2 * d ** 3 * t - 1.5 * d ** 2 * c * t ** 2 + 0.25 * c ** 3 * t ** 4)
    p_s1 = min(max(p_s1, 0.0), 1.0)
    return p_s1, 1.0 - p_s1


def occupancy_expectation(i: int, m: int, R: int) -> float:
    """E[Y_r^i]: probability that a given preamble is chosen by exactly i of m UEs."""
    if not 0 <= i <= m:
        raise ValueError(f"need 0 <= i <= m, got i={i}, m={m}")
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    if R == 1:
        return 1.0 if i == m else 0.0
    if m <= 30:
        return math.comb(m, i) * (1 / R) ** i * (1 - 1 / R) ** (m - i)
    log_p = (special.gammaln(m + 1) - special.gammaln(i + 1) - special.gammaln(m - i + 1)
             - i * math.log(R) + (m - i) * math.log1p(-1 / R))
    return float(math.exp(log_p))


def expected_preamble_successes(m, R: int, p_s2: float, scheme: Scheme | str = Scheme.NORA):
    """Expected number of detected UEs when m UEs contend on R preambles (array-friendly in m)."""
    scheme = Scheme(scheme)
    m = np.asarray(m, dtype=float)
    base = m * (1 - 1 / R) ** np.maximum(m - 1, 0)
    if scheme is Scheme.ORA:
        return base
    return base * (1 + p_s2 * np.maximum(m - 1, 0) / (2 * (R - 1)))


def slot_edges(n_slots: int, T_RAP: float) -> np.ndarray:
    """Slot boundaries t_0..t_K with t_k = k * T_RAP."""
    return T_RAP * np.arange(n_slots + 1, dtype=float)


def arrival_mass(k: int, cfg: ArrivalModel, T_RAP: float, U: float) -> float:
    """Expected number of first attempts in slot k, i.e. U times the mass of (t_{k-1}, t_k].

    With ``T_AP = 0`` every UE arrives at t = 0 and is assigned to slot 1.
    """
    lo, hi = (k - 1) * T_RAP, k * T_RAP
    if cfg.T_AP == 0:
        return float(U) if k == 1 else 0.0
    if hi <= 0 or lo >= cfg.T_AP:
        return 0.0
    lo, hi = max(lo, 0.0), min(hi, cfg.T_AP)
    if cfg.kind is ArrivalKind.UNIFORM:
        return U * (hi - lo) / cfg.T_AP
    mass, _ = integrate.quad(lambda t: float(cfg.density(t)), lo, hi, epsabs=1e-12, epsrel=1e-12, limit=200)
    return U * mass


def arrival_masses(n_slots: int, cfg: ArrivalModel, T_RAP: float, U: float) -> np.ndarray:
    """Vector of arrival_mass for k = 1..n_slots via CDF differences."""
    if cfg.T_AP == 0:
        out = np.zeros(n_slots)
        out[0] = U
        return out
    edges = slot_edges(n_slots, T_RAP)
    return U * np.diff(cfg.cdf(edges))
