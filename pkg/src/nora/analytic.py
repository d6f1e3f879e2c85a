"""Deterministic fluid recursion over expected UE counts per RA slot and attempt index."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import OutageParams, message_success_coefficients
from .core import PreamblePool, Scheme, arrival_masses, separability_probabilities

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("U", "U_PS", "U_PS1", "U_PS2", "U_PF", "U_MS", "U_MF")


class ModelBreakdownError(ArithmeticError):
    """Fluid recursion produced NaN or negative mass."""


@dataclass(frozen=True)
class SlotTrace:
    """Per-slot, per-attempt UE counts. Row ``k-1`` holds slot k, column ``l-1`` attempt l.

    ``idle`` is the realised number of unused preambles per slot; only the simulator
    fills it in. ``breakdown_cells`` counts (k, l) cells whose detection output had
    to be clamped to keep U_PS <= U.
    """

    T_RAP: float
    U: np.ndarray
    U_PS1: np.ndarray
    U_PS2: np.ndarray
    U_PF: np.ndarray
    U_MS: np.ndarray
    U_MF: np.ndarray
    idle: np.ndarray | None = None
    breakdown_cells: int = 0
    lost_mass: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("U", "U_PS1", "U_PS2", "U_PF", "U_MS", "U_MF", "idle"):
            a = getattr(self, name)
            if a is not None:
                a = np.array(a, dtype=float)
                a.setflags(write=False)
                object.__setattr__(self, name, a)

    @property
    def U_PS(self) -> np.ndarray:
        return self.U_PS1 + self.U_PS2

    @property
    def K(self) -> int:
        return self.U.shape[0]

    @property
    def L(self) -> int:
        return self.U.shape[1]

    @property
    def t(self) -> np.ndarray:
        """Slot instants t_k = k * T_RAP for k = 1..K."""
        return self.T_RAP * np.arange(1, self.K + 1, dtype=float)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def per_slot(self, name: str) -> np.ndarray:
        return self.column(name).sum(axis=1)

    def total(self, name: str) -> float:
        return float(self.column(name).sum())


@dataclass(frozen=True)
class BackoffKernel:
    W_BO: float
    T_PF0: float
    T_MF0: float
    T_RAP: float

    def __post_init__(self):
        for name in ("W_BO", "T_PF0", "T_MF0", "T_RAP"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")


def ra_interval_slots(cfg) -> int:
    """Number of RA slots K covering arrivals plus the worst-case lifetime of the last UE."""
    t_w = math.ceil(cfg.t_rap / 2)
    t_ra = (cfg.max_attempts - 1) * (max(cfg.t_pf0, cfg.t_mf0) + cfg.w_bo) + cfg.t_s
    return max(math.ceil((cfg.t_ap + t_w + t_ra) / cfg.t_rap), 1)


def detect_split(U_k_l, U_k: float, l, pool: PreamblePool, p_s2: float):
    """Split attempt-l contenders of a slot into (single detections, NORA-group detections, failures).

    ``U_k_l`` and ``l`` may be arrays (one entry per attempt index). Returns the three
    arrays and a flag set when the detected mass had to be clamped to ``U_k_l``.
    """
    U_k_l = np.asarray(U_k_l, dtype=float)
    p = np.asarray(pool.p_l(np.asarray(l)), dtype=float)
    if U_k <= 0:
        z = np.zeros_like(U_k_l)
        return z, z.copy(), z.copy(), False
    e = math.exp(-U_k / pool.R)
    ps1 = U_k_l * p * e
    # (U_k - 1) goes negative for fractional loads below one UE; the group term cannot
    ps2 = p_s2 * max(U_k - 1.0, 0.0) / (2.0 * (pool.R - 1)) * ps1
    ps = ps1 + ps2
    flagged = bool(np.any(ps > U_k_l * (1 + 1e-12)))
    if flagged:
        scale = np.where(ps > U_k_l, U_k_l / np.where(ps > 0, ps, 1.0), 1.0)
        ps1, ps2 = ps1 * scale, ps2 * scale
    pf = np.maximum(U_k_l - ps1 - ps2, 0.0)
    return ps1, ps2, pf, flagged


def message_split(U_PS1, U_PS2, outage: OutageParams | tuple):
    """Split detected UEs into Msg3 successes and failures.

    ``outage`` is either :class:`OutageParams` or a precomputed pair of success
    coefficients ``(1 - p_out0, 1 - (p_out1 + p_out2)/2)``.
    """
    if isinstance(outage, OutageParams):
        c_single, c_group = message_success_coefficients(outage)
    else:
        c_single, c_group = outage
    U_PS1 = np.asarray(U_PS1, dtype=float)
    U_PS2 = np.asarray(U_PS2, dtype=float)
    ms = c_single * U_PS1 + c_group * U_PS2
    return ms, U_PS1 + U_PS2 - ms


def _overlap(k_src: int, k_dst: int, t0: float, w: float, t_rap: float) -> float:
    # backoff expiry ~ U(t_src + t0, t_src + t0 + w]; destination window (t_{dst-1}, t_dst]
    a = k_src * t_rap + t0
    lo, hi = (k_dst - 1) * t_rap, k_dst * t_rap
    if w <= 0:
        return 1.0 if lo < a <= hi else 0.0
    return max(0.0, min(a + w, hi) - max(a, lo)) / w


def backoff_overlap_pf(k_src: int, k_dst: int, kern: BackoffKernel) -> float:
    """Fraction of preamble-failure backoff expiries from slot k_src that land in slot k_dst."""
    return _overlap(k_src, k_dst, kern.T_PF0, kern.W_BO, kern.T_RAP)


def backoff_overlap_mf(k_src: int, k_dst: int, kern: BackoffKernel) -> float:
    """Same as :func:`backoff_overlap_pf` for message failures (turnaround T_MF0)."""
    return _overlap(k_src, k_dst, kern.T_MF0, kern.W_BO, kern.T_RAP)


def source_slot_bounds(k: int, t0: float, w: float, t_rap: float) -> tuple[int, int]:
    """Index range [k_min, k_max] of source slots that may feed slot k (conservative)."""
    return math.floor((k - 1) - (t0 + w) / t_rap), math.ceil(k - t0 / t_rap)


def kernel_offsets(t0: float, w: float, t_rap: float) -> np.ndarray:
    """Weights w[d] = P(retry lands d slots after the failed slot), d = 0..D."""
    d_max = math.ceil((t0 + w) / t_rap) + 1
    return np.array([_overlap(0, d, t0, w, t_rap) for d in range(d_max + 1)])


def run_fluid_model(cfg, p_s2: float | None = None) -> SlotTrace:
    """Forward recursion over k = 1..K of the expected-count model.

    ``p_s2`` overrides the geometric separability probability (ignored for ORA).
    """
    pool = cfg.pool()
    R, L = pool.R, pool.L
    K = ra_interval_slots(cfg)
    if cfg.scheme_enum is Scheme.ORA:
        p_s2 = 0.0
    elif p_s2 is None:
        p_s2 = separability_probabilities(cfg.geometry())[1]
    coeffs = message_success_coefficients(cfg.outage_params())
    p = pool.detection_probs()

    w_pf = kernel_offsets(cfg.t_pf0, cfg.w_bo, cfg.t_rap)
    w_mf = kernel_offsets(cfg.t_mf0, cfg.w_bo, cfg.t_rap)
    if w_pf[0] > 0 or w_mf[0] > 0:
        raise ValueError("backoff turnaround shorter than zero slots; recursion would not be causal")

    U = np.zeros((K, L))
    PS1 = np.zeros((K, L))
    PS2 = np.zeros((K, L))
    PF = np.zeros((K, L))
    MS = np.zeros((K, L))
    MF = np.zeros((K, L))
    U[:, 0] = arrival_masses(K, cfg.arrival_model(), cfg.t_rap, cfg.ues)
    grp = p_s2 / (2.0 * (R - 1))
    flagged = 0

    for k in range(K):
        if L > 1:
            for weights, fail in ((w_pf, PF), (w_mf, MF)):
                for d in range(1, min(len(weights), k + 1)):
                    if weights[d]:
                        U[k, 1:] += weights[d] * fail[k - d, :-1]
        row = U[k]
        Uk = row.sum()
        if not math.isfinite(Uk) or np.any(row < 0):
            raise ModelBreakdownError(f"invalid mass in slot {k + 1}: {row}")
        if Uk <= 0:
            continue
        e = math.exp(-Uk / R)
        ps1 = row * p * e
        ps2 = grp * max(Uk - 1.0, 0.0) * ps1
        ps = ps1 + ps2
        over = ps > row * (1 + 1e-12)
        if np.any(over):
            flagged += int(over.sum())
            scale = np.where(over, row / np.where(ps > 0, ps, 1.0), 1.0)
            ps1, ps2 = ps1 * scale, ps2 * scale
        PS1[k] = ps1
        PS2[k] = ps2
        PF[k] = np.maximum(row - ps1 - ps2, 0.0)
        MS[k], MF[k] = message_split(ps1, ps2, coeffs)

    if flagged:
        log.warning("detection clamped in %d (k, l) cells", flagged)

    # mass whose retry would land beyond slot K
    lost = 0.0
    for weights, fail in ((w_pf, PF), (w_mf, MF)):
        for d in range(1, len(weights)):
            if weights[d] and L > 1:
                lost += weights[d] * fail[K - d:, :-1].sum()
    return SlotTrace(T_RAP=cfg.t_rap, U=U, U_PS1=PS1, U_PS2=PS2, U_PF=PF, U_MS=MS, U_MF=MF,
                     breakdown_cells=flagged, lost_mass=float(lost),
                     meta={"engine": "analytic", "scheme": cfg.scheme, "p_s2": p_s2, "K": K})
