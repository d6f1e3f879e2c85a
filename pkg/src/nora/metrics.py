"""KPIs and delay constants computed from a SlotTrace (analytic or simulated)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analytic import SlotTrace


@dataclass(frozen=True)
class DelayConstants:
    T_PF0: float
    T_MF0: float
    T_S: float
    T_backoff: float
    T_PF: float
    T_MF: float
    p_PF: float | None
    p_MF: float | None
    T_F: float | None

    def T_l(self, l):
        """Mean delay of a UE that succeeds on attempt l."""
        if self.T_F is None:
            if np.all(np.asarray(l) == 1):
                return self.T_S + 0.0 * np.asarray(l, dtype=float)
            raise ValueError("T_F undefined: no failures observed")
        return (np.asarray(l, dtype=float) - 1) * self.T_F + self.T_S

    def m_max(self, d):
        """Largest attempt count l with T_l(l) <= d (0 if none)."""
        d = np.asarray(d, dtype=float)
        if self.T_F is None or self.T_F == 0:
            return np.where(d >= self.T_S, np.iinfo(np.int64).max, 0)
        return np.where(d >= self.T_S, np.floor((d - self.T_S) / self.T_F + 1e-9).astype(np.int64) + 1, 0)


@dataclass
class MetricsReport:
    scheme: str
    engine: str
    U: int
    R_RA: float
    P_C: float
    P_S: float | None
    F: list | None
    G_grid: list | None
    G: list | None
    L_bar: float | None
    D_RA: float | None
    D_RA_measured: float | None = None
    delays: DelayConstants | None = None
    per_slot_success: list = field(default_factory=list)
    per_slot_failed: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    empirical_delay_cdf: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def kpis(self) -> dict:
        return {"R_RA": self.R_RA, "P_C": self.P_C, "P_S": self.P_S, "F1": self.F[0] if self.F else None,
                "L_bar": self.L_bar, "D_RA": self.D_RA}


def delay_constants(cfg, trace: SlotTrace | None = None) -> DelayConstants:
    """Turnaround times from the timing parameters; failure mix from the trace sums."""
    t_backoff = cfg.w_bo / 2.0
    t_pf, t_mf = cfg.t_pf0 + t_backoff, cfg.t_mf0 + t_backoff
    p_pf = p_mf = t_f = None
    if trace is not None:
        tot_u, tot_ps = trace.total("U"), float(trace.U_PS.sum())
        if tot_u > 0:
            p_pf = trace.total("U_PF") / tot_u
        if tot_ps > 0:
            p_mf = trace.total("U_MF") / tot_ps
        t_f = mix_failure_time(p_pf, p_mf, t_pf, t_mf)
    return DelayConstants(T_PF0=cfg.t_pf0, T_MF0=cfg.t_mf0, T_S=cfg.t_s, T_backoff=t_backoff, T_PF=t_pf,
                          T_MF=t_mf, p_PF=p_pf, p_MF=p_mf, T_F=t_f)


def mix_failure_time(p_pf, p_mf, t_pf, t_mf):
    """Mean time lost per failed attempt, mixing preamble and message failures."""
    if p_pf is None:
        return None
    w_mf = 0.0 if p_mf is None else (1 - p_pf) * p_mf
    den = p_pf + w_mf
    if den <= 0:
        return None
    return (p_pf * t_pf + w_mf * t_mf) / den


def collision_probability(trace: SlotTrace, R: int, return_clamped: bool = False):
    """Fraction of all offered preambles that carried an undetected collision.

    Analytic traces use the expected idle count R(1-1/R)^{U_k}; simulated traces
    carry the realised idle count. Negative per-slot numerators are clamped to 0.
    """
    Uk = trace.per_slot("U")
    ps = trace.U_PS.sum(axis=1)
    if trace.idle is not None:
        idle = trace.idle
    else:
        idle = R * (1 - 1 / R) ** Uk
    num = R - idle - ps
    clamped = int(np.sum(num < -1e-12))
    pc = float(np.maximum(num, 0.0).sum() / (trace.K * R)) if trace.K else 0.0
    return (pc, clamped) if return_clamped else pc


def access_success(trace: SlotTrace, U: int) -> float | None:
    if U == 0:
        return None
    return trace.total("U_MS") / U


def preamble_cdf(trace: SlotTrace) -> np.ndarray | None:
    """F(m) for m = 1..L: share of successes that needed at most m preambles."""
    per_l = trace.U_MS.sum(axis=0)
    tot = per_l.sum()
    if tot <= 0:
        return None
    F = np.cumsum(per_l) / tot
    F[-1] = 1.0
    return F


def delay_grid(constants: DelayConstants, L: int) -> np.ndarray:
    if constants.T_F is None:
        return np.array([constants.T_S])
    return constants.T_S + constants.T_F * np.arange(L)


def delay_cdf(trace: SlotTrace, constants: DelayConstants, grid=None):
    """(grid, G) with G(d) = F(m_max(d)); the default grid is the reachable delays T_l."""
    F = preamble_cdf(trace)
    if F is None:
        return None
    if grid is None:
        grid = delay_grid(constants, trace.L)
    grid = np.asarray(grid, dtype=float)
    m = np.minimum(constants.m_max(grid), trace.L)
    G = np.where(m > 0, F[np.maximum(m, 1) - 1], 0.0)
    return grid, G


def averages(trace: SlotTrace, constants: DelayConstants):
    """(mean attempts, mean model delay) over successful UEs; (None, None) if there are none."""
    per_l = trace.U_MS.sum(axis=0)
    tot = per_l.sum()
    if tot <= 0:
        return None, None
    l = np.arange(1, trace.L + 1)
    L_bar = float((per_l * l).sum() / tot)
    if constants.T_F is None:
        return L_bar, constants.T_S
    return L_bar, float((per_l * constants.T_l(l)).sum() / tot)


def empirical_cdf(values, step: float = 1.0):
    v = np.sort(np.asarray(values, dtype=float))
    v = v[np.isfinite(v)]
    if v.size == 0:
        return None
    grid = np.arange(0.0, math.ceil(v[-1] / step) * step + step, step)
    return grid, np.searchsorted(v, grid, side="right") / v.size


def compute_report(cfg, trace: SlotTrace, engine: str | None = None, measured_delays=None) -> MetricsReport:
    """All KPIs for one trace; ``measured_delays`` adds the simulator's per-UE delays."""
    c = delay_constants(cfg, trace)
    pc, clamped = collision_probability(trace, cfg.preambles, return_clamped=True)
    F = preamble_cdf(trace)
    gd = delay_cdf(trace, c)
    L_bar, D = averages(trace, c)
    ms = trace.per_slot("U_MS")
    rep = MetricsReport(
        scheme=cfg.scheme, engine=engine or trace.meta.get("engine", "analytic"), U=cfg.ues,
        R_RA=trace.total("U_MS"), P_C=pc, P_S=access_success(trace, cfg.ues),
        F=None if F is None else F.tolist(),
        G_grid=None if gd is None else gd[0].tolist(), G=None if gd is None else gd[1].tolist(),
        L_bar=L_bar, D_RA=D, delays=c,
        per_slot_success=ms.tolist(), per_slot_failed=(trace.per_slot("U") - ms).tolist(),
        diagnostics={"pc_clamped_slots": clamped, "breakdown_cells": trace.breakdown_cells,
                     "lost_mass": trace.lost_mass, "K": trace.K},
    )
    if measured_delays is not None:
        md = np.asarray(measured_delays, dtype=float)
        md = md[np.isfinite(md)]
        if md.size:
            rep.D_RA_measured = float(md.mean())
            g, v = empirical_cdf(md)
            rep.empirical_delay_cdf = {"grid": g.tolist(), "G": v.tolist()}
    return rep
