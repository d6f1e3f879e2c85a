"""Per-UE Monte Carlo simulation of the four-message NORA / ORA handshake.

Time advances slot by slot through an event queue keyed by ``(slot, ue_id)``; each
popped batch is one RA slot. Every transmitting UE picks a preamble uniformly, the
preamble phase sorts transmitters into detected singles, detected NORA pairs and
failures, and the Msg3 phase decodes the detected ones. Failed UEs back off and
re-enter the queue until they succeed or exhaust ``max_attempts``.

Replication ``r`` of a run with master seed ``s`` uses the stream
``numpy.random.SeedSequence(entropy=s, spawn_key=(r,))``, so any replication can be
rerun in isolation.
"""
from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .analytic import SlotTrace, ra_interval_slots
from .channel import OutageParams, outage_group, outage_single, sample_channel_power, sample_sic_decode
from .core import CellGeometry, PreamblePool, Scheme, sample_distances, separability_probabilities


class UEState(str, Enum):
    WAITING_SLOT = "waiting_slot"
    BACKING_OFF = "backing_off"
    AWAITING_RAR = "awaiting_rar"
    AWAITING_CR = "awaiting_cr"
    SUCCEEDED = "succeeded"
    FAILED = "failed"


class Outcome(str, Enum):
    SUCCESS = "success"
    PREAMBLE_FAIL = "preamble_fail"
    MESSAGE_FAIL = "message_fail"


@dataclass
class Attempt:
    attempt: int
    slot: int
    time: float
    outcome: Outcome
    backoff: float = 0.0  # drawn backoff after the turnaround, ms
    align: float = 0.0  # wait from backoff expiry to the next RA slot, ms


@dataclass
class UERecord:
    id: int
    arrival_time: float
    distance: float
    attempt: int = 0
    state: UEState = UEState.WAITING_SLOT
    next_event_time: float = 0.0
    log: list = field(default_factory=list)
    end_time: float | None = None

    @property
    def first_attempt_time(self) -> float | None:
        return self.log[0].time if self.log else None

    @property
    def delay(self) -> float | None:
        """Time from the first preamble to completion, for succeeded UEs."""
        if self.state is not UEState.SUCCEEDED:
            return None
        return self.end_time - self.first_attempt_time

    def _advance(self, t: float):
        if t < self.next_event_time:
            raise RuntimeError(f"UE {self.id}: event time went backwards ({t} < {self.next_event_time})")
        self.next_event_time = t


@dataclass
class SlotOutcome:
    k: int
    groups: dict  # preamble -> list of UE ids
    singles: list = field(default_factory=list)
    pairs: list = field(default_factory=list)  # (first decoded, second decoded)
    preamble_failed: list = field(default_factory=list)
    msg3_collided: list = field(default_factory=list)  # got a RAR but share Msg3 resources with no SIC
    idle: int = 0

    def buckets(self):
        return self.singles, [u for p in self.pairs for u in p], self.preamble_failed, self.msg3_collided


@dataclass
class SimulationResult:
    trace: SlotTrace
    ues: list

    def ue_table(self) -> dict:
        return ue_table(self.ues)


def ue_table(ues) -> dict:
    """Column arrays (id, arrival, distance, attempts, delay, state) for a list of UERecord."""
    return {
        "id": np.array([u.id for u in ues], dtype=int),
        "arrival": np.array([u.arrival_time for u in ues], dtype=float),
        "distance": np.array([u.distance for u in ues], dtype=float),
        "attempts": np.array([u.attempt for u in ues], dtype=int),
        "delay": np.array([np.nan if u.delay is None else u.delay for u in ues], dtype=float),
        "state": np.array([u.state.value for u in ues]),
    }


def replication_seed(seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(r,))


def preamble_phase(groups: dict, attempts: dict, distances: dict, geom: CellGeometry, pool: PreamblePool,
                   rng: np.random.Generator, scheme: Scheme | str = Scheme.NORA, k: int = 0,
                   pair_resolution: str = "geometric", p_s2: float | None = None,
                   scenario1: str = "ideal") -> SlotOutcome:
    """Sort the transmitters of one slot into detection buckets.

    ``groups`` maps preamble index to the ids that chose it; ``attempts`` and
    ``distances`` give each id's attempt index and distance. Singles are detected
    with probability p_l. A NORA pair whose arrival gap is at least t_rms is
    resolvable, and each member is then detected independently with its own p_l; if
    only one member is detected it is served as a single. Unresolvable pairs, every
    ORA pair and every group of three or more fail at the preamble stage, except
    that ``scenario1="realistic"`` lets an unresolvable pair receive one shared RAR
    and collide at Msg3.
    """
    scheme = Scheme(scheme)
    p_l = pool.p_l
    out = SlotOutcome(k=k, groups=groups, idle=pool.R - len(groups))
    if pair_resolution == "coin" and p_s2 is None:
        p_s2 = separability_probabilities(geom)[1]
    for pre in sorted(groups):
        ids = groups[pre]
        if len(ids) == 1:
            (u,) = ids
            if rng.random() < p_l(attempts[u]):
                out.singles.append(u)
            else:
                out.preamble_failed.append(u)
            continue
        if len(ids) == 2 and scheme is Scheme.NORA:
            a, b = ids
            if pair_resolution == "coin":
                resolvable = rng.random() < p_s2
            else:
                resolvable = abs(distances[a] - distances[b]) / geom.c >= geom.t_rms
            if resolvable:
                hit = [u for u in ids if rng.random() < p_l(attempts[u])]
                if len(hit) == 2:
                    # smaller TA (closer UE) gets order 1: full power, decoded first
                    out.pairs.append(tuple(sorted(hit, key=lambda u: (distances[u], u))))
                elif len(hit) == 1:
                    out.singles.append(hit[0])
                out.preamble_failed.extend(u for u in ids if u not in hit)
                continue
        if len(ids) == 2 and scenario1 == "realistic":
            hit = [rng.random() < p_l(attempts[u]) for u in ids]
            if any(hit):
                out.msg3_collided.extend(ids)
            else:
                out.preamble_failed.extend(ids)
            continue
        out.preamble_failed.extend(ids)
    return out


def rar_msg3_phase(singles, pairs, params: OutageParams, rng: np.random.Generator,
                   msg3_model: str = "sampled") -> dict:
    """Msg3 decoding; returns ``{ue_id: success}`` for every detected UE.

    ``msg3_model="sampled"`` draws Rayleigh fading per UE (SIC for pairs);
    ``"closed-form"`` flips coins with the closed-form outage probabilities,
    keeping the SIC chain (second success implies first success).
    """
    ok = {}
    if msg3_model == "sampled":
        if singles:
            g = sample_channel_power(len(singles), params.theta, rng)
            win = np.log2(1.0 + params.gamma_target * g) >= params.R_hat_0
            ok.update(zip(singles, win.tolist()))
        for first, second in pairs:
            ok[first], ok[second] = sample_sic_decode(params, rng)
        return ok
    if msg3_model != "closed-form":
        raise ValueError(f"unknown msg3_model {msg3_model!r}")
    p0 = outage_single(params)
    p1, p2 = outage_group(params)
    for u in singles:
        ok[u] = bool(rng.random() >= p0)
    for first, second in pairs:
        x = rng.random()
        ok[first], ok[second] = bool(x < 1 - p1), bool(x < 1 - p2)
    return ok


def schedule_backoff(ue: UERecord, outcome: Outcome, now: float, cfg, rng: np.random.Generator) -> float | None:
    """Schedule the next attempt after a failure at slot time ``now``.

    Returns the next transmission time (an RA slot instant), or None when the UE has
    used all attempts and becomes Failed.
    """
    t0 = cfg.t_pf0 if outcome is Outcome.PREAMBLE_FAIL else cfg.t_mf0
    if ue.attempt >= cfg.max_attempts:
        ue.state = UEState.FAILED
        ue.end_time = now + t0
        ue._advance(ue.end_time)
        return None
    backoff = cfg.w_bo - rng.uniform(0.0, cfg.w_bo) if cfg.w_bo > 0 else 0.0  # (0, W_BO]
    expiry = now + t0 + backoff
    slot = math.ceil(expiry / cfg.t_rap - 1e-9)
    t_next = slot * cfg.t_rap
    rec = ue.log[-1]
    rec.backoff, rec.align = backoff, t_next - expiry
    ue.state = UEState.BACKING_OFF
    ue._advance(t_next)
    return t_next


def run_simulation(cfg, seed=None, p_s2: float | None = None) -> SimulationResult:
    """Simulate one replication; deterministic for a given ``(cfg, seed)``.

    ``seed`` may be an int, a SeedSequence or None (uses ``cfg.seed``). ``p_s2`` is
    only used with ``pair_resolution="coin"``.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    scheme = cfg.scheme_enum
    geom, pool, params = cfg.geometry(), cfg.pool(), cfg.outage_params()
    L, T = cfg.max_attempts, cfg.t_rap
    n = cfg.ues

    arrivals = cfg.arrival_model().sample(n, rng)
    dist = sample_distances(n, geom, rng)
    ues = [UERecord(id=i, arrival_time=float(arrivals[i]), distance=float(dist[i])) for i in range(n)]
    distances = {i: ues[i].distance for i in range(n)}
    queue = []
    for ue in ues:
        slot = max(1, math.ceil(ue.arrival_time / T - 1e-12))
        ue.next_event_time = slot * T
        queue.append((slot, ue.id))
    heapq.heapify(queue)

    K = ra_interval_slots(cfg)
    rows = {}  # slot -> (L, 6) counts: U PS1 PS2 PF MS MF
    idle = {}
    while queue:
        k = queue[0][0]
        batch = []
        while queue and queue[0][0] == k:
            batch.append(heapq.heappop(queue)[1])
        now = k * T
        attempts = {}
        for u in batch:
            ue = ues[u]
            ue.attempt += 1
            ue.state = UEState.AWAITING_RAR
            ue._advance(now)
            attempts[u] = ue.attempt
        choice = rng.integers(cfg.preambles, size=len(batch))
        groups = {}
        for u, c in zip(batch, choice.tolist()):
            groups.setdefault(c, []).append(u)
        so = preamble_phase(groups, attempts, distances, geom, pool, rng, scheme, k=k,
                            pair_resolution=cfg.pair_resolution, p_s2=p_s2, scenario1=cfg.scenario1)
        ok = rar_msg3_phase(so.singles, so.pairs, params, rng, cfg.msg3_model)
        for u in so.msg3_collided:
            ok[u] = False

        counts = rows.setdefault(k, np.zeros((L, 6)))
        idle[k] = so.idle
        singles, paired, pf, collided = so.buckets()
        for u in batch:
            counts[attempts[u] - 1, 0] += 1
        for u in singles + collided:
            counts[attempts[u] - 1, 1] += 1
        for u in paired:
            counts[attempts[u] - 1, 2] += 1
        for u in pf:
            counts[attempts[u] - 1, 3] += 1

        for u in batch:
            ue = ues[u]
            if u in ok:
                success = ok[u]
                outcome = Outcome.SUCCESS if success else Outcome.MESSAGE_FAIL
                counts[ue.attempt - 1, 4 if success else 5] += 1
            else:
                outcome = Outcome.PREAMBLE_FAIL
            ue.log.append(Attempt(attempt=ue.attempt, slot=k, time=now, outcome=outcome))
            if outcome is Outcome.SUCCESS:
                ue.state = UEState.SUCCEEDED
                ue.end_time = now + cfg.t_s
                ue._advance(ue.end_time)
                continue
            t_next = schedule_backoff(ue, outcome, now, cfg, rng)
            if t_next is not None:
                heapq.heappush(queue, (round(t_next / T), u))

    K = max([K] + list(rows))
    arr = np.zeros((K, L, 6))
    idle_arr = np.full(K, float(cfg.preambles))
    for k, c in rows.items():
        arr[k - 1] = c
        idle_arr[k - 1] = idle[k]
    trace = SlotTrace(T_RAP=T, U=arr[..., 0], U_PS1=arr[..., 1], U_PS2=arr[..., 2], U_PF=arr[..., 3],
                      U_MS=arr[..., 4], U_MF=arr[..., 5], idle=idle_arr,
                      meta={"engine": "montecarlo", "scheme": cfg.scheme, "K": K, "R": cfg.preambles})
    return SimulationResult(trace=trace, ues=ues)


def _replicate(args):
    cfg, r, p_s2, keep_ues = args
    res = run_simulation(cfg, seed=replication_seed(cfg.seed, r), p_s2=p_s2)
    return res.trace, (res.ue_table() if keep_ues else None)


def run_replications(cfg, replications: int | None = None, workers: int | None = None,
                     p_s2: float | None = None, keep_ues: bool = True):
    """Run independent replications; results are in replication order.

    Returns a list of ``(SlotTrace, ue_table or None)``.
    """
    n = cfg.replications if replications is None else replications
    workers = cfg.workers if workers is None else workers
    jobs = [(cfg, r, p_s2, keep_ues) for r in range(n)]
    if workers <= 1 or n == 1:
        return [_replicate(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate, jobs))


def mean_trace(traces) -> SlotTrace:
    """Element-wise mean of traces, zero-padding shorter ones to the longest K."""
    traces = list(traces)
    K = max(t.K for t in traces)
    L = traces[0].L

    def stack(name):
        out = np.zeros((K, L))
        for t in traces:
            out[: t.K] += t.column(name)
        return out / len(traces)

    idle = None
    if all(t.idle is not None for t in traces):
        # slots past a replication's end are fully idle
        R = traces[0].meta["R"]
        idle = np.zeros(K)
        for t in traces:
            padded = np.full(K, R)
            padded[: t.K] = t.idle
            idle += padded
        idle /= len(traces)
    return SlotTrace(T_RAP=traces[0].T_RAP, U=stack("U"), U_PS1=stack("U_PS1"), U_PS2=stack("U_PS2"),
                     U_PF=stack("U_PF"), U_MS=stack("U_MS"), U_MF=stack("U_MF"), idle=idle,
                     meta={**traces[0].meta, "replications": len(traces)})
