"""Power back-off, Rayleigh fading and SIC outage: closed forms plus sampling paths.

Received SNR is parameterised directly: power control targets a constant arrived
SNR ``gamma_target`` and the i-th member of a NORA group backs off by
``(i-1)*delta`` dB, so its arrived SNR is ``gamma_target * 10**(-(i-1)*delta/10)``.
Rates are in bits/s/Hz (base-2 logarithms).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class OutageValidityWarning(UserWarning):
    """Group-outage closed form produced a value outside [0, 1] and was clamped."""


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class OutageParams:
    gamma_target: float = 10.0  # linear
    delta_db: float = 3.0
    R_hat_0: float = 1.6
    R_hat_1: float = 1.6
    R_hat_2: float = 1.6
    theta: float = 1.0

    def __post_init__(self):
        if not self.gamma_target > 0:
            raise ValueError(f"gamma_target must be > 0, got {self.gamma_target!r}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta!r}")
        if not self.delta_db >= 0:
            raise ValueError(f"delta_db must be >= 0, got {self.delta_db!r}")
        for name in ("R_hat_0", "R_hat_1", "R_hat_2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    def arrived_snr(self, order: int) -> float:
        """Arrived SNR of the UE with back-off order ``order`` (1 = no back-off)."""
        return arrived_snr(self.gamma_target, order, self.delta_db)

    @property
    def phi_0(self) -> float:
        return (2.0 ** self.R_hat_0 - 1.0) / self.gamma_target

    @property
    def phi_1(self) -> float:
        return (2.0 ** self.R_hat_1 - 1.0) / self.arrived_snr(1)

    @property
    def phi_2(self) -> float:
        gamma_2 = self.arrived_snr(2)
        if gamma_2 == 0:
            return math.inf
        return (2.0 ** self.R_hat_2 - 1.0) / gamma_2

    @property
    def alpha_1(self) -> float:
        return 2.0 / (1.0 + 10.0 ** (-self.delta_db / 10.0) * (2.0 ** self.R_hat_1 - 1.0))


def arrived_snr(gamma_target: float, order: int, delta_db: float) -> float:
    if order < 1:
        raise ValueError(f"group order must be >= 1, got {order}")
    return gamma_target * 10.0 ** (-(order - 1) * delta_db / 10.0)


def backoff_transmit_power(i: int, p0_dbm: float, delta_db: float, n_rb: int = 1,
                           path_loss_db: float = 0.0, alpha: float = 1.0) -> float:
    """PUSCH transmit power (dBm) of the i-th UE in a NORA group, ignoring the P_max cap."""
    if i < 1:
        raise ValueError(f"group order must be >= 1, got {i}")
    return p0_dbm - (i - 1) * delta_db + 10.0 * math.log10(n_rb) + alpha * path_loss_db


def outage_single(params: OutageParams) -> float:
    """Outage probability of a UE that is alone on its preamble."""
    return 1.0 - math.exp(-params.phi_0 / (2.0 * params.theta ** 2))


def outage_group(params: OutageParams) -> tuple[float, float]:
    """Closed-form outage of the first and second decoded UE of a two-UE NORA group.

    Values are clamped to [0, 1]; clamping emits :class:`OutageValidityWarning`.
    """
    a1 = params.alpha_1
    if a1 > 2.0:
        raise ValueError(f"invalid configuration: alpha_1 = {a1} > 2")
    two_theta2 = 2.0 * params.theta ** 2
    p1 = 1.0 - a1 * math.exp(-params.phi_1 / two_theta2)
    p2 = 1.0 - a1 * math.exp(-(params.phi_1 + params.phi_2) / two_theta2)
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        warnings.warn(
            f"group outage closed form out of range (p1={p1:.4g}, p2={p2:.4g}, alpha_1={a1:.4g}); clamped",
            OutageValidityWarning, stacklevel=2)
        p1, p2 = min(max(p1, 0.0), 1.0), min(max(p2, 0.0), 1.0)
    return p1, p2


def group_outage_is_valid(params: OutageParams) -> bool:
    a1 = params.alpha_1
    return a1 * math.exp(-params.phi_1 / (2.0 * params.theta ** 2)) <= 1.0


def message_success_coefficients(params: OutageParams) -> tuple[float, float]:
    """(single, group) per-UE Msg3 success probabilities used by the fluid model."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutageValidityWarning)
        p1, p2 = outage_group(params)
    return 1.0 - outage_single(params), 1.0 - 0.5 * (p1 + p2)


def sample_channel_power(n, theta: float, rng: np.random.Generator):
    """|v|^2 for Rayleigh amplitudes with scale theta: exponential with mean 2 theta^2."""
    return rng.exponential(2.0 * theta ** 2, size=n)


def sample_single_decode(params: OutageParams, rng: np.random.Generator, n=None):
    g = sample_channel_power(n, params.theta, rng)
    return np.log2(1.0 + params.gamma_target * g) >= params.R_hat_0


def _sic(params: OutageParams, g1, g2):
    gamma_1, gamma_2 = params.arrived_snr(1), params.arrived_snr(2)
    r1 = np.log2(1.0 + gamma_1 * g1 / (gamma_2 * g2 + 1.0))
    ok1 = r1 >= params.R_hat_1
    r2 = np.log2(1.0 + gamma_2 * g2)
    ok2 = ok1 & (r2 >= params.R_hat_2)
    return ok1, ok2


def sample_sic_decode(params: OutageParams, rng: np.random.Generator) -> tuple[bool, bool]:
    """One SIC decode of a two-UE group; the order-1 UE is decoded first.

    The second UE can only be recovered after the first one is decoded and cancelled.
    """
    g1, g2 = sample_channel_power(2, params.theta, rng)
    ok1, ok2 = _sic(params, g1, g2)
    return bool(ok1), bool(ok2)


def sample_sic_outcomes(params: OutageParams, n: int, rng: np.random.Generator, order: str = "ta"):
    """Vectorised SIC decoding of ``n`` independent groups.

    ``order="ta"`` decodes the back-off order (independent of fading), matching
    :func:`sample_sic_decode`. ``order="gain"`` hands the stronger fading draw to
    the order-1 slot, which is the ordered-statistics model behind ``alpha_1``.
    """
    g = sample_channel_power((n, 2), params.theta, rng)
    g1, g2 = g[:, 0], g[:, 1]
    if order == "gain":
        g1, g2 = np.maximum(g1, g2), np.minimum(g1, g2)
    elif order != "ta":
        raise ValueError(f"unknown decoding order {order!r}")
    return _sic(params, g1, g2)


def sic_exact_outage(params: OutageParams) -> tuple[float, float]:
    """Exact outage of :func:`sample_sic_decode` (iid exponential channel powers, fixed order)."""
    s1 = 2.0 ** params.R_hat_1 - 1.0
    s2 = 2.0 ** params.R_hat_2 - 1.0
    g1, g2 = params.arrived_snr(1), params.arrived_snr(2)
    m = 2.0 * params.theta ** 2
    k = 1.0 + s1 * g2 / g1
    p_z1 = math.exp(-s1 / (g1 * m)) / k
    p_z12 = math.exp(-s1 / (g1 * m)) * math.exp(-(s2 / g2) * k / m) / k
    return 1.0 - p_z1, 1.0 - p_z12
