import itertools
import math
import warnings

import numpy as np
import pytest

from nora.channel import (
    OutageParams,
    OutageValidityWarning,
    arrived_snr,
    backoff_transmit_power,
    group_outage_is_valid,
    message_success_coefficients,
    outage_group,
    outage_single,
    sample_channel_power,
    sample_sic_decode,
    sample_sic_outcomes,
    sample_single_decode,
    sic_exact_outage,
)

DEFAULT = OutageParams()
N = 1_000_000


def within_3se(p_hat, p, n=N):
    se = math.sqrt(max(p * (1 - p), 1e-12) / n)
    return abs(p_hat - p) <= 3 * se


def test_default_closed_forms():
    assert DEFAULT.phi_0 == pytest.approx((2**1.6 - 1) / 10)
    assert DEFAULT.phi_0 == pytest.approx(0.2031, abs=1e-4)
    assert outage_single(DEFAULT) == pytest.approx(0.0966, abs=1e-4)
    assert DEFAULT.alpha_1 == pytest.approx(0.9911, abs=1e-4)
    p1, p2 = outage_group(DEFAULT)
    assert p1 == pytest.approx(0.1047, abs=1e-4)
    assert p2 == pytest.approx(0.2688, abs=2e-4)
    c0, c12 = message_success_coefficients(DEFAULT)
    assert c0 == pytest.approx(0.9034, abs=1e-4)
    assert c12 == pytest.approx(0.8133, abs=2e-4)


def test_backoff_power_and_snr():
    assert backoff_transmit_power(1, -100.0, 3.0) == -100.0
    assert backoff_transmit_power(2, -100.0, 3.0) == -103.0
    assert arrived_snr(10.0, 2, 3.0) / 10.0 == pytest.approx(10 ** -0.3)
    assert arrived_snr(10.0, 2, 3.0) / 10.0 == pytest.approx(0.5012, abs=1e-4)
    assert arrived_snr(10.0, 3, 0.0) == 10.0


def test_single_outage_limits():
    assert outage_single(OutageParams(R_hat_0=0.0)) == 0.0
    assert outage_single(OutageParams(gamma_target=1e12)) == pytest.approx(0.0, abs=1e-9)


def test_single_outage_matches_sampler():
    rng = np.random.default_rng(11)
    ok = sample_single_decode(DEFAULT, rng, N)
    assert within_3se(1 - ok.mean(), outage_single(DEFAULT))


def test_channel_power_mean():
    rng = np.random.default_rng(1)
    g = sample_channel_power(N, 1.5, rng)
    assert g.mean() == pytest.approx(2 * 1.5**2, rel=0.01)


def test_group_outage_ordering_and_limits():
    p1, p2 = outage_group(DEFAULT)
    assert p2 >= p1
    big = OutageParams(delta_db=200.0)
    assert big.alpha_1 == pytest.approx(2.0)
    assert math.isinf(big.phi_2) or big.phi_2 > 1e15
    with pytest.warns(OutageValidityWarning):
        assert outage_group(big)[1] == pytest.approx(1.0)


def test_group_outage_boundary_is_flagged():
    p = OutageParams(R_hat_1=0.0, R_hat_2=0.0, delta_db=0.0)
    assert p.alpha_1 == 2.0
    assert not group_outage_is_valid(p)
    with pytest.warns(OutageValidityWarning):
        p1, p2 = outage_group(p)
    assert 0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0


def test_sic_decode_examples():
    rng = np.random.default_rng(3)
    zero = OutageParams(R_hat_1=0.0, R_hat_2=0.0)
    assert all(sample_sic_decode(zero, rng) == (True, True) for _ in range(100))
    tiny = OutageParams(theta=1e-9)
    assert all(sample_sic_decode(tiny, rng) == (False, False) for _ in range(100))


def test_sic_chain():
    rng = np.random.default_rng(5)
    ok1, ok2 = sample_sic_outcomes(DEFAULT, 100_000, rng)
    assert not np.any(ok2 & ~ok1)


def test_sic_reproducible():
    a = [sample_sic_decode(DEFAULT, np.random.default_rng(42)) for _ in range(3)]
    b = [sample_sic_decode(DEFAULT, np.random.default_rng(42)) for _ in range(3)]
    assert a == b
    x = sample_sic_outcomes(DEFAULT, 1000, np.random.default_rng(9))
    y = sample_sic_outcomes(DEFAULT, 1000, np.random.default_rng(9))
    assert all(np.array_equal(u, v) for u, v in zip(x, y))


GRID = list(itertools.product((5.0, 10.0, 20.0), (0.0, 3.0, 6.0), (0.5, 1.6, 3.0)))


@pytest.mark.parametrize("snr_db,delta,rate", GRID)
def test_sampler_matches_its_exact_outage(snr_db, delta, rate):
    """The TA-ordered sampler agrees with its own exact outage expression on the full grid."""
    p = OutageParams(gamma_target=10 ** (snr_db / 10), delta_db=delta, R_hat_0=rate, R_hat_1=rate, R_hat_2=rate)
    rng = np.random.default_rng(hash((snr_db, delta, rate)) % 2**32)
    ok1, ok2 = sample_sic_outcomes(p, N, rng)
    e1, e2 = sic_exact_outage(p)
    assert within_3se(1 - ok1.mean(), e1)
    assert within_3se(1 - ok2.mean(), e2)
    ok0 = sample_single_decode(p, rng, N)
    assert within_3se(1 - ok0.mean(), outage_single(p))


def test_gain_ordered_first_decode_matches_closed_form():
    """alpha_1 is the ordered-statistics factor: with the stronger draw decoded first,
    the first-UE outage matches the closed form at the defaults."""
    rng = np.random.default_rng(17)
    ok1, _ = sample_sic_outcomes(DEFAULT, N, rng, order="gain")
    assert within_3se(1 - ok1.mean(), outage_group(DEFAULT)[0])


def test_monotonicity_in_rate_and_snr():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OutageValidityWarning)
        rates = [outage_group(OutageParams(R_hat_1=r, R_hat_2=r)) for r in (0.5, 1.0, 1.6, 3.0)]
        snrs = [outage_group(OutageParams(gamma_target=g)) for g in (3.0, 10.0, 100.0)]
    assert all(a[1] <= b[1] for a, b in zip(rates, rates[1:]))
    assert all(a[1] >= b[1] for a, b in zip(snrs, snrs[1:]))
    s0 = [outage_single(OutageParams(R_hat_0=r)) for r in (0.5, 1.6, 3.0)]
    assert s0 == sorted(s0)


def test_params_validation():
    with pytest.raises(ValueError):
        OutageParams(gamma_target=0.0)
    with pytest.raises(ValueError):
        OutageParams(theta=0.0)


def test_group_closed_form_matches_sic_sampler():
    """Closed-form group outage against the decode sampler at the defaults.

    Known to fail: the closed form's alpha_1 comes from strength-ordered decoding and
    its second-UE term multiplies independent factors, while the sampler decodes in
    back-off order. The measured gap is recorded in the decisions ledger.
    """
    rng = np.random.default_rng(23)
    ok1, ok2 = sample_sic_outcomes(DEFAULT, N, rng)
    p1, p2 = outage_group(DEFAULT)
    assert within_3se(1 - ok1.mean(), p1), f"first decoded: sampler {1 - ok1.mean():.4f} vs closed form {p1:.4f}"
    assert within_3se(1 - ok2.mean(), p2), f"second decoded: sampler {1 - ok2.mean():.4f} vs closed form {p2:.4f}"
