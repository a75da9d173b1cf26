import math

import pytest
from hypothesis import given, settings, strategies as st

from piggyback.errors import DegenerateDenominator
from piggyback.network import (
    PowerProfile,
    Regime,
    RegimeThresholds,
    SnrConfig,
    Topology,
    amplification_gains,
    classify_regime,
    equivalent_channel,
    noise_variance_closed_form,
)

gain = st.floats(0.1, 2.0)
power = st.floats(0.0, 20.0)


def test_beta_unit_scenario(unit, snr1):
    b3, b4 = amplification_gains(unit, PowerProfile(1, 1, 1, 1), snr1)
    assert b3 == pytest.approx(0.7071068, abs=1e-7)
    assert b4 == pytest.approx(math.sqrt(0.5), rel=1e-15)


def test_beta_silent_relay(unit, snr1):
    b3, b4 = amplification_gains(unit, PowerProfile(1, 1, 0, 1), snr1)
    assert b3 == 0.0
    assert b4 > 0


def test_beta_mixed(unit, snr1, mixed_powers):
    b3, b4 = amplification_gains(unit, mixed_powers, snr1)
    assert b3 == pytest.approx(0.0999950, abs=1e-7)
    assert b3 ** 2 == pytest.approx(1 / 100.01, rel=1e-14)


def test_beta_degenerate_raises(unit, snr1):
    with pytest.raises(DegenerateDenominator):
        amplification_gains(unit, PowerProfile(0, 0, 1, 1), snr1)


def test_beta_relay_noise_flag(unit):
    cfg = SnrConfig(2.0, include_relay_noise_in_beta=True)
    b3, _ = amplification_gains(unit, PowerProfile(0, 0, 1, 1), cfg)
    # relay receives only its own unit noise: beta^2 = p3 / (1/snr)
    assert b3 ** 2 == pytest.approx(2.0)
    b3, _ = amplification_gains(unit, PowerProfile(1, 1, 1, 1), cfg)
    assert b3 ** 2 == pytest.approx(1 / (2 + 0.5))


def test_equivalent_channel_unit(unit, snr1):
    eq = equivalent_channel(unit, PowerProfile(1, 1, 1, 1), snr1)
    assert eq.h1eq == pytest.approx(1.4142136, abs=1e-7)
    assert eq.h2eq == pytest.approx(1.4142136, abs=1e-7)
    assert eq.sigma_zeq == pytest.approx(2.0, rel=1e-15)
    assert eq.sigma_eq == pytest.approx(2.0 + 2.0)
    assert eq.gamma == pytest.approx(0.25)
    assert eq.zeta == pytest.approx(0.5)
    assert eq.snr_high == pytest.approx(0.5)
    assert eq.snr_low == pytest.approx(1.0)


def test_equivalent_channel_no_second_hop(snr1):
    topo = Topology(h35=0.0, h45=0.0)
    eq = equivalent_channel(topo, PowerProfile(1, 1, 1, 1), snr1)
    assert eq.h1eq == 0 and eq.h2eq == 0
    assert eq.sigma_zeq == 1.0


def test_equivalent_channel_mixed(unit, snr1, mixed_powers):
    eq = equivalent_channel(unit, mixed_powers, snr1)
    assert eq.sigma_zeq == pytest.approx(1.0199980, abs=1e-7)
    assert eq.sigma_zeq == pytest.approx(1 + 2 / 100.01, rel=1e-14)


def test_sink6_uses_its_own_second_hop(snr1):
    topo = Topology(h36=0.5, h46=0.5)
    pw = PowerProfile(1, 1, 1, 1)
    e5, e6 = equivalent_channel(topo, pw, snr1, 5), equivalent_channel(topo, pw, snr1, 6)
    assert e6.h1eq == pytest.approx(0.5 * e5.h1eq)
    assert e6.sigma_zeq == pytest.approx(1 + 2 * 0.25 * 0.5)
    with pytest.raises(ValueError):
        equivalent_channel(topo, pw, snr1, 7)


@pytest.mark.parametrize(
    "powers, expected",
    [((1, 1, 1, 1), 2.0), ((1, 1, 0, 0), 1.0), ((100, 0.01, 1, 1), 1.0199980)],
)
def test_noise_closed_form_examples(unit, snr1, powers, expected):
    assert noise_variance_closed_form(unit, PowerProfile(*powers), snr1) == pytest.approx(expected, abs=1e-7)


@settings(max_examples=300, deadline=None)
@given(st.lists(gain, min_size=8, max_size=8), st.lists(power, min_size=4, max_size=4),
       st.floats(0.1, 10), st.floats(0.5, 10), st.floats(0.5, 10), st.sampled_from([5, 6]))
def test_sigma_matches_closed_form(gains, powers, snr, s1, s2, sink):
    topo = Topology(*gains)
    pw = PowerProfile(*powers)
    cfg = SnrConfig(snr, s1, s2)
    try:
        eq = equivalent_channel(topo, pw, cfg, sink)
    except DegenerateDenominator:
        return
    cf = noise_variance_closed_form(topo, pw, cfg, sink)
    assert abs(eq.sigma_zeq - cf) <= 1e-12 * eq.sigma_zeq
    assert eq.sigma_zeq >= 1.0
    assert eq.sigma_eq == pytest.approx(eq.sigma_zeq + snr * s2 * eq.h2eq ** 2 * pw.p2, rel=1e-14)


def test_sigma_decreases_to_one_in_p1(unit, snr1):
    sigmas = [equivalent_channel(unit, PowerProfile(p1, 0.5, 1, 1), snr1).sigma_zeq for p1 in (1, 1e2, 1e4, 1e6)]
    assert all(a >= b for a, b in zip(sigmas, sigmas[1:]))
    assert sigmas[-1] - 1.0 < 1e-5


@given(st.floats(1.01, 20.0))
def test_scaling_first_hop_lowers_sigma(c):
    pw = PowerProfile(1.0, 1.0, 1.0, 1.0)
    base = Topology(h13=0.7, h14=0.4, h23=1.1, h24=0.3)
    scaled = Topology(h13=0.7 * c, h14=0.4 * c, h23=1.1 * c, h24=0.3 * c)
    cfg = SnrConfig(1.0)
    s0 = equivalent_channel(base, pw, cfg).sigma_zeq
    s1 = equivalent_channel(scaled, pw, cfg).sigma_zeq
    assert 1.0 <= s1 < s0


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        Topology(h13=-1.0)
    with pytest.raises(ValueError):
        PowerProfile(-1, 0)
    with pytest.raises(ValueError):
        SnrConfig(0.0)
    with pytest.raises(ValueError):
        RegimeThresholds(theta_hi=0.1, theta_lo=1.0)


TH = RegimeThresholds(10, 0.1, 0.05)


@pytest.mark.parametrize(
    "p1, p2, sigma, expected",
    [
        (100, 0.01, 1.02, Regime.HIGH_LOW),
        (1, 1, 1.02, Regime.INDETERMINATE),
        (0.01, 100, 1.02, Regime.LOW_HIGH),
        (100, 0.01, 1.5, Regime.INDETERMINATE),
        (100, 100, 3.0, Regime.HIGH_HIGH),
        (0.01, 0.01, 3.0, Regime.LOW_LOW),
    ],
)
def test_classify_regime(p1, p2, sigma, expected):
    label = classify_regime(PowerProfile(p1, p2), sigma, TH)
    assert label.regime is expected
    assert label.thresholds == TH


@given(power, power, st.floats(1.0, 5.0))
def test_classify_is_pure(p1, p2, sigma):
    a = classify_regime(PowerProfile(p1, p2), sigma, TH)
    b = classify_regime(PowerProfile(p1, p2), sigma, TH)
    assert a == b
