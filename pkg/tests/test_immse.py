import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import bpsk_mmse, bpsk_pair_mi, central_difference
from piggyback.errors import InsufficientSamples, StepTooLarge
from piggyback.immse import (
    BPSK,
    GAUSSIAN,
    EstimationScheme,
    InputDistribution,
    Scenario,
    discrete_conditional_mean,
    fd_identity_check,
    gaussian_conditional_mean,
    gaussian_mi,
    gaussian_mmse,
    mi_derivative,
    mi_monte_carlo,
    mmse_closed_form_gaussian,
    mmse_monte_carlo,
    psi_closed_form_gaussian_joint,
    substream,
    unit_mmse_fn,
)
from piggyback.network import PowerProfile, SnrConfig, Topology, equivalent_channel
from piggyback.rates import rate_joint, rate_r1_treat_as_noise, rate_r2_after_cancellation

JOINT = EstimationScheme.joint()
SIC12 = EstimationScheme.sic(1)
SIC21 = EstimationScheme.sic(2)
SEED = 20170301


def normalized(g1, g2, sigma=1.0, snr=1.0):
    """Equivalent channel whose normalized gains are exactly (g1, g2) at unit powers."""
    base = equivalent_channel(Topology(), PowerProfile(1, 1, 1, 1), SnrConfig(snr))
    eq = replace(base, h1eq=math.sqrt(g1 * sigma), h2eq=math.sqrt(g2 * sigma), sigma_zeq=sigma)
    return eq, PowerProfile(1, 1, 1, 1), SnrConfig(snr)


def within(value, target, stderr, k=3.0):
    return abs(value - target) <= k * stderr


# --- scalar estimators -----------------------------------------------------


def test_gaussian_mmse_examples():
    assert gaussian_mmse(0.0) == 1.0
    assert gaussian_mmse(3.0) == 0.25
    assert gaussian_mmse(1e12) < 1e-11


def test_gaussian_conditional_mean_examples():
    assert gaussian_conditional_mean(0.0, 5.0) == 0.0
    assert gaussian_conditional_mean(1.0, 2.0) == pytest.approx(1.0)
    assert gaussian_conditional_mean(3.0, math.sqrt(3.0)) == pytest.approx(0.75)


def test_bpsk_conditional_mean():
    assert discrete_conditional_mean(BPSK, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert discrete_conditional_mean(BPSK, 4.0, 10.0) == pytest.approx(1.0, abs=1e-9)
    assert discrete_conditional_mean(BPSK, 1.0, 1.0) == pytest.approx(0.7615942, abs=1e-7)
    # far tail: stabilized exponent keeps it finite
    assert discrete_conditional_mean(BPSK, 100.0, -1e3) == pytest.approx(-1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True), st.floats(0.0, 20.0), st.floats(-5, 5))
def test_discrete_conditional_mean_brute_force(points, s, y):
    if np.allclose(points, 0):
        return
    dist = InputDistribution.discrete(points)
    pts, pr = np.array(dist.points), np.array(dist.probs)
    lik = pr * np.exp(-0.5 * (y - math.sqrt(s) * pts) ** 2)
    if lik.sum() == 0:
        return
    assert discrete_conditional_mean(dist, s, y) == pytest.approx(float(lik @ pts / lik.sum()), abs=1e-9)


def test_input_distribution_validation():
    with pytest.raises(ValueError):
        InputDistribution("discrete", (1.0, -1.0), (0.6, 0.6))
    with pytest.raises(ValueError):
        InputDistribution("discrete", (2.0, -2.0), (0.5, 0.5))
    d = InputDistribution.pam(4)
    assert sum(p * x * x for p, x in zip(d.probs, d.points)) == pytest.approx(1.0)


# --- closed forms ------------------------------------------------------------


def test_normalized_joint_fixture():
    eq, pw, cfg = normalized(1.0, 1.0)
    rep = mmse_closed_form_gaussian(eq, pw, cfg, JOINT)
    assert rep.mmse1 + rep.mmse2 == pytest.approx(4 / 3, rel=1e-14)
    assert rep.psi == pytest.approx(-2 / 3, rel=1e-14)
    assert rep.total_derivative == pytest.approx(1 / 3, rel=1e-14)
    assert psi_closed_form_gaussian_joint(eq, pw, cfg) == pytest.approx(-2 / 3, rel=1e-14)
    # analytic derivative of 0.5 ln(1 + 2 s) at s = 1
    assert mi_derivative(eq, pw, cfg, JOINT) == pytest.approx(1 / (1 + 2 * 1.0), rel=1e-14)


def test_zero_power_derivative(unit, snr1):
    topo = Topology(h35=0, h45=0)
    pw = PowerProfile(1, 1, 1, 1)
    eq = equivalent_channel(topo, pw, snr1)
    for scheme in (JOINT, SIC12, SIC21):
        assert mi_derivative(eq, pw, snr1, scheme) == 0.0
    eq = equivalent_channel(unit, PowerProfile(1, 0, 1, 1), snr1)
    assert psi_closed_form_gaussian_joint(eq, PowerProfile(1, 0, 1, 1), snr1) == 0.0


def test_sic_closed_form_psi_is_zero(unit, snr1):
    pw = PowerProfile(3, 0.5, 1, 1)
    eq = equivalent_channel(unit, pw, snr1)
    assert mmse_closed_form_gaussian(eq, pw, snr1, SIC12).psi == 0.0
    assert mmse_closed_form_gaussian(eq, pw, snr1, SIC21).psi == 0.0


def test_sic_derivative_matches_fd_of_rates(unit):
    topo, pw = unit, PowerProfile(3, 0.5, 1, 1)
    eq = equivalent_channel(topo, pw, SnrConfig(2.0))

    def rate_sum(snr):
        cfg = SnrConfig(snr)
        return rate_r1_treat_as_noise(eq, pw, cfg) + rate_r2_after_cancellation(eq, pw, cfg)

    fd = central_difference(rate_sum, 2.0, 1e-5)
    assert mi_derivative(eq, pw, SnrConfig(2.0), SIC12) == pytest.approx(fd, abs=1e-8)


def test_gaussian_mi_short_circuit(unit, snr1):
    pw = PowerProfile(2, 3, 1, 1)
    eq = equivalent_channel(unit, pw, snr1)
    est = mi_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, snr1, JOINT)
    assert abs(est.total - rate_joint(eq, pw, snr1)) <= 1e-12
    assert est.stderr == 0.0
    sic = mi_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, snr1, SIC12)
    assert sic.rate1 == pytest.approx(rate_r1_treat_as_noise(eq, pw, snr1), rel=1e-12)


# --- Monte-Carlo -----------------------------------------------------------


def test_mc_normalized_joint_fixture():
    eq, pw, cfg = normalized(1.0, 1.0)
    rep = mmse_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, cfg, JOINT, 100_000, SEED)
    se_sum = math.hypot(rep.stderr_mmse1, rep.stderr_mmse2)
    assert within(rep.mmse1 + rep.mmse2, 4 / 3, se_sum)
    assert within(rep.psi, -2 / 3, rep.stderr_psi)
    assert within(rep.total_derivative, 1 / 3, rep.stderr_total)


@pytest.mark.parametrize("scheme", [SIC12, SIC21])
def test_mc_gaussian_sic_orthogonal(scheme, unit):
    pw = PowerProfile(5, 0.5, 1, 1)
    eq = equivalent_channel(unit, pw, SnrConfig(2.0))
    rep = mmse_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, SnrConfig(2.0), scheme, 100_000, SEED)
    assert rep.stderr_psi > 0
    assert abs(rep.psi) <= 3 * rep.stderr_psi
    cf = mmse_closed_form_gaussian(eq, pw, SnrConfig(2.0), scheme)
    assert within(rep.total_derivative, cf.total_derivative, rep.stderr_total)


def test_psi_closed_form_matches_mc_on_random_scenarios():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g1, g2, sigma, snr = rng.uniform(0.1, 3), rng.uniform(0.1, 3), rng.uniform(1, 3), rng.uniform(0.2, 5)
        eq, pw, _ = normalized(g1, g2, sigma)
        cfg = SnrConfig(snr)
        rep = mmse_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, cfg, JOINT, 100_000, SEED)
        assert within(rep.psi, psi_closed_form_gaussian_joint(eq, pw, cfg), rep.stderr_psi)


def test_bpsk_joint_psi_nonzero():
    # documented sweep: equal normalized gains, snr in {0.25, 1, 4}
    eq, pw, _ = normalized(1.0, 1.0)
    hits = []
    for snr in (0.25, 1.0, 4.0):
        rep = mmse_monte_carlo(BPSK, BPSK, eq, pw, SnrConfig(snr), JOINT, 100_000, SEED)
        hits.append(abs(rep.psi) > 3 * rep.stderr_psi)
    assert any(hits)


def test_mmse_report_deterministic(unit, snr1):
    pw = PowerProfile(2, 1, 1, 1)
    eq = equivalent_channel(unit, pw, snr1)
    a = mmse_monte_carlo(BPSK, BPSK, eq, pw, snr1, JOINT, 20_000, 11)
    b = mmse_monte_carlo(BPSK, BPSK, eq, pw, snr1, JOINT, 20_000, 11)
    c = mmse_monte_carlo(BPSK, BPSK, eq, pw, snr1, JOINT, 20_000, 12)
    assert a == b
    assert a != c


def test_substream_independent_of_call_order():
    x = substream(3, "a", 1.0).standard_normal(4)
    substream(3, "b", 2.0).standard_normal(100)
    assert np.array_equal(x, substream(3, "a", 1.0).standard_normal(4))
    assert not np.array_equal(x, substream(3, "b", 1.0).standard_normal(4))


def test_insufficient_samples(unit, snr1):
    pw = PowerProfile(1, 1, 1, 1)
    eq = equivalent_channel(unit, pw, snr1)
    with pytest.raises(InsufficientSamples):
        mmse_monte_carlo(BPSK, BPSK, eq, pw, snr1, JOINT, 9_999, 1)
    with pytest.raises(InsufficientSamples):
        mi_monte_carlo(BPSK, BPSK, eq, pw, snr1, JOINT, 100, 1)


@pytest.mark.parametrize("s", [0.1, 1.0, 4.0])
def test_bpsk_mi_matches_quadrature(s):
    eq, pw, _ = normalized(1.0, 0.5)
    est = mi_monte_carlo(BPSK, BPSK, eq, pw, SnrConfig(s), JOINT, 100_000, SEED)
    assert within(est.total, bpsk_pair_mi(math.sqrt(s), math.sqrt(0.5 * s)), est.stderr)


def test_mi_zero_snr_link():
    topo = Topology(h35=0, h45=0)
    pw = PowerProfile(1, 1, 1, 1)
    eq = equivalent_channel(topo, pw, SnrConfig(1.0))
    est = mi_monte_carlo(BPSK, BPSK, eq, pw, SnrConfig(1.0), JOINT, 20_000, SEED)
    assert abs(est.total) <= max(est.stderr, 1e-15)


def test_bpsk_mmse_quadrature_vs_mc():
    for s in (0.5, 2.0):
        eq, pw, _ = normalized(s, 0.0)
        rep = mmse_monte_carlo(BPSK, BPSK, eq, pw, SnrConfig(1.0), JOINT, 100_000, SEED)
        assert within(rep.e1, bpsk_mmse(s), rep.stderr_mmse1 / s)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=5, unique=True), st.floats(0.05, 10.0))
def test_discrete_mmse_below_gaussian(points, s):
    if np.ptp(points) < 1e-3:
        return
    dist = InputDistribution.discrete(points)
    eq, pw, _ = normalized(s, 0.0)
    rep = mmse_monte_carlo(dist, GAUSSIAN, eq, pw, SnrConfig(1.0), JOINT, 20_000, SEED)
    assert rep.e1 <= 1.0 / (1.0 + s) + 3 * rep.stderr_mmse1 / s


def test_bpsk_order_changes_split_not_sum():
    eq, pw, _ = normalized(1.0, 1.0)
    cfg = SnrConfig(1.0)
    a = mi_monte_carlo(BPSK, BPSK, eq, pw, cfg, SIC12, 100_000, SEED)
    b = mi_monte_carlo(BPSK, BPSK, eq, pw, cfg, SIC21, 100_000, SEED)
    assert abs(a.rate1 - b.rate1) > 3 * math.hypot(a.stderr1, b.stderr1)
    assert abs(a.total - b.total) <= 3 * math.hypot(a.stderr, b.stderr)


def test_gaussian_order_irrelevant_for_sum(unit, snr1):
    pw = PowerProfile(4, 0.3, 1, 1)
    eq = equivalent_channel(unit, pw, snr1)
    a = mi_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, snr1, SIC12)
    b = mi_monte_carlo(GAUSSIAN, GAUSSIAN, eq, pw, snr1, SIC21)
    assert abs(a.total - b.total) <= 1e-12
    assert a.rate1 != b.rate1


def test_mixed_gaussian_bpsk_mi_consistent():
    eq, pw, _ = normalized(1.0, 0.8)
    cfg = SnrConfig(1.5)
    j = mi_monte_carlo(GAUSSIAN, BPSK, eq, pw, cfg, JOINT, 100_000, SEED)
    s = mi_monte_carlo(GAUSSIAN, BPSK, eq, pw, cfg, SIC12, 100_000, SEED)
    assert abs(j.total - s.total) <= 3 * math.hypot(j.stderr, s.stderr)
    # Gaussian input alone, interference marginalized: never above the interference-free Gaussian rate
    assert s.rate1 <= gaussian_mi(1.0, 0.0, 1.5).total + 3 * s.stderr1


# --- finite-difference identity check ----------------------------------


def test_fd_gaussian_joint_unit(unit, snr1):
    rep = fd_identity_check(Scenario(unit, PowerProfile(1, 1, 1, 1), snr1), JOINT, 1e-4)
    assert rep.passed and rep.residual < 1e-8


def test_fd_zero_power():
    rep = fd_identity_check(Scenario(Topology(h35=0, h45=0), PowerProfile(1, 1, 1, 1), SnrConfig(1.0)), SIC12, 1e-4)
    assert rep.finite_difference == 0.0 and rep.identity == 0.0 and rep.passed


@pytest.mark.parametrize("snr", [0.5, 1.0, 2.0])
def test_fd_bpsk_joint(snr, unit):
    sc = Scenario(unit, PowerProfile(2, 1, 1, 1), SnrConfig(snr), dist1=BPSK, dist2=BPSK, seed=SEED)
    rep = fd_identity_check(sc, JOINT, 1e-3)
    assert rep.stderr > 0
    assert rep.residual <= 3 * rep.stderr
    assert rep.passed


def test_fd_step_too_large(unit):
    sc = Scenario(unit, PowerProfile(1, 1, 1, 1), SnrConfig(0.5))
    with pytest.raises(StepTooLarge):
        fd_identity_check(sc, JOINT, 0.4, 1e-8)
    with pytest.raises(StepTooLarge):
        fd_identity_check(sc, JOINT, 0.6, 1e-8)


def test_fd_discrete_sic_unsupported(unit, snr1):
    sc = Scenario(unit, PowerProfile(1, 1, 1, 1), snr1, dist1=BPSK, dist2=BPSK)
    with pytest.raises(ValueError):
        fd_identity_check(sc, SIC12, 1e-3)


def test_unit_mmse_fn_bpsk_against_adaptive_quadrature():
    from scipy.integrate import quad

    fn = unit_mmse_fn(BPSK)
    for s in (0.0, 0.3, 1.0, 3.0, 10.0):
        exact = 1 - quad(lambda z: math.exp(-z * z / 2) / math.sqrt(2 * math.pi) * math.tanh(s - math.sqrt(s) * z), -12, 12)[0]
        assert fn(s) == pytest.approx(exact, abs=1e-9)
    assert unit_mmse_fn(GAUSSIAN)(3.0) == 0.25


def test_unit_mmse_fn_pam_matches_mc():
    dist = InputDistribution.pam(4)
    fn = unit_mmse_fn(dist)
    eq, pw, _ = normalized(2.0, 0.0)
    rep = mmse_monte_carlo(dist, GAUSSIAN, eq, pw, SnrConfig(1.0), JOINT, 100_000, SEED)
    assert within(rep.e1, fn(2.0), rep.stderr_mmse1 / 2.0)
    vals = [fn(s) for s in np.linspace(0, 30, 61)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
