"""Estimation side of the sink: conditional means, MMSE and the I-MMSE identity.

Everything is computed in the noise-normalized model

    y = sqrt(snr) * (sqrt(g1) u1 + sqrt(g2) u2) + z,   z ~ N(0, 1)

where ``u1, u2`` are unit-power inputs and ``g_j = h_jeq^2 s_j p_j / sigma_zeq``.
Channels are real and rates are in nats, so the multiuser I-MMSE identity reads

    dI/dsnr = 0.5 * (mmse1 + mmse2 + psi)

with ``mmse_j = g_j * E_j`` (``E_j`` the unit-power MSE of input ``j``) and
``psi = -2 sqrt(g1 g2) E[u1_hat u2_hat]``, the cross-term between the two
estimates.

Under successive interference cancellation (SIC) the first input is estimated
treating the other as Gaussian noise at snr ``snr g1 / (1 + snr g2)``, and the
second after subtracting the true first input. The first-stage term then
carries the chain-rule factor ``1 / (1 + snr g2)**2`` so that the report still
sums to the derivative of the sum rate. In the second stage the first input is
known exactly, so ``psi`` is the correlation between that input and the
second estimate; its mean is zero.

Inputs are handled uniformly as finite Gaussian mixtures (a discrete
constellation is a mixture of zero-variance components, a Gaussian input is
one unit-variance component), which gives exact conditional means and
likelihoods for any pairing of input types.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InsufficientSamples, NonFiniteSample, StepTooLarge
from .network import EquivChannel, PowerProfile, SnrConfig, Topology, equivalent_channel

__all__ = [
    "InputDistribution",
    "GAUSSIAN",
    "BPSK",
    "EstimationScheme",
    "MmseReport",
    "MiEstimate",
    "Scenario",
    "IdentityCheck",
    "MIN_SAMPLES",
    "DEFAULT_SAMPLES",
    "default_seed",
    "substream",
    "normalized_gains",
    "gaussian_mmse",
    "gaussian_conditional_mean",
    "discrete_conditional_mean",
    "unit_mmse_fn",
    "gaussian_mi",
    "mmse_closed_form_gaussian",
    "mmse_monte_carlo",
    "psi_closed_form_gaussian_joint",
    "mi_derivative",
    "mi_monte_carlo",
    "fd_identity_check",
]

MIN_SAMPLES = 10_000
DEFAULT_SAMPLES = 100_000
SEED_ENV = "PIGGYBACK_SEED"
_DEFAULT_SEED = 20170301
_LOG_2PI = math.log(2.0 * math.pi)


def default_seed() -> int:
    """Base seed, overridable through the ``PIGGYBACK_SEED`` environment variable."""
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw else _DEFAULT_SEED


def substream(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``key`` under ``seed``.

    Depends only on ``(seed, key)``, never on call order, so grid points can
    be evaluated in any order or in parallel.
    """
    digest = hashlib.sha256(repr(key).encode()).digest()
    words = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=words))


# --------------------------------------------------------------------------
# inputs and schemes


@dataclass(frozen=True)
class InputDistribution:
    """A unit-power channel input: Gaussian, or a discrete real constellation."""

    kind: str
    points: tuple = ()
    probs: tuple = ()
    name: str = ""

    def __post_init__(self):
        if self.kind == "gaussian":
            return
        if self.kind != "discrete":
            raise ValueError(f"unknown input kind {self.kind!r}")
        pts = np.asarray(self.points, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        if pts.ndim != 1 or pts.size == 0 or pts.shape != pr.shape:
            raise ValueError("points and probs must be equal-length nonempty sequences")
        if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        if abs(float(pr @ pts**2) - 1.0) > 1e-9:
            raise ValueError("constellation must have unit second moment")

    @classmethod
    def gaussian(cls) -> "InputDistribution":
        return cls("gaussian", name="gaussian")

    @classmethod
    def discrete(cls, points, probs=None, normalize: bool = True, name: str = "") -> "InputDistribution":
        """Discrete constellation; equiprobable unless ``probs`` is given.

        With ``normalize`` the points are rescaled to unit second moment and
        the probabilities renormalized to sum to one.
        """
        pts = np.asarray(points, dtype=float)
        pr = np.full(pts.shape, 1.0 / pts.size) if probs is None else np.asarray(probs, dtype=float)
        if normalize:
            pr = pr / pr.sum()
            pts = pts / math.sqrt(float(pr @ pts**2))
        return cls("discrete", tuple(pts.tolist()), tuple(pr.tolist()), name)

    @classmethod
    def pam(cls, order: int) -> "InputDistribution":
        return cls.discrete(np.arange(order) * 2.0 - (order - 1), name=f"{order}pam")

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"

    def mixture(self):
        """(means, variances, log-weights) of the equivalent Gaussian mixture."""
        if self.is_gaussian:
            return np.zeros(1), np.ones(1), np.zeros(1)
        pr = np.asarray(self.probs)
        with np.errstate(divide="ignore"):
            logw = np.log(pr)
        return np.asarray(self.points), np.zeros(pr.size), logw

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.is_gaussian:
            return rng.standard_normal(n)
        idx = rng.choice(len(self.points), size=n, p=np.asarray(self.probs))
        return np.asarray(self.points)[idx]

    def __str__(self):
        return self.name or self.kind


GAUSSIAN = InputDistribution.gaussian()
BPSK = InputDistribution.discrete([-1.0, 1.0], name="bpsk")


@dataclass(frozen=True)
class EstimationScheme:
    """Joint estimation of both inputs, or SIC with a decoding order.

    ``first`` names the input estimated first; it only matters under SIC.
    """

    mode: str = "sic"
    first: int = 1

    def __post_init__(self):
        if self.mode not in ("joint", "sic"):
            raise ValueError(f"mode must be 'joint' or 'sic', got {self.mode!r}")
        if self.first not in (1, 2):
            raise ValueError("first must be 1 or 2")

    @classmethod
    def joint(cls) -> "EstimationScheme":
        return cls("joint", 1)

    @classmethod
    def sic(cls, first: int = 1) -> "EstimationScheme":
        return cls("sic", first)

    @property
    def is_joint(self) -> bool:
        return self.mode == "joint"

    def __str__(self):
        return "joint" if self.is_joint else f"sic[{self.first}->{3 - self.first}]"


@dataclass(frozen=True)
class MmseReport:
    """Per-input MMSE terms, cross-term and their I-MMSE combination.

    ``e1, e2`` are unit-power MSEs; ``mmse_j`` are the snr-derivative
    weighted terms. Standard errors are zero for closed forms.
    """

    scheme: EstimationScheme
    mmse1: float
    mmse2: float
    psi: float
    total_derivative: float
    e1: float
    e2: float
    stderr_mmse1: float = 0.0
    stderr_mmse2: float = 0.0
    stderr_psi: float = 0.0
    stderr_total: float = 0.0
    sample_count: int = 0
    seed: int | None = None


@dataclass(frozen=True)
class MiEstimate:
    """Mutual information in nats, with per-input SIC rates when applicable."""

    scheme: EstimationScheme
    total: float
    stderr: float = 0.0
    rate1: float | None = None
    rate2: float | None = None
    stderr1: float = 0.0
    stderr2: float = 0.0
    sample_count: int = 0
    seed: int | None = None


# --------------------------------------------------------------------------
# scalar estimators


def gaussian_mmse(scaled_snr):
    """Unit-power MMSE of a Gaussian input, ``1 / (1 + s)``."""
    return 1.0 / (1.0 + scaled_snr)


def gaussian_conditional_mean(scaled_snr, observation):
    """``E[u | sqrt(s) u + z = y]`` for unit-power Gaussian ``u``: ``sqrt(s) / (1 + s) * y``."""
    return math.sqrt(scaled_snr) / (1.0 + scaled_snr) * np.asarray(observation, dtype=float)


def discrete_conditional_mean(distribution: InputDistribution, scaled_snr, observation):
    """Posterior mean of a discrete input observed as ``sqrt(s) u + z``."""
    y = np.atleast_1d(np.asarray(observation, dtype=float))
    pts = np.asarray(distribution.points)
    _, _, logw = distribution.mixture()
    c = math.sqrt(scaled_snr)
    logp = logw[None, :] - 0.5 * (y[:, None] - c * pts[None, :]) ** 2
    logp -= logp.max(axis=1, keepdims=True)
    w = np.exp(logp)
    est = (w @ pts) / w.sum(axis=1)
    return est if np.ndim(observation) else float(est[0])


def unit_mmse_fn(distribution: InputDistribution, nodes: int = 64):
    """Deterministic unit-power MMSE ``s -> E[(u - E[u | sqrt(s) u + z])^2]``.

    Gaussian inputs get :func:`gaussian_mmse`. For a discrete input the noise
    integral is split at the pairwise decision boundaries, where the
    posterior switches sharply at high ``s``, and each piece is integrated
    with ``nodes``-point Gauss-Legendre. The result is smooth in ``s`` and
    suitable for root finding (see :func:`piggyback.powalloc.mercury_waterfill`).
    """
    if distribution.is_gaussian:
        return gaussian_mmse
    pts = np.asarray(distribution.points)
    pr = np.asarray(distribution.probs)
    mids = np.unique((pts[:, None] + pts[None, :]).ravel() / 2.0)
    t, w = np.polynomial.legendre.leggauss(nodes)

    def mmse(s: float) -> float:
        if s < 0:
            raise ValueError(f"scaled snr must be >= 0, got {s!r}")
        c = math.sqrt(s)
        total = 0.0
        for x, p in zip(pts, pr):
            # noise integral over z, broken at the boundaries seen from x
            edges = np.unique(np.concatenate(([-12.0, 12.0], np.clip(c * (mids - x), -12.0, 12.0))))
            a, b = edges[:-1, None], edges[1:, None]
            z = (0.5 * (b - a) * t + 0.5 * (a + b)).ravel()
            wz = (0.5 * (b - a) * w).ravel() * np.exp(-0.5 * z * z)
            err = x - discrete_conditional_mean(distribution, s, c * x + z)
            total += p * float(wz @ (err * err))
        return total / math.sqrt(2.0 * math.pi)

    return mmse


# --------------------------------------------------------------------------
# mixture machinery


def _posterior(y, offset, terms):
    """Posterior over the component product of the unknown inputs.

    ``terms`` lists ``(c, dist)`` for the inputs still unknown, each entering
    ``y`` as ``c * u``; ``offset`` is the known part of the mean. Returns the
    unnormalized log-posterior ``(N, K)``, per-component mean of ``y``
    ``(N, K)``, per-component variance ``(K,)`` and, per input, its
    ``(c, component means, component variances)`` aligned on ``K``.
    """
    mixtures = [dist.mixture() for _, dist in terms]
    grids = np.meshgrid(*[np.arange(m.size) for m, _, _ in mixtures], indexing="ij")
    idx = [g.ravel() for g in grids]
    k = idx[0].size
    mu = np.zeros(k)
    var = np.ones(k)
    logw = np.zeros(k)
    parts = []
    for (c, _), (m, v, lw), ix in zip(terms, mixtures, idx):
        cm, cv = m[ix], v[ix]
        mu += c * cm
        var += c * c * cv
        logw += lw[ix]
        parts.append((c, cm, cv))
    mean = offset[:, None] + mu[None, :]
    loglik = logw[None, :] - 0.5 * (y[:, None] - mean) ** 2 / var[None, :] - 0.5 * np.log(var)[None, :]
    return loglik, mean, var, parts


def _log_density(y, offset, terms):
    """``log p(y | known inputs)``, marginalizing the inputs in ``terms``."""
    if not terms:
        return -0.5 * (y - offset) ** 2 - 0.5 * _LOG_2PI
    loglik, _, _, _ = _posterior(y, offset, terms)
    return logsumexp(loglik, axis=1) - 0.5 * _LOG_2PI


def _conditional_means(y, offset, terms):
    """Conditional means of every input in ``terms`` given ``y``."""
    loglik, mean, var, parts = _posterior(y, offset, terms)
    post = np.exp(loglik - loglik.max(axis=1, keepdims=True))
    post /= post.sum(axis=1, keepdims=True)
    resid = (y[:, None] - mean) / var[None, :]
    return [np.sum(post * (cm[None, :] + c * cv[None, :] * resid), axis=1) for c, cm, cv in parts]


def normalized_gains(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> tuple[float, float]:
    """``(g1, g2)``: received unit-power signal strengths over the forwarded noise."""
    g1 = equiv.h1eq ** 2 * snr_cfg.s1 * powers.p1 / equiv.sigma_zeq
    g2 = equiv.h2eq ** 2 * snr_cfg.s2 * powers.p2 / equiv.sigma_zeq
    return g1, g2


def _draw(dist1, dist2, n, rng):
    u1 = dist1.sample(rng, n)
    u2 = dist2.sample(rng, n)
    z = rng.standard_normal(n)
    return u1, u2, z


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteSample("non-finite value in Monte-Carlo samples")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _check_samples(samples):
    if samples < MIN_SAMPLES:
        raise InsufficientSamples(f"need at least {MIN_SAMPLES} samples, got {samples}")


def _stream(seed, tag, dist1, dist2, g1, g2, snr, scheme):
    return substream(seed, tag, str(dist1), dist1.points, dist2.points, str(dist2), g1, g2, snr, str(scheme))


# --------------------------------------------------------------------------
# closed forms


def gaussian_mi(g1: float, g2: float, snr: float, scheme: EstimationScheme = EstimationScheme.joint()) -> MiEstimate:
    """Closed-form MI of Gaussian inputs in the normalized model."""
    a, b = snr * g1, snr * g2
    total = 0.5 * math.log1p(a + b)
    if scheme.is_joint:
        return MiEstimate(scheme, total)
    if scheme.first == 1:
        r1, r2 = 0.5 * math.log1p(a / (1.0 + b)), 0.5 * math.log1p(b)
    else:
        r1, r2 = 0.5 * math.log1p(a), 0.5 * math.log1p(b / (1.0 + a))
    return MiEstimate(scheme, r1 + r2, rate1=r1, rate2=r2)


def _gaussian_report(g1, g2, snr, scheme):
    if scheme.is_joint:
        d = 1.0 + snr * (g1 + g2)
        e1 = (1.0 + snr * g2) / d
        e2 = (1.0 + snr * g1) / d
        mmse1, mmse2 = g1 * e1, g2 * e2
        psi = -2.0 * g1 * g2 * snr / d
    elif scheme.first == 1:
        snr_high = snr * g1 / (1.0 + snr * g2)
        e1, e2 = 1.0 / (1.0 + snr_high), 1.0 / (1.0 + snr * g2)
        mmse1 = g1 * e1 / (1.0 + snr * g2) ** 2
        mmse2 = g2 * e2
        psi = 0.0
    else:
        snr_high = snr * g2 / (1.0 + snr * g1)
        e1, e2 = 1.0 / (1.0 + snr * g1), 1.0 / (1.0 + snr_high)
        mmse1 = g1 * e1
        mmse2 = g2 * e2 / (1.0 + snr * g1) ** 2
        psi = 0.0
    return MmseReport(scheme, mmse1, mmse2, psi, 0.5 * (mmse1 + mmse2 + psi), e1, e2)


def mmse_closed_form_gaussian(
    equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig, scheme: EstimationScheme
) -> MmseReport:
    g1, g2 = normalized_gains(equiv, powers, snr_cfg)
    return _gaussian_report(g1, g2, snr_cfg.snr, scheme)


def psi_closed_form_gaussian_joint(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> float:
    """Cross-term of jointly estimated Gaussian inputs, ``-2 snr g1 g2 / (1 + snr (g1 + g2))``."""
    g1, g2 = normalized_gains(equiv, powers, snr_cfg)
    snr = snr_cfg.snr
    return -2.0 * g1 * g2 * snr / (1.0 + snr * (g1 + g2))


# --------------------------------------------------------------------------
# Monte-Carlo


def _mmse_samples(dist1, dist2, g1, g2, snr, scheme, u1, u2, z):
    c1, c2 = math.sqrt(snr * g1), math.sqrt(snr * g2)
    y = c1 * u1 + c2 * u2 + z
    zero = np.zeros_like(y)
    cross = math.sqrt(g1 * g2)
    if scheme.is_joint:
        h1, h2 = _conditional_means(y, zero, [(c1, dist1), (c2, dist2)])
        m1 = g1 * (u1 - h1) ** 2
        m2 = g2 * (u2 - h2) ** 2
        psi = -2.0 * cross * h1 * h2
    elif scheme.first == 1:
        h1 = _conditional_means(y, zero, [(c1, dist1), (c2, GAUSSIAN)])[0]
        (h2,) = _conditional_means(y, c1 * u1, [(c2, dist2)])
        m1 = g1 * (u1 - h1) ** 2 / (1.0 + snr * g2) ** 2
        m2 = g2 * (u2 - h2) ** 2
        psi = -2.0 * cross * u1 * h2
    else:
        h2 = _conditional_means(y, zero, [(c1, GAUSSIAN), (c2, dist2)])[1]
        (h1,) = _conditional_means(y, c2 * u2, [(c1, dist1)])
        m1 = g1 * (u1 - h1) ** 2
        m2 = g2 * (u2 - h2) ** 2 / (1.0 + snr * g1) ** 2
        psi = -2.0 * cross * h1 * u2
    return m1, m2, psi


def _mmse_mc(dist1, dist2, g1, g2, snr, scheme, samples, seed):
    _check_samples(samples)
    rng = _stream(seed, "mmse", dist1, dist2, g1, g2, snr, scheme)
    u1, u2, z = _draw(dist1, dist2, samples, rng)
    m1, m2, psi = _mmse_samples(dist1, dist2, g1, g2, snr, scheme, u1, u2, z)
    mmse1, se1 = _mean_se(m1)
    mmse2, se2 = _mean_se(m2)
    psi_m, se_psi = _mean_se(psi)
    tot, se_tot = _mean_se(0.5 * (m1 + m2 + psi))
    k1 = 1.0 / (1.0 + snr * g2) ** 2 if (not scheme.is_joint and scheme.first == 1) else 1.0
    k2 = 1.0 / (1.0 + snr * g1) ** 2 if (not scheme.is_joint and scheme.first == 2) else 1.0
    e1 = mmse1 / (g1 * k1) if g1 > 0 else float("nan")
    e2 = mmse2 / (g2 * k2) if g2 > 0 else float("nan")
    return MmseReport(scheme, mmse1, mmse2, psi_m, tot, e1, e2, se1, se2, se_psi, se_tot, samples, seed)


def mmse_monte_carlo(
    dist1: InputDistribution,
    dist2: InputDistribution,
    equiv: EquivChannel,
    powers: PowerProfile,
    snr_cfg: SnrConfig,
    scheme: EstimationScheme,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
) -> MmseReport:
    """Monte-Carlo MMSE report for arbitrary input distributions.

    Draws come from a generator keyed by ``(seed, scenario)``, so equal
    arguments give bit-identical reports. A zero-power input has undefined
    unit-power MSE and reports ``nan`` for it.
    """
    seed = default_seed() if seed is None else seed
    g1, g2 = normalized_gains(equiv, powers, snr_cfg)
    return _mmse_mc(dist1, dist2, g1, g2, snr_cfg.snr, scheme, samples, seed)


def _info_density(dist1, dist2, g1, g2, snr, scheme, u1, u2, z):
    """Per-sample information densities ``(i1, i2)`` for the two inputs.

    Joint: ``i1 + i2`` is the joint density and the split is meaningless.
    SIC: the first-decoded input gets ``log p(y|u_first) - log p(y)``, the
    other ``log p(y|u1,u2) - log p(y|u_first)``.
    """
    c1, c2 = math.sqrt(snr * g1), math.sqrt(snr * g2)
    y = c1 * u1 + c2 * u2 + z
    full = -0.5 * z**2 - 0.5 * _LOG_2PI
    marg = _log_density(y, np.zeros_like(y), [(c1, dist1), (c2, dist2)])
    if scheme.is_joint:
        return full - marg, np.zeros_like(y)
    if scheme.first == 1:
        given = _log_density(y, c1 * u1, [(c2, dist2)])
        return given - marg, full - given
    given = _log_density(y, c2 * u2, [(c1, dist1)])
    return full - given, given - marg


def mi_monte_carlo(
    dist1: InputDistribution,
    dist2: InputDistribution,
    equiv: EquivChannel,
    powers: PowerProfile,
    snr_cfg: SnrConfig,
    scheme: EstimationScheme,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
) -> MiEstimate:
    """Mutual information by averaging log-likelihood ratios.

    Gaussian pairs return the closed form. Under SIC ``rate1``/``rate2`` are
    the per-input stage rates of the given order; their sum is the joint MI.
    """
    g1, g2 = normalized_gains(equiv, powers, snr_cfg)
    return _mi(dist1, dist2, g1, g2, snr_cfg.snr, scheme, samples, seed)


def _mi(dist1, dist2, g1, g2, snr, scheme, samples, seed):
    if dist1.is_gaussian and dist2.is_gaussian:
        return gaussian_mi(g1, g2, snr, scheme)
    _check_samples(samples)
    seed = default_seed() if seed is None else seed
    rng = _stream(seed, "mi", dist1, dist2, g1, g2, snr, scheme)
    u1, u2, z = _draw(dist1, dist2, samples, rng)
    i1, i2 = _info_density(dist1, dist2, g1, g2, snr, scheme, u1, u2, z)
    total, se = _mean_se(i1 + i2)
    if scheme.is_joint:
        return MiEstimate(scheme, total, se, sample_count=samples, seed=seed)
    r1, se1 = _mean_se(i1)
    r2, se2 = _mean_se(i2)
    return MiEstimate(scheme, total, se, r1, r2, se1, se2, samples, seed)


def mi_derivative(
    equiv: EquivChannel,
    powers: PowerProfile,
    snr_cfg: SnrConfig,
    scheme: EstimationScheme,
    dist1: InputDistribution = GAUSSIAN,
    dist2: InputDistribution = GAUSSIAN,
    samples: int = DEFAULT_SAMPLES,
    seed: int | None = None,
) -> float:
    """``dI/dsnr = 0.5 (mmse1 + mmse2 + psi)`` with the channel held fixed.

    Closed form for Gaussian inputs, Monte-Carlo otherwise.
    """
    if dist1.is_gaussian and dist2.is_gaussian:
        return mmse_closed_form_gaussian(equiv, powers, snr_cfg, scheme).total_derivative
    return mmse_monte_carlo(dist1, dist2, equiv, powers, snr_cfg, scheme, samples, seed).total_derivative


# --------------------------------------------------------------------------
# finite-difference check of the identity


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    powers: PowerProfile
    snr_cfg: SnrConfig
    sink: int = 5
    dist1: InputDistribution = GAUSSIAN
    dist2: InputDistribution = GAUSSIAN
    samples: int = DEFAULT_SAMPLES
    seed: int | None = None

    def gains(self) -> tuple[float, float]:
        equiv = equivalent_channel(self.topology, self.powers, self.snr_cfg, self.sink)
        return normalized_gains(equiv, self.powers, self.snr_cfg)


@dataclass(frozen=True)
class IdentityCheck:
    scheme: EstimationScheme
    snr: float
    step: float
    finite_difference: float
    identity: float
    residual: float
    tolerance: float
    truncation_estimate: float
    stderr: float = 0.0
    passed: bool = field(default=False)


def fd_identity_check(
    scenario: Scenario,
    scheme: EstimationScheme,
    step: float = 1e-4,
    tolerance: float = 1e-8,
) -> IdentityCheck:
    """Compare a central difference of the MI in snr against the MMSE side.

    The equivalent channel is frozen at the scenario's snr. For Gaussian
    inputs both sides are closed forms and ``tolerance`` applies. Otherwise
    the MI difference is taken on common random numbers and the pass band is
    three combined standard errors; only joint estimation is supported there
    because the first SIC stage uses a Gaussian-interference estimator whose
    MSE is not the derivative of any rate.

    Raises StepTooLarge when halving the step moves the difference by more
    than the truncation budget (half the tolerance).
    """
    snr = scenario.snr_cfg.snr
    if not 0 < step < snr:
        raise StepTooLarge(f"step must lie in (0, snr={snr}), got {step}")
    g1, g2 = scenario.gains()
    d1, d2 = scenario.dist1, scenario.dist2
    gaussian = d1.is_gaussian and d2.is_gaussian

    if gaussian:
        def diff(h):
            hi = gaussian_mi(g1, g2, snr + h, scheme).total
            lo = gaussian_mi(g1, g2, snr - h, scheme).total
            return (hi - lo) / (2.0 * h)

        fd, fd_half = diff(step), diff(step / 2.0)
        identity = _gaussian_report(g1, g2, snr, scheme).total_derivative
        se = 0.0
        tol = tolerance
    else:
        if not scheme.is_joint:
            raise ValueError("finite-difference check for non-Gaussian inputs supports joint estimation only")
        seed = default_seed() if scenario.seed is None else scenario.seed
        n = scenario.samples
        _check_samples(n)
        rng = _stream(seed, "fd", d1, d2, g1, g2, snr, scheme)
        u1, u2, z = _draw(d1, d2, n, rng)

        def density(s):
            i1, i2 = _info_density(d1, d2, g1, g2, s, scheme, u1, u2, z)
            return i1 + i2

        # z is held fixed, so y moves with snr along each sample path
        per = (density(snr + step) - density(snr - step)) / (2.0 * step)
        per_half = (density(snr + step / 2) - density(snr - step / 2)) / step
        fd, se_fd = _mean_se(per)
        fd_half = float(per_half.mean())
        rep = _mmse_mc(d1, d2, g1, g2, snr, scheme, n, seed)
        identity = rep.total_derivative
        se = math.hypot(se_fd, rep.stderr_total)
        tol = 3.0 * se

    trunc = 4.0 / 3.0 * abs(fd - fd_half)
    if trunc > tol / 2.0 and trunc > 0:
        raise StepTooLarge(f"truncation estimate {trunc:.3e} exceeds half the tolerance {tol:.3e}; reduce step")
    residual = abs(fd - identity)
    return IdentityCheck(scheme, snr, step, fd, identity, residual, tol, trunc, se, residual <= tol)
