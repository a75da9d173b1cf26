"""Two-source, two-relay, two-sink amplify-and-forward network.

The physical two-hop topology (sources 1, 2 -> relays 3, 4 -> sinks 5, 6)
is collapsed into the equivalent single-hop multiple-access channel seen at
one sink::

    y = sqrt(snr) * h1eq * x1 + sqrt(snr) * h2eq * x2 + z_eq

with ``h_jeq = h_r1 * h_j3 * beta3 + h_r2 * h_j4 * beta4`` (``r1, r2`` are the
relay-to-sink gains of the chosen sink) and forwarded noise variance
``sigma_zeq = 1 + (h_r1 * beta3)**2 + (h_r2 * beta4)**2``.

Per-source snr multipliers ``s1, s2`` scale the source powers everywhere they
enter (relay loading and rates); ``s1 = s2 = 1`` gives the plain model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateDenominator

__all__ = [
    "Topology",
    "PowerProfile",
    "SnrConfig",
    "EquivChannel",
    "Regime",
    "RegimeThresholds",
    "RegimeLabel",
    "amplification_gains",
    "equivalent_channel",
    "noise_variance_closed_form",
    "classify_regime",
]


def _check_nonneg_finite(obj, names):
    for name in names:
        v = getattr(obj, name)
        if not math.isfinite(v) or v < 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be finite and >= 0, got {v!r}")


@dataclass(frozen=True)
class Topology:
    """Real, nonnegative channel amplitudes of the eight network edges."""

    h13: float = 1.0
    h14: float = 1.0
    h23: float = 1.0
    h24: float = 1.0
    h35: float = 1.0
    h45: float = 1.0
    h36: float = 1.0
    h46: float = 1.0

    def __post_init__(self):
        _check_nonneg_finite(self, ("h13", "h14", "h23", "h24", "h35", "h45", "h36", "h46"))

    def second_hop(self, sink: int) -> tuple[float, float]:
        """(relay 3 -> sink, relay 4 -> sink) gains."""
        if sink == 5:
            return self.h35, self.h45
        if sink == 6:
            return self.h36, self.h46
        raise ValueError(f"sink must be 5 or 6, got {sink!r}")

    @classmethod
    def uniform(cls, gain: float = 1.0) -> "Topology":
        return cls(*([gain] * 8))


@dataclass(frozen=True)
class PowerProfile:
    p1: float
    p2: float
    p3: float = 1.0
    p4: float = 1.0

    def __post_init__(self):
        _check_nonneg_finite(self, ("p1", "p2", "p3", "p4"))

    def with_sources(self, p1: float, p2: float) -> "PowerProfile":
        return PowerProfile(p1, p2, self.p3, self.p4)


@dataclass(frozen=True)
class SnrConfig:
    """Common snr, per-source multipliers and the relay-noise switch.

    ``include_relay_noise_in_beta`` adds the relay's unit noise variance to
    the amplification normalization. Off by default, which is the
    high-snr form under which ``sigma_zeq`` has the closed form of
    :func:`noise_variance_closed_form`.
    """

    snr: float = 1.0
    s1: float = 1.0
    s2: float = 1.0
    include_relay_noise_in_beta: bool = False

    def __post_init__(self):
        for name in ("snr", "s1", "s2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"SnrConfig.{name} must be finite and > 0, got {v!r}")

    def with_snr(self, snr: float) -> "SnrConfig":
        return SnrConfig(snr, self.s1, self.s2, self.include_relay_noise_in_beta)


@dataclass(frozen=True)
class EquivChannel:
    """Equivalent MAC channel at one sink, plus the per-input snrs of SIC.

    ``snr_high`` is the snr of input 1 when input 2 is treated as noise
    (normalized by ``sigma_eq``); ``snr_low`` is the snr of input 2 after
    input 1 has been removed (normalized by ``sigma_zeq``).
    """

    beta3: float
    beta4: float
    h1eq: float
    h2eq: float
    sigma_zeq: float
    sigma_eq: float
    snr_high: float
    snr_low: float
    sink: int
    # effective received signal powers h_jeq^2 * s_j * p_j, kept for the rate layer
    rho: float
    nu: float

    @property
    def gamma(self) -> float:
        return 1.0 / self.sigma_eq

    @property
    def zeta(self) -> float:
        return 1.0 / self.sigma_zeq

    @property
    def degenerate(self) -> bool:
        return math.isinf(self.sigma_zeq)


def _relay_load(topology: Topology, powers: PowerProfile, snr_cfg: SnrConfig, relay: int) -> float:
    if relay == 3:
        g1, g2 = topology.h13, topology.h23
    else:
        g1, g2 = topology.h14, topology.h24
    return g1 * g1 * snr_cfg.s1 * powers.p1 + g2 * g2 * snr_cfg.s2 * powers.p2


def amplification_gains(topology: Topology, powers: PowerProfile, snr_cfg: SnrConfig) -> tuple[float, float]:
    """Relay amplification gains ``(beta3, beta4)``.

    ``beta_i**2 = p_i / load_i`` where ``load_i`` is the source signal power
    received at relay ``i`` (before the common snr); with the relay-noise
    switch on, ``1/snr`` is added to ``load_i``, i.e. the relay normalizes
    by its full received power ``snr * load_i + 1`` rescaled by ``snr``.
    """
    betas = []
    for relay, p in ((3, powers.p3), (4, powers.p4)):
        if p == 0:
            betas.append(0.0)
            continue
        load = _relay_load(topology, powers, snr_cfg, relay)
        if snr_cfg.include_relay_noise_in_beta:
            load += 1.0 / snr_cfg.snr
        if load <= 0:
            raise DegenerateDenominator(
                f"relay {relay} has power {p} but receives no source signal; "
                "enable include_relay_noise_in_beta or give it a signal"
            )
        betas.append(math.sqrt(p / load))
    return betas[0], betas[1]


def equivalent_channel(topology: Topology, powers: PowerProfile, snr_cfg: SnrConfig, sink: int = 5) -> EquivChannel:
    """Equivalent single-hop channel at ``sink`` (5 or 6)."""
    hr3, hr4 = topology.second_hop(sink)
    beta3, beta4 = amplification_gains(topology, powers, snr_cfg)
    h1eq = hr3 * topology.h13 * beta3 + hr4 * topology.h14 * beta4
    h2eq = hr3 * topology.h23 * beta3 + hr4 * topology.h24 * beta4
    sigma_zeq = 1.0 + (hr3 * beta3) ** 2 + (hr4 * beta4) ** 2
    snr = snr_cfg.snr
    rho = h1eq * h1eq * snr_cfg.s1 * powers.p1
    nu = h2eq * h2eq * snr_cfg.s2 * powers.p2
    sigma_eq = sigma_zeq + snr * nu
    return EquivChannel(
        beta3=beta3,
        beta4=beta4,
        h1eq=h1eq,
        h2eq=h2eq,
        sigma_zeq=sigma_zeq,
        sigma_eq=sigma_eq,
        snr_high=snr * rho / sigma_eq,
        snr_low=snr * nu / sigma_zeq,
        sink=sink,
        rho=rho,
        nu=nu,
    )


def noise_variance_closed_form(topology: Topology, powers: PowerProfile, snr_cfg: SnrConfig, sink: int = 5) -> float:
    """Forwarded noise variance written directly in the powers.

    ``1 + h_r3^2 p3 / load_3 + h_r4^2 p4 / load_4``; agrees with
    ``equivalent_channel(...).sigma_zeq`` whenever relay noise is left out
    of the amplification gains.
    """
    hr3, hr4 = topology.second_hop(sink)
    total = 1.0
    for relay, hr, p in ((3, hr3, powers.p3), (4, hr4, powers.p4)):
        if p == 0:
            continue
        load = _relay_load(topology, powers, snr_cfg, relay)
        if load <= 0:
            raise DegenerateDenominator(f"relay {relay} has power {p} but receives no source signal")
        total += hr * hr * p / load
    return total


class Regime(str, enum.Enum):
    HIGH_LOW = "HighLow"
    LOW_HIGH = "LowHigh"
    HIGH_HIGH = "HighHigh"
    LOW_LOW = "LowLow"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class RegimeThresholds:
    theta_hi: float = 10.0
    theta_lo: float = 0.1
    epsilon_sigma: float = 0.05

    def __post_init__(self):
        if not (self.theta_hi > self.theta_lo > 0):
            raise ValueError("need theta_hi > theta_lo > 0")
        if not self.epsilon_sigma > 0:
            raise ValueError("epsilon_sigma must be > 0")


@dataclass(frozen=True)
class RegimeLabel:
    regime: Regime
    thresholds: RegimeThresholds

    def __str__(self):
        return self.regime.value


def classify_regime(powers: PowerProfile, equiv: EquivChannel | float, thresholds: RegimeThresholds = RegimeThresholds()) -> RegimeLabel:
    """Label the operating point of the two sources.

    A source is high when its power is at least ``theta_hi`` and low when it
    is at most ``theta_lo``. The mixed labels additionally require the
    forwarded noise to be nearly gone, ``sigma_zeq <= 1 + epsilon_sigma``;
    anything else is ``Indeterminate``. ``equiv`` may be an
    :class:`EquivChannel` or a bare ``sigma_zeq`` value.
    """
    sigma = equiv.sigma_zeq if isinstance(equiv, EquivChannel) else float(equiv)
    t = thresholds

    def level(p):
        if p >= t.theta_hi:
            return "high"
        if p <= t.theta_lo:
            return "low"
        return None

    l1, l2 = level(powers.p1), level(powers.p2)
    quiet = sigma <= 1.0 + t.epsilon_sigma
    if l1 == "high" and l2 == "low" and quiet:
        regime = Regime.HIGH_LOW
    elif l1 == "low" and l2 == "high" and quiet:
        regime = Regime.LOW_HIGH
    elif l1 == "high" and l2 == "high":
        regime = Regime.HIGH_HIGH
    elif l1 == "low" and l2 == "low":
        regime = Regime.LOW_LOW
    else:
        regime = Regime.INDETERMINATE
    return RegimeLabel(regime, thresholds)
