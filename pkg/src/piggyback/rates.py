"""Gaussian-input rates at a sink, in nats.

With ``A = snr * h1eq^2 s1 p1`` and ``B = snr * h2eq^2 s2 p2`` (both carried
by :class:`~piggyback.network.EquivChannel` as ``snr * rho`` and ``snr * nu``)
and forwarded noise ``sigma``:

* input 1 treating input 2 as noise:  ``0.5 ln(1 + A / (sigma + B))``
* input 2 after removing input 1:     ``0.5 ln(1 + B / sigma)``
* both jointly:                        ``0.5 ln(1 + (A + B) / sigma)``

The first two sum to the third exactly, whichever input is removed first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .network import (
    EquivChannel,
    PowerProfile,
    RegimeLabel,
    RegimeThresholds,
    SnrConfig,
    Topology,
    classify_regime,
    equivalent_channel,
)

__all__ = [
    "RateReport",
    "NATS_TO_BITS",
    "rate_r1_treat_as_noise",
    "rate_r2_after_cancellation",
    "rate_r1_given_x2",
    "rate_joint",
    "sic_rates",
    "rate_joint_asymptotic",
    "cutset_bound",
    "psi_integral_closed_form",
    "rate_report",
    "multicast_rates",
]

NATS_TO_BITS = 1.0 / math.log(2.0)


def _half_log1p(x: float) -> float:
    return 0.5 * math.log1p(x)


def _signals(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> tuple[float, float]:
    g1 = equiv.h1eq ** 2 * snr_cfg.s1 * powers.p1
    g2 = equiv.h2eq ** 2 * snr_cfg.s2 * powers.p2
    return snr_cfg.snr * g1, snr_cfg.snr * g2


def rate_r1_treat_as_noise(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> float:
    a, b = _signals(equiv, powers, snr_cfg)
    return _half_log1p(a / (equiv.sigma_zeq + b))


def rate_r2_after_cancellation(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> float:
    _, b = _signals(equiv, powers, snr_cfg)
    return _half_log1p(b / equiv.sigma_zeq)


def rate_r1_given_x2(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> float:
    """Rate of input 1 when input 2 is known at the sink."""
    a, _ = _signals(equiv, powers, snr_cfg)
    return _half_log1p(a / equiv.sigma_zeq)


def rate_joint(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> float:
    a, b = _signals(equiv, powers, snr_cfg)
    return _half_log1p((a + b) / equiv.sigma_zeq)


def sic_rates(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig, first: int = 1) -> tuple[float, float]:
    """Per-input rates ``(R1, R2)`` when input ``first`` is decoded first."""
    a, b = _signals(equiv, powers, snr_cfg)
    s = equiv.sigma_zeq
    if first == 1:
        return _half_log1p(a / (s + b)), _half_log1p(b / s)
    if first == 2:
        return _half_log1p(a / s), _half_log1p(b / (s + a))
    raise ValueError(f"first must be 1 or 2, got {first!r}")


def rate_joint_asymptotic(topology: Topology, powers: PowerProfile, snr_cfg: SnrConfig, sink: int = 5) -> float:
    """Joint rate in the limit ``sigma_zeq -> 1``: ``0.5 ln(1 + (h_r3 sqrt(p3 snr) + h_r4 sqrt(p4 snr))^2)``."""
    hr3, hr4 = topology.second_hop(sink)
    amp = hr3 * math.sqrt(powers.p3 * snr_cfg.snr) + hr4 * math.sqrt(powers.p4 * snr_cfg.snr)
    return _half_log1p(amp * amp)


def cutset_bound(topology: Topology, powers: PowerProfile, snr_cfg: SnrConfig, sink: int = 5) -> float:
    """MAC cut-set bound across the relays-to-sink cut.

    The relays transmit coherently, so the bound is the same expression as
    :func:`rate_joint_asymptotic`; it is kept separate so that gaps are
    always measured against the bound.
    """
    hr3, hr4 = topology.second_hop(sink)
    amp = hr3 * math.sqrt(powers.p3 * snr_cfg.snr) + hr4 * math.sqrt(powers.p4 * snr_cfg.snr)
    return _half_log1p(amp * amp)


def psi_integral_closed_form(equiv: EquivChannel, powers: PowerProfile, snr_cfg: SnrConfig) -> float:
    """Rate lost by input 1 to the interference of input 2.

    ``I(x1; y) - I(x1; y | x2)``; nonpositive for independent inputs and zero
    when input 2 is silent.
    """
    return rate_r1_treat_as_noise(equiv, powers, snr_cfg) - rate_r1_given_x2(equiv, powers, snr_cfg)


@dataclass(frozen=True)
class RateReport:
    r1_tin: float
    r2_sic: float
    joint: float
    cutset: float
    gap_cutset: float
    psi_integral: float
    sink: int
    regime: RegimeLabel

    def in_bits(self) -> "RateReport":
        k = NATS_TO_BITS
        return RateReport(
            self.r1_tin * k,
            self.r2_sic * k,
            self.joint * k,
            self.cutset * k,
            self.gap_cutset * k,
            self.psi_integral * k,
            self.sink,
            self.regime,
        )

    def as_dict(self) -> dict:
        return {
            "sink": self.sink,
            "r1_tin": self.r1_tin,
            "r2_sic": self.r2_sic,
            "joint": self.joint,
            "cutset": self.cutset,
            "gap_cutset": self.gap_cutset,
            "psi_integral": self.psi_integral,
            "regime": str(self.regime),
        }


def rate_report(
    topology: Topology,
    powers: PowerProfile,
    snr_cfg: SnrConfig,
    sink: int = 5,
    thresholds: RegimeThresholds = RegimeThresholds(),
) -> RateReport:
    equiv = equivalent_channel(topology, powers, snr_cfg, sink)
    joint = rate_joint(equiv, powers, snr_cfg)
    cut = cutset_bound(topology, powers, snr_cfg, sink)
    return RateReport(
        r1_tin=rate_r1_treat_as_noise(equiv, powers, snr_cfg),
        r2_sic=rate_r2_after_cancellation(equiv, powers, snr_cfg),
        joint=joint,
        cutset=cut,
        gap_cutset=cut - joint,
        psi_integral=psi_integral_closed_form(equiv, powers, snr_cfg),
        sink=sink,
        regime=classify_regime(powers, equiv, thresholds),
    )


def multicast_rates(
    topology: Topology,
    powers: PowerProfile,
    snr_cfg: SnrConfig,
    thresholds: RegimeThresholds = RegimeThresholds(),
) -> tuple[RateReport, RateReport, float, float]:
    """Reports at both sinks and the multicast minima ``(min joint, min cut-set)``.

    A sink with no incoming relay edges sees a zero-gain channel, so its
    rates and bound are zero.
    """
    r5 = rate_report(topology, powers, snr_cfg, 5, thresholds)
    r6 = rate_report(topology, powers, snr_cfg, 6, thresholds)
    return r5, r6, min(r5.joint, r6.joint), min(r5.cutset, r6.cutset)
