"""KKT power allocation for the two piggybacked inputs.

``eta`` is the Lagrange multiplier with the rate constants absorbed: for an
input with effective gain ``g`` (``h_jeq^2 * s_j``), noise-plus-interference
``N`` and unit-power MMSE function ``mmse``,

    eta = 2 dR/dp = (g snr / N) * mmse(g p snr / N)

where ``R`` is the rate in nats. For Gaussian inputs this is
``g snr / (N + g p snr)``, which gives the waterfilling forms

    p1 = 1/eta - p2 g2/g1 - sigma/(g1 snr)     (input 2 interferes, N = sigma + g2 p2 snr)
    p2 = 1/eta - sigma/(g2 snr)                (input 1 removed, N = sigma)

clipped at zero. ``1/eta`` is the water level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import InfeasibleBudget, NonMonotoneMmse, NonPositiveEta
from .network import EquivChannel, PowerProfile, SnrConfig, Topology, equivalent_channel

__all__ = [
    "AllocationResult",
    "WaterLevel",
    "gaussian_mmse_fn",
    "marginal_rate",
    "waterfill_p1",
    "waterfill_p2",
    "mercury_waterfill",
    "water_level_solve",
    "water_level_fixed_point",
]

MmseFn = Callable[[float], float]

POWER_TOL = 1e-12
MAX_BISECTIONS = 200
# doublings of the upper power bracket before giving up
MAX_DOUBLINGS = 64


def gaussian_mmse_fn(s: float) -> float:
    return 1.0 / (1.0 + s)


@dataclass(frozen=True)
class AllocationResult:
    p_star: float
    eta: float
    active: bool
    residual: float

    def __post_init__(self):
        if self.p_star < 0:
            raise ValueError("p_star must be >= 0")


def _check_eta(eta):
    if not (eta > 0 and math.isfinite(eta)):
        raise NonPositiveEta(f"eta must be finite and > 0, got {eta!r}")


def _gains(equiv: EquivChannel, snr_cfg: SnrConfig) -> tuple[float, float]:
    return equiv.h1eq ** 2 * snr_cfg.s1, equiv.h2eq ** 2 * snr_cfg.s2


def marginal_rate(mmse_fn: MmseFn, p: float, gain_sq: float, interference_plus_noise: float, snr: float) -> float:
    """``2 dR/dp`` at power ``p``: the quantity ``eta`` is matched against."""
    k = gain_sq * snr / interference_plus_noise
    return k * mmse_fn(k * p)


def _closed_form(eta, gain_sq, noise, snr):
    """Gaussian waterfilling against interference-plus-noise ``noise``."""
    _check_eta(eta)
    if gain_sq <= 0:
        return AllocationResult(0.0, eta, False, 0.0)
    p = 1.0 / eta - noise / (gain_sq * snr)
    if p <= 0:
        return AllocationResult(0.0, eta, False, 0.0)
    residual = marginal_rate(gaussian_mmse_fn, p, gain_sq, noise, snr) - eta
    return AllocationResult(p, eta, True, residual)


def waterfill_p1(eta: float, p2: float, equiv: EquivChannel, snr_cfg: SnrConfig) -> AllocationResult:
    """Power of the input estimated first, with input ``2`` at power ``p2`` as noise.

    Inactive once ``eta >= g1 snr / (sigma + g2 p2 snr)``; this cutoff is
    tighter than ``g1 snr / sigma`` whenever ``p2 > 0``.
    """
    g1, g2 = _gains(equiv, snr_cfg)
    noise = equiv.sigma_zeq + g2 * p2 * snr_cfg.snr
    return _closed_form(eta, g1, noise, snr_cfg.snr)


def waterfill_p2(eta: float, equiv: EquivChannel, snr_cfg: SnrConfig) -> AllocationResult:
    """Single-user waterfilling for the input estimated after cancellation."""
    _, g2 = _gains(equiv, snr_cfg)
    return _closed_form(eta, g2, equiv.sigma_zeq, snr_cfg.snr)


def mercury_waterfill(
    mmse_fn: MmseFn,
    eta: float,
    gain_sq: float,
    interference_plus_noise: float,
    snr_cfg: SnrConfig,
) -> AllocationResult:
    """Solve ``marginal_rate(p) = eta`` for an arbitrary unit-power MMSE function.

    ``mmse_fn`` must be continuous and strictly decreasing with
    ``mmse_fn(0) = 1``. The marginal rate is then decreasing in ``p`` and the
    root is found by bisection on ``p`` (tolerance ``1e-12`` relative to the
    bracket, at most 200 steps), after doubling the upper bracket until the
    marginal rate drops below ``eta``.
    """
    _check_eta(eta)
    snr = snr_cfg.snr
    if gain_sq <= 0:
        return AllocationResult(0.0, eta, False, 0.0)

    def f(p):
        return marginal_rate(mmse_fn, p, gain_sq, interference_plus_noise, snr) - eta

    if f(0.0) <= 0:
        return AllocationResult(0.0, eta, False, 0.0)
    lo, hi = 0.0, 1.0 / eta
    for _ in range(MAX_DOUBLINGS):
        if f(hi) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise NonMonotoneMmse("could not bracket the KKT root; is mmse_fn decreasing to 0?")
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm > 0:
            lo = mid
        elif fm < 0:
            hi = mid
        else:
            lo = hi = mid
        if hi - lo <= POWER_TOL * max(1.0, hi):
            break
    p = 0.5 * (lo + hi)
    if f(lo) < 0 or f(hi) > 0:
        raise NonMonotoneMmse("marginal rate is not decreasing in power on the bracket")
    return AllocationResult(p, eta, True, f(p))


@dataclass(frozen=True)
class WaterLevel:
    eta: float
    p1: AllocationResult
    p2: AllocationResult
    total: float
    ordering_holds: bool
    iterations: int = 0
    converged: bool = True

    @property
    def water_level(self) -> float:
        return 1.0 / self.eta


def _allocate_pair(eta, equiv, snr_cfg, mmse_fns):
    m1, m2 = mmse_fns
    g1, g2 = _gains(equiv, snr_cfg)
    snr = snr_cfg.snr
    if m2 is None or m2 is gaussian_mmse_fn:
        a2 = waterfill_p2(eta, equiv, snr_cfg)
    else:
        a2 = mercury_waterfill(m2, eta, g2, equiv.sigma_zeq, snr_cfg)
    noise1 = equiv.sigma_zeq + g2 * a2.p_star * snr
    if m1 is None or m1 is gaussian_mmse_fn:
        a1 = waterfill_p1(eta, a2.p_star, equiv, snr_cfg)
    else:
        a1 = mercury_waterfill(m1, eta, g1, noise1, snr_cfg)
    return a1, a2


def water_level_solve(
    total_budget: float,
    equiv: EquivChannel,
    snr_cfg: SnrConfig,
    mmse_fns: tuple[MmseFn | None, MmseFn | None] = (None, None),
    tol: float = 1e-9,
) -> WaterLevel:
    """Shared water level meeting ``p1 + p2 = total_budget``.

    Input 2 is allocated first (single-user, after cancellation) and input 1
    against it, at a common ``eta`` found by bisection in ``log eta``. The
    returned ``ordering_holds`` reports whether ``p1 >= p2``; nothing
    enforces it.
    """
    if not total_budget > 0:
        raise InfeasibleBudget(f"total budget must be > 0, got {total_budget!r}")
    g1, g2 = _gains(equiv, snr_cfg)
    if g1 <= 0 and g2 <= 0:
        raise InfeasibleBudget("neither input reaches the sink; no finite water level spends the budget")
    snr = snr_cfg.snr
    # at or above this eta nothing is allocated
    eta_hi = max(g1, g2) * snr / equiv.sigma_zeq

    def spent(eta):
        a1, a2 = _allocate_pair(eta, equiv, snr_cfg, mmse_fns)
        return a1.p_star + a2.p_star, a1, a2

    lo = eta_hi
    for _ in range(2000):
        lo *= 0.5
        if spent(lo)[0] >= total_budget:
            break
    else:
        raise InfeasibleBudget("budget cannot be spent at any water level")
    log_lo, log_hi = math.log(lo), math.log(eta_hi)
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (log_lo + log_hi)
        s, a1, a2 = spent(math.exp(mid))
        if abs(s - total_budget) <= tol:
            break
        if s > total_budget:
            log_lo = mid
        else:
            log_hi = mid
    eta = math.exp(mid)
    return WaterLevel(eta, a1, a2, s, a1.p_star >= a2.p_star)


def water_level_fixed_point(
    total_budget: float,
    topology: Topology,
    powers: PowerProfile,
    snr_cfg: SnrConfig,
    sink: int = 5,
    mmse_fns: tuple[MmseFn | None, MmseFn | None] = (None, None),
    max_iter: int = 50,
    tol: float = 1e-8,
) -> WaterLevel:
    """Re-derive the equivalent channel from the allocated powers until stable.

    The amplification gains depend on the source powers, so the channel used
    by :func:`water_level_solve` shifts once powers change. Iterates up to
    ``max_iter`` times and stops when both powers move by at most ``tol``.
    ``converged`` is False if that never happens.
    """
    current = powers
    for it in range(1, max_iter + 1):
        equiv = equivalent_channel(topology, current, snr_cfg, sink)
        res = water_level_solve(total_budget, equiv, snr_cfg, mmse_fns)
        new = current.with_sources(res.p1.p_star, res.p2.p_star)
        moved = max(abs(new.p1 - current.p1), abs(new.p2 - current.p2))
        if moved <= tol:
            return WaterLevel(res.eta, res.p1, res.p2, res.total, res.ordering_holds, it, True)
        current = new
    return WaterLevel(res.eta, res.p1, res.p2, res.total, res.ordering_holds, max_iter, False)
