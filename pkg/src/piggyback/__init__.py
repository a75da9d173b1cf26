"""Piggybacking over a two-hop amplify-and-forward network.

Equivalent-channel construction, Gaussian and Monte-Carlo rates, the
multiuser I-MMSE identity, KKT power allocation and grid sweeps for the
two-source / two-relay / two-sink topology.
"""

from .errors import *  # noqa: F401,F403
from .immse import (  # noqa: F401
    BPSK,
    GAUSSIAN,
    EstimationScheme,
    InputDistribution,
    MmseReport,
    Scenario,
    fd_identity_check,
    mi_derivative,
    mi_monte_carlo,
    mmse_monte_carlo,
)
from .network import (  # noqa: F401
    EquivChannel,
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
from .powalloc import mercury_waterfill, water_level_solve, waterfill_p1, waterfill_p2  # noqa: F401
from .rates import RateReport, cutset_bound, multicast_rates, rate_joint, rate_report  # noqa: F401
from .sweep import ScenarioConfig, SweepRecord, emit_csv, emit_plot_data, load_config, run_sweep  # noqa: F401

__version__ = "0.1.0"
