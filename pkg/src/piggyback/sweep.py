"""Scenario configs, power-grid sweeps and CSV / plot-data emission.

A scenario is a YAML file with a ``schema_version`` and the sections below;
every section is optional except where a command needs it, and unknown keys
are rejected::

    schema_version: 1
    topology:   {h13: 1, h14: 1, h23: 1, h24: 1, h35: 1, h45: 1, h36: 1, h46: 1}
    relays:     {p3: 1, p4: 1}
    snr:        {snr: 1, s1: 1, s2: 1, include_relay_noise_in_beta: false}
    grid:
      p1: {min: 0, max: 10, steps: 21, spacing: linear}   # or log
      p2: {min: 0, max: 10, steps: 21, spacing: linear}
    point:      {p1: 10, p2: 0.01}
    inputs:     {dist1: gaussian, dist2: bpsk}   # or {points: [...], probs: [...]}
    estimation: {scheme: sic, first: 1}          # or joint
    monte_carlo: {samples: 100000, seed: 20170301}
    regime:     {theta_hi: 10, theta_lo: 0.1, epsilon_sigma: 0.05}
    sink: 5
    output:     {csv: out/sweep.csv, plot_dir: out/plots}
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigInvalid, DegenerateDenominator, InvariantViolation
from .immse import BPSK, DEFAULT_SAMPLES, GAUSSIAN, EstimationScheme, InputDistribution, default_seed
from .network import (
    PowerProfile,
    Regime,
    RegimeThresholds,
    SnrConfig,
    Topology,
    classify_regime,
    equivalent_channel,
)
from .rates import (
    cutset_bound,
    psi_integral_closed_form,
    rate_joint,
    rate_r1_treat_as_noise,
    rate_r2_after_cancellation,
)

__all__ = [
    "SCHEMA_VERSION",
    "CSV_HEADER",
    "GridAxis",
    "ScenarioConfig",
    "SweepRecord",
    "load_config",
    "parse_config",
    "evaluate_point",
    "run_sweep",
    "check_record",
    "emit_csv",
    "emit_plot_data",
]

SCHEMA_VERSION = 1
CSV_HEADER = (
    "p1", "p2", "beta3", "beta4", "h1eq", "h2eq", "sigma_zeq",
    "r1_tin", "r2_sic", "joint", "cutset", "gap_cutset", "psi_integral", "regime",
)


@dataclass(frozen=True)
class GridAxis:
    min: float
    max: float
    steps: int
    spacing: str = "linear"

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max), self.steps)
        return np.linspace(self.min, self.max, self.steps)


@dataclass(frozen=True)
class ScenarioConfig:
    topology: Topology = Topology()
    p3: float = 1.0
    p4: float = 1.0
    snr_cfg: SnrConfig = SnrConfig()
    grid_p1: GridAxis | None = None
    grid_p2: GridAxis | None = None
    point: tuple[float, float] | None = None
    dist1: InputDistribution = GAUSSIAN
    dist2: InputDistribution = GAUSSIAN
    scheme: EstimationScheme = EstimationScheme.sic(1)
    samples: int = DEFAULT_SAMPLES
    seed: int = field(default_factory=default_seed)
    thresholds: RegimeThresholds = RegimeThresholds()
    sink: int = 5
    csv_path: str | None = None
    plot_dir: str | None = None
    schema_version: int = SCHEMA_VERSION

    def powers(self, p1: float, p2: float) -> PowerProfile:
        return PowerProfile(p1, p2, self.p3, self.p4)


# --------------------------------------------------------------------------
# config parsing

_SECTIONS = {
    "schema_version", "topology", "relays", "snr", "grid", "point", "inputs",
    "estimation", "monte_carlo", "regime", "sink", "output",
}
_KEYS = {
    "topology": {"h13", "h14", "h23", "h24", "h35", "h45", "h36", "h46"},
    "relays": {"p3", "p4"},
    "snr": {"snr", "s1", "s2", "include_relay_noise_in_beta"},
    "grid": {"p1", "p2"},
    "point": {"p1", "p2"},
    "inputs": {"dist1", "dist2"},
    "estimation": {"scheme", "first"},
    "monte_carlo": {"samples", "seed"},
    "regime": {"theta_hi", "theta_lo", "epsilon_sigma"},
    "output": {"csv", "plot_dir"},
}
_AXIS_KEYS = {"min", "max", "steps", "spacing"}


class _Diag:
    def __init__(self):
        self.items = []

    def add(self, where, msg):
        self.items.append(f"{where}: {msg}")

    def number(self, section, key, value, *, positive=False, nonneg=False, integer=False):
        where = f"{section}.{key}" if section else key
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(where, f"expected a number, got {value!r}")
            return None
        if integer and not float(value).is_integer():
            self.add(where, f"expected an integer, got {value!r}")
            return None
        value = int(value) if integer else float(value)
        if not math.isfinite(value):
            self.add(where, "must be finite")
        elif positive and value <= 0:
            self.add(where, f"must be > 0, got {value}")
        elif nonneg and value < 0:
            self.add(where, f"must be >= 0, got {value}")
        return value


def _section(raw, name, diag):
    sec = raw.get(name, {})
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        diag.add(name, "expected a mapping")
        return {}
    for key in sorted(set(sec) - _KEYS[name]):
        diag.add(f"{name}.{key}", "unknown key")
    return sec


def _parse_dist(value, where, diag):
    if isinstance(value, str):
        name = value.lower()
        if name == "gaussian":
            return GAUSSIAN
        if name == "bpsk":
            return BPSK
        if name.endswith("pam") and name[:-3].isdigit() and int(name[:-3]) >= 2:
            return InputDistribution.pam(int(name[:-3]))
        diag.add(where, f"unknown input {value!r} (gaussian, bpsk, <M>pam or a points/probs mapping)")
        return None
    if isinstance(value, dict):
        extra = set(value) - {"points", "probs", "name"}
        if extra:
            diag.add(where, f"unknown keys {sorted(extra)}")
            return None
        try:
            return InputDistribution.discrete(value["points"], value.get("probs"), name=value.get("name", "custom"))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            diag.add(where, f"bad constellation: {exc}")
            return None
    diag.add(where, f"expected a name or a points/probs mapping, got {value!r}")
    return None


def _parse_axis(value, where, diag):
    if not isinstance(value, dict):
        diag.add(where, "expected a mapping with min, max, steps, spacing")
        return None
    for key in sorted(set(value) - _AXIS_KEYS):
        diag.add(f"{where}.{key}", "unknown key")
    missing = {"min", "max", "steps"} - set(value)
    if missing:
        diag.add(where, f"missing {sorted(missing)}")
        return None
    lo = diag.number(where, "min", value["min"], nonneg=True)
    hi = diag.number(where, "max", value["max"], nonneg=True)
    steps = diag.number(where, "steps", value["steps"], integer=True)
    spacing = value.get("spacing", "linear")
    if spacing not in ("linear", "log"):
        diag.add(f"{where}.spacing", f"must be 'linear' or 'log', got {spacing!r}")
        return None
    if None in (lo, hi, steps):
        return None
    ok = True
    if steps < 2:
        diag.add(f"{where}.steps", f"need at least 2 steps, got {steps}")
        ok = False
    if not lo < hi:
        diag.add(where, f"min ({lo}) must be < max ({hi})")
        ok = False
    if spacing == "log" and lo <= 0:
        diag.add(f"{where}.min", "log spacing needs min > 0")
        ok = False
    return GridAxis(lo, hi, steps, spacing) if ok else None


def parse_config(raw) -> ScenarioConfig:
    """Validate a parsed YAML mapping; raises ConfigInvalid listing every problem."""
    diag = _Diag()
    if not isinstance(raw, dict):
        raise ConfigInvalid(["<root>: expected a mapping"])
    for key in sorted(set(raw) - _SECTIONS):
        diag.add(key, "unknown key")
    version = raw.get("schema_version")
    if version is None:
        diag.add("schema_version", "missing")
    elif version != SCHEMA_VERSION:
        diag.add("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")

    kwargs = {}
    topo = _section(raw, "topology", diag)
    gains = {k: diag.number("topology", k, v, nonneg=True) for k, v in topo.items() if k in _KEYS["topology"]}
    relays = _section(raw, "relays", diag)
    for k in ("p3", "p4"):
        if k in relays:
            kwargs[k] = diag.number("relays", k, relays[k], nonneg=True)
    snr_sec = _section(raw, "snr", diag)
    snr_kw = {}
    for k in ("snr", "s1", "s2"):
        if k in snr_sec:
            snr_kw[k] = diag.number("snr", k, snr_sec[k], positive=True)
    if "include_relay_noise_in_beta" in snr_sec:
        flag = snr_sec["include_relay_noise_in_beta"]
        if not isinstance(flag, bool):
            diag.add("snr.include_relay_noise_in_beta", f"expected true/false, got {flag!r}")
        else:
            snr_kw["include_relay_noise_in_beta"] = flag

    grid = _section(raw, "grid", diag)
    if grid:
        for k in ("p1", "p2"):
            if k not in grid:
                diag.add(f"grid.{k}", "missing")
        kwargs["grid_p1"] = _parse_axis(grid.get("p1"), "grid.p1", diag) if "p1" in grid else None
        kwargs["grid_p2"] = _parse_axis(grid.get("p2"), "grid.p2", diag) if "p2" in grid else None
    point = _section(raw, "point", diag)
    if point:
        if set(point) != {"p1", "p2"}:
            diag.add("point", "needs both p1 and p2")
        else:
            kwargs["point"] = (
                diag.number("point", "p1", point["p1"], nonneg=True),
                diag.number("point", "p2", point["p2"], nonneg=True),
            )
    inputs = _section(raw, "inputs", diag)
    for k in ("dist1", "dist2"):
        if k in inputs:
            kwargs[k] = _parse_dist(inputs[k], f"inputs.{k}", diag)
    est = _section(raw, "estimation", diag)
    if est:
        mode = est.get("scheme", "sic")
        first = est.get("first", 1)
        if mode not in ("joint", "sic"):
            diag.add("estimation.scheme", f"must be 'joint' or 'sic', got {mode!r}")
        elif first not in (1, 2) or isinstance(first, bool):
            diag.add("estimation.first", f"must be 1 or 2, got {first!r}")
        else:
            kwargs["scheme"] = EstimationScheme(mode, first)
    mc = _section(raw, "monte_carlo", diag)
    if "samples" in mc:
        kwargs["samples"] = diag.number("monte_carlo", "samples", mc["samples"], positive=True, integer=True)
    if "seed" in mc:
        kwargs["seed"] = diag.number("monte_carlo", "seed", mc["seed"], nonneg=True, integer=True)
    reg = _section(raw, "regime", diag)
    reg_kw = {k: diag.number("regime", k, v, positive=True) for k, v in reg.items() if k in _KEYS["regime"]}
    if "sink" in raw:
        if raw["sink"] not in (5, 6) or isinstance(raw["sink"], bool):
            diag.add("sink", f"must be 5 or 6, got {raw['sink']!r}")
        else:
            kwargs["sink"] = raw["sink"]
    out = _section(raw, "output", diag)
    if "csv" in out:
        kwargs["csv_path"] = str(out["csv"])
    if "plot_dir" in out:
        kwargs["plot_dir"] = str(out["plot_dir"])

    if diag.items:
        raise ConfigInvalid(diag.items)
    # value-level checks that need whole objects
    try:
        kwargs["topology"] = Topology(**gains)
    except ValueError as exc:
        diag.add("topology", str(exc))
    try:
        kwargs["snr_cfg"] = SnrConfig(**snr_kw)
    except ValueError as exc:
        diag.add("snr", str(exc))
    try:
        kwargs["thresholds"] = RegimeThresholds(**reg_kw)
    except ValueError as exc:
        diag.add("regime", str(exc))
    if diag.items:
        raise ConfigInvalid(diag.items)
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid([f"{path}: cannot read ({exc.strerror})"]) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid([f"{path}: not valid YAML ({exc})"]) from exc
    return parse_config(raw)


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class SweepRecord:
    p1: float
    p2: float
    beta3: float
    beta4: float
    h1eq: float
    h2eq: float
    sigma_zeq: float
    r1_tin: float
    r2_sic: float
    joint: float
    cutset: float
    gap_cutset: float
    psi_integral: float
    regime: str

    @property
    def degenerate(self) -> bool:
        """True at points where no amplification gain exists (marked by infinite ``sigma_zeq``)."""
        return math.isinf(self.sigma_zeq)


def evaluate_point(config: ScenarioConfig, p1: float, p2: float) -> SweepRecord:
    """One grid point at the configured sink.

    Where a relay with power receives no signal (both sources silent with the
    relay-noise switch off) the amplification gain blows up. Such points are
    emitted with ``inf`` gains and ``sigma_zeq`` as the marker, and with the
    limiting rates (all zero, so the gap equals the cut-set bound).
    """
    powers = config.powers(p1, p2)
    snr_cfg = config.snr_cfg
    cut = cutset_bound(config.topology, powers, snr_cfg, config.sink)
    try:
        eq = equivalent_channel(config.topology, powers, snr_cfg, config.sink)
    except DegenerateDenominator:
        inf = math.inf
        label = classify_regime(powers, inf, config.thresholds)
        return SweepRecord(p1, p2, inf, inf, inf, inf, inf, 0.0, 0.0, 0.0, cut, cut, 0.0, str(label))
    joint = rate_joint(eq, powers, snr_cfg)
    return SweepRecord(
        p1=p1,
        p2=p2,
        beta3=eq.beta3,
        beta4=eq.beta4,
        h1eq=eq.h1eq,
        h2eq=eq.h2eq,
        sigma_zeq=eq.sigma_zeq,
        r1_tin=rate_r1_treat_as_noise(eq, powers, snr_cfg),
        r2_sic=rate_r2_after_cancellation(eq, powers, snr_cfg),
        joint=joint,
        cutset=cut,
        gap_cutset=cut - joint,
        psi_integral=psi_integral_closed_form(eq, powers, snr_cfg),
        regime=str(classify_regime(powers, eq, config.thresholds)),
    )


def _grid(config: ScenarioConfig):
    missing = [f"grid.{k}" for k, ax in (("p1", config.grid_p1), ("p2", config.grid_p2)) if ax is None]
    if missing:
        raise ConfigInvalid([f"{m}: required for a sweep" for m in missing])
    return [(float(a), float(b)) for a in config.grid_p1.values() for b in config.grid_p2.values()]


def _eval_star(args):
    return evaluate_point(*args)


def run_sweep(config: ScenarioConfig, workers: int = 1) -> list[SweepRecord]:
    """Evaluate the whole grid, ``p1`` outer and ``p2`` inner.

    With ``workers > 1`` points are evaluated in separate processes; the
    output order is the grid order regardless.
    """
    points = _grid(config)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_eval_star, [(config, a, b) for a, b in points], chunksize=64))
    return [evaluate_point(config, a, b) for a, b in points]


def check_record(rec: SweepRecord) -> None:
    """Re-check the chain rule (1e-12 relative) and the gap sign (>= -1e-12)."""
    total = rec.r1_tin + rec.r2_sic
    if abs(total - rec.joint) > 1e-12 * abs(rec.joint):
        raise InvariantViolation(f"chain rule broken at p1={rec.p1}, p2={rec.p2}: {total!r} != {rec.joint!r}")
    if rec.gap_cutset < -1e-12:
        raise InvariantViolation(f"joint rate exceeds cut-set bound at p1={rec.p1}, p2={rec.p2}")
    if rec.regime not in {r.value for r in Regime}:
        raise InvariantViolation(f"unknown regime token {rec.regime!r}")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".9g")


def emit_csv(records, path) -> Path:
    """Write records with the fixed header; floats at 9 significant digits."""
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    for rec in records:
        check_record(rec)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for rec in records:
                writer.writerow([_fmt(v) for v in astuple(rec)])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}") from exc
    return path


_NUMERIC = tuple(f.name for f in fields(SweepRecord) if f.name not in ("p1", "p2", "regime"))


def emit_plot_data(records, column: str, path) -> Path:
    """Write ``p1 p2 value`` triplets for one column, blank line between ``p1`` rows.

    The blank-line layout is what gnuplot's ``splot`` and similar surface
    plotters expect for gridded data.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    if column not in _NUMERIC:
        raise ValueError(f"column must be one of {_NUMERIC}, got {column!r}")
    path = Path(path)
    lines = [f"# p1 p2 {column}"]
    prev = None
    for rec in records:
        if prev is not None and rec.p1 != prev:
            lines.append("")
        prev = rec.p1
        lines.append(" ".join(_fmt(v) for v in (rec.p1, rec.p2, getattr(rec, column))))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write plot data to {path}: {exc.strerror}") from exc
    return path
