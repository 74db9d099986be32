"""TOML configuration for the experiment harness.

Every system parameter has a named key whose default is the reference
115.8 Gb/s setup: 512-point IFFT at 40 GSa/s, 412 data subcarriers, 9% CP,
16-QAM, training symbol every 50 data symbols, 800 km of 16 ps/nm/km fiber
at 1550 nm, 200 kHz combined laser linewidth, 8-bit ADC, -12 dB RF pilot.
See README for the full key reference.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import ChannelConfig
from .frame import FrameConfig

EXPERIMENT_KINDS = (
    "metric_trace",
    "timing_stats",
    "cfo_sweep",
    "cfo_mse",
    "ber_vs_cfo",
    "ber_vs_osnr",
    "range_check",
)

ALGORITHMS = ("proposed", "schmidl_cox", "schmidl_cox_1ts", "minn")

_DEFAULT_GRIDS = {
    "metric_trace": [
        {"label": "clean", "cfo_hz": 0.0, "osnr_db": None},
        {"label": "cfo5g", "cfo_hz": 5e9, "osnr_db": None},
        {"label": "cfo5g_osnr6", "cfo_hz": 5e9, "osnr_db": 6.0},
    ],
    "timing_stats": [6.0, 10.0, 14.0, 18.0, 22.0],
    "cfo_sweep": [i * 0.5e9 for i in range(-10, 11)],
    "cfo_mse": [6.0, 10.0, 14.0, 18.0, 22.0],
    "ber_vs_cfo": [-5e9, -2.5e9, 0.0, 2.5e9, 5e9],
    "ber_vs_osnr": [14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0, 21.0, 22.0, 23.0],
    "range_check": [-20e9, 5e9, 19.921875e9],
}


@dataclass(frozen=True)
class HarnessConfig:
    """Assembled configuration for one experiment run."""

    frame: FrameConfig
    channel: ChannelConfig
    trials: int = 200
    seed: int = 1550
    algorithms: tuple[str, ...] = ("proposed", "schmidl_cox", "minn")
    n_ds: int = 10
    guard: int = 1024
    pn_seed: int = 7
    root: int = 0  # 0: use L - 1
    pilot_bandwidth_hz: float = 30e6
    min_bits: int = 200_000
    grids: dict = field(default_factory=dict)
    assertions: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
        if self.n_ds < 1 or self.guard < 0:
            raise ValueError("n_ds must be >= 1 and guard >= 0")

    def grid_for(self, kind: str):
        if kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {kind!r}")
        return self.grids.get(kind, _DEFAULT_GRIDS[kind])


def _pick(table: dict, key: str, default):
    value = table.get(key, default)
    return default if value is None else value


def load_config(path=None, **overrides) -> HarnessConfig:
    """Load a TOML config file; keyword overrides win over file values.

    With no path, returns the reference defaults.
    """
    raw = {}
    if path is not None:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)

    system = raw.get("system", {})
    n = int(_pick(system, "n", 512))
    n_cp = system.get("n_cp")
    if n_cp is None:
        n_cp = round(float(_pick(system, "cp_fraction", 0.09)) * n)
    psr = system.get("rf_pilot_psr_db", -12.0)
    frame = FrameConfig(
        n=n,
        n_sc=int(_pick(system, "n_sc", 412)),
        n_cp=int(n_cp),
        qam_order=int(_pick(system, "qam_order", 16)),
        ds_per_ts=int(_pick(system, "ds_per_ts", 50)),
        sample_rate=float(_pick(system, "sample_rate", 40e9)),
        rf_pilot_psr_db=None if psr is None else float(psr),
    )

    chan = raw.get("channel", {})
    osnr = chan.get("osnr_db", 18.0)
    adc = chan.get("adc_bits", 8)
    channel = ChannelConfig(
        delay_samples=int(_pick(chan, "delay_samples", 100)),
        cfo_hz=float(_pick(chan, "cfo_hz", 5e9)),
        osnr_db=None if osnr is None else float(osnr),
        fiber_km=float(_pick(chan, "fiber_km", 800.0)),
        disp_ps_nm_km=float(_pick(chan, "disp_ps_nm_km", 16.0)),
        lambda_nm=float(_pick(chan, "lambda_nm", 1550.0)),
        linewidth_hz=float(_pick(chan, "linewidth_hz", 200e3)),
        adc_bits=None if adc is None else int(adc),
    )

    exp = raw.get("experiment", {})
    grids = {}
    for kind in EXPERIMENT_KINDS:
        table = exp.get(kind, {})
        for key in ("osnr_grid_db", "cfo_grid_hz", "conditions"):
            if key in table:
                grids[kind] = table[key]

    cfg = HarnessConfig(
        frame=frame,
        channel=channel,
        trials=int(_pick(exp, "trials", 200)),
        seed=int(_pick(exp, "seed", 1550)),
        algorithms=tuple(_pick(exp, "algorithms", ["proposed", "schmidl_cox", "minn"])),
        n_ds=int(_pick(exp, "n_ds", 10)),
        guard=int(_pick(exp, "guard", 1024)),
        pn_seed=int(_pick(exp, "pn_seed", 7)),
        root=int(_pick(exp, "root", 0)),
        pilot_bandwidth_hz=float(_pick(exp, "pilot_bandwidth_hz", 30e6)),
        min_bits=int(_pick(exp, "min_bits", 200_000)),
        grids=grids,
        assertions=raw.get("assertions", {}),
    )
    if overrides:
        allowed = {"trials", "seed", "algorithms", "n_ds", "channel", "frame", "min_bits"}
        bad = set(overrides) - allowed
        if bad:
            raise ValueError(f"unknown config overrides: {sorted(bad)}")
        cfg = replace(cfg, **overrides)
    return cfg
