"""Monte-Carlo experiment runners and their CSV/plot emission.

Each runner maps a configured grid (OSNR points, CFO points, or named
conditions) to ResultRows: (experiment, algorithm, grid_param, grid_value,
statistic, value, trials). Noise is drawn once per (grid point, trial) and
shared by all algorithms under test (frames are laid out identically, so
the same realization applies), which pairs the comparisons and keeps every
output byte a pure function of (config, master seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rx as _rx
from . import sync as _sync
from .channel import ChannelConfig, run_channel
from .config import ALGORITHMS, EXPERIMENT_KINDS, HarnessConfig
from .frame import assemble_frame, random_payload
from .sequences import (
    build_four_part_preamble,
    build_repeated_preamble,
    build_training_symbol,
    occupied_bins,
    pn_sequence,
)

GRID_PARAM = {
    "metric_trace": "condition",
    "timing_stats": "osnr_db",
    "cfo_sweep": "cfo_hz",
    "cfo_mse": "osnr_db",
    "ber_vs_cfo": "cfo_hz",
    "ber_vs_osnr": "osnr_db",
    "range_check": "cfo_hz",
}


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    algorithm: str
    grid_param: str
    grid_value: object
    statistic: str
    value: float
    trials: int


@dataclass(frozen=True)
class SimSystem:
    """Preambles, per-algorithm frames sharing one layout, stream padding."""

    cfg: HarnessConfig
    ts: object
    frames: dict
    sc_even_bins: np.ndarray
    sc_v: np.ndarray
    pad_head: np.ndarray
    pad_tail: np.ndarray

    @property
    def d_true(self) -> int:
        return self.cfg.guard + self.cfg.channel.delay_samples + self.cfg.frame.n_cp

    def buffer(self, algorithm: str) -> np.ndarray:
        """Frame embedded in a continuous stream of neighboring data symbols.

        Zero guards would leave window positions whose second half holds
        only noise; the repeated-half baseline's partial-window
        normalization spikes there, an artifact of an isolated frame
        rather than of the estimator.
        """
        return np.concatenate([self.pad_head, self.frames[algorithm].samples, self.pad_tail])


def build_system(cfg: HarnessConfig, n_ds: int | None = None, payload_seed=0) -> SimSystem:
    """Build the training symbol and one frame per configured algorithm."""
    frame_cfg = cfg.frame
    root = cfg.root if cfg.root else frame_cfg.n_sc // 2 - 1
    pn = pn_sequence(frame_cfg.m, cfg.pn_seed)
    ts = build_training_symbol(frame_cfg.n, frame_cfg.n_sc, root, pn, frame_cfg.n_cp)
    n_ds = cfg.n_ds if n_ds is None else n_ds
    payload = random_payload(frame_cfg, n_ds, (cfg.seed, 101, payload_seed))

    sc_pre = build_repeated_preamble(frame_cfg.n, frame_cfg.n_sc, root, frame_cfg.n_cp)
    even_bins = np.sort(
        (occupied_bins(frame_cfg.m, frame_cfg.n_sc // 2) * 2) % frame_cfg.n
    )
    ref_even = np.fft.fft(sc_pre.useful)[even_bins]
    sc2_grid, sc_v = _sync.sc_second_symbol_grid(
        frame_cfg.n, even_bins, ref_even, seed=(cfg.seed, 102)
    )
    sc2_time = np.fft.ifft(sc2_grid)
    sc2_symbol = np.concatenate([sc2_time[frame_cfg.n - frame_cfg.n_cp:], sc2_time])
    minn_pre = build_four_part_preamble(frame_cfg.n, frame_cfg.n_sc, frame_cfg.n_cp)

    frames = {}
    for name in set(cfg.algorithms) | {"proposed"}:
        if name == "proposed":
            frames[name] = assemble_frame(ts, frame_cfg, payload)
        elif name in ("schmidl_cox", "schmidl_cox_1ts"):
            frames[name] = assemble_frame(
                ts,
                frame_cfg,
                payload,
                syn_samples=sc_pre.samples,
                ts_slot_samples=sc2_symbol,
            )
        elif name == "minn":
            frames[name] = assemble_frame(ts, frame_cfg, payload, syn_samples=minn_pre.samples)

    pad_symbols = max(1, -(-cfg.guard // frame_cfg.symbol_len))
    pad_payload = random_payload(frame_cfg, 2 * pad_symbols, (cfg.seed, 103))
    pad_cfg = replace(frame_cfg, ds_per_ts=2 * pad_symbols + 1)
    pad_stream = assemble_frame(ts, pad_cfg, pad_payload).samples
    pad_stream = pad_stream[2 * frame_cfg.symbol_len:]  # data symbols only
    return SimSystem(
        cfg=cfg,
        ts=ts,
        frames=frames,
        sc_even_bins=even_bins,
        sc_v=sc_v,
        pad_head=pad_stream[len(pad_stream) - cfg.guard:] if cfg.guard else pad_stream[:0],
        pad_tail=pad_stream[:cfg.guard],
    )


def _seed_int(*parts) -> int:
    """Stable integer seed from a tuple of ints (negatives folded to uint32)."""
    flat = []
    for p in parts:
        flat.extend(p if isinstance(p, tuple) else (p,))
    entropy = tuple(int(x) % 2 ** 32 for x in flat)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _padded(frame_samples: np.ndarray, guard: int) -> np.ndarray:
    pad = np.zeros(guard, dtype=complex)
    return np.concatenate([pad, frame_samples, pad])


def _through_channel(system: SimSystem, algorithm: str, point: ChannelConfig, trial_seed: int):
    """Impair one algorithm's frame and dispersion-compensate it."""
    cfg = system.cfg
    buf = system.buffer(algorithm)
    out = run_channel(buf, replace(point, seed=trial_seed), cfg.frame.sample_rate)
    if point.fiber_km:
        out = _rx.cd_equalize_overlap_add(
            out,
            point.fiber_km,
            point.disp_ps_nm_km,
            point.lambda_nm,
            cfg.frame.sample_rate,
        )
    return out


def _estimate(system: SimSystem, algorithm: str, sig: np.ndarray):
    """Run one algorithm's full estimate; returns (d_hat, cfo_hz or None, trace)."""
    cfg = system.cfg.frame
    n, m = cfg.n, cfg.m
    if algorithm == "proposed":
        res = _sync.synchronize(sig, system.ts, cfg)
        return res.d_hat, res.cfo_hz_hat, res.timing_trace
    if algorithm in ("schmidl_cox", "schmidl_cox_1ts"):
        trace = _sync.sc_timing_metric(sig, n)
        limit = len(sig) - 2 * cfg.symbol_len
        d_hat = _sync.estimate_timing(
            _sync.TimingTrace(values=trace.values[:limit], window_start=0)
        )
        alpha = _sync.sc_fractional_cfo(sig, d_hat, m)
        if algorithm == "schmidl_cox_1ts":
            return d_hat, alpha * cfg.subcarrier_spacing, trace
        comp = _sync.compensate_cfo(sig, alpha, cfg.subcarrier_spacing, cfg.sample_rate)
        ts1 = comp[d_hat:d_hat + n]
        ts2_start = d_hat + cfg.symbol_len
        ts2 = comp[ts2_start:ts2_start + n]
        beta = _sync.sc_integer_cfo(ts1, ts2, system.sc_even_bins, system.sc_v)
        rho = _sync.wrap_normalized_cfo(alpha + 2 * beta, m)
        return d_hat, rho * cfg.subcarrier_spacing, trace
    if algorithm == "minn":
        trace = _sync.minn_timing_metric(sig, n)
        return _sync.estimate_timing(trace), None, trace
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _channel_points(cfg: HarnessConfig, kind: str) -> list[tuple[object, ChannelConfig]]:
    """Expand the configured grid into labeled ChannelConfig points."""
    base = cfg.channel
    points = []
    for value in cfg.grid_for(kind):
        if kind == "metric_trace":
            fields = dict(value)
            label = fields.pop("label")
            points.append((label, replace(base, **fields)))
        elif kind in ("timing_stats", "cfo_mse", "ber_vs_osnr"):
            points.append((float(value), replace(base, osnr_db=float(value))))
        elif kind in ("cfo_sweep", "ber_vs_cfo"):
            points.append((float(value), replace(base, cfo_hz=float(value))))
        elif kind == "range_check":
            points.append(
                (float(value), replace(base, cfo_hz=float(value), osnr_db=None,
                                       fiber_km=0.0, linewidth_hz=0.0, adc_bits=None))
            )
    if not points:
        raise ValueError(f"empty grid for {kind}")
    return points


def _sync_algorithms(cfg: HarnessConfig, cfo_capable_only: bool) -> list[str]:
    names = [a for a in cfg.algorithms if a in ALGORITHMS]
    if cfo_capable_only:
        names = [a for a in names if a != "minn"]
    if not names:
        raise ValueError("no applicable algorithm configured")
    return names


def run_metric_trace(cfg: HarnessConfig):
    """Single-shot metric traces under the configured conditions."""
    system = build_system(cfg)
    rows, traces = [], {}
    for index, (label, point) in enumerate(_channel_points(cfg, "metric_trace")):
        for alg in _sync_algorithms(cfg, cfo_capable_only=False):
            sig = _through_channel(system, alg, point, _seed_int(cfg.seed, 1, index))
            d_hat, _, trace = _estimate(system, alg, sig)
            if alg == "proposed":
                res = _sync.synchronize(sig, system.ts, cfg.frame)
                traces[f"psi_{label}"] = np.column_stack([res.psi_betas, res.psi_trace])
            values = trace.values
            d_true = system.d_true
            peak = float(values[d_hat])
            lo = max(0, d_true - 256)
            hi = min(len(values), d_true + 257)
            traces[f"{alg}_{label}"] = np.column_stack(
                [np.arange(lo, hi) - d_true, values[lo:hi]]
            )
            near = np.abs(np.arange(len(values)) - d_hat) <= 2
            sidelobe = float(values[~near].max()) if np.any(~near) else 0.0
            at_max = values >= 0.99 * values.max()
            runs = np.split(np.flatnonzero(at_max), np.where(np.diff(np.flatnonzero(at_max)) != 1)[0] + 1)
            plateau = max((len(r) for r in runs), default=0)
            for stat, val in [
                ("peak_value", peak),
                ("argmax_offset", float(d_hat - d_true)),
                ("sidelobe_max_beyond2", sidelobe),
                ("plateau_within1pct", float(plateau)),
            ]:
                rows.append(ResultRow("metric_trace", alg, "condition", label, stat, val, 1))
    return rows, traces


def run_timing_stats(cfg: HarnessConfig):
    """Mean/variance/exact-fraction of the timing error per OSNR point."""
    system = build_system(cfg)
    algs = _sync_algorithms(cfg, cfo_capable_only=False)
    rows = []
    for value, point in _channel_points(cfg, "timing_stats"):
        errors = {a: [] for a in algs}
        for trial in range(cfg.trials):
            seed = _seed_int(cfg.seed, 2, int(value * 1000), trial)
            for alg in algs:
                sig = _through_channel(system, alg, point, seed)
                d_hat, _, _ = _estimate(system, alg, sig)
                errors[alg].append(d_hat - system.d_true)
        for alg in algs:
            err = np.array(errors[alg], dtype=float)
            for stat, val in [
                ("timing_err_mean", float(err.mean())),
                ("timing_err_var", float(err.var())),
                ("timing_exact_fraction", float(np.mean(err == 0))),
            ]:
                rows.append(
                    ResultRow("timing_stats", alg, "osnr_db", value, stat, val, cfg.trials)
                )
    return rows, {}


def run_cfo_sweep(cfg: HarnessConfig):
    """Mean estimated CFO against actual CFO."""
    system = build_system(cfg)
    algs = _sync_algorithms(cfg, cfo_capable_only=True)
    rows = []
    for value, point in _channel_points(cfg, "cfo_sweep"):
        estimates = {a: [] for a in algs}
        for trial in range(cfg.trials):
            seed = _seed_int(cfg.seed, 3, int(value / 1e3), trial)
            for alg in algs:
                sig = _through_channel(system, alg, point, seed)
                _, cfo_hz, _ = _estimate(system, alg, sig)
                estimates[alg].append(cfo_hz)
        for alg in algs:
            mean_est = float(np.mean(estimates[alg]))
            rows.append(
                ResultRow("cfo_sweep", alg, "cfo_hz", value, "cfo_hz_mean", mean_est, cfg.trials)
            )
            rows.append(
                ResultRow(
                    "cfo_sweep", alg, "cfo_hz", value, "cfo_err_hz_mean",
                    mean_est - value, cfg.trials,
                )
            )
    return rows, {}


def run_cfo_mse(cfg: HarnessConfig):
    """Mean square CFO estimation error per OSNR point."""
    system = build_system(cfg)
    algs = _sync_algorithms(cfg, cfo_capable_only=True)
    rows = []
    for value, point in _channel_points(cfg, "cfo_mse"):
        sq_errors = {a: [] for a in algs}
        for trial in range(cfg.trials):
            seed = _seed_int(cfg.seed, 4, int(value * 1000), trial)
            for alg in algs:
                sig = _through_channel(system, alg, point, seed)
                _, cfo_hz, _ = _estimate(system, alg, sig)
                sq_errors[alg].append((cfo_hz - point.cfo_hz) ** 2)
        for alg in algs:
            rows.append(
                ResultRow(
                    "cfo_mse", alg, "osnr_db", value, "cfo_mse_hz2",
                    float(np.mean(sq_errors[alg])), cfg.trials,
                )
            )
    return rows, {}


def run_ber(cfg: HarnessConfig, kind: str):
    """Full-chain BER per grid point; proposed synchronizer, two-pass receive."""
    if kind not in ("ber_vs_cfo", "ber_vs_osnr"):
        raise ValueError(f"not a BER experiment: {kind}")
    frame_cfg = cfg.frame
    bits_per_frame = frame_cfg.ds_per_ts * frame_cfg.n_sc * frame_cfg.bits_per_symbol
    # BER points are bits-driven: enough frames to reach min_bits per point
    frames_needed = max(1, math.ceil(cfg.min_bits / bits_per_frame))
    root = cfg.root if cfg.root else frame_cfg.n_sc // 2 - 1
    pn = pn_sequence(frame_cfg.m, cfg.pn_seed)
    ts = build_training_symbol(frame_cfg.n, frame_cfg.n_sc, root, pn, frame_cfg.n_cp)
    rows = []
    for value, point in _channel_points(cfg, kind):
        errors = bits = 0
        first_bias, final_bias = [], []
        for trial in range(frames_needed):
            payload = random_payload(frame_cfg, frame_cfg.ds_per_ts, (cfg.seed, 5, trial))
            frame = assemble_frame(ts, frame_cfg, payload)
            buf = _padded(frame.samples, cfg.guard)
            seed = _seed_int(cfg.seed, 6, int(value if kind == "ber_vs_osnr" else value / 1e3), trial)
            raw = run_channel(buf, replace(point, seed=seed), frame_cfg.sample_rate)
            result = _rx.receive_frame(
                raw, ts, frame, frame_cfg,
                fiber_km=point.fiber_km,
                disp_ps_nm_km=point.disp_ps_nm_km,
                lambda_nm=point.lambda_nm,
                pilot_bandwidth_hz=cfg.pilot_bandwidth_hz,
            )
            errors += result.report.bit_errors
            bits += result.report.bits_total
            d_true = cfg.guard + point.delay_samples + frame_cfg.n_cp
            first_bias.append(result.first_pass.d_hat - d_true)
            final_bias.append(result.final.d_hat - d_true)
        for stat, val in [
            ("ber", errors / bits),
            ("bit_errors", float(errors)),
            ("bits_total", float(bits)),
            ("first_pass_bias_mean", float(np.mean(first_bias))),
            ("final_bias_mean", float(np.mean(final_bias))),
        ]:
            rows.append(
                ResultRow(kind, "proposed", GRID_PARAM[kind], value, stat, val, frames_needed)
            )
    return rows, {}


def run_range_check(cfg: HarnessConfig):
    """Noiseless recovery at configured CFO points (range endpoints)."""
    system = build_system(cfg)
    rows = []
    for value, point in _channel_points(cfg, "range_check"):
        sig = _through_channel(system, "proposed", point, _seed_int(cfg.seed, 8))
        res = _sync.synchronize(sig, system.ts, system.cfg.frame)
        for stat, val in [
            ("beta_hat", float(res.beta_hat)),
            ("rho_hat", float(res.rho_hat)),
            ("cfo_err_hz", res.cfo_hz_hat - value),
            ("timing_offset", float(res.d_hat - system.d_true)),
        ]:
            rows.append(ResultRow("range_check", "proposed", "cfo_hz", value, stat, val, 1))
    return rows, {}


def run_experiment(cfg: HarnessConfig, kind: str):
    """Dispatch one experiment kind; returns (rows, traces)."""
    if kind not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment kind {kind!r}")
    runner = {
        "metric_trace": run_metric_trace,
        "timing_stats": run_timing_stats,
        "cfo_sweep": run_cfo_sweep,
        "cfo_mse": run_cfo_mse,
        "range_check": run_range_check,
    }
    if kind in runner:
        return runner[kind](cfg)
    return run_ber(cfg, kind)


# ---------------------------------------------------------------------------
# Output emission
# ---------------------------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    return f"{value:.12g}"


def rows_to_csv(rows) -> str:
    if not rows:
        raise ValueError("no result rows to emit")
    lines = ["experiment,algorithm,grid_param,grid_value,statistic,value,trials"]
    ordered = sorted(
        rows,
        key=lambda r: (r.experiment, r.algorithm, r.grid_param, str(r.grid_value), r.statistic),
    )
    for r in ordered:
        lines.append(
            f"{r.experiment},{r.algorithm},{r.grid_param},{_format_value(r.grid_value)},"
            f"{r.statistic},{_format_value(r.value)},{r.trials}"
        )
    return "\n".join(lines) + "\n"


def check_assertions(rows, assertions: dict) -> list[str]:
    """Evaluate configured acceptance assertions; returns failure messages."""
    failures = []
    by_stat = {}
    for r in rows:
        by_stat.setdefault((r.algorithm, r.statistic), []).append((r.grid_value, r.value))

    def values(alg, stat):
        return [v for _, v in by_stat.get((alg, stat), [])]

    for key, bound in assertions.items():
        if key == "proposed_peak_min":
            ok = all(v >= bound for v in values("proposed", "peak_value"))
        elif key == "proposed_sidelobe_max":
            ok = all(v <= bound for v in values("proposed", "sidelobe_max_beyond2"))
        elif key == "plateau_min":
            ok = all(v >= bound for v in values("schmidl_cox", "plateau_within1pct"))
        elif key == "exact_fraction_min":
            ok = all(v >= bound for v in values("proposed", "timing_exact_fraction"))
        elif key == "variance_ordering" and bound:
            prop = dict(by_stat.get(("proposed", "timing_err_var"), []))
            base = dict(by_stat.get(("schmidl_cox", "timing_err_var"), []))
            ok = bool(prop) and all(base.get(g, np.inf) > v for g, v in prop.items())
        elif key == "mse_ordering" and bound:
            prop = dict(by_stat.get(("proposed", "cfo_mse_hz2"), []))
            base = dict(by_stat.get(("schmidl_cox", "cfo_mse_hz2"), []))
            ok = bool(prop) and all(base.get(g, np.inf) > v for g, v in prop.items())
        elif key == "ber_ratio_max":
            bers = [v for v in values("proposed", "ber") if v > 0]
            ok = bool(bers) and max(bers) / min(bers) <= bound
        elif key == "cfo_err_max_hz":
            ok = all(abs(v) <= bound for v in values("proposed", "cfo_err_hz"))
        else:
            failures.append(f"unknown assertion key {key!r}")
            continue
        if not ok:
            failures.append(f"assertion {key} (bound {bound}) failed")
    return failures


def emit_outputs(rows, traces, kind: str, outdir, assertions: dict | None = None) -> int:
    """Write CSV, trace CSVs, and a plot; returns the count of failed assertions."""
    from pathlib import Path

    from .plotting import render_experiment

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"{kind}.csv").write_text(rows_to_csv(rows))
    for name, array in traces.items():
        header = "beta,psi" if name.startswith("psi_") else "d_offset,metric"
        lines = [header]
        lines += [f"{int(d)},{m:.12g}" for d, m in array]
        (outdir / f"trace_{kind}_{name}.csv").write_text("\n".join(lines) + "\n")
    render_experiment(kind, rows, traces, outdir / f"{kind}.png")
    failures = check_assertions(rows, assertions or {})
    for message in failures:
        print(f"FAIL {kind}: {message}")
    return len(failures)
