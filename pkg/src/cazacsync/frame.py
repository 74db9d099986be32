"""OFDM frame construction: QAM mapping, symbol modulation, frame assembly.

Frame layout: one sync symbol (SYN), then groups of one channel-estimation
training symbol (TS) followed by up to ds_per_ts data symbols (DS). Every
symbol carries a cyclic prefix. An optional low-power DC carrier (RF pilot)
can be added to the assembled frame for receiver phase tracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sequences import CazacParams, TrainingSymbol, cazac_sequence, occupied_bins


@dataclass(frozen=True)
class FrameConfig:
    """OFDM dimensioning and rates.

    Defaults follow the 115.8 Gb/s single-polarization system: 512-point
    IFFT at 40 GSa/s, 412 data subcarriers, 9% cyclic prefix, 16-QAM, one
    training symbol per 50 data symbols.
    """

    n: int = 512
    n_sc: int = 412
    n_cp: int = -1  # -1: derive as round(0.09 n)
    qam_order: int = 16
    ds_per_ts: int = 50
    sample_rate: float = 40e9
    rf_pilot_psr_db: float | None = None

    def __post_init__(self):
        if self.n_cp < 0:
            object.__setattr__(self, "n_cp", round(0.09 * self.n))
        if self.n % 2 or self.n_sc % 2 or self.n_sc >= self.n:
            raise ValueError(f"invalid grid: n={self.n}, n_sc={self.n_sc}")
        k = round(np.log2(self.qam_order))
        if 2 ** k != self.qam_order or k % 2:
            raise ValueError(f"QAM order must be an even power of 2, got {self.qam_order}")
        if self.ds_per_ts < 1 or self.sample_rate <= 0:
            raise ValueError("ds_per_ts must be >= 1 and sample_rate positive")

    @property
    def m(self) -> int:
        return self.n // 2

    @property
    def bits_per_symbol(self) -> int:
        return round(np.log2(self.qam_order))

    @property
    def symbol_len(self) -> int:
        return self.n + self.n_cp

    @property
    def subcarrier_spacing(self) -> float:
        return self.sample_rate / self.n

    @property
    def data_bins(self) -> np.ndarray:
        return occupied_bins(self.n, self.n_sc)

    def net_data_rate(self) -> float:
        """Net bit rate after CP and training-symbol overhead."""
        ts_overhead = 1.0 + 1.0 / self.ds_per_ts
        cp_overhead = 1.0 + self.n_cp / self.n
        return (
            self.sample_rate
            * self.bits_per_symbol
            * (self.n_sc / self.n)
            / (ts_overhead * cp_overhead)
        )


@dataclass(frozen=True)
class OfdmFrame:
    """Assembled frame with ground truth retained for testing and BER reference."""

    samples: np.ndarray
    sync_start: int
    tx_bits: np.ndarray
    data_grid: np.ndarray  # (n_ds, N) frequency-domain payload columns
    ce_grid: np.ndarray  # (N,) channel-estimation TS spectrum
    layout: tuple[str, ...]  # per-symbol kinds: "syn", "ts", "ds"
    cfg: FrameConfig = field(repr=False)

    @property
    def n_symbols(self) -> int:
        return len(self.layout)


# Gray code per rail: bit pair -> level index, and its inverse
_GRAY = {1: np.array([0, 1]), 2: np.array([0, 1, 3, 2]), 3: np.array([0, 1, 3, 2, 6, 7, 5, 4])}


def _rail_levels(bits_per_rail: int) -> np.ndarray:
    n_levels = 2 ** bits_per_rail
    levels = 2 * np.arange(n_levels) - (n_levels - 1)
    scale = np.sqrt(2 * np.mean(levels.astype(float) ** 2))
    return levels / scale


def qam_map(bits: np.ndarray, order: int = 16) -> np.ndarray:
    """Map bits to Gray-labeled square QAM symbols with unit average energy.

    Bits are consumed per symbol as [I-rail bits, Q-rail bits], most
    significant first; "00..0" maps to the most negative corner on both
    rails, e.g. (-3 - 3j)/sqrt(10) for 16-QAM.
    """
    bits = np.asarray(bits, dtype=int)
    k = round(np.log2(order))
    if bits.ndim != 1 or len(bits) % k:
        raise ValueError(f"bit count {len(bits)} not divisible by log2(order) = {k}")
    half = k // 2
    gray = _GRAY[half]
    levels = _rail_levels(half)
    b = bits.reshape(-1, k)
    weights = 2 ** np.arange(half - 1, -1, -1)
    i_idx = np.argsort(gray)[b[:, :half] @ weights]
    q_idx = np.argsort(gray)[b[:, half:] @ weights]
    return levels[i_idx] + 1j * levels[q_idx]


def qam_demap(symbols: np.ndarray, order: int = 16) -> np.ndarray:
    """Hard-decision demapping; inverse of qam_map in the noiseless case."""
    symbols = np.asarray(symbols)
    k = round(np.log2(order))
    half = k // 2
    gray = _GRAY[half]
    levels = _rail_levels(half)
    thresholds = (levels[:-1] + levels[1:]) / 2

    def rail_bits(x):
        idx = np.clip(np.searchsorted(thresholds, x), 0, len(levels) - 1)
        codes = gray[idx]
        return ((codes[:, None] >> np.arange(half - 1, -1, -1)) & 1).astype(int)

    out = np.concatenate([rail_bits(symbols.real), rail_bits(symbols.imag)], axis=1)
    return out.reshape(-1)


def ofdm_modulate(grid_column: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Inverse DFT of one frequency-domain column plus cyclic prefix.

    Rejects columns that load the DC bin or the guard band.
    """
    grid_column = np.asarray(grid_column, dtype=complex)
    if len(grid_column) != cfg.n:
        raise ValueError(f"grid column must have {cfg.n} bins")
    mask = np.ones(cfg.n, dtype=bool)
    mask[cfg.data_bins] = False
    if np.any(grid_column[mask] != 0):
        raise ValueError("nonzero content on DC or guard bins")
    x = np.fft.ifft(grid_column)
    return np.concatenate([x[cfg.n - cfg.n_cp:], x]) if cfg.n_cp else x


def channel_estimation_grid(cfg: FrameConfig) -> np.ndarray:
    """Known constant-amplitude spectrum for the channel-estimation TS."""
    grid = np.zeros(cfg.n, dtype=complex)
    grid[cfg.data_bins] = cazac_sequence(CazacParams(length=cfg.n_sc, root=cfg.n_sc - 1))
    return grid


def insert_rf_pilot(samples: np.ndarray, psr_db: float | None) -> np.ndarray:
    """Add a constant DC carrier at psr_db relative to the signal power."""
    if psr_db is None:
        return samples
    power = np.mean(np.abs(samples) ** 2)
    return samples + np.sqrt(power * 10 ** (psr_db / 10))


def assemble_frame(
    ts: TrainingSymbol,
    cfg: FrameConfig,
    payload_bits: np.ndarray,
    *,
    syn_samples: np.ndarray | None = None,
    ts_slot_samples: np.ndarray | None = None,
) -> OfdmFrame:
    """Assemble [SYN | TS | ds_per_ts DS | TS | ...] from payload bits.

    sync_start indexes the first useful SYN sample (after its CP); this is
    the ground truth against which timing estimates are scored. syn_samples
    and ts_slot_samples override the SYN and TS slot contents so baseline
    preambles can occupy the same layout.
    """
    payload_bits = np.asarray(payload_bits, dtype=int)
    bits_per_ds = cfg.n_sc * cfg.bits_per_symbol
    if len(payload_bits) == 0 or len(payload_bits) % bits_per_ds:
        raise ValueError(
            f"payload must fill whole data symbols of {bits_per_ds} bits, "
            f"got {len(payload_bits)}"
        )
    n_ds = len(payload_bits) // bits_per_ds

    syn = ts.samples if syn_samples is None else np.asarray(syn_samples, dtype=complex)
    if len(syn) != cfg.symbol_len:
        raise ValueError("SYN slot content must be one CP-prefixed symbol long")
    ce_grid = channel_estimation_grid(cfg)
    ts_slot = (
        ofdm_modulate(ce_grid, cfg)
        if ts_slot_samples is None
        else np.asarray(ts_slot_samples, dtype=complex)
    )
    if len(ts_slot) != cfg.symbol_len:
        raise ValueError("TS slot content must be one CP-prefixed symbol long")

    blocks = [syn]
    layout = ["syn"]
    data_grid = np.zeros((n_ds, cfg.n), dtype=complex)
    for k in range(n_ds):
        if k % cfg.ds_per_ts == 0:
            blocks.append(ts_slot)
            layout.append("ts")
        column = np.zeros(cfg.n, dtype=complex)
        column[cfg.data_bins] = qam_map(
            payload_bits[k * bits_per_ds:(k + 1) * bits_per_ds], cfg.qam_order
        )
        data_grid[k] = column
        blocks.append(ofdm_modulate(column, cfg))
        layout.append("ds")

    samples = insert_rf_pilot(np.concatenate(blocks), cfg.rf_pilot_psr_db)
    return OfdmFrame(
        samples=samples,
        sync_start=cfg.n_cp,
        tx_bits=payload_bits,
        data_grid=data_grid,
        ce_grid=ce_grid,
        layout=tuple(layout),
        cfg=cfg,
    )


def random_payload(cfg: FrameConfig, n_ds: int, seed) -> np.ndarray:
    """Seeded uniform payload bits filling n_ds data symbols."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, n_ds * cfg.n_sc * cfg.bits_per_symbol)


_HEADER_END = b"end_header\n"


def write_signal_file(path, samples: np.ndarray, cfg: FrameConfig, layout=()) -> None:
    """Dump complex samples as little-endian float64 I/Q pairs with a text header."""
    samples = np.asarray(samples, dtype=complex)
    lines = [
        "cazacsync-signal v1",
        f"sample_rate={cfg.sample_rate!r}",
        f"n={cfg.n}",
        f"n_cp={cfg.n_cp}",
        f"layout={','.join(layout)}",
        f"samples={len(samples)}",
    ]
    header = ("\n".join(lines) + "\n").encode("ascii") + _HEADER_END
    iq = np.empty(2 * len(samples))
    iq[0::2] = samples.real
    iq[1::2] = samples.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(iq.astype("<f8").tobytes())


def read_signal_file(path) -> tuple[np.ndarray, dict]:
    """Read a signal dump; returns (samples, header fields)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    end = blob.find(_HEADER_END)
    if end < 0 or not blob.startswith(b"cazacsync-signal v1"):
        raise ValueError(f"{path}: not a cazacsync signal file")
    meta = {}
    for line in blob[:end].decode("ascii").splitlines()[1:]:
        key, _, value = line.partition("=")
        meta[key] = value
    iq = np.frombuffer(blob[end + len(_HEADER_END):], dtype="<f8")
    n_samples = int(meta["samples"])
    if len(iq) != 2 * n_samples:
        raise ValueError(f"{path}: expected {n_samples} samples, file holds {len(iq) // 2}")
    samples = iq[0::2] + 1j * iq[1::2]
    meta["sample_rate"] = float(meta["sample_rate"])
    meta["n"] = int(meta["n"])
    meta["n_cp"] = int(meta["n_cp"])
    meta["layout"] = tuple(s for s in meta["layout"].split(",") if s)
    return samples, meta
