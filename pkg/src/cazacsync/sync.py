"""Joint symbol-timing and CFO estimation, plus baseline synchronizers.

The primary estimator detects a preamble of two identical halves with the
second half scrambled by a known +-1 sequence. Timing comes from the peak
of a normalized half-symbol correlation; the fractional CFO (in units of
the subcarrier spacing) from the correlation phase; the even-integer CFO
from a cyclic cross-correlation of the received and reference preamble
spectra. Baselines: the repeated-half estimator with its CP-wide metric
plateau and optional second-symbol integer stage, and the four-part
sign-flipped timing metric.

Traces are bounded by 1 (up to numerical headroom) for the primary metric;
the baseline metrics normalize by partial-window energy and may slightly
exceed 1 at symbol power steps. Windows whose energy falls below 1% of the
trace maximum emit metric 0 (covers all-zero input regions).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frame import FrameConfig
from .sequences import PnSequence, TrainingSymbol

ENERGY_FLOOR_FRACTION = 1e-2


@dataclass(frozen=True)
class TimingTrace:
    """Timing metric values over a search window of start indices."""

    values: np.ndarray
    window_start: int = 0

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("empty timing trace")


@dataclass(frozen=True)
class SyncResult:
    """Estimates plus retained traces for plotting.

    rho_hat = alpha_hat + 2 beta_hat always holds; when the raw sum falls
    outside [-M, M-1] it is wrapped by the one-period ambiguity of the
    decomposition and beta_hat readjusted to keep the identity.
    """

    d_hat: int
    alpha_hat: float
    beta_hat: int
    rho_hat: float
    cfo_hz_hat: float
    timing_trace: TimingTrace = field(repr=False)
    psi_trace: np.ndarray = field(repr=False)
    psi_betas: np.ndarray = field(repr=False)


def _sliding_energy(sig: np.ndarray, width: int) -> np.ndarray:
    """Energy of every length-`width` window, via cumulative sums."""
    csum = np.concatenate([[0.0], np.cumsum(np.abs(sig) ** 2)])
    return csum[width:] - csum[:-width]


def _floored_metric(p_sq: np.ndarray, r: np.ndarray) -> np.ndarray:
    metric = np.zeros(len(p_sq))
    floor = ENERGY_FLOOR_FRACTION * r.max() if r.size else 0.0
    ok = r > floor
    metric[ok] = p_sq[ok] / r[ok] ** 2
    return metric


def timing_metric(sig: np.ndarray, pn: PnSequence, n: int) -> TimingTrace:
    """Weighted half-symbol correlation metric M(d) = |P(d)|^2 / R(d)^2.

    P(d) descrambles the second half with the PN weights before
    correlating; R(d) is half the energy of the full N-sample window, so
    the metric is bounded by 1 and invariant to input scaling.
    """
    sig = np.asarray(sig, dtype=complex)
    m = n // 2
    if len(pn) != m:
        raise ValueError(f"PN length {len(pn)} does not match N/2 = {m}")
    if len(sig) < n + 1:
        raise ValueError(f"signal of {len(sig)} samples is shorter than one symbol")
    lagged = sig[:len(sig) - m] * np.conj(sig[m:])
    p = np.correlate(lagged, pn.values, mode="valid")[:len(sig) - n + 1]
    r = 0.5 * _sliding_energy(sig, n)
    return TimingTrace(values=_floored_metric(np.abs(p) ** 2, r))


def estimate_timing(trace: TimingTrace) -> int:
    """Index of the metric peak; first occurrence wins on exact ties."""
    return trace.window_start + int(np.argmax(trace.values))


def estimate_fractional_cfo(sig: np.ndarray, d_hat: int, pn: PnSequence, m: int) -> float:
    """Fractional CFO (units of subcarrier spacing) from the half-symbol phase."""
    if d_hat < 0 or d_hat + 2 * m > len(sig):
        raise ValueError("timing estimate leaves no room for a full symbol")
    corr = np.sum(sig[d_hat:d_hat + m] * pn.values * np.conj(sig[d_hat + m:d_hat + 2 * m]))
    if corr == 0:
        raise ValueError("zero half-symbol correlation, fractional CFO undefined")
    return float(-np.angle(corr) / np.pi)


def compensate_cfo(
    sig: np.ndarray,
    normalized_cfo: float,
    subcarrier_spacing: float,
    sample_rate: float,
) -> np.ndarray:
    """Counter-rotate by normalized_cfo subcarrier spacings."""
    if normalized_cfo == 0:
        return np.asarray(sig, dtype=complex)
    n = np.arange(len(sig))
    return sig * np.exp(-2j * np.pi * normalized_cfo * subcarrier_spacing * n / sample_rate)


def estimate_integer_cfo(
    rx_ts: np.ndarray, ref_spectrum: np.ndarray
) -> tuple[int, np.ndarray]:
    """Even-integer spectral shift via normalized cyclic cross-correlation.

    rx_ts is the fractional-CFO-compensated useful preamble (N samples);
    ref_spectrum is the N-point DFT of the transmitted preamble. Evaluates
    Psi(beta) = |sum_k conj(B(k)) R(k + 2 beta)|^2 / (sum_k |B(k)|^2)^2 over
    beta in [-M/2, M/2 - 1] with cyclic indexing; returns the maximizing
    beta (first on ties) and the Psi trace.
    """
    rx_ts = np.asarray(rx_ts, dtype=complex)
    ref_spectrum = np.asarray(ref_spectrum, dtype=complex)
    n = len(ref_spectrum)
    if len(rx_ts) != n:
        raise ValueError(f"received symbol has {len(rx_ts)} samples, reference {n} bins")
    m = n // 2
    rx_spectrum = np.fft.fft(rx_ts)
    betas = np.arange(-m // 2, m // 2)
    cyc = np.array(
        [np.sum(np.conj(ref_spectrum) * np.roll(rx_spectrum, -2 * b)) for b in betas]
    )
    psi = np.abs(cyc) ** 2 / np.sum(np.abs(ref_spectrum) ** 2) ** 2
    beta_hat = int(betas[np.argmax(psi)])
    return beta_hat, psi


def wrap_normalized_cfo(rho: float, m: int) -> float:
    """Wrap a normalized CFO into the identifiable range [-M, M-1]."""
    return (rho + m) % (2 * m) - m


def synchronize(sig: np.ndarray, ts: TrainingSymbol, cfg: FrameConfig) -> SyncResult:
    """Full estimate: timing, fractional CFO, integer CFO, combined CFO.

    The input is assumed dispersion-compensated. The combined normalized
    CFO is wrapped into [-M, M-1] and beta_hat adjusted so that
    rho_hat = alpha_hat + 2 beta_hat holds exactly.
    """
    sig = np.asarray(sig, dtype=complex)
    n, m = cfg.n, cfg.m
    trace = timing_metric(sig, ts.pn, n)
    d_hat = estimate_timing(trace)
    alpha_hat = estimate_fractional_cfo(sig, d_hat, ts.pn, m)
    window = compensate_cfo(
        sig[d_hat:d_hat + n], alpha_hat, cfg.subcarrier_spacing, cfg.sample_rate
    )
    ref_spectrum = np.fft.fft(ts.useful)
    beta_hat, psi = estimate_integer_cfo(window, ref_spectrum)
    rho_hat = wrap_normalized_cfo(alpha_hat + 2 * beta_hat, m)
    beta_hat = round((rho_hat - alpha_hat) / 2)
    return SyncResult(
        d_hat=d_hat,
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        rho_hat=rho_hat,
        cfo_hz_hat=rho_hat * cfg.subcarrier_spacing,
        timing_trace=trace,
        psi_trace=psi,
        psi_betas=np.arange(-m // 2, m // 2),
    )


# ---------------------------------------------------------------------------
# Repeated-half baseline (two identical halves, CP-wide plateau)
# ---------------------------------------------------------------------------


def sc_timing_metric(sig: np.ndarray, n: int) -> TimingTrace:
    """Repeated-half metric |P(d)|^2 / R(d)^2 with R = second-half energy."""
    sig = np.asarray(sig, dtype=complex)
    m = n // 2
    if len(sig) < n + 1:
        raise ValueError(f"signal of {len(sig)} samples is shorter than one symbol")
    lagged = np.conj(sig[:len(sig) - m]) * sig[m:]
    p = np.convolve(lagged, np.ones(m), mode="valid")[:len(sig) - n + 1]
    energy = _sliding_energy(sig, m)
    r = energy[m:][:len(sig) - n + 1]
    return TimingTrace(values=_floored_metric(np.abs(p) ** 2, r))


def sc_correlation(sig: np.ndarray, d_hat: int, m: int) -> complex:
    p = np.sum(np.conj(sig[d_hat:d_hat + m]) * sig[d_hat + m:d_hat + 2 * m])
    if p == 0:
        raise ValueError("zero half-symbol correlation")
    return complex(p)


def sc_fractional_cfo(sig: np.ndarray, d_hat: int, m: int) -> float:
    """Fractional CFO of the repeated-half preamble, range +-1 spacing."""
    return float(np.angle(sc_correlation(sig, d_hat, m)) / np.pi)


def sc_second_symbol_grid(
    n: int, occupied_even: np.ndarray, ref_even: np.ndarray, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Second-symbol spectrum for the integer stage of the repeated-half baseline.

    Even occupied bins carry sqrt(2) v(k) u(k) with v a seeded +-1 sequence
    and u the unit-modulus first-symbol values; odd occupied bins carry a
    QPSK filler so the symbol is not itself half-repetitive (it must not
    trigger the timing metric). Returns (grid, v).
    """
    rng = np.random.default_rng(seed)
    v = rng.integers(0, 2, len(occupied_even)) * 2.0 - 1.0
    grid = np.zeros(n, dtype=complex)
    grid[occupied_even] = np.sqrt(2) * v * ref_even / np.abs(ref_even)
    odd = (occupied_even + 1) % n
    grid[odd] = (rng.integers(0, 2, len(odd)) * 2 - 1) + 1j * (
        rng.integers(0, 2, len(odd)) * 2 - 1
    )
    return grid, v


def sc_integer_cfo(
    rx_ts1: np.ndarray,
    rx_ts2: np.ndarray,
    occupied_even: np.ndarray,
    v: np.ndarray,
    beta_range: int | None = None,
) -> int:
    """Integer stage from two consecutive symbols via differential correlation.

    Correlates conj(X1) v X2 on the even occupied bins across candidate even
    shifts 2 beta; the differential form cancels the common channel phase
    and any common timing-offset phase slope.
    """
    if rx_ts2 is None or len(rx_ts2) == 0:
        raise ValueError("integer CFO stage needs the second training symbol")
    n = len(rx_ts1)
    if len(rx_ts2) != n:
        raise ValueError("training symbols must have equal length")
    m = n // 2
    x1 = np.fft.fft(rx_ts1)
    x2 = np.fft.fft(rx_ts2)
    if beta_range is None:
        betas = np.arange(-m // 2, m // 2)
    else:
        betas = np.arange(-beta_range, beta_range + 1)
    corr = np.empty(len(betas))
    for i, beta in enumerate(betas):
        bins = (occupied_even + 2 * beta) % n
        corr[i] = np.abs(np.sum(np.conj(x1[bins]) * v * x2[bins])) ** 2
    return int(betas[np.argmax(corr)])


# ---------------------------------------------------------------------------
# Four-part baseline (sign-flipped quarters, triangular metric)
# ---------------------------------------------------------------------------


def minn_timing_metric(sig: np.ndarray, n: int) -> TimingTrace:
    """Sign-weighted quarter correlations for a [+A +A -A -A] preamble.

    Two quarter-lag correlations (parts 1-2 and parts 3-4) normalized by
    the energy of parts 2 and 4; yields a triangular peak with no plateau.
    """
    sig = np.asarray(sig, dtype=complex)
    lq = n // 4
    if len(sig) < n + 1:
        raise ValueError(f"signal of {len(sig)} samples is shorter than one symbol")
    lagged = np.conj(sig[:len(sig) - lq]) * sig[lq:]
    corr = np.convolve(lagged, np.ones(lq), mode="valid")
    n_out = len(sig) - n + 1
    p = corr[:n_out] + corr[2 * lq:2 * lq + n_out]
    quarter_energy = _sliding_energy(sig, lq)
    r = quarter_energy[lq:lq + n_out] + quarter_energy[3 * lq:3 * lq + n_out]
    return TimingTrace(values=_floored_metric(np.abs(p) ** 2, r))
