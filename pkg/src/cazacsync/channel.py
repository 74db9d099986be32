"""Linear impairment chain for the simulated optical link.

Impairments are applied in the physical order seen by the receiver ADC:
integer-sample delay, chromatic dispersion, carrier frequency offset and
laser phase noise (both arise at coherent mixing), OSNR-calibrated additive
noise, and optional ADC quantization. All randomness is seeded; a channel
run is a pure function of (signal, config, sample rate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0
OSNR_REF_BANDWIDTH = 12.5e9  # 0.1 nm at 1550 nm


@dataclass(frozen=True)
class ChannelConfig:
    """Impairment settings; None disables an effect."""

    delay_samples: int = 0
    cfo_hz: float = 0.0
    osnr_db: float | None = None
    fiber_km: float = 0.0
    disp_ps_nm_km: float = 16.0
    lambda_nm: float = 1550.0
    linewidth_hz: float = 0.0
    adc_bits: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.delay_samples < 0:
            raise ValueError("delay must be >= 0")
        if self.fiber_km < 0:
            raise ValueError("fiber length must be >= 0")
        if self.osnr_db is not None and not np.isfinite(self.osnr_db):
            raise ValueError("OSNR must be finite when enabled")
        if self.linewidth_hz < 0:
            raise ValueError("linewidth must be >= 0")
        if self.adc_bits is not None and not 1 <= self.adc_bits <= 16:
            raise ValueError("ADC resolution must be in 1..16 bits")


def apply_delay(sig: np.ndarray, d0: int) -> np.ndarray:
    """Delay by d0 samples with a zero-filled head; output grows by d0."""
    if d0 < 0:
        raise ValueError("delay must be >= 0")
    if d0 == 0:
        return np.asarray(sig, dtype=complex)
    return np.concatenate([np.zeros(d0, dtype=complex), sig])


def apply_cfo(sig: np.ndarray, cfo_hz: float, sample_rate: float) -> np.ndarray:
    """Rotate by exp(j 2 pi cfo n / fs).

    Accepts cfo in [-fs/2, fs/2): -fs/2 is representable (per-sample
    rotation of pi) while +fs/2 aliases onto it and is rejected.
    """
    if not -sample_rate / 2 <= cfo_hz < sample_rate / 2:
        raise ValueError(
            f"CFO {cfo_hz} Hz outside [-fs/2, fs/2) at fs = {sample_rate} Sa/s"
        )
    if cfo_hz == 0:
        return np.asarray(sig, dtype=complex)
    n = np.arange(len(sig))
    return sig * np.exp(2j * np.pi * cfo_hz * n / sample_rate)


def apply_phase_noise(
    sig: np.ndarray, linewidth_hz: float, sample_rate: float, seed: int
) -> np.ndarray:
    """Multiply by a Wiener phase walk with increment variance 2 pi lw / fs."""
    if linewidth_hz < 0:
        raise ValueError("linewidth must be >= 0")
    if linewidth_hz == 0:
        return np.asarray(sig, dtype=complex)
    rng = np.random.default_rng(seed)
    increments = rng.standard_normal(len(sig)) * np.sqrt(
        2 * np.pi * linewidth_hz / sample_rate
    )
    return sig * np.exp(1j * np.cumsum(increments))


def cd_transfer_phase(
    freq: np.ndarray, fiber_km: float, disp_ps_nm_km: float, lambda_nm: float
) -> np.ndarray:
    """Phase of the all-pass dispersion response, -pi D lambda^2 L f^2 / c.

    Positive dispersion delays higher baseband frequencies; the receiver
    inverse is the exact conjugate.
    """
    d_si = disp_ps_nm_km * 1e-6  # ps/nm/km -> s/m^2
    lam = lambda_nm * 1e-9
    return -np.pi * d_si * lam * lam * (fiber_km * 1e3) * freq * freq / SPEED_OF_LIGHT


def apply_cd(
    sig: np.ndarray,
    fiber_km: float,
    disp_ps_nm_km: float,
    lambda_nm: float,
    sample_rate: float,
) -> np.ndarray:
    """Chromatic dispersion as a single full-length frequency-domain multiply."""
    if fiber_km == 0:
        return np.asarray(sig, dtype=complex)
    freq = np.fft.fftfreq(len(sig), 1.0 / sample_rate)
    phase = cd_transfer_phase(freq, fiber_km, disp_ps_nm_km, lambda_nm)
    return np.fft.ifft(np.fft.fft(sig) * np.exp(1j * phase))


def add_ase(
    sig: np.ndarray, osnr_db: float | None, sample_rate: float, seed: int
) -> np.ndarray:
    """Add circular complex Gaussian noise calibrated to the given OSNR.

    Noise power over the simulation bandwidth is P_sig / OSNR scaled by
    sample_rate / 12.5 GHz, i.e. OSNR is referenced to 0.1 nm, single
    polarization, both quadratures counted.
    """
    if osnr_db is None:
        return np.asarray(sig, dtype=complex)
    power = np.mean(np.abs(sig) ** 2)
    if power == 0:
        raise ValueError("cannot calibrate noise against a zero-power signal")
    noise_power = power / 10 ** (osnr_db / 10) * (sample_rate / OSNR_REF_BANDWIDTH)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(len(sig)) + 1j * rng.standard_normal(len(sig))
    return sig + noise * np.sqrt(noise_power / 2)


def quantize(sig: np.ndarray, bits: int | None, full_scale: float | None = None) -> np.ndarray:
    """Uniform mid-rise quantization of I and Q.

    Full scale defaults to 4 sigma of the signal per rail; an explicit
    full_scale pins the code grid independently of the input statistics.
    """
    if bits is None:
        return np.asarray(sig, dtype=complex)
    if not 1 <= bits <= 16:
        raise ValueError("ADC resolution must be in 1..16 bits")
    sig = np.asarray(sig, dtype=complex)
    if full_scale is None:
        sigma = np.sqrt(np.mean(np.abs(sig) ** 2) / 2)
        if sigma == 0:
            return sig
        full_scale = 4.0 * sigma
    step = 2 * full_scale / 2 ** bits

    def rail(x):
        q = step * (np.floor(x / step) + 0.5)
        return np.clip(q, -full_scale + step / 2, full_scale - step / 2)

    return rail(sig.real) + 1j * rail(sig.imag)


def run_channel(sig: np.ndarray, cfg: ChannelConfig, sample_rate: float) -> np.ndarray:
    """Apply delay, CD, CFO, phase noise, ASE, quantization, in that order.

    Phase-noise and ASE seeds derive deterministically from cfg.seed, so a
    run is bit-identical for identical (sig, cfg, sample_rate).
    """
    pn_seed, ase_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    out = apply_delay(sig, cfg.delay_samples)
    out = apply_cd(out, cfg.fiber_km, cfg.disp_ps_nm_km, cfg.lambda_nm, sample_rate)
    out = apply_cfo(out, cfg.cfo_hz, sample_rate)
    out = apply_phase_noise(out, cfg.linewidth_hz, sample_rate, pn_seed)
    out = add_ase(out, cfg.osnr_db, sample_rate, ase_seed)
    return quantize(out, cfg.adc_bits)
