"""Receiver chain: equalizer accuracy, phase tracking, demodulation."""

import numpy as np
import pytest

from cazacsync.channel import ChannelConfig, apply_cd, run_channel
from cazacsync.frame import FrameConfig, assemble_frame, random_payload
from cazacsync.rx import (
    cd_equalize_overlap_add,
    demodulate_and_count,
    estimate_channel,
    min_overlap,
    receive_frame,
    rf_pilot_cpe,
)

from conftest import delayed_buffer

FS = 40e9


@pytest.fixture(scope="module")
def band_limited():
    """In-band test signal occupying the OFDM band."""
    rng = np.random.default_rng(3)
    n = 40000
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    spectrum = np.fft.fft(x)
    freq = np.fft.fftfreq(n, 1 / FS)
    spectrum[np.abs(freq) > 16.1e9] = 0
    return np.fft.ifft(spectrum)


class TestOverlapAdd:
    def test_zero_km_identity(self, band_limited):
        np.testing.assert_array_equal(
            cd_equalize_overlap_add(band_limited, 0.0), band_limited
        )

    def test_roundtrip_800km(self, band_limited):
        """Dispersion then equalizer restores the interior to 1e-6."""
        dispersed = apply_cd(band_limited, 800, 16.0, 1550.0, FS)
        restored = cd_equalize_overlap_add(dispersed, 800)
        rms = np.sqrt(np.mean(np.abs(band_limited) ** 2))
        interior = slice(2100, len(band_limited) - 2100)
        err = np.max(np.abs(restored[interior] - band_limited[interior])) / rms
        assert err < 1e-6

    def test_matches_single_shot_inverse(self, band_limited):
        dispersed = apply_cd(band_limited, 800, 16.0, 1550.0, FS)
        single = apply_cd(dispersed, -800, 16.0, 1550.0, FS)
        blockwise = cd_equalize_overlap_add(dispersed, 800)
        rms = np.sqrt(np.mean(np.abs(band_limited) ** 2))
        interior = slice(2100, len(band_limited) - 2100)
        err = np.max(np.abs(blockwise[interior] - single[interior])) / rms
        assert err < 1e-6

    def test_block_size_independence(self, band_limited):
        dispersed = apply_cd(band_limited, 800, 16.0, 1550.0, FS)
        a = cd_equalize_overlap_add(dispersed, 800, block_size=4096)
        b = cd_equalize_overlap_add(dispersed, 800, block_size=16384)
        rms = np.sqrt(np.mean(np.abs(band_limited) ** 2))
        interior = slice(2100, len(band_limited) - 2100)
        assert np.max(np.abs(a[interior] - b[interior])) / rms < 1e-6

    def test_overlap_too_small_rejected(self, band_limited):
        needed = min_overlap(800, 16.0, 1550.0, FS)
        with pytest.raises(ValueError):
            cd_equalize_overlap_add(band_limited, 800, overlap=needed // 2)

    def test_non_power_of_two_block_rejected(self, band_limited):
        with pytest.raises(ValueError):
            cd_equalize_overlap_add(band_limited, 800, block_size=5000)

    def test_min_overlap_scales_with_length(self):
        assert min_overlap(1600, 16.0, 1550.0, FS) == 2 * min_overlap(800, 16.0, 1550.0, FS)


class TestEstimateChannel:
    def test_identity_channel(self, cfg):
        grid = np.arange(1, cfg.n + 1).astype(complex)
        est = estimate_channel(grid, grid, cfg.data_bins)
        np.testing.assert_allclose(est.taps, 1.0, atol=1e-12)

    def test_constant_phase(self, cfg):
        grid = np.ones(cfg.n, dtype=complex)
        est = estimate_channel(grid * np.exp(0.7j), grid, cfg.data_bins)
        np.testing.assert_allclose(np.angle(est.taps), 0.7, atol=1e-12)

    def test_random_taps_recovered(self, cfg):
        rng = np.random.default_rng(1)
        ref = np.ones(cfg.n, dtype=complex)
        taps_true = rng.standard_normal(cfg.n) + 1j * rng.standard_normal(cfg.n)
        est = estimate_channel(ref * taps_true, ref, cfg.data_bins)
        np.testing.assert_allclose(est.taps, taps_true[cfg.data_bins], atol=1e-9)

    def test_zero_reference_rejected(self, cfg):
        with pytest.raises(ValueError):
            estimate_channel(np.ones(cfg.n, complex), np.zeros(cfg.n, complex), cfg.data_bins)


class TestRfPilotCpe:
    def test_constant_pilot_removed_up_to_phase(self):
        """Pilot-only input: output equals input up to one constant phase."""
        pilot = np.full(4096, 0.2 * np.exp(0.4j))
        out = rf_pilot_cpe(pilot, 30e6, FS)
        ratio = out / pilot
        np.testing.assert_allclose(ratio, ratio[0], atol=1e-6)

    def test_missing_pilot_rejected(self, short_frame):
        with pytest.raises(ValueError):
            rf_pilot_cpe(short_frame.samples, 30e6, FS)

    def test_wiener_phase_noise_suppressed(self, ts):
        """Phase error variance drops >= 10x, averaged over realizations.

        A single short window's walk variance is itself random, so the
        ratio is taken on variances averaged across seeds of a long
        capture (150 data symbols).
        """
        pilot_cfg = FrameConfig(rf_pilot_psr_db=-12.0)
        payload = random_payload(pilot_cfg, 150, seed=2)
        frame = assemble_frame(ts, pilot_cfg, payload)
        uncomp, resid = [], []
        for seed in range(3):
            chan = ChannelConfig(linewidth_hz=1e5, seed=seed)
            rx = run_channel(frame.samples, chan, FS)
            phi = np.angle(rx / frame.samples)
            uncomp.append(np.var(phi - phi.mean()))
            err = np.angle(rf_pilot_cpe(rx, 30e6, FS) / frame.samples)
            resid.append(np.var(err - err.mean()))
        assert np.mean(uncomp) / np.mean(resid) >= 10


class TestDemodulate:
    def test_perfect_channel_zero_ber(self, cfg, ts, short_frame):
        sig = delayed_buffer(short_frame.samples, 0, tail=10)
        report = demodulate_and_count(sig, cfg.n_cp, short_frame, cfg)
        assert report.bit_errors == 0
        assert report.bits_total == 10 * cfg.n_sc * 4
        assert report.ber == 0.0

    @pytest.mark.parametrize("slip", [1, 2, 5])
    def test_early_window_within_cp_is_benign(self, cfg, ts, short_frame, slip):
        """A timing estimate a few samples early is absorbed by the one-tap."""
        sig = delayed_buffer(short_frame.samples, 0, tail=10)
        report = demodulate_and_count(sig, cfg.n_cp - slip, short_frame, cfg)
        assert report.ber == 0.0

    def test_short_signal_rejected(self, cfg, short_frame):
        with pytest.raises(ValueError):
            demodulate_and_count(short_frame.samples[:2000], cfg.n_cp, short_frame, cfg)

    def test_evm_collection(self, cfg, short_frame):
        sig = delayed_buffer(short_frame.samples, 0, tail=10)
        report = demodulate_and_count(sig, cfg.n_cp, short_frame, cfg, collect_evm=True)
        assert len(report.per_symbol_evm) == 10
        assert np.all(report.per_symbol_evm < 1e-18)

    def test_constant_channel_phase_removed(self, cfg, short_frame):
        """The one-tap equalizer absorbs any constant channel rotation."""
        sig = delayed_buffer(short_frame.samples, 0, tail=10) * np.exp(1.1j)
        report = demodulate_and_count(sig, cfg.n_cp, short_frame, cfg, collect_evm=True)
        assert report.ber == 0.0
        assert np.all(np.sqrt(report.per_symbol_evm) < 1e-6)


class TestReceiveFrame:
    def test_all_off_chain_exact(self, cfg, ts):
        """TX -> identity channel -> RX recovers the payload exactly."""
        payload = random_payload(cfg, 10, seed=4)
        frame = assemble_frame(ts, cfg, payload)
        raw = delayed_buffer(frame.samples, 300, tail=300)
        result = receive_frame(raw, ts, frame, cfg)
        assert result.report.ber == 0.0
        assert result.final.d_hat == 300 + cfg.n_cp

    def test_full_impairments_noiseless(self, cfg, ts):
        """CD 800 km + CFO 5 GHz, no noise: exact recovery, zero final bias."""
        payload = random_payload(cfg, 10, seed=4)
        frame = assemble_frame(ts, cfg, payload)
        buf = delayed_buffer(frame.samples, 1024, tail=1024)
        chan = ChannelConfig(delay_samples=100, cfo_hz=5e9, fiber_km=800.0, seed=0)
        raw = run_channel(buf, chan, cfg.sample_rate)
        result = receive_frame(raw, ts, frame, cfg, fiber_km=800.0)
        d_true = 1024 + 100 + cfg.n_cp
        assert result.report.ber == 0.0
        assert result.final.d_hat == d_true
        assert abs(result.first_pass.d_hat - d_true) > 15  # coupling shift, reported
        assert abs(result.cfo_hz_hat - 5e9) < 1e5

    def test_negative_cfo_with_dispersion(self, cfg, ts):
        payload = random_payload(cfg, 10, seed=4)
        frame = assemble_frame(ts, cfg, payload)
        buf = delayed_buffer(frame.samples, 1024, tail=1024)
        chan = ChannelConfig(delay_samples=100, cfo_hz=-5e9, fiber_km=800.0, seed=0)
        raw = run_channel(buf, chan, cfg.sample_rate)
        result = receive_frame(raw, ts, frame, cfg, fiber_km=800.0)
        assert result.report.ber == 0.0
        assert result.final.d_hat == 1024 + 100 + cfg.n_cp
