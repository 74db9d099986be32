"""Sequence and preamble construction against closed-form and brute-force oracles."""

import cmath
import math

import numpy as np
import pytest

from cazacsync.sequences import (
    CazacParams,
    PnSequence,
    build_four_part_preamble,
    build_repeated_preamble,
    build_training_symbol,
    cazac_sequence,
    occupied_bins,
    periodic_autocorrelation,
    pn_sequence,
)


def brute_force_autocorrelation(c, tau):
    """Independent elementwise oracle for the cyclic autocorrelation."""
    total = 0j
    for m in range(len(c)):
        total += c[m] * np.conj(c[(m + tau) % len(c)])
    return total


class TestCazacSequence:
    def test_first_element_is_one(self):
        assert cazac_sequence(CazacParams(4, 3))[0] == pytest.approx(1 + 0j)

    def test_direct_evaluation_matches(self):
        """Element m equals exp(j pi r m^2 / L), checked against cmath."""
        seq = cazac_sequence(CazacParams(4, 3))
        assert seq[2] == pytest.approx(cmath.exp(1j * cmath.pi * 3 * 4 / 4))
        assert seq[2] == pytest.approx(-1 + 0j)

    @pytest.mark.parametrize("length,root", [(8, 3), (206, 205), (256, 255), (103, 102)])
    def test_unit_magnitude(self, length, root):
        seq = cazac_sequence(CazacParams(length, root))
        np.testing.assert_allclose(np.abs(seq), 1.0, atol=1e-12)

    @pytest.mark.parametrize("length,root", [(8, 3), (206, 205), (256, 255), (512, 511), (103, 102)])
    def test_zero_autocorrelation_all_lags(self, length, root):
        """Exhaustive brute-force check over every nonzero lag."""
        seq = cazac_sequence(CazacParams(length, root))
        assert periodic_autocorrelation(seq, 0) == pytest.approx(length)
        worst = max(abs(periodic_autocorrelation(seq, tau)) for tau in range(1, length))
        assert worst < 1e-7 * length

    def test_matches_brute_force_loop(self):
        seq = cazac_sequence(CazacParams(8, 3))
        for tau in range(8):
            assert periodic_autocorrelation(seq, tau) == pytest.approx(
                brute_force_autocorrelation(seq, tau), abs=1e-12
            )

    @pytest.mark.parametrize(
        "length,root", [(4, 2), (6, 3), (206, 2), (1, 1), (8, 0), (7, 3)]
    )
    def test_invalid_params_rejected(self, length, root):
        with pytest.raises(ValueError):
            CazacParams(length, root)

    def test_coprime_roots_accepted(self):
        for root in (1, 3, 205):
            assert math.gcd(root, 206) == 1
            CazacParams(206, root)

    def test_autocorrelation_lag_bounds(self):
        seq = cazac_sequence(CazacParams(8, 3))
        with pytest.raises(ValueError):
            periodic_autocorrelation(seq, 8)


class TestPnSequence:
    def test_deterministic(self):
        a = pn_sequence(8, seed=5)
        b = pn_sequence(8, seed=5)
        np.testing.assert_array_equal(a.values, b.values)

    def test_binary_alphabet(self):
        values = pn_sequence(64, seed=1).values
        assert set(np.unique(values)) <= {-1.0, 1.0}

    def test_balance_bound(self):
        """M=256, seed=1: imbalance within 0.2 M = 52 (rounded up)."""
        values = pn_sequence(256, seed=1).values
        assert abs(values.sum()) <= 52

    @pytest.mark.parametrize("seed", range(10))
    def test_balance_holds_across_seeds(self, seed):
        values = pn_sequence(256, seed=seed).values
        assert abs(values.sum()) <= 0.2 * 256

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            pn_sequence(1, seed=0)

    def test_all_equal_rejected(self):
        with pytest.raises(ValueError):
            PnSequence(values=np.ones(16), seed=0)

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            PnSequence(values=np.array([1.0, 0.5, -1.0, 1.0]), seed=0)


class TestOccupiedBins:
    def test_symmetric_band_excludes_dc(self):
        bins = occupied_bins(16, 6)
        assert 0 not in bins
        assert sorted(bins) == [1, 2, 3, 13, 14, 15]

    def test_ascending_physical_frequency(self):
        bins = occupied_bins(16, 6)
        freq_order = [(b if b < 8 else b - 16) for b in bins]
        assert freq_order == sorted(freq_order)

    def test_odd_count_rejected(self):
        with pytest.raises(ValueError):
            occupied_bins(16, 5)


class TestTrainingSymbol:
    def test_reference_dimensions(self, ts, cfg):
        """N=512, N_sc=412, r=205, N_cp=46 gives a 558-sample symbol."""
        assert len(ts.samples) == 558
        assert len(ts.useful) == 512
        assert ts.params.length == 206
        assert ts.params.root == 205

    def test_second_half_is_weighted_copy(self, ts, pn):
        np.testing.assert_allclose(ts.b_half, pn.values * ts.a_half, atol=1e-15)

    def test_halves_equal_magnitude(self, ts):
        np.testing.assert_allclose(np.abs(ts.b_half), np.abs(ts.a_half), atol=1e-15)

    def test_cp_is_tail_copy(self, ts, cfg):
        np.testing.assert_array_equal(ts.cp, ts.useful[-cfg.n_cp:])

    def test_forward_dft_restores_cazac(self, ts, cfg):
        """Round trip: the M-point DFT of a_half equals the CAZAC on its bins."""
        spectrum = np.fft.fft(ts.a_half)
        bins = occupied_bins(cfg.m, 206)
        np.testing.assert_allclose(
            spectrum[bins], cazac_sequence(ts.params), atol=1e-9
        )
        others = np.setdiff1d(np.arange(cfg.m), bins)
        np.testing.assert_allclose(spectrum[others], 0, atol=1e-9)

    def test_parseval(self, ts, cfg):
        """Time energy equals (1/M) spectral energy of the mapped grid."""
        spectral = 206.0  # unit-magnitude CAZAC on 206 bins
        time_energy = np.sum(np.abs(ts.a_half) ** 2)
        assert time_energy == pytest.approx(spectral / cfg.m, rel=1e-9)

    def test_all_ones_pn_rejected(self, cfg):
        with pytest.raises(ValueError):
            bad = PnSequence(values=np.ones(cfg.m), seed=0)
            build_training_symbol(cfg.n, cfg.n_sc, 205, bad, cfg.n_cp)

    def test_pn_length_mismatch_rejected(self, cfg):
        with pytest.raises(ValueError):
            build_training_symbol(cfg.n, cfg.n_sc, 205, pn_sequence(100, 0), cfg.n_cp)

    def test_invalid_root_propagates(self, cfg, pn):
        with pytest.raises(ValueError):
            build_training_symbol(cfg.n, cfg.n_sc, 2, pn, cfg.n_cp)  # gcd(2,206)=2


class TestBaselinePreambles:
    def test_repeated_halves_identical(self, cfg):
        pre = build_repeated_preamble(cfg.n, cfg.n_sc, 205, cfg.n_cp)
        half = cfg.m
        np.testing.assert_allclose(pre.useful[:half], pre.useful[half:], atol=1e-15)
        assert len(pre.samples) == cfg.symbol_len

    def test_four_part_sign_pattern(self, cfg):
        pre = build_four_part_preamble(cfg.n, cfg.n_sc, cfg.n_cp)
        quarter = cfg.n // 4
        seg = pre.useful[:quarter]
        np.testing.assert_allclose(pre.useful[quarter:2 * quarter], seg, atol=1e-15)
        np.testing.assert_allclose(pre.useful[2 * quarter:3 * quarter], -seg, atol=1e-15)
        np.testing.assert_allclose(pre.useful[3 * quarter:], -seg, atol=1e-15)
