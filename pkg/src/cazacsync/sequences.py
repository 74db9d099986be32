"""Constant-amplitude zero-autocorrelation sequences and sync preambles.

Provides the polyphase CAZAC generator, seeded binary PN weight sequences,
and the construction of the synchronization training symbol: two identical
half-symbol waveforms with the second half scrambled sample-by-sample by
the PN weights, plus a cyclic prefix. Also builds the unweighted
repeated-half preamble and the four-part sign-flipped preamble used by the
baseline synchronizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CazacParams:
    """Length and root index of a polyphase CAZAC sequence.

    The zero-autocorrelation guarantee of the quadratic-phase form requires
    gcd(root, length) = 1 and additionally fails when both length and root
    are odd, so that combination is rejected.
    """

    length: int
    root: int

    def __post_init__(self):
        if self.length < 2:
            raise ValueError(f"CAZAC length must be >= 2, got {self.length}")
        if self.root < 1:
            raise ValueError(f"CAZAC root must be >= 1, got {self.root}")
        if math.gcd(self.root, self.length) != 1:
            raise ValueError(
                f"CAZAC root {self.root} is not relative-prime to length {self.length}"
            )
        if self.length % 2 == 1 and self.root % 2 == 1:
            raise ValueError(
                f"CAZAC (length={self.length}, root={self.root}): an odd root with an "
                "odd length breaks the zero-autocorrelation property; use an even root"
            )


@dataclass(frozen=True)
class PnSequence:
    """Binary +-1 weight sequence with its generating seed."""

    values: np.ndarray
    seed: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or len(v) < 2:
            raise ValueError("PN sequence must be a 1-D array of length >= 2")
        if not np.all(np.isin(v, (-1.0, 1.0))):
            raise ValueError("PN sequence elements must be exactly +1 or -1")
        if np.all(v == v[0]):
            raise ValueError("all-equal PN sequence cannot scramble the second half")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TrainingSymbol:
    """Synchronization preamble: halves, PN weights, CP, and parameters."""

    a_half: np.ndarray
    b_half: np.ndarray
    pn: PnSequence
    cp: np.ndarray
    params: CazacParams
    n: int
    _useful: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = self.n // 2
        if len(self.a_half) != m or len(self.b_half) != m or len(self.pn) != m:
            raise ValueError("training symbol halves and PN must have length N/2")
        useful = np.concatenate([self.a_half, self.b_half])
        if len(self.cp) > self.n or not np.allclose(
            self.cp, useful[len(useful) - len(self.cp):], atol=1e-15
        ):
            raise ValueError("CP must copy the tail of the useful symbol")
        object.__setattr__(self, "_useful", useful)

    @property
    def useful(self) -> np.ndarray:
        """The N useful samples [A B] without CP."""
        return self._useful

    @property
    def samples(self) -> np.ndarray:
        """Full transmitted symbol [CP A B]."""
        return np.concatenate([self.cp, self._useful])

    @property
    def n_cp(self) -> int:
        return len(self.cp)


def cazac_sequence(params: CazacParams) -> np.ndarray:
    """Generate the quadratic-phase CAZAC sequence c(m) = exp(j pi r m^2 / L).

    All elements have unit magnitude and the periodic autocorrelation is an
    impulse: L at lag 0 and (numerically) 0 at every other lag.
    """
    m = np.arange(params.length)
    return np.exp(1j * np.pi * params.root * m * m / params.length)


def periodic_autocorrelation(c: np.ndarray, tau: int) -> complex:
    """Cyclic autocorrelation sum_m c(m) conj(c((m + tau) mod L)) at one lag."""
    c = np.asarray(c)
    if not 0 <= tau < len(c):
        raise ValueError(f"lag must be in [0, {len(c)}), got {tau}")
    return complex(np.sum(c * np.conj(np.roll(c, -tau))))


def pn_sequence(m: int, seed: int) -> PnSequence:
    """Draw a balanced +-1 sequence of length m, deterministic in (m, seed).

    Draws are repeated until |sum p(n)| <= 0.2 m so neither sign dominates.
    """
    if m < 2:
        raise ValueError(f"PN length must be >= 2, got {m}")
    rng = np.random.default_rng(seed)
    while True:
        values = rng.integers(0, 2, m) * 2.0 - 1.0
        if abs(values.sum()) <= 0.2 * m:
            return PnSequence(values=values, seed=seed)


def occupied_bins(n_fft: int, n_occupied: int) -> np.ndarray:
    """FFT bin indices of the occupied band, lowest frequency first.

    The band is split evenly around DC: n_occupied/2 bins on each side, DC
    itself and the outer edge bins left as zeros. Returned in ascending
    physical-frequency order, so values can be laid onto the grid in their
    natural order.
    """
    if n_occupied % 2 or n_occupied >= n_fft:
        raise ValueError(
            f"occupied bin count must be even and < n_fft, got {n_occupied}/{n_fft}"
        )
    half = n_occupied // 2
    negative = np.arange(n_fft - half, n_fft)
    positive = np.arange(1, half + 1)
    return np.concatenate([negative, positive])


def _half_symbol(n: int, n_sc: int, root: int) -> tuple[np.ndarray, CazacParams]:
    """M-point IFFT of the length-L CAZAC mapped onto the half-scale band."""
    m = n // 2
    params = CazacParams(length=n_sc // 2, root=root)
    spectrum = np.zeros(m, dtype=complex)
    spectrum[occupied_bins(m, params.length)] = cazac_sequence(params)
    return np.fft.ifft(spectrum), params


def build_training_symbol(
    n: int, n_sc: int, root: int, pn: PnSequence, n_cp: int
) -> TrainingSymbol:
    """Build the weighted preamble TS = [A B] with B(n) = pn(n) A(n), plus CP.

    A is the N/2-point IFFT of a CAZAC of length n_sc/2 placed on the
    occupied half-scale band; the CP copies the last n_cp useful samples.
    """
    if n % 2 or n_sc % 2:
        raise ValueError("IFFT size and subcarrier count must be even")
    if n_sc > n:
        raise ValueError(f"subcarrier count {n_sc} exceeds IFFT size {n}")
    if len(pn) != n // 2:
        raise ValueError(f"PN length {len(pn)} does not match N/2 = {n // 2}")
    if not 0 <= n_cp <= n:
        raise ValueError(f"CP length must be in [0, {n}], got {n_cp}")
    a_half, params = _half_symbol(n, n_sc, root)
    b_half = pn.values * a_half
    useful = np.concatenate([a_half, b_half])
    cp = useful[n - n_cp:] if n_cp else np.zeros(0, dtype=complex)
    return TrainingSymbol(a_half=a_half, b_half=b_half, pn=pn, cp=cp, params=params, n=n)


@dataclass(frozen=True)
class Preamble:
    """Generic baseline preamble: useful samples plus cyclic prefix."""

    useful: np.ndarray
    n_cp: int

    @property
    def samples(self) -> np.ndarray:
        if self.n_cp == 0:
            return self.useful
        return np.concatenate([self.useful[-self.n_cp:], self.useful])


def build_repeated_preamble(n: int, n_sc: int, root: int, n_cp: int) -> Preamble:
    """Two identical unweighted halves [A A]; the repeated-half baseline preamble."""
    a_half, _ = _half_symbol(n, n_sc, root)
    return Preamble(useful=np.concatenate([a_half, a_half]), n_cp=n_cp)


def build_four_part_preamble(n: int, n_sc: int, n_cp: int) -> Preamble:
    """Four quarter-length parts with signs [+ + - -] for the four-part baseline.

    The quarter segment is an N/4-point IFFT of a CAZAC on the quarter-scale
    occupied band; only its constant envelope matters here.
    """
    nq = n // 4
    lq = (n_sc // 4) - ((n_sc // 4) % 2)
    params = CazacParams(length=lq, root=lq - 1)
    spectrum = np.zeros(nq, dtype=complex)
    spectrum[occupied_bins(nq, lq)] = cazac_sequence(params)
    seg = np.fft.ifft(spectrum)
    return Preamble(useful=np.concatenate([seg, seg, -seg, -seg]), n_cp=n_cp)
