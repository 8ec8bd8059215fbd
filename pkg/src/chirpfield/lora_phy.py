"""Chirp-spread-spectrum waveforms, dechirp demodulation, and detectors.

Conventions used throughout the package:

- one symbol is K = 2**sf complex baseband samples, each of magnitude
  1/sqrt(K), so the symbol energy is exactly 1;
- demodulation multiplies by the conjugate base chirp and takes a plain,
  unnormalized DFT.  A unit-gain channel then puts exactly 1.0 in the
  transmitted symbol's bin, and per-sample noise of variance N0 yields
  per-bin noise of variance N0.  (A library FFT with 1/K or 1/sqrt(K)
  scaling would silently break every SNR calibration in the package.)
- detector ties are broken toward the lowest bin index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Largest symbol length for which the full chirp table is cached; beyond it
# waveforms are synthesized on the fly.
_TABLE_MAX_K = 512

_POPCOUNT_DTYPE = np.int64


@dataclass(frozen=True)
class LoRaParams:
    """Spreading factor and bandwidth of one chirp-spread-spectrum link."""

    sf: int
    bandwidth_hz: float = 125e3

    def __post_init__(self):
        if not 2 <= self.sf <= 12:
            raise ValueError(f"spreading factor must be in [2, 12], got {self.sf}")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def K(self) -> int:
        """Symbol length in samples, 2**sf."""
        return 1 << self.sf

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def symbol_duration_s(self) -> float:
        return self.K * self.sample_period_s


@lru_cache(maxsize=16)
def _base_chirp(sf: int) -> np.ndarray:
    K = 1 << sf
    n = np.arange(K)
    chirp = np.sqrt(1.0 / K) * np.exp(2j * np.pi * (n * n / (2.0 * K) - n / 2.0))
    chirp.flags.writeable = False
    return chirp


@lru_cache(maxsize=8)
def _chirp_table(sf: int) -> np.ndarray:
    """All K modulated symbols as rows; only cached for small K."""
    K = 1 << sf
    n = np.arange(K)
    table = _base_chirp(sf)[None, :] * np.exp(
        2j * np.pi * np.outer(np.arange(K), n) / K
    )
    table.flags.writeable = False
    return table


def modulate(symbol: int, params: LoRaParams) -> np.ndarray:
    """Baseband samples of one symbol; every sample has magnitude 1/sqrt(K)."""
    K = params.K
    if not 0 <= symbol < K:
        raise ValueError(f"symbol must be in [0, {K}), got {symbol}")
    n = np.arange(K)
    return _base_chirp(params.sf) * np.exp(2j * np.pi * symbol * n / K)


def modulate_many(symbols: np.ndarray, params: LoRaParams) -> np.ndarray:
    """Rows of modulated symbols for an integer array of symbol values."""
    symbols = np.asarray(symbols)
    K = params.K
    if symbols.size and (symbols.min() < 0 or symbols.max() >= K):
        raise ValueError("symbol values out of range")
    if K <= _TABLE_MAX_K:
        return _chirp_table(params.sf)[symbols]
    n = np.arange(K)
    return _base_chirp(params.sf)[None, :] * np.exp(
        2j * np.pi * (symbols[:, None] * n[None, :] % K) / K
    )


def dechirp_dft(received: np.ndarray, params: LoRaParams) -> np.ndarray:
    """Dechirp and DFT; returns one complex value per candidate symbol bin.

    Accepts a single length-K vector or a batch with symbols on the last
    axis.  The DFT is a plain sum (no normalization), see module docstring.
    """
    received = np.asarray(received)
    if received.shape[-1] != params.K:
        raise ValueError(
            f"expected {params.K} samples on the last axis, got {received.shape[-1]}"
        )
    return np.fft.fft(received * np.conj(_base_chirp(params.sf)), axis=-1)


def dechirp_dft_direct(received: np.ndarray, params: LoRaParams) -> np.ndarray:
    """Direct-sum DFT of the dechirped signal; slow reference for dechirp_dft."""
    received = np.asarray(received)
    if received.shape[-1] != params.K:
        raise ValueError("length mismatch")
    K = params.K
    n = np.arange(K)
    twiddle = np.exp(-2j * np.pi * np.outer(n, n) / K)
    return (received * np.conj(_base_chirp(params.sf))) @ twiddle


def detect_noncoherent(bins: np.ndarray):
    """Index of the largest bin magnitude (lowest index wins ties)."""
    bins = np.asarray(bins)
    idx = np.argmax(np.abs(bins), axis=-1)
    return int(idx) if np.ndim(idx) == 0 else idx


def detect_coherent(bins: np.ndarray, compensation_phase):
    """Index of the largest real part after rotating by the compensation phase.

    The compensation phase is the negated target-channel phase (perfect
    estimation).  `compensation_phase` broadcasts against the batch axes.
    """
    bins = np.asarray(bins)
    phase = np.exp(1j * np.asarray(compensation_phase, dtype=float))
    idx = np.argmax(np.real(bins * phase[..., None]), axis=-1)
    return int(idx) if np.ndim(idx) == 0 else idx


def count_bit_errors(sent: int, detected: int, sf: int) -> int:
    """Hamming distance between the sf-bit representations of two symbols."""
    K = 1 << sf
    if not (0 <= sent < K and 0 <= detected < K):
        raise ValueError("symbols out of range for the given spreading factor")
    return (sent ^ detected).bit_count()


def count_bit_errors_many(sent: np.ndarray, detected: np.ndarray, sf: int) -> np.ndarray:
    """Vectorized count_bit_errors for integer arrays."""
    sent = np.asarray(sent, dtype=_POPCOUNT_DTYPE)
    detected = np.asarray(detected, dtype=_POPCOUNT_DTYPE)
    K = 1 << sf
    if sent.size and (
        sent.min() < 0 or sent.max() >= K or detected.min() < 0 or detected.max() >= K
    ):
        raise ValueError("symbols out of range for the given spreading factor")
    return np.bitwise_count(np.bitwise_xor(sent, detected)).astype(np.int64)
