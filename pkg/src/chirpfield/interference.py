"""Misaligned same-SF interferer frames and their cross-correlation bounds.

An interfering transmitter that is not symbol-synchronized with the target
contributes two partial symbols per target-symbol window: `i1` for the
first `tau` samples and `i2` for the rest.  After dechirping, the
interferer leaks into every bin; the leakage decomposes into two geometric
partial sums whose magnitudes follow Dirichlet-kernel (sine-ratio) laws.

The analysis works with a triangle-inequality upper bound `chi` on the
leaked magnitude, concentrated at its peak bin and parameterized by the
symbol difference I = i2 - i1 and the offset tau.  The Monte Carlo
simulator never touches these bounds; it runs the exact frames through the
demodulator, which keeps the two routes independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lora_phy import LoRaParams, modulate, modulate_many


@dataclass(frozen=True)
class InterfererState:
    """Two interfering symbols and the integer sample offset between them."""

    i1: int
    i2: int
    tau: int


def _check_state(state: InterfererState, params: LoRaParams) -> None:
    K = params.K
    if not (0 <= state.i1 < K and 0 <= state.i2 < K):
        raise ValueError("interferer symbols out of range")
    if not 0 <= state.tau <= K // 2:
        raise ValueError(f"offset must be in [0, {K // 2}], got {state.tau}")


def build_interferer_frame(state: InterfererState, params: LoRaParams) -> np.ndarray:
    """Samples of the misaligned interferer over one target-symbol window."""
    _check_state(state, params)
    frame = modulate(state.i2, params).copy()
    if state.tau:
        frame[: state.tau] = modulate(state.i1, params)[: state.tau]
    return frame


def build_interferer_frames(
    i1: np.ndarray, i2: np.ndarray, tau: np.ndarray, params: LoRaParams
) -> np.ndarray:
    """Batch of interferer frames; offsets may span the full symbol here."""
    tau = np.asarray(tau)
    if tau.size and (tau.min() < 0 or tau.max() >= params.K):
        raise ValueError("offsets out of range")
    n = np.arange(params.K)
    return np.where(
        n[None, :] < tau[:, None],
        modulate_many(np.asarray(i1), params),
        modulate_many(np.asarray(i2), params),
    )


def psi_partial_sums(
    bin_index: int, state: InterfererState, params: LoRaParams
) -> tuple[complex, complex]:
    """The two geometric partial sums of the interferer's leakage into a bin.

    Computed by explicit summation; chi_bound evaluates the matching
    closed-form sine-ratio magnitudes, so the two can cross-check each
    other.
    """
    K = params.K
    if not 0 <= bin_index < K:
        raise ValueError("bin index out of range")
    _check_state(state, params)
    head = np.arange(state.tau)
    tail = np.arange(state.tau, K)
    first = np.exp(2j * np.pi * head * (bin_index - state.i1) / K).sum() / K
    second = np.exp(2j * np.pi * tail * (bin_index - state.i2) / K).sum() / K
    return complex(first), complex(second)


def _sine_ratio_mag(k: int, length: int, K: int) -> float:
    """|sin(pi*k*length/K) / sin(pi*k/K)|, with its limit `length` at k = 0 mod K."""
    if k % K == 0:
        return float(length)
    return abs(np.sin(np.pi * k * length / K) / np.sin(np.pi * k / K))


def chi_bound(bin_index: int, state: InterfererState, params: LoRaParams) -> float:
    """Triangle-inequality upper bound on the leaked magnitude at one bin."""
    K = params.K
    if not 0 <= bin_index < K:
        raise ValueError("bin index out of range")
    _check_state(state, params)
    d1 = _sine_ratio_mag(bin_index - state.i1, state.tau, K)
    d2 = _sine_ratio_mag(bin_index - state.i2, K - state.tau, K)
    return (d1 + d2) / K


def chi_bound_all_bins(state: InterfererState, params: LoRaParams) -> np.ndarray:
    """chi_bound evaluated at every bin at once."""
    _check_state(state, params)
    K = params.K
    bins = np.arange(K)

    def ratios(center: int, length: int) -> np.ndarray:
        k = bins - center
        num = np.sin(np.pi * k * length / K)
        den = np.sin(np.pi * k / K)
        out = np.abs(np.divide(num, den, out=np.zeros_like(num), where=den != 0))
        out[k % K == 0] = length
        return out

    return (ratios(state.i1, state.tau) + ratios(state.i2, K - state.tau)) / K


def chi_of_I(shift: int, tau: int, params: LoRaParams) -> float:
    """Peak-bin bound as a function of the symbol difference I = i2 - i1.

    Evaluated at the dominant bin (the one carrying the longer of the two
    partial symbols), where the second sine ratio sits at its maximum
    K - tau.
    """
    K = params.K
    if not 0 <= shift < K:
        raise ValueError("symbol difference out of range")
    if not 0 <= tau <= K // 2:
        raise ValueError(f"offset must be in [0, {K // 2}], got {tau}")
    return (_sine_ratio_mag(shift, tau, K) + K - tau) / K


@lru_cache(maxsize=8)
def chi_of_I_table(params: LoRaParams) -> np.ndarray:
    """chi_of_I on the full (tau, I) grid; shape (K/2 + 1, K), read-only."""
    K = params.K
    taus = np.arange(K // 2 + 1)
    shifts = np.arange(K)
    T, S = np.meshgrid(taus, shifts, indexing="ij")
    num = np.sin(np.pi * S * T / K)
    den = np.sin(np.pi * S / K)
    ratio = np.where(
        S == 0,
        T.astype(float),
        np.abs(np.divide(num, den, out=np.zeros_like(num, dtype=float), where=den != 0)),
    )
    table = (ratio + (K - T)) / K
    table.flags.writeable = False
    return table
