"""BPSK over AWGN: modulation, noise, channel LLRs and SNR conversions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polar import LLR_CLAMP


def ebn0_to_esn0(eb_n0_db: float, rate: float) -> float:
    _check_rate(rate)
    return eb_n0_db + 10.0 * np.log10(rate)


def esn0_to_sigma(es_n0_db: float) -> float:
    """Per-dimension noise standard deviation for unit-energy BPSK."""
    return float(np.sqrt(1.0 / (2.0 * 10.0 ** (es_n0_db / 10.0))))


def ebn0_to_sigma(eb_n0_db: float, rate: float) -> float:
    """Noise standard deviation for Eb/N0 ``eb_n0_db`` at ``rate`` bits per symbol."""
    _check_rate(rate)
    return float(np.sqrt(1.0 / (2.0 * rate * 10.0 ** (eb_n0_db / 10.0))))


def _check_rate(rate):
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")


@dataclass(frozen=True)
class ChannelParams:
    sigma: float
    es_n0_db: float
    eb_n0_db: float
    rate_for_eb: float

    @classmethod
    def from_ebn0(cls, eb_n0_db: float, rate: float) -> "ChannelParams":
        return cls(ebn0_to_sigma(eb_n0_db, rate), ebn0_to_esn0(eb_n0_db, rate),
                   float(eb_n0_db), float(rate))

    @classmethod
    def from_esn0(cls, es_n0_db: float, rate: float) -> "ChannelParams":
        _check_rate(rate)
        return cls(esn0_to_sigma(es_n0_db), float(es_n0_db),
                   es_n0_db - 10.0 * np.log10(rate), float(rate))


def bpsk_modulate(bits) -> np.ndarray:
    """Map 0 -> +1 and 1 -> -1."""
    bits = np.asarray(bits)
    return 1.0 - 2.0 * bits.astype(float)


def awgn_transmit(symbols, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    symbols = np.asarray(symbols, dtype=float)
    return symbols + sigma * rng.standard_normal(symbols.shape)


def channel_llr(y, sigma: float) -> np.ndarray:
    """``2 y / sigma^2``, clamped to the decoder's LLR range."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    y = np.asarray(y, dtype=float)
    return np.clip(2.0 * y / sigma ** 2, -LLR_CLAMP, LLR_CLAMP)
