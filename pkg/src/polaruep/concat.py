"""
Repetition-polar concatenation for unequal error protection.

One critical bit is repeated ``k_rep`` times over the most reliable
information channels of a polar code; the remaining ``K - 1`` payload bits
fill the other information channels.  The receiver runs SC decoding and then
decodes the repetition code from the per-position soft values (``soft``,
``scaled_soft``) or hard decisions (``hard``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .polar import (
    PolarCode,
    _as_bits,
    construct_code,
    encode,
    sc_decode,
    soft_reencode,
    systematic_extract,
)

REP_MODES = ("soft", "scaled_soft", "hard")


def select_crit_channels(code: PolarCode, k_rep: int) -> np.ndarray:
    """Sorted indices of the ``k_rep`` most reliable information channels."""
    k_rep = int(k_rep)
    if k_rep < 1 or k_rep % 2 == 0:
        raise ValueError(f"k_rep must be a positive odd integer, got {k_rep}")
    if k_rep > code.K:
        raise ValueError(f"k_rep={k_rep} exceeds the {code.K} information channels")
    return np.sort(code.most_reliable_info(k_rep))


@dataclass(frozen=True, eq=False)
class ConcatScheme:
    code: PolarCode
    k_rep: int
    rep_mode: str = "soft"
    scale_factors: np.ndarray | None = None
    crit_set: np.ndarray = field(init=False)
    noncrit_set: np.ndarray = field(init=False, repr=False)
    crit_pos: np.ndarray = field(init=False, repr=False)
    noncrit_pos: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.rep_mode not in REP_MODES:
            raise ValueError(f"rep_mode must be one of {REP_MODES}, got {self.rep_mode!r}")
        crit = select_crit_channels(self.code, self.k_rep)
        info = self.code.info_set
        crit_pos = np.searchsorted(info, crit)
        noncrit_pos = np.setdiff1d(np.arange(info.size), crit_pos)
        values = {"crit_set": crit, "noncrit_set": info[noncrit_pos],
                  "crit_pos": crit_pos, "noncrit_pos": noncrit_pos}
        if self.rep_mode == "scaled_soft":
            if self.scale_factors is None:
                raise ValueError("scaled_soft mode needs scale_factors")
            scales = np.asarray(self.scale_factors, dtype=float)
            if scales.shape != (self.k_rep,):
                raise ValueError(f"need {self.k_rep} scale factors, got {scales.shape}")
            if not (scales > 0).all():
                raise ValueError("scale factors must be positive")
            values["scale_factors"] = scales
        for name, value in values.items():
            if value is not None:
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def N(self) -> int:
        return self.code.N

    @property
    def K(self) -> int:
        """Effective information bits per codeword (critical bit included)."""
        return self.code.K - self.k_rep + 1

    @property
    def rate(self) -> float:
        """Rate of the underlying polar code."""
        return self.code.K / self.code.N

    @property
    def r_inf(self) -> float:
        return self.K / self.code.N

    @property
    def systematic(self) -> bool:
        return self.code.systematic

    def with_mode(self, rep_mode: str, scale_factors=None) -> "ConcatScheme":
        return replace(self, rep_mode=rep_mode, scale_factors=scale_factors)

    def with_info_scales(self, info_means) -> "ConcatScheme":
        """Switch to ``scaled_soft`` using a vector indexed like ``code.info_set``."""
        info_means = np.asarray(info_means, dtype=float)
        if info_means.shape != (self.code.K,):
            raise ValueError(f"need {self.code.K} means, got {info_means.shape}")
        return self.with_mode("scaled_soft", info_means[self.crit_pos])

    def describe(self) -> dict:
        return {
            "N": self.N,
            "r_inf": self.r_inf,
            "k_rep": self.k_rep,
            "systematic": self.systematic,
            "rep_mode": self.rep_mode,
            "design_snr_db": self.code.design_snr_db,
            "construction": self.code.method,
        }


def make_scheme(n: int, r_inf: float, k_rep: int, *, systematic: bool = False,
                rep_mode: str = "soft", design_snr_db: float = 0.0,
                scale_factors=None, method: str = "ga") -> ConcatScheme:
    """Build the polar code of rate ``(K - 1 + k_rep) / N`` and wrap it."""
    N = 1 << n
    K = r_inf * N
    if abs(K - round(K)) > 1e-9 or round(K) < 1:
        raise ValueError(f"r_inf * N must be a positive integer, got {K}")
    K = int(round(K))
    k_total = K - 1 + int(k_rep)
    if k_total > N:
        raise ValueError(f"K - 1 + k_rep = {k_total} exceeds N = {N}")
    code = construct_code(n, k_total, design_snr_db, systematic=systematic, method=method)
    return ConcatScheme(code, int(k_rep), rep_mode, scale_factors)


def polar_payload(scheme: ConcatScheme, b_crit, payload) -> np.ndarray:
    """Bits carried by ``code.info_set``, in ascending channel order."""
    b_crit = _as_bits(b_crit)
    payload = _as_bits(payload)
    if payload.shape[-1] != scheme.K - 1:
        raise ValueError(f"payload must have {scheme.K - 1} bits, got {payload.shape[-1]}")
    if b_crit.shape != payload.shape[:-1]:
        raise ValueError("b_crit and payload batch shapes differ")
    bits = np.empty(payload.shape[:-1] + (scheme.code.K,), dtype=np.uint8)
    bits[..., scheme.crit_pos] = b_crit[..., None]
    bits[..., scheme.noncrit_pos] = payload
    return bits


def encode_concat(scheme: ConcatScheme, b_crit, payload) -> np.ndarray:
    return encode(scheme.code, polar_payload(scheme, b_crit, payload))


def decode_rep_soft(crit_llrs) -> np.ndarray:
    """0 when the LLRs sum to a non-negative value, else 1 (along the last axis)."""
    return (np.sum(crit_llrs, axis=-1) < 0).astype(np.uint8)


def decode_rep_scaled(crit_llrs, scale_factors) -> np.ndarray:
    scale_factors = np.asarray(scale_factors, dtype=float)
    if not (scale_factors > 0).all():
        raise ValueError("scale factors must be positive")
    crit_llrs = np.asarray(crit_llrs, dtype=float)
    if crit_llrs.shape[-1] != scale_factors.shape[-1]:
        raise ValueError("LLR and scale-factor lengths differ")
    return decode_rep_soft(crit_llrs / scale_factors)


def decode_rep_hard(crit_bits) -> np.ndarray:
    """Majority vote along the last axis; the length must be odd."""
    crit_bits = _as_bits(crit_bits)
    k = crit_bits.shape[-1]
    if k % 2 == 0:
        raise ValueError(f"majority vote needs an odd number of bits, got {k}")
    return (2 * crit_bits.sum(axis=-1, dtype=np.int64) > k).astype(np.uint8)


@dataclass
class ConcatDecision:
    """Receiver output for one or many frames.

    ``bits`` and ``soft`` are indexed like ``code.info_set``: u-domain for
    non-systematic codes, codeword domain for systematic ones.  For
    systematic codes decoded without ``with_soft``, ``soft`` is only filled
    at the critical positions (zero elsewhere), or ``None`` in hard mode.
    """

    b_crit: np.ndarray
    payload: np.ndarray
    bits: np.ndarray
    soft: np.ndarray | None


def decode_concat(scheme: ConcatScheme, channel_llrs, *, with_soft: bool = False,
                  check_node: str = "exact") -> ConcatDecision:
    code = scheme.code
    u_hat, dec = sc_decode(code, channel_llrs, check_node=check_node)
    if code.systematic:
        bits = systematic_extract(code, u_hat)
        if with_soft:
            soft = soft_reencode(code, dec)[..., code.info_set]
        elif scheme.rep_mode != "hard":
            # the repetition decoder only reads the critical positions
            soft = np.zeros(bits.shape)
            soft[..., scheme.crit_pos] = soft_reencode(code, dec, scheme.crit_set)
        else:
            soft = None
    else:
        bits = u_hat[..., code.info_set]
        soft = dec[..., code.info_set]
    if scheme.rep_mode == "hard":
        b_crit = decode_rep_hard(bits[..., scheme.crit_pos])
    elif scheme.rep_mode == "soft":
        b_crit = decode_rep_soft(soft[..., scheme.crit_pos])
    else:
        b_crit = decode_rep_scaled(soft[..., scheme.crit_pos], scheme.scale_factors)
    return ConcatDecision(b_crit, bits[..., scheme.noncrit_pos], bits, soft)
