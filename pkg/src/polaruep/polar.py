"""
Polar code construction, encoding and successive-cancellation decoding.

All bit vectors are ``uint8`` arrays and all LLRs are ``float64`` arrays in
the natural-log domain, positive values favouring bit 0.  Every operation
accepts either a single vector of length ``N`` or a batch with arbitrary
leading axes, so Monte-Carlo code can push thousands of frames through one
call.

The generator is ``F^{(x)n}`` with ``F = [[1, 0], [1, 1]]`` and *no*
bit-reversal permutation; index ``i`` always refers to the natural
``u``-domain position.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

LLR_CLAMP = 500.0

CONSTRUCTION_METHODS = ("ga", "bhattacharyya")


def _check_pow2(length: int) -> int:
    if length < 1 or length & (length - 1):
        raise ValueError(f"length must be a power of two, got {length}")
    return length.bit_length() - 1


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.dtype != np.uint8:
        if arr.size and ((arr != 0) & (arr != 1)).any():
            raise ValueError("bit vectors may only contain 0 and 1")
        return arr.astype(np.uint8)
    if arr.size and arr.max() > 1:
        raise ValueError("bit vectors may only contain 0 and 1")
    return arr


# --------------------------------------------------------------------------- code geometry


@dataclass(frozen=True, eq=False)
class PolarCode:
    """Immutable description of a polar code.

    Attributes
    ----------
    n : int
        Code length exponent, ``N = 2**n``.
    info_set : ndarray
        Sorted indices of the non-frozen synthetic channels.
    frozen_set : ndarray
        Sorted indices of the frozen synthetic channels.
    reliability_order : ndarray
        All channel indices, least reliable first.
    design_snr_db : float
        Es/N0 in dB used for construction.
    systematic : bool
        Whether the encoder places the payload verbatim on ``info_set``.
    method : str
        Construction method that produced ``reliability_order``.
    """

    n: int
    info_set: np.ndarray
    frozen_set: np.ndarray
    reliability_order: np.ndarray
    design_snr_db: float = 0.0
    systematic: bool = False
    method: str = "ga"
    frozen_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        N = 1 << self.n
        order = np.asarray(self.reliability_order, dtype=np.int64)
        info = np.sort(np.asarray(self.info_set, dtype=np.int64))
        frozen = np.sort(np.asarray(self.frozen_set, dtype=np.int64))
        if order.shape != (N,) or not np.array_equal(np.sort(order), np.arange(N)):
            raise ValueError("reliability_order must be a permutation of range(N)")
        if info.size + frozen.size != N or np.intersect1d(info, frozen).size:
            raise ValueError("info_set and frozen_set must partition range(N)")
        if not np.array_equal(np.sort(order[N - info.size:]), info):
            raise ValueError("info_set must hold the most reliable channels")
        mask = np.ones(N, dtype=bool)
        mask[info] = False
        for name, value in (("reliability_order", order), ("info_set", info),
                            ("frozen_set", frozen), ("frozen_mask", mask)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        """Number of non-frozen channels."""
        return int(self.info_set.size)

    @property
    def rate(self) -> float:
        return self.K / self.N

    def with_systematic(self, systematic: bool = True) -> "PolarCode":
        return replace(self, systematic=bool(systematic))

    def most_reliable_info(self, count: int) -> np.ndarray:
        """The ``count`` most reliable information channels, most reliable first."""
        if not 0 <= count <= self.K:
            raise ValueError(f"count must lie in [0, {self.K}], got {count}")
        return self.reliability_order[::-1][:count].copy()


# --------------------------------------------------------------------------- construction


def _log_phi(x: float) -> float:
    """Log of the Gaussian-approximation phi function (Chung's fit)."""
    if x <= 0.0:
        return 0.0
    if x < 10.0:
        return -0.4527 * x ** 0.86 + 0.0218
    return 0.5 * np.log(np.pi / x) - x / 4.0 + np.log1p(-10.0 / (7.0 * x))


def _phi_inverse_log(log_y: float) -> float:
    if log_y >= 0.0:
        return 0.0
    hi = 1.0
    while _log_phi(hi) > log_y:
        hi *= 2.0
    return brentq(lambda x: _log_phi(x) - log_y, 0.0, hi, xtol=1e-13, rtol=1e-15)


def ga_mean_llrs(n: int, design_snr_db: float) -> np.ndarray:
    """Mean synthetic-channel LLRs under the Gaussian approximation.

    The channel is BPSK over AWGN at Es/N0 ``design_snr_db``, giving a
    channel-LLR mean of ``4 Es/N0``.  The most significant index bit selects
    the first combination applied to the physical channel (0 = check,
    1 = variable), matching the top-level split of the SC decoder.
    """
    means = np.array([4.0 * 10.0 ** (design_snr_db / 10.0)])
    for _ in range(n):
        check = np.empty_like(means)
        for j, mu in enumerate(means):
            log_p = _log_phi(mu)
            # 1 - (1 - p)^2 = p (2 - p), kept in the log domain
            check[j] = _phi_inverse_log(log_p + np.log(2.0 - np.exp(log_p)))
        means = np.stack([check, 2.0 * means], axis=1).ravel()
    return means


def bhattacharyya_parameters(n: int, z0: float) -> np.ndarray:
    """Exact Bhattacharyya parameters of the synthetic channels of a BEC(z0)."""
    z = np.array([float(z0)])
    for _ in range(n):
        z = np.stack([2.0 * z - z * z, z * z], axis=1).ravel()
    return z


def reliability_order(metric: np.ndarray, higher_is_better: bool = True) -> np.ndarray:
    """Sort channel indices least reliable first.

    Equal metrics rank the lower index as more reliable.
    """
    metric = np.asarray(metric, dtype=float)
    idx = np.arange(metric.size)
    key = metric if higher_is_better else -metric
    return np.lexsort((-idx, key))


def construct_code(n: int, k_total: int, design_snr_db: float = 0.0, *,
                   systematic: bool = False, method: str = "ga") -> PolarCode:
    """Build a polar code with ``k_total`` information channels.

    Parameters
    ----------
    n : int
        Length exponent, ``N = 2**n``.
    k_total : int
        Number of non-frozen channels, ``1 <= k_total <= N``.
    design_snr_db : float
        Design Es/N0 in dB.
    systematic : bool
        Flag carried by the code for the encoder/decoder wrappers.
    method : {"ga", "bhattacharyya"}
        Gaussian-approximation density evolution, or the Bhattacharyya
        recursion on a BEC whose erasure probability equals the AWGN
        Bhattacharyya parameter ``exp(-Es/N0)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    N = 1 << n
    if not 1 <= k_total <= N:
        raise ValueError(f"k_total must lie in [1, {N}], got {k_total}")
    if method == "ga":
        order = reliability_order(ga_mean_llrs(n, design_snr_db))
    elif method == "bhattacharyya":
        z0 = np.exp(-10.0 ** (design_snr_db / 10.0))
        order = reliability_order(bhattacharyya_parameters(n, z0), higher_is_better=False)
    else:
        raise ValueError(f"unknown construction method {method!r}")
    return code_from_order(order, k_total, design_snr_db=design_snr_db,
                           systematic=systematic, method=method)


def code_from_order(order, k_total: int, *, design_snr_db: float = 0.0,
                    systematic: bool = False, method: str = "ga") -> PolarCode:
    order = np.asarray(order, dtype=np.int64)
    n = _check_pow2(order.size)
    if not 1 <= k_total <= order.size:
        raise ValueError(f"k_total must lie in [1, {order.size}], got {k_total}")
    info = np.sort(order[order.size - k_total:])
    frozen = np.sort(order[:order.size - k_total])
    return PolarCode(n, info, frozen, order, float(design_snr_db), bool(systematic), method)


def write_reliability_file(code: PolarCode, path) -> Path:
    """Export the reliability order, least reliable first, one index per line."""
    path = Path(path)
    lines = [
        f"# n={code.n}",
        f"# design_snr_db={code.design_snr_db:g}",
        f"# method={code.method}",
        f"# k_total={code.K}",
    ]
    lines += [str(int(i)) for i in code.reliability_order]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_reliability_file(path, k_total: int | None = None, *,
                          systematic: bool = False) -> PolarCode:
    header = {}
    order = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            header[key.strip()] = value.strip()
        else:
            order.append(int(line))
    if k_total is None:
        k_total = int(header["k_total"])
    return code_from_order(order, k_total,
                           design_snr_db=float(header.get("design_snr_db", 0.0)),
                           systematic=systematic, method=header.get("method", "ga"))


# --------------------------------------------------------------------------- transforms


def polar_transform(u) -> np.ndarray:
    """Compute ``u F^{(x)n}`` over GF(2) along the last axis.

    The transform is its own inverse.
    """
    x = np.array(_as_bits(u), dtype=np.uint8, copy=True)
    if x.ndim == 0:
        raise ValueError("polar_transform needs at least one axis")
    N = x.shape[-1]
    _check_pow2(N)
    lead = x.shape[:-1]
    h = 1
    while h < N:
        v = x.reshape(*lead, N // (2 * h), 2, h)
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def boxplus(a, b) -> np.ndarray:
    """LLR of ``x XOR y`` given independent LLRs ``a`` and ``b``.

    Evaluates ``2 atanh(tanh(a/2) tanh(b/2))`` in a form that stays exact
    for large magnitudes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 0 and b.ndim == 0:
        return boxplus(a[None], b[None])[0]
    abs_a = np.abs(a)
    abs_b = np.abs(b)
    mag = np.minimum(abs_a, abs_b)
    # log(1 + e^-(|a|+|b|)) - log(1 + e^-||a|-|b||), in place
    s = np.add(abs_a, abs_b)
    np.negative(s, out=s)
    np.exp(s, out=s)
    s += 1.0
    d = np.subtract(abs_a, abs_b)
    np.abs(d, out=d)
    np.negative(d, out=d)
    np.exp(d, out=d)
    d += 1.0
    s /= d
    np.log(s, out=s)
    mag += s
    np.maximum(mag, 0.0, out=mag)
    np.negative(mag, out=mag, where=(a < 0) ^ (b < 0))
    return mag


def minsum(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mag = np.minimum(np.abs(a), np.abs(b))
    return np.where((a < 0) ^ (b < 0), -mag, mag)


def _scatter(code: PolarCode, payload) -> np.ndarray:
    payload = _as_bits(payload)
    if payload.shape[-1] != code.K:
        raise ValueError(f"payload must have {code.K} bits, got {payload.shape[-1]}")
    u = np.zeros(payload.shape[:-1] + (code.N,), dtype=np.uint8)
    u[..., code.info_set] = payload
    return u


def encode_nonsystematic(code: PolarCode, payload) -> np.ndarray:
    """Place ``payload`` on the information channels and transform."""
    return polar_transform(_scatter(code, payload))


def encode_systematic(code: PolarCode, payload) -> np.ndarray:
    """Codeword whose bits at ``code.info_set`` equal ``payload``.

    Uses the double-transform construction: transform the scattered
    payload, clear the frozen positions, transform again.
    """
    v = polar_transform(_scatter(code, payload))
    v[..., code.frozen_mask] = 0
    return polar_transform(v)


def encode(code: PolarCode, payload) -> np.ndarray:
    if code.systematic:
        return encode_systematic(code, payload)
    return encode_nonsystematic(code, payload)


def systematic_extract(code: PolarCode, u_hat) -> np.ndarray:
    """Re-encode SC decisions and read the systematic positions."""
    u_hat = _as_bits(u_hat)
    if u_hat.shape[-1] != code.N:
        raise ValueError(f"u_hat must have {code.N} bits, got {u_hat.shape[-1]}")
    return polar_transform(u_hat)[..., code.info_set]


def soft_reencode(code: PolarCode, decision_llrs, positions=None) -> np.ndarray:
    """Push decision LLRs through the encoder butterfly.

    Every XOR becomes a box-plus and every pass-through keeps its LLR.
    Frozen positions are known zeros and enter as ``+LLR_CLAMP`` regardless
    of the LLR the decoder computed for them.

    With ``positions`` only those codeword positions are returned, each
    computed as the box-plus of the inputs ``i`` with ``i & j == j`` (the
    support of column ``j`` of the generator).
    """
    llr = np.array(decision_llrs, dtype=float, copy=True)
    N = llr.shape[-1]
    if N != code.N:
        raise ValueError(f"expected {code.N} LLRs, got {N}")
    llr[..., code.frozen_mask] = LLR_CLAMP
    np.clip(llr, -LLR_CLAMP, LLR_CLAMP, out=llr)
    if positions is not None:
        idx = np.arange(N)
        out = np.empty(llr.shape[:-1] + (len(positions),))
        for k, j in enumerate(positions):
            support = idx[(idx & j) == j]
            acc = llr[..., support[0]]
            for i in support[1:]:
                acc = boxplus(acc, llr[..., i])
            out[..., k] = acc
        return out
    lead = llr.shape[:-1]
    h = 1
    while h < N:
        v = llr.reshape(*lead, N // (2 * h), 2, h)
        v[..., 0, :] = np.clip(boxplus(v[..., 0, :], v[..., 1, :]), -LLR_CLAMP, LLR_CLAMP)
        h *= 2
    return llr


# --------------------------------------------------------------------------- SC decoding


def sc_decode(code: PolarCode, channel_llrs, *, check_node: str = "exact",
              clamp: float = LLR_CLAMP):
    """Successive-cancellation decoding.

    Parameters
    ----------
    code : PolarCode
    channel_llrs : array_like, shape (..., N)
        Channel LLRs, clamped to ``+-clamp`` on entry.
    check_node : {"exact", "minsum"}
        Check-node rule; ``"minsum"`` is an approximation kept for
        experimentation.
    clamp : float
        Magnitude bound applied at every stage.  ``np.inf`` gives the
        unclamped recursion, which is only useful for exactness checks.

    Returns
    -------
    u_hat : ndarray of uint8, shape (..., N)
        Decisions, zero on frozen channels.
    decision_llrs : ndarray of float, shape (..., N)
        Decision LLR of every channel, frozen ones included.
    """
    if check_node == "exact":
        cnode = boxplus
    elif check_node == "minsum":
        cnode = minsum
    else:
        raise ValueError(f"unknown check-node rule {check_node!r}")
    llr = np.asarray(channel_llrs, dtype=float)
    if llr.shape[-1] != code.N:
        raise ValueError(f"expected {code.N} channel LLRs, got {llr.shape[-1]}")
    if not np.isfinite(llr).all():
        raise ValueError("channel LLRs must be finite")
    lead = llr.shape[:-1]
    if not clamp > 0:
        raise ValueError(f"clamp must be positive, got {clamp}")
    flat = np.clip(llr.reshape(-1, code.N), -clamp, clamp)
    u_hat = np.zeros(flat.shape, dtype=np.uint8)
    dec = np.empty(flat.shape, dtype=float)
    frozen = code.frozen_mask.tolist()
    _sc_node(flat, 0, frozen, u_hat, dec, cnode, clamp)
    return u_hat.reshape(lead + (code.N,)), dec.reshape(lead + (code.N,))


def _decide(llr, frozen):
    if frozen:
        return np.zeros(llr.shape, dtype=np.uint8)
    return (llr < 0).astype(np.uint8)


def _sc_node(llr, offset, frozen, u_hat, dec, cnode, clamp):
    """Decode the sub-code rooted at ``offset``; return its partial sums."""
    m = llr.shape[1]
    if m == 2:
        a, b = llr[:, 0], llr[:, 1]
        l0 = np.clip(cnode(a, b), -clamp, clamp)
        u0 = _decide(l0, frozen[offset])
        l1 = np.clip(b + (1.0 - 2.0 * u0) * a, -clamp, clamp)
        u1 = _decide(l1, frozen[offset + 1])
        dec[:, offset] = l0
        dec[:, offset + 1] = l1
        u_hat[:, offset] = u0
        u_hat[:, offset + 1] = u1
        return np.stack([u0 ^ u1, u1], axis=1)
    if m == 1:
        l0 = llr[:, 0]
        dec[:, offset] = l0
        u0 = _decide(l0, frozen[offset])
        u_hat[:, offset] = u0
        return u0[:, None]
    h = m // 2
    a, b = llr[:, :h], llr[:, h:]
    left = _sc_node(np.clip(cnode(a, b), -clamp, clamp),
                    offset, frozen, u_hat, dec, cnode, clamp)
    right = _sc_node(np.clip(b + (1.0 - 2.0 * left) * a, -clamp, clamp),
                     offset + h, frozen, u_hat, dec, cnode, clamp)
    return np.concatenate([left ^ right, right], axis=1)
