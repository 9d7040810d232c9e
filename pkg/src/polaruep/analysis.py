"""
Monte-Carlo trials and the statistics gathered from them.

A :class:`TrialRecord` holds a batch of simulated frames.  Accumulators
(:class:`BerStats`, :class:`CorrelationEstimate`, :class:`HistogramSet`) are
updated from records and merged associatively, so worker-local partial
results can be combined in any grouping.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import awgn_transmit, bpsk_modulate, channel_llr, esn0_to_sigma
from .concat import ConcatScheme, decode_concat, encode_concat, polar_payload
from .polar import LLR_CLAMP

RNG_NAME = "numpy.random.Philox"
CALIBRATION_STREAM = 1


class InsufficientDataError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


def trial_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for the substream identified by ``key``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


# --------------------------------------------------------------------------- per-trial quantities


def error_vector(true_bits, est_bits) -> np.ndarray:
    true_bits = np.asarray(true_bits)
    est_bits = np.asarray(est_bits)
    if true_bits.shape != est_bits.shape:
        raise ValueError(f"shape mismatch: {true_bits.shape} vs {est_bits.shape}")
    return (true_bits != est_bits).astype(np.uint8)


def signed_llr(llr, true_bit):
    """Flip the LLR sign for bits that were sent as 1.

    The result is negative exactly when the sign decision was wrong.
    """
    llr = np.asarray(llr, dtype=float)
    return np.where(np.asarray(true_bit) == 0, llr, -llr)


@dataclass
class TrialRecord:
    """Outcome of a batch of trials (leading axis = trial).

    ``e`` and ``d`` are indexed like the scheme's ``code.info_set`` and
    live in the domain the decoder reads bits from.
    """

    e: np.ndarray
    d: np.ndarray | None
    crit_error: np.ndarray
    payload_errors: np.ndarray

    def __len__(self):
        return int(self.crit_error.shape[0])


def simulate_trials(scheme: ConcatScheme, sigma: float, n_trials: int,
                    rng: np.random.Generator, *, with_soft: bool = False) -> TrialRecord:
    """Send ``n_trials`` random frames over BPSK/AWGN and decode them."""
    b_crit = rng.integers(0, 2, size=n_trials, dtype=np.uint8)
    payload = rng.integers(0, 2, size=(n_trials, scheme.K - 1), dtype=np.uint8)
    x = encode_concat(scheme, b_crit, payload)
    y = awgn_transmit(bpsk_modulate(x), sigma, rng)
    dec = decode_concat(scheme, channel_llr(y, sigma), with_soft=with_soft)
    truth = polar_payload(scheme, b_crit, payload)
    d = signed_llr(dec.soft, truth) if with_soft else None
    return TrialRecord(
        e=error_vector(truth, dec.bits),
        d=d,
        crit_error=(dec.b_crit != b_crit).astype(np.uint8),
        payload_errors=(dec.payload != payload).sum(axis=-1),
    )


# --------------------------------------------------------------------------- accumulators


@dataclass
class BerStats:
    K: int
    n_positions: int
    trials: int = 0
    crit_bit_errors: int = 0
    info_bit_errors: int = 0
    per_channel_errors: np.ndarray = None

    def __post_init__(self):
        if self.per_channel_errors is None:
            self.per_channel_errors = np.zeros(self.n_positions, dtype=np.int64)

    def update(self, record: TrialRecord) -> "BerStats":
        if record.e.shape[-1] != self.n_positions:
            raise ValueError(f"record has {record.e.shape[-1]} positions, "
                             f"expected {self.n_positions}")
        crit = int(record.crit_error.sum())
        self.trials += len(record)
        self.crit_bit_errors += crit
        self.info_bit_errors += crit + int(record.payload_errors.sum())
        self.per_channel_errors += record.e.sum(axis=0, dtype=np.int64)
        return self

    def merge(self, other: "BerStats") -> "BerStats":
        if (self.K, self.n_positions) != (other.K, other.n_positions):
            raise ValueError("cannot merge statistics of different schemes")
        return BerStats(self.K, self.n_positions, self.trials + other.trials,
                        self.crit_bit_errors + other.crit_bit_errors,
                        self.info_bit_errors + other.info_bit_errors,
                        self.per_channel_errors + other.per_channel_errors)

    __add__ = merge

    @property
    def ber_crit(self) -> float:
        return self.crit_bit_errors / self.trials if self.trials else float("nan")

    @property
    def ber_avg(self) -> float:
        """Errors among the critical bit and the K-1 payload bits, per bit."""
        return self.info_bit_errors / (self.K * self.trials) if self.trials else float("nan")

    @property
    def per_channel_ber(self) -> np.ndarray:
        if not self.trials:
            return np.full(self.n_positions, np.nan)
        return self.per_channel_errors / self.trials


@dataclass
class CorrelationEstimate:
    """Sufficient statistics for the Pearson correlation of binary error vectors."""

    size: int
    trials: int = 0
    sums: np.ndarray = None
    pair_sums: np.ndarray = None

    def __post_init__(self):
        if self.sums is None:
            self.sums = np.zeros(self.size, dtype=np.int64)
        if self.pair_sums is None:
            self.pair_sums = np.zeros((self.size, self.size), dtype=np.int64)

    def update(self, e) -> "CorrelationEstimate":
        if isinstance(e, TrialRecord):
            e = e.e
        e = np.asarray(e)
        if e.ndim != 2 or e.shape[1] != self.size:
            raise ValueError(f"expected error vectors of length {self.size}")
        ef = e.astype(np.float64)
        self.trials += e.shape[0]
        self.sums += e.sum(axis=0, dtype=np.int64)
        # exact: integer counts below 2**53
        self.pair_sums += np.rint(ef.T @ ef).astype(np.int64)
        return self

    def merge(self, other: "CorrelationEstimate") -> "CorrelationEstimate":
        if self.size != other.size:
            raise ValueError("cannot merge correlation estimates of different sizes")
        return CorrelationEstimate(self.size, self.trials + other.trials,
                                   self.sums + other.sums, self.pair_sums + other.pair_sums)

    __add__ = merge


def correlation_matrix(est: CorrelationEstimate):
    """Pearson correlation matrix of the error vector.

    Returns
    -------
    rho : ndarray, shape (size, size)
        Entries for positions whose error indicator never varied are 0.
    degenerate : ndarray of bool, shape (size,)
        Positions with zero observed variance.
    """
    if est.trials < 2:
        raise InsufficientDataError(f"need at least 2 trials, got {est.trials}")
    n = float(est.trials)
    mean = est.sums / n
    cov = est.pair_sums / n - np.outer(mean, mean)
    var = mean * (1.0 - mean)
    degenerate = var <= 0.0
    std = np.sqrt(np.where(degenerate, 1.0, var))
    rho = cov / np.outer(std, std)
    rho[degenerate, :] = 0.0
    rho[:, degenerate] = 0.0
    np.clip(rho, -1.0, 1.0, out=rho)
    rho = 0.5 * (rho + rho.T)
    diag = np.where(degenerate, 0.0, 1.0)
    np.fill_diagonal(rho, diag)
    return rho, degenerate


def mean_abs_offdiag(rho) -> float:
    rho = np.asarray(rho)
    mask = ~np.eye(rho.shape[0], dtype=bool)
    return float(np.abs(rho[mask]).mean())


@dataclass
class Histogram:
    """Fixed-width histogram over ``[-clamp, clamp]``; out-of-range values are clipped."""

    bin_width: float = 5.0
    clamp: float = LLR_CLAMP
    counts: np.ndarray = None

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        if self.counts is None:
            self.counts = np.zeros(self.edges.size - 1, dtype=np.int64)

    @property
    def edges(self) -> np.ndarray:
        nbins = int(np.ceil(2 * self.clamp / self.bin_width - 1e-9))
        return -self.clamp + self.bin_width * np.arange(nbins + 1)

    def update(self, values) -> "Histogram":
        edges = self.edges
        v = np.clip(np.asarray(values, dtype=float).ravel(), edges[0], edges[-1])
        self.counts += np.histogram(v, bins=edges)[0]
        return self

    def merge(self, other: "Histogram") -> "Histogram":
        if (self.bin_width, self.clamp) != (other.bin_width, other.clamp):
            raise ValueError("cannot merge histograms with different binning")
        return Histogram(self.bin_width, self.clamp, self.counts + other.counts)

    __add__ = merge

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram(values, bin_width: float = 5.0) -> Histogram:
    return Histogram(bin_width).update(values)


@dataclass
class HistogramSet:
    """Histograms of the signed decision LLRs for selected positions of the info set.

    With ``keep_samples`` the raw values are retained as well, for
    statistics that binning would blur.
    """

    positions: tuple
    bin_width: float = 5.0
    keep_samples: bool = False
    hists: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = tuple(int(p) for p in self.positions)
        for p in self.positions:
            self.hists.setdefault(p, Histogram(self.bin_width))
            self.samples.setdefault(p, [])

    def update(self, record: TrialRecord) -> "HistogramSet":
        if record.d is None:
            raise ValueError("record carries no signed LLRs")
        for p in self.positions:
            self.hists[p].update(record.d[:, p])
            if self.keep_samples:
                self.samples[p].append(np.array(record.d[:, p]))
        return self

    def merge(self, other: "HistogramSet") -> "HistogramSet":
        if self.positions != other.positions:
            raise ValueError("cannot merge histogram sets over different positions")
        return HistogramSet(
            self.positions, self.bin_width, self.keep_samples and other.keep_samples,
            {p: self.hists[p] + other.hists[p] for p in self.positions},
            {p: self.samples[p] + other.samples[p] for p in self.positions},
        )

    __add__ = merge

    def values(self, position: int) -> np.ndarray:
        parts = self.samples[int(position)]
        return np.concatenate(parts) if parts else np.empty(0)


def accumulate_trial(record: TrialRecord, *accumulators):
    """Feed one record to every accumulator and return them."""
    for acc in accumulators:
        if isinstance(acc, CorrelationEstimate):
            acc.update(record.e)
        else:
            acc.update(record)
    return accumulators


# --------------------------------------------------------------------------- calibration


def calibrate_llr_magnitudes(scheme: ConcatScheme, trials: int = 100_000, seed: int = 0, *,
                             es_n0_db: float | None = None, block_size: int = 4096,
                             min_trials: int = 10_000) -> np.ndarray:
    """Sample mean of ``|soft value|`` per information channel.

    Frames are simulated at the code's design Es/N0 unless ``es_n0_db`` is
    given.  Soft values are taken in the domain the scheme's repetition
    decoder reads (re-encoded LLRs for systematic codes).
    """
    if trials < min_trials:
        raise ValueError(f"calibration needs at least {min_trials} trials, got {trials}")
    snr = scheme.code.design_snr_db if es_n0_db is None else es_n0_db
    sigma = esn0_to_sigma(snr)
    total = np.zeros(scheme.code.K)
    done = 0
    block = 0
    while done < trials:
        size = min(block_size, trials - done)
        rng = trial_stream(seed, CALIBRATION_STREAM, block)
        rec = simulate_trials(scheme, sigma, size, rng, with_soft=True)
        total += np.abs(rec.d).sum(axis=0)
        done += size
        block += 1
    means = total / done
    if not (means > 0).all():
        raise CalibrationError("calibration produced a zero mean LLR magnitude")
    return means


def write_scale_file(path, scheme: ConcatScheme, means, *, trials: int, seed: int) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for key, value in scheme.describe().items():
            fh.write(f"# {key}={value}\n")
        fh.write(f"# trials={trials}\n# seed={seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel_index", "mean_abs_llr"])
        for idx, m in zip(scheme.code.info_set, means):
            w.writerow([int(idx), repr(float(m))])
    return path


def read_scale_file(path):
    """Return ``(channel_indices, means)`` from a scale-factor file."""
    rows = [line for line in Path(path).read_text().splitlines()
            if line and not line.startswith("#")]
    reader = csv.DictReader(rows)
    idx, means = [], []
    for row in reader:
        idx.append(int(row["channel_index"]))
        means.append(float(row["mean_abs_llr"]))
    return np.array(idx, dtype=np.int64), np.array(means)


# --------------------------------------------------------------------------- curves and exports


def snr_at_ber(snr_db, ber, target: float) -> float:
    """Eb/N0 where a BER curve first drops through ``target``.

    Interpolates linearly in ``log10(BER)`` between the bracketing points;
    ``nan`` when the curve never crosses.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    order = np.argsort(snr_db)
    snr_db, ber = snr_db[order], ber[order]
    for i in range(len(ber) - 1):
        hi, lo = ber[i], ber[i + 1]
        if hi >= target > lo:
            if lo <= 0:
                return float(snr_db[i + 1])
            t = (np.log10(hi) - np.log10(target)) / (np.log10(hi) - np.log10(lo))
            return float(snr_db[i] + t * (snr_db[i + 1] - snr_db[i]))
    return float("nan")


def write_correlation_csv(path, rho, info_set) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index"] + [int(i) for i in info_set])
        for i, row in zip(info_set, rho):
            w.writerow([int(i)] + [f"{v:.6g}" for v in row])
    return path


def write_histogram_csv(path, hist: Histogram) -> Path:
    path = Path(path)
    edges = hist.edges
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], hist.counts):
            w.writerow([f"{lo:g}", f"{hi:g}", int(c)])
    return path


def write_per_channel_csv(path, stats: BerStats, info_set) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["position", "channel_index", "errors", "trials", "ber"])
        for pos, (idx, err) in enumerate(zip(info_set, stats.per_channel_errors)):
            w.writerow([pos, int(idx), int(err), stats.trials,
                        f"{err / stats.trials:.6e}" if stats.trials else "nan"])
    return path
