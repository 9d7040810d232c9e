"""
Seeded Monte-Carlo experiments: BER sweeps, diagnostics and LLR calibration.

Trials are grouped in fixed-size blocks and block ``j`` of a point always
draws from its own Philox substream, so results depend only on the
configuration and the seed, never on the number of workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .analysis import (
    RNG_NAME,
    BerStats,
    CorrelationEstimate,
    HistogramSet,
    calibrate_llr_magnitudes,
    correlation_matrix,
    read_scale_file,
    simulate_trials,
    trial_stream,
    write_correlation_csv,
    write_histogram_csv,
    write_per_channel_csv,
    write_scale_file,
)
from .channel import ebn0_to_esn0, ebn0_to_sigma, esn0_to_sigma
from .concat import REP_MODES, ConcatScheme, make_scheme
from .polar import CONSTRUCTION_METHODS

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SWEEP_COLUMNS = (
    "k_rep", "systematic", "rep_mode", "eb_n0_db", "es_n0_db", "ber_avg", "ber_crit",
    "trials", "crit_errors", "info_bit_errors", "converged",
)
BER_AVG_DEFINITION = ("bit errors among the decoded critical bit and the K-1 payload bits, "
                      "divided by K * trials")

SWEEP_STREAM = 0
DIAGNOSTICS_STREAM = 2

DEFAULT_DIAGNOSTIC_TRIALS = 100_000


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class SweepConfig:
    n: int = 7
    r_inf: float = 0.5
    k_rep: tuple = (1,)
    systematic: bool = False
    rep_mode: str = "soft"
    design_snr_db: float = 0.0
    ebn0: tuple = (0.0, 6.0, 0.5)
    max_trials: int | None = None
    min_errors: int = 100
    seed: int = 0
    workers: int = 1
    out: str | None = None
    block_size: int = 4096
    scale_file: str | None = None
    calibration_trials: int = 100_000
    construction: str = "ga"
    ebn0_rate: str = "r_inf"
    diag_channels: tuple = ()

    def __post_init__(self):
        self.k_rep = tuple(int(k) for k in np.atleast_1d(self.k_rep))
        self.ebn0 = tuple(float(v) for v in self.ebn0)
        self.diag_channels = tuple(int(c) for c in self.diag_channels)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def K(self) -> int:
        return int(round(self.r_inf * self.N))

    @property
    def trial_budget(self) -> int:
        """``max_trials``, defaulting to 10^8 information bits' worth."""
        if self.max_trials is not None:
            return int(self.max_trials)
        return math.ceil(1e8 / self.K)

    def validate(self) -> "SweepConfig":
        if self.n < 1:
            raise ConfigError("n", f"must be >= 1, got {self.n}")
        K = self.r_inf * self.N
        if not 0 < self.r_inf <= 1 or abs(K - round(K)) > 1e-9:
            raise ConfigError("r_inf", f"r_inf * N must be a positive integer, got {K}")
        if not self.k_rep:
            raise ConfigError("k_rep", "at least one value is required")
        for k in self.k_rep:
            if k < 1 or k % 2 == 0:
                raise ConfigError("k_rep", f"values must be odd and positive, got {k}")
            if self.K - 1 + k > self.N:
                raise ConfigError("k_rep", f"K - 1 + k_rep exceeds N for k_rep={k}")
        if self.rep_mode not in REP_MODES:
            raise ConfigError("rep_mode", f"must be one of {REP_MODES}, got {self.rep_mode!r}")
        if len(self.ebn0) != 3 or self.ebn0[2] <= 0 or self.ebn0[1] < self.ebn0[0]:
            raise ConfigError("ebn0", f"expected start <= stop and step > 0, got {self.ebn0}")
        if self.max_trials is not None and self.max_trials < 0:
            raise ConfigError("max_trials", "must be non-negative")
        if self.min_errors < 1:
            raise ConfigError("min_errors", "must be positive")
        if self.workers < 1:
            raise ConfigError("workers", "must be positive")
        if self.block_size < 1:
            raise ConfigError("block_size", "must be positive")
        if self.construction not in CONSTRUCTION_METHODS:
            raise ConfigError("construction", f"must be one of {CONSTRUCTION_METHODS}")
        if self.ebn0_rate not in ("r_inf", "r"):
            raise ConfigError("ebn0_rate", "must be 'r_inf' or 'r'")
        if self.scale_file is not None and len(self.k_rep) > 1:
            raise ConfigError("scale_file", "a scale file covers a single k_rep")
        return self

    def ebn0_points(self) -> np.ndarray:
        start, stop, step = self.ebn0
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(count), 10)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "SweepConfig":
        """Build a config from string or typed values, e.g. a parsed config file."""
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for raw_key, value in mapping.items():
            key = _KEY_ALIASES.get(raw_key.replace("-", "_"), raw_key.replace("-", "_"))
            if key not in known:
                raise ConfigError(raw_key, "unknown configuration key")
            try:
                kwargs[key] = _CONVERTERS.get(key, lambda v: v)(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, f"cannot parse {value!r} ({exc})") from None
        return cls(**kwargs)


def parse_ebn0(text) -> tuple:
    if isinstance(text, str):
        parts = text.split(":")
        if len(parts) == 1:
            v = float(parts[0])
            return (v, v, 1.0)
        if len(parts) != 3:
            raise ValueError("expected start:stop:step")
        return tuple(float(p) for p in parts)
    return tuple(float(v) for v in text)


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError("not a boolean")


def _parse_int_list(value) -> tuple:
    if isinstance(value, str):
        return tuple(int(v) for v in value.replace(" ", "").split(",") if v)
    return tuple(int(v) for v in np.atleast_1d(value))


def _optional(conv):
    def inner(value):
        if value is None or (isinstance(value, str) and value.lower() in ("", "none")):
            return None
        return conv(value)
    return inner


def _rep_mode(value) -> str:
    value = str(value)
    return "scaled_soft" if value == "scaled" else value


_KEY_ALIASES = {"rinf": "r_inf", "krep": "k_rep", "min_error_events": "min_errors",
                "design_snr": "design_snr_db", "scale_factors": "scale_file"}
_CONVERTERS = {
    "n": int, "r_inf": float, "k_rep": _parse_int_list, "systematic": _parse_bool,
    "rep_mode": _rep_mode, "design_snr_db": float, "ebn0": parse_ebn0,
    "max_trials": _optional(lambda v: int(float(v))), "min_errors": int, "seed": int,
    "workers": int, "out": _optional(str), "block_size": int, "scale_file": _optional(str),
    "calibration_trials": lambda v: int(float(v)), "construction": str, "ebn0_rate": str,
    "diag_channels": _parse_int_list,
}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        values[key.strip()] = value.strip()
    return values


def build_id() -> str:
    """Content hash of the package sources."""
    h = hashlib.sha1()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        data = path.read_bytes()
        h.update(f"blob {len(data)}\0".encode())
        h.update(data)
    return h.hexdigest()[:12]


# --------------------------------------------------------------------------- block engine


@dataclass
class PointResult:
    stats: BerStats
    correlation: CorrelationEstimate | None = None
    histograms: HistogramSet | None = None
    blocks: int = 0


def _run_block(scheme, sigma, seed, key, block, size, with_soft, hist_positions, keep_samples):
    rng = trial_stream(seed, *key, block)
    rec = simulate_trials(scheme, sigma, size, rng, with_soft=with_soft)
    res = PointResult(BerStats(scheme.K, scheme.code.K).update(rec), blocks=1)
    if with_soft:
        res.correlation = CorrelationEstimate(scheme.code.K).update(rec.e)
        res.histograms = HistogramSet(hist_positions, keep_samples=keep_samples).update(rec)
    return res


def _merge(a: PointResult, b: PointResult) -> PointResult:
    return PointResult(
        a.stats + b.stats,
        None if a.correlation is None else a.correlation + b.correlation,
        None if a.histograms is None else a.histograms + b.histograms,
        a.blocks + b.blocks,
    )


def simulate_point(scheme: ConcatScheme, sigma: float, *, seed: int, key: tuple,
                   max_trials: int, min_errors: int | None, block_size: int = 4096,
                   executor=None, workers: int = 1, diagnostics: bool = False,
                   hist_positions=(), keep_samples: bool = False) -> PointResult:
    """Simulate one operating point.

    Blocks are consumed in index order and the run stops after the first
    block at which ``min_errors`` critical-bit errors have been seen, or when
    ``max_trials`` is exhausted.  Blocks computed speculatively by parallel
    workers beyond the stopping block are discarded.
    """
    result = PointResult(BerStats(scheme.K, scheme.code.K))
    if diagnostics:
        result.correlation = CorrelationEstimate(scheme.code.K)
        result.histograms = HistogramSet(hist_positions, keep_samples=keep_samples)
    n_blocks = math.ceil(max_trials / block_size) if max_trials > 0 else 0
    sizes = [min(block_size, max_trials - j * block_size) for j in range(n_blocks)]
    args = (scheme, sigma, seed, key)
    extra = (diagnostics, tuple(hist_positions), keep_samples)
    j = 0
    while j < n_blocks:
        batch = range(j, min(j + workers, n_blocks))
        if executor is None:
            parts = (_run_block(*args, b, sizes[b], *extra) for b in batch)
        else:
            parts = executor.map(_run_block, *zip(*[args + (b, sizes[b]) + extra for b in batch]))
        for part in parts:
            result = _merge(result, part)
            j += 1
            if min_errors is not None and result.stats.crit_bit_errors >= min_errors:
                return result
    return result


class _Executor:
    def __init__(self, workers: int):
        self.workers = workers
        self.pool = None

    def __enter__(self):
        if self.workers > 1:
            self.pool = ProcessPoolExecutor(max_workers=self.workers)
        return self.pool

    def __exit__(self, *exc):
        if self.pool is not None:
            self.pool.shutdown()


# --------------------------------------------------------------------------- schemes and scale factors


def _scheme(cfg: SweepConfig, k_rep: int, rep_mode: str | None = None) -> ConcatScheme:
    return make_scheme(cfg.n, cfg.r_inf, k_rep, systematic=cfg.systematic,
                       rep_mode=rep_mode or "soft", design_snr_db=cfg.design_snr_db,
                       method=cfg.construction)


def _calibrated_means(cfg: SweepConfig, scheme: ConcatScheme) -> tuple:
    """Return ``(means over the info set, source description)``."""
    if cfg.scale_file is not None:
        idx, means = read_scale_file(cfg.scale_file)
        if not np.array_equal(idx, scheme.code.info_set):
            raise ConfigError("scale_file", "channel indices do not match the code's info set")
        return means, str(cfg.scale_file)
    means = calibrate_llr_magnitudes(scheme, cfg.calibration_trials, cfg.seed,
                                     block_size=cfg.block_size)
    return means, f"calibrated: {cfg.calibration_trials} trials at Es/N0 {cfg.design_snr_db} dB"


def resolve_scheme(cfg: SweepConfig, k_rep: int) -> tuple:
    scheme = _scheme(cfg, k_rep)
    source = None
    if cfg.rep_mode == "scaled_soft":
        means, source = _calibrated_means(cfg, scheme)
        scheme = scheme.with_info_scales(means)
    elif cfg.rep_mode == "hard":
        scheme = scheme.with_mode("hard")
    return scheme, source


def _point_key(k_rep: int, eb_n0_db: float) -> tuple:
    # shared by all scheme variants so their comparisons use common frames
    return (SWEEP_STREAM, int(k_rep), int(round(eb_n0_db * 10_000)) + 1_000_000)


def _metadata(cfg: SweepConfig, **extra) -> dict:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "build_id": build_id(),
        "config": asdict(cfg),
        "construction": cfg.construction,
        "seed": cfg.seed,
        "rng": RNG_NAME,
        "ebn0_normalization": cfg.ebn0_rate,
        "ber_avg_definition": BER_AVG_DEFINITION,
    }
    meta.update(extra)
    return meta


def _prepare_out(cfg: SweepConfig) -> Path | None:
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError("out", f"output directory is not writable ({exc})") from None
    return out


# --------------------------------------------------------------------------- sweep


@dataclass
class SweepResult:
    rows: list
    stats: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def curve(self, k_rep: int, column: str = "ber_crit"):
        pts = [(r["eb_n0_db"], r[column]) for r in self.rows if r["k_rep"] == k_rep]
        if not pts:
            return np.empty(0), np.empty(0)
        eb, val = zip(*pts)
        return np.array(eb), np.array(val)


def _row(scheme: ConcatScheme, cfg: SweepConfig, eb: float, st: BerStats) -> dict:
    return {
        "k_rep": scheme.k_rep,
        "systematic": int(scheme.systematic),
        "rep_mode": scheme.rep_mode,
        "eb_n0_db": float(eb),
        "es_n0_db": ebn0_to_esn0(eb, _eb_rate(cfg, scheme)),
        "ber_avg": st.ber_avg,
        "ber_crit": st.ber_crit,
        "trials": st.trials,
        "crit_errors": st.crit_bit_errors,
        "info_bit_errors": st.info_bit_errors,
        "converged": int(st.crit_bit_errors >= cfg.min_errors),
    }


def _eb_rate(cfg: SweepConfig, scheme: ConcatScheme) -> float:
    return scheme.r_inf if cfg.ebn0_rate == "r_inf" else scheme.rate


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6e}" if not math.isnan(value) else "nan"
    return str(value)


def write_sweep_csv(path, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([f"{r[c]:.4f}" if c in ("eb_n0_db", "es_n0_db") else _fmt(r[c])
                        for c in SWEEP_COLUMNS])
    return path


def read_sweep_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    ints = ("k_rep", "systematic", "trials", "crit_errors", "info_bit_errors", "converged")
    for r in rows:
        for c in SWEEP_COLUMNS:
            if c in ints:
                r[c] = int(r[c])
            elif c != "rep_mode":
                r[c] = float(r[c])
    return rows


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Simulate every (k_rep, Eb/N0) point of ``cfg``."""
    cfg.validate()
    out = _prepare_out(cfg)
    warnings = []
    budget = cfg.trial_budget
    if budget == 0:
        warnings.append("max_trials is 0: nothing simulated")
        log.warning(warnings[-1])
    rows, stats, scale_sources = [], {}, {}
    with _Executor(cfg.workers) as pool:
        for k_rep in cfg.k_rep:
            if budget == 0:
                break
            scheme, source = resolve_scheme(cfg, k_rep)
            if source:
                scale_sources[k_rep] = source
            for eb in cfg.ebn0_points():
                sigma = ebn0_to_sigma(eb, _eb_rate(cfg, scheme))
                res = simulate_point(scheme, sigma, seed=cfg.seed, key=_point_key(k_rep, eb),
                                     max_trials=budget, min_errors=cfg.min_errors,
                                     block_size=cfg.block_size, executor=pool,
                                     workers=cfg.workers)
                row = _row(scheme, cfg, eb, res.stats)
                if not row["converged"]:
                    msg = (f"k_rep={k_rep} Eb/N0={eb:g} dB: only {row['crit_errors']} critical "
                           f"errors in {row['trials']} trials")
                    warnings.append(msg)
                    log.warning(msg)
                rows.append(row)
                stats[(k_rep, float(eb))] = res.stats
                log.info("k_rep=%d Eb/N0=%.2f BER_crit=%.3e BER_avg=%.3e trials=%d",
                         k_rep, eb, row["ber_crit"], row["ber_avg"], row["trials"])
    meta = _metadata(cfg, columns=list(SWEEP_COLUMNS), warnings=warnings,
                     scale_factors=scale_sources)
    if out is not None:
        write_sweep_csv(out / "sweep.csv", rows)
        (out / "sweep_meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")
    return SweepResult(rows, stats, meta)


# --------------------------------------------------------------------------- diagnostics


@dataclass
class DiagnosticsResult:
    scheme: ConcatScheme
    stats: BerStats
    correlation: np.ndarray | None
    degenerate: np.ndarray | None
    histograms: HistogramSet
    channels: tuple
    metadata: dict = field(default_factory=dict)

    def signed_llrs(self, channel: int) -> np.ndarray:
        """Retained signed LLR samples of a channel (needs ``keep_samples``)."""
        pos = int(np.searchsorted(self.scheme.code.info_set, channel))
        return self.histograms.values(pos)


def run_diagnostics(cfg: SweepConfig, *, keep_samples: bool = False) -> DiagnosticsResult:
    """Error-vector correlation, signed-LLR histograms and per-channel BER.

    Runs a fixed budget of ``cfg.max_trials`` frames (default 10^5) of the
    first ``k_rep`` scheme at Es/N0 equal to the design SNR.
    """
    cfg.validate()
    out = _prepare_out(cfg)
    k_rep = cfg.k_rep[0]
    scheme, source = resolve_scheme(cfg, k_rep)
    budget = DEFAULT_DIAGNOSTIC_TRIALS if cfg.max_trials is None else int(cfg.max_trials)
    info = scheme.code.info_set
    if cfg.diag_channels:
        channels = cfg.diag_channels
    else:
        # most reliable and 5th most reliable
        top = scheme.code.most_reliable_info(min(5, scheme.code.K))
        channels = tuple(sorted({int(top[0]), int(top[-1])}, reverse=True))
    for c in channels:
        if c not in info:
            raise ConfigError("diag_channels", f"channel {c} is not an information channel")
    positions = tuple(int(np.searchsorted(info, c)) for c in channels)
    warnings = []
    if budget == 0:
        warnings.append("max_trials is 0: diagnostics are empty")
        log.warning(warnings[-1])
    with _Executor(cfg.workers) as pool:
        res = simulate_point(scheme, esn0_to_sigma(cfg.design_snr_db), seed=cfg.seed,
                             key=(DIAGNOSTICS_STREAM, k_rep), max_trials=budget,
                             min_errors=None, block_size=cfg.block_size, executor=pool,
                             workers=cfg.workers, diagnostics=True, hist_positions=positions,
                             keep_samples=keep_samples)
    rho = degenerate = None
    if res.correlation.trials >= 2:
        rho, degenerate = correlation_matrix(res.correlation)
    elif budget:
        warnings.append("fewer than 2 trials: no correlation matrix")
    meta = _metadata(cfg, k_rep=k_rep, es_n0_db=cfg.design_snr_db, trials=res.stats.trials,
                     channels=list(channels), warnings=warnings, scale_factors=source,
                     degenerate_channels=[] if degenerate is None
                     else [int(i) for i in info[degenerate]])
    if out is not None:
        if rho is None:
            write_correlation_csv(out / "correlation.csv", np.empty((0, info.size)), [])
        else:
            write_correlation_csv(out / "correlation.csv", rho, info)
        write_per_channel_csv(out / "per_channel_ber.csv", res.stats, info)
        for c, p in zip(channels, positions):
            write_histogram_csv(out / f"hist_ch{c}.csv", res.histograms.hists[p])
        (out / "diagnostics_meta.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")
    return DiagnosticsResult(scheme, res.stats, rho, degenerate, res.histograms, channels, meta)


# --------------------------------------------------------------------------- calibration


def calibrate(cfg: SweepConfig) -> dict:
    """Estimate mean |LLR| per information channel for every ``k_rep``.

    Returns ``{k_rep: means}``; with ``cfg.out`` set each vector is also
    written to ``scales_k{k_rep}.csv`` (or to ``cfg.scale_file``).
    """
    cfg.validate()
    out = _prepare_out(cfg)
    result = {}
    for k_rep in cfg.k_rep:
        scheme = _scheme(cfg, k_rep)
        means = calibrate_llr_magnitudes(scheme, cfg.calibration_trials, cfg.seed,
                                         block_size=cfg.block_size)
        result[k_rep] = means
        target = None
        if cfg.scale_file is not None:
            target = Path(cfg.scale_file)
        elif out is not None:
            target = out / f"scales_k{k_rep}.csv"
        if target is not None:
            write_scale_file(target, scheme, means, trials=cfg.calibration_trials, seed=cfg.seed)
    return result
