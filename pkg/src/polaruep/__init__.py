"""Repetition-polar concatenation for unequal error protection."""

from .analysis import (
    BerStats,
    CorrelationEstimate,
    Histogram,
    HistogramSet,
    TrialRecord,
    accumulate_trial,
    calibrate_llr_magnitudes,
    correlation_matrix,
    error_vector,
    histogram,
    signed_llr,
    simulate_trials,
    snr_at_ber,
)
from .channel import (
    ChannelParams,
    awgn_transmit,
    bpsk_modulate,
    channel_llr,
    ebn0_to_sigma,
    esn0_to_sigma,
)
from .concat import (
    ConcatScheme,
    decode_concat,
    decode_rep_hard,
    decode_rep_scaled,
    decode_rep_soft,
    encode_concat,
    make_scheme,
    select_crit_channels,
)
from .polar import (
    LLR_CLAMP,
    PolarCode,
    boxplus,
    construct_code,
    encode_nonsystematic,
    encode_systematic,
    polar_transform,
    sc_decode,
    soft_reencode,
    systematic_extract,
)
from .sim import SweepConfig, calibrate, run_diagnostics, run_sweep

__version__ = "0.1.0"
