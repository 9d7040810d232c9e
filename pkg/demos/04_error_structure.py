"""
Where the errors come from
==========================

Diagnostics at the design point (Es/N0 = 0 dB, k_rep = 1) for the plain and
the systematic code.  The first part looks at how errors on different
information channels go together.  The second looks at the signed decision
LLRs D_i and at how uneven the per-channel bit error rates are.
"""

import numpy as np

from polaruep.analysis import mean_abs_offdiag
from polaruep.sim import SweepConfig, run_diagnostics

runs = {}
for systematic in (False, True):
    cfg = SweepConfig(k_rep=(1,), systematic=systematic, max_trials=50_000)
    runs[systematic] = run_diagnostics(cfg, keep_samples=True)

# %%
# Error correlation.  The non-systematic code shows large coefficients
# between neighbouring channels; the systematic one is much flatter.
for systematic, res in runs.items():
    rho = res.correlation
    off = rho[~np.eye(len(rho), dtype=bool)]
    print(f"systematic={systematic!s:5}: mean |rho| {mean_abs_offdiag(rho):.4f}, "
          f"max {off.max():.3f}")

# %%
# Signed LLRs of the two default channels.  Negative values are errors.  For
# the plain code, wrong decisions are not small hesitant values: they carry
# magnitudes comparable to correct ones.
res = runs[False]
for ch in res.channels:
    d = res.signed_llrs(ch)
    wrong = d[d < 0]
    print(f"channel {ch}: {wrong.size} errors, median |D| wrong "
          f"{np.median(np.abs(wrong)) if wrong.size else float('nan'):.1f}, "
          f"median D correct {np.median(d[d >= 0]):.1f}")

# a coarse text histogram of D for the most reliable channel
hist = res.histograms.hists[int(np.searchsorted(res.scheme.code.info_set, res.channels[0]))]
coarse = hist.counts.reshape(-1, 10).sum(axis=1)       # 50-unit bins
for lo, c in zip(range(-500, 500, 50), coarse):
    if c:
        print(f"  [{lo:5d}, {lo + 50:5d}) {'#' * max(1, int(40 * c / coarse.max()))} {c}")

# %%
# Per-channel BER spread (max / min over the information channels).
for systematic, res in runs.items():
    b = res.stats.per_channel_ber
    print(f"systematic={systematic!s:5}: per-channel BER {b.min():.2e} .. {b.max():.2e}, "
          f"ratio {b.max() / b.min():.1f}")
