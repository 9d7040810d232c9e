"""Slow reference computations used to check the fast paths."""

import itertools

import numpy as np
from scipy.special import logsumexp


def generator_matrix(n):
    F = np.array([[1, 0], [1, 1]], dtype=np.int64)
    G = np.array([[1]], dtype=np.int64)
    for _ in range(n):
        G = np.kron(G, F)
    return G


def brute_force_sc(frozen_mask, channel_llrs):
    """SC decisions and synthetic-channel LLRs by explicit marginalisation.

    ``L_i = log sum_{u_{i+1..N-1}} W(y | u_0..u_{i-1}=hat, u_i=0, ...) /
    (same with u_i=1)``, summing over every completion of the future bits;
    past bits are the oracle's own previous decisions.
    """
    L = np.asarray(channel_llrs, dtype=float)
    N = L.size
    G = generator_matrix(int(np.log2(N)))
    u_hat = np.zeros(N, dtype=np.int64)
    dec = np.zeros(N)
    for i in range(N):
        tails = np.array(list(itertools.product((0, 1), repeat=N - i)), dtype=np.int64)
        u = np.concatenate([np.broadcast_to(u_hat[:i], (tails.shape[0], i)), tails], axis=1)
        x = (u @ G) % 2
        # log W(y|x) up to a constant: sum_j (1 - 2 x_j) L_j / 2
        ll = ((1 - 2 * x) * L).sum(axis=1) / 2.0
        dec[i] = logsumexp(ll[tails[:, 0] == 0]) - logsumexp(ll[tails[:, 0] == 1])
        u_hat[i] = 0 if frozen_mask[i] or dec[i] >= 0 else 1
    return u_hat, dec


def valid_codewords(frozen_mask):
    """Every codeword of the code: rows ``u G`` with ``u`` zero on frozen positions."""
    N = len(frozen_mask)
    G = generator_matrix(int(np.log2(N)))
    info = np.flatnonzero(~np.asarray(frozen_mask))
    words = []
    for bits in itertools.product((0, 1), repeat=info.size):
        u = np.zeros(N, dtype=np.int64)
        u[info] = bits
        words.append((u @ G) % 2)
    return np.array(words)
