"""Pure-Python/numpy versions of the hot loops in :mod:`mpnr_lab._kernels`."""

import numpy as np
from scipy.special import gammaln


def occupancy_table(n, dim):
    """P[k, m] = P(exactly k of n equal bins occupied | m balls), m < dim.

    Uses P(k|m+1) = P(k|m) k/n + P(k-1|m) (n-k+1)/n; every term is
    non-negative, so there is no cancellation.
    """
    n = int(n)
    dim = int(dim)
    table = np.zeros((n + 1, dim))
    table[0, 0] = 1.0
    k = np.arange(n + 1, dtype=float)
    stay = k / n
    move = (n - k + 1) / n
    for m in range(dim - 1):
        prev = table[:, m]
        nxt = prev * stay
        nxt[1:] += prev[:-1] * move[1:]
        table[:, m + 1] = nxt
    return table


def weighted_occupancy(pis, dim):
    """A[t, j] = t! * sum over placements of t photons into len(pis) bins.

    Each placement (c_1..c_n) with sum t and j non-empty bins contributes
    prod pi_i^c_i / c_i!.  Equivalently A[t, j] is the probability that t
    photons, each landing in bin i with probability pi_i (and nowhere else),
    occupy exactly j bins, given that all t landed.
    """
    pis = np.asarray(pis, dtype=float)
    n = pis.size
    dim = int(dim)
    t_idx = np.arange(dim)
    log_binom = gammaln(t_idx[:, None] + 1) - gammaln(t_idx[None, :] + 1) \
        - gammaln(np.maximum(t_idx[:, None] - t_idx[None, :], 0) + 1)
    binom = np.where(t_idx[None, :] <= t_idx[:, None], np.exp(log_binom), 0.0)
    acc = np.zeros((dim, n + 1))
    acc[0, 0] = 1.0
    for pi in pis:
        powers = pi ** t_idx
        new = acc.copy()  # c = 0 photons in this bin
        for c in range(1, dim):
            w = binom[c:, c] * powers[c]
            new[c:, 1:] += w[:, None] * acc[: dim - c, :-1]
        acc = new
    return acc
