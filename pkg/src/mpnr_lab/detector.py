"""Click statistics of a multiplexed array of ON-OFF detectors.

The array is summarized by a Fock-diagonal POVM, the click matrix
``c[k, m] = P(k clicks | m photons)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import EnumerationBoundError, InvalidSpecError

_WEIGHT_SLACK = 1e-12


@dataclass(frozen=True)
class DetectorSpec:
    """An n-detector array.

    ``weights`` are the fractions of the input routed to each detector (they
    may sum to less than one; the remainder is lost), ``kappas`` the
    per-detector efficiencies, ``dark_eps`` the per-detector dark-click
    probability and ``corr_p`` the adjacent-pair correlation probability.
    """

    n: int
    weights: tuple
    kappas: tuple
    dark_eps: float = 0.0
    corr_p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        if int(self.n) != self.n or self.n < 1:
            raise InvalidSpecError(f"n must be a positive integer, got {self.n!r}")
        if len(self.weights) != self.n or len(self.kappas) != self.n:
            raise InvalidSpecError("weights and kappas must each have n entries")
        if any(w < 0 for w in self.weights) or sum(self.weights) > 1 + _WEIGHT_SLACK:
            raise InvalidSpecError("weights must be non-negative and sum to at most 1")
        if any(not 0.0 <= k <= 1.0 for k in self.kappas):
            raise InvalidSpecError("efficiencies must lie in [0, 1]")
        if not 0.0 <= self.dark_eps < 1.0:
            raise InvalidSpecError("dark_eps must lie in [0, 1)")
        if not 0.0 <= self.corr_p <= 1.0:
            raise InvalidSpecError("corr_p must lie in [0, 1]")
        if self.corr_p > 0 and self.n % 2:
            raise InvalidSpecError("pair correlations need an even number of detectors")

    @classmethod
    def balanced(cls, n: int, kappa: float = 1.0, dark_eps: float = 0.0,
                 corr_p: float = 0.0) -> "DetectorSpec":
        return cls(n, (1.0 / n,) * n, (kappa,) * n, dark_eps, corr_p)

    @classmethod
    def from_taps(cls, taps: Sequence[float], kappa: Union[float, Sequence[float]] = 1.0,
                  dark_eps: float = 0.0, corr_p: float = 0.0) -> "DetectorSpec":
        """Sequential architecture: detector j taps fraction ``taps[j]`` of what reaches it."""
        w = sequential_weights(taps)
        kappas = (kappa,) * len(w) if np.isscalar(kappa) else tuple(kappa)
        return cls(len(w), tuple(w), kappas, dark_eps, corr_p)

    @property
    def is_balanced(self) -> bool:
        return max(self.weights) - min(self.weights) <= 1e-15 * max(1.0, max(self.weights))

    @property
    def uniform_kappa(self) -> bool:
        return max(self.kappas) == min(self.kappas)


@dataclass(frozen=True)
class IdealPNR:
    """Number-resolving detector with unlimited pixels and efficiency ``kappa``."""

    kappa: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise InvalidSpecError("kappa must lie in [0, 1]")

    n = None
    dark_eps = 0.0
    corr_p = 0.0


AnyDetector = Union[DetectorSpec, IdealPNR]


@dataclass(frozen=True)
class ClickMatrix:
    c: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def n_outcomes(self) -> int:
        return self.c.shape[0]

    @property
    def n(self) -> int:
        return self.c.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.c.shape[1]

    def click_distribution(self, dist) -> np.ndarray:
        dist = np.asarray(dist, dtype=float)
        if dist.size != self.dim:
            from .errors import DimensionMismatchError

            raise DimensionMismatchError(
                f"distribution has {dist.size} entries, click matrix expects {self.dim}"
            )
        return self.c @ dist


def occupancy_dp(n: int, m: int) -> np.ndarray:
    """P(exactly k of n equal bins occupied | m balls) for k = 0..n."""
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    return kernels.occupancy_table(n, m + 1)[:, m].copy()


def _binom_pmf(x: np.ndarray, trials: np.ndarray, q: float) -> np.ndarray:
    """Binomial pmf in the log domain; exact at q = 0 and q = 1, zero outside 0 <= x <= trials."""
    x, trials = np.broadcast_arrays(np.asarray(x), np.asarray(trials))
    out = np.zeros(x.shape)
    ok = (x >= 0) & (x <= trials)
    if q <= 0.0:
        out[ok & (x == 0)] = 1.0
        return out
    if q >= 1.0:
        out[ok & (x == trials)] = 1.0
        return out
    xs, ts = x[ok], trials[ok]
    log_p = (
        gammaln(ts + 1) - gammaln(xs + 1) - gammaln(ts - xs + 1)
        + xs * math.log(q) + (ts - xs) * math.log1p(-q)
    )
    out[ok] = np.exp(log_p)
    return out


def _thinning_matrix(q: float, dim: int) -> np.ndarray:
    """T[m', m] = Binom(m' ; m, q)."""
    m = np.arange(dim)
    return _binom_pmf(m[:, None], m[None, :], q)


def _dark_matrix(n: int, eps: float) -> np.ndarray:
    """Dk[k, j] = Binom(k - j ; n - j, eps): dark clicks on the unoccupied detectors."""
    k = np.arange(n + 1)
    return _binom_pmf(k[:, None] - k[None, :], n - k[None, :], eps)


def _click_matrix_uncached(spec: AnyDetector, dim: int) -> np.ndarray:
    if isinstance(spec, IdealPNR):
        return _thinning_matrix(spec.kappa, dim)
    n = spec.n
    if spec.is_balanced and spec.uniform_kappa:
        q = min(1.0, math.fsum(spec.weights) * spec.kappas[0])
        occ = kernels.occupancy_table(n, dim) @ _thinning_matrix(q, dim)
    else:
        pis = np.array(spec.weights) * np.array(spec.kappas)
        detected = float(pis.sum())
        if detected == 0.0:
            occ = np.zeros((n + 1, dim))
            occ[0, :] = 1.0
        else:
            # occupancy given t detected photons, then thin m -> t
            acc = kernels.weighted_occupancy(pis / detected, dim)  # [t, j]
            occ = acc.T @ _thinning_matrix(min(detected, 1.0), dim)
    c = _dark_matrix(n, spec.dark_eps) @ occ if spec.dark_eps > 0 else occ
    if spec.corr_p > 0:
        c = _pair_mixing_matrix(spec) @ c
    return c


@lru_cache(maxsize=256)
def _click_matrix_cached(spec: AnyDetector, dim: int) -> ClickMatrix:
    return ClickMatrix(_click_matrix_uncached(spec, dim))


def click_matrix(spec: AnyDetector, dim: int) -> ClickMatrix:
    """Click matrix of ``spec`` for inputs of up to ``dim - 1`` photons.

    Losses are folded in by binomial thinning before the split when the
    array is balanced with uniform efficiency, otherwise per arm inside the
    weighted occupancy program. Dark clicks hit unoccupied detectors
    independently with probability ``dark_eps``. A non-zero ``corr_p``
    applies :func:`correlated_click_transform`.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _click_matrix_cached(spec, int(dim))


def _pair_mixing_matrix(spec: DetectorSpec) -> np.ndarray:
    """M[k', k]: reported clicks k' given k truly clicked detectors."""
    if spec.n % 2:
        raise InvalidSpecError("pair correlations need an even number of detectors")
    if not (spec.is_balanced and spec.uniform_kappa):
        raise InvalidSpecError(
            "correlated detectors are only modelled for balanced, uniform-efficiency arrays"
        )
    n, p = spec.n, spec.corr_p
    pairs = n // 2
    mix = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        log_total = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        for singles in range(k % 2, min(k, pairs) + 1, 2):
            doubles = (k - singles) // 2
            if doubles + singles > pairs:
                continue
            # clicked set is a uniform k-subset; count those with the given pair pattern
            log_count = (
                gammaln(pairs + 1) - gammaln(doubles + 1) - gammaln(singles + 1)
                - gammaln(pairs - doubles - singles + 1) + singles * math.log(2.0)
            )
            weight = math.exp(log_count - log_total)
            extra = np.arange(singles + 1)
            mix[k + extra, k] += weight * _binom_pmf(extra, singles, p)
    return mix


def correlated_click_transform(base: ClickMatrix, spec: DetectorSpec) -> ClickMatrix:
    """Apply adjacent-pair correlations to a click matrix.

    A pair with one clicked and one silent detector reports two clicks with
    probability ``spec.corr_p``. For an exchangeable array the clicked set is
    a uniform random subset given its size, so the mixing depends on the
    total click count only.
    """
    if spec.corr_p == 0:
        return base
    if base.n != spec.n:
        raise InvalidSpecError("click matrix and spec disagree on n")
    return ClickMatrix(_pair_mixing_matrix(spec) @ base.c)


def single_pair_probability(n: int, m) -> np.ndarray:
    """q1(m) = P(exactly one detector of a fixed pair occupied | m photons)."""
    m = np.asarray(m, dtype=float)
    return 2.0 * ((1.0 - 1.0 / n) ** m - (1.0 - 2.0 / n) ** m)


def brute_force_click_oracle(spec: DetectorSpec, m: int, bound: int = 10**6) -> np.ndarray:
    """P(k clicks | m photons) by exhaustive enumeration.

    Every photon either lands (and is detected) in detector i with
    probability weights[i]*kappas[i] or is lost; dark clicks and pair
    correlations are enumerated pattern by pattern.
    """
    n = spec.n
    if n ** m > bound:
        raise EnumerationBoundError(f"n^m = {n ** m} exceeds the enumeration bound {bound}")
    pis = [w * k for w, k in zip(spec.weights, spec.kappas)]
    lost = 1.0 - sum(pis)
    outcomes = list(range(n)) + [None]
    probs = pis + [lost]
    occupied_sets = {}
    for placement in itertools.product(range(n + 1), repeat=m):
        pr = 1.0
        for o in placement:
            pr *= probs[o]
        if pr == 0.0:
            continue
        occ = frozenset(outcomes[o] for o in placement if outcomes[o] is not None)
        occupied_sets[occ] = occupied_sets.get(occ, 0.0) + pr

    eps, p = spec.dark_eps, spec.corr_p
    result = np.zeros(n + 1)
    for occ, pr_occ in occupied_sets.items():
        free = [i for i in range(n) if i not in occ]
        for dark in itertools.product((False, True), repeat=len(free)):
            pr_dark = 1.0
            clicked = set(occ)
            for i, d in zip(free, dark):
                pr_dark *= eps if d else 1.0 - eps
                if d:
                    clicked.add(i)
            if pr_dark == 0.0:
                continue
            base = len(clicked)
            if p == 0:
                result[base] += pr_occ * pr_dark
                continue
            singles = sum(
                1 for a in range(0, n, 2) if (a in clicked) != (a + 1 in clicked)
            )
            for flips in itertools.product((False, True), repeat=singles):
                pr_flip = 1.0
                for f in flips:
                    pr_flip *= p if f else 1.0 - p
                result[base + sum(flips)] += pr_occ * pr_dark * pr_flip
    return result


def sequential_weights(taps: Sequence[float]) -> np.ndarray:
    """eta_j = t_j * prod_{i<j} (1 - t_i)."""
    taps = np.asarray(taps, dtype=float)
    if np.any((taps < 0) | (taps > 1)):
        raise InvalidSpecError("taps must lie in [0, 1]")
    passed = np.concatenate(([1.0], np.cumprod(1.0 - taps)[:-1]))
    return taps * passed


def effective_efficiency(spec: AnyDetector) -> float:
    """sum_j kappa_j eta_j."""
    if isinstance(spec, IdealPNR):
        return spec.kappa
    return float(np.dot(spec.kappas, spec.weights))


def ideal_click_matrix(n: Optional[int], dim: int) -> ClickMatrix:
    """c[k, m] = delta_km, the perfect-resolution limit."""
    rows = dim if n is None else n + 1
    c = np.zeros((rows, dim))
    idx = np.arange(min(rows, dim))
    c[idx, idx] = 1.0
    return ClickMatrix(c)
