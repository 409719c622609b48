"""Moment estimation and click distributions through an MPNR array."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .detector import ClickMatrix, DetectorSpec, click_matrix, single_pair_probability
from .errors import DimensionMismatchError, SeriesNotConvergedError
from .fock import FockVector, SqueezeLike, _as_r, moment_true, photon_distribution, squeezed_vacuum

SERIES_TOL = 1e-12


@dataclass(frozen=True)
class MomentReport:
    h: int
    n: int
    estimate: float
    truth: float

    @property
    def rel_error(self) -> float:
        return abs(self.estimate - self.truth) / self.truth


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line through (log n, log error)."""

    exponent: float
    intercept: float
    n_range: tuple
    reports: tuple = field(default=(), compare=False)


def fit_loglog(ns: Sequence[float], errors: Sequence[float], reports=()) -> ScalingFit:
    ns = np.asarray(ns, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ns.size < 5:
        raise ValueError("a scaling fit needs at least 5 points")
    order = np.argsort(ns)
    ns, errors = ns[order], errors[order]
    slope, intercept = np.polyfit(np.log(ns), np.log(errors), 1)
    return ScalingFit(float(slope), float(intercept), (int(ns[0]), int(ns[-1])), tuple(reports))


def mpnr_moment(dist, cm: ClickMatrix, h: int) -> float:
    """<(sum_k k P_k)^h> = sum_k k^h p_k for the click distribution of ``dist``."""
    if h < 1:
        raise ValueError("moment order h must be >= 1")
    dist = np.asarray(dist, dtype=float)
    if dist.size != cm.dim:
        raise DimensionMismatchError(
            f"distribution has {dist.size} entries, click matrix expects {cm.dim}"
        )
    k = np.arange(cm.n_outcomes, dtype=float)
    return float(np.sum(k ** h * (cm.c @ dist)))


def moment_report(state, spec: DetectorSpec, h: int) -> MomentReport:
    dist = photon_distribution(state)
    cm = click_matrix(spec, dist.size)
    return MomentReport(h, spec.n, mpnr_moment(dist, cm, h), moment_true(dist, h))


def moment_scaling_study(
    state, h: int, n_list: Sequence[int], kappa: float = 1.0, map_fn=map
) -> ScalingFit:
    """Relative moment error against array size for a balanced array."""
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 5:
        raise ValueError("n_list needs at least 5 entries")
    specs = [DetectorSpec.balanced(n, kappa) for n in n_list]
    reports = list(map_fn(moment_report, [state] * len(specs), specs, [h] * len(specs)))
    return fit_loglog(n_list, [r.rel_error for r in reports], reports)


# -- squeezed vacuum on a balanced array ---------------------------------------

def squeezed_distribution(r: SqueezeLike, dim: int) -> np.ndarray:
    """p_{2l} = (2l)! tanh^{2l} r / (4^l (l!)^2 cosh r), zero on odd numbers."""
    r = _as_r(r)
    p = np.zeros(dim)
    if r == 0:
        p[0] = 1.0
        return p
    ell = np.arange((dim + 1) // 2)
    log_p = (
        gammaln(2 * ell + 1) + 2 * ell * math.log(math.tanh(abs(r)))
        - ell * math.log(4.0) - 2 * gammaln(ell + 1) - math.log(math.cosh(r))
    )
    p[2 * ell] = np.exp(log_p)
    return p


def squeezed_series_length(r: SqueezeLike, tol: float = SERIES_TOL) -> int:
    """Smallest L with sum_{l > L} p_{2l} < tol."""
    r = _as_r(r)
    if r == 0:
        return 0
    ell = 0
    acc = 0.0
    while ell < 100000:
        acc += float(squeezed_distribution(r, 2 * ell + 1)[2 * ell])
        if 1.0 - acc < tol:
            return ell
        ell += 1
    raise SeriesNotConvergedError("squeezed series does not converge")


def _log_composition_sums(k_max: int, total_max: int) -> np.ndarray:
    """log of sum over j_1+..+j_k = N (all j_i >= 1) of 1/prod j_i!, for k <= k_max.

    Built by repeated convolution of the sequence 1/j! (j >= 1) in the log
    domain; shape (k_max + 1, total_max + 1).
    """
    out = np.full((k_max + 1, total_max + 1), -np.inf)
    out[0, 0] = 0.0
    j = np.arange(total_max + 1)
    base = np.where(j >= 1, -gammaln(j + 1), -np.inf)
    for k in range(1, k_max + 1):
        prev = out[k - 1]
        for total in range(k, total_max + 1):
            out[k, total] = logsumexp(prev[:total][::-1][: total] + base[1 : total + 1])
    return out


def squeezed_click_distribution_formula(
    r: SqueezeLike, n: int, L_max: Optional[int] = None, tol: float = SERIES_TOL
) -> np.ndarray:
    """Click distribution p_k (k = 0..n) of a squeezed vacuum on a lossless balanced array.

    p_k = C(n,k) sum_l (1/cosh r) tanh^{2l} r ((2l)!)^2 / (4^l (l!)^2 n^{2l})
          * sum_{j_1+..+j_k = 2l, j_i >= 1} 1/(j_1! ... j_k!)
    """
    r = _as_r(r)
    needed = squeezed_series_length(r, tol)
    if L_max is None:
        L_max = needed
    elif L_max < needed:
        raise SeriesNotConvergedError(
            f"L_max={L_max} leaves more than {tol:g} of the squeezed distribution; need {needed}"
        )
    out = np.zeros(n + 1)
    if r == 0:
        out[0] = 1.0
        return out
    ell = np.arange(L_max + 1)
    totals = 2 * ell
    log_prefactor = (
        -math.log(math.cosh(r)) + 2 * ell * math.log(math.tanh(abs(r)))
        + 2 * gammaln(totals + 1) - ell * math.log(4.0) - 2 * gammaln(ell + 1)
        - totals * math.log(n)
    )
    comps = _log_composition_sums(n, int(totals[-1]))
    for k in range(n + 1):
        log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        terms = log_prefactor + comps[k, totals]
        out[k] = math.exp(log_binom + logsumexp(terms)) if np.isfinite(terms).any() else 0.0
    return out


def squeezed_click_formula(
    r: SqueezeLike, n: int, k: int, L_max: Optional[int] = None
) -> float:
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return float(squeezed_click_distribution_formula(r, n, L_max)[k])


def squeezed_click_pipeline(
    r: SqueezeLike, spec: DetectorSpec, dim: Optional[int] = None, tail_tol: float = SERIES_TOL
) -> np.ndarray:
    """Click distribution of squeezed_vacuum(r) through the click matrix of ``spec``."""
    state = squeezed_vacuum(r, dim, tail_tol=tail_tol)
    dist = photon_distribution(state)
    return click_matrix(spec, dist.size).c @ dist


def odd_photon_error(dist) -> float:
    """Total probability on odd click numbers."""
    dist = np.asarray(dist, dtype=float)
    return float(np.sum(dist[1::2]))


def odd_error_scaling(
    r: SqueezeLike, n_list: Sequence[int], kappa: float = 1.0, map_fn=map
) -> ScalingFit:
    n_list = sorted(int(n) for n in n_list)
    specs = [DetectorSpec.balanced(n, kappa) for n in n_list]
    dists = list(map_fn(squeezed_click_pipeline, [r] * len(specs), specs))
    errors = [odd_photon_error(d) for d in dists]
    return fit_loglog(n_list, errors)


# -- correlated pairs -----------------------------------------------------------

def pair_observable_bias(dist, n: int, p: float) -> float:
    """p * <sum over pairs of (I~ x |0><0| + |0><0| x I~)> on a lossless balanced array.

    For m photons each of the n/2 pairs has exactly one occupied detector
    with probability q1(m) = 2[(1-1/n)^m - (1-2/n)^m].
    """
    dist = np.asarray(dist, dtype=float)
    m = np.arange(dist.size)
    return float(p * np.sum(dist * (n / 2) * single_pair_probability(n, m)))


@dataclass(frozen=True)
class CorrelatedBias:
    p: float
    n: int
    biased_moment: float
    unbiased_moment: float

    @property
    def bias(self) -> float:
        return self.biased_moment - self.unbiased_moment


def correlated_bias(dist, n: int, p: float, h: int = 1) -> CorrelatedBias:
    """h-th click moment with and without adjacent-pair correlations."""
    dist = np.asarray(dist, dtype=float)
    base = click_matrix(DetectorSpec.balanced(n), dist.size)
    cor = click_matrix(DetectorSpec.balanced(n, corr_p=p), dist.size)
    return CorrelatedBias(p, n, mpnr_moment(dist, cor, h), mpnr_moment(dist, base, h))
