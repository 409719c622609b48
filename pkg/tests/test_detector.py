import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom

from mpnr_lab.detector import (
    ClickMatrix,
    DetectorSpec,
    IdealPNR,
    brute_force_click_oracle,
    click_matrix,
    correlated_click_transform,
    effective_efficiency,
    ideal_click_matrix,
    occupancy_dp,
    sequential_weights,
    single_pair_probability,
)
from mpnr_lab.errors import EnumerationBoundError, InvalidSpecError


def stirling_occupancy(n, m):
    """P(k of n bins occupied | m balls) = C(n,k) k! S(m,k) / n^m, exact rationals."""
    from fractions import Fraction

    def stirling2(m, k):
        return sum((-1) ** i * math.comb(k, i) * (k - i) ** m for i in range(k + 1)) // math.factorial(k)

    return [Fraction(math.comb(n, k) * math.factorial(k) * stirling2(m, k), n ** m) for k in range(n + 1)]


# -- occupancy -----------------------------------------------------------------------

def test_occupancy_examples():
    assert np.allclose(occupancy_dp(2, 2), [0, 0.5, 0.5])
    assert np.allclose(occupancy_dp(3, 2), [0, 1 / 3, 2 / 3, 0])
    for m in range(1, 6):
        assert np.allclose(occupancy_dp(1, m), [0, 1])
    assert np.allclose(occupancy_dp(4, 0), [1, 0, 0, 0, 0])


@pytest.mark.parametrize("n,m", [(5, 7), (8, 20), (12, 30), (30, 12)])
def test_occupancy_against_exact_rationals(n, m):
    exact = np.array([float(x) for x in stirling_occupancy(n, m)])
    assert np.allclose(occupancy_dp(n, m), exact, rtol=1e-12, atol=1e-15)


# -- click matrices ------------------------------------------------------------------------

def test_single_lossy_detector():
    c = click_matrix(DetectorSpec.balanced(1, 0.8), 3).c
    assert c[1, 1] == pytest.approx(0.8)
    assert c[0, 1] == pytest.approx(0.2)


@pytest.mark.parametrize("n,eps", [(1, 0.1), (4, 0.03), (10, 0.2)])
def test_dark_counts_on_vacuum(n, eps):
    c = click_matrix(DetectorSpec.balanced(n, 0.9, eps), 4).c
    assert np.allclose(c[:, 0], binom.pmf(np.arange(n + 1), n, eps), atol=1e-15)


def test_two_detectors_two_photons():
    c = click_matrix(DetectorSpec.balanced(2), 3).c
    assert c[1, 2] == pytest.approx(0.5) and c[2, 2] == pytest.approx(0.5)


@pytest.mark.parametrize(
    "n,kappa,eps", list(itertools.product(range(1, 5), (1.0, 0.7), (0.0, 0.01)))
)
def test_click_matrix_matches_enumeration(n, kappa, eps):
    spec = DetectorSpec.balanced(n, kappa, eps)
    c = click_matrix(spec, 7).c
    for m in range(7):
        assert np.abs(c[:, m] - brute_force_click_oracle(spec, m)).max() <= 1e-12


@pytest.mark.parametrize(
    "weights,kappas,eps",
    [
        ((0.5, 0.3, 0.2), (1.0, 1.0, 1.0), 0.0),
        ((0.5, 0.3, 0.1), (0.9, 0.6, 1.0), 0.0),
        ((0.1, 0.2, 0.3, 0.4), (0.95, 0.95, 0.95, 0.95), 0.02),
        ((0.25, 0.25, 0.25, 0.25), (1.0, 0.5, 0.8, 0.9), 0.01),
        ((0.7, 0.0), (1.0, 1.0), 0.05),
    ],
)
def test_unbalanced_click_matrix_matches_enumeration(weights, kappas, eps):
    spec = DetectorSpec(len(weights), weights, kappas, eps)
    c = click_matrix(spec, 7).c
    for m in range(7):
        assert np.abs(c[:, m] - brute_force_click_oracle(spec, m)).max() <= 1e-12


@pytest.mark.parametrize("n,p", [(2, 0.3), (4, 0.5), (4, 1.0)])
def test_correlated_matches_enumeration(n, p):
    spec = DetectorSpec.balanced(n, 0.8, 0.01, p)
    c = click_matrix(spec, 6).c
    for m in range(6):
        assert np.abs(c[:, m] - brute_force_click_oracle(spec, m)).max() <= 1e-12


def test_enumeration_oracle_examples():
    assert np.allclose(brute_force_click_oracle(DetectorSpec.balanced(2), 1), [0, 1, 0])
    assert np.allclose(
        brute_force_click_oracle(DetectorSpec.balanced(3, dark_eps=0.1), 0), binom.pmf(range(4), 3, 0.1)
    )
    with pytest.raises(EnumerationBoundError):
        brute_force_click_oracle(DetectorSpec.balanced(10), 7)


def test_balanced_limit_mean_clicks():
    n, dim = 16, 40
    c = click_matrix(DetectorSpec.balanced(n), dim).c
    mean = np.arange(n + 1) @ c
    m = np.arange(dim)
    assert np.allclose(mean, n * (1 - (1 - 1 / n) ** m), atol=1e-12)


@given(
    n=st.integers(1, 24),
    kappa=st.floats(0.0, 1.0),
    eps=st.floats(0.0, 0.5),
    dim=st.integers(1, 40),
)
def test_click_matrix_is_column_stochastic(n, kappa, eps, dim):
    c = click_matrix(DetectorSpec.balanced(n, kappa, eps), dim).c
    assert c.shape == (n + 1, dim)
    assert np.all(c >= 0) and np.all(c <= 1 + 1e-15)
    assert np.abs(c.sum(axis=0) - 1).max() <= 1e-12
    if kappa == 1.0 and eps == 0.0:
        k, m = np.indices(c.shape)
        assert np.all(c[k > np.minimum(n, m)] == 0)


@given(
    weights=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6),
    kappas=st.data(),
    dim=st.integers(1, 24),
)
def test_unbalanced_is_column_stochastic(weights, kappas, dim):
    total = sum(weights)
    if total > 1:
        weights = [w / total for w in weights]
    ks = kappas.draw(st.lists(st.floats(0.0, 1.0), min_size=len(weights), max_size=len(weights)))
    c = click_matrix(DetectorSpec(len(weights), tuple(weights), tuple(ks)), dim).c
    assert np.all(c >= -1e-15)
    assert np.abs(c.sum(axis=0) - 1).max() <= 1e-12


@given(n=st.integers(1, 12), k1=st.floats(0.0, 1.0), k2=st.floats(0.0, 1.0))
def test_mean_clicks_monotone(n, k1, k2):
    lo, hi = sorted((k1, k2))
    dim = 30
    mean_lo = np.arange(n + 1) @ click_matrix(DetectorSpec.balanced(n, lo), dim).c
    mean_hi = np.arange(n + 1) @ click_matrix(DetectorSpec.balanced(n, hi), dim).c
    assert np.all(np.diff(mean_lo) >= -1e-12)
    assert np.all(mean_hi >= mean_lo - 1e-12)


def test_mean_clicks_monotone_per_detector_efficiency():
    base = DetectorSpec(3, (0.5, 0.3, 0.2), (0.6, 0.7, 0.8))
    better = DetectorSpec(3, (0.5, 0.3, 0.2), (0.6, 0.95, 0.8))
    k = np.arange(4)
    assert np.all(k @ click_matrix(better, 20).c >= k @ click_matrix(base, 20).c - 1e-12)


def test_uniform_kappa_unbalanced_matches_global_thinning():
    # the per-arm route with equal efficiencies equals thinning the lossless matrix
    weights = (0.5, 0.3, 0.2)
    lossy = click_matrix(DetectorSpec(3, weights, (0.7,) * 3), 12).c
    clean = click_matrix(DetectorSpec(3, weights, (1.0,) * 3), 12).c
    m = np.arange(12)
    thin = binom.pmf(m[:, None], m[None, :], 0.7)
    assert np.allclose(lossy, clean @ thin, atol=1e-14)


def test_ideal_pnr_thinning():
    c = click_matrix(IdealPNR(0.6), 5).c
    m = np.arange(5)
    assert np.allclose(c, binom.pmf(m[:, None], m[None, :], 0.6))
    assert np.allclose(ideal_click_matrix(None, 4).c, np.eye(4))
    assert np.allclose(ideal_click_matrix(2, 4).c, np.eye(3, 4))


# -- sequential architecture -----------------------------------------------------------------

def test_sequential_weights_examples():
    assert np.allclose(sequential_weights([0.5, 1.0]), [0.5, 0.5])
    assert np.allclose(sequential_weights([1 / 3, 1 / 2, 1]), [1 / 3] * 3)
    t, n = 0.3, 6
    w = sequential_weights([t] * n)
    assert np.allclose(w, t * (1 - t) ** np.arange(n))
    assert w.sum() == pytest.approx(1 - (1 - t) ** n)


@given(taps=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6), kappa=st.floats(0.0, 1.0))
def test_sequential_parallel_identity(taps, kappa):
    seq = click_matrix(DetectorSpec.from_taps(taps, kappa), 10)
    par = click_matrix(DetectorSpec(len(taps), tuple(sequential_weights(taps)), (kappa,) * len(taps)), 10)
    assert np.array_equal(seq.c, par.c)


def test_effective_efficiency():
    assert effective_efficiency(DetectorSpec.balanced(20, 0.95)) == pytest.approx(0.95)
    assert effective_efficiency(DetectorSpec.balanced(7)) == pytest.approx(1.0)
    assert effective_efficiency(DetectorSpec.from_taps([0.5, 0.5])) == pytest.approx(0.75)


# -- correlated pairs -------------------------------------------------------------------------

def test_correlation_zero_is_identity():
    base = click_matrix(DetectorSpec.balanced(4), 8)
    assert correlated_click_transform(base, DetectorSpec.balanced(4)) is base


@pytest.mark.parametrize("p", [0.0, 0.2, 0.7])
def test_correlated_two_detectors_one_photon(p):
    c = click_matrix(DetectorSpec.balanced(2, corr_p=p), 3).c
    assert np.arange(3) @ c[:, 1] == pytest.approx(1 + p)


@given(n=st.sampled_from([2, 4, 6, 8, 12]), p=st.floats(0.0, 1.0))
def test_correlated_first_moment_shift(n, p):
    dim = 25
    base = click_matrix(DetectorSpec.balanced(n), dim)
    cor = correlated_click_transform(base, DetectorSpec.balanced(n, corr_p=p))
    assert np.abs(cor.c.sum(axis=0) - 1).max() < 1e-12
    shift = np.arange(n + 1) @ (cor.c - base.c)
    m = np.arange(dim)
    assert np.allclose(shift, p * (n / 2) * single_pair_probability(n, m), atol=1e-12)


def test_single_pair_probability_enumerated():
    n, m = 4, 3
    hits = 0
    for placement in itertools.product(range(n), repeat=m):
        occupied = set(placement)
        hits += (0 in occupied) != (1 in occupied)
    assert single_pair_probability(n, m) == pytest.approx(hits / n ** m)


# -- validation --------------------------------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=0, weights=(), kappas=()),
        dict(n=2, weights=(0.7, 0.7), kappas=(1, 1)),
        dict(n=2, weights=(0.5, -0.1), kappas=(1, 1)),
        dict(n=2, weights=(0.5, 0.5), kappas=(1.2, 1)),
        dict(n=2, weights=(0.5, 0.5), kappas=(1, 1), dark_eps=1.0),
        dict(n=3, weights=(0.3, 0.3, 0.3), kappas=(1, 1, 1), corr_p=0.1),
        dict(n=2, weights=(0.5,), kappas=(1, 1)),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpecError):
        DetectorSpec(**kwargs)


def test_correlation_requires_balanced():
    spec = DetectorSpec(2, (0.6, 0.4), (1.0, 1.0), corr_p=0.1)
    with pytest.raises(InvalidSpecError):
        click_matrix(spec, 4)


def test_click_matrix_is_read_only():
    cm = click_matrix(DetectorSpec.balanced(3), 4)
    with pytest.raises(ValueError):
        cm.c[0, 0] = 1.0
    assert isinstance(cm, ClickMatrix) and cm.n == 3 and cm.dim == 4
