import math
import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from entropy_inject.entropy_core import (
    AlphabetMismatchError,
    ByteHistogram,
    DomainError,
    EmptyHistogramError,
    ProbabilityDistribution,
    SupportError,
    build_histogram,
    chi_squared_p_value,
    chi_squared_uniform_statistic,
    entropy_of_bytes,
    histogram_of_stream,
    regularized_lower_incomplete_gamma,
    regularized_upper_incomplete_gamma,
    relative_entropy,
    shannon_entropy,
    to_distribution,
)
from oracles import gamma_p_quadrature


def dist(*ps):
    return ProbabilityDistribution(tuple(ps))


weights = st.lists(st.floats(min_value=0.0, max_value=1e3, allow_nan=False), min_size=2, max_size=64).filter(
    lambda w: sum(w) > 0
)


# --- histograms --------------------------------------------------------------


def test_empty_histogram():
    h = build_histogram(b"")
    assert h.total == 0 and sum(h.counts) == 0 and len(h.counts) == 256


def test_histogram_counts_aab():
    h = build_histogram(b"aab")
    assert h.counts[ord("a")] == 2 and h.counts[ord("b")] == 1 and h.total == 3


def test_histogram_of_a_mebibyte_of_zeros():
    h = build_histogram(bytes(1 << 20))
    assert h.counts[0] == 1048576
    assert sum(h.counts[1:]) == 0


@given(st.binary(max_size=2000), st.integers(min_value=1, max_value=300))
def test_streamed_histogram_matches_whole(data, chunk):
    chunks = [data[i : i + chunk] for i in range(0, len(data), chunk)]
    assert histogram_of_stream(chunks) == build_histogram(data)


@given(st.binary(max_size=500))
def test_histogram_total_is_sum(data):
    h = build_histogram(data)
    assert h.total == sum(h.counts) == len(data)
    assert min(h.counts) >= 0


def test_histogram_rejects_negative_counts():
    with pytest.raises(ValueError):
        ByteHistogram.from_counts([1, -1, 3])


def test_to_distribution():
    h = ByteHistogram.from_counts([2, 1])
    p = to_distribution(h)
    assert p.probabilities == pytest.approx((2 / 3, 1 / 3), abs=1e-15)
    assert to_distribution(ByteHistogram.from_counts([0, 5, 0])).probabilities == (0.0, 1.0, 0.0)
    u = to_distribution(ByteHistogram.from_counts([7] * 256))
    assert all(x == 1 / 256 for x in u.probabilities)
    with pytest.raises(EmptyHistogramError):
        to_distribution(build_histogram(b""))


def test_distribution_invariants_enforced():
    with pytest.raises(ValueError):
        dist(0.5, 0.6)
    with pytest.raises(ValueError):
        dist(-0.1, 1.1)


@given(weights)
def test_from_weights_sums_to_one(w):
    p = ProbabilityDistribution.from_weights(w)
    assert abs(math.fsum(p.probabilities) - 1.0) <= 1e-12
    assert all(0.0 <= x <= 1.0 for x in p.probabilities)


# --- Shannon entropy ---------------------------------------------------------


def test_entropy_known_values():
    assert shannon_entropy(ProbabilityDistribution.uniform(256)).entropy_bits_per_symbol == 8.0
    assert shannon_entropy(dist(1.0, 0.0, 0.0)).entropy_bits_per_symbol == 0.0
    # hand evaluation: -(2/3)log2(2/3) - (1/3)log2(1/3) = log2(3) - 2/3
    h = shannon_entropy(ProbabilityDistribution.from_weights([2, 1])).entropy_bits_per_symbol
    assert h == pytest.approx(math.log2(3) - 2 / 3, abs=1e-12)
    assert h == pytest.approx(0.918296, abs=1e-6)


def test_entropy_of_english_text_is_moderate(english_bytes):
    r = entropy_of_bytes(english_bytes)
    assert 4.0 < r.entropy_bits_per_symbol < 5.0
    assert r.sample_size == len(english_bytes)


@given(weights)
def test_entropy_bounds(w):
    p = ProbabilityDistribution.from_weights(w)
    h = shannon_entropy(p).entropy_bits_per_symbol
    assert 0.0 <= h <= math.log2(len(w))


@given(st.integers(min_value=1, max_value=300))
def test_uniform_hits_upper_bound(k):
    h = shannon_entropy(ProbabilityDistribution.uniform(k)).entropy_bits_per_symbol
    assert h == pytest.approx(math.log2(k), abs=1e-9)


@given(weights)
def test_non_uniform_is_strictly_below_bound(w):
    p = ProbabilityDistribution.from_weights(w)
    assume(max(p.probabilities) - min(p.probabilities) > 1e-3)
    assert shannon_entropy(p).entropy_bits_per_symbol < math.log2(len(w)) - 1e-9


@given(weights, st.randoms(use_true_random=False))
def test_entropy_permutation_invariant(w, rnd):
    p = ProbabilityDistribution.from_weights(w)
    shuffled = list(p.probabilities)
    rnd.shuffle(shuffled)
    a = shannon_entropy(p).entropy_bits_per_symbol
    b = shannon_entropy(ProbabilityDistribution(tuple(shuffled))).entropy_bits_per_symbol
    assert a == pytest.approx(b, abs=1e-12)


# --- relative entropy --------------------------------------------------------


def test_relative_entropy_examples():
    p = dist(0.25, 0.25, 0.5)
    assert relative_entropy(p, p) == 0.0
    assert relative_entropy(dist(1.0, 0.0), dist(0.5, 0.5)) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(SupportError):
        relative_entropy(dist(0.5, 0.5), dist(1.0, 0.0))
    with pytest.raises(AlphabetMismatchError):
        relative_entropy(dist(0.5, 0.5), dist(0.2, 0.3, 0.5))
    with pytest.raises(DomainError):
        relative_entropy(p, p, smoothing=-1)


def test_smoothing_rescues_support_gap():
    # q' = (1.5, 0.5)/2 = (0.75, 0.25)
    d = relative_entropy(dist(0.5, 0.5), dist(1.0, 0.0), smoothing=0.5)
    expect = 0.5 * math.log2(0.5 / 0.75) + 0.5 * math.log2(0.5 / 0.25)
    assert d == pytest.approx(expect, abs=1e-14)


@given(weights, weights)
def test_gibbs_inequality(wp, wq):
    n = min(len(wp), len(wq))
    assume(sum(wp[:n]) > 0)
    p = ProbabilityDistribution.from_weights(wp[:n])
    q = ProbabilityDistribution.from_weights([x + 1e-3 for x in wq[:n]])
    d = relative_entropy(p, q)
    assert d >= -1e-12
    if d < 1e-9:
        assert max(abs(a - b) for a, b in zip(p.probabilities, q.probabilities)) < 1e-3


@given(weights, st.floats(min_value=1e-6, max_value=10))
def test_smoothed_divergence_non_negative(w, s):
    p = ProbabilityDistribution.from_weights(w)
    q = ProbabilityDistribution.uniform(len(w))
    assert relative_entropy(p, q, s) >= -1e-12


# --- incomplete gamma --------------------------------------------------------


def test_incomplete_gamma_examples():
    assert regularized_lower_incomplete_gamma(3.0, 0.0) == 0.0
    assert regularized_lower_incomplete_gamma(1.0, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-12)
    assert 0.48 < regularized_lower_incomplete_gamma(127.5, 127.5) < 0.52


@pytest.mark.parametrize("s,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
def test_incomplete_gamma_domain(s, x):
    with pytest.raises(DomainError):
        regularized_lower_incomplete_gamma(s, x)


def test_incomplete_gamma_against_quadrature():
    rnd = random.Random(8)
    pts = [(rnd.uniform(0.5, 300), rnd.uniform(0, 600)) for _ in range(100)]
    worst = max(abs(regularized_lower_incomplete_gamma(s, x) - gamma_p_quadrature(s, x)) for s, x in pts)
    assert worst <= 1e-8


@pytest.mark.parametrize("s,x", [(0.5, 0.01), (0.75, 3.0), (10.0, 11.0), (11.0, 10.0), (299.0, 300.0)])
def test_incomplete_gamma_near_switchover_and_small_shape(s, x):
    assert regularized_lower_incomplete_gamma(s, x) == pytest.approx(gamma_p_quadrature(s, x), abs=1e-10)


@given(st.floats(min_value=0.5, max_value=300), st.floats(min_value=0, max_value=600), st.floats(min_value=0.1, max_value=50))
def test_incomplete_gamma_monotone_in_x(s, x, dx):
    lo = regularized_lower_incomplete_gamma(s, x)
    hi = regularized_lower_incomplete_gamma(s, x + dx)
    assert 0.0 <= lo <= hi <= 1.0


@given(st.floats(min_value=0.5, max_value=300), st.floats(min_value=0, max_value=2000))
def test_lower_plus_upper_is_one(s, x):
    total = regularized_lower_incomplete_gamma(s, x) + regularized_upper_incomplete_gamma(s, x)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_incomplete_gamma_tends_to_one():
    for s in (0.5, 5.0, 200.0):
        assert regularized_lower_incomplete_gamma(s, s + 60 * math.sqrt(s) + 100) == pytest.approx(1.0, abs=1e-15)


# --- chi-squared -------------------------------------------------------------


def test_chi_squared_examples():
    assert chi_squared_p_value(0.0, 7) == 1.0
    assert chi_squared_p_value(1e6, 255) < 1e-12
    assert chi_squared_p_value(255.0, 255) == pytest.approx(0.487, abs=0.01)


def test_chi_squared_matches_scipy():
    stats = pytest.importorskip("scipy.stats")
    for stat, dof in [(3.84, 1), (255.0, 255), (300.0, 255), (200.0, 255), (20.0, 10)]:
        assert chi_squared_p_value(stat, dof) == pytest.approx(stats.chi2.sf(stat, dof), rel=1e-9)


def test_chi_squared_domain():
    with pytest.raises(DomainError):
        chi_squared_p_value(-1.0, 3)
    with pytest.raises(DomainError):
        chi_squared_p_value(1.0, 0)


@given(st.floats(min_value=0, max_value=1000), st.floats(min_value=0.01, max_value=100), st.integers(1, 400))
def test_p_value_decreasing_in_statistic(stat, d, dof):
    assert chi_squared_p_value(stat + d, dof) <= chi_squared_p_value(stat, dof)


def test_uniform_statistic():
    assert chi_squared_uniform_statistic(ByteHistogram.from_counts([4] * 256)) == 0.0
    # all mass on one symbol: (n - n/K)^2/(n/K) + (K-1)(n/K) = n(K-1)
    assert chi_squared_uniform_statistic(build_histogram(bytes(512))) == pytest.approx(512 * 255)
