import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ftqlab.noise import (
    ErrorSample, NoiseSpec, adversarial_truncation, audit_local_stochastic, cluster_batch, compose_batches,
    compose_parameter, compose_samples, estimate_local_stochastic_parameter, iid_batch, ring_neighbors,
    sample_iid_pauli, sample_local_stochastic_cluster, streamed_counts, subset_counts, tail_sum, tail_sum_exact,
)
from ftqlab.pauli import PauliOp
from ftqlab.rng import stream


# samplers -------------------------------------------------------------------------------------


def test_iid_extremes(rng):
    for _ in range(20):
        assert sample_iid_pauli(10, 0.0, rng).support == frozenset()
        assert sample_iid_pauli(10, 1.0, rng).support == frozenset(range(10))


def test_iid_mean_support_size():
    support, _, _ = iid_batch(20, 0.1, 1_000_000, stream(1, 0))
    mean = support.sum(axis=1).mean()
    sigma = math.sqrt(20 * 0.1 * 0.9 / 1_000_000)
    assert abs(mean - 2.0) <= 3 * sigma


def test_iid_letters_uniform():
    support, x, z = iid_batch(10, 0.5, 100_000, stream(2, 0))
    counts = [int(((x & ~z) & support).sum()), int((x & z).sum()), int((z & ~x).sum())]
    assert not (~support & (x | z)).any()
    total = sum(counts)
    chi2 = sum((c - total / 3) ** 2 / (total / 3) for c in counts)
    assert chi2 < 13.8  # 99.9% point of chi-square with 2 degrees of freedom


def test_cluster_spread_zero_is_iid():
    a = cluster_batch(20, 0.05, 0.0, 5000, stream(3, 0))[0]
    b = iid_batch(20, 0.05, 5000, stream(3, 0))[0]
    assert np.array_equal(a, b)


def test_cluster_zero_delta(rng):
    assert sample_local_stochastic_cluster(20, 0.0, 0.5, rng).support == frozenset()


def test_cluster_grows_from_seeds():
    support, _, _ = cluster_batch(5, 1.0, 0.999999, 10, stream(4, 0))
    assert support.all()
    nb = [(1,), (0, 2), (1,)]
    s, _, _ = cluster_batch(3, 0.3, 0.5, 20_000, stream(4, 1), neighbors=nb)
    assert s.mean() > 0.3


def test_ring_neighbors():
    assert ring_neighbors(4)[0] == (3, 1)
    assert ring_neighbors(2) == [(1,), (0,)]
    assert ring_neighbors(1) == [()]


def test_sample_provenance_and_support(rng):
    s = sample_local_stochastic_cluster(12, 0.3, 0.2, rng)
    assert s.provenance.startswith("local_stochastic_cluster")
    assert s.pauli.support == s.support
    with pytest.raises(ValueError):
        ErrorSample(frozenset({0}), PauliOp(2))


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("iid_pauli", 1.5)
    with pytest.raises(ValueError):
        NoiseSpec("cluster", 0.1)
    with pytest.raises(ValueError):
        NoiseSpec("local_stochastic_cluster", 0.1, spread=1.0)


def test_determinism():
    a = iid_batch(30, 0.1, 1000, stream(9, 5))
    b = iid_batch(30, 0.1, 1000, stream(9, 5))
    assert all(np.array_equal(u, v) for u, v in zip(a, b))
    assert sample_iid_pauli(30, 0.2, stream(9, 1)) == sample_iid_pauli(30, 0.2, stream(9, 1))


# estimator -----------------------------------------------------------------------------------------


def test_subset_counts_brute_force(rng):
    a = rng.random((300, 6)) < 0.4
    counts = subset_counts(a, 4)
    for t, c in counts.items():
        assert c == int(a[:, list(t)].all(axis=1).sum())
    assert len(counts) == 6 + 15 + 20 + 15


def test_iid_estimate_close_to_delta():
    delta = 0.05
    counts = streamed_counts(lambda size, c: iid_batch(8, delta, size, stream(11, c))[0], 1_000_000, 3)
    est = estimate_local_stochastic_parameter(counts, 3)
    assert 0.9 * delta <= est.delta_hat <= 1.1 * delta
    assert est.delta_upper >= est.delta_hat


def test_estimate_edge_cases():
    assert estimate_local_stochastic_parameter(np.zeros((10_000, 5), dtype=bool)).delta_hat == 0
    fixed = np.zeros((10_000, 5), dtype=bool)
    fixed[:, 0] = True
    est = estimate_local_stochastic_parameter(fixed)
    assert est.delta_hat == 1 and est.worst_set == (0,)
    with pytest.raises(ValueError, match="insufficient"):
        estimate_local_stochastic_parameter(np.zeros((100, 5), dtype=bool))
    with pytest.raises(ValueError):
        estimate_local_stochastic_parameter(fixed, max_t=5)


def test_estimate_accepts_sample_lists(rng):
    samples = [sample_iid_pauli(4, 0.0, rng) for _ in range(10_000)]
    assert estimate_local_stochastic_parameter(samples).delta_hat == 0


def test_audit_flags_correlated_noise():
    rng = stream(12, 0)
    seeds = rng.random((100_000, 1)) < 0.05
    a = np.repeat(seeds, 6, axis=1)  # all-or-nothing: P(T in A) = 0.05 for every T
    rep = audit_local_stochastic(a, 0.05)
    assert not rep.passed and rep.worst_margin < 0


# composition --------------------------------------------------------------------------------------------


def test_compose_parameter():
    assert compose_parameter(0.01, 0.02) == pytest.approx(0.03)
    assert compose_parameter(0.0, 0.07) == 0.07


def test_composed_samplers_estimate():
    def batch(size, c):
        _, xa, za = iid_batch(10, 0.01, size, stream(13, 2 * c))
        _, xb, zb = iid_batch(10, 0.02, size, stream(13, 2 * c + 1))
        return compose_batches(xa, za, xb, zb)[0]

    counts, shots = streamed_counts(batch, 400_000, 3)
    est = estimate_local_stochastic_parameter((counts, shots), 3)
    # the worst subset is within its (z=4, as in the audit) interval of the composed parameter
    from ftqlab.stats import wilson_interval
    t = est.worst_set
    assert wilson_interval(counts[t], shots, z=4.0)[0] ** (1 / len(t)) <= 0.03
    assert est.delta_upper >= 0.9 * 0.03
    assert audit_local_stochastic((counts, shots), 0.03).passed


def test_compose_samples(rng):
    a = ErrorSample(frozenset({0}), PauliOp.from_string("XI"))
    b = ErrorSample(frozenset({0, 1}), PauliOp.from_string("XZ"))
    c = compose_samples(a, b)
    assert c.support == frozenset({1})


# cluster sampler audit -------------------------------------------------------------------------------------


def exact_cluster_probability(n, delta, spread, T):
    """P(T subset of A) for the ring cluster sampler, by enumerating every seed and coin that can reach T."""
    nb = ring_neighbors(n)
    T = set(T)
    sources = sorted(T | {j for t in T for j in nb[t]})
    coins = [(j, k) for j in sources for k in nb[j] if k in T]
    total = Fraction(0)
    d, s = Fraction(repr(delta)), Fraction(repr(spread))
    for seeds in product((0, 1), repeat=len(sources)):
        on = {j for j, b in zip(sources, seeds) if b}
        p_seed = math.prod(d if b else 1 - d for b in seeds)
        for flips in product((0, 1), repeat=len(coins)):
            covered = set(on & T)
            for (j, k), f in zip(coins, flips):
                if f and j in on:
                    covered.add(k)
            if covered >= T:
                total += p_seed * math.prod(s if f else 1 - s for f in flips)
    return total


def test_cluster_exact_oracle_matches_monte_carlo():
    n, delta, spread = 20, 0.05, 0.3
    counts = streamed_counts(lambda size, c: cluster_batch(n, delta, spread, size, stream(14, c))[0], 400_000, 3)
    _, shots = counts
    from ftqlab.stats import wilson_interval
    for T in [(5,), (5, 6), (5, 6, 7), (5, 7)]:
        exact = float(exact_cluster_probability(n, delta, spread, T))
        lo, hi = wilson_interval(counts[0][T], shots, z=4.0)
        assert lo <= exact <= hi


def test_cluster_example_bound_is_unattainable_exactly():
    # three consecutive qubits already exceed the example's 0.15
    p = exact_cluster_probability(20, 0.05, 0.3, (5, 6, 7))
    assert float(p) ** (1 / 3) > 0.15


@pytest.mark.xfail(strict=True, reason="ring cluster sampler at delta=0.05, spread=0.3 has sup_T P^(1/|T|) near 0.197, "
                                      "above the example's 0.15; see decisions ledger")
def test_cluster_example_literal():
    counts = streamed_counts(lambda size, c: cluster_batch(20, 0.05, 0.3, size, stream(15, c))[0], 200_000, 3)
    assert estimate_local_stochastic_parameter(counts, 3).delta_hat < 0.15


# adversarial truncation and tails ---------------------------------------------------------------------------


def test_truncation_examples():
    t, b = adversarial_truncation(100, 0.05)
    assert t == 24 and b == pytest.approx(math.exp(-5 / 3)) and b == pytest.approx(0.1889, abs=1e-4)
    assert adversarial_truncation(100, 0.0) == (0, 1.0)
    assert adversarial_truncation(300, 0.05)[1] == pytest.approx(6.74e-3, abs=1e-5)


def test_tail_examples():
    assert tail_sum(10, 0.3, 10) == 0
    assert tail_sum(4, 0.5, 2) == pytest.approx(0.5625, rel=1e-14)
    assert tail_sum(100, 0.05, 24) <= math.exp(-100 * 0.05 / 3)
    with pytest.raises(ValueError):
        tail_sum(20_000, 0.1, 3)


@given(st.integers(1, 400), st.floats(1e-4, 0.5), st.integers(-1, 400))
def test_tail_matches_rational(n, delta, t):
    t = min(t, n)
    exact = tail_sum_exact(n, delta, t)
    got = tail_sum(n, delta, t)
    if exact < Fraction(2.2250738585072014e-308):
        # below the normal double range only absolute accuracy is possible
        assert abs(Fraction(got) - exact) <= Fraction(1, 10**300)
    else:
        assert abs(Fraction(got) - exact) <= Fraction(1, 10**12) * exact


@given(st.integers(1, 600), st.floats(1e-3, 0.5))
def test_chernoff_bound_holds(n, delta):
    if n * delta < 1:
        return
    t, bound = adversarial_truncation(n, delta)
    assert tail_sum_exact(n, delta, t) <= Fraction(bound)
