import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonconvlab.measures import (
    BernoulliLaw,
    FiniteMarkovChain,
    GaussMarginalLaw,
    InvalidLawError,
    MarkovLaw,
    NotPrimitiveError,
    TruncatedCFLaw,
    cylinder_mass,
    is_primitive,
    sample_stream,
    stationary_power_iteration,
    stationary_vector,
    truncated_bernoulli,
)

F = Fraction
R41 = [[F(4, 10), F(1, 10)], [F(1, 10), F(4, 10)]]


def test_degenerate_bernoulli_stream():
    law = BernoulliLaw([1, 0])
    for seed in range(5):
        assert sample_stream(law, seed).prefix(5).tolist() == [0] * 5


def test_fair_coin_frequency():
    digits = sample_stream(BernoulliLaw([F(1, 2), F(1, 2)]), 7).prefix(10**6)
    assert 0.498 <= float(np.mean(digits == 0)) <= 0.502


def test_identity_transition_rejected():
    with pytest.raises(NotPrimitiveError):
        MarkovLaw.from_transition([[1, 0], [0, 1]])
    with pytest.raises(NotPrimitiveError):
        FiniteMarkovChain([[1, 0], [0, 1]])


def test_law_validation():
    with pytest.raises(InvalidLawError):
        BernoulliLaw([F(1, 2), F(1, 3)])
    with pytest.raises(InvalidLawError):
        BernoulliLaw([F(3, 2), F(-1, 2)])
    with pytest.raises(InvalidLawError):
        MarkovLaw([[F(1, 10), F(3, 10)], [F(2, 10), F(4, 10)]])


def test_cylinder_mass_examples():
    assert cylinder_mass(BernoulliLaw([F(1, 2), F(1, 2)]), (0, 1, 0)).mass == F(1, 8)
    zero = cylinder_mass(BernoulliLaw([1, 0]), (0, 1))
    assert zero.mass == 0 and zero.log_mass == float("-inf")
    assert cylinder_mass(MarkovLaw(R41), (0, 0)).mass == F(2, 5)


def test_markov_law_derived_quantities():
    law = MarkovLaw(R41)
    assert law.q == (F(1, 2), F(1, 2))
    assert law.Q == ((F(4, 5), F(1, 5)), (F(1, 5), F(4, 5)))


def test_truncated_bernoulli_rule():
    law = truncated_bernoulli([1], 2)
    assert law.weights == (F(9, 10), F(1, 10))
    assert law.offset == 1
    assert truncated_bernoulli([F(1, 2), F(1, 2)], 1).weights == (F(1),)
    gauss = truncated_bernoulli(GaussMarginalLaw(), 1000)
    assert abs(sum(gauss.weights) - 1) <= 1e-12
    assert all(w > 0 for w in gauss.weights)


def test_truncated_bernoulli_converges_pointwise():
    rbar = [F(1, 2), F(1, 4), F(1, 4)]
    far = truncated_bernoulli(rbar, 400)
    assert all(abs(far.weights[k] - rbar[k]) < 1e-4 for k in range(3))


def test_truncated_cf_digits_stay_below_index():
    digits = sample_stream(TruncatedCFLaw(GaussMarginalLaw()), 3).prefix(5000)
    idx = np.maximum(np.arange(5000), 1)
    assert np.all(digits >= 1) and np.all(digits <= idx)


def test_truncated_cf_point_mass_limit():
    digits = sample_stream(TruncatedCFLaw([1]), 0).prefix(20000)
    assert float(np.mean(digits == 1)) > 0.999


def test_gauss_marginal_weights():
    g = GaussMarginalLaw()
    w1 = np.log2(1 + 1 / (1 * 3))
    assert g.weight(1) == pytest.approx(w1, rel=1e-14)
    assert g.prefix_weights(50).sum() + g.tail_mass(50) == pytest.approx(1.0, abs=1e-14)
    digits = sample_stream(g, 1).prefix(200_000)
    assert abs(float(np.mean(digits == 1)) - w1) < 0.005


def test_stationary_solve_matches_power_iteration():
    P = [[F(1, 2), F(1, 3), F(1, 6)], [F(1, 4), F(1, 4), F(1, 2)], [F(2, 5), F(1, 5), F(2, 5)]]
    exact = stationary_vector(P)
    iterated = stationary_power_iteration(P)
    assert sum(exact) == 1
    assert np.max(np.abs(np.asarray([float(v) for v in exact]) - iterated)) <= 1e-10


def test_is_primitive():
    assert is_primitive([[0, 1], [F(1, 2), F(1, 2)]])
    assert not is_primitive([[0, 1], [1, 0]])


def test_markov_stream_is_independent_of_read_order():
    law = MarkovLaw(R41)
    idx = np.array([10**6, 3, 500, 2, 10**6 + 1], dtype=np.int64)
    a = sample_stream(law, 5).at(idx)
    s = sample_stream(law, 5)
    s.prefix(10)
    b = s.at(idx)
    assert a.tolist() == b.tolist()


def test_markov_transition_frequencies():
    law = MarkovLaw(R41)
    d = sample_stream(law, 9).prefix(200_000)
    stay = np.mean(d[1:] == d[:-1])
    assert abs(stay - 0.8) < 0.01


def test_finite_chain_observation_map():
    chain = FiniteMarkovChain([[F(1, 2), F(1, 2), 0], [0, F(1, 2), F(1, 2)], [F(1, 2), 0, F(1, 2)]],
                              obs=[0, 1, 1])
    assert chain.alphabet == 2
    assert chain.mean_digit_law().weights == (F(1, 3), F(2, 3))
    digits = sample_stream(chain, 0).prefix(1000)
    assert set(digits.tolist()) <= {0, 1}


def test_sampling_is_reproducible():
    law = BernoulliLaw([F(1, 3)] * 3)
    assert sample_stream(law, 42).prefix(100).tolist() == sample_stream(law, 42).prefix(100).tolist()
    assert sample_stream(law, 42).prefix(100).tolist() != sample_stream(law, 43).prefix(100).tolist()


def test_word_frequencies_match_masses():
    law = MarkovLaw(R41)
    N = 10**6
    d = sample_stream(law, 17).prefix(N + 2)
    for length in (1, 2, 3):
        codes = sum(d[k: N + k] * 2 ** (length - 1 - k) for k in range(length))
        counts = np.bincount(codes, minlength=2**length)
        for code, word in enumerate(itertools.product(range(2), repeat=length)):
            mass = float(cylinder_mass(law, word).mass)
            assert abs(counts[code] / N - mass) <= 3 * np.sqrt(mass / N)


@st.composite
def rational_vectors(draw, m):
    ints = draw(st.lists(st.integers(1, 30), min_size=m, max_size=m))
    return [F(v, sum(ints)) for v in ints]


@given(st.integers(2, 4).flatmap(rational_vectors),
       st.lists(st.integers(0, 3), min_size=0, max_size=6),
       st.lists(st.integers(0, 3), min_size=0, max_size=6))
def test_bernoulli_mass_is_multiplicative(w, u, v):
    law = BernoulliLaw(w)
    u = [a % law.m for a in u]
    v = [a % law.m for a in v]
    assert cylinder_mass(law, u + v).mass == cylinder_mass(law, u).mass * cylinder_mass(law, v).mass


@given(st.lists(st.integers(1, 9), min_size=4, max_size=4),
       st.lists(st.integers(0, 1), min_size=1, max_size=6))
def test_markov_masses_are_consistent(ints, word):
    # symmetric joint matrices have equal marginals
    a, b, c, _ = ints
    total = a + 2 * b + c
    law = MarkovLaw([[F(a, total), F(b, total)], [F(b, total), F(c, total)]])
    mass = cylinder_mass(law, word).mass
    assert sum(cylinder_mass(law, word + [j]).mass for j in range(2)) == mass


@given(st.integers(2, 3).flatmap(rational_vectors))
@settings(max_examples=25, deadline=None)
def test_product_form_markov_matches_bernoulli(q):
    m = len(q)
    mlaw = MarkovLaw([[qi * qj for qj in q] for qi in q])
    blaw = BernoulliLaw(q)
    for length in range(1, 9 if m == 2 else 7):
        for word in itertools.product(range(m), repeat=length):
            assert cylinder_mass(mlaw, word).mass == cylinder_mass(blaw, word).mass
