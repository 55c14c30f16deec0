import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nonconvlab.errors import ResourceCapError
from nonconvlab.measures import BernoulliLaw, GaussMarginalLaw, MarkovLaw
from nonconvlab.observables import (
    MonteCarloEstimate,
    Observable,
    common_denominator,
    decompose,
    mean_F,
)

F = Fraction
HALF = BernoulliLaw([F(1, 2), F(1, 2)])


def test_mean_examples():
    assert mean_F(Observable.indicator_product((0, 0), 2), HALF) == F(1, 4)
    seven = BernoulliLaw([F(7, 10), F(3, 10)])
    assert mean_F(Observable.indicator_product((0, 1, 0), 2), seven) == F(147, 1000)
    assert mean_F(Observable.constant(F(5, 3), 2, 3), BernoulliLaw([F(1, 3)] * 3)) == F(5, 3)


def test_mean_uses_markov_marginal():
    law = MarkovLaw([[F(4, 10), F(1, 10)], [F(1, 10), F(4, 10)]])
    assert mean_F(Observable.indicator_product((0, 1), 2), law) == F(1, 4)


def test_indicator_mean_over_infinite_alphabet():
    obs = Observable.indicator_product((1, 2))
    law = BernoulliLaw([F(1, 2), F(1, 3), F(1, 6)], offset=1)
    assert mean_F(obs, law) == F(1, 6)
    g = GaussMarginalLaw()
    assert mean_F(obs, g) == pytest.approx(g.weight(1) * g.weight(2), rel=1e-14)


def test_monte_carlo_fallback_within_four_stderr():
    obs = Observable.from_function(lambda a, b: a * b + a, 2, 3)
    law = BernoulliLaw([F(1, 2), F(1, 4), F(1, 4)])
    exact = mean_F(obs, law)
    est = mean_F(Observable(2, None, func=lambda a, b: a * b + a), law, samples=200_000, seed=3)
    assert isinstance(est, MonteCarloEstimate)
    assert abs(est.estimate - float(exact)) <= 4 * est.stderr


def test_cap_is_enforced():
    obs = Observable.constant(1, 3, 3)
    with pytest.raises(ResourceCapError):
        mean_F(obs, BernoulliLaw([F(1, 3)] * 3), cap=20)


def test_decompose_constant():
    dec = decompose(Observable.constant(F(7, 2), 3, 2), HALF)
    assert dec.mean == F(7, 2)
    assert all(np.all(comp == 0) for comp in dec.components)


def test_decompose_unary():
    obs = Observable.from_table([1, 4, 7])
    law = BernoulliLaw([F(1, 2), F(1, 4), F(1, 4)])
    dec = decompose(obs, law)
    assert dec.mean == F(13, 4)
    assert list(dec.components[0]) == [F(1) - F(13, 4), F(4) - F(13, 4), F(7) - F(13, 4)]


def test_decompose_indicator_pair():
    dec = decompose(Observable.indicator_product((0, 0), 2), HALF)
    assert dec.mean == F(1, 4)
    f1 = [F(1, 4), F(-1, 4)]
    assert list(dec.components[0]) == f1
    for x1, x2 in itertools.product(range(2), repeat=2):
        assert dec.components[1][x1, x2] == (x1 == 0) * ((x2 == 0) - F(1, 2))


def test_from_table_dict_keys():
    obs = Observable.from_table({"0,1": "1/3", "1,1": 2}, alphabet=2)
    assert obs.table[0, 1] == F(1, 3)
    assert obs.table[1, 1] == 2 and obs.table[0, 0] == 0
    assert obs.exact


def test_holder_constants():
    K, iota, kappa = Observable.from_table([[1, -3], [2, 0]]).holder()
    assert (K, iota, kappa) == (6, 1, 1)


def test_common_denominator():
    obs = Observable.from_table([[F(1, 2), F(1, 3)], [1, F(5, 6)]])
    assert common_denominator(obs.table) == 6


def test_decompose_requires_finite_law():
    with pytest.raises(ValueError):
        decompose(Observable.indicator_product((1,)), GaussMarginalLaw())


@st.composite
def observable_and_law(draw):
    m = draw(st.integers(2, 3))
    ell = draw(st.integers(1, 3))
    ints = draw(st.lists(st.integers(0, 9), min_size=m, max_size=m).filter(lambda v: sum(v) > 0))
    weights = [F(v, sum(ints)) for v in ints]
    cells = draw(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=12),
                          min_size=m**ell, max_size=m**ell))
    table = dict(zip(itertools.product(range(m), repeat=ell), cells))
    return m, ell, weights, table


@given(observable_and_law())
@settings(max_examples=60, deadline=None)
def test_telescoping_and_centering(case):
    m, ell, weights, table = case
    dec = decompose(Observable.from_table(table, m), BernoulliLaw(weights))
    rebuilt = dec.reconstruct()
    assert all(rebuilt[t] == v for t, v in table.items())
    for res in dec.centering_residuals():
        assert all(v == 0 for v in np.atleast_1d(res).ravel())
    mean, comps = oracles.brute_decomposition(table, m, ell, weights)
    assert dec.mean == mean
    for i, comp in enumerate(comps):
        assert all(dec.components[i][t] == v for t, v in comp.items())


@given(st.integers(2, 4).flatmap(
    lambda m: st.tuples(st.lists(st.integers(1, 20), min_size=m, max_size=m),
                        st.lists(st.integers(0, m - 1), min_size=1, max_size=4))))
def test_indicator_mean_is_product(case):
    ints, word = case
    weights = [F(v, sum(ints)) for v in ints]
    expected = F(1)
    for a in word:
        expected *= weights[a]
    assert mean_F(Observable.indicator_product(word, len(ints)), BernoulliLaw(weights)) == expected
