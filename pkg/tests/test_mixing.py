import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nonconvlab.measures import FiniteMarkovChain, NotPrimitiveError
from nonconvlab.mixing import (
    assumption_report,
    brute_force_psi,
    centering_decay,
    conditioning_gap,
    interpolation_bounds,
    loglinear_fit,
    markov_alpha,
    markov_phi,
    markov_psi,
    markov_rho,
    mixing_report,
    mixingale_decay,
    size_minus_half,
)
from nonconvlab.observables import Observable
from nonconvlab.schedules import Schedule, validate

F = Fraction
SYM = FiniteMarkovChain([[F(3, 4), F(1, 4)], [F(1, 4), F(3, 4)]])
IID = FiniteMarkovChain([[F(1, 3), F(2, 3)], [F(1, 3), F(2, 3)]])
PAIR = Schedule.polynomials([0, 1], [0, 2])


def test_psi_examples():
    assert markov_psi(SYM, 1) == F(1, 2)
    assert markov_psi(SYM, 3) == F(1, 8)
    with pytest.raises(NotPrimitiveError):
        FiniteMarkovChain([[1, 0], [0, 1]])


def test_brute_force_examples():
    assert brute_force_psi(SYM, 1, 1) == F(1, 2)
    assert brute_force_psi(SYM, 1, 3) == F(1, 2)
    assert all(brute_force_psi(IID, n, 2) == 0 for n in range(1, 4))
    assert all(markov_psi(IID, n) == 0 for n in range(1, 4))


def test_other_coefficients_for_symmetric_chain():
    assert markov_phi(SYM, 1) == F(1, 4)
    assert markov_alpha(SYM, 1) == F(1, 8)
    assert markov_rho(SYM, 1) == pytest.approx(0.5, abs=1e-14)
    assert markov_rho(SYM, 4) == pytest.approx(1 / 16, abs=1e-14)


def test_rho_matches_second_eigenvalue():
    chain = FiniteMarkovChain([[F(1, 2), F(1, 2)], [F(1, 5), F(4, 5)]])
    lam = abs(1 - F(1, 2) - F(1, 5))
    for n in range(1, 6):
        assert markov_rho(chain, n) == pytest.approx(float(lam) ** n, rel=1e-12)


def test_three_state_psi_against_brute_force():
    chain = FiniteMarkovChain([[F(1, 2), F(1, 4), F(1, 4)], [F(1, 3), F(1, 3), F(1, 3)],
                               [0, F(1, 2), F(1, 2)]])
    for n in range(1, 5):
        for h in range(1, 4):
            assert abs(float(markov_psi(chain, n) - brute_force_psi(chain, n, h))) <= 1e-10


def test_interpolation_bounds_plug_in():
    n, p, q = 2, 2.0, 4.0
    a, r, f, s = (markov_alpha(SYM, n), markov_rho(SYM, n), markov_phi(SYM, n), markov_psi(SYM, n))
    b = interpolation_bounds(a, r, f, s, p, q)
    e = 1 / p - 1 / q
    assert b.alpha_bound == pytest.approx((2 * float(a)) ** e)
    assert b.rho_bound == pytest.approx(2 ** (1 + e) * r ** (1 - e))
    assert b.phi_bound == pytest.approx(2 ** (1 + 1 / p) * float(f) ** (1 - 1 / p))
    assert b.psi_bound == pytest.approx(float(s))
    assert b.minimum == min(b.alpha_bound, b.rho_bound, b.phi_bound, b.psi_bound)


def test_interpolation_degenerate_cases():
    assert interpolation_bounds(0.1, 0.2, 0.2, 0.3, 2, 2).alpha_bound == 1.0
    assert interpolation_bounds(0.0, 0.0, 0.0, 0.0, 2, 4).minimum == 0.0
    with pytest.raises(ValueError):
        interpolation_bounds(0.1, 0.1, 0.1, 0.1, 4, 2)


def test_mixing_report_fits_and_csv():
    rep = mixing_report(SYM, range(1, 11))
    assert rep.fits["psi"].slope == pytest.approx(math.log(0.5), abs=1e-12)
    assert rep.to_csv().splitlines()[0] == "n,psi,phi,rho,alpha"


def test_loglinear_fit_recovers_rate():
    fit = loglinear_fit(range(1, 20), [3 * 0.7**n for n in range(1, 20)])
    assert fit.slope == pytest.approx(math.log(0.7)) and fit.r2 == pytest.approx(1.0)


def test_size_examples():
    assert size_minus_half(lambda n: 0.9**n).kind == "exponential"
    assert size_minus_half(lambda n: 1 / n).verdict
    assert not size_minus_half(lambda n: n**-0.5).verdict
    assert size_minus_half(lambda n: 0.0 if n > 50 else 1.0).kind == "eventually_zero"
    with pytest.raises(ValueError):
        size_minus_half(lambda n: 1 / n, delta=0)


def test_size_agrees_with_limit_comparison_oracle():
    import mpmath as mp

    for fn, mp_fn in [(lambda n: n**-0.75, lambda n: n ** mp.mpf(-0.75)),
                      (lambda n: n**-0.4, lambda n: n ** mp.mpf(-0.4))]:
        assert size_minus_half(fn).verdict == oracles.limit_comparison_bounded(mp_fn)


def test_psi_sequence_is_size_half():
    assert size_minus_half(lambda n: float(markov_psi(SYM, n)) if n < 60 else 0.5**n).verdict


def test_mixingale_matches_closed_form():
    obs = Observable.indicator_product((0, 0), 2)
    table = mixingale_decay(SYM, obs, PAIR, 2, range(2, 33), [64])
    for (_, m, _), sq in zip(table.rows, table.exact_squares):
        assert sq == oracles.symmetric_mixingale_norm_sq(m, 64)
    assert table.fit.r2 >= 0.99
    assert table.to_csv().startswith("m,norm\n2,")


def test_mixingale_trivial_sigma_algebra_and_iid():
    obs = Observable.from_table([[1, 2], [3, 5]])
    table = mixingale_decay(SYM, obs, PAIR, 2, [10, 20], [5])
    assert table.values() == [0.0, 0.0]
    iid = mixingale_decay(IID, obs, PAIR, 2, range(1, 6), [10])
    assert all(v == 0 for v in iid.exact_squares)


def test_mixingale_conditions_on_origin_when_m_equals_n():
    obs = Observable.indicator_product((0, 0), 2)
    table = mixingale_decay(SYM, obs, PAIR, 2, [8, 9], [8])
    assert table.exact_squares[0] > 0 and table.exact_squares[1] == 0
    assert table.gaps == [2, None]


@given(st.lists(st.lists(st.integers(0, 3), min_size=2, max_size=3), min_size=1, max_size=3),
       st.integers(1, 40), st.data())
def test_conditioning_gap_grows_linearly(coeffs, n, data):
    sched = Schedule.polynomials(*[[c, max(d, 1), *rest] for c, d, *rest in coeffs])
    # nonnegative coefficients with slope >= 1 keep growth valid down to n = 0
    eps = validate(sched, n + 1).max_eps
    if eps is None:
        return
    m = data.draw(st.integers(0, n))
    i = data.draw(st.integers(1, sched.ell))
    assert conditioning_gap(sched, i, m, n) >= math.floor(eps * m / 3)


def test_mixingale_nonincreasing_in_m():
    obs = Observable.from_table([[1, 2], [3, 5]])
    chain = FiniteMarkovChain([[F(1, 2), F(1, 2)], [F(1, 5), F(4, 5)]])
    vals = mixingale_decay(chain, obs, PAIR, 2, range(1, 25), [48]).values()
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_centering_matches_closed_form():
    obs = Observable.indicator_product((0, 0), 2)
    cent = centering_decay(SYM, obs, PAIR, 2, range(1, 21))
    assert cent.exact_squares == [oracles.symmetric_centering(n) for n in range(1, 21)]
    assert cent.fit.slope == pytest.approx(math.log(0.5))


def test_centering_vanishes_for_iid_and_constants():
    obs = Observable.from_table([[1, 2], [3, 5]])
    assert all(v == 0 for v in centering_decay(IID, obs, PAIR, 2, range(1, 6)).exact_squares)
    const = Observable.constant(3, 2, 2)
    assert all(v == 0 for v in centering_decay(SYM, const, PAIR, 2, range(1, 6)).exact_squares)


def test_assumption_report_holds_for_mixing_chain():
    rep = assumption_report(SYM, Observable.indicator_product((0, 0), 2))
    assert rep.beta_identically_zero and rep.exponent_ok and rep.theta_ok
    assert rep.holds


@st.composite
def rational_chains(draw):
    s = draw(st.integers(2, 3))
    rows = []
    for _ in range(s):
        ints = draw(st.lists(st.integers(1, 6), min_size=s, max_size=s))
        rows.append([F(v, sum(ints)) for v in ints])
    return FiniteMarkovChain(rows)


@given(rational_chains(), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_coefficient_ordering(chain, n):
    psi = markov_psi(chain, n)
    assert 4 * markov_alpha(chain, n) <= psi
    assert 2 * markov_phi(chain, n) <= psi


@given(rational_chains(), st.integers(1, 3), st.integers(1, 2))
@settings(max_examples=25, deadline=None)
def test_psi_equals_brute_force(chain, n, h):
    assert markov_psi(chain, n) == brute_force_psi(chain, n, h)


@given(st.sampled_from([F(1, 5), F(1, 4), F(1, 3), F(1, 2), F(2, 3)]),
       st.sampled_from([F(1, 5), F(1, 4), F(1, 3), F(1, 2), F(2, 3)]),
       st.integers(1, 8))
def test_two_state_psi_closed_form(a, b, n):
    chain = FiniteMarkovChain([[1 - a, a], [b, 1 - b]])
    assert markov_psi(chain, n) == oracles.two_state_psi(a, b, n)


def test_float_chain_matches_exact():
    exact = FiniteMarkovChain([[F(1, 2), F(1, 2)], [F(1, 5), F(4, 5)]])
    approx = FiniteMarkovChain([[0.5, 0.5], [0.2, 0.8]])
    for n, fn in itertools.product(range(1, 5), (markov_psi, markov_phi, markov_alpha)):
        assert float(fn(approx, n)) == pytest.approx(float(fn(exact, n)), abs=1e-12)
    assert np.isfinite(markov_rho(approx, 3))
