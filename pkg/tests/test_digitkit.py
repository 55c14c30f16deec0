from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonconvlab.digitkit import (
    CylinderInterval,
    DigitStream,
    continuants,
    expand_cf,
    expand_rational,
    format_word,
    last_continuant,
    parse_word,
    shift,
)
from nonconvlab.errors import StreamExhaustedError


def long_division(p, q, base, count):
    """Digit oracle via Fraction arithmetic (floor of base * remainder)."""
    x = Fraction(p, q)
    out = []
    for _ in range(count):
        x *= base
        d = x.numerator // x.denominator
        out.append(d)
        x -= d
    return tuple(out)


@pytest.mark.parametrize("args, expected", [
    ((0, 1, 2, 5), (0, 0, 0, 0, 0)),
    ((1, 3, 2, 6), (0, 1, 0, 1, 0, 1)),
    ((1, 2, 2, 3), (1, 0, 0)),
])
def test_expand_rational_examples(args, expected):
    assert expand_rational(*args) == expected


def test_expand_rational_rejects_out_of_range():
    with pytest.raises(ValueError):
        expand_rational(3, 2, 10, 4)
    with pytest.raises(ValueError):
        expand_rational(1, 3, 1, 4)


@pytest.mark.parametrize("args, digits, index", [
    ((1, 2, 3), (2,), 1),
    ((2, 5, 4), (2, 2), 2),
    ((3, 7, 4), (2, 3), 2),
])
def test_expand_cf_examples(args, digits, index):
    res = expand_cf(*args)
    assert res.digits == digits
    assert res.terminated
    assert res.termination_index == index


def test_expand_cf_truncated_before_termination():
    res = expand_cf(13, 31, 1)
    assert res.digits == (2,)
    assert not res.terminated and res.termination_index is None


def test_continuants_examples():
    assert [q for _, q in continuants([1, 1, 1, 1, 1])] == [1, 2, 3, 5, 8]
    assert [q for _, q in continuants([2])] == [2]
    assert [q for _, q in continuants([2, 2])] == [2, 5]


def test_continuants_are_exact_at_large_n():
    fib = [0, 1]
    for _ in range(2001):
        fib.append(fib[-1] + fib[-2])
    assert last_continuant([1] * 2000) == fib[2001]


def test_continuants_reject_zero_digit():
    with pytest.raises(ValueError):
        continuants([1, 0])


def test_convergents_reproduce_rational():
    res = expand_cf(13, 31, 100)
    p, q = continuants(res.digits)[-1]
    assert Fraction(p, q) == Fraction(13, 31)


def test_rational_stream_random_access():
    s = DigitStream.rational(1, 3, 2)
    assert s.at([0, 1, 10**9, 10**9 + 1]).tolist() == [0, 1, 0, 1]
    assert s.prefix(6).tolist() == list(expand_rational(1, 3, 2, 6))


def test_rational_stream_is_periodic_under_shift():
    s = DigitStream.rational(1, 3, 2)
    assert s.shift(2).prefix(50).tolist() == s.prefix(50).tolist()
    assert s.shift(1).prefix(4).tolist() == [1, 0, 1, 0]
    assert shift(s, 0).prefix(10).tolist() == s.prefix(10).tolist()


def test_rational_stream_matches_long_division():
    s = DigitStream.rational(5, 17, 10)
    assert tuple(s.prefix(40).tolist()) == long_division(5, 17, 10, 40)


def test_materialized_stream_exhaustion():
    s = DigitStream.materialized([0, 1, 1], 2)
    assert s.length == 3
    with pytest.raises(StreamExhaustedError):
        s.at([3])
    with pytest.raises(IndexError):
        shift(s, 4)


def test_materialized_stream_rejects_bad_digits():
    with pytest.raises(ValueError):
        DigitStream.materialized([0, 2], 2)


def test_patched_stream_overrides_only_given_indices():
    s = DigitStream.rational(1, 3, 2).patched({3: 0, 4: 1})
    assert s.prefix(6).tolist() == [0, 1, 0, 0, 1, 1]


def test_cylinder_interval_endpoints_and_nesting():
    c = CylinderInterval(3, (1, 2))
    assert c.endpoints() == (Fraction(5, 9), Fraction(6, 9))
    assert c.length == (3, 2)
    assert c.contains(c.extend(0))
    assert not c.extend(0).contains(c)
    assert c.log_length() == pytest.approx(-2 * np.log(3))


def test_word_format_round_trip():
    text = format_word([3, 1, 4, 1, 5], None)
    assert parse_word(text) == ((3, 1, 4, 1, 5), None)
    with pytest.raises(ValueError):
        parse_word("alphabet=2 count=3\n0 1\n")


@given(st.integers(0, 1000), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_shift_composes_additively(k1, k2):
    s = DigitStream.rational(7, 23, 3)
    a = s.shift(k1).shift(k2).prefix(20).tolist()
    b = s.shift(k1 + k2).prefix(20).tolist()
    assert a == b


@given(st.integers(1, 10**4).flatmap(lambda q: st.tuples(st.integers(0, q - 1), st.just(q))),
       st.integers(2, 10), st.integers(1, 60))
@settings(max_examples=100, deadline=None)
def test_digit_round_trip_brackets_value(pq, base, n):
    p, q = pq
    digits = expand_rational(p, q, base, n)
    partial = sum(Fraction(d, base ** (i + 1)) for i, d in enumerate(digits))
    assert partial <= Fraction(p, q) < partial + Fraction(1, base**n)


@given(st.lists(st.integers(1, 50), min_size=3, max_size=40))
def test_continuant_logs_strictly_increase(digits):
    qs = [q for _, q in continuants(digits)]
    assert all(b > a for a, b in zip(qs[1:], qs[2:]))


@given(st.integers(2, 10**6).flatmap(lambda q: st.tuples(st.integers(1, q - 1), st.just(q))))
def test_stream_reads_are_deterministic(pq):
    p, q = pq
    s = DigitStream.rational(p, q, 7)
    idx = np.array([5, 0, 99, 5], dtype=np.int64)
    assert s.at(idx).tolist() == s.at(idx).tolist()
