"""Exact digit streams, base-m and continued-fraction expansions.

Points of [0, 1) are never represented as floats here.  A point is its digit
sequence, and the dynamics (x -> {mx}, the Gauss map) act by shifting it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, log
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import StreamExhaustedError

__all__ = [
    "CFExpansion",
    "CylinderInterval",
    "DigitStream",
    "MaterializedSource",
    "PatchedSource",
    "RationalSource",
    "continuants",
    "expand_cf",
    "expand_rational",
    "format_word",
    "last_continuant",
    "parse_word",
    "shift",
]

_INT64_MAX = np.iinfo(np.int64).max


def _as_index_array(indices) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and idx.min() < 0:
        raise IndexError("digit indices must be nonnegative")
    return idx


def _pack_digits(values) -> np.ndarray:
    """int64 array when every digit fits, otherwise an object array of ints."""
    values = list(values)
    if all(int(v) <= _INT64_MAX for v in values):
        return np.asarray(values, dtype=np.int64)
    out = np.empty(len(values), dtype=object)
    out[:] = [int(v) for v in values]
    return out


def _check_alphabet(digits: np.ndarray, alphabet: Optional[int]) -> None:
    if digits.size == 0:
        return
    if alphabet is None:
        if min(digits) < 1:
            raise ValueError("continued-fraction digits must be positive integers")
    elif min(digits) < 0 or max(digits) >= alphabet:
        raise ValueError(f"digit outside alphabet {{0..{alphabet - 1}}}")


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------


class MaterializedSource:
    """A finite, explicitly stored digit word."""

    kind = "materialized"

    def __init__(self, digits):
        self.digits = _pack_digits(digits)
        self.length = len(self.digits)

    def digits_at(self, indices: np.ndarray) -> np.ndarray:
        if indices.size and indices.max() >= self.length:
            raise StreamExhaustedError(
                f"index {int(indices.max())} beyond materialized length {self.length}"
            )
        return self.digits[indices]

    def describe(self) -> dict:
        return {"kind": self.kind, "length": self.length}


class RationalSource:
    """Base-m expansion of numerator/denominator with random access.

    Digit k equals ``((p * m**k mod q) * m) // q``, which is the greedy
    expansion and never ends in a tail of (m-1)s.
    """

    kind = "rational"
    length = None

    def __init__(self, numerator: int, denominator: int, base: int):
        _check_rational(numerator, denominator, base)
        if denominator < 0:
            numerator, denominator = -numerator, -denominator
        g = gcd(numerator, denominator)
        self.numerator = numerator // g
        self.denominator = denominator // g
        self.base = base

    def digits_at(self, indices: np.ndarray) -> np.ndarray:
        p, q, m = self.numerator, self.denominator, self.base
        out = [(p * pow(m, int(k), q) % q) * m // q for k in indices.tolist()]
        return np.asarray(out, dtype=np.int64)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "numerator": self.numerator,
            "denominator": self.denominator,
            "base": self.base,
        }


class PatchedSource:
    """A base source with a finite set of digits replaced."""

    kind = "patched"

    def __init__(self, base, overrides: dict):
        self.base = base
        self.overrides = {int(k): int(v) for k, v in overrides.items()}
        self.length = base.length

    def digits_at(self, indices: np.ndarray) -> np.ndarray:
        out = self.base.digits_at(indices)
        if not self.overrides:
            return out
        keys = np.fromiter(self.overrides, dtype=np.int64)
        hit = np.isin(indices, keys)
        if not hit.any():
            return out
        values = out.tolist()
        for pos in np.flatnonzero(hit).tolist():
            values[pos] = self.overrides[int(indices[pos])]
        return _pack_digits(values)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "base": self.base.describe(),
            "overrides": len(self.overrides),
        }


# ---------------------------------------------------------------------------
# the stream type
# ---------------------------------------------------------------------------


class DigitStream:
    """A digit sequence over ``{0..m-1}`` (``alphabet=m``) or the positive
    integers (``alphabet=None``), read by absolute index.

    The stream itself is immutable.  Generated sources may grow an internal
    buffer on reads; they guard it with a lock so concurrent readers see one
    consistent realization.
    """

    def __init__(self, alphabet: Optional[int], source, length_hint=None, offset: int = 0):
        if alphabet is not None and alphabet < 2:
            raise ValueError("finite alphabets need m >= 2")
        self.alphabet = alphabet
        self.source = source
        self.offset = int(offset)
        self.length_hint = length_hint

    # constructors -----------------------------------------------------------
    @classmethod
    def materialized(cls, digits: Sequence[int], alphabet: Optional[int]) -> "DigitStream":
        src = MaterializedSource(digits)
        _check_alphabet(src.digits, alphabet)
        return cls(alphabet, src, length_hint=src.length)

    @classmethod
    def rational(cls, numerator: int, denominator: int, base: int) -> "DigitStream":
        return cls(base, RationalSource(numerator, denominator, base))

    # access -----------------------------------------------------------------
    @property
    def length(self) -> Optional[int]:
        if self.source.length is None:
            return None
        return self.source.length - self.offset

    def at(self, indices) -> np.ndarray:
        """Digits at the given (relative) indices."""
        idx = _as_index_array(indices)
        if self.offset:
            idx = idx + self.offset
        return self.source.digits_at(idx)

    def prefix(self, n: int) -> np.ndarray:
        return self.at(np.arange(n, dtype=np.int64))

    def __getitem__(self, k):
        if isinstance(k, slice):
            start, stop, step = k.indices(self.length if self.length is not None else k.stop)
            return self.at(np.arange(start, stop, step, dtype=np.int64))
        return int(self.at(np.array([k], dtype=np.int64))[0])

    def shift(self, k: int) -> "DigitStream":
        return shift(self, k)

    def patched(self, overrides: dict) -> "DigitStream":
        """Copy of the stream with digits at the given relative indices replaced."""
        absolute = {int(i) + self.offset: v for i, v in overrides.items()}
        return DigitStream(self.alphabet, PatchedSource(self.source, absolute),
                           self.length_hint, self.offset)

    def describe(self) -> dict:
        return {"alphabet": self.alphabet if self.alphabet else "inf",
                "offset": self.offset, "source": self.source.describe()}

    def __repr__(self) -> str:
        alpha = self.alphabet if self.alphabet is not None else "inf"
        return f"DigitStream(alphabet={alpha}, source={self.source.kind}, offset={self.offset})"


def shift(stream: DigitStream, k: int) -> DigitStream:
    """Drop the first ``k`` digits (the action of T**k)."""
    if k < 0:
        raise ValueError("shift amount must be nonnegative")
    if stream.length is not None and k > stream.length:
        raise IndexError(f"cannot shift a stream of length {stream.length} by {k}")
    hint = None if stream.length_hint is None else max(stream.length_hint - k, 0)
    return DigitStream(stream.alphabet, stream.source, hint, stream.offset + k)


# ---------------------------------------------------------------------------
# expansions
# ---------------------------------------------------------------------------


def _check_rational(numerator: int, denominator: int, base: int) -> None:
    if denominator == 0:
        raise ZeroDivisionError("denominator must be nonzero")
    if base < 2:
        raise ValueError("base must be >= 2")
    if not 0 <= Fraction(numerator, denominator) < 1:
        raise ValueError("numerator/denominator must lie in [0, 1)")


def expand_rational(numerator: int, denominator: int, base: int, count: int) -> tuple:
    """First ``count`` base-``base`` digits of numerator/denominator.

    Plain long division; rationals with a terminating expansion get the zero
    tail, never the (m-1) tail.

    >>> expand_rational(1, 3, 2, 6)
    (0, 1, 0, 1, 0, 1)
    """
    _check_rational(numerator, denominator, base)
    if count < 0:
        raise ValueError("count must be nonnegative")
    if denominator < 0:
        numerator, denominator = -numerator, -denominator
    rem, out = numerator, []
    for _ in range(count):
        rem *= base
        d, rem = divmod(rem, denominator)
        out.append(d)
    return tuple(out)


class CFExpansion(NamedTuple):
    digits: tuple
    terminated: bool
    termination_index: Optional[int]


def expand_cf(numerator: int, denominator: int, count: int) -> CFExpansion:
    """Continued-fraction digits of p/q = 1/(a0 + 1/(a1 + ...)).

    Rationals terminate; ``termination_index`` is the number of digits in the
    full expansion when it ends within ``count`` digits.
    """
    if denominator <= 0 or not 0 < numerator < denominator:
        raise ValueError("continued fractions need 0 < numerator < denominator")
    if count < 0:
        raise ValueError("count must be nonnegative")
    p, q = numerator, denominator
    digits = []
    while len(digits) < count and p:
        a, r = divmod(q, p)
        digits.append(a)
        p, q = r, p
    terminated = p == 0
    return CFExpansion(tuple(digits), terminated, len(digits) if terminated else None)


def continuants(digits: Sequence[int]) -> list:
    """Convergent pairs (p_k, q_k) after each digit, as exact integers.

    Uses q_k = a_k q_{k-1} + q_{k-2} seeded with (q_{-1}, q_0) = (0, 1), so
    digits (1, 1, 1) give denominators 1, 2, 3.
    """
    p0, p1 = 1, 0
    q0, q1 = 0, 1
    out = []
    for a in digits:
        a = int(a)
        if a < 1:
            raise ValueError("continued-fraction digits must be >= 1")
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        out.append((p1, q1))
    return out


def last_continuant(digits: Sequence[int]) -> int:
    """q_n for the full word without keeping the intermediate pairs."""
    q0, q1 = 0, 1
    for a in digits:
        a = int(a)
        if a < 1:
            raise ValueError("continued-fraction digits must be >= 1")
        q0, q1 = q1, a * q1 + q0
    return q1


# ---------------------------------------------------------------------------
# cylinders
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderInterval:
    """Rank-n basic interval of a base-m word; its length is m**-n."""

    base: int
    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if any(not 0 <= d < self.base for d in self.digits):
            raise ValueError("cylinder word outside the alphabet")

    @property
    def rank(self) -> int:
        return len(self.digits)

    @property
    def length(self) -> tuple:
        """(base, exponent) with length = base ** -exponent."""
        return (self.base, self.rank)

    def log_length(self) -> float:
        return -self.rank * log(self.base)

    def endpoints(self) -> tuple:
        left = sum(Fraction(d, self.base ** (i + 1)) for i, d in enumerate(self.digits))
        return left, left + Fraction(1, self.base ** self.rank)

    def extend(self, digit: int) -> "CylinderInterval":
        return CylinderInterval(self.base, self.digits + (digit,))

    def contains(self, other: "CylinderInterval") -> bool:
        return (other.base == self.base and other.rank >= self.rank
                and other.digits[: self.rank] == self.digits)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def format_word(digits: Sequence[int], alphabet: Optional[int]) -> str:
    head = f"alphabet={alphabet if alphabet is not None else 'inf'} count={len(digits)}"
    return head + "\n" + " ".join(str(int(d)) for d in digits) + "\n"


def parse_word(text: str) -> tuple:
    """Inverse of :func:`format_word`; returns ``(digits, alphabet)``."""
    lines = text.strip().split("\n", 1)
    fields = dict(tok.split("=", 1) for tok in lines[0].split())
    try:
        alphabet = None if fields["alphabet"] == "inf" else int(fields["alphabet"])
        count = int(fields["count"])
    except KeyError as exc:
        raise ValueError(f"missing header field {exc}") from None
    body = lines[1].split() if len(lines) > 1 else []
    digits = tuple(int(tok) for tok in body)
    if len(digits) != count:
        raise ValueError(f"header says {count} digits, body has {len(digits)}")
    _check_alphabet(np.asarray(digits, dtype=object), alphabet)
    return digits, alphabet

