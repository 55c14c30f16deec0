"""Digit-process laws: Bernoulli, stationary Markov, Gauss marginal, and
finite Markov chains with an observation map.

Weights given as ints, Fractions or ``"p/q"`` strings stay exact; floats are
accepted with a 1e-12 normalization tolerance.
"""

from __future__ import annotations

import bisect
import threading
from fractions import Fraction
from math import log, log2
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _rng
from .digitkit import DigitStream

__all__ = [
    "BernoulliLaw",
    "CylinderMass",
    "FiniteMarkovChain",
    "GaussMarginalLaw",
    "InvalidLawError",
    "MarginalMismatchError",
    "MarkovLaw",
    "NotPrimitiveError",
    "TruncatedCFLaw",
    "cylinder_mass",
    "is_primitive",
    "sample_stream",
    "stationary_power_iteration",
    "stationary_vector",
    "to_number",
    "truncated_bernoulli",
]

TOL = 1e-12


class InvalidLawError(ValueError):
    """A law's invariants fail."""


class NotPrimitiveError(InvalidLawError):
    """No power of the matrix is strictly positive."""


class MarginalMismatchError(InvalidLawError):
    """Row and column marginals of a joint matrix differ."""


# ---------------------------------------------------------------------------
# numbers
# ---------------------------------------------------------------------------


def to_number(x):
    """Fraction for ints, Fractions and ``"p/q"``/decimal strings; float otherwise."""
    if isinstance(x, bool):
        raise TypeError("booleans are not weights")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    return float(x)


def _vector(values) -> tuple:
    vals = [to_number(v) for v in values]
    if any(isinstance(v, float) for v in vals):
        vals = [float(v) for v in vals]
    return tuple(vals)


def _matrix(rows) -> tuple:
    flat = [to_number(v) for row in rows for v in row]
    exact = not any(isinstance(v, float) for v in flat)
    out = tuple(tuple(to_number(v) if exact else float(to_number(v)) for v in row) for row in rows)
    n = len(out)
    if any(len(row) != n for row in out):
        raise InvalidLawError("matrix must be square")
    return out


def _is_exact(values) -> bool:
    return all(isinstance(v, Fraction) for v in values)


def _check_normalized(total, exact: bool, what: str) -> None:
    if exact:
        if total != 1:
            raise InvalidLawError(f"{what} sums to {total}, not 1")
    elif abs(float(total) - 1.0) > TOL:
        raise InvalidLawError(f"{what} sums to {float(total)!r}, not 1 within {TOL}")


def is_primitive(matrix) -> bool:
    """Some power strictly positive (Wielandt bound (s-1)^2 + 1 suffices)."""
    b = (np.asarray(matrix, dtype=float) > 0).astype(np.int64)
    s = b.shape[0]
    power = b.copy()
    for _ in range((s - 1) ** 2 + 1):
        if power.all():
            return True
        power = np.minimum(power @ b, 1)
    return bool(power.all())


def _solve_exact(a: list, rhs: list) -> list:
    """Gauss-Jordan elimination over Fractions."""
    n = len(a)
    m = [list(row) + [r] for row, r in zip(a, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise InvalidLawError("singular system: stationary vector not unique")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def stationary_vector(P) -> tuple:
    """Stationary row vector of a stochastic matrix by a direct linear solve.

    The equations pi (P - I) = 0 with one of them replaced by sum(pi) = 1.
    Exact for Fraction input.
    """
    rows = _matrix(P)
    n = len(rows)
    if _is_exact(v for row in rows for v in row):
        a = [[rows[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        a[-1] = [Fraction(1)] * n
        rhs = [Fraction(0)] * (n - 1) + [Fraction(1)]
        return tuple(_solve_exact(a, rhs))
    p = np.asarray(rows, dtype=float)
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    return tuple(float(v) for v in np.linalg.solve(a, rhs))


def stationary_power_iteration(P, tol: float = 1e-14, max_iter: int = 100_000) -> np.ndarray:
    """Cross-check for :func:`stationary_vector` by iterating a uniform start."""
    p = np.asarray(P, dtype=float)
    v = np.full(p.shape[0], 1.0 / p.shape[0])
    for _ in range(max_iter):
        w = v @ p
        if np.abs(w - v).max() < tol:
            return w
        v = w
    return v


# ---------------------------------------------------------------------------
# sources for generated streams
# ---------------------------------------------------------------------------


class IIDSource:
    """Independent digits; digit k is a function of (key, k) alone."""

    kind = "generated-iid"
    length = None

    def __init__(self, law, seed: int, stream: int):
        self.law = law
        self.seed = seed
        self.stream = stream
        self.key = _rng.stream_key(seed, stream)

    def digits_at(self, indices: np.ndarray) -> np.ndarray:
        return self.law.digits_from_uniforms(_rng.uniforms(self.key, indices), indices)

    def describe(self) -> dict:
        return {"kind": self.kind, "law": self.law.describe(),
                "seed": self.seed, "stream": self.stream}


class MarkovSource:
    """Lazily realized stationary Markov chain with random access.

    Sampled (index, state) pairs are kept sorted.  A new index is drawn from
    the chain conditioned on its nearest sampled neighbours (forward
    transition from the left one, a bridge factor towards the right one), so
    every read is consistent with everything read before and the joint law
    of any set of reads is the Markov law.  Reads in increasing order reduce
    to plain forward sampling with skipped gaps.
    """

    kind = "generated-markov"
    length = None

    def __init__(self, P: np.ndarray, init: np.ndarray, seed: int, stream: int,
                 obs: Optional[np.ndarray] = None, describe: Optional[dict] = None):
        self.P = np.asarray(P, dtype=float)
        self.init = np.asarray(init, dtype=float)
        self.obs = None if obs is None else np.asarray(obs, dtype=np.int64)
        self.seed = seed
        self.stream = stream
        self.key = _rng.stream_key(seed, stream)
        self._law_desc = describe or {}
        self._idx = np.empty(0, dtype=np.int64)
        self._state = np.empty(0, dtype=np.int64)
        self._powers: dict = {}
        self._cum: dict = {}
        self._saturated_at: Optional[int] = None
        self._stationary_rows = np.tile(self.init, (len(self.init), 1))
        self._lock = threading.Lock()

    # transition powers ------------------------------------------------------
    # below this distance from stationarity, rounding noise dominates
    _SATURATION_TOL = 1e-13
    _TABLE_LIMIT = 1 << 16

    def _power(self, g: int) -> np.ndarray:
        """P**g; beyond the saturation gap the stationary rows are used."""
        if self._saturated_at is not None and g >= self._saturated_at:
            return self._stationary_rows
        table = self._powers.setdefault("table", [np.eye(len(self.init))])
        while len(table) <= g and len(table) <= self._TABLE_LIMIT:
            nxt = table[-1] @ self.P
            if np.abs(nxt - self._stationary_rows).max() <= self._SATURATION_TOL:
                self._saturated_at = len(table)
                return self._stationary_rows
            table.append(nxt)
        if g < len(table):
            return table[g]
        pw = self._powers.get(g)
        if pw is None:
            pw = self._powers[g] = np.linalg.matrix_power(self.P, g)
        return pw

    def _cum_rows(self, g: int) -> list:
        if self._saturated_at is not None and g >= self._saturated_at:
            g = -1
        rows = self._cum.get(g)
        if rows is None:
            pw = self._stationary_rows if g == -1 else self._power(g)
            if self._saturated_at is not None and g >= self._saturated_at:
                g = -1
            rows = [np.cumsum(r).tolist() for r in pw]
            self._cum[g] = rows
        return rows

    # sampling ---------------------------------------------------------------
    def digits_at(self, indices: np.ndarray) -> np.ndarray:
        with self._lock:
            uniq = np.unique(indices)
            n_old = len(self._idx)
            if n_old:
                pos = np.searchsorted(self._idx, uniq)
                inside = pos < n_old
                known = np.zeros(len(uniq), dtype=bool)
                known[inside] = self._idx[pos[inside]] == uniq[inside]
                uniq = uniq[~known]
            if uniq.size:
                self._sample_new(uniq)
            states = self._state[np.searchsorted(self._idx, indices)]
        return states if self.obs is None else self.obs[states]

    def _sample_new(self, new: np.ndarray) -> None:
        u = _rng.uniforms(self.key, new).tolist()
        old_idx, old_state = self._idx, self._state
        rpos = np.searchsorted(old_idx, new).tolist()
        n_old = len(old_idx)
        old_idx_l, old_state_l = old_idx.tolist(), old_state.tolist()
        init_cum = np.cumsum(self.init).tolist()
        out = []
        prev_k = prev_s = None
        for t, k in enumerate(new.tolist()):
            r = rpos[t]
            left_k = left_s = None
            if r > 0:
                left_k, left_s = old_idx_l[r - 1], old_state_l[r - 1]
            if prev_k is not None and (left_k is None or prev_k > left_k):
                left_k, left_s = prev_k, prev_s
            if r < n_old:
                # bridge towards the next already-sampled state
                row = self.init if left_k is None else self._power(k - left_k)[left_s]
                col = self._power(old_idx_l[r] - k)[:, old_state_l[r]]
                cum = np.cumsum(row * col).tolist()
            elif left_k is None:
                cum = init_cum
            else:
                cum = self._cum_rows(k - left_k)[left_s]
            s = bisect.bisect_right(cum, u[t] * cum[-1])
            s = min(s, len(cum) - 1)
            out.append(s)
            prev_k, prev_s = k, s
        idx = np.concatenate([old_idx, new])
        st = np.concatenate([old_state, np.asarray(out, dtype=np.int64)])
        order = np.argsort(idx, kind="stable")
        self._idx, self._state = idx[order], st[order]

    def prefetch(self, indices) -> None:
        """Realize the given indices in one increasing pass."""
        self.digits_at(np.asarray(indices, dtype=np.int64))

    def describe(self) -> dict:
        return {"kind": self.kind, "law": self._law_desc, "seed": self.seed, "stream": self.stream}


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


class BernoulliLaw:
    """IID digits with a finite weight vector on ``{offset, ..., offset+m-1}``.

    ``offset=0`` is a base-m digit law; ``offset=1`` puts the weights on
    continued-fraction digits 1..m.
    """

    def __init__(self, weights: Sequence, offset: int = 0):
        w = _vector(weights)
        if not w:
            raise InvalidLawError("empty weight vector")
        if any(v < 0 for v in w):
            raise InvalidLawError("weights must be nonnegative")
        self.exact = _is_exact(w)
        _check_normalized(sum(w), self.exact, "weight vector")
        self.weights = w
        self.offset = offset
        self.m = len(w)
        self.float_weights = np.asarray([float(v) for v in w])
        cum = np.cumsum(self.float_weights)
        cum[-1] = 1.0
        self._cum = cum
        self._last_positive = int(np.flatnonzero(self.float_weights > 0)[-1])

    @property
    def alphabet(self) -> Optional[int]:
        return self.m if self.offset == 0 else None

    def weight(self, digit: int):
        k = int(digit) - self.offset
        return self.weights[k] if 0 <= k < self.m else (Fraction(0) if self.exact else 0.0)

    def digits_from_uniforms(self, u: np.ndarray, indices=None) -> np.ndarray:
        d = np.searchsorted(self._cum, u, side="right")
        d = np.minimum(d, self._last_positive)
        return d.astype(np.int64) + self.offset

    def source(self, seed: int, stream: int = 0) -> IIDSource:
        return IIDSource(self, seed, stream)

    def mean_digit_law(self) -> "BernoulliLaw":
        return self

    def describe(self) -> dict:
        return {"kind": "bernoulli", "weights": [str(v) for v in self.weights],
                "offset": self.offset}

    def __repr__(self) -> str:
        return f"BernoulliLaw({[str(v) for v in self.weights]}, offset={self.offset})"


class GaussMarginalLaw:
    """IID continued-fraction digits with the Gauss-measure marginals
    r_j = log2(1 + 1/(j(j+2))).

    The partial sums telescope: sum_{j<=k} r_j = log2(2(k+1)/(k+2)), so the
    tail beyond any prefix is known in closed form and sampling inverts the
    CDF exactly.
    """

    offset = 1
    alphabet = None
    exact = False

    @staticmethod
    def weight(j: int) -> float:
        j = int(j)
        return log2(1.0 + 1.0 / (j * (j + 2))) if j >= 1 else 0.0

    def prefix_weights(self, count: int) -> np.ndarray:
        j = np.arange(1, count + 1, dtype=float)
        return np.log2(1.0 + 1.0 / (j * (j + 2)))

    @staticmethod
    def cdf(k):
        k = np.asarray(k, dtype=float)
        return np.log2(2.0 * (k + 1.0) / (k + 2.0))

    @staticmethod
    def tail_mass(k: int) -> float:
        """Mass of the digits strictly greater than k."""
        return log2((k + 2) / (k + 1))

    def digits_from_uniforms(self, u: np.ndarray, indices=None) -> np.ndarray:
        # x = 2**u - 1 is Gauss distributed and its first digit is floor(1/x)
        x = np.expm1(u * log(2.0))
        d = np.floor(1.0 / x)
        d = np.maximum(d, 1.0)
        return d.astype(np.int64)

    def source(self, seed: int, stream: int = 0) -> IIDSource:
        return IIDSource(self, seed, stream)

    def describe(self) -> dict:
        return {"kind": "gauss_marginal"}


class MarkovLaw:
    """Stationary Markov digit law built from a joint matrix R.

    q_i = sum_j r_ij must also equal sum_j r_ji, and some power of R must be
    strictly positive.  Then Q = (r_ij / q_i) is primitive with stationary
    vector q.
    """

    def __init__(self, R):
        rows = _matrix(R)
        flat = [v for row in rows for v in row]
        if any(v < 0 for v in flat):
            raise InvalidLawError("joint matrix entries must be nonnegative")
        self.exact = _is_exact(flat)
        _check_normalized(sum(flat), self.exact, "joint matrix")
        m = len(rows)
        if not is_primitive(rows):
            raise NotPrimitiveError(
                "no power of R is a positive matrix (irreducible aperiodic condition fails)"
            )
        q = tuple(sum(row) for row in rows)
        cols = tuple(sum(rows[i][j] for i in range(m)) for j in range(m))
        for i in range(m):
            bad = q[i] != cols[i] if self.exact else abs(float(q[i]) - float(cols[i])) > TOL
            if bad:
                raise MarginalMismatchError(
                    f"row marginal {q[i]} != column marginal {cols[i]} at state {i}: "
                    "the prescribed pair-frequency set is empty"
                )
        self.R = rows
        self.m = m
        self.q = q
        self.Q = tuple(tuple(v / q[i] for v in rows[i]) for i in range(m))
        self.float_q = np.asarray([float(v) for v in q])
        self.float_Q = np.asarray([[float(v) for v in row] for row in self.Q])
        self.offset = 0

    @classmethod
    def from_transition(cls, Q) -> "MarkovLaw":
        rows = _matrix(Q)
        if not is_primitive(rows):
            raise NotPrimitiveError("transition matrix is not primitive")
        q = stationary_vector(rows)
        return cls([[q[i] * v for v in rows[i]] for i in range(len(rows))])

    @property
    def alphabet(self) -> int:
        return self.m

    @property
    def weights(self) -> tuple:
        """One-dimensional marginal q."""
        return self.q

    def mean_digit_law(self) -> BernoulliLaw:
        return BernoulliLaw(self.q)

    def source(self, seed: int, stream: int = 0) -> MarkovSource:
        return MarkovSource(self.float_Q, self.float_q, seed, stream, describe=self.describe())

    def describe(self) -> dict:
        return {"kind": "markov", "R": [[str(v) for v in row] for row in self.R]}


class FiniteMarkovChain:
    """Markov chain on s hidden states with an observation map states -> symbols."""

    def __init__(self, P, obs: Optional[Sequence[int]] = None, require_mixing: bool = True):
        rows = _matrix(P)
        s = len(rows)
        flat = [v for row in rows for v in row]
        if any(v < 0 for v in flat):
            raise InvalidLawError("transition probabilities must be nonnegative")
        self.exact = _is_exact(flat)
        for row in rows:
            _check_normalized(sum(row), self.exact, "transition row")
        self.primitive = is_primitive(rows)
        if require_mixing and not self.primitive:
            raise NotPrimitiveError("chain is reducible or periodic")
        self.P = rows
        self.s = s
        self.float_P = np.asarray([[float(v) for v in row] for row in rows])
        self.pi = stationary_vector(rows) if self.primitive else None
        self.float_pi = None if self.pi is None else np.asarray([float(v) for v in self.pi])
        self.obs = tuple(range(s)) if obs is None else tuple(int(o) for o in obs)
        if len(self.obs) != s:
            raise InvalidLawError("observation map must have one entry per state")
        self.n_obs = max(self.obs) + 1
        self.offset = 0

    @property
    def alphabet(self) -> int:
        return max(self.n_obs, 2)

    def observation_marginal(self) -> BernoulliLaw:
        """Law of X(n): the stationary vector pushed through the observation map."""
        zero = Fraction(0) if self.exact else 0.0
        w = [zero] * self.n_obs
        for st, o in enumerate(self.obs):
            w[o] += self.pi[st]
        return BernoulliLaw(w)

    def mean_digit_law(self) -> BernoulliLaw:
        return self.observation_marginal()

    def source(self, seed: int, stream: int = 0) -> MarkovSource:
        obs = None if self.obs == tuple(range(self.s)) else np.asarray(self.obs)
        return MarkovSource(self.float_P, self.float_pi, seed, stream, obs=obs,
                            describe=self.describe())

    def describe(self) -> dict:
        return {"kind": "finite_chain", "P": [[str(v) for v in row] for row in self.P],
                "obs": list(self.obs)}


# ---------------------------------------------------------------------------
# truncated continued-fraction laws
# ---------------------------------------------------------------------------


def _rbar_cdf(rbar):
    """CDF k -> sum_{j<=k} r_j of an infinite weight vector on {1, 2, ...}.

    ``rbar`` is either GaussMarginalLaw or a finite explicit prefix with a
    zero tail.
    """
    if isinstance(rbar, GaussMarginalLaw):
        return rbar.cdf, False
    w = _vector(rbar)
    exact = _is_exact(w)
    cum = np.concatenate([[0.0], np.cumsum([float(v) for v in w])])

    def cdf(k):
        k = np.asarray(k, dtype=np.int64)
        return cum[np.minimum(k, len(w))]

    return cdf, exact


def truncated_bernoulli(rbar, n: int) -> BernoulliLaw:
    """Strictly positive law on {1..n} converging pointwise to ``rbar``.

    r_k^(n) = (r_k + n**-3) / (sum_{j<=n} r_j + n**-2): every atom gets the
    floor mass n**-3 before renormalizing.
    """
    if n < 1:
        raise ValueError("truncation level must be >= 1")
    if n == 1:
        return BernoulliLaw([1], offset=1)
    if isinstance(rbar, GaussMarginalLaw):
        r = [rbar.weight(k) for k in range(1, n + 1)]
        z = float(rbar.cdf(n)) + 1.0 / n**2
        w = [(rk + 1.0 / n**3) / z for rk in r]
        # renormalize away rounding so the law validates at 1e-12
        s = float(np.sum(w))
        return BernoulliLaw([v / s for v in w], offset=1)
    vals = _vector(rbar)
    exact = _is_exact(vals)
    r = [vals[k - 1] if k - 1 < len(vals) else (Fraction(0) if exact else 0.0)
         for k in range(1, n + 1)]
    if exact:
        floor, z = Fraction(1, n**3), sum(r) + Fraction(1, n**2)
        return BernoulliLaw([(rk + floor) / z for rk in r], offset=1)
    z = sum(r) + 1.0 / n**2
    w = [(rk + 1.0 / n**3) / z for rk in r]
    s = float(np.sum(w))
    return BernoulliLaw([v / s for v in w], offset=1)


class TruncatedCFLaw:
    """Independent CF digits where digit k follows truncated_bernoulli(rbar, max(k, 1)).

    Every sampled digit satisfies a_k <= max(k, 1).
    """

    offset = 1
    alphabet = None

    def __init__(self, rbar):
        self.rbar = rbar
        self._cdf, self.exact = _rbar_cdf(rbar)

    def digits_from_uniforms(self, u: np.ndarray, indices) -> np.ndarray:
        n = np.maximum(np.asarray(indices, dtype=np.int64), 1)
        nf = n.astype(float)
        z = self._cdf(n) + 1.0 / nf**2
        target = u * z
        # least k in [1, n] with C(k) + k/n^3 > target, by vectorized bisection
        lo = np.ones_like(n)
        hi = n.copy()
        while True:
            active = lo < hi
            if not active.any():
                break
            mid = (lo + hi) // 2
            ok = self._cdf(mid) + mid / nf**3 > target
            hi = np.where(active & ok, mid, hi)
            lo = np.where(active & ~ok, mid + 1, lo)
        return lo

    def source(self, seed: int, stream: int = 0) -> IIDSource:
        return IIDSource(self, seed, stream)

    def describe(self) -> dict:
        if isinstance(self.rbar, GaussMarginalLaw):
            return {"kind": "truncated_cf", "rbar": "gauss_marginal"}
        return {"kind": "truncated_cf", "rbar": [str(v) for v in _vector(self.rbar)]}


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def sample_stream(law, seed: int, count: Optional[int] = None, stream: int = 0) -> DigitStream:
    """Digit stream distributed per ``law``, reproducible from (law, seed, stream).

    ``count`` is recorded as the stream's length hint; digits beyond it are
    still readable.
    """
    return DigitStream(law.alphabet, law.source(seed, stream), length_hint=count)


class CylinderMass(NamedTuple):
    mass: object
    log_mass: float


def _log(x) -> float:
    if x == 0:
        return float("-inf")
    if isinstance(x, Fraction):
        return log(x.numerator) - log(x.denominator)
    return log(x)


def cylinder_mass(law, word: Sequence[int]) -> CylinderMass:
    """Mass of the cylinder {a_0..a_{n-1} = word} and its natural log.

    Exact (Fraction) for rational laws.  The product is formed from digit
    (or transition) counts, so long words stay cheap; ``log_mass`` is -inf
    for a null cylinder.
    """
    word = [int(d) for d in word]
    if isinstance(law, MarkovLaw):
        if not word:
            return CylinderMass(Fraction(1) if law.exact else 1.0, 0.0)
        counts: dict = {}
        for a, b in zip(word, word[1:]):
            counts[(a, b)] = counts.get((a, b), 0) + 1
        factors = [(law.q[word[0]], 1)] + [(law.Q[a][b], c) for (a, b), c in counts.items()]
    else:
        counts = {}
        for d in word:
            counts[d] = counts.get(d, 0) + 1
        factors = [(law.weight(d), c) for d, c in counts.items()]
    if any(f == 0 for f, _ in factors):
        return CylinderMass(Fraction(0) if law.exact else 0.0, float("-inf"))
    log_mass = sum(c * _log(f) for f, c in factors)
    if law.exact:
        mass = Fraction(1)
        for f, c in factors:
            mass *= f**c
    else:
        mass = float(np.exp(log_mass))
    return CylinderMass(mass, log_mass)
