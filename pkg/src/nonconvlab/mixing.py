"""Dependence coefficients of finite Markov chains and mixingale diagnostics.

For a stationary chain the past/future coefficients reduce, by the Markov
property, to functionals of A_n = P**n - 1 pi acting between L^q(pi) spaces
on the state space.  With D = diag(pi):

    psi(n)   = max_ij |P**n(i, j) / pi_j - 1|             (L^1 -> L^inf)
    phi(n)   = max_i TV(P**n(i, .), pi)                    (half of L^inf -> L^inf)
    rho(n)   = ||D^(1/2) A_n D^(-1/2)||_2                  (L^2 -> L^2)
    alpha(n) = 1/4 max_{g in {-1,1}^s} sum_i pi_i |(A_n g)_i|   (quarter of L^inf -> L^1)

Rational chains are handled in exact arithmetic (object arrays of Fraction),
except rho, which needs a singular value and is returned as a float.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import ResourceCapError
from .measures import FiniteMarkovChain, NotPrimitiveError
from .observables import Observable, decompose
from .schedules import Schedule

__all__ = [
    "AssumptionReport",
    "DecayTable",
    "InterpolationBounds",
    "LogLinearFit",
    "MixingReport",
    "SizeHalfReport",
    "assumption_report",
    "brute_force_psi",
    "centering_decay",
    "conditioning_gap",
    "interpolation_bounds",
    "loglinear_fit",
    "markov_alpha",
    "markov_phi",
    "markov_psi",
    "markov_rho",
    "mixing_report",
    "mixingale_decay",
    "size_minus_half",
]

MAX_STATES = 16
MAX_ELL = 3
ENUMERATION_CAP = 10**5


# ---------------------------------------------------------------------------
# matrix helpers
# ---------------------------------------------------------------------------


def _require_mixing(chain: FiniteMarkovChain) -> None:
    if not getattr(chain, "primitive", False):
        raise NotPrimitiveError("coefficients need an irreducible aperiodic chain")
    if chain.s > MAX_STATES:
        raise ResourceCapError(f"chain has {chain.s} states; the cap is {MAX_STATES}")


def _P(chain) -> np.ndarray:
    if chain.exact:
        return np.array(chain.P, dtype=object)
    return chain.float_P


def _pi(chain) -> np.ndarray:
    if chain.exact:
        return np.array(chain.pi, dtype=object)
    return chain.float_pi


def _identity(s: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.full((s, s), Fraction(0), dtype=object)
        for k in range(s):
            out[k, k] = Fraction(1)
        return out
    return np.eye(s)


class _Powers:
    """Cached powers of the centered matrix A = P - 1 pi.

    (P - 1 pi)**g = P**g - 1 pi for g >= 1, and the centered form keeps
    float results accurate far below the 1e-16 level of P**g itself.
    """

    def __init__(self, chain: FiniteMarkovChain):
        self.exact = chain.exact
        self.P = _P(chain)
        self.pi = _pi(chain)
        self.s = chain.s
        self.stat = np.tile(self.pi, (self.s, 1))
        self.A = self.P - self.stat
        self._cache: dict = {}

    def centered(self, g: int) -> np.ndarray:
        if g < 1:
            raise ValueError("centered powers need g >= 1")
        hit = self._cache.get(g)
        if hit is not None:
            return hit
        result, base, k = None, self.A, g
        while k:
            if k & 1:
                result = base if result is None else result @ base
            k >>= 1
            if k:
                base = base @ base
        self._cache[g] = result
        return result

    def power(self, g: int) -> np.ndarray:
        if g == 0:
            return _identity(self.s, self.exact)
        return self.centered(g) + self.stat


def _maxabs(values) -> object:
    return max(abs(v) for v in np.asarray(values, dtype=object).ravel())


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


def markov_psi(chain: FiniteMarkovChain, n: int):
    """max_ij |P**n(i,j)/pi_j - 1|; a Fraction for rational chains."""
    _require_mixing(chain)
    if n < 1:
        raise ValueError("n must be >= 1")
    pw = _Powers(chain)
    A = pw.centered(n)
    val = _maxabs(A / pw.pi[None, :])
    return Fraction(val) if chain.exact else float(val)


def markov_phi(chain: FiniteMarkovChain, n: int):
    """max_i of the total variation distance between P**n(i, .) and pi."""
    _require_mixing(chain)
    A = _Powers(chain).centered(n)
    val = max(sum(abs(v) for v in row) for row in A) / 2
    return Fraction(val) if chain.exact else float(val)


def markov_rho(chain: FiniteMarkovChain, n: int) -> float:
    """Maximal correlation: the L^2(pi) operator norm of P**n - 1 pi."""
    _require_mixing(chain)
    A = np.asarray(_Powers(chain).centered(n), dtype=float)
    d = np.sqrt(chain.float_pi)
    M = d[:, None] * A / d[None, :]
    return float(np.linalg.svd(M, compute_uv=False)[0])


def _sign_vectors(s: int) -> np.ndarray:
    # g and -g give the same value, so fix the first sign
    rest = np.array(list(itertools.product((1, -1), repeat=s - 1)), dtype=np.int64).reshape(-1, s - 1)
    return np.concatenate([np.ones((len(rest), 1), dtype=np.int64), rest], axis=1)


def markov_alpha(chain: FiniteMarkovChain, n: int):
    """1/4 sup_{|g| <= 1} E|E[g(X_{k+n}) | X_k] - E g|, maximized over sign vectors."""
    _require_mixing(chain)
    pw = _Powers(chain)
    A = pw.centered(n)
    G = _sign_vectors(chain.s)
    if chain.exact:
        D = math.lcm(*(Fraction(v).denominator for v in A.ravel()),
                     *(Fraction(v).denominator for v in pw.pi))
        Ai = np.array([[int(Fraction(v) * D) for v in row] for row in A], dtype=object)
        wi = np.array([int(Fraction(v) * D) for v in pw.pi], dtype=object)
        best = max(int(v) for v in np.atleast_1d(np.abs(G.astype(object) @ Ai.T) @ wi))
        return Fraction(best, 4 * D * D)
    vals = np.abs(G @ np.asarray(A, dtype=float).T) @ chain.float_pi
    return float(vals.max()) / 4


class LogLinearFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def loglinear_fit(x: Sequence[float], y: Sequence[float]) -> LogLinearFit:
    """Least-squares fit of ln y = intercept + slope * x over the positive y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray([float(v) for v in y])
    keep = y > 0
    x, ly = x[keep], np.log(y[keep])
    if len(x) < 2:
        return LogLinearFit(float("nan"), float("nan"), float("nan"))
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return LogLinearFit(float(slope), float(intercept), r2)


@dataclass
class MixingReport:
    n: list
    psi: list
    phi: list
    rho: list
    alpha: list
    fits: dict = field(default_factory=dict)

    def rows(self) -> list:
        return [(n, float(a), float(b), float(c), float(d))
                for n, a, b, c, d in zip(self.n, self.psi, self.phi, self.rho, self.alpha)]

    def to_csv(self) -> str:
        lines = ["n,psi,phi,rho,alpha"]
        lines += [",".join([str(r[0])] + [repr(v) for v in r[1:]]) for r in self.rows()]
        return "\n".join(lines) + "\n"


def mixing_report(chain: FiniteMarkovChain, n_grid: Sequence[int]) -> MixingReport:
    """All four coefficients on a grid, with a log-linear decay fit for each."""
    n_grid = [int(n) for n in n_grid]
    rep = MixingReport(
        n=n_grid,
        psi=[markov_psi(chain, n) for n in n_grid],
        phi=[markov_phi(chain, n) for n in n_grid],
        rho=[markov_rho(chain, n) for n in n_grid],
        alpha=[markov_alpha(chain, n) for n in n_grid],
    )
    for name in ("psi", "phi", "rho", "alpha"):
        rep.fits[name] = loglinear_fit(n_grid, getattr(rep, name))
    return rep


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


def _path_prob(P, pi, path) -> object:
    out = pi[path[0]]
    for a, b in zip(path, path[1:]):
        out = out * P[a][b]
    return out


def brute_force_psi(chain: FiniteMarkovChain, n: int, h: int):
    """sup |P(B|A)/P(B) - 1| over past cylinders A and future cylinders B.

    A fixes the states at times k-a+1..k and B those at k+n..k+n+b-1, with
    1 <= a, b <= h.  Joint probabilities are summed over explicit paths
    through the n-1 intermediate times (no matrix powers), so this is an
    independent check of :func:`markov_psi`.  Atoms suffice: for a union of
    atoms the ratio is a weighted average of the atom ratios.
    """
    _require_mixing(chain)
    s = chain.s
    if s**h > ENUMERATION_CAP or s ** max(n - 1, 0) > ENUMERATION_CAP:
        raise ResourceCapError(f"enumeration of {s}**{max(h, n - 1)} paths exceeds the cap")
    P = chain.P if chain.exact else chain.float_P.tolist()
    pi = chain.pi if chain.exact else chain.float_pi.tolist()
    # bridge[x][y] = P(X_{k+n} = y | X_k = x) by summing over gap paths
    bridge = [[0] * s for _ in range(s)]
    for x in range(s):
        for mid in itertools.product(range(s), repeat=n - 1):
            path = (x, *mid)
            w = 1
            for a, b in zip(path, path[1:]):
                w = w * P[a][b]
            for y in range(s):
                bridge[x][y] = bridge[x][y] + w * P[path[-1]][y]
    best = 0
    for a in range(1, h + 1):
        for past in itertools.product(range(s), repeat=a):
            pa = _path_prob(P, pi, past)
            if pa == 0:
                continue
            for b in range(1, h + 1):
                for fut in itertools.product(range(s), repeat=b):
                    pb = _path_prob(P, pi, fut)
                    if pb == 0:
                        continue
                    tail = pb / pi[fut[0]]
                    joint = pa * bridge[past[-1]][fut[0]] * tail
                    best = max(best, abs(joint / (pa * pb) - 1))
    return Fraction(best) if chain.exact else float(best)


# ---------------------------------------------------------------------------
# interpolation bounds
# ---------------------------------------------------------------------------


class InterpolationBounds(NamedTuple):
    """Upper bounds for varpi_{q,p}(n) with q >= p from each coefficient."""

    alpha_bound: float
    rho_bound: float
    phi_bound: float
    psi_bound: float

    @property
    def minimum(self) -> float:
        return min(self)


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def interpolation_bounds(alpha, rho, phi, psi, p: float, q: float) -> InterpolationBounds:
    """(2 alpha)^(1/p-1/q), 2^(1+1/p-1/q) rho^(1-1/p+1/q), 2^(1+1/p) phi^(1-1/p), psi."""
    if not q >= p >= 1:
        raise ValueError("interpolation bounds need q >= p >= 1")
    ip, iq = _inv(p), _inv(q)
    return InterpolationBounds(
        alpha_bound=(2.0 * float(alpha)) ** (ip - iq),
        rho_bound=2.0 ** (1 + ip - iq) * float(rho) ** (1 - ip + iq),
        phi_bound=2.0 ** (1 + ip) * float(phi) ** (1 - ip),
        psi_bound=float(psi),
    )


# ---------------------------------------------------------------------------
# size -1/2
# ---------------------------------------------------------------------------


@dataclass
class SizeHalfReport:
    """Whether a_n = O((n^(1/2) L_n)^(-1)) with L_n = log n (log log n)^(1+delta).

    ``kind`` is "exponential", "eventually_zero", "power", or "none".
    ``constant`` is the largest a_n n^(1/2) L_n seen; ``tail_slope`` the
    log-log slope of that product over the upper third of the grid.
    """

    verdict: bool
    kind: str
    delta: float
    n_max: int
    constant: float
    tail_slope: float
    decay_rate: Optional[float] = None
    L_increment_ratio: float = float("nan")
    L_tail_sum_bound: float = float("nan")


def _L(n: np.ndarray, delta: float) -> np.ndarray:
    ln = np.log(n)
    return ln * np.log(ln) ** (1 + delta)


def _evaluate(a, n: np.ndarray) -> np.ndarray:
    if callable(a):
        return np.asarray([float(a(int(k))) for k in n])
    seq = np.asarray(a, dtype=float)
    return seq[n]


def size_minus_half(a, n_max: int = 10**6, delta: float = 0.5,
                    points: int = 240) -> SizeHalfReport:
    """Classify a decay sequence against the size -1/2 requirement.

    Exponential decay (a straight line in ln a_n versus n) qualifies for any
    L_n with polynomial growth.  Otherwise the product b_n = a_n n^(1/2) L_n
    must stay bounded: its maximum may not sit in the upper third of the grid
    and its log-log tail slope must be nonpositive.  L_n itself always meets
    the two side conditions (sum of 1/(n L_n) converges for delta > 0,
    n (L_n - L_{n-1}) / L_n stays bounded); both are reported as witnesses.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n_max < 30:
        raise ValueError("n_max must be at least 30")
    grid = np.unique(np.geomspace(3, n_max, points).astype(np.int64))
    vals = _evaluate(a, grid)
    if np.any(vals < 0):
        vals = np.abs(vals)
    L = _L(grid.astype(float), delta)
    gf = grid.astype(float)
    inc = float(np.max(gf[1:] * (L[1:] - _L(gf[1:] - 1, delta)) / L[1:]))
    tail_bound = float(np.log(np.log(n_max)) ** (-delta) / delta)
    common = dict(delta=delta, n_max=n_max, L_increment_ratio=inc, L_tail_sum_bound=tail_bound)

    const = float((vals * np.sqrt(gf) * L).max())
    nz = np.flatnonzero(vals > 0)
    top = int(grid[nz[-1]]) if nz.size else 0

    # exponential test on a linear grid over the range where a_n is representable
    if top >= 30:
        lin = np.unique(np.linspace(3, top, points).astype(np.int64))
        lv = _evaluate(a, lin)
        pos = lv > 0
        if pos.sum() >= 10:
            fit = loglinear_fit(lin[pos], lv[pos])
            if fit.slope < -1e-6 and fit.r2 >= 0.999:
                return SizeHalfReport(True, "exponential", constant=const,
                                      tail_slope=float("-inf"), decay_rate=-fit.slope, **common)
    if nz.size == 0 or (nz[-1] < len(grid) - 1 and np.all(vals[nz[-1] + 1:] == 0)):
        return SizeHalfReport(True, "eventually_zero", constant=const,
                              tail_slope=float("-inf"), **common)

    b = vals * np.sqrt(gf) * L
    third = len(grid) * 2 // 3
    tail = loglinear_fit(np.log(gf[third:]), b[third:])
    argmax = int(np.argmax(b))
    verdict = bool(argmax < third and tail.slope <= 0)
    return SizeHalfReport(verdict, "power" if verdict else "none", constant=float(b.max()),
                          tail_slope=tail.slope, **common)


# ---------------------------------------------------------------------------
# mixingale diagnostics
# ---------------------------------------------------------------------------


@dataclass
class DecayTable:
    """Rows (n, m, value) plus a log-linear fit of value against the varying axis."""

    rows: list
    axis: str
    fit: Optional[LogLinearFit] = None
    exact_squares: Optional[list] = None
    gaps: Optional[list] = None

    def values(self) -> list:
        return [r[2] for r in self.rows]

    def to_csv(self) -> str:
        head = "m,norm" if self.axis == "m" else "n,value"
        key = 1 if self.axis == "m" else 0
        return head + "\n" + "".join(f"{r[key]},{r[2]!r}\n" for r in self.rows)


def _component_table(chain, F: Observable, i: int):
    if F.ell > MAX_ELL:
        raise ResourceCapError(f"l = {F.ell} exceeds the cap {MAX_ELL}")
    dec = decompose(F, chain)
    table = dec.components[i - 1]
    if not dec.exact:
        table = np.asarray(table, dtype=float)
    return table


class _ChainPaths:
    """Joint laws of the stationary chain at finitely many sorted times."""

    def __init__(self, chain: FiniteMarkovChain):
        self.chain = chain
        self.pw = _Powers(chain)
        self.obs = chain.obs
        self.exact = chain.exact

    def joint(self, times: Sequence[int]) -> dict:
        """state tuple -> probability, for sorted distinct times."""
        s = self.chain.s
        pi = self.pw.pi
        out = {}
        gaps = [b - a for a, b in zip(times, times[1:])]
        mats = [self.pw.power(g) for g in gaps]
        for states in itertools.product(range(s), repeat=len(times)):
            p = pi[states[0]]
            for M, (x, y) in zip(mats, zip(states, states[1:])):
                p = p * M[x, y]
                if p == 0:
                    break
            if p != 0:
                out[states] = p
        return out


def _expectation(paths: _ChainPaths, table, times: Sequence[int]):
    """E table(obs(X_{t_1}), ..., obs(X_{t_i})) with possibly repeated times."""
    uniq = sorted(set(times))
    where = [uniq.index(t) for t in times]
    total = 0
    for states, p in paths.joint(uniq).items():
        total = total + p * table[tuple(paths.obs[states[w]] for w in where)]
    return total


def _conditional_norm_sq(paths: _ChainPaths, table, times: Sequence[int], t0: int, mean):
    """E[(E[f(X_times) | F_{<= t0}] - mean)^2] for a stationary chain.

    Coordinates at times <= t0 are measurable; by the Markov property the
    rest depends on the past only through the state at t0.
    """
    past = sorted({t for t in times if t <= t0} | {t0})
    future = sorted({t for t in times if t > t0})
    s = paths.chain.s
    law_past = paths.joint(past)
    fut_law = {}
    if future:
        gaps = [future[0] - t0] + [b - a for a, b in zip(future, future[1:])]
        mats = [paths.pw.power(g) for g in gaps]
        for x in range(s):
            rows = {}
            for ys in itertools.product(range(s), repeat=len(future)):
                p, prev = 1, x
                for M, y in zip(mats, ys):
                    p = p * M[prev, y]
                    prev = y
                    if p == 0:
                        break
                if p != 0:
                    rows[ys] = p
            fut_law[x] = rows
    total = 0
    for pstates, p in law_past.items():
        at = dict(zip(past, pstates))
        x0 = at[t0]
        if future:
            cond = 0
            for ys, w in fut_law[x0].items():
                at_f = dict(zip(future, ys))
                key = tuple(paths.obs[at[t] if t in at else at_f[t]] for t in times)
                cond = cond + w * table[key]
        else:
            cond = table[tuple(paths.obs[at[t]] for t in times)]
        dev = cond - mean
        total = total + p * dev * dev
    return total


def _sqrt(x) -> float:
    return math.sqrt(float(x)) if x > 0 else 0.0


def conditioning_gap(schedule: Schedule, i: int, m: int, n: int) -> Optional[int]:
    """Index distance between the conditioning time q_i(n - m) and the nearest
    needed coordinate, in thirds: min([(q_i(n) - q_(i-1)(n))/3], [(q_i(n) - q_i(n-m))/3]).

    The first term is dropped for i = 1.  None when n - m < 0 (trivial past).
    """
    if n - m < 0:
        return None
    terms = [(schedule(i, n) - schedule(i, n - m)) // 3]
    if i > 1:
        terms.append((schedule(i, n) - schedule(i - 1, n)) // 3)
    return min(terms)


def mixingale_decay(chain: FiniteMarkovChain, F: Observable, schedule: Schedule, i: int,
                    m_grid: Sequence[int], n_grid: Sequence[int]) -> DecayTable:
    """||E(Ybar_i(n) | F_{<= q_i(n-m)})||_2 over (n, m), exact for rational chains.

    Ybar_i(n) = F_i(X(q_1(n)), ..., X(q_i(n))) - E F_i(...).  For n - m < 0
    the conditioning sigma-algebra is trivial and the norm is 0; at n = m it
    is the past up to q_i(0).  ``gaps`` holds the separation
    min([(q_i(n) - q_(i-1)(n))/3], [(q_i(n) - q_i(n-m))/3]) of each row.
    """
    _require_mixing(chain)
    if not 1 <= i <= F.ell or F.ell != schedule.ell:
        raise ValueError("component index out of range or arity mismatch")
    table = _component_table(chain, F, i)
    paths = _ChainPaths(chain)
    rows, squares, gaps = [], [], []
    for n in n_grid:
        times = [schedule(j, n) for j in range(1, i + 1)]
        mean = _expectation(paths, table, times)
        for m in m_grid:
            gaps.append(conditioning_gap(schedule, i, m, n))
            if n - m < 0:
                sq = Fraction(0) if chain.exact else 0.0
            else:
                t0 = schedule(i, n - m)
                sq = _conditional_norm_sq(paths, table, times, t0, mean)
            squares.append(sq)
            rows.append((int(n), int(m), _sqrt(sq)))
    fit = loglinear_fit([r[1] for r in rows], [r[2] for r in rows]) if len(n_grid) == 1 else None
    return DecayTable(rows, "m", fit, squares if chain.exact else None, gaps)


def centering_decay(chain: FiniteMarkovChain, F: Observable, schedule: Schedule, i: int,
                    n_grid: Sequence[int]) -> DecayTable:
    """|E F_i(X(q_1(n)), ..., X(q_i(n)))| over n, exact for rational chains."""
    _require_mixing(chain)
    if not 1 <= i <= F.ell or F.ell != schedule.ell:
        raise ValueError("component index out of range or arity mismatch")
    table = _component_table(chain, F, i)
    paths = _ChainPaths(chain)
    rows, exact_vals = [], []
    for n in n_grid:
        times = [schedule(j, n) for j in range(1, i + 1)]
        v = _expectation(paths, table, times)
        exact_vals.append(v)
        rows.append((int(n), 0, abs(float(v))))
    fit = loglinear_fit([r[0] for r in rows], [r[2] for r in rows])
    return DecayTable(rows, "n", fit, exact_vals if chain.exact else None)


# ---------------------------------------------------------------------------
# assumption report
# ---------------------------------------------------------------------------


@dataclass
class AssumptionReport:
    """Bookkeeping for the moment/mixing assumption of the strong law.

    Finite alphabets have every moment, the approximation rate beta is
    identically 0 (X(n) is a function of the state at time n), and the
    mixing sequence is tested through its bounds in both index orders.
    """

    ell: int
    p: float
    q: float
    theta: float
    moment: float
    holder: tuple
    exponent_ok: bool
    theta_ok: bool
    beta_identically_zero: bool
    varpi_qp_bounds: list
    varpi_pq_bounds: list
    size_qp: SizeHalfReport
    size_pq: SizeHalfReport

    @property
    def holds(self) -> bool:
        return (self.exponent_ok and self.theta_ok and self.size_qp.verdict
                and self.size_pq.verdict)


def assumption_report(chain: FiniteMarkovChain, F: Observable, p: Optional[float] = None,
                      q: Optional[float] = None, theta: float = 0.5, moment: float = 24.0,
                      n_grid: Sequence[int] = tuple(range(1, 41))) -> AssumptionReport:
    """Check the exponent inequalities and the size -1/2 decay of the mixing bounds.

    Defaults p = 4 l and q = 2 p satisfy the inequalities for any l with
    iota = kappa = 1 and theta = 1/2.  varpi_{q,p} (q >= p) is bounded by the
    smallest interpolation bound; the reverse order varpi_{p,q} only by psi.
    """
    _require_mixing(chain)
    K, iota, kappa = F.holder()
    p = float(4 * F.ell if p is None else p)
    q = float(2 * p if q is None else q)
    d = F.ell - 1
    theta_ok = 0 < theta < kappa - d / p
    exponent_ok = 0.5 >= 1 / p + (iota + 2) / moment + theta / q
    qp, pq = [], []
    for n in n_grid:
        b = interpolation_bounds(markov_alpha(chain, n), markov_rho(chain, n),
                                 markov_phi(chain, n), markov_psi(chain, n), min(p, q), max(p, q))
        qp.append(b.minimum)
        pq.append(b.psi_bound)

    def seq_fn(vals):
        lookup = dict(zip(n_grid, vals))
        rate = loglinear_fit(list(n_grid), vals)
        last = n_grid[-1]

        # beyond the computed grid, extrapolate the fitted exponential rate
        def a(n):
            if n in lookup:
                return lookup[n]
            if vals[-1] == 0:
                return 0.0
            return vals[-1] * math.exp(rate.slope * (n - last)) if rate.slope < 0 else vals[-1]
        return a

    return AssumptionReport(
        ell=F.ell, p=p, q=q, theta=theta, moment=moment, holder=(K, iota, kappa),
        exponent_ok=bool(exponent_ok), theta_ok=bool(theta_ok), beta_identically_zero=True,
        varpi_qp_bounds=qp, varpi_pq_bounds=pq,
        size_qp=size_minus_half(seq_fn(qp), n_max=10**4),
        size_pq=size_minus_half(seq_fn(pq), n_max=10**4),
    )
