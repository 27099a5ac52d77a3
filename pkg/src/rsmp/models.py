"""Conditional models (g-function oracles) and finite-order Markov chains."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence

import networkx as nx
import numpy as np

from .measure import Alphabet, Distribution, StationaryWordMeasure, Word
from .numeric import EXACT, Backend, Number, scan_map


class ModelError(ValueError):
    pass


class MultiplicityError(ModelError):
    """The chain has more than one invariant measure."""


@dataclass(frozen=True)
class Estimate:
    """A computed sup together with whether it is exact and any declared bound."""

    value: Number
    exact: bool
    bound: Optional[Number] = None

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class DominatingMeasure:
    mass: tuple

    def __post_init__(self):
        if any(m < 0 for m in self.mass):
            raise ValueError("dominating measure must be nonnegative")

    @classmethod
    def counting(cls, size: int) -> "DominatingMeasure":
        return cls((Fraction(1),) * size)

    @property
    def total(self):
        return sum(self.mass)

    def tail(self, m: int):
        """Mass of symbols with 0-based index >= m."""
        return sum(self.mass[m:], 0 * self.mass[0])

    def dominates(self, dist: Sequence) -> bool:
        return all(p <= mu for p, mu in zip(dist, self.mass))


class ConditionalModel:
    """An oracle for ``P(X_0 = . | finite past word)``.

    ``cond`` maps a most-recent-first word to a probability vector.  For a
    model of finite ``order`` m only the first m symbols of a longer word
    matter.  ``var_bound(n)`` must dominate the n-th variation; finite-order
    models compute it exactly when it is not supplied.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        cond: Callable[[Word], Sequence[Number]],
        *,
        order: Optional[int] = None,
        var_bound: Optional[Callable[[int], Number]] = None,
        var_sum: Optional[Number] = None,
        ratio_bound: Optional[Callable[[int], float]] = None,
        dominating: Optional[DominatingMeasure] = None,
        word_prob: Optional[Callable[[Word], Number]] = None,
        probe_words: Optional[Callable[[int], Iterable[Word]]] = None,
        backend: Backend = EXACT,
        name: str = "",
        metadata: Optional[dict] = None,
    ):
        self.alphabet = alphabet
        self._cond = cond
        self.order = order
        self._var_bound = var_bound
        self._var_sum = var_sum
        self._ratio_bound = ratio_bound
        self._dominating = dominating
        self._word_prob = word_prob
        self.probe_words = probe_words
        self.backend = backend
        self.name = name
        self.metadata = dict(metadata or {})
        self._var_cache: Dict[int, Number] = {}

    def __repr__(self):
        return f"<{type(self).__name__} {self.name or ''} |A|={self.alphabet.size} order={self.order}>"

    def cond(self, word: Word) -> tuple:
        return tuple(self._cond(tuple(word)))

    def distribution(self, word: Word) -> Distribution:
        return Distribution(self.alphabet, self.cond(word), self.backend)

    @property
    def dominating(self) -> DominatingMeasure:
        if self._dominating is not None:
            return self._dominating
        return DominatingMeasure.counting(self.alphabet.size)

    @property
    def has_dominating(self) -> bool:
        return True  # finite alphabets always have the counting measure

    def var_bound(self, n: int) -> Number:
        if self._var_bound is not None:
            return self._var_bound(n)
        if self.order is None:
            raise ModelError("infinite-memory model needs a declared var_bound")
        if n not in self._var_cache:
            self._var_cache[n] = variation(self, n).value
        return self._var_cache[n]

    def var_sum(self) -> Optional[Number]:
        """``sum_{n>=1} var_bound(n)``; None when it cannot be certified."""
        if self._var_sum is not None:
            return self._var_sum
        if self.order is not None:
            return sum((self.var_bound(n) for n in range(1, self.order)), self.backend.zero())
        return None

    def ratio_bound(self, n: int) -> Optional[float]:
        return None if self._ratio_bound is None else self._ratio_bound(n)

    @property
    def has_word_prob(self) -> bool:
        return self._word_prob is not None

    def word_prob(self, word: Word) -> Number:
        if self._word_prob is None:
            raise ModelError("model has no stationary word measure")
        return self._word_prob(tuple(word))

    def words(self, n: int, positive_only: bool = False) -> List[Word]:
        """Words of length ``n`` to scan: positive-probability ones if asked and known."""
        if self.probe_words is not None and self.order is None:
            ws = list(self.probe_words(n))
        else:
            ws = list(self.alphabet.words(n))
        if positive_only and self.has_word_prob:
            ws = [w for w in ws if self.word_prob(w) > 0]
        return ws


class MarkovModel(ConditionalModel):
    """An order-m chain given by rows ``m-word -> distribution``.

    Rows come either as a mapping or as a function of the m-word; the latter
    keeps large catalog chains lazy.  Conditionals on words shorter than m
    are averaged over their older extensions under the stationary measure;
    zero-probability short words fall back to the uniform average.
    """

    STATE_LIMIT = 5000

    def __init__(self, alphabet: Alphabet, order: int, rows: Mapping[Word, Sequence] | None = None,
                 backend: Backend = EXACT, dominating=None, name: str = "", metadata=None,
                 row_fn: Callable[[Word], Sequence] | None = None, **kwargs):
        if order < 0:
            raise ModelError("order must be nonnegative")
        if (rows is None) == (row_fn is None):
            raise ModelError("give exactly one of rows and row_fn")
        self._rows: Dict[Word, tuple] = {}
        self._row_fn = row_fn
        if rows is not None:
            for w in alphabet.words(order):
                if w not in rows:
                    raise ModelError(f"missing row for word {alphabet.format_word(w)!r}")
                self._rows[w] = self._checked_row(alphabet, rows[w], backend)
        self._stationary: Optional[StationaryWordMeasure] = None
        self._stationary_error: Optional[Exception] = None
        self._marginals: Dict[int, Mapping[Word, Number]] = {}
        self._short: Dict[Word, tuple] = {}
        super().__init__(alphabet, self._markov_cond, order=order, backend=backend,
                         dominating=dominating, word_prob=self._markov_word_prob,
                         name=name, metadata=metadata, **kwargs)

    @staticmethod
    def _checked_row(alphabet, row, backend) -> tuple:
        row = tuple(backend.coerce(x) for x in row)
        Distribution(alphabet, row, backend)  # validates
        return row

    def row(self, w: Word) -> tuple:
        r = self._rows.get(w)
        if r is None:
            if self._row_fn is None:
                raise KeyError(w)
            r = self._checked_row(self.alphabet, self._row_fn(w), self.backend)
            self._rows[w] = r
        return r

    @property
    def state_count(self) -> int:
        return self.alphabet.size ** self.order

    @property
    def rows(self) -> Dict[Word, tuple]:
        """All rows, materialized."""
        if self.state_count > self.STATE_LIMIT:
            raise ModelError(f"{self.state_count} states are too many to enumerate")
        return {w: self.row(w) for w in self.alphabet.words(self.order)}

    @property
    def has_word_prob(self) -> bool:
        try:
            self.stationary()
        except ModelError:
            return False
        return True

    def stationary(self) -> StationaryWordMeasure:
        if self._stationary is None:
            if self._stationary_error is not None:
                raise self._stationary_error
            try:
                self._stationary = stationary_markov(self, self.backend)
            except ModelError as e:
                self._stationary_error = e
                raise
        return self._stationary

    def _markov_word_prob(self, w: Word) -> Number:
        m = self.order
        if m == 0:
            p = self.backend.one()
            for a in w:
                p *= self.row(())[a]
            return p
        mu = self.stationary()
        if len(w) <= m:
            marg = self._marginals.get(len(w))
            if marg is None:
                marg = self._marginals[len(w)] = mu.restrict(len(w)).mass
            return marg.get(w, self.backend.zero())
        p = mu[w[-m:]]
        for j in range(len(w) - m - 1, -1, -1):
            if not p:
                break
            p *= self.row(w[j + 1: j + 1 + m])[w[j]]
        return p

    def _markov_cond(self, w: Word) -> tuple:
        m = self.order
        if len(w) >= m:
            return self.row(w[:m])
        if w not in self._short:
            self._short[w] = self._average_rows(w)
        return self._short[w]

    def _average_rows(self, w: Word) -> tuple:
        m = self.order
        k = self.alphabet.size
        exts = [w + e for e in self.alphabet.words(m - len(w))]
        weights = None
        try:
            mu = self.stationary()
            weights = [mu[e] for e in exts]
            if not sum(weights):
                weights = None
        except MultiplicityError:
            weights = None
        if weights is None:
            weights = [self.backend.one()] * len(exts)
        total = sum(weights)
        out = [self.backend.zero()] * k
        for e, wt in zip(exts, weights):
            if wt:
                for a, q in enumerate(self.row(e)):
                    out[a] += wt * q
        return tuple(x / total for x in out)


def markov_chain(rows: Sequence[Sequence], labels: Sequence[str] | None = None,
                 backend: Backend = EXACT, name: str = "") -> MarkovModel:
    """Order-1 chain from a square row-stochastic matrix; ``rows[a][b] = P(b | a)``."""
    k = len(rows)
    alphabet = Alphabet(tuple(labels)) if labels else Alphabet.of_size(k)
    return MarkovModel(alphabet, 1, {(a,): rows[a] for a in range(k)}, backend, name=name)


def iid_model(probs: Sequence, labels: Sequence[str] | None = None,
              backend: Backend = EXACT, name: str = "") -> MarkovModel:
    alphabet = Alphabet(tuple(labels)) if labels else Alphabet.of_size(len(probs))
    return MarkovModel(alphabet, 0, {(): probs}, backend, name=name)


# ---------------------------------------------------------------------------
# variation and ratio coefficients


def _scan_words(model: ConditionalModel, k: int, depth: Optional[int], positive_only: bool):
    if depth is None:
        if model.order is None:
            raise ModelError("depth required for infinite-memory models")
        depth = max(model.order, k)
    if depth < k:
        raise ModelError(f"depth {depth} < k {k}")
    exact = model.order is not None and depth >= model.order
    length = model.order if exact else depth
    return model.words(length, positive_only), exact


def _group_extremes(model, words, k):
    groups: Dict[Word, list] = {}
    for w, row in zip(words, scan_map(model.cond, words)):
        key = w[:k]
        g = groups.get(key)
        if g is None:
            groups[key] = [list(row), list(row)]
        else:
            lo, hi = g
            for a, x in enumerate(row):
                if x < lo[a]:
                    lo[a] = x
                if x > hi[a]:
                    hi[a] = x
    return groups


def variation(model: ConditionalModel, k: int, depth: Optional[int] = None,
              positive_only: bool = False) -> Estimate:
    """sup over symbols and pasts agreeing on their k newest symbols of |cond difference|."""
    if model.order is not None and k >= model.order:
        return Estimate(model.backend.zero(), True, model.backend.zero())
    words, exact = _scan_words(model, k, depth, positive_only)
    best = model.backend.zero()
    for lo, hi in _group_extremes(model, words, k).values():
        for a in range(len(lo)):
            d = hi[a] - lo[a]
            if d > best:
                best = d
    bound = None if exact or model._var_bound is None else model._var_bound(k)
    return Estimate(best, exact, bound)


def ratio_sup(model: ConditionalModel, n: int, depth: Optional[int] = None,
              positive_only: bool = False) -> Estimate:
    """sup of cond(x)[a] / cond(y)[a] over x, y sharing their n newest symbols.

    0/0 counts as 1; a positive numerator over a zero denominator gives inf.
    """
    if model.order is not None and n >= model.order:
        return Estimate(model.backend.one(), True)
    words, exact = _scan_words(model, n, depth, positive_only)
    best = model.backend.one()
    for lo, hi in _group_extremes(model, words, n).values():
        for a in range(len(lo)):
            if hi[a] == 0:
                continue
            if lo[a] == 0:
                return Estimate(math.inf, exact)
            r = hi[a] / lo[a]
            if r > best:
                best = r
    return Estimate(best, exact)


def ratio_coeff(model: ConditionalModel, n: int, depth: Optional[int] = None,
                positive_only: bool = False) -> Estimate:
    """Berbee's coefficient: log of :func:`ratio_sup`."""
    s = ratio_sup(model, n, depth, positive_only)
    v = math.inf if s.value == math.inf else math.log(s.value)
    bound = model.ratio_bound(n)
    return Estimate(v, s.exact, bound)


# ---------------------------------------------------------------------------
# stationary solve


def _transition_graph(model: MarkovModel):
    m = model.order
    g = nx.DiGraph()
    states = list(model.alphabet.words(m))
    g.add_nodes_from(states)
    for w in states:
        for a, q in enumerate(model.row(w)):
            if q:
                g.add_edge(w, ((a,) + w)[:m])
    return g, states


def _solve_exact(states, model) -> Dict[Word, Fraction]:
    """Exact invariant vector by state reduction (Grassmann-Taksar-Heyman).

    States are censored one at a time, cheapest first, on a sparse
    transition map; back substitution then recovers the invariant weights.
    """
    m = model.order
    members = set(states)
    out: Dict[Word, Dict[Word, Fraction]] = {s: {} for s in states}
    inn: Dict[Word, set] = {s: set() for s in states}
    for s in states:
        for a, q in enumerate(model.row(s)):
            if q:
                t = ((a,) + s)[:m]
                if t in members and t != s:
                    out[s][t] = out[s].get(t, 0) + Fraction(q)
                    inn[t].add(s)
    remaining = set(states)
    steps = []
    while len(remaining) > 1:
        n = min(remaining, key=lambda x: (len(out[x]) * len(inn[x]), x))
        leave = out.pop(n)
        total = sum(leave.values())
        arrive = {i: out[i].pop(n) for i in inn.pop(n)}
        for j in leave:
            inn[j].discard(n)
        for i, qi in arrive.items():
            row = out[i]
            for j, qj in leave.items():
                if j == i:
                    continue  # self-loops drop out of the censored chain
                row[j] = row.get(j, 0) + qi * qj / total
                inn[j].add(i)
        steps.append((n, arrive, total))
        remaining.discard(n)
    pi: Dict[Word, Fraction] = {remaining.pop(): Fraction(1)}
    for n, arrive, total in reversed(steps):
        pi[n] = sum((pi[i] * q for i, q in arrive.items()), Fraction(0)) / total
    norm = sum(pi.values())
    return {s: v / norm for s, v in pi.items()}


def _solve_float(states, model, tol) -> Dict[Word, float]:
    m = model.order
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    P = np.zeros((n, n))
    for i, s in enumerate(states):
        for a, q in enumerate(model.row(s)):
            if q:
                t = ((a,) + s)[:m]
                if t in idx:
                    P[i, idx[t]] += float(q)
    A = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    resid = np.abs(pi @ P - pi).max()
    if resid > max(tol, 1e-12) * 10:
        raise ModelError(f"invariance residual {resid:.3e} exceeds tolerance")
    return {s: float(pi[i]) for i, s in enumerate(states)}


def stationary_markov(model: MarkovModel, be: Backend | None = None) -> StationaryWordMeasure:
    """Unique invariant measure on m-words of an order-m chain.

    Raises :class:`MultiplicityError` when the positive-transition graph has
    more than one closed class.
    """
    be = be or model.backend
    m = model.order
    if m == 0:
        return StationaryWordMeasure(model.alphabet, 0, {(): be.one()})
    if model.state_count > model.STATE_LIMIT:
        raise ModelError(f"{model.state_count} states are too many for a stationary solve")
    g, states = _transition_graph(model)
    closed = [c for c in nx.attracting_components(g)]
    if len(closed) != 1:
        raise MultiplicityError(f"{len(closed)} closed classes; invariant measure not unique")
    cls = sorted(closed[0])
    if be.exact:
        sol = _solve_exact(cls, model)
    else:
        sol = _solve_float(cls, model, be.tolerance)
    mass = {s: sol.get(s, be.zero()) for s in states}
    return StationaryWordMeasure(model.alphabet, m, {w: v for w, v in mass.items() if v})


def invariance_residual(model: MarkovModel, mu: StationaryWordMeasure):
    """max |(mu P)(w) - mu(w)| over m-words."""
    m = model.order
    if m == 0:
        return 0
    out: Dict[Word, Number] = {w: 0 * mu.total for w in model.alphabet.words(m)}
    for s, v in mu.mass.items():
        for a, q in enumerate(model.row(s)):
            if q:
                t = ((a,) + s)[:m]
                out[t] += v * q
    return max(abs(out[w] - mu[w]) for w in out)
