"""Representations from the ratio condition via tau measures.

Given target look-back masses ``p_1, p_2, ...`` and depths
``n_1 <= n_2 <= ...``, write ``S_i = p_1 + ... + p_i`` and ``mu_i`` for the
conditional law given the ``n_i``-past.  The level tables are

    tau_1 = mu_1,    tau_i = (S_i mu_i - S_(i-1) mu_(i-1)) / p_i,

so that ``p_1 tau_1 + ... + p_i tau_i = S_i mu_i`` telescopes.  The depths
are chosen so that the ratio coefficient keeps every tau nonnegative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

from .decompose import DecompositionError, RandomMarkovRepresentation, TableFunction
from .measure import Word
from .models import ConditionalModel, ratio_coeff
from .numeric import EXACT, Backend

DEFAULT_LEVEL_COUNT = 30
DEFAULT_PROBE_DEPTH = 64


class CannotCertify(DecompositionError):
    """The ratio coefficient does not fall below a level threshold within the probe range."""


class TauNegative(DecompositionError):
    def __init__(self, level: int, word: Word, value):
        super().__init__(f"tau at level {level} is negative ({value}) at word {word}")
        self.level = level
        self.word = word
        self.value = value


@dataclass(frozen=True)
class RatioLevels:
    p: tuple
    n: tuple

    def __post_init__(self):
        if len(self.p) != len(self.n):
            raise ValueError("p and n must have the same length")
        if any(q <= 0 for q in self.p):
            raise ValueError("level masses must be positive")
        if sum(self.p) > 1:
            raise ValueError("level masses sum to more than 1")
        if any(b < a for a, b in zip(self.n, self.n[1:])):
            raise ValueError("level depths must be non-decreasing")
        if any(x < 0 for x in self.n):
            raise ValueError("level depths must be nonnegative")

    @property
    def residual(self):
        return 1 - sum(self.p)

    def partial(self, i: int):
        """``S_i``, the mass of the first ``i`` levels (1-based)."""
        return sum(self.p[:i], 0 * self.p[0])

    def __len__(self):
        return len(self.p)


def default_masses(count: int = DEFAULT_LEVEL_COUNT, be: Backend = EXACT) -> tuple:
    """``p_i = 2^-i`` for ``i = 1..count``."""
    return tuple(be.coerce(Fraction(1, 2 ** i)) for i in range(1, count + 1))


def thresholds(p: Sequence) -> List:
    """Allowed multiplicative deviation per level: ``p_1 / 2``, then ``p_i / (2 S_i)``."""
    out = []
    s = 0 * p[0]
    for i, q in enumerate(p):
        s += q
        out.append(q / 2 if i == 0 else q / (2 * s))
    return out


def choose_levels(rc: Callable[[int], float], p: Sequence, probe_limit: int = DEFAULT_PROBE_DEPTH,
                  start: int = 1) -> RatioLevels:
    """Least non-decreasing depths with ``exp(rc(n)) - 1`` strictly below each threshold.

    ``rc(n)`` is a (log) ratio coefficient; depths are searched from ``start``
    (at least 1) up to ``probe_limit``.
    """
    ns: List[int] = []
    n = max(start, 1)
    cache = {}

    def dev(m: int) -> float:
        if m not in cache:
            r = float(rc(m))
            cache[m] = math.inf if r == math.inf else math.expm1(r)
        return cache[m]

    for i, t in enumerate(thresholds(p), 1):
        while not dev(n) < float(t):
            n += 1
            if n > probe_limit:
                raise CannotCertify(
                    f"level {i}: ratio deviation stays >= {float(t):.3g} up to depth {probe_limit}")
        ns.append(n)
    return RatioLevels(tuple(p), tuple(ns))


def model_rc(model: ConditionalModel, probe_depth: int = DEFAULT_PROBE_DEPTH,
             positive_only: bool = False) -> Callable[[int], float]:
    """The ratio coefficient used for level selection.

    Exact for finite-order models.  Otherwise the declared bound is used;
    an estimate from finite words would not certify anything.
    """
    def rc(n: int) -> float:
        declared = model.ratio_bound(n)
        if model.order is not None:
            value = ratio_coeff(model, n, positive_only=positive_only).value
            return value if declared is None else max(value, declared)
        if declared is None:
            raise CannotCertify("infinite-memory model without a declared ratio bound")
        return declared
    return rc


def _mu(model: ConditionalModel, w: Word, n: int) -> tuple:
    return model.cond(w[:n])


def tau(model: ConditionalModel, levels: RatioLevels, i: int, w: Word) -> tuple:
    """The level-``i`` table law (1-based) at past ``w``."""
    if not 1 <= i <= len(levels):
        raise IndexError(f"level {i} outside 1..{len(levels)}")
    n_i = levels.n[i - 1]
    if len(w) < _key_length(model, n_i):
        raise ValueError(f"word of length {len(w)} is shorter than the level depth")
    mu_i = _mu(model, w, n_i)
    if i == 1:
        return tuple(mu_i)
    mu_prev = _mu(model, w, levels.n[i - 2])
    # same value as (S_i mu_i - S_(i-1) mu_(i-1)) / p_i, without the float cancellation
    scale = levels.partial(i - 1) / levels.p[i - 1]
    return tuple(a + scale * (a - b) for a, b in zip(mu_i, mu_prev))


def _key_length(model: ConditionalModel, n: int) -> int:
    return n if model.order is None else min(n, model.order)


def ratio_decompose(model: ConditionalModel, p: Optional[Sequence] = None,
                    probe_depth: int = DEFAULT_PROBE_DEPTH, n: Optional[Sequence[int]] = None,
                    positive_only: bool = True) -> RandomMarkovRepresentation:
    """Build a general representation with ``P(L = n_i) = p_i`` and tables ``tau_i``.

    ``p`` defaults to ``2^-i`` for 30 levels.  Depths come from
    :func:`choose_levels` unless given explicitly as ``n``.  A negative tau
    on a positive-probability past raises :class:`TauNegative`; on a
    zero-probability past the table falls back to ``mu_i``.
    """
    be = model.backend
    if p is None:
        p = default_masses(DEFAULT_LEVEL_COUNT, be)
    p = tuple(be.coerce(q) for q in p)
    if not p:
        raise ValueError("need at least one level")
    if sum(p) > 1 + be.tolerance:
        raise ValueError("level masses are not summable to at most 1")
    rc = model_rc(model, probe_depth)
    if n is None:
        levels = choose_levels(rc, p, probe_depth)
    else:
        levels = RatioLevels(p, tuple(n))
    check_positive = positive_only and model.has_word_prob
    size = model.alphabet.size
    tables: List[TableFunction] = []
    diag = []
    ths = thresholds(p)
    for i in range(1, len(levels) + 1):
        n_i = levels.n[i - 1]
        length = _key_length(model, n_i)
        values = {}
        for w in model.words(length):
            t = tau(model, levels, i, w)
            bad = [x for x in t if x < -be.tolerance]
            if bad:
                if check_positive and model.word_prob(w) == 0:
                    t = tuple(_mu(model, w, n_i))
                else:
                    raise TauNegative(i, w, min(bad))
            values[w] = t
        tables.append(TableFunction(n_i, p[i - 1], tuple(range(length)), values, size))
        diag.append({"i": i, "n": n_i, "p": p[i - 1], "threshold": ths[i - 1], "rc": rc(max(n_i, 1))})
    return RandomMarkovRepresentation(model.alphabet, tables, "general", be,
                                      {"source": "ratio", "levels": diag})
