"""Determinization of general representations by binary digit expansions.

Every level of a general representation is split into countably many
deterministic levels.  For a level at look-back ``i`` with mass ``p`` the
new level ``F(i, i_1, ..., i_n)`` has mass ``p * 2^-(i_1 + ... + i_n)``; its
table follows the ``i_r``-th binary digits of the conditional bit
probabilities of the symbol, encoded big-endian into ``n`` bits.  ``F`` is
an injective index function with ``F(i, ...) >= i``, so the new look-back
still covers the old table's past.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union

from sympy import prime as _sympy_prime

from .decompose import RandomMarkovRepresentation, TableFunction
from .measure import Word

DEFAULT_DIGIT_DEPTH = 40
DEFAULT_COMPLETE_TOL = 1e-9
PRIME_INDEX_LIMIT = 100_000


class DeterminizeError(ValueError):
    pass


class BoundNotClaimed(UserWarning):
    """The 35 i weight bound is only claimed for the Balister family."""


# ---------------------------------------------------------------------------
# digit expansions


@dataclass(frozen=True)
class DigitExpansion:
    digits: Tuple[int, ...]
    value: Fraction

    @property
    def partial(self) -> Fraction:
        return sum((Fraction(d, 2 ** k) for k, d in enumerate(self.digits, 1)), Fraction(0))


def _exact(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, int):
        return Fraction(q)
    return Fraction(float(q))  # exact binary value of the float


def canonical_digits(q, depth: int) -> DigitExpansion:
    """First ``depth`` binary digits of ``q`` under the canonical rule.

    ``0`` expands to all zeros; any ``q > 0`` takes its non-terminating
    expansion, so dyadic values end in ones: ``1/2 = 0.0111...``.
    """
    x = _exact(q)
    if x < 0 or x > 1:
        raise ValueError(f"{q} is outside [0, 1]")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    digits = []
    rem = x
    step = Fraction(1, 2)
    for _ in range(depth):
        if rem > step:
            digits.append(1)
            rem -= step
        else:
            digits.append(0)
        step /= 2
    return DigitExpansion(tuple(digits), x)


def split_digits(q, depth: int) -> Tuple[DigitExpansion, DigitExpansion]:
    """Digits for a two-way split ``(q, 1 - q)``: the "1" branch takes the
    canonical expansion of ``q`` and the "0" branch its exact complement.

    At every position exactly one branch carries a 1, and the complement
    digits still expand ``1 - q``.
    """
    ones = canonical_digits(q, depth)
    zeros = DigitExpansion(tuple(1 - d for d in ones.digits), 1 - ones.value)
    return ones, zeros


# ---------------------------------------------------------------------------
# index functions


@dataclass(frozen=True)
class PrimePower:
    """``prime(m) ** j`` for a prime index too large to evaluate."""

    m: "IndexValue"
    j: int

    @property
    def lower_bound(self) -> int:
        # the m-th prime exceeds m, and so does every positive power of it
        base = self.m.lower_bound if isinstance(self.m, PrimePower) else self.m
        return base + 1

    def __ge__(self, other):
        if isinstance(other, int):
            return self.lower_bound >= other
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, int):
            return self.lower_bound > other
        return NotImplemented

    def __repr__(self):
        return f"prime({self.m})**{self.j}"


IndexValue = Union[int, PrimePower]


class BalisterSets:
    """``B_i^0 = {4i-1}`` and ``B_i^r = {4t+1, 4t+2 : t in B_i^(r-1)}``.

    Level ``r`` holds ``2^r`` elements, all larger than those of level
    ``r-1``, and within a level the order follows the binary choices read
    from the first step on.
    """

    @staticmethod
    def level(i: int, r: int) -> List[int]:
        cur = [4 * i - 1]
        for _ in range(r):
            cur = [4 * t + d for t in cur for d in (1, 2)]
        return cur

    @staticmethod
    def element(i: int, j: int) -> int:
        """The ``j``-th smallest element of ``B_i`` (1-based)."""
        if i < 1 or j < 1:
            raise ValueError("indices are positive integers")
        r = j.bit_length() - 1
        pos = j - (1 << r)
        t = 4 * i - 1
        for s in range(r - 1, -1, -1):
            t = 4 * t + 1 + ((pos >> s) & 1)
        return t


@lru_cache(maxsize=4096)
def _prime(i: int) -> int:
    return int(_sympy_prime(i))


@dataclass(frozen=True)
class IndexFunction:
    """Injective ``F_n : (Z+)^(n+1) -> Z+`` with ``F_n(i_0, ...) >= i_0``.

    ``F_1(i, j)`` is the ``j``-th smallest element of ``B_i`` and
    ``F_n(i_0, ..., i_n) = F_1(F_(n-1)(i_0, ..., i_(n-1)), i_n)``.
    """

    family: str
    arity: int

    def __post_init__(self):
        if self.family not in ("prime", "balister"):
            raise ValueError(f"unknown index family {self.family!r}")
        if self.arity < 2:
            raise ValueError("arity must be at least 2")

    @property
    def n(self) -> int:
        return self.arity - 1

    def f1(self, i: IndexValue, j: int) -> IndexValue:
        if self.family == "balister":
            return BalisterSets.element(i, j)
        if isinstance(i, PrimePower) or i > PRIME_INDEX_LIMIT:
            return PrimePower(i, j)
        return _prime(i) ** j

    def __call__(self, *args: int) -> IndexValue:
        if len(args) != self.arity:
            raise ValueError(f"expected {self.arity} arguments, got {len(args)}")
        if any(a < 1 for a in args):
            raise ValueError("arguments are positive integers")
        v: IndexValue = args[0]
        for j in args[1:]:
            v = self.f1(v, j)
        return v


def index_function(family: str, arity: int) -> IndexFunction:
    return IndexFunction(family, arity)


# ---------------------------------------------------------------------------
# weights and expected look-back


@dataclass
class FWeight:
    partial: Fraction
    tail_bound: Optional[Fraction]
    total_bound: Union[Fraction, float]
    bound_holds: Optional[bool]
    diverges: bool

    def __float__(self):
        return float(self.partial)


def f_weight(F: IndexFunction, i0: int, depth: int) -> FWeight:
    """``sum_{j <= depth} F_1(i0, j) 2^-j`` with a bound on the remaining terms.

    Every element of ``B_i`` at level ``r`` is below ``4^(r+1) i``, and its
    rank ``j`` is at least ``2^r``, so ``F_1(i, j) <= 4 i j^2``.  The tail
    is therefore at most ``4 i (6 - sum_{j <= depth} j^2 2^-j)``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    g = IndexFunction(F.family, 2)
    partial = sum((Fraction(g(i0, j), 2 ** j) for j in range(1, depth + 1)), Fraction(0))
    if F.family != "balister":
        warnings.warn("the 35 i bound is not claimed for this index family", BoundNotClaimed, stacklevel=2)
        last = Fraction(g(i0, depth), 2 ** depth)
        return FWeight(partial, None, math.inf, None, diverges=last >= 1)
    head = sum((Fraction(j * j, 2 ** j) for j in range(1, depth + 1)), Fraction(0))
    tail = 4 * i0 * (6 - head)
    total = partial + tail
    return FWeight(partial, tail, total, total <= 35 * i0, diverges=False)


@dataclass
class ExpectedLookback:
    expected: Union[Fraction, float]
    bound: Union[Fraction, float]
    holds: Optional[bool]
    diverges: bool
    vacuous: bool


def det_expected_lookback(rep: RandomMarkovRepresentation, F: IndexFunction,
                          base_expected=None) -> ExpectedLookback:
    """``E[L]`` of a determinized representation checked against ``35^n E[L_base]``.

    ``base_expected`` defaults to the value recorded by :func:`determinize`.
    An infinite base expectation makes the bound vacuous; the prime family
    has constant weighted terms and is flagged divergent.
    """
    if base_expected is None:
        base_expected = rep.diagnostics.get("base_expected_lookback")
    if base_expected is None:
        raise DeterminizeError("base expected look-back unknown")
    expected = sum((Fraction(t.n) * Fraction(t.p) for t in rep.tables), Fraction(0))
    if F.family == "prime":
        return ExpectedLookback(math.inf, math.inf, None, True, base_expected == math.inf)
    if base_expected == math.inf:
        return ExpectedLookback(expected, math.inf, None, False, True)
    bound = Fraction(35) ** F.n * Fraction(base_expected)
    return ExpectedLookback(expected, bound, expected <= bound, False, False)


# ---------------------------------------------------------------------------
# determinize


def _bits(symbol: int, n: int) -> Tuple[int, ...]:
    return tuple((symbol >> (n - 1 - r)) & 1 for r in range(n))


def merge_equal_depths(rep: RandomMarkovRepresentation) -> List[TableFunction]:
    """Combine levels that share a look-back depth into one mass-weighted level."""
    groups: Dict[int, List[TableFunction]] = {}
    for t in rep.tables:
        groups.setdefault(t.n, []).append(t)
    out = []
    size = rep.alphabet.size
    for n in sorted(groups):
        ts = groups[n]
        if len(ts) == 1:
            out.append(ts[0])
            continue
        positions = tuple(sorted(set().union(*(t.positions for t in ts))))
        p = sum((t.p for t in ts), 0 * ts[0].p)
        keys = _joint_keys(ts, positions)
        values = {}
        for key in keys:
            w = _word_from_key(key, positions)
            acc = [0 * p] * size
            for t in ts:
                for a, x in enumerate(t.sub(w)):
                    acc[a] += x
            values[key] = tuple(x / p for x in acc)
        out.append(TableFunction(n, p, positions, values, size))
    return out


def _word_from_key(key: Word, positions: Tuple[int, ...]) -> Word:
    if not positions:
        return ()
    w = [0] * (max(positions) + 1)
    for pos, s in zip(positions, key):
        w[pos] = s
    return tuple(w)


def _joint_keys(ts: Sequence[TableFunction], positions: Tuple[int, ...]) -> List[Word]:
    """All keys on the union of positions consistent with some entry of every table."""
    options: Dict[int, set] = {pos: set() for pos in positions}
    for t in ts:
        for key in t.values:
            for pos, s in zip(t.positions, key):
                options[pos].add(s)
    keys = []
    for combo in product(*(sorted(options[pos]) for pos in positions)):
        w = _word_from_key(combo, positions)
        if all(t.key(w) in t.values for t in ts):
            keys.append(combo)
    return keys


def _bit_probabilities(law: Sequence, n: int) -> Dict[Tuple[int, ...], Fraction]:
    """``P(Y^r = 1 | Y^1..Y^(r-1) = prefix)`` for every prefix; 0 on null prefixes."""
    weights: Dict[Tuple[int, ...], Fraction] = {}
    for s, x in enumerate(law):
        if x:
            b = _bits(s, n)
            for r in range(n + 1):
                weights[b[:r]] = weights.get(b[:r], Fraction(0)) + _exact(x)
    out = {}
    for prefix in weights:
        if len(prefix) == n:
            continue
        one = weights.get(prefix + (1,), Fraction(0))
        out[prefix] = one / weights[prefix]
    return out


def determinize(rep: RandomMarkovRepresentation, F: IndexFunction,
                digit_depth: int = DEFAULT_DIGIT_DEPTH,
                complete_tol=DEFAULT_COMPLETE_TOL) -> RandomMarkovRepresentation:
    """Turn a general representation into a deterministic one.

    Digits are cut at ``digit_depth`` per coordinate; the dropped mass,
    ``p (1 - (1 - 2^-D)^n)`` per base level, is added to the residual.
    """
    size = rep.alphabet.size
    n = F.n
    if size > 2 ** n:
        raise DeterminizeError(f"alphabet of size {size} needs more than {n} bits; raise the arity")
    if rep.residual > complete_tol:
        raise DeterminizeError(f"base representation is incomplete (residual {rep.residual})")
    if digit_depth < 1:
        raise ValueError("digit_depth must be positive")
    base = merge_equal_depths(rep)
    tables: List[TableFunction] = []
    accounting = []
    base_expected = sum((Fraction(t.n) * Fraction(t.p) for t in base), Fraction(0))
    for t in base:
        p = Fraction(t.p)
        # per key: the chain of bit probabilities and their digits
        digit_maps = {}
        for key in t.values:
            w = _word_from_key(key, t.positions)
            probs = _bit_probabilities(t.law(w), n)
            digit_maps[key] = {prefix: split_digits(q, digit_depth) for prefix, q in probs.items()}
        placed = Fraction(0)
        for idx in product(range(1, digit_depth + 1), repeat=n):
            depth = F(t.n, *idx)
            if not isinstance(depth, int):
                raise DeterminizeError(f"index value {depth!r} is too large to use as a look-back depth")
            mass = p / 2 ** sum(idx)
            values = {}
            for key, dm in digit_maps.items():
                prefix: Tuple[int, ...] = ()
                for r in range(n):
                    split = dm.get(prefix)
                    bit = split[0].digits[idx[r] - 1] if split else 0
                    prefix = prefix + (bit,)
                symbol = int("".join(map(str, prefix)), 2) if prefix else 0
                if symbol >= size:
                    raise DeterminizeError(f"digit path led to unused code {symbol} at key {key}")
                values[key] = symbol
            tables.append(TableFunction(depth, mass, t.positions, values, size))
            placed += mass
        gap = p - placed
        accounting.append({"n": t.n, "p": p, "placed": placed, "gap": gap,
                           "gap_bound": n * p / 2 ** digit_depth})
    tables.sort(key=lambda tf: tf.n)
    if not rep.backend.exact:
        for tf in tables:
            tf.p = float(tf.p)
    diagnostics = {"source": "determinize", "digit_depth": digit_depth, "levels": accounting,
                   "base_residual": rep.residual, "base_expected_lookback": base_expected}
    return RandomMarkovRepresentation(rep.alphabet, tables, "deterministic", rep.backend,
                                      diagnostics, {"family": F.family, "arity": F.arity})
