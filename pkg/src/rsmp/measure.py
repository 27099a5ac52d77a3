"""Alphabets, words, distributions and stationary word measures.

Words are tuples of symbol indices stored most-recent-first: position 0 is
the symbol one step in the past, position ``j`` is ``j + 1`` steps back.
The n-past of a longer past is therefore a prefix.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, Mapping, Sequence, Tuple

from .numeric import EXACT, Backend, Number, format_number, parse_number

Word = Tuple[int, ...]


class AlphabetMismatch(ValueError):
    pass


class NotStationaryError(ValueError):
    pass


class CouplingError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    symbols: Tuple[str, ...]

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if not symbols:
            raise ValueError("alphabet must be nonempty")
        if len(set(symbols)) != len(symbols):
            raise ValueError("alphabet labels must be distinct")
        for s in symbols:
            if "," in s:
                raise ValueError(f"label {s!r} contains a comma")

    @classmethod
    def of_size(cls, n: int) -> "Alphabet":
        return cls(tuple(str(i) for i in range(n)))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def index(self, label: str) -> int:
        try:
            return self.symbols.index(str(label))
        except ValueError:
            raise KeyError(f"unknown symbol {label!r}") from None

    def label(self, i: int) -> str:
        return self.symbols[i]

    def words(self, n: int) -> Iterator[Word]:
        return itertools.product(range(self.size), repeat=n)

    def format_word(self, w: Sequence[int]) -> str:
        return ",".join(self.symbols[i] for i in w)

    def parse_word(self, s: str) -> Word:
        s = s.strip()
        if not s:
            return ()
        return tuple(self.index(t.strip()) for t in s.split(","))

    def check_word(self, w: Sequence[int]) -> Word:
        w = tuple(w)
        for i in w:
            if not 0 <= i < self.size:
                raise ValueError(f"symbol index {i} outside alphabet of size {self.size}")
        return w


def _total(values) -> Number:
    return sum(values, Fraction(0)) if values and isinstance(values[0], Fraction) else sum(values)


class Distribution:
    """A probability vector over an alphabet."""

    __slots__ = ("alphabet", "mass")

    def __init__(self, alphabet: Alphabet, mass: Sequence, be: Backend = EXACT):
        mass = tuple(be.coerce(m) for m in mass)
        if len(mass) != alphabet.size:
            raise AlphabetMismatch(f"expected {alphabet.size} masses, got {len(mass)}")
        if any(m < -be.tolerance for m in mass):
            raise ValueError("negative mass")
        if not be.eq(_total(mass), 1):
            raise ValueError(f"masses sum to {_total(mass)}, not 1")
        self.alphabet = alphabet
        self.mass = mass

    def __getitem__(self, a: int):
        return self.mass[a]

    def __iter__(self):
        return iter(self.mass)

    def __len__(self):
        return len(self.mass)

    @property
    def total(self):
        return _total(self.mass)

    def __eq__(self, other):
        if isinstance(other, Distribution):
            return self.alphabet == other.alphabet and self.mass == other.mass
        return NotImplemented

    def __repr__(self):
        return f"Distribution({[format_number(m) for m in self.mass]})"


class SubMeasure:
    """A nonnegative vector with total mass in [0, 1]."""

    __slots__ = ("mass",)

    def __init__(self, mass: Sequence, be: Backend = EXACT):
        mass = tuple(mass)
        if any(m < -be.tolerance for m in mass):
            raise ValueError("negative mass in sub-measure")
        t = _total(mass)
        if t > 1 + be.tolerance:
            raise ValueError("sub-measure total exceeds 1")
        self.mass = mass

    @property
    def total(self):
        return _total(self.mass)

    def __getitem__(self, a):
        return self.mass[a]

    def __iter__(self):
        return iter(self.mass)

    def __len__(self):
        return len(self.mass)

    def __repr__(self):
        return f"SubMeasure({[format_number(m) for m in self.mass]})"


def _vec(d) -> tuple:
    if isinstance(d, (Distribution, SubMeasure)):
        return d.mass
    return tuple(d)


def tv_distance(d1, d2):
    """Total variation distance ``1/2 * sum |d1 - d2|``."""
    if isinstance(d1, Distribution) and isinstance(d2, Distribution):
        if d1.alphabet != d2.alphabet:
            raise AlphabetMismatch("distributions live on different alphabets")
    a, b = _vec(d1), _vec(d2)
    if len(a) != len(b):
        raise AlphabetMismatch("vectors have different lengths")
    return sum((abs(x - y) for x, y in zip(a, b)), 0 * a[0]) / 2


def tv_norm(signed) -> Number:
    """``sup_E |nu(E)|`` for a signed vector: max of positive and negative parts.

    Agrees with :func:`tv_distance` when applied to a difference of two
    probability vectors, and equals the missing mass when comparing a
    sub-measure against a dominating probability vector.
    """
    v = _vec(signed)
    z = 0 * v[0]
    pos = sum((x for x in v if x > 0), z)
    neg = sum((-x for x in v if x < 0), z)
    return max(pos, neg)


# ---------------------------------------------------------------------------
# stationary word measures


@dataclass(frozen=True)
class StationaryWordMeasure:
    """A measure on words of fixed length ``depth``.

    Keys are most-recent-first words; a key ``(t, a_1, ..., a_{n-2}, s)``
    has ``t`` as the newest symbol and ``s`` as the oldest.
    """

    alphabet: Alphabet
    depth: int
    mass: Mapping[Word, Number] = field(default_factory=dict)

    def __post_init__(self):
        for w, v in self.mass.items():
            if len(w) != self.depth:
                raise ValueError(f"word {w} has length {len(w)}, expected {self.depth}")
            if v < 0:
                raise ValueError("negative word mass")

    def __getitem__(self, w: Word):
        return self.mass.get(tuple(w), 0 * next(iter(self.mass.values()), 0))

    @property
    def total(self):
        return _total(list(self.mass.values()))

    def newer_marginal(self) -> Dict[Word, Number]:
        """Drop the oldest symbol: the law of the newest ``depth-1`` symbols."""
        out: Dict[Word, Number] = {}
        for w, v in self.mass.items():
            out[w[:-1]] = out.get(w[:-1], 0) + v
        return out

    def older_marginal(self) -> Dict[Word, Number]:
        """Drop the newest symbol: the law of the oldest ``depth-1`` symbols."""
        out: Dict[Word, Number] = {}
        for w, v in self.mass.items():
            out[w[1:]] = out.get(w[1:], 0) + v
        return out

    def restrict(self, n: int) -> "StationaryWordMeasure":
        """Marginal on the newest ``n`` symbols."""
        out: Dict[Word, Number] = {}
        for w, v in self.mass.items():
            out[w[:n]] = out.get(w[:n], 0) + v
        return StationaryWordMeasure(self.alphabet, n, out)

    def prob(self, w: Word) -> Number:
        """Probability of the newest ``len(w)`` symbols equalling ``w``."""
        w = tuple(w)
        if len(w) > self.depth:
            raise ValueError("word longer than measure depth")
        return sum((v for u, v in self.mass.items() if u[: len(w)] == w), 0 * self.total)


@dataclass
class StationarityReport:
    discrepancy: Number
    passed: bool
    witness: Word | None = None

    def __bool__(self):
        return self.passed


def check_stationary(mu: StationaryWordMeasure, be: Backend = EXACT) -> StationarityReport:
    """Compare the two ``depth-1`` marginals of ``mu`` word by word."""
    if mu.depth <= 1:
        return StationarityReport(abs(mu.total - 1) if mu.depth == 1 else 0, be.eq(mu.total, 1))
    left = mu.older_marginal()
    right = mu.newer_marginal()
    worst, witness = 0 * mu.total, None
    for w in set(left) | set(right):
        d = abs(left.get(w, 0) - right.get(w, 0))
        if d > worst:
            worst, witness = d, w
    return StationarityReport(worst, worst <= be.tolerance, witness)


# Coupling rules take (middle word, older law, newer law) and return a joint
# law {(older, newer): mass}.  The laws are probability vectors over A.
Coupling = Callable[[Word, tuple, tuple], Dict[Tuple[int, int], Number]]


def independent_coupling(middle: Word, older: tuple, newer: tuple):
    return {(s, t): older[s] * newer[t] for s in range(len(older)) for t in range(len(newer))
            if older[s] and newer[t]}


def maximal_coupling(middle: Word, older: tuple, newer: tuple):
    """Put ``min(older, newer)`` on the diagonal, couple the rest independently."""
    common = [min(p, q) for p, q in zip(older, newer)]
    out = {(s, s): c for s, c in enumerate(common) if c}
    rest = 1 - sum(common)
    if rest > 0:
        ro = [p - c for p, c in zip(older, common)]
        rn = [q - c for q, c in zip(newer, common)]
        for s, x in enumerate(ro):
            for t, y in enumerate(rn):
                if x and y:
                    out[(s, t)] = out.get((s, t), 0) + x * y / rest
    return out


def markov_coupling(cond: Callable[[Word], Sequence]) -> Coupling:
    """Couple by drawing the newest symbol from ``cond`` given the older block.

    Valid whenever the input measure is stationary for ``cond``; the
    marginal check in :func:`extend_stationary` catches the other cases.
    """
    def rule(middle: Word, older: tuple, newer: tuple):
        out = {}
        for s, ps in enumerate(older):
            if not ps:
                continue
            row = cond(tuple(middle) + (s,))
            for t, q in enumerate(row):
                if q:
                    out[(s, t)] = ps * q
        return out
    return rule


def extend_stationary(mu: StationaryWordMeasure, coupling: Coupling = independent_coupling,
                      be: Backend = EXACT) -> StationaryWordMeasure:
    """Build a depth ``n+1`` measure whose two depth-``n`` marginals equal ``mu``.

    For each middle word ``a`` of length ``n-1``, the conditional laws of
    the older and of the newer neighbour of ``a`` are coupled by
    ``coupling`` and weighted by the mass of ``a``.
    """
    rep = check_stationary(mu, be)
    if not rep.passed:
        raise NotStationaryError(f"input not stationary (discrepancy {rep.discrepancy} at {rep.witness})")
    k = mu.alphabet.size
    zero = be.zero()
    if mu.depth == 0:
        raise ValueError("depth-0 measure has nothing to extend; start from depth 1")
    # conditional laws given each middle word
    older_of: Dict[Word, list] = {}
    newer_of: Dict[Word, list] = {}
    for w, v in mu.mass.items():
        older_of.setdefault(w[:-1], [zero] * k)[w[-1]] += v
        newer_of.setdefault(w[1:], [zero] * k)[w[0]] += v
    base = mu.newer_marginal() if mu.depth > 1 else {(): mu.total}
    out: Dict[Word, Number] = {}
    for a, weight in base.items():
        if not weight:
            continue
        older = tuple(x / weight for x in older_of.get(a, [zero] * k))
        newer = tuple(x / weight for x in newer_of.get(a, [zero] * k))
        joint = coupling(a, older, newer)
        ms = [zero] * k
        mt = [zero] * k
        for (s, t), q in joint.items():
            if q < -be.tolerance:
                raise CouplingError("coupling produced negative mass")
            ms[s] += q
            mt[t] += q
        for x, y in zip(ms + mt, older + newer):
            if not be.eq(x, y):
                raise CouplingError(f"coupling marginals do not match at middle word {a}")
        for (s, t), q in joint.items():
            if q:
                key = (t,) + a + (s,)
                out[key] = out.get(key, zero) + weight * q
    return StationaryWordMeasure(mu.alphabet, mu.depth + 1, out)


# ---------------------------------------------------------------------------
# JSON


def measure_to_json(mu: StationaryWordMeasure) -> dict:
    return {
        "alphabet": list(mu.alphabet.symbols),
        "depth": mu.depth,
        "mass": {mu.alphabet.format_word(w): format_number(v) for w, v in sorted(mu.mass.items())},
    }


def measure_from_json(doc: dict, be: Backend = EXACT) -> StationaryWordMeasure:
    alphabet = Alphabet(tuple(doc["alphabet"]))
    depth = int(doc["depth"])
    mass = {alphabet.parse_word(k): parse_number(v, be) for k, v in doc["mass"].items()}
    return StationaryWordMeasure(alphabet, depth, mass)


def distribution_to_json(d: Distribution) -> dict:
    return {
        "alphabet": list(d.alphabet.symbols),
        "depth": 1,
        "mass": {d.alphabet.label(i): format_number(v) for i, v in enumerate(d.mass)},
    }


def distribution_from_json(doc: dict, be: Backend = EXACT) -> Distribution:
    mu = measure_from_json(doc, be)
    if mu.depth != 1:
        raise ValueError("a distribution is a depth-1 measure")
    return Distribution(mu.alphabet, [mu[(i,)] for i in range(mu.alphabet.size)], be)


def uniform_measure(alphabet: Alphabet, depth: int = 1) -> StationaryWordMeasure:
    k = alphabet.size
    q = Fraction(1, k ** depth)
    return StationaryWordMeasure(alphabet, depth, {w: q for w in alphabet.words(depth)})


def depth_one(alphabet: Alphabet, probs: Iterable, be: Backend = EXACT) -> StationaryWordMeasure:
    return StationaryWordMeasure(alphabet, 1, {(i,): be.coerce(p) for i, p in enumerate(probs)})
