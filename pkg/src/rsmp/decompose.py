"""Random-step Markov representations and the greedy deterministic decomposition.

A representation is a list of levels.  Level ``k`` carries a look-back
depth ``n``, a mass ``p`` (the probability that the look-back equals this
level) and a table mapping the relevant part of the ``n``-past to either a
single symbol (deterministic) or a probability vector (general table values).

Tables only record the past positions they read, so a depth-64 level of an
order-1 chain is keyed by one symbol rather than by 64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .measure import Alphabet, SubMeasure, Word, tv_distance, tv_norm
from .models import ConditionalModel, DominatingMeasure, variation
from .numeric import EXACT, Backend, Number, format_number, scan_map

DEFAULT_RESIDUAL_TARGET = 1e-9
DEFAULT_K_MAX = 64
DEFAULT_DEPTH_LIMIT = 10_000


class DecompositionError(ValueError):
    pass


class InconsistentTables(DecompositionError):
    """The tables assign more mass to some symbol than the conditional law allows."""


class NotUniformMartingaleError(DecompositionError):
    """No positive level mass is available at the searched resolution."""


class DepthLimitError(DecompositionError):
    pass


class PreconditionError(DecompositionError):
    pass


TableValue = Union[int, Tuple[Number, ...]]


@dataclass
class TableFunction:
    """One level of a representation.

    ``values`` maps a key (the symbols of the past at ``positions``) to a
    symbol index or to a probability vector.  ``law(w)`` is the normalized
    table value; ``sub(w)`` is the sub-measure ``p * law(w)``.
    """

    n: int
    p: Number
    positions: Tuple[int, ...]
    values: Dict[Word, TableValue]
    alphabet_size: int

    def __post_init__(self):
        self.positions = tuple(self.positions)
        if self.n < 0:
            raise ValueError("level depth must be nonnegative")
        if self.positions and max(self.positions) >= self.n:
            raise ValueError(f"table reads position {max(self.positions)} beyond its depth {self.n}")

    @property
    def key_depth(self) -> int:
        return max(self.positions) + 1 if self.positions else 0

    @property
    def deterministic(self) -> bool:
        return all(isinstance(v, int) for v in self.values.values())

    def key(self, w: Word) -> Word:
        return tuple(w[i] for i in self.positions)

    def raw(self, w: Word) -> TableValue:
        k = self.key(w)
        try:
            return self.values[k]
        except KeyError:
            raise DecompositionError(f"level n={self.n} has no table entry for key {k}") from None

    def law(self, w: Word) -> tuple:
        v = self.raw(w)
        if isinstance(v, int):
            one = 1 + 0 * self.p
            zero = 0 * self.p
            return tuple(one if a == v else zero for a in range(self.alphabet_size))
        return tuple(v)

    def sub(self, w: Word) -> tuple:
        return tuple(self.p * x for x in self.law(w))


@dataclass(frozen=True)
class LookBackDistribution:
    levels: Tuple[Tuple[int, Number], ...]
    backend: Backend = EXACT

    def __post_init__(self):
        for n, p in self.levels:
            if p < -self.backend.tolerance:
                raise ValueError("negative look-back mass")
        if self.residual < -self.backend.tolerance:
            raise ValueError("look-back masses exceed 1")

    @property
    def total(self):
        return sum((p for _, p in self.levels), self.backend.zero())

    @property
    def residual(self):
        return self.backend.one() - self.total

    def complete(self, tol) -> bool:
        return self.residual <= tol

    def tail(self, n: int):
        """``P(L > n)``, counting the unassigned residual as look-back beyond every level."""
        return self.residual + sum((p for m, p in self.levels if m > n), self.backend.zero())

    @property
    def expected(self):
        return sum((m * p for m, p in self.levels), self.backend.zero())


@dataclass
class RandomMarkovRepresentation:
    alphabet: Alphabet
    tables: List[TableFunction]
    kind: str = "deterministic"
    backend: Backend = EXACT
    diagnostics: dict = field(default_factory=dict)
    index_function: Optional[dict] = None

    def __post_init__(self):
        if self.kind not in ("deterministic", "general"):
            raise ValueError(f"unknown representation kind {self.kind!r}")

    @property
    def lookback(self) -> LookBackDistribution:
        return LookBackDistribution(tuple((t.n, t.p) for t in self.tables), self.backend)

    @property
    def residual(self):
        return self.lookback.residual

    @property
    def expected_lookback(self):
        return self.lookback.expected

    @property
    def key_depth(self) -> int:
        return max((t.key_depth for t in self.tables), default=0)

    @property
    def max_n(self) -> int:
        return max((t.n for t in self.tables), default=0)

    def mixture(self, w: Word) -> tuple:
        """``sum_k T_k(. ; w)``, the part of the conditional law explained by the tables."""
        out = [self.backend.zero()] * self.alphabet.size
        for t in self.tables:
            for a, x in enumerate(t.sub(w)):
                out[a] += x
        return tuple(out)

    def truncated(self, k: int) -> "RandomMarkovRepresentation":
        return RandomMarkovRepresentation(self.alphabet, self.tables[:k], self.kind, self.backend,
                                          dict(self.diagnostics), self.index_function)


@dataclass
class CompleteRMP:
    """A representation whose look-back law has (numerically) no residual, with its process."""

    representation: RandomMarkovRepresentation
    model: ConditionalModel
    tolerance: float = DEFAULT_RESIDUAL_TARGET
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.representation.residual > self.tolerance:
            raise DecompositionError(
                f"representation residual {self.representation.residual} exceeds {self.tolerance}")

    @property
    def alphabet(self) -> Alphabet:
        return self.representation.alphabet


# ---------------------------------------------------------------------------
# leftover measures and the greedy recursion


def leftover(model: ConditionalModel, tables: Sequence[TableFunction], w: Word,
             be: Backend | None = None) -> SubMeasure:
    """``cond(w)`` minus the mass already assigned by ``tables``."""
    be = be or model.backend
    need = max((t.key_depth for t in tables), default=0)
    if len(w) < need:
        raise ValueError(f"word of length {len(w)} shorter than table depth {need}")
    vec = _leftover_vec(model, tables, w)
    for a, x in enumerate(vec):
        if x < -be.tolerance:
            raise InconsistentTables(
                f"leftover mass {x} < 0 for symbol {model.alphabet.label(a)!r} at word "
                f"{model.alphabet.format_word(w)!r}")
    return SubMeasure(vec, be)


def _leftover_vec(model, tables, w) -> list:
    vec = list(model.cond(w))
    for t in tables:
        for a, x in enumerate(t.sub(w)):
            vec[a] -= x
    return vec


def choose_M(dominating: DominatingMeasure, gamma) -> int:
    """Least ``M >= 1`` with the mass of symbols of index ``>= M`` below ``gamma / 10``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    mass = dominating.mass
    limit = gamma / 10 if isinstance(gamma, float) else Fraction(gamma) / 10
    tail = sum(mass, 0 * mass[0])
    for m in range(1, len(mass) + 1):
        tail -= mass[m - 1]
        if tail < limit:
            return m
    return len(mass)  # unreachable: the tail is empty at M = |A|


def _argmax(vec) -> int:
    best = 0
    for a in range(1, len(vec)):
        if vec[a] > vec[best]:
            best = a
    return best


def _eval_length(model: ConditionalModel, n: int) -> int:
    return n if model.order is None else min(n, model.order)


def _scan(model, tables, length, positive_only):
    """Per-word leftover maxima at the given word length, and the minimizing witness."""
    words = model.words(length, positive_only)
    if not words:
        raise DecompositionError(f"no words of length {length} to scan")
    choice: Dict[Word, int] = {}
    best, witness = None, None
    vecs = scan_map(lambda w: _leftover_vec(model, tables, w), words)
    for w, vec in zip(words, vecs):
        a = _argmax(vec)
        choice[w] = a
        if best is None or vec[a] < best:
            best, witness = vec[a], w
    if positive_only and model.has_word_prob:
        # give the zero-probability pasts a table entry too, without letting them set r
        for w in model.alphabet.words(length) if model.order is not None else ():
            if w not in choice:
                choice[w] = _argmax(_leftover_vec(model, tables, w))
    return best, witness, choice


def _check_model(model: ConditionalModel):
    if model.alphabet.size < 1:
        raise DecompositionError("empty alphabet")


def decompose(model: ConditionalModel, residual_target=DEFAULT_RESIDUAL_TARGET,
              k_max: int = DEFAULT_K_MAX, positive_only: bool = True,
              dominating: DominatingMeasure | None = None,
              depth_limit: int = DEFAULT_DEPTH_LIMIT) -> RandomMarkovRepresentation:
    """Greedy deterministic decomposition with the level rule of the general theorem.

    At level k: ``gamma`` is the unassigned mass, ``M = choose_M(mu, gamma)``,
    ``n_k`` is the least depth beyond ``n_{k-1}`` with
    ``2 var(n) <= 9 gamma / (10 M)``, ``r_k`` is the least (over pasts) largest
    leftover entry, and ``p_k = r_k - var(n_k)``.  Each past is sent to its
    leftover argmax, lowest index on ties.
    """
    _check_model(model)
    be = model.backend
    mu = dominating or model.dominating
    if len(mu.mass) != model.alphabet.size:
        raise ValueError("dominating measure does not match the alphabet")
    tables: List[TableFunction] = []
    levels_diag = []
    gamma = be.one()
    n_prev = 0
    while len(tables) < k_max and gamma > residual_target:
        M = choose_M(mu, gamma)
        threshold = 9 * gamma / (10 * M)
        n = n_prev + 1
        while 2 * model.var_bound(n) > threshold:
            n += 1
            if n > depth_limit:
                raise DepthLimitError(f"no depth up to {depth_limit} meets the variation threshold")
        length = _eval_length(model, n)
        r, witness, choice = _scan(model, tables, length, positive_only)
        var_n = model.var_bound(n)
        p = r - var_n
        if p <= be.tolerance:
            raise NotUniformMartingaleError(
                f"level {len(tables) + 1}: r={r} does not exceed var({n})={var_n}; witness "
                f"{model.alphabet.format_word(witness)!r}")
        tables.append(TableFunction(n, p, tuple(range(length)), choice, model.alphabet.size))
        levels_diag.append({"k": len(tables), "n": n, "r": r, "var": var_n, "p": p, "M": M,
                            "gamma": gamma, "witness": witness})
        gamma = gamma - p
        n_prev = n
    return RandomMarkovRepresentation(model.alphabet, tables, "deterministic", be,
                                      {"variant": "a", "levels": levels_diag})


def decompose_finite_expectation(model: ConditionalModel, residual_target=DEFAULT_RESIDUAL_TARGET,
                                 k_max: int = DEFAULT_K_MAX, positive_only: bool = True,
                                 depth_limit: int = DEFAULT_DEPTH_LIMIT) -> RandomMarkovRepresentation:
    """Decomposition with a capped level rule that keeps ``E[L]`` finite.

    With ``n_0 = r_0 = 1`` and ``M = |A|``, ``n_k`` is the least depth beyond
    ``n_{k-1}`` where ``r = min(inf_w max_a leftover, (1 - 1/M^2) r_{k-1})``
    is at least ``2 var(n)``; then ``p_k = r - var(n_k)``.  When run to
    completion ``sum n_k p_k <= 2 M^2 (1 + sum_n var(n))``.
    """
    _check_model(model)
    be = model.backend
    total_var = model.var_sum()
    if total_var is None:
        raise PreconditionError("summability of the variations is not certified")
    if total_var == math.inf:
        raise PreconditionError("declared variations are not summable")
    M = model.alphabet.size
    cap_factor = 1 - be.one() / (M * M)
    tables: List[TableFunction] = []
    levels_diag = []
    gamma = be.one()
    n_prev, r_prev = 1, be.one()
    while len(tables) < k_max and gamma > residual_target:
        n = n_prev + 1
        scanned: Dict[int, tuple] = {}
        while True:
            length = _eval_length(model, n)
            if length not in scanned:
                scanned[length] = _scan(model, tables, length, positive_only)
            inf_max, witness, choice = scanned[length]
            r = min(inf_max, cap_factor * r_prev)
            var_n = model.var_bound(n)
            if r >= 2 * var_n:
                break
            n += 1
            if n > depth_limit:
                raise DepthLimitError(f"no depth up to {depth_limit} meets the capped level rule")
        p = r - var_n
        if p <= be.tolerance:
            raise NotUniformMartingaleError(
                f"level {len(tables) + 1}: no positive mass at depth {n}; witness "
                f"{model.alphabet.format_word(witness)!r}")
        tables.append(TableFunction(n, p, tuple(range(length)), choice, M))
        levels_diag.append({"k": len(tables), "n": n, "r": r, "var": var_n, "p": p,
                            "gamma": gamma, "witness": witness, "capped": r < inf_max})
        gamma = gamma - p
        n_prev, r_prev = n, r
    bound = 2 * M * M * (1 + total_var)
    return RandomMarkovRepresentation(model.alphabet, tables, "deterministic", be,
                                      {"variant": "b", "levels": levels_diag, "var_sum": total_var,
                                       "expectation_bound": bound})


# ---------------------------------------------------------------------------
# verification


@dataclass
class Failure:
    name: str
    witness: Optional[Word]
    detail: str = ""


@dataclass
class VerifyReport:
    ok: bool
    failures: List[Failure]
    gap: Number
    residual: Number
    length: int
    exact: bool
    checked_words: int

    def __bool__(self):
        return self.ok

    def first(self) -> Optional[Failure]:
        return self.failures[0] if self.failures else None


def _table_failures(rep: RandomMarkovRepresentation, be: Backend) -> List[Failure]:
    out = []
    for k, t in enumerate(rep.tables, 1):
        for key, v in t.values.items():
            if isinstance(v, int):
                if not 0 <= v < rep.alphabet.size:
                    out.append(Failure("table-symbol", key, f"level {k}: symbol {v} out of range"))
                continue
            if len(v) != rep.alphabet.size:
                out.append(Failure("table-normalization", key, f"level {k}: wrong vector length"))
                continue
            if any(x < -be.tolerance for x in v) or not be.eq(sum(v), 1):
                out.append(Failure("table-normalization", key, f"level {k}: values {list(v)}"))
            if rep.kind == "deterministic":
                ones = [x for x in v if x != 0]
                if len(ones) != 1 or not be.eq(ones[0], 1):
                    out.append(Failure("determinism", key,
                                       f"level {k}: table values {[format_number(x) for x in v]} not in {{0,1}}"))
    return out


def verify_representation(model: ConditionalModel, rep: RandomMarkovRepresentation,
                          depth: Optional[int] = None, positive_only: bool = True,
                          tolerance: float | None = None, check_lookback: bool = True) -> VerifyReport:
    """Check a representation against its model on every past of the evaluation length.

    Checks: table normalization and (for deterministic kinds) {0,1} values;
    condition (ii), mixture <= cond entrywise; reconstruction gap against the
    residual; the TV/look-back inequality and ``var(n) <= 2 P(L > n)``.
    """
    be = model.backend
    tol = be.tolerance if tolerance is None else tolerance
    kd = rep.key_depth
    if depth is None:
        depth = max(kd, model.order if model.order is not None else rep.max_n)
    if depth < kd:
        raise ValueError(f"depth {depth} below the representation's table depth {kd}")
    failures = _table_failures(rep, be)
    exact = model.order is not None and depth >= model.order
    length = max(model.order, kd) if exact else depth
    words = model.words(length, positive_only)
    lb = rep.lookback
    residual = lb.residual
    worst_gap = be.zero()
    slack = be.zero() if exact else model.var_bound(depth)
    for w in words:
        c = model.cond(w)
        try:
            mix = rep.mixture(w)
        except DecompositionError as e:
            failures.append(Failure("table-lookup", w, str(e)))
            continue
        diff = [x - y for x, y in zip(c, mix)]
        bad = [a for a, d in enumerate(diff) if d < -(tol + slack)]
        if bad:
            failures.append(Failure("condition-ii", w,
                                    f"mixture exceeds cond at symbol {rep.alphabet.label(bad[0])!r}"))
        gap = tv_norm(diff)
        if gap > worst_gap:
            worst_gap = gap
        if exact and not bad and abs(gap - residual) > tol:
            failures.append(Failure("reconstruction-gap", w, f"gap {gap} != residual {residual}"))
        elif gap > residual + slack + tol:
            failures.append(Failure("reconstruction-gap", w, f"gap {gap} > residual {residual}"))
    if check_lookback:
        top = min(rep.max_n, length)
        for n in range(0, top + 1):
            bound = lb.tail(n)
            sup, wit = be.zero(), None
            for w in words:
                d = tv_distance(model.cond(w), model.cond(w[:n]))
                if d > sup:
                    sup, wit = d, w
            if sup > bound + tol:
                failures.append(Failure("tv-lookback", wit, f"n={n}: sup TV {sup} > P(L>n) {bound}"))
            if model.order is not None:
                v = variation(model, n, depth=length, positive_only=positive_only).value
            else:
                v = model.var_bound(n)
            if v > 2 * bound + tol:
                failures.append(Failure("variation-lookback", None, f"n={n}: var {v} > 2 P(L>n) {2 * bound}"))
    return VerifyReport(not failures, failures, worst_gap, residual, length, exact, len(words))


def demonstrate_collapse(model: ConditionalModel, depths: Sequence[int],
                         positive_only: bool = True) -> List[dict]:
    """For each depth, the least (over probed pasts) largest conditional probability.

    With no tables assigned this is the largest mass a first level at that
    depth could take; a value tending to 0 rules out any positive level.
    """
    rows = []
    for d in depths:
        length = _eval_length(model, d)
        best, witness = None, None
        for w in model.words(length, positive_only):
            m = max(model.cond(w))
            if best is None or m < best:
                best, witness = m, w
        rows.append({"depth": d, "value": best, "witness": witness})
    return rows
