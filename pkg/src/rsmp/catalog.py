"""The example processes, truncated to finite alphabets.

Countable alphabets are cut at a level given as a constructor parameter.
Where possible the cut lumps the tail into the last state, so that the
stationary law of every state below the cut is reproduced exactly; the
scheme used is recorded in ``metadata["truncation"]``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Dict, List

from .decompose import CompleteRMP, RandomMarkovRepresentation, TableFunction
from .measure import Alphabet, Word
from .models import ConditionalModel, DominatingMeasure, MarkovModel, ModelError, iid_model, markov_chain
from .numeric import EXACT, FLOAT, Backend


class UnknownExample(KeyError):
    pass


def _half_pow(k: int) -> Fraction:
    return Fraction(1, 2 ** k)


# ---------------------------------------------------------------------------
# rm-notMarkov: a random Markov process that is not a finite-step chain


def rm_not_markov(K: int = 12, backend: Backend = EXACT) -> CompleteRMP:
    """Symbols ``(bit, l)``; with probability ``p_l`` the present copies the bit
    ``l`` steps back (kept w.p. 1/4, flipped w.p. 3/4) and records ``l``.

    ``p_l = 2^-l`` for ``l < K``; level ``K`` takes the tail mass ``2^-(K-1)``.
    """
    if K < 1:
        raise ModelError("rm-notMarkov needs K >= 1")
    labels = [f"{b}:{l}" for l in range(1, K + 1) for b in (0, 1)]
    alphabet = Alphabet(tuple(labels))
    size = alphabet.size
    one = backend.one()
    p = [backend.coerce(_half_pow(l)) for l in range(1, K)] + [backend.coerce(_half_pow(K - 1))]
    keep, flip = backend.coerce(Fraction(1, 4)), backend.coerce(Fraction(3, 4))

    def sym(bit: int, l: int) -> int:
        return 2 * (l - 1) + bit

    def row(w: Word):
        out = [0 * one] * size
        for l in range(1, K + 1):
            b = w[l - 1] % 2
            out[sym(b, l)] += p[l - 1] * keep
            out[sym(1 - b, l)] += p[l - 1] * flip
        return out

    def var_bound(n: int):
        return max(p[n:], default=0 * one) / 2

    model = MarkovModel(alphabet, K, row_fn=row, backend=backend, name="rm-notMarkov",
                        var_bound=var_bound,
                        metadata={"truncation": {"K": K, "scheme": "look-back K takes the tail mass 2^-(K-1)"}})
    tables = []
    for l in range(1, K + 1):
        values = {}
        for s in range(size):
            law = [0 * one] * size
            b = s % 2
            law[sym(b, l)] = keep
            law[sym(1 - b, l)] = flip
            values[(s,)] = tuple(law)
        tables.append(TableFunction(l, p[l - 1], (l - 1,), values, size))
    rep = RandomMarkovRepresentation(alphabet, tables, "general", backend,
                                     {"source": "rm-notMarkov", "K": K})
    return CompleteRMP(rep, model, metadata=dict(model.metadata))


def bit_projection(K: int, backend: Backend = EXACT) -> MarkovModel:
    """The bit coordinate of rm-notMarkov, an order-K chain on {0, 1}."""
    p = [_half_pow(l) for l in range(1, K)] + [_half_pow(K - 1)]

    def row(w: Word):
        q0 = sum((pl * (Fraction(1, 4) if w[l] == 0 else Fraction(3, 4)) for l, pl in enumerate(p)),
                 Fraction(0))
        return (q0, 1 - q0)

    return MarkovModel(Alphabet.of_size(2), K, row_fn=row, backend=backend, name="rm-notMarkov bits")


# ---------------------------------------------------------------------------
# not-determ: a countable-state chain with no deterministic representation


def not_determ(n_max: int = 21, backend: Backend = FLOAT) -> MarkovModel:
    """Pairs ``(n, k)``: ``n`` is a walk on {0, 1, ...} (up 1/3, down 2/3, 0 -> 1),
    ``k`` uniform on ``[1, max(1, n)]``.

    The top level ``n_max`` stands for every ``n >= n_max``: it moves down
    with probability 1/3 and stays otherwise, which keeps ``pi(n, k)`` exact
    for ``n < n_max``.
    """
    if n_max < 2:
        raise ModelError("not-determ needs n_max >= 2")
    states = [(0, 1)] + [(n, k) for n in range(1, n_max + 1) for k in range(1, n + 1)]
    alphabet = Alphabet(tuple(f"{n}:{k}" for n, k in states))
    index = {s: i for i, s in enumerate(states)}
    size = len(states)

    def level(n: int, mass: Fraction) -> Dict[int, Fraction]:
        width = max(1, n)
        return {index[(n, k)]: mass / width for k in range(1, width + 1)}

    def row(w: Word):
        n = states[w[0]][0]
        out: Dict[int, Fraction] = {}
        if n == 0:
            out = level(1, Fraction(1))
        elif n < n_max:
            out.update(level(n - 1, Fraction(2, 3)))
            out.update(level(n + 1, Fraction(1, 3)))
        else:
            out.update(level(n - 1, Fraction(1, 3)))
            out.update(level(n, Fraction(2, 3)))
        vec = [Fraction(0)] * size
        for i, q in out.items():
            vec[i] = q
        return vec

    return MarkovModel(alphabet, 1, row_fn=row, backend=backend, name="not-determ",
                       metadata={"truncation": {"n_max": n_max,
                                                "scheme": "top level lumps n >= n_max; down 1/3, stay 2/3"},
                                 "states": [list(s) for s in states]})


def not_determ_stationary(n: int, k: int) -> Fraction:
    """The stationary law of the untruncated chain."""
    if (n, k) == (0, 1):
        return Fraction(1, 4)
    if n >= 1 and 1 <= k <= n:
        return Fraction(3, n * 2 ** (n + 2))
    raise ValueError(f"({n}, {k}) is not a state")


# ---------------------------------------------------------------------------
# inf-look-back: i.i.d. with blocks of size 4^i


def inf_look_back(I: int = 3, backend: Backend = EXACT) -> MarkovModel:
    """Independent symbols; block ``Z_i`` has ``4^i`` symbols of mass ``2^-i 4^-i``,
    renormalized over ``i <= I``."""
    if I < 1:
        raise ModelError("inf-look-back needs at least one block (I >= 1)")
    labels, probs = [], []
    norm = 1 - _half_pow(I)
    for i in range(1, I + 1):
        for j in range(1, 4 ** i + 1):
            labels.append(f"{i}:{j}")
            probs.append(Fraction(1, 2 ** i * 4 ** i) / norm)
    m = iid_model([backend.coerce(q) for q in probs], labels, backend, name="inf-look-back")
    m._dominating = DominatingMeasure(tuple(m.row(())))
    m._var_sum = backend.zero()
    m.metadata["truncation"] = {"I": I, "scheme": "blocks i <= I, renormalized by 1 - 2^-I"}
    return m


# ---------------------------------------------------------------------------
# rwbins: bins on a biased walk, a uniform martingale with collapsing levels


def rwbins(bmax: int = 40, backend: Backend = EXACT) -> ConditionalModel:
    """Pairs ``(b, y)`` with ``y in [1, b+1]``; ``b`` walks up 1/3, down 2/3, 1 -> 2.

    ``y`` avoids the value seen ``2b`` steps back when the bin there is also
    ``b``; otherwise it is uniform.  The walk stays at ``bmax`` instead of
    moving up.  Only a bounded-depth oracle: it never reads past ``2 bmax``.
    """
    if bmax < 3:
        raise ModelError("rwbins needs bmax >= 3")
    states = [(b, y) for b in range(1, bmax + 1) for y in range(1, b + 2)]
    alphabet = Alphabet(tuple(f"{b}:{y}" for b, y in states))
    index = {s: i for i, s in enumerate(states)}
    size = len(states)
    zero = backend.zero()

    pi = {1: Fraction(1, 4)}
    for b in range(2, bmax):
        pi[b] = Fraction(3, 2 ** (b + 1))
    pi[bmax] = 1 - sum(pi.values())

    def walk(prev: int) -> Dict[int, Fraction]:
        if prev == 1:
            return {2: Fraction(1)}
        up = prev + 1 if prev < bmax else prev
        out = {prev - 1: Fraction(2, 3)}
        out[up] = out.get(up, Fraction(0)) + Fraction(1, 3)
        return out

    def cond(w: Word):
        vec = [zero] * size
        if not w:
            for (b, y), i in index.items():
                vec[i] = backend.coerce(pi[b] / (b + 1))
            return vec
        prev = states[w[0]][0]
        for b, q in walk(prev).items():
            pos = 2 * b - 1
            excluded = None
            if pos < len(w) and states[w[pos]][0] == b:
                excluded = states[w[pos]][1]
            for y in range(1, b + 2):
                if y == excluded:
                    continue
                vec[index[(b, y)]] = backend.coerce(q / (b if excluded else b + 1))
        return vec

    def probe_words(d: int) -> List[Word]:
        """Alternating pasts ``m+1, m+2, ...`` with ``y = 1``, plus a variant
        that returns to bin ``m`` exactly ``2m`` steps back."""
        out = []
        for m in range(1, min(d, bmax - 2) + 1):
            bins = [m + 1 if j % 2 == 0 else m + 2 for j in range(d)]
            out.append(tuple(index[(b, 1)] for b in bins))
            if 2 * m <= d:
                alt = list(bins)
                alt[2 * m - 1] = m
                out.append(tuple(index[(b, 1)] for b in alt))
        return out

    def var_bound(n: int):
        return backend.one() if n == 0 else backend.coerce(min(Fraction(1), Fraction(2, n)))

    return ConditionalModel(alphabet, cond, order=None, var_bound=var_bound, var_sum=math.inf,
                            probe_words=probe_words, backend=backend, name="rwbins",
                            metadata={"truncation": {"bmax": bmax, "scheme": "walk stays at bmax instead of moving up"},
                                      "memory": 2 * bmax})


def rwbins_probe_value(n: int) -> Fraction:
    """Largest conditional probability after the alternating past of base ``n``."""
    return Fraction(2, 3 * (n + 1))


# ---------------------------------------------------------------------------
# rmnodom: a chain with no finite dominating measure


def rmnodom(N: int = 30, backend: Backend = EXACT) -> MarkovModel:
    """States ``1..N``; from ``n`` go to 1 or ``n+1`` with probability 1/2 each.

    State ``N`` stands for every ``n >= N`` and loops on itself instead of
    moving up, so ``P(X = n) = 2^-n`` holds exactly for ``n < N``.
    """
    if N < 2:
        raise ModelError("rmnodom needs N >= 2")
    half = Fraction(1, 2)
    rows = {}
    for n in range(1, N + 1):
        vec = [Fraction(0)] * N
        vec[0] += half
        vec[min(n, N - 1)] += half
        rows[(n - 1,)] = vec
    return MarkovModel(Alphabet(tuple(str(n) for n in range(1, N + 1))), 1, rows, backend,
                       name="rmnodom",
                       metadata={"truncation": {"N": N, "scheme": "state N loops on itself instead of moving up"}})


# ---------------------------------------------------------------------------
# two-step: an order-2 chain satisfying the ratio condition


def two_step(N: int = 34, backend: Backend = FLOAT) -> MarkovModel:
    """Order-2 chain on ``1..N`` driven by the last two values ``a = X_-1``, ``b = X_-2``.

    If ``a != b``: repeat ``a`` with probability 1/2, else ``c`` w.p.
    ``2^-(c+1) / (1 - 2^-a)``.  If ``a == b``: never repeat, ``c`` w.p.
    ``2^-c / (1 - 2^-b)``.  The truncated non-repeat part is renormalized.
    """
    if N < 2:
        raise ModelError("two-step needs N >= 2")

    def row(w: Word):
        a, b = w[0] + 1, w[1] + 1
        vec = [Fraction(0)] * N
        if a != b:
            free = Fraction(1, 2)
            vec[a - 1] = Fraction(1, 2)
            weights = {c: _half_pow(c + 1) / (1 - _half_pow(a)) for c in range(1, N + 1) if c != a}
        else:
            free = Fraction(1)
            weights = {c: _half_pow(c) / (1 - _half_pow(b)) for c in range(1, N + 1) if c != b}
        total = sum(weights.values())
        for c, q in weights.items():
            vec[c - 1] = free * q / total
        return vec

    return MarkovModel(Alphabet(tuple(str(n) for n in range(1, N + 1))), 2, row_fn=row,
                       backend=backend, name="two-step",
                       metadata={"truncation": {"N": N, "scheme": "non-repeat part renormalized over 1..N"}})


def two_step_pair_law(a: int, b: int) -> Fraction:
    """The published pair law ``P(X_0 = a, X_1 = b)``."""
    if a != b:
        return Fraction(3, 4) * _half_pow(a + b)
    return Fraction(3, 4) * _half_pow(a) * (1 - _half_pow(a))


def two_step_pair_law_invariant(a: int, b: int) -> Fraction:
    """The pair law that is invariant for the two-step dynamics."""
    if a != b:
        return _half_pow(a + b)
    return Fraction(1, 2) * _half_pow(a) * (1 - _half_pow(a))


# ---------------------------------------------------------------------------
# registry


_BUILDERS: Dict[str, tuple] = {
    "rm-notMarkov": (rm_not_markov, "K"),
    "not-determ": (not_determ, "n_max"),
    "inf-look-back": (inf_look_back, "I"),
    "rwbins": (rwbins, "bmax"),
    "rmnodom": (rmnodom, "N"),
    "two-step": (two_step, "N"),
}

# small hand-checkable models, handy from the command line
FIXTURES: Dict[str, Callable[[], MarkovModel]] = {
    "two-state": lambda: markov_chain([["9/10", "1/10"], ["1/5", "4/5"]], name="two-state"),
    "bernoulli": lambda: iid_model(["1/2", "1/2"], name="bernoulli"),
    "bernoulli-3/4": lambda: iid_model(["3/4", "1/4"], name="bernoulli-3/4"),
}


def names() -> List[str]:
    return list(_BUILDERS) + list(FIXTURES)


def truncation_parameter(name: str) -> str:
    if name not in _BUILDERS:
        raise UnknownExample(name)
    return _BUILDERS[name][1]


def example(name: str, truncate: int | None = None, backend: Backend | None = None):
    """Build a catalog process by name; ``truncate`` sets its truncation level."""
    if name in FIXTURES:
        return FIXTURES[name]()
    if name not in _BUILDERS:
        raise UnknownExample(f"unknown example {name!r}; choose from {', '.join(names())}")
    builder, param = _BUILDERS[name]
    kwargs = {}
    if truncate is not None:
        kwargs[param] = truncate
    if backend is not None:
        kwargs["backend"] = backend
    return builder(**kwargs)
