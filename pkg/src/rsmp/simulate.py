"""Seeded path simulation for representations and finite-order chains."""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from itertools import accumulate
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .decompose import CompleteRMP
from .measure import Alphabet, Word
from .models import MarkovModel


class SimulationError(ValueError):
    pass


@dataclass
class SimulationResult:
    alphabet: Alphabet
    symbols: np.ndarray
    lookbacks: Optional[np.ndarray]
    seed: int
    burn_in: int

    def __len__(self):
        return len(self.symbols)

    def pairs(self):
        lbs = self.lookbacks if self.lookbacks is not None else [None] * len(self.symbols)
        return list(zip(self.symbols.tolist(), list(lbs)))

    def frequencies(self) -> np.ndarray:
        return np.bincount(self.symbols, minlength=self.alphabet.size) / len(self.symbols)


def _cumulative(law) -> List[float]:
    cum = list(accumulate(float(x) for x in law))
    cum[-1] = 1.0 if cum[-1] > 0 else cum[-1]
    return cum


def _draw(cum: List[float], u: float) -> int:
    return min(bisect.bisect_right(cum, u), len(cum) - 1)


def _initial_past(rng, alphabet: Alphabet, h: int, init: Optional[Sequence[int]]) -> List[int]:
    """Oldest-first buffer of the starting past."""
    if init is not None:
        init = alphabet.check_word(init)
        if len(init) < h:
            raise SimulationError(f"initial past of length {len(init)} is shorter than the required {h}")
        return list(reversed(init))
    return rng.integers(0, alphabet.size, size=h).tolist()


def simulate(source: Union[CompleteRMP, MarkovModel], length: int, seed: int,
             burn_in: Optional[int] = None, init: Optional[Sequence[int]] = None) -> SimulationResult:
    """Simulate ``length`` steps after ``burn_in`` discarded steps.

    For a :class:`CompleteRMP` each step draws its look-back level
    independently of the past and then a symbol from that level's table at
    the current past.  For a chain each step draws from the row of the last
    ``order`` symbols.  ``init`` is a most-recent-first starting past;
    without it a uniform random word is used.
    """
    if length < 0:
        raise SimulationError("length must be nonnegative")
    rng = np.random.default_rng(seed)
    if isinstance(source, CompleteRMP):
        return _simulate_rmp(source, length, seed, rng, burn_in, init)
    if isinstance(source, MarkovModel):
        return _simulate_chain(source, length, seed, rng, burn_in, init)
    raise SimulationError(f"cannot simulate {type(source).__name__}")


def _check_burn_in(burn_in, h):
    if burn_in is None:
        return h
    if burn_in < 0:
        raise SimulationError("burn_in must be nonnegative")
    return burn_in


def _simulate_rmp(src: CompleteRMP, length, seed, rng, burn_in, init) -> SimulationResult:
    rep = src.representation
    if rep.residual > src.tolerance:
        raise SimulationError(f"representation residual {rep.residual} exceeds {src.tolerance}")
    tables = rep.tables
    h = rep.key_depth
    burn_in = _check_burn_in(burn_in, h)
    total = burn_in + length
    probs = np.array([float(t.p) for t in tables])
    probs = probs / probs.sum()
    levels = rng.choice(len(tables), size=total, p=probs)
    us = rng.random(total)
    path = _initial_past(rng, rep.alphabet, h, init)
    start = len(path)
    caches: List[Dict[Word, object]] = [dict() for _ in tables]
    positions = [t.positions for t in tables]
    for step in range(total):
        k = levels[step]
        t = tables[k]
        cur = len(path)
        key = tuple(path[cur - 1 - p] for p in positions[k])
        entry = caches[k].get(key)
        if entry is None:
            try:
                v = t.values[key]
            except KeyError:
                raise SimulationError(f"level n={t.n} has no table entry for past {key}") from None
            entry = v if isinstance(v, int) else _cumulative(v)
            caches[k][key] = entry
        path.append(entry if isinstance(entry, int) else _draw(entry, us[step]))
    symbols = np.array(path[start + burn_in:], dtype=np.int64)
    lookbacks = np.array([tables[k].n for k in levels[burn_in:]], dtype=np.int64)
    return SimulationResult(rep.alphabet, symbols, lookbacks, seed, burn_in)


def _simulate_chain(model: MarkovModel, length, seed, rng, burn_in, init) -> SimulationResult:
    m = model.order
    burn_in = _check_burn_in(burn_in, m)
    total = burn_in + length
    us = rng.random(total)
    path = _initial_past(rng, model.alphabet, m, init)
    start = len(path)
    cache: Dict[Word, List[float]] = {}
    for step in range(total):
        cur = len(path)
        state = tuple(path[cur - 1 - j] for j in range(m))
        cum = cache.get(state)
        if cum is None:
            cum = cache[state] = _cumulative(model.row(state))
        path.append(_draw(cum, us[step]))
    symbols = np.array(path[start + burn_in:], dtype=np.int64)
    return SimulationResult(model.alphabet, symbols, None, seed, burn_in)
