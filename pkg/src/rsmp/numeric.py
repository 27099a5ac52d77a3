"""Exact-rational and floating numeric backends.

All decomposition algebra is closed under + - * /, so the default backend
keeps values as :class:`fractions.Fraction`.  The floating backend is used
for eigenvector solves and simulation summaries.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Callable, Sequence, Union

Number = Union[Fraction, float, int]

DEFAULT_FLOAT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Backend:
    mode: str = "exact"
    tolerance: float = 0.0

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.mode == "exact" and self.tolerance != 0:
            raise ValueError("exact backend has zero tolerance")

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def coerce(self, x) -> Number:
        """Convert ``x`` (number or string) into this backend's number type.

        In exact mode a float is read through its shortest decimal repr, so
        ``0.9`` becomes ``9/10`` rather than the nearest binary double.
        """
        if self.exact:
            return to_fraction(x)
        if isinstance(x, str):
            return float(to_fraction(x))
        return float(x)

    def zero(self) -> Number:
        return Fraction(0) if self.exact else 0.0

    def one(self) -> Number:
        return Fraction(1) if self.exact else 1.0

    def le(self, a, b) -> bool:
        return a <= b + self.tolerance

    def eq(self, a, b) -> bool:
        return abs(a - b) <= self.tolerance

    def is_zero(self, a) -> bool:
        return abs(a) <= self.tolerance


EXACT = Backend("exact", 0.0)
FLOAT = Backend("float", DEFAULT_FLOAT_TOLERANCE)


def backend(mode: str = "exact", tolerance: float | None = None) -> Backend:
    if mode == "exact":
        return EXACT
    return Backend("float", DEFAULT_FLOAT_TOLERANCE if tolerance is None else tolerance)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, Real):
        return Fraction(repr(float(x)))
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


def format_number(x) -> str:
    """Serialize as ``"p/q"`` for rationals, decimal repr for floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def parse_number(s, be: Backend = EXACT) -> Number:
    if isinstance(s, (int, float, Fraction)):
        return be.coerce(s)
    return be.coerce(str(s))


THREADS_ENV = "RSM_THREADS"
_PARALLEL_MIN_ITEMS = 512


def scan_threads() -> int:
    """Worker cap for word scans, from ``RSM_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def scan_map(fn: Callable, items: Sequence) -> list:
    """``[fn(x) for x in items]``, spread over threads when ``RSM_THREADS`` allows.

    Order is preserved, so results never depend on the thread count.
    """
    workers = scan_threads()
    if workers == 1 or len(items) < _PARALLEL_MIN_ITEMS:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=64))
