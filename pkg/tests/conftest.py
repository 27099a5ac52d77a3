import itertools
import random
from fractions import Fraction

import pytest

from rsmp import catalog
from rsmp.measure import Alphabet
from rsmp.models import MarkovModel


def random_rows(rng: random.Random, size: int, order: int, low: int = 1, high: int = 9) -> dict:
    """Rows with small rational entries; ``low >= 1`` keeps them strictly positive."""
    rows = {}
    for w in itertools.product(range(size), repeat=order):
        xs = [0] * size
        while not any(xs):
            xs = [rng.randint(low, high) for _ in range(size)]
        total = sum(xs)
        rows[w] = [Fraction(x, total) for x in xs]
    return rows


def random_chain(seed: int, size: int, order: int = 1, low: int = 1) -> MarkovModel:
    rng = random.Random(seed)
    return MarkovModel(Alphabet.of_size(size), order, random_rows(rng, size, order, low),
                       name=f"random-{seed}")


@pytest.fixture
def two_state():
    return catalog.example("two-state")


@pytest.fixture
def bernoulli_34():
    return catalog.example("bernoulli-3/4")


# acceptance criteria report one line each at the end of the run
_ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        entry = _ACCEPTANCE.setdefault(number, {"title": title, "parts": []})
        entry["parts"].append((ok, detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        ok = all(p for p, _ in entry["parts"])
        details = "; ".join(d if p else f"FAILED {d}" for p, d in entry["parts"] if d)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {entry['title']}: {details}")
