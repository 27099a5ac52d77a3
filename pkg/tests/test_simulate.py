import numpy as np
import pytest

from rsmp import catalog
from rsmp.decompose import CompleteRMP, decompose
from rsmp.simulate import SimulationError, simulate


def test_same_seed_same_path(two_state):
    src = CompleteRMP(decompose(two_state), two_state)
    a = simulate(src, 5000, seed=7)
    b = simulate(src, 5000, seed=7)
    assert np.array_equal(a.symbols, b.symbols) and np.array_equal(a.lookbacks, b.lookbacks)
    c = simulate(src, 5000, seed=8)
    assert not np.array_equal(a.symbols, c.symbols)


def test_chain_and_representation_agree(two_state):
    src = CompleteRMP(decompose(two_state), two_state)
    for res in (simulate(src, 200_000, seed=1), simulate(two_state, 200_000, seed=1)):
        freq = res.frequencies()
        assert freq[0] == pytest.approx(2 / 3, abs=0.01)


def test_lookback_frequencies(two_state):
    res = simulate(CompleteRMP(decompose(two_state), two_state), 100_000, seed=3)
    values, counts = np.unique(res.lookbacks, return_counts=True)
    got = dict(zip(values.tolist(), (counts / len(res)).tolist()))
    assert got[1] == pytest.approx(0.8, abs=0.01)
    assert got[2] == pytest.approx(0.1, abs=0.01)
    assert got[3] == pytest.approx(0.1, abs=0.01)


def test_initial_past_and_burn_in(two_state):
    src = CompleteRMP(decompose(two_state), two_state)
    with pytest.raises(SimulationError):
        simulate(src, 10, seed=0, init=())
    with pytest.raises(SimulationError):
        simulate(src, 10, seed=0, burn_in=-1)
    res = simulate(src, 10, seed=0, init=(0, 0, 0), burn_in=0)
    assert len(res) == 10 and res.burn_in == 0
    assert len(res.pairs()) == 10


def test_incomplete_representation_refused(two_state):
    src = CompleteRMP(decompose(two_state), two_state)
    src.representation = src.representation.truncated(2)
    with pytest.raises(SimulationError):
        simulate(src, 10, seed=0)


def test_rm_not_markov_short_run():
    res = simulate(catalog.example("rm-notMarkov", truncate=6), 20_000, seed=11)
    labels = [res.alphabet.label(a) for a in res.symbols.tolist()]
    bits = [int(s.split(":")[0]) for s in labels]
    assert np.mean(bits) == pytest.approx(0.5, abs=0.03)
