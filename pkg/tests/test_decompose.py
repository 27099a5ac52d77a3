from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rsmp import catalog
from rsmp.decompose import (CompleteRMP, DecompositionError, DepthLimitError, InconsistentTables,
                            LookBackDistribution, PreconditionError, RandomMarkovRepresentation, TableFunction,
                            choose_M, decompose, decompose_finite_expectation, demonstrate_collapse, leftover,
                            verify_representation)
from rsmp.models import DominatingMeasure, iid_model, variation

from conftest import random_chain

F = Fraction


def brute_choose_M(mass, gamma):
    for m in range(1, len(mass) + 1):
        if sum(mass[m:], F(0)) < gamma / 10:
            return m


def test_two_state_variant_a(two_state):
    rep = decompose(two_state)
    assert [(t.n, t.p) for t in rep.tables] == [(1, F(4, 5)), (2, F(1, 10)), (3, F(1, 10))]
    assert [t.values for t in rep.tables] == [{(0,): 0, (1,): 1}, {(0,): 0, (1,): 0}, {(0,): 1, (1,): 0}]
    assert rep.residual == 0
    assert rep.expected_lookback == F(13, 10)
    report = verify_representation(two_state, rep)
    assert report.ok and report.exact and report.gap == 0


def test_truncation_gap_equals_residual(two_state):
    rep = decompose(two_state).truncated(2)
    report = verify_representation(two_state, rep)
    assert report.ok
    assert report.gap == report.residual == F(1, 10)


def test_leftover_after_first_level(two_state):
    t = decompose(two_state).tables[0]
    assert tuple(leftover(two_state, [t], (0,))) == (F(1, 10), F(1, 10))
    assert tuple(leftover(two_state, [t], (1,))) == (F(1, 5), F(0))
    too_much = TableFunction(1, F(19, 20), (0,), {(0,): 0, (1,): 1}, 2)
    with pytest.raises(InconsistentTables):
        leftover(two_state, [too_much], (1,))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 12), min_size=1, max_size=12).filter(any),
       st.fractions(min_value=F(1, 1000), max_value=1))
def test_choose_M_matches_brute_force(weights, gamma):
    total = sum(weights)
    mass = tuple(F(w, total) for w in weights)
    assert choose_M(DominatingMeasure(mass), gamma) == brute_choose_M(mass, gamma)


def test_choose_M_uniform_spot_values():
    mass = (F(1, 20),) * 20
    # tail after M symbols is (20 - M)/20 and must drop below 1/10
    assert choose_M(DominatingMeasure(mass), 1) == 19
    assert choose_M(DominatingMeasure(mass), F(1, 2)) == 20


def test_variant_b_bernoulli(bernoulli_34):
    rep = decompose_finite_expectation(bernoulli_34)
    assert [(t.n, t.p) for t in rep.tables] == [(2, F(3, 4)), (3, F(1, 4))]
    assert rep.expected_lookback == F(9, 4)
    assert rep.diagnostics["expectation_bound"] == 8
    assert verify_representation(bernoulli_34, rep).ok


def test_variant_b_precondition():
    with pytest.raises(PreconditionError):
        decompose_finite_expectation(catalog.example("rwbins"))


def test_non_representable_oracle_refused():
    with pytest.raises(DepthLimitError):
        decompose(catalog.example("rwbins"), depth_limit=200)


@pytest.mark.parametrize("seed", range(6))
def test_random_order_two_chains(seed):
    m = random_chain(seed, 2 + seed % 2, order=2, low=0)
    for rep in (decompose(m), decompose_finite_expectation(m)):
        assert rep.kind == "deterministic"
        assert all(t.deterministic for t in rep.tables)
        report = verify_representation(m, rep)
        assert report.ok, report.failures
        assert report.gap == rep.residual


def test_variant_a_level_rule(two_state):
    rep = decompose(two_state)
    for row in rep.diagnostics["levels"]:
        assert 2 * row["var"] <= F(9, 10) * row["gamma"] / row["M"]
        assert row["p"] == row["r"] - row["var"]


def test_fault_injection_rejected(two_state):
    rep = decompose(two_state)
    swapped = [TableFunction(t.n, t.p, t.positions, {k: 1 - v for k, v in t.values.items()}, 2)
               for t in rep.tables]
    report = verify_representation(two_state, RandomMarkovRepresentation(rep.alphabet, swapped))
    assert not report.ok
    assert report.first().name == "condition-ii"
    assert report.first().witness is not None

    fuzzy = list(rep.tables)
    fuzzy[1] = TableFunction(2, F(1, 10), (0,), {(0,): (F(1, 2), F(1, 2)), (1,): 0}, 2)
    report = verify_representation(two_state, RandomMarkovRepresentation(rep.alphabet, fuzzy))
    assert "determinism" in [f.name for f in report.failures]

    unnormalized = list(rep.tables)
    unnormalized[1] = TableFunction(2, F(1, 10), (0,), {(0,): (F(1, 2), F(1, 3)), (1,): 0}, 2)
    report = verify_representation(two_state, RandomMarkovRepresentation(rep.alphabet, unnormalized, "general"))
    assert "table-normalization" in [f.name for f in report.failures]


def test_tv_lookback_violation_detected(two_state):
    # all mass at depth 0 claims the past is irrelevant
    bogus = RandomMarkovRepresentation(two_state.alphabet, [
        TableFunction(0, F(1), (), {(): (F(2, 3), F(1, 3))}, 2)], "general")
    names = {f.name for f in verify_representation(two_state, bogus).failures}
    assert {"tv-lookback", "variation-lookback"} <= names


def test_lookback_distribution():
    lb = LookBackDistribution(((1, F(1, 2)), (3, F(1, 4))))
    assert lb.residual == F(1, 4)
    assert lb.tail(0) == 1 and lb.tail(1) == F(1, 2) and lb.tail(3) == F(1, 4)
    assert lb.expected == F(5, 4)
    with pytest.raises(ValueError):
        LookBackDistribution(((1, F(3, 4)), (2, F(1, 2))))


def test_table_positions_within_depth():
    with pytest.raises(ValueError):
        TableFunction(1, F(1, 2), (1,), {}, 2)
    t = TableFunction(3, F(1, 2), (2,), {(0,): 1, (1,): 0}, 2)
    assert t.key_depth == 3
    assert t.law((0, 0, 1)) == (1, 0)
    with pytest.raises(DecompositionError):
        t.raw((0, 0, 5))


def test_complete_rmp_requires_full_mass(two_state):
    rep = decompose(two_state)
    CompleteRMP(rep, two_state)
    with pytest.raises(DecompositionError):
        CompleteRMP(rep.truncated(1), two_state)


def test_collapse_controls(two_state):
    for row in demonstrate_collapse(two_state, range(1, 6)):
        assert row["value"] == F(4, 5)
    for row in demonstrate_collapse(iid_model(["1/3", "2/3"]), range(1, 6)):
        assert row["value"] == F(2, 3)


def test_rm_not_markov_tables_verify():
    for K in (2, 3):
        src = catalog.example("rm-notMarkov", truncate=K)
        report = verify_representation(src.model, src.representation)
        assert report.ok and report.gap == 0
        for n in range(K + 1):
            assert variation(src.model, n).value <= 2 * src.representation.lookback.tail(n)


def test_fair_coin_variant_a():
    rep = decompose(catalog.example("bernoulli"))
    assert [(t.n, t.p, t.values) for t in rep.tables] == [(1, F(1, 2), {(): 0}), (2, F(1, 2), {(): 1})]
    assert rep.residual == 0
