import json
from fractions import Fraction

import pytest

from rsmp import catalog
from rsmp.decompose import decompose, decompose_finite_expectation, verify_representation
from rsmp.determinize import determinize, index_function
from rsmp.ratio import ratio_decompose
from rsmp.serialize import (SchemaError, load_model, model_from_json, model_to_json, read_json, rep_from_json,
                            rep_to_json)

SMALL = [("two-state", None), ("bernoulli", None), ("bernoulli-3/4", None), ("rmnodom", 8),
         ("not-determ", 5), ("two-step", 5), ("inf-look-back", 2)]


def through_text(doc):
    return json.loads(json.dumps(doc))


def test_model_round_trip(two_state):
    doc = through_text(model_to_json(two_state))
    assert doc["rows"]["0"] == ["9/10", "1/10"]
    back = model_from_json(doc)
    assert back.rows == two_state.rows and back.order == 1


@pytest.mark.parametrize("name,truncate", SMALL)
@pytest.mark.parametrize("build", [decompose, decompose_finite_expectation, ratio_decompose])
def test_decompose_round_trip_verifies(name, truncate, build):
    m = catalog.example(name, truncate=truncate)
    m = model_from_json(through_text(model_to_json(m)), m.backend)
    rep = build(m)
    back = rep_from_json(through_text(rep_to_json(rep)), m.backend)
    assert [(t.n, t.p) for t in back.tables] == [(t.n, t.p) for t in rep.tables]
    assert verify_representation(m, back).ok


def test_rm_not_markov_representation_round_trip():
    src = catalog.example("rm-notMarkov", truncate=3)
    back = rep_from_json(through_text(rep_to_json(src.representation)))
    assert verify_representation(src.model, back).ok


def test_deterministic_tables_use_labels(two_state):
    doc = rep_to_json(decompose(two_state))
    assert doc["levels"][0] == {"n": 1, "p": "4/5", "positions": [0], "table": {"0": "0", "1": "1"}}
    assert doc["residual"] == "0"


def test_determinized_round_trip(two_state):
    det = determinize(ratio_decompose(two_state), index_function("balister", 2), 20)
    back = rep_from_json(through_text(rep_to_json(det)))
    assert back.index_function == {"family": "balister", "arity": 2}
    assert back.residual == det.residual
    assert verify_representation(two_state, back).ok


def test_rows_keyed_without_positions(two_state):
    doc = through_text(rep_to_json(decompose(two_state)))
    for level in doc["levels"]:
        del level["positions"]
    back = rep_from_json(doc)
    assert [t.positions for t in back.tables] == [(0,), (0,), (0,)]


@pytest.mark.parametrize("mutate,where", [
    (lambda d: d.pop("order"), "missing field 'order'"),
    (lambda d: d["rows"].update({"0": ["1/2"]}), "model.rows['0']"),
    (lambda d: d["rows"].update({"0,1": ["1/2", "1/2"]}), "word length 2"),
    (lambda d: d["rows"].update({"7": ["1/2", "1/2"]}), "model.rows['7']"),
    (lambda d: d["rows"].update({"0": ["a", "1"]}), "bad number"),
])
def test_model_schema_errors(two_state, mutate, where):
    doc = through_text(model_to_json(two_state))
    mutate(doc)
    with pytest.raises(SchemaError) as info:
        model_from_json(doc)
    assert where in str(info.value)


def test_representation_schema_errors(two_state):
    doc = through_text(rep_to_json(decompose(two_state)))
    doc["levels"][2]["table"]["1"] = "z"
    with pytest.raises(SchemaError, match=r"levels\[2\]"):
        rep_from_json(doc)


def test_invalid_json_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"alphabet": [\n')
    with pytest.raises(SchemaError, match="line 2"):
        read_json(path)


def test_load_model_sources(tmp_path, two_state):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model_to_json(two_state)))
    assert load_model(str(path)).rows == two_state.rows
    assert load_model("catalog:two-state").rows[(0,)] == (Fraction(9, 10), Fraction(1, 10))
    with pytest.raises(SchemaError):
        model_to_json(catalog.example("rwbins"))
