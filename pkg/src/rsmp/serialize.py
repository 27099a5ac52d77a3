"""JSON documents for models and representations.

Rational values are written as ``"p/q"`` strings so that exact runs
round-trip without loss; words are comma-joined labels, most recent first.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from .decompose import CompleteRMP, RandomMarkovRepresentation, TableFunction
from .measure import Alphabet
from .models import ConditionalModel, DominatingMeasure, MarkovModel
from .numeric import EXACT, Backend, format_number, parse_number


class SchemaError(ValueError):
    """A document does not match the expected layout; the message names the location."""


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    return doc[key]


def _number(x, be: Backend, where: str):
    try:
        return parse_number(x, be)
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise SchemaError(f"{where}: bad number {x!r} ({e})") from None


def jsonable(x: Any) -> Any:
    """Numbers to strings (rationals) or floats, containers recursively."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, Fraction):
        return format_number(x)
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return str(x)


# ---------------------------------------------------------------------------
# models


def model_to_json(model: MarkovModel) -> dict:
    if not isinstance(model, MarkovModel):
        raise SchemaError(f"model {model.name!r} is an oracle without a finite row table")
    a = model.alphabet
    doc = {
        "alphabet": list(a.symbols),
        "order": model.order,
        "rows": {a.format_word(w): [format_number(x) for x in row] for w, row in model.rows.items()},
    }
    if model._dominating is not None:
        doc["dominating"] = [format_number(x) for x in model._dominating.mass]
    if model.name:
        doc["name"] = model.name
    if model.metadata:
        doc["metadata"] = jsonable(model.metadata)
    return doc


def model_from_json(doc: dict, be: Backend = EXACT) -> MarkovModel:
    symbols = _require(doc, "alphabet", "model")
    if not isinstance(symbols, list) or not symbols:
        raise SchemaError("model.alphabet: expected a nonempty list of labels")
    try:
        alphabet = Alphabet(tuple(symbols))
    except ValueError as e:
        raise SchemaError(f"model.alphabet: {e}") from None
    order = _require(doc, "order", "model")
    if not isinstance(order, int) or order < 0:
        raise SchemaError("model.order: expected a nonnegative integer")
    raw_rows = _require(doc, "rows", "model")
    if not isinstance(raw_rows, dict):
        raise SchemaError("model.rows: expected an object")
    rows = {}
    for key, vals in raw_rows.items():
        where = f"model.rows[{key!r}]"
        try:
            w = alphabet.parse_word(key)
        except KeyError as e:
            raise SchemaError(f"{where}: {e}") from None
        if len(w) != order:
            raise SchemaError(f"{where}: word length {len(w)} != order {order}")
        if not isinstance(vals, list) or len(vals) != alphabet.size:
            raise SchemaError(f"{where}: expected {alphabet.size} probabilities")
        rows[w] = [_number(v, be, where) for v in vals]
    dominating = None
    if doc.get("dominating") is not None:
        dom = doc["dominating"]
        if not isinstance(dom, list) or len(dom) != alphabet.size:
            raise SchemaError(f"model.dominating: expected {alphabet.size} values")
        dominating = DominatingMeasure(tuple(_number(v, be, "model.dominating") for v in dom))
    try:
        return MarkovModel(alphabet, order, rows, be, dominating=dominating,
                           name=doc.get("name", ""), metadata=doc.get("metadata"))
    except ValueError as e:
        raise SchemaError(f"model: {e}") from None


# ---------------------------------------------------------------------------
# representations


def _table_value_to_json(v, alphabet: Alphabet):
    if isinstance(v, int):
        return alphabet.label(v)
    return [format_number(x) for x in v]


def rep_to_json(rep: RandomMarkovRepresentation) -> dict:
    a = rep.alphabet
    levels = []
    for t in rep.tables:
        levels.append({
            "n": t.n,
            "p": format_number(t.p),
            "positions": list(t.positions),
            "table": {a.format_word(k): _table_value_to_json(v, a) for k, v in sorted(t.values.items())},
        })
    diagnostics = dict(rep.diagnostics)
    if "levels" in diagnostics:
        rows = []
        for row in diagnostics["levels"]:
            row = dict(row)
            if isinstance(row.get("witness"), tuple):
                row["witness"] = a.format_word(row["witness"])
            rows.append(row)
        diagnostics["levels"] = rows
    doc = {
        "alphabet": list(a.symbols),
        "kind": rep.kind,
        "levels": levels,
        "residual": format_number(rep.residual),
        "expected_lookback": format_number(rep.expected_lookback),
        "diagnostics": jsonable(diagnostics),
    }
    if rep.index_function is not None:
        doc["index_function"] = dict(rep.index_function)
    return doc


def rep_from_json(doc: dict, be: Backend = EXACT) -> RandomMarkovRepresentation:
    symbols = _require(doc, "alphabet", "representation")
    try:
        alphabet = Alphabet(tuple(symbols))
    except (ValueError, TypeError) as e:
        raise SchemaError(f"representation.alphabet: {e}") from None
    kind = doc.get("kind", "deterministic")
    raw_levels = _require(doc, "levels", "representation")
    if not isinstance(raw_levels, list):
        raise SchemaError("representation.levels: expected a list")
    tables = []
    for i, lv in enumerate(raw_levels):
        where = f"representation.levels[{i}]"
        n = _require(lv, "n", where)
        if not isinstance(n, int) or n < 0:
            raise SchemaError(f"{where}.n: expected a nonnegative integer")
        p = _number(_require(lv, "p", where), be, f"{where}.p")
        table = _require(lv, "table", where)
        if not isinstance(table, dict):
            raise SchemaError(f"{where}.table: expected an object")
        keys = {}
        for key, val in table.items():
            kw = f"{where}.table[{key!r}]"
            try:
                w = alphabet.parse_word(key)
                if isinstance(val, str):
                    keys[w] = alphabet.index(val)
                elif isinstance(val, list) and len(val) == alphabet.size:
                    keys[w] = tuple(_number(x, be, kw) for x in val)
                else:
                    raise SchemaError(f"{kw}: expected a symbol label or {alphabet.size} values")
            except KeyError as e:
                raise SchemaError(f"{kw}: {e}") from None
        if "positions" in lv:
            positions = tuple(lv["positions"])
        else:
            depth = {len(k) for k in keys} or {0}
            if len(depth) != 1:
                raise SchemaError(f"{where}.table: keys of different lengths")
            positions = tuple(range(depth.pop()))
        try:
            tables.append(TableFunction(n, p, positions, keys, alphabet.size))
        except ValueError as e:
            raise SchemaError(f"{where}: {e}") from None
    try:
        return RandomMarkovRepresentation(alphabet, tables, kind, be, doc.get("diagnostics", {}),
                                          doc.get("index_function"))
    except ValueError as e:
        raise SchemaError(f"representation: {e}") from None


# ---------------------------------------------------------------------------
# files


def read_json(path: Union[str, Path]) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None


def write_json(doc: dict, path: Union[str, Path, None]) -> str:
    text = json.dumps(doc, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def load_model(source: str, be: Backend = EXACT, truncate: int | None = None):
    """A model from a JSON path or from ``catalog:NAME``; catalog entries may be a :class:`CompleteRMP`."""
    from . import catalog

    if source.startswith("catalog:"):
        return catalog.example(source[len("catalog:"):], truncate=truncate, backend=None if be.exact else be)
    return model_from_json(read_json(source), be)


def model_of(source) -> ConditionalModel:
    return source.model if isinstance(source, CompleteRMP) else source
