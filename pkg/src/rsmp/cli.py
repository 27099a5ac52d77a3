"""Command-line entry point: ``rsmp <command> ...``.

MODEL arguments are a model JSON path or ``catalog:NAME``.  Exit codes:
0 when every check passes, 1 when a mathematical invariant fails (the
message names it and a witness word), 2 for bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from . import catalog
from .decompose import (DEFAULT_K_MAX, DEFAULT_RESIDUAL_TARGET, CompleteRMP, DecompositionError,
                        RandomMarkovRepresentation, decompose, decompose_finite_expectation,
                        verify_representation)
from .determinize import (DEFAULT_DIGIT_DEPTH, DeterminizeError, det_expected_lookback, determinize,
                          index_function)
from .models import ConditionalModel, MarkovModel, ModelError, ratio_coeff, variation
from .numeric import backend, format_number
from .ratio import DEFAULT_LEVEL_COUNT, DEFAULT_PROBE_DEPTH, default_masses, ratio_decompose
from .serialize import (SchemaError, jsonable, load_model, model_of, model_to_json, read_json,
                        rep_from_json, rep_to_json, write_json)
from .simulate import SimulationError, simulate

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_INPUT = 2


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{format_number(x)} (~{float(x):.6g})" if x.denominator != 1 else str(x)
    if isinstance(x, float):
        return "inf" if math.isinf(x) else f"{x:.6g}"
    return str(x)


def _print_table(header: Sequence[str], rows: List[Sequence]) -> None:
    cells = [list(map(str, header))] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for r in cells:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())


def _backend(args):
    return backend(args.backend, args.tolerance)


def _model(args):
    return load_model(args.model, _backend(args), args.truncate)


def _emit(doc: dict, args) -> None:
    if args.out:
        write_json(doc, args.out)
        print(f"wrote {args.out}")


# ---------------------------------------------------------------------------
# commands


def cmd_variations(args) -> int:
    model = model_of(_model(args))
    depth = args.depth
    if model.order is None and depth is None:
        depth = 10
    rows, out = [], []
    for k in range(0, args.k_max + 1):
        d = None if depth is None else max(depth, k)
        v = variation(model, k, depth=d)
        rc = ratio_coeff(model, k, depth=d)
        flag = "exact" if v.exact else "estimate"
        bound = "" if v.bound is None else _fmt(v.bound)
        rows.append((k, v.value, rc.value, flag, bound))
        out.append({"k": k, "var": v.value, "var_exact": v.exact, "var_bound": v.bound,
                    "rc": rc.value, "rc_exact": rc.exact})
    _print_table(("k", "var_k", "rc_k", "flag", "declared bound"), rows)
    _emit({"model": model.name, "depth": depth, "rows": jsonable(out)}, args)
    return EXIT_OK


def _summary(rep: RandomMarkovRepresentation) -> None:
    _print_table(("level", "n", "p"), [(k, t.n, t.p) for k, t in enumerate(rep.tables, 1)])
    print(f"residual: {_fmt(rep.residual)}")
    print(f"E[L] (completed levels): {_fmt(rep.expected_lookback)}")


def cmd_decompose(args) -> int:
    model = model_of(_model(args))
    if args.variant == "ratio":
        rep = ratio_decompose(model, default_masses(args.levels, model.backend), probe_depth=args.probe_depth)
    elif args.variant == "b":
        rep = decompose_finite_expectation(model, args.residual_target, args.k_max)
    else:
        rep = decompose(model, args.residual_target, args.k_max)
    _summary(rep)
    status = EXIT_OK
    if args.variant == "b":
        bound = rep.diagnostics["expectation_bound"]
        holds = rep.expected_lookback <= bound
        print(f"bound 2M^2(1 + sum var): {_fmt(bound)} -> {'holds' if holds else 'VIOLATED'}")
        if not holds:
            status = EXIT_CHECK
            print(f"error: invariant 'expectation-bound' failed: E[L] {rep.expected_lookback} > {bound}",
                  file=sys.stderr)
    if rep.residual > args.residual_target:
        print(f"note: residual above target {args.residual_target} after {len(rep.tables)} levels")
    _emit(rep_to_json(rep), args)
    return status


def cmd_ratio_decompose(args) -> int:
    args.variant = "ratio"
    return cmd_decompose(args)


def _default_arity(size: int) -> int:
    return max(2, 1 + math.ceil(math.log2(size))) if size > 1 else 2


def cmd_determinize(args) -> int:
    be = _backend(args)
    rep = rep_from_json(read_json(args.rep), be)
    arity = args.arity or _default_arity(rep.alphabet.size)
    F = index_function(args.family, arity)
    det = determinize(rep, F, args.digit_depth)
    print(f"levels: {len(det.tables)} (from {len(rep.tables)} base levels)")
    print(f"residual: {_fmt(det.residual)}")
    status = EXIT_OK
    for row in det.diagnostics["levels"]:
        ok = row["gap"] <= row["gap_bound"]
        print(f"base n={row['n']}: gap {_fmt(row['gap'])} <= {_fmt(row['gap_bound'])}: {'ok' if ok else 'FAILED'}")
        if not ok:
            status = EXIT_CHECK
            print(f"error: invariant 'mass-conservation' failed at base level n={row['n']}", file=sys.stderr)
    el = det_expected_lookback(det, F)
    if el.diverges:
        print("E[L] bound: not claimed (index family diverges)")
    elif el.vacuous:
        print("E[L] bound: vacuous (base expectation infinite)")
    else:
        print(f"E[L] = {_fmt(el.expected)} <= 35^{F.n} E[L_base] = {_fmt(el.bound)}: "
              f"{'holds' if el.holds else 'VIOLATED'}")
        if not el.holds:
            status = EXIT_CHECK
    _emit(rep_to_json(det), args)
    return status


def cmd_verify(args) -> int:
    be = _backend(args)
    model = model_of(_model(args))
    rep = rep_from_json(read_json(args.rep), be)
    report = verify_representation(model, rep, depth=args.depth, tolerance=args.tolerance)
    print(f"checked {report.checked_words} pasts of length {report.length} "
          f"({'exact' if report.exact else 'bounded depth'})")
    print(f"gap: {_fmt(report.gap)}  residual: {_fmt(report.residual)}")
    _emit(jsonable({
        "ok": report.ok, "gap": report.gap, "residual": report.residual,
        "failures": [{"invariant": f.name,
                      "witness": None if f.witness is None else rep.alphabet.format_word(f.witness),
                      "detail": f.detail} for f in report.failures]}), args)
    if report.ok:
        print("pass")
        return EXIT_OK
    for f in report.failures[:20]:
        wit = "-" if f.witness is None else repr(rep.alphabet.format_word(f.witness))
        print(f"error: invariant {f.name!r} failed at witness {wit}: {f.detail}", file=sys.stderr)
    if len(report.failures) > 20:
        print(f"... {len(report.failures) - 20} more failures", file=sys.stderr)
    return EXIT_CHECK


def cmd_simulate(args) -> int:
    be = _backend(args)
    source = _model(args)
    if args.rep:
        rep = rep_from_json(read_json(args.rep), be)
        source = CompleteRMP(rep, model_of(source), tolerance=args.complete_tol)
    if isinstance(source, ConditionalModel) and not isinstance(source, MarkovModel):
        raise SimulationError("infinite-memory oracles can only be simulated through a representation (--rep)")
    res = simulate(source, args.length, args.seed, burn_in=args.burn_in)
    freq = res.frequencies()
    print(f"steps: {len(res)}  seed: {res.seed}  burn-in: {res.burn_in}")
    _print_table(("symbol", "frequency"), [(res.alphabet.label(a), float(f)) for a, f in enumerate(freq)])
    if res.lookbacks is not None and len(res):
        values, counts = np.unique(res.lookbacks, return_counts=True)
        shown = list(zip(values.tolist(), (counts / len(res)).tolist()))[:12]
        _print_table(("look-back", "frequency"), shown)
    if args.out:
        doc = {"alphabet": list(res.alphabet.symbols), "seed": res.seed, "burn_in": res.burn_in,
               "symbols": [res.alphabet.label(a) for a in res.symbols.tolist()]}
        if res.lookbacks is not None:
            doc["lookbacks"] = res.lookbacks.tolist()
        with open(args.out, "w") as fh:
            json.dump(doc, fh)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.action == "list":
        for name in catalog.names():
            try:
                param = catalog.truncation_parameter(name)
            except catalog.UnknownExample:
                param = "-"
            print(f"{name:16s} truncation: {param}")
        return EXIT_OK
    if not args.name:
        raise SchemaError("examples build needs a NAME")
    source = catalog.example(args.name, truncate=args.truncate,
                             backend=None if args.backend == "exact" else _backend(args))
    if isinstance(source, CompleteRMP):
        doc = rep_to_json(source.representation)
        print(f"{args.name}: representation with {len(doc['levels'])} levels")
    else:
        doc = model_to_json(source)
        print(f"{args.name}: order-{source.order} model with {len(doc['rows'])} rows")
    if args.out:
        write_json(doc, args.out)
        print(f"wrote {args.out}")
    else:
        print(write_json(doc, None))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _residual_target(s: str) -> float:
    v = float(Fraction(s))
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("residual target must lie in (0, 1]")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=("exact", "float"), default="exact")
    common.add_argument("--tolerance", type=float, default=None,
                        help="comparison tolerance (float backend default 1e-12)")
    common.add_argument("--truncate", type=int, default=None, help="truncation level for catalog models")
    common.add_argument("--out", default=None, help="write the JSON result here")

    p = argparse.ArgumentParser(prog="rsmp", description="Random-step Markov representations.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("variations", parents=[common], help="variation and ratio coefficients")
    s.add_argument("model")
    s.add_argument("--k-max", type=int, default=5)
    s.add_argument("--depth", type=int, default=None, help="probe depth for infinite-memory models")
    s.set_defaults(func=cmd_variations)

    def stop_args(s):
        s.add_argument("--residual-target", type=_residual_target, default=DEFAULT_RESIDUAL_TARGET)
        s.add_argument("--k-max", type=_positive, default=DEFAULT_K_MAX)
        s.add_argument("--levels", type=_positive, default=DEFAULT_LEVEL_COUNT,
                       help="ratio construction: number of levels with p_i = 2^-i")
        s.add_argument("--probe-depth", type=_positive, default=DEFAULT_PROBE_DEPTH)

    s = sub.add_parser("decompose", parents=[common], help="build a representation")
    s.add_argument("model")
    s.add_argument("--variant", choices=("a", "b", "ratio"), default="a")
    stop_args(s)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("ratio-decompose", parents=[common], help="ratio-condition representation")
    s.add_argument("model")
    stop_args(s)
    s.set_defaults(func=cmd_ratio_decompose)

    s = sub.add_parser("determinize", parents=[common], help="determinize a representation")
    s.add_argument("rep")
    s.add_argument("--family", choices=("balister", "prime"), default="balister")
    s.add_argument("--digit-depth", type=_positive, default=DEFAULT_DIGIT_DEPTH)
    s.add_argument("--arity", type=int, default=None, help="index arity (default: 1 + bits per symbol)")
    s.set_defaults(func=cmd_determinize)

    s = sub.add_parser("verify", parents=[common], help="check a representation against a model")
    s.add_argument("model")
    s.add_argument("rep")
    s.add_argument("--depth", type=int, default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", parents=[common], help="simulate a chain or representation")
    s.add_argument("model")
    s.add_argument("--rep", default=None, help="representation JSON to drive the simulation")
    s.add_argument("--length", type=int, default=1000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--burn-in", type=int, default=None)
    s.add_argument("--complete-tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("examples", parents=[common], help="list or build catalog examples")
    s.add_argument("action", choices=("list", "build"))
    s.add_argument("name", nargs="?")
    s.set_defaults(func=cmd_examples)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DecompositionError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CHECK
    except (SchemaError, catalog.UnknownExample, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ModelError, DeterminizeError, SimulationError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
