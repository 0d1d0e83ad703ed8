"""Command line front end.

Every command prints a JSON report on stdout.  Exit codes: 0 success (or
"bisimilar" / "is a bisimulation"), 1 a negative answer, 2 unknown or an
approximate result under ``--strict`` or a failed law check, 3 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import bisim, segala
from .document import (
    Document,
    DocumentError,
    as_segala,
    dump_convex,
    dump_system,
    load_path,
    parse_document,
    state_name,
    tagged_name,
    to_dot,
)
from .saturation import MODES, SolveConfig, saturate
from .semiring import INF, WeightError, close_samples, find_add_join_witness, format_weight, validate_semiring
from .wlts import AlgebraError, ShapeError, System, make_tau_absorption, validate_label_algebra

EXIT_OK, EXIT_NO, EXIT_UNKNOWN, EXIT_ERROR = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _common(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=MODES, default="auto", help="fixed-point solver (default: by semiring)")
    p.add_argument("--epsilon", type=_fraction, default=Fraction("1e-12"), help="iterate-mode tolerance")
    p.add_argument("--delta", type=_fraction, default=Fraction("1e-9"), help="row comparison tolerance")
    p.add_argument("--cap", type=int, default=None, help="iteration cap (10000 weighted, 64 Segala)")
    p.add_argument("--strict", action="store_true", help="exit 2 unless the result is exact")
    p.add_argument("--no-timing", action="store_true", help="omit timing from the report")
    p.add_argument("--segala", action="store_true", help="read an arith document as a Segala system")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakbisim", description="Weak bisimulation for weighted and Segala systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("saturate", help="compute the weak transition system alpha*")
    p.add_argument("system")
    p.add_argument("-o", "--output", help="write the saturated system document here")
    p.add_argument("--dot", help="write a Graphviz rendering of the result")
    _common(p)

    for name, text in (("weak-bisim", "greatest weak bisimulation"), ("strong-bisim", "greatest strong bisimulation")):
        p = sub.add_parser(name, help=text)
        p.add_argument("system")
        _common(p)

    p = sub.add_parser("compare", help="are the initial states of two systems weakly bisimilar?")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--strong", action="store_true", help="use strong bisimulation")
    _common(p)

    p = sub.add_parser("check-partition", help="is a given partition a weak bisimulation?")
    p.add_argument("system")
    p.add_argument("partition", help="JSON list of blocks, or a path to one")
    p.add_argument("--strong", action="store_true", help="check strong bisimulation")
    _common(p)

    p = sub.add_parser("minimize", help="quotient by the greatest weak bisimulation")
    p.add_argument("system")
    p.add_argument("-o", "--output", help="write the minimised system document here")
    p.add_argument("--dot", help="write a Graphviz rendering of the result")
    _common(p)

    p = sub.add_parser("validate", help="check document, semiring and label algebra laws")
    p.add_argument("system")
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _cfg(args) -> SolveConfig:
    return SolveConfig(args.mode, args.epsilon, args.cap or 10000)


def _cap(args) -> int:
    return args.cap or segala.DEFAULT_CAP


def _load(path: str, args) -> Document:
    d = parse_document(load_path(path))
    if args.segala:
        d = as_segala(d)
    return d


def _blocks(partition, name=state_name) -> list:
    return partition.as_lists(name)


def _num(x):
    if x is None:
        return None
    if x == INF:
        return "inf"
    return str(Fraction(x))


def _float(x):
    # residuals are diagnostics, not weights; a short decimal reads better
    if x is None:
        return None
    return "inf" if x == INF else repr(float(x))


def _write(path: str, text: str):
    Path(path).write_text(text, encoding="utf-8")


def _doc_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _witness(w, name=state_name) -> dict | None:
    if w is None:
        return None
    return {
        "states": [name(s) for s in w.states],
        "label": w.label,
        "block": sorted(name(s) for s in w.block),
        "weights": [str(x) if not isinstance(x, bool) else x for x in w.weights],
    }


def _certificates(verdict: segala.ConvexVerdict, name=state_name) -> list:
    out = []
    for (p, q), c in sorted(verdict.certificates.items(), key=lambda kv: (name(kv[0][0]), name(kv[0][1]))):
        out.append(
            {
                "pair": [name(p), name(q)],
                "round": c.round,
                "exact": c.exact,
                "first_depth": c.first_depth,
                "depths": [d for d, _, _ in c.depths],
            }
        )
    return out


_SEGALA_STATUS = {"bisimilar_exact": "exact", "distinguished": "approximate", "unknown": "unknown"}


def _parse_partition(text: str, d: Document):
    where = "partition"
    if not text.lstrip().startswith("["):
        try:
            text = Path(text).read_text(encoding="utf-8")
        except OSError as exc:
            raise DocumentError(where, exc.strerror or "cannot read") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{where}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    if not isinstance(data, list) or not all(isinstance(b, list) for b in data):
        raise DocumentError("partition", "must be a list of blocks")
    try:
        return bisim.Partition.from_blocks(d.states, data)
    except (ValueError, TypeError) as exc:
        raise DocumentError("partition", str(exc)) from exc


def _align(a: System, b: System) -> tuple[System, System]:
    """Put two tau-algebra systems over the union of their alphabets."""
    if a.semiring.kind != b.semiring.kind:
        raise DocumentError("semiring", f"cannot compare {a.semiring.kind} with {b.semiring.kind}")
    if a.algebra == b.algebra:
        return a, b
    if a.algebra.name != "tau" or b.algebra.name != "tau":
        raise DocumentError("labels", "systems with different groupoidal algebras cannot be compared")
    alg = make_tau_absorption(sorted(set(a.algebra.alphabet) | set(b.algebra.alphabet)))
    return tuple(
        System(s.source, s.target, s.semiring, alg, s.weights, s.initial, s.observations) for s in (a, b)
    )


# ---------------------------------------------------------------------------
# commands


def cmd_saturate(args) -> tuple[dict, int]:
    d = _load(args.system, args)
    if d.kind == "segala":
        res = segala.cm_ps_solve(d.convex, segala.cm_unit(d.states, d.algebra), _cap(args))
        out_doc = dump_convex(segala.reduce(res.value), d.observations)
        report = {"status": res.status, "iterations": res.depth, "system": out_doc}
        if args.dot:
            raise UsageError("--dot is only available for weighted systems")
    else:
        res = saturate(d.system, _cfg(args))
        out_doc = dump_system(res.value, d.initial, d.observations)
        report = {
            "status": res.status,
            "mode": res.mode,
            "iterations": res.iterations,
            "residual": _float(res.residual),
            "infinite_cells": sorted(
                [state_name(x), a, state_name(y)] for (x, a, y) in res.infinite_cells
            ),
            "system": out_doc,
        }
        if args.dot:
            _write(args.dot, to_dot(res.value, "saturated"))
    if args.output:
        _write(args.output, _doc_json(out_doc))
    status = "exact" if res.status == "exact" else "approximate"
    return report, _strict(args, status, EXIT_OK)


def _strict(args, status: str, code: int) -> int:
    if args.strict and status != "exact":
        return EXIT_UNKNOWN
    return code


def _weighted_verdict_report(v: bisim.BisimVerdict) -> dict:
    return {
        "status": v.status,
        "blocks": _blocks(v.partition),
        "rounds": v.rounds,
        "delta": _num(v.delta),
        "solver_statuses": [v.solver_statuses[k] for k in sorted(v.solver_statuses)],
    }


def cmd_weak_bisim(args) -> tuple[dict, int]:
    d = _load(args.system, args)
    if d.kind == "segala":
        v = segala.weak_convex_bisim(d.convex, _cap(args), d.observations)
        status = _SEGALA_STATUS[v.answer]
        report = {
            "status": status,
            "answer": v.answer,
            "blocks": _blocks(v.partition),
            "rounds": v.rounds,
            "cap": v.cap,
            "solver_statuses": [v.statuses[k] for k in sorted(v.statuses)],
            "certificates": _certificates(v),
            "unknown_pairs": [[state_name(p), state_name(q)] for p, q in v.unknown_pairs],
        }
        return report, _strict(args, status, EXIT_UNKNOWN if status == "unknown" else EXIT_OK)
    v = bisim.greatest_weak_bisim(d.system, _cfg(args), args.delta)
    return _weighted_verdict_report(v), _strict(args, v.status, EXIT_OK)


def cmd_strong_bisim(args) -> tuple[dict, int]:
    d = _load(args.system, args)
    if d.kind == "segala":
        raise UsageError("strong-bisim is only available for weighted systems")
    v = bisim.greatest_strong_bisim(d.system)
    return _weighted_verdict_report(v), EXIT_OK


def cmd_compare(args) -> tuple[dict, int]:
    da, db = _load(args.left, args), _load(args.right, args)
    if (da.kind == "segala") != (db.kind == "segala"):
        raise DocumentError("semiring", "cannot compare a Segala system with a weighted one")
    for d, where in ((da, args.left), (db, args.right)):
        if d.initial is None:
            raise DocumentError(f"{where}: initial", "compare needs an initial state")
    if da.kind == "segala":
        if args.strong:
            raise UsageError("--strong is only available for weighted systems")
        if da.algebra != db.algebra:
            raise DocumentError("labels", "Segala systems must use the same label algebra")
        union = segala.cm_coproduct(da.convex, db.convex, ("A", "B"))
        obs = {("A", s): o for s, o in (da.observations or {}).items()}
        obs.update({("B", s): o for s, o in (db.observations or {}).items()})
        v = segala.weak_convex_bisim(union, _cap(args), obs or None)
        pair = (("A", da.initial), ("B", db.initial))
        same = v.partition.same_block(*pair)
        if same:
            answer = "bisimilar" if v.answer == "bisimilar_exact" else "unknown"
        else:
            answer = "not_bisimilar"
        status = "exact" if v.answer == "bisimilar_exact" else "approximate"
        report = {
            "answer": answer,
            "status": status,
            "blocks": _blocks(v.partition, tagged_name),
            "certificates": [c for c in _certificates(v, tagged_name) if set(c["pair"]) == {tagged_name(s) for s in pair}],
        }
        code = {"bisimilar": EXIT_OK, "not_bisimilar": EXIT_NO, "unknown": EXIT_UNKNOWN}[answer]
        return report, _strict(args, status, code)
    a, b = _align(da.system, db.system)
    c = bisim.compare(a, b, _cfg(args), args.delta, strong=args.strong, tags=("A", "B"))
    report = {
        "answer": "bisimilar" if c.bisimilar else "not_bisimilar",
        "status": c.verdict.status,
        "delta": _num(c.verdict.delta),
        "blocks": _blocks(c.verdict.partition, tagged_name),
        "witness": _witness(c.witness, tagged_name),
    }
    return report, _strict(args, c.verdict.status, EXIT_OK if c.bisimilar else EXIT_NO)


def cmd_check_partition(args) -> tuple[dict, int]:
    d = _load(args.system, args)
    part = _parse_partition(args.partition, d)
    if d.kind == "segala":
        if args.strong:
            raise UsageError("--strong is only available for weighted systems")
        ok, solver = segala.is_weak_convex_bisim(d.convex, part, _cap(args))
        status = "exact" if solver == "exact" else "approximate"
        witness = None
    else:
        if args.strong:
            status = "exact"
        else:
            res = bisim.weak_rows_result(d.system, part, _cfg(args))
            status = "exact" if res.status == "exact" else "approximate"
        w = bisim.partition_witness(d.system, part, _cfg(args), args.delta, args.strong)
        ok, witness = w is None, _witness(w)
    report = {"is_bisimulation": ok, "status": status, "blocks": _blocks(part), "witness": witness}
    return report, _strict(args, status, EXIT_OK if ok else EXIT_NO)


def cmd_minimize(args) -> tuple[dict, int]:
    d = _load(args.system, args)
    if d.kind == "segala":
        raise UsageError("minimize is only available for weighted systems")
    v = bisim.greatest_weak_bisim(d.system, _cfg(args), args.delta)
    if v.status != "exact":
        report = _weighted_verdict_report(v)
        report["error"] = "verdict is approximate; no minimised system emitted"
        return report, EXIT_UNKNOWN
    m = bisim.minimize(d.system, _cfg(args), v)
    out_doc = dump_system(m, m.initial, m.observations)
    if args.output:
        _write(args.output, _doc_json(out_doc))
    if args.dot:
        _write(args.dot, to_dot(m, "minimized"))
    report = _weighted_verdict_report(v)
    report["system"] = out_doc
    return report, EXIT_OK


def cmd_validate(args) -> tuple[dict, int]:
    doc = load_path(args.system)
    d = parse_document(doc, build=False)
    alg_report = validate_label_algebra(d.algebra)
    report: dict = {"algebra": alg_report.as_dict()}
    ok = alg_report.ok
    if d.kind != "segala":
        sr = d.semiring
        weights = {sr.parse(t["weight"]) for t in doc.get("transitions", []) if "weight" in t}
        base = [sr.zero, sr.one] + sorted(weights, key=lambda w: (w == INF, w if w != INF else 0))
        if sr.kind in ("arith", "nat_inf", "tropical"):
            base += [Fraction(1, 2), Fraction(2), INF] if sr.kind != "nat_inf" else [2, INF]
        samples = list(dict.fromkeys(close_samples(sr, list(dict.fromkeys(base)))))[:12]
        sr_report = validate_semiring(sr, samples)
        fmt = lambda w: format_weight(sr, w)  # noqa: E731
        report["semiring"] = sr_report.as_dict(fmt)
        wit = find_add_join_witness(sr, samples)
        report["left_distributive"] = {
            "holds_on_samples": wit is None,
            "witness": None if wit is None else [fmt(w) for w in wit],
        }
        ok = ok and sr_report.ok
    if ok:
        # document-level construction checks only make sense on a lawful algebra
        parse_document(doc)
    report["ok"] = ok
    return report, EXIT_OK if ok else EXIT_UNKNOWN


COMMANDS = {
    "saturate": cmd_saturate,
    "weak-bisim": cmd_weak_bisim,
    "strong-bisim": cmd_strong_bisim,
    "compare": cmd_compare,
    "check-partition": cmd_check_partition,
    "minimize": cmd_minimize,
    "validate": cmd_validate,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except DocumentError as exc:
        print(json.dumps({"error": str(exc), "field": exc.where}), file=stderr)
        return EXIT_ERROR
    except (UsageError, AlgebraError, ShapeError, WeightError, ValueError) as exc:
        print(json.dumps({"error": str(exc), "field": None}), file=stderr)
        return EXIT_ERROR
    report = {"command": args.command, **report}
    if not args.no_timing:
        report["timing"] = {"seconds": round(time.perf_counter() - start, 6)}
    stdout.write(json.dumps(report, indent=2, ensure_ascii=False) + "\n")
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
