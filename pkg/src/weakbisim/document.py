"""JSON system documents.

Weighted kinds (boolean, arith, nat_inf, tropical)::

    {"semiring": "arith", "labels": ["a"], "algebra": "tau",
     "states": ["x", "y"], "initial": "x", "observations": {"y": "halt"},
     "transitions": [{"from": "x", "label": "tau", "to": "y", "weight": "3/4"}]}

Segala systems use ``"semiring": "segala"`` and group distributions::

    {"from": "x", "choices": [[{"label": "tau", "to": "y", "weight": "1/2"}, ...], ...]}

Weights are strings (``"3/4"``, ``"inf"``) or integers; booleans for the
boolean semiring.  ``"tau"`` is implicit and may not be listed in ``labels``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .semiring import KINDS, SemiringSpec, WeightError, format_weight, make_semiring, parse_weight
from .segala import ConvexArrow, make_gen
from .wlts import TAU, AlgebraError, KleisliMap, LabelAlgebra, ShapeError, System, make_groupoidal, make_tau_absorption


class DocumentError(ValueError):
    """Invalid document; ``where`` names the offending field or line."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass
class Document:
    kind: str  # one of KINDS or "segala"
    semiring: SemiringSpec | None
    algebra: LabelAlgebra
    states: tuple
    initial: str | None
    observations: dict | None
    raw: dict
    system: System | None = None
    convex: ConvexArrow | None = None


def _req(doc: dict, key: str, where: str = ""):
    if key not in doc:
        raise DocumentError(where + key, "missing field")
    return doc[key]


def load_text(text: str, source: str = "<input>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    if not isinstance(doc, dict):
        raise DocumentError(source, "top level must be a JSON object")
    return doc


def load_path(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(str(p), exc.strerror or "cannot read") from exc
    return load_text(text, str(p))


def parse_algebra(doc: dict) -> LabelAlgebra:
    labels = doc.get("labels", [])
    if not isinstance(labels, list) or not all(isinstance(a, str) for a in labels):
        raise DocumentError("labels", "must be a list of strings")
    kind = doc.get("algebra", "tau")
    try:
        if kind == "tau":
            return make_tau_absorption(labels)
        if kind == "groupoidal":
            return make_groupoidal(labels, doc.get("inverses"))
    except AlgebraError as exc:
        raise DocumentError("labels", str(exc)) from exc
    raise DocumentError("algebra", f"unknown algebra {kind!r}; expected 'tau' or 'groupoidal'")


def parse_header(doc: dict) -> Document:
    kind = _req(doc, "semiring")
    if kind not in KINDS + ("segala",):
        raise DocumentError("semiring", f"unknown kind {kind!r}")
    algebra = parse_algebra(doc)
    states = _req(doc, "states")
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise DocumentError("states", "must be a list of strings")
    if len(set(states)) != len(states):
        raise DocumentError("states", "duplicate state names")
    initial = doc.get("initial")
    if initial is not None and initial not in states:
        raise DocumentError("initial", f"unknown state {initial!r}")
    obs = doc.get("observations")
    if obs is not None:
        if not isinstance(obs, dict):
            raise DocumentError("observations", "must map state names to strings")
        for s, o in obs.items():
            if s not in states:
                raise DocumentError(f"observations.{s}", "unknown state")
            if not isinstance(o, str):
                raise DocumentError(f"observations.{s}", "observation must be a string")
    semiring = make_semiring(kind) if kind != "segala" else None
    return Document(kind, semiring, algebra, tuple(states), initial, obs or None, doc)


def _parse_weight(sr: SemiringSpec, value, where):
    try:
        return parse_weight(sr, value)
    except WeightError as exc:
        raise DocumentError(where, str(exc)) from exc


def _entry(t, where, states, algebra):
    if not isinstance(t, dict):
        raise DocumentError(where, "must be an object")
    label = t.get("label", TAU)
    if label not in algebra.labels:
        raise DocumentError(where + ".label", f"unknown label {label!r}")
    to = _req(t, "to", where + ".")
    if to not in states:
        raise DocumentError(where + ".to", f"unknown state {to!r}")
    return label, to


def parse_document(doc: dict, build: bool = True) -> Document:
    """Validate ``doc``; with ``build`` also construct the system."""
    d = parse_header(doc)
    trans = doc.get("transitions", [])
    if not isinstance(trans, list):
        raise DocumentError("transitions", "must be a list")
    states = set(d.states)
    if d.kind == "segala":
        gens: dict = {s: [] for s in d.states}
        for i, t in enumerate(trans):
            where = f"transitions[{i}]"
            src = _req(t, "from", where + ".")
            if src not in states:
                raise DocumentError(where + ".from", f"unknown state {src!r}")
            choices = _req(t, "choices", where + ".")
            if not isinstance(choices, list):
                raise DocumentError(where + ".choices", "must be a list of distributions")
            for j, dist in enumerate(choices):
                if not isinstance(dist, list):
                    raise DocumentError(f"{where}.choices[{j}]", "must be a list")
                weights: dict = {}
                for k, e in enumerate(dist):
                    w_where = f"{where}.choices[{j}][{k}]"
                    label, to = _entry(e, w_where, states, d.algebra)
                    w = _parse_weight(make_semiring("arith"), _req(e, "weight", w_where + "."), w_where + ".weight")
                    if w == 0 or w == float("inf"):
                        raise DocumentError(w_where + ".weight", "must be a positive rational")
                    weights[label, to] = weights.get((label, to), 0) + w
                gens[src].append(make_gen(weights))
        if build:
            d.convex = ConvexArrow(d.states, d.states, d.algebra, {s: tuple(g) for s, g in gens.items()})
        return d
    cells = []
    for i, t in enumerate(trans):
        where = f"transitions[{i}]"
        if not isinstance(t, dict):
            raise DocumentError(where, "must be an object")
        src = _req(t, "from", where + ".")
        if src not in states:
            raise DocumentError(where + ".from", f"unknown state {src!r}")
        label, to = _entry(t, where, states, d.algebra)
        if "weight" in t:
            w = _parse_weight(d.semiring, t["weight"], where + ".weight")
        elif d.kind == "boolean":
            w = True
        else:
            raise DocumentError(where + ".weight", "missing field")
        cells.append((src, label, to, w))
    if build:
        sr = d.semiring
        weights: dict = {}
        for x, a, y, w in cells:
            weights[x, a, y] = sr.add(weights.get((x, a, y), sr.zero), w)
        try:
            d.system = System(d.states, d.states, sr, d.algebra, weights, d.initial, d.observations)
        except (AlgebraError, ShapeError, WeightError) as exc:
            raise DocumentError("transitions", str(exc)) from exc
    return d


def as_segala(d: Document) -> Document:
    """Read an ``arith`` document as a deterministic Segala system."""
    from .segala import from_weighted

    if d.kind == "segala":
        return d
    if d.kind != "arith":
        raise DocumentError("semiring", "only arith documents can be read as Segala systems")
    return Document("segala", None, d.algebra, d.states, d.initial, d.observations, d.raw, None, from_weighted(d.system))


def state_name(s) -> str:
    """Display name: blocks (tuples of states) print as ``[x,y]``."""
    if isinstance(s, str):
        return s
    if isinstance(s, tuple):
        return "[" + ",".join(state_name(x) for x in s) + "]"
    return str(s)


def tagged_name(s) -> str:
    """Names for coproduct states ``(tag, state)``."""
    return f"{s[0]}:{state_name(s[1])}"


def dump_system(arrow: KleisliMap, initial=None, observations=None) -> dict:
    """Serialise an endo-arrow to a document (weights as exact strings)."""
    alg = arrow.algebra
    doc: dict = {
        "semiring": arrow.semiring.kind,
        "labels": list(alg.alphabet),
        "algebra": alg.name,
    }
    if alg.name == "groupoidal":
        doc["inverses"] = dict(alg.inverses)
    doc["states"] = [state_name(s) for s in arrow.source]
    if initial is not None:
        doc["initial"] = state_name(initial)
    if observations:
        doc["observations"] = {state_name(s): o for s, o in observations.items()}
    doc["transitions"] = [
        {"from": state_name(x), "label": a, "to": state_name(y), "weight": format_weight(arrow.semiring, w)}
        for (x, a, y), w in arrow.cells()
    ]
    return doc


def dump_convex(arrow: ConvexArrow, observations=None) -> dict:
    doc: dict = {"semiring": "segala", "labels": list(arrow.algebra.alphabet), "algebra": arrow.algebra.name}
    doc["states"] = [state_name(s) for s in arrow.source]
    if observations:
        doc["observations"] = {state_name(s): o for s, o in observations.items()}
    doc["transitions"] = [
        {
            "from": state_name(x),
            "choices": [[{"label": a, "to": state_name(y), "weight": str(Fraction(w))} for (a, y), w in g] for g in gs],
        }
        for x, gs in arrow.gens.items()
        if gs
    ]
    return doc


def to_dot(arrow: KleisliMap, name: str = "system") -> str:
    """Graphviz digraph; tau edges are dashed."""
    lines = [f"digraph {json.dumps(name)} {{"]
    for s in arrow.source:
        lines.append(f"  {json.dumps(state_name(s))};")
    for (x, a, y), w in arrow.cells():
        label = a if arrow.semiring.kind == "boolean" else f"{a}, {format_weight(arrow.semiring, w)}"
        style = ", style=dashed" if a == TAU else ""
        lines.append(f"  {json.dumps(state_name(x))} -> {json.dumps(state_name(y))} [label={json.dumps(label)}{style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
