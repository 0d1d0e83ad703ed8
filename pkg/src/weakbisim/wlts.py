"""Weighted transition systems as Kleisli arrows for F_W(A_tau x Id).

A :class:`KleisliMap` ``X -> Y`` is a finite-support table
``(x, label, y) -> weight``; absent cells are the semiring zero.  Composition
follows the label algebra: ``(g . f)(x)(c, z)`` sums
``f(x)(a, y) * g(y)(b, z)`` over every ``y`` and every label pair with
``concat(a, b) == c``.  Under tau-absorption this is exactly

    (g . f)(x)(tau, z) = sum_y g(y)(tau, z) f(x)(tau, y)
    (g . f)(x)(a, z)   = sum_y g(y)(a, z) f(x)(tau, y) + sum_y g(y)(tau, z) f(x)(a, y)

``compose(g, f)`` means "first f, then g", matching the usual ``g . f``.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .semiring import LawReport, LawResult, SemiringSpec, Weight

TAU = "tau"

State = Hashable
Cell = tuple  # (source state, label, target state)


class AlgebraError(ValueError):
    pass


class ShapeError(ValueError):
    """Arrows do not fit together (state lists, semirings or algebras differ)."""


# ---------------------------------------------------------------------------
# label algebras


@dataclass(frozen=True)
class LabelAlgebra:
    """Finite label set ``A_tau`` with a partial concatenation (the monad multiplication).

    ``concat`` maps label pairs to a label, or ``None`` when the pair is
    annihilated.  ``valid`` records whether unit and associativity laws hold;
    systems refuse invalid algebras.
    """

    name: str
    alphabet: tuple[str, ...]
    table: Mapping[tuple[str, str], str | None] = field(repr=False, compare=False)
    inverses: tuple[tuple[str, str], ...] = ()

    @property
    def labels(self) -> tuple[str, ...]:
        return (TAU,) + self.alphabet

    def concat(self, a: str, b: str) -> str | None:
        return self.table[a, b]

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @property
    def valid(self) -> bool:
        return _cached_report(self).ok

    def pairs_for(self) -> dict[str, list[tuple[str, str]]]:
        """For each result label, the label pairs concatenating to it."""
        out: dict[str, list[tuple[str, str]]] = {c: [] for c in self.labels}
        for a in self.labels:
            for b in self.labels:
                c = self.table[a, b]
                if c is not None:
                    out[c].append((a, b))
        return out

    def __eq__(self, other):
        if not isinstance(other, LabelAlgebra):
            return NotImplemented
        return (self.name, self.alphabet, self.inverses) == (other.name, other.alphabet, other.inverses)

    def __hash__(self):
        return hash((self.name, self.alphabet, self.inverses))


def _check_alphabet(alphabet: Iterable[str]) -> tuple[str, ...]:
    alphabet = tuple(alphabet)
    if TAU in alphabet:
        raise AlgebraError('"tau" is reserved and implicit; do not list it')
    if len(set(alphabet)) != len(alphabet):
        dup = sorted({a for a in alphabet if alphabet.count(a) > 1})
        raise AlgebraError(f"duplicate labels: {dup}")
    return alphabet


def make_tau_absorption(alphabet: Iterable[str]) -> LabelAlgebra:
    alphabet = _check_alphabet(alphabet)
    labels = (TAU,) + alphabet
    table = {}
    for a in labels:
        for b in labels:
            if b == TAU:
                table[a, b] = a
            elif a == TAU:
                table[a, b] = b
            else:
                table[a, b] = None
    return LabelAlgebra("tau", alphabet, table)


def make_groupoidal(alphabet: Iterable[str], inverses: Mapping[str, str] | None = None) -> LabelAlgebra:
    """tau-absorption plus ``a . a^-1 = a^-1 . a = tau`` for each inverse pair.

    ``inverses`` maps a label to the name of its formal inverse; by default
    every label ``a`` gets ``a^-1``.  The resulting table is not associative
    (see :func:`validate_label_algebra`), so systems cannot be built over it.
    """
    base = _check_alphabet(alphabet)
    if inverses is None:
        inverses = {a: f"{a}^-1" for a in base}
    extra = [inv for a, inv in inverses.items() if inv not in base]
    for a in inverses:
        if a not in base:
            raise AlgebraError(f"inverse given for unknown label {a!r}")
    full = _check_alphabet(base + tuple(extra))
    alg = make_tau_absorption(full)
    table = dict(alg.table)
    for a, inv in inverses.items():
        table[a, inv] = TAU
        table[inv, a] = TAU
    return LabelAlgebra("groupoidal", full, table, tuple(sorted(inverses.items())))


@functools.lru_cache(maxsize=64)
def _cached_report(alg: LabelAlgebra) -> LawReport:
    return validate_label_algebra(alg)


def validate_label_algebra(alg: LabelAlgebra) -> LawReport:
    """Exhaustive unit and associativity check; annihilation is absorbing."""
    labels = alg.labels

    def cat(a, b):
        if a is None or b is None:
            return None
        return alg.concat(a, b)

    unit = LawResult("unit", True, None, 0)
    for a in labels:
        unit.checked += 1
        if alg.concat(TAU, a) != a or alg.concat(a, TAU) != a:
            unit = LawResult("unit", False, (a,), unit.checked)
            break
    assoc = LawResult("associative", True, None, 0)
    for a, b, c in itertools.product(labels, repeat=3):
        assoc.checked += 1
        if cat(cat(a, b), c) != cat(a, cat(b, c)):
            assoc = LawResult("associative", False, (a, b, c), assoc.checked)
            break
    return LawReport(f"label algebra {alg.name}", [unit, assoc])


# ---------------------------------------------------------------------------
# arrows


@dataclass(frozen=True, eq=False)
class KleisliMap:
    """An arrow ``source -> F_W(A_tau x target)`` with finite support."""

    source: tuple
    target: tuple
    semiring: SemiringSpec
    algebra: LabelAlgebra
    weights: Mapping[Cell, Weight]

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        src, tgt, labels = set(self.source), set(self.target), set(self.algebra.labels)
        if len(src) != len(self.source) or len(tgt) != len(self.target):
            raise ShapeError("duplicate states")
        clean = {}
        for (x, a, y), w in self.weights.items():
            if x not in src:
                raise ShapeError(f"unknown source state {x!r}")
            if y not in tgt:
                raise ShapeError(f"unknown target state {y!r}")
            if a not in labels:
                raise AlgebraError(f"unknown label {a!r}")
            self.semiring.check(w)
            if w != self.semiring.zero:
                clean[x, a, y] = w
        object.__setattr__(self, "weights", clean)

    def __getitem__(self, cell: Cell) -> Weight:
        return self.weights.get(cell, self.semiring.zero)

    def __eq__(self, other):
        if not isinstance(other, KleisliMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.semiring.kind == other.semiring.kind
            and self.algebra == other.algebra
            and self.weights == other.weights
        )

    __hash__ = None

    def row(self, x) -> dict[tuple[str, State], Weight]:
        return {(a, y): w for (s, a, y), w in self.weights.items() if s == x}

    def rows(self) -> dict[State, list[tuple[str, State, Weight]]]:
        out: dict = {x: [] for x in self.source}
        for (x, a, y), w in self.weights.items():
            out[x].append((a, y, w))
        return out

    def cells(self) -> list[tuple[Cell, Weight]]:
        """Non-zero cells in canonical (state, label, state) order."""
        si = {s: i for i, s in enumerate(self.source)}
        ti = {s: i for i, s in enumerate(self.target)}
        li = {a: i for i, a in enumerate(self.algebra.labels)}
        return sorted(self.weights.items(), key=lambda kv: (si[kv[0][0]], li[kv[0][1]], ti[kv[0][2]]))

    def with_weights(self, weights: Mapping[Cell, Weight]) -> "KleisliMap":
        return KleisliMap(self.source, self.target, self.semiring, self.algebra, weights)

    def __repr__(self):
        body = ", ".join(f"{x}-{a},{w}->{y}" for (x, a, y), w in self.cells())
        return f"KleisliMap[{self.semiring.kind}]({body})"


@dataclass(frozen=True, eq=False, repr=False)
class System(KleisliMap):
    """An endo-arrow ``X -> X`` (a coalgebra) with an optional initial state.

    ``observations`` optionally tags states; states with different tags start
    in different blocks of partition refinement.
    """

    initial: State | None = None
    observations: Mapping[State, str] | None = None

    def __post_init__(self):
        super().__post_init__()
        if self.source != self.target:
            raise ShapeError("a system needs identical source and target state lists")
        report = _cached_report(self.algebra)
        if not report.ok:
            bad = report.failures()[0]
            raise AlgebraError(f"label algebra {self.algebra.name!r} fails {bad.name} at {bad.witness}")
        if self.initial is not None and self.initial not in self.source:
            raise ShapeError(f"initial state {self.initial!r} is not a state")
        if self.observations:
            for s in self.observations:
                if s not in self.source:
                    raise ShapeError(f"observation for unknown state {s!r}")

    @property
    def states(self) -> tuple:
        return self.source

    @classmethod
    def from_map(cls, arrow: KleisliMap, initial=None, observations=None) -> "System":
        return cls(arrow.source, arrow.target, arrow.semiring, arrow.algebra, arrow.weights, initial, observations)

    def with_weights(self, weights):
        return System(self.source, self.target, self.semiring, self.algebra, weights, self.initial, self.observations)


def build_system(
    semiring: SemiringSpec,
    algebra: LabelAlgebra,
    states: Sequence,
    transitions: Iterable[tuple],
    initial=None,
    observations=None,
) -> System:
    """Build a system from ``(x, label, y, weight)`` tuples; repeated cells are added."""
    weights: dict = {}
    for x, a, y, w in transitions:
        semiring.check(w)
        weights[x, a, y] = semiring.add(weights.get((x, a, y), semiring.zero), w)
    return System(tuple(states), tuple(states), semiring, algebra, weights, initial, observations)


def _same_algebra(f: KleisliMap, g: KleisliMap):
    if f.semiring.kind != g.semiring.kind:
        raise ShapeError(f"semirings differ: {f.semiring.kind} vs {g.semiring.kind}")
    if f.algebra != g.algebra:
        raise ShapeError("label algebras differ")


def zero_map(source, target, semiring: SemiringSpec, algebra: LabelAlgebra) -> KleisliMap:
    return KleisliMap(tuple(source), tuple(target), semiring, algebra, {})


def unit(states, semiring: SemiringSpec, algebra: LabelAlgebra) -> KleisliMap:
    """The identity arrow ``x |-> 1 * (tau, x)``."""
    states = tuple(states)
    return KleisliMap(states, states, semiring, algebra, {(x, TAU, x): semiring.one for x in states})


def embed(p: Callable[[State], State] | Mapping, source, target, semiring, algebra) -> KleisliMap:
    """Lift a plain function ``X -> Y`` to the arrow ``x |-> 1 * (tau, p(x))``."""
    fn = p.__getitem__ if isinstance(p, Mapping) else p
    return KleisliMap(
        tuple(source), tuple(target), semiring, algebra, {(x, TAU, fn(x)): semiring.one for x in source}
    )


def compose(g: KleisliMap, f: KleisliMap) -> KleisliMap:
    """``g . f`` -- first ``f``, then ``g``."""
    _same_algebra(f, g)
    if f.target != g.source:
        raise ShapeError("f.target must equal g.source")
    sr, alg = f.semiring, f.algebra
    add, mul, zero = sr.add, sr.mul, sr.zero
    g_rows = g.rows()
    out: dict = {}
    for (x, a, y), fw in f.cells():
        for b, z, gw in g_rows[y]:
            c = alg.concat(a, b)
            if c is None:
                continue
            key = (x, c, z)
            out[key] = add(out.get(key, zero), mul(fw, gw))
    return KleisliMap(f.source, g.target, sr, alg, out)


def _pointwise(f: KleisliMap, g: KleisliMap, op) -> dict:
    _same_algebra(f, g)
    if f.source != g.source or f.target != g.target:
        raise ShapeError("arrows have different shapes")
    zero = f.semiring.zero
    out = {}
    for key in list(f.weights) + [k for k in g.weights if k not in f.weights]:
        out[key] = op(f.weights.get(key, zero), g.weights.get(key, zero))
    return out


def join(f: KleisliMap, g: KleisliMap) -> KleisliMap:
    """Entrywise semiring join."""
    return KleisliMap(f.source, f.target, f.semiring, f.algebra, _pointwise(f, g, f.semiring.join))


def leq(f: KleisliMap, g: KleisliMap) -> bool:
    _same_algebra(f, g)
    if f.source != g.source or f.target != g.target:
        raise ShapeError("arrows have different shapes")
    sr = f.semiring
    return all(sr.leq(w, g[key]) for key, w in f.weights.items())


def coproduct(a: System, b: System, tags=("L", "R")) -> System:
    """Disjoint union; states become ``(tag, state)`` pairs."""
    _same_algebra(a, b)
    ta, tb = tags
    states = tuple((ta, s) for s in a.states) + tuple((tb, s) for s in b.states)
    weights = {((ta, x), l, (ta, y)): w for (x, l, y), w in a.weights.items()}
    weights.update({((tb, x), l, (tb, y)): w for (x, l, y), w in b.weights.items()})
    obs = None
    if a.observations or b.observations:
        obs = {(ta, s): o for s, o in (a.observations or {}).items()}
        obs.update({(tb, s): o for s, o in (b.observations or {}).items()})
    return System(states, states, a.semiring, a.algebra, weights, None, obs)
