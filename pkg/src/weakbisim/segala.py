"""Segala systems in the Kleisli category of the convex combinations monad.

An arrow ``X -> CM(A_tau x Y)`` assigns to each state a finite list of
generators; the represented set is their convex hull.  A generator is a
finitely supported weight function ``(label, y) -> rational``, stored as a
sorted tuple of ``((label, y), weight)`` pairs so it can be hashed.

States of a *system* may have no generators at all (no transitions).  Such
a row contributes nothing to a join; every arrow built by ``cm_join`` with a
non-empty arrow is non-empty again.

All arithmetic is exact; hull membership is decided by an exact LP.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .bisim import Partition
from .linalg import convex_combination
from .semiring import make_semiring
from .wlts import TAU, KleisliMap, LabelAlgebra, ShapeError

DEFAULT_CAP = 64

Gen = tuple  # ((label, state), Fraction) pairs, canonical order


def make_gen(weights: Mapping, label_pos=None, state_pos=None) -> Gen:
    items = [(k, Fraction(w)) for k, w in weights.items() if w != 0]
    if label_pos is None:
        return tuple(sorted(items, key=lambda kv: (repr(kv[0][0]), repr(kv[0][1]))))
    return tuple(sorted(items, key=lambda kv: (label_pos[kv[0][0]], state_pos[kv[0][1]])))


@dataclass(frozen=True, eq=False)
class ConvexArrow:
    source: tuple
    target: tuple
    algebra: LabelAlgebra
    gens: Mapping  # state -> tuple[Gen, ...]

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        lp = {a: i for i, a in enumerate(self.algebra.labels)}
        sp = {s: i for i, s in enumerate(self.target)}
        clean = {}
        for x in self.source:
            out = []
            for g in self.gens.get(x, ()):
                d = dict(g)
                for (a, y), w in d.items():
                    if a not in lp:
                        raise ShapeError(f"unknown label {a!r}")
                    if y not in sp:
                        raise ShapeError(f"unknown target state {y!r}")
                    if w < 0:
                        raise ValueError("generator weights must be non-negative")
                out.append(make_gen(d, lp, sp))
            clean[x] = tuple(dict.fromkeys(out))
        extra = set(self.gens) - set(self.source)
        if extra:
            raise ShapeError(f"generators for unknown states {sorted(map(repr, extra))}")
        object.__setattr__(self, "gens", clean)

    def __getitem__(self, x) -> tuple:
        return self.gens[x]

    def __eq__(self, other):
        """Equality of the represented convex sets."""
        if not isinstance(other, ConvexArrow):
            return NotImplemented
        if (self.source, self.target, self.algebra) != (other.source, other.target, other.algebra):
            return False
        a, b = reduce(self), reduce(other)
        return all(set(a.gens[x]) == set(b.gens[x]) for x in self.source)

    __hash__ = None

    def size(self) -> int:
        return sum(len(g) for g in self.gens.values())

    def __repr__(self):
        def fmt(g):
            return " + ".join(f"{w}*({a},{y})" for (a, y), w in g) or "0"

        body = "; ".join(f"{x}: {{{', '.join(fmt(g) for g in gs)}}}" for x, gs in self.gens.items())
        return f"ConvexArrow({body})"


# ---------------------------------------------------------------------------
# hull operations


def _coords(gens: Sequence[Gen]):
    keys = []
    seen = set()
    for g in gens:
        for k, _ in g:
            if k not in seen:
                seen.add(k)
                keys.append(k)
    return keys


def in_hull(point: Gen, gens: Sequence[Gen]) -> bool:
    if not gens:
        return False
    if point in gens:
        return True
    keys = _coords(list(gens) + [point])
    vec = lambda g: [dict(g).get(k, 0) for k in keys]  # noqa: E731
    return convex_combination(vec(point), [vec(g) for g in gens]) is not None


def reduce_gens(gens: Sequence[Gen]) -> tuple:
    """Drop generators that are convex combinations of the remaining ones."""
    keep = list(dict.fromkeys(gens))
    i = 0
    while i < len(keep):
        others = keep[:i] + keep[i + 1 :]
        if others and in_hull(keep[i], others):
            keep.pop(i)
        else:
            i += 1
    return tuple(keep)


def reduce(arrow: ConvexArrow) -> ConvexArrow:
    return ConvexArrow(arrow.source, arrow.target, arrow.algebra, {x: reduce_gens(g) for x, g in arrow.gens.items()})


def _shape(a: ConvexArrow, b: ConvexArrow):
    if (a.source, a.target) != (b.source, b.target) or a.algebra != b.algebra:
        raise ShapeError("convex arrows have different shapes")


def cm_leq_witness(a: ConvexArrow, b: ConvexArrow):
    """First ``(state, generator)`` of ``a`` outside the hull of ``b``, else None."""
    _shape(a, b)
    for x in a.source:
        for g in a.gens[x]:
            if not in_hull(g, b.gens[x]):
                return x, g
    return None


def cm_leq(a: ConvexArrow, b: ConvexArrow) -> bool:
    return cm_leq_witness(a, b) is None


def cm_join(a: ConvexArrow, b: ConvexArrow) -> ConvexArrow:
    _shape(a, b)
    return ConvexArrow(
        a.source, a.target, a.algebra, {x: reduce_gens(a.gens[x] + b.gens[x]) for x in a.source}
    )


def cm_unit(states, algebra: LabelAlgebra) -> ConvexArrow:
    states = tuple(states)
    return ConvexArrow(states, states, algebra, {x: (make_gen({(TAU, x): 1}),) for x in states})


def cm_embed(p: Callable | Mapping, source, target, algebra: LabelAlgebra) -> ConvexArrow:
    fn = p.__getitem__ if isinstance(p, Mapping) else p
    return ConvexArrow(source, target, algebra, {x: (make_gen({(TAU, fn(x)): 1}),) for x in source})


def _scaled_relabel(alg, a, w, psi: Gen) -> dict:
    out: dict = {}
    for (b, z), v in psi:
        c = alg.concat(a, b)
        if c is not None:
            out[c, z] = out.get((c, z), 0) + w * v
    return out


def _add(d1: dict, d2: dict) -> dict:
    out = dict(d1)
    for k, v in d2.items():
        out[k] = out.get(k, 0) + v
    return out


def cm_compose(g: ConvexArrow, f: ConvexArrow) -> ConvexArrow:
    """``g . f``: the hull of all pure selections, built as a reduced Minkowski sum."""
    if f.target != g.source or f.algebra != g.algebra:
        raise ShapeError("f.target must equal g.source")
    alg = f.algebra
    lp = {a: i for i, a in enumerate(alg.labels)}
    sp = {s: i for i, s in enumerate(g.target)}
    out = {}
    for x in f.source:
        result: list = []
        for phi in f.gens[x]:
            partial = [{}]
            for (a, y), w in phi:
                choices = g.gens[y]
                partial = [_add(s, _scaled_relabel(alg, a, w, psi)) for s in partial for psi in choices]
                partial = [dict(t) for t in reduce_gens([make_gen(s, lp, sp) for s in partial])]
                if not partial:
                    break
            result.extend(make_gen(s, lp, sp) for s in partial)
        out[x] = reduce_gens(result)
    return ConvexArrow(f.source, g.target, alg, out)


# ---------------------------------------------------------------------------
# saturation


@dataclass
class ConvexSolveResult:
    value: ConvexArrow
    status: str  # exact | capped
    depth: int
    history: list = field(default_factory=list)


def cm_ps_solve(alpha: ConvexArrow, f: ConvexArrow, cap: int = DEFAULT_CAP) -> ConvexSolveResult:
    """Kleene iteration ``x_{k+1} = f v x_k . alpha`` from ``x_0 = f``."""
    if alpha.source != alpha.target or f.source != alpha.source:
        raise ShapeError("alpha must be an endo-arrow on the source of f")
    f = reduce(f)
    x = f
    history = [f]
    for k in range(1, cap + 1):
        nxt = cm_join(f, cm_compose(x, alpha))
        history.append(nxt)
        if cm_leq(nxt, x):
            return ConvexSolveResult(nxt, "exact", k, history)
        x = nxt
    return ConvexSolveResult(x, "capped", cap, history)


# ---------------------------------------------------------------------------
# weak convex bisimilarity


@dataclass
class PairCertificate:
    """Why two states ended in different blocks.

    ``depths`` lists ``(depth, state, generator)``: at Kleene depth ``depth``
    the row of ``state`` contains ``generator`` and the other row's hull does
    not.  ``exact`` is set when the rows compared had stabilised.
    """

    pair: tuple
    round: int
    exact: bool
    depths: list = field(default_factory=list)

    @property
    def first_depth(self) -> int | None:
        return self.depths[0][0] if self.depths else None


@dataclass
class ConvexVerdict:
    answer: str  # bisimilar_exact | distinguished | unknown
    partition: Partition
    cap: int
    rounds: int
    certificates: dict = field(default_factory=dict)
    unknown_pairs: list = field(default_factory=list)
    statuses: dict = field(default_factory=dict)


def _row_distinction(a: ConvexArrow, x, y):
    for s, t in ((x, y), (y, x)):
        for g in a.gens[s]:
            if not in_hull(g, a.gens[t]):
                return s, g
    return None


def _row_key(arrow: ConvexArrow, x):
    return frozenset(arrow.gens[x])


def weak_convex_bisim(
    alpha: ConvexArrow,
    cap: int = DEFAULT_CAP,
    observations: Mapping | None = None,
    seed: Partition | None = None,
) -> ConvexVerdict:
    """Partition refinement on convex rows ``alpha*_p``; three-valued answer."""
    states = alpha.source
    if seed is not None:
        part = seed
    elif observations:
        part = Partition.from_key(states, lambda s: observations.get(s, ""))
    else:
        part = Partition.single(states)
    certificates: dict = {}
    for p, q in itertools.combinations(states, 2):
        if not part.same_block(p, q):
            certificates[p, q] = PairCertificate((p, q), 0, True, [(0, None, None)])
    statuses = {}
    rounds = 0
    any_capped = False
    while True:
        rounds += 1
        f = cm_embed(part.quotient(), states, part.blocks, alpha.algebra)
        res = cm_ps_solve(alpha, f, cap)
        statuses[rounds] = res.status
        capped = res.status == "capped"
        rows = reduce(res.value)
        groups: dict = {}
        block_of = part.block_of
        for s in states:
            groups.setdefault((block_of[s], _row_key(rows, s)), []).append(s)
        nxt = Partition.from_blocks(states, groups.values())
        if len(nxt) == len(part):
            any_capped = any_capped or capped
            break
        any_capped = any_capped or capped
        for p, q in itertools.combinations(states, 2):
            if part.same_block(p, q) and not nxt.same_block(p, q):
                cert = PairCertificate((p, q), rounds, not capped)
                for depth, arrow in enumerate(res.history):
                    d = _row_distinction(arrow, p, q)
                    if d is not None:
                        cert.depths.append((depth, d[0], d[1]))
                certificates[p, q] = cert
        part = nxt
    unknown = []
    if capped:
        unknown = [pair for blk in part.blocks for pair in itertools.combinations(blk, 2)]
    if not any_capped:
        answer = "bisimilar_exact"
    elif unknown:
        answer = "unknown"
    else:
        answer = "distinguished"
    return ConvexVerdict(answer, part, cap, rounds, certificates, unknown, statuses)


# ---------------------------------------------------------------------------
# bridges to weighted systems


def from_weighted(system: KleisliMap) -> ConvexArrow:
    """A fully-probabilistic ``arith`` arrow as a deterministic Segala arrow.

    Each state with transitions gets its row as the single generator; states
    without transitions get none.
    """
    if system.semiring.kind != "arith":
        raise ValueError("only arith systems embed as Segala systems")
    gens = {}
    for x in system.source:
        row = system.row(x)
        gens[x] = (make_gen(row),) if row else ()
    return ConvexArrow(system.source, system.target, system.algebra, gens)


def to_weighted(arrow: ConvexArrow) -> KleisliMap:
    """Inverse of :func:`from_weighted` for arrows with at most one generator per state."""
    weights = {}
    for x, gs in arrow.gens.items():
        if len(gs) > 1:
            raise ValueError(f"state {x!r} has {len(gs)} generators; not deterministic")
        for g in gs:
            for (a, y), w in g:
                weights[x, a, y] = w
    return KleisliMap(arrow.source, arrow.target, make_semiring("arith"), arrow.algebra, weights)


def cm_coproduct(a: ConvexArrow, b: ConvexArrow, tags=("L", "R")) -> ConvexArrow:
    """Disjoint union of two endo-arrows; states become ``(tag, state)``."""
    if a.algebra != b.algebra:
        raise ShapeError("arrows use different label algebras")
    states = []
    gens = {}
    for tag, arrow in zip(tags, (a, b)):
        for x in arrow.source:
            states.append((tag, x))
            gens[tag, x] = tuple(make_gen({(l, (tag, y)): w for (l, y), w in g}) for g in arrow.gens[x])
    return ConvexArrow(states, states, a.algebra, gens)


def is_weak_convex_bisim(alpha: ConvexArrow, partition: Partition, cap: int = DEFAULT_CAP) -> tuple[bool, str]:
    """Check one partition: are the convex rows ``alpha*_p`` equal within blocks?

    Returns ``(verdict, solver_status)``; with status ``capped`` the verdict
    is only as good as the truncated iterate.
    """
    f = cm_embed(partition.quotient(), alpha.source, partition.blocks, alpha.algebra)
    res = cm_ps_solve(alpha, f, cap)
    rows = reduce(res.value)
    ok = all(_row_key(rows, s) == _row_key(rows, blk[0]) for blk in partition.blocks for s in blk)
    return ok, res.status
