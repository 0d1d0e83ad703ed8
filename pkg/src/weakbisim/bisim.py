"""Weak and strong behavioural equivalence by partition refinement.

A partition ``P`` is a weak bisimulation when the rows of
``ps_solve(alpha, embed(p))`` (``p`` the quotient map of ``P``) are constant on
every block, and a strong one when the rows of ``embed(p) . alpha`` are.
Refinement starts from the coarsest admissible partition (one block, or the
blocks induced by state observations) and splits blocks by row until stable.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .semiring import INF
from .saturation import SaturationResult, SolveConfig, ps_solve, resolve_mode
from .wlts import TAU, KleisliMap, ShapeError, System, compose, coproduct, embed

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class Partition:
    """Blocks are tuples of states in state order; blocks ordered by first member."""

    states: tuple
    blocks: tuple

    def __post_init__(self):
        seen = [s for b in self.blocks for s in b]
        if any(not b for b in self.blocks):
            raise ValueError("empty block")
        if len(seen) != len(set(seen)) or set(seen) != set(self.states):
            raise ValueError("blocks must be disjoint and cover the states")

    @classmethod
    def from_blocks(cls, states: Sequence, blocks: Iterable[Iterable]) -> "Partition":
        states = tuple(states)
        pos = {s: i for i, s in enumerate(states)}
        missing = [s for b in blocks for s in b if s not in pos]
        if missing:
            raise ValueError(f"unknown states in partition: {missing}")
        canon = sorted((tuple(sorted(b, key=pos.__getitem__)) for b in blocks), key=lambda b: pos[b[0]])
        return cls(states, tuple(canon))

    @classmethod
    def from_key(cls, states: Sequence, key) -> "Partition":
        groups: dict = {}
        for s in states:
            groups.setdefault(key(s), []).append(s)
        return cls(tuple(states), tuple(tuple(g) for g in groups.values()))

    @classmethod
    def single(cls, states: Sequence) -> "Partition":
        states = tuple(states)
        return cls(states, (states,) if states else ())

    @classmethod
    def discrete(cls, states: Sequence) -> "Partition":
        states = tuple(states)
        return cls(states, tuple((s,) for s in states))

    @property
    def block_of(self) -> dict:
        return {s: b for b in self.blocks for s in b}

    def quotient(self) -> dict:
        """The quotient map ``state -> block``."""
        return self.block_of

    def __len__(self):
        return len(self.blocks)

    def refines(self, other: "Partition") -> bool:
        """Every block of ``self`` lies inside a block of ``other``."""
        ob = other.block_of
        return all(len({ob[s] for s in b}) == 1 for b in self.blocks)

    def same_block(self, a, b) -> bool:
        bo = self.block_of
        return bo[a] == bo[b]

    def as_lists(self, name=str) -> list[list]:
        return sorted(sorted(name(s) for s in b) for b in self.blocks)


@dataclass
class Witness:
    """A cell on which the rows of two states differ."""

    states: tuple
    label: str
    block: tuple
    weights: tuple


@dataclass
class BisimVerdict:
    partition: Partition
    status: str = "exact"  # exact | approximate
    delta: Fraction | None = None
    rounds: int = 0
    witness: Witness | None = None
    solver_statuses: dict = field(default_factory=dict)
    rows: KleisliMap | None = None


def initial_partition(alpha: System, seed: Partition | None = None) -> Partition:
    if seed is not None:
        return seed
    obs = getattr(alpha, "observations", None)
    if obs:
        return Partition.from_key(alpha.source, lambda s: obs.get(s, ""))
    return Partition.single(alpha.source)


def quotient_arrow(alpha: KleisliMap, partition: Partition) -> KleisliMap:
    return embed(partition.quotient(), alpha.source, partition.blocks, alpha.semiring, alpha.algebra)


def weak_rows_result(alpha: KleisliMap, partition: Partition, cfg: SolveConfig | None = None) -> SaturationResult:
    return ps_solve(alpha, quotient_arrow(alpha, partition), cfg)


def weak_rows(alpha: KleisliMap, partition: Partition, cfg: SolveConfig | None = None) -> KleisliMap:
    """``alpha*_p``: the saturated rows of ``alpha`` relative to the quotient ``p``."""
    return weak_rows_result(alpha, partition, cfg).value


def strong_rows(alpha: KleisliMap, partition: Partition) -> KleisliMap:
    """``embed(p) . alpha``: one alpha step, then the quotient."""
    return compose(quotient_arrow(alpha, partition), alpha)


def _row_key(rows: KleisliMap, x, label_pos, block_pos) -> tuple:
    return tuple(
        sorted(((label_pos[a], block_pos[y], w) for (a, y), w in rows.row(x).items()), key=lambda t: t[:2])
    )


def _close(r1: dict, r2: dict, delta) -> bool:
    for key in set(r1) | set(r2):
        a, b = r1.get(key, 0), r2.get(key, 0)
        if a == b:
            continue
        if a == INF or b == INF or isinstance(a, bool) or abs(a - b) > delta:
            return False
    return True


def _differing_cell(rows: KleisliMap, x, y, labels) -> Witness | None:
    rx, ry = rows.row(x), rows.row(y)
    zero = rows.semiring.zero
    for a in labels:
        for blk in rows.target:
            wx, wy = rx.get((a, blk), zero), ry.get((a, blk), zero)
            if wx != wy:
                return Witness((x, y), a, blk, (wx, wy))
    return None


def split_by_rows(rows: KleisliMap, partition: Partition, delta=None) -> Partition:
    """Refine ``partition`` so that states sharing a block have equal rows.

    With ``delta`` set, rows are compared up to ``delta`` per cell; grouping is
    greedy against the first member of each group.
    """
    labels = rows.algebra.labels
    label_pos = {a: i for i, a in enumerate(labels)}
    block_pos = {b: i for i, b in enumerate(rows.target)}
    groups: list[list] = []
    if delta is None:
        index: dict = {}
        block_of = partition.block_of
        for s in partition.states:
            key = (block_of[s], _row_key(rows, s, label_pos, block_pos))
            if key not in index:
                index[key] = len(groups)
                groups.append([])
            groups[index[key]].append(s)
    else:
        for blk in partition.blocks:
            local: list[list] = []
            for s in blk:
                rs = rows.row(s)
                for g in local:
                    if _close(rows.row(g[0]), rs, delta):
                        g.append(s)
                        break
                else:
                    local.append([s])
            groups.extend(local)
    return Partition.from_blocks(partition.states, groups)


def _constant_on_blocks(rows: KleisliMap, partition: Partition, delta=None) -> bool:
    return len(split_by_rows(rows, partition, delta)) == len(partition)


def _iterative(cfg: SolveConfig | None, kind: str) -> bool:
    cfg = cfg or SolveConfig()
    return resolve_mode(kind, cfg.mode) == "iterate"


def _respects_observations(alpha: KleisliMap, partition: Partition) -> bool:
    obs = getattr(alpha, "observations", None)
    return not obs or partition.refines(initial_partition(alpha))


def is_weak_bisim(alpha: KleisliMap, partition: Partition, cfg: SolveConfig | None = None, delta=None) -> bool:
    """Rows of ``alpha*_p`` constant on blocks (within ``delta`` in iterate mode).

    Systems carrying observations additionally require blocks to agree on them.
    """
    if not _respects_observations(alpha, partition):
        return False
    res = weak_rows_result(alpha, partition, cfg)
    d = _effective_delta(cfg, alpha.semiring.kind, delta, res)
    return _constant_on_blocks(res.value, partition, d)


def is_strong_bisim(alpha: KleisliMap, partition: Partition) -> bool:
    if not _respects_observations(alpha, partition):
        return False
    return _constant_on_blocks(strong_rows(alpha, partition), partition)


def partition_witness(
    alpha: KleisliMap, partition: Partition, cfg: SolveConfig | None = None, delta=None, strong: bool = False
) -> Witness | None:
    """First pair in a block whose observations or rows differ; ``None`` if stable."""
    obs = getattr(alpha, "observations", None) or {}
    for blk in partition.blocks:
        for s in blk[1:]:
            if obs.get(s, "") != obs.get(blk[0], ""):
                return Witness((blk[0], s), "observation", (), (obs.get(blk[0], ""), obs.get(s, "")))
    if strong:
        rows, d = strong_rows(alpha, partition), None
    else:
        res = weak_rows_result(alpha, partition, cfg)
        rows, d = res.value, _effective_delta(cfg, alpha.semiring.kind, delta, res)
    for blk in partition.blocks:
        for s in blk[1:]:
            r0, r1 = rows.row(blk[0]), rows.row(s)
            if (r0 != r1) if d is None else not _close(r0, r1, d):
                return _differing_cell(rows, blk[0], s, alpha.algebra.labels)
    return None


def _effective_delta(cfg, kind, delta, res: SaturationResult):
    if res.status == "exact":
        return None
    if delta is None:
        eps = (cfg or SolveConfig()).epsilon
        delta = 1000 * eps
    return Fraction(delta)


def greatest_weak_bisim(
    alpha: System, cfg: SolveConfig | None = None, delta=None, seed: Partition | None = None
) -> BisimVerdict:
    """Coarsest stable partition reached by weak-row refinement."""
    part = initial_partition(alpha, seed)
    approximate = False
    used_delta = None
    statuses: dict = {}
    rounds = 0
    while True:
        rounds += 1
        res = weak_rows_result(alpha, part, cfg)
        statuses[rounds] = res.status
        d = _effective_delta(cfg, alpha.semiring.kind, delta, res)
        if d is not None:
            approximate = True
            used_delta = d
        nxt = split_by_rows(res.value, part, d)
        if len(nxt) == len(part):
            return BisimVerdict(
                part,
                "approximate" if approximate else "exact",
                used_delta,
                rounds,
                solver_statuses=statuses,
                rows=res.value,
            )
        part = nxt


def greatest_strong_bisim(alpha: System, seed: Partition | None = None) -> BisimVerdict:
    part = initial_partition(alpha, seed)
    rounds = 0
    while True:
        rounds += 1
        rows = strong_rows(alpha, part)
        nxt = split_by_rows(rows, part)
        if len(nxt) == len(part):
            return BisimVerdict(part, "exact", None, rounds, rows=rows)
        part = nxt


@dataclass
class Comparison:
    bisimilar: bool
    verdict: BisimVerdict
    system: System
    pair: tuple
    witness: Witness | None = None


def compare(
    a: System, b: System, cfg: SolveConfig | None = None, delta=None, strong: bool = False, tags=("L", "R")
) -> Comparison:
    """Compare the initial states of two systems inside their disjoint union."""
    if a.initial is None or b.initial is None:
        raise ShapeError("both systems need an initial state")
    union = coproduct(a, b, tags)
    pair = ((tags[0], a.initial), (tags[1], b.initial))
    verdict = greatest_strong_bisim(union) if strong else greatest_weak_bisim(union, cfg, delta)
    same = verdict.partition.same_block(*pair)
    witness = None
    if not same:
        witness = _pair_witness(union, verdict.partition, pair, cfg, strong, delta)
        verdict.witness = witness
    return Comparison(same, verdict, union, pair, witness)


def _pair_witness(alpha, final: Partition, pair, cfg, strong=False, delta=None) -> Witness | None:
    """Replay refinement until the pair is split and report the differing cell."""
    part = initial_partition(alpha)
    if not part.same_block(*pair):
        return Witness(pair, "observation", (), tuple((alpha.observations or {}).get(s, "") for s in pair))
    while True:
        if strong:
            rows, d = strong_rows(alpha, part), None
        else:
            res = weak_rows_result(alpha, part, cfg)
            rows, d = res.value, _effective_delta(cfg, alpha.semiring.kind, delta, res)
        w = _differing_cell(rows, pair[0], pair[1], alpha.algebra.labels)
        nxt = split_by_rows(rows, part, d)
        if not nxt.same_block(*pair) or len(nxt) == len(part):
            return w
        part = nxt


def minimize(alpha: System, cfg: SolveConfig | None = None, verdict: BisimVerdict | None = None) -> System:
    """The system ``beta`` on blocks with ``beta([x]) = alpha*_p(x)``."""
    verdict = verdict or greatest_weak_bisim(alpha, cfg)
    if verdict.status != "exact":
        raise ValueError("refusing to minimise on an approximate verdict")
    part = verdict.partition
    rows = verdict.rows if verdict.rows is not None else weak_rows(alpha, part, cfg)
    weights = {}
    for blk in part.blocks:
        rep = blk[0]
        for (a, y), w in rows.row(rep).items():
            weights[blk, a, y] = w
    initial = part.block_of[alpha.initial] if getattr(alpha, "initial", None) is not None else None
    obs = None
    if getattr(alpha, "observations", None):
        obs = {blk: alpha.observations[blk[0]] for blk in part.blocks if blk[0] in alpha.observations}
    return System(part.blocks, part.blocks, alpha.semiring, alpha.algebra, weights, initial, obs)


# ---------------------------------------------------------------------------
# oracles


def set_partitions(items: Sequence):
    """All set partitions of ``items`` (restricted growth strings)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        yield [[first]] + smaller
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1 :]


@dataclass
class OracleReport:
    coarsest: Partition
    accepted: list
    closed: bool  # every accepted partition refines the coarsest one


def brute_force_oracle(alpha: System, cfg: SolveConfig | None = None, delta=None, seed=None) -> OracleReport:
    """Enumerate every partition, keep the weak bisimulations, return the coarsest."""
    n = len(alpha.source)
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force oracle supports at most {BRUTE_FORCE_LIMIT} states, got {n}")
    seed = initial_partition(alpha, seed)
    accepted = []
    for blocks in set_partitions(alpha.source):
        part = Partition.from_blocks(alpha.source, blocks)
        if part.refines(seed) and is_weak_bisim(alpha, part, cfg, delta):
            accepted.append(part)
    coarsest = min(accepted, key=len)
    closed = all(p.refines(coarsest) for p in accepted)
    return OracleReport(coarsest, accepted, closed)


def milner_closure_oracle(alpha: System) -> System:
    """Close a boolean tau-absorption LTS under the double-arrow rules by brute force.

    Rules: x =tau=> x; tau;tau, a;tau and tau;a compose.  Applied naively until
    no new transition appears.
    """
    if alpha.semiring.kind != "boolean" or alpha.algebra.name != "tau":
        raise ValueError("milner_closure_oracle needs a boolean tau-absorption system")
    trans = {(x, a, y) for (x, a, y), w in alpha.weights.items() if w}
    trans |= {(x, TAU, x) for x in alpha.source}
    while True:
        new = set()
        for (x, a, y), (y2, b, z) in itertools.product(trans, repeat=2):
            if y != y2:
                continue
            if a == TAU:
                new.add((x, b, z))
            elif b == TAU:
                new.add((x, a, z))
        if new <= trans:
            break
        trans |= new
    return alpha.with_weights({t: True for t in trans})
