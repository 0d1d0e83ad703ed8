"""Shared builders and independent oracles for the test-suite."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction as F

import networkx as nx

from weakbisim.bisim import Partition
from weakbisim.semiring import INF, make_semiring
from weakbisim.wlts import TAU, build_system, make_tau_absorption

ACCEPTANCE_LINES: list[str] = []

WEIGHTS = {
    "boolean": [True],
    "arith": [F(1, 4), F(1, 2), F(3, 4), F(1), F(2)],
    "nat_inf": [1, 1, 2, 3],
    "tropical": [F(0), F(1), F(2), F(5, 2), F(7)],
}


def bh_system(p=F(1, 4), q=F(3, 4), observations=True):
    """x reaches z with q per step, y with p; the remainder loops."""
    sr = make_semiring("arith")
    trans = [("x", TAU, "z", q), ("x", TAU, "x", 1 - q), ("y", TAU, "z", p), ("y", TAU, "y", 1 - p)]
    obs = {"z": "halt"} if observations else None
    return build_system(sr, make_tau_absorption([]), ["x", "y", "z"], trans, initial="x", observations=obs)


def random_system(rng: random.Random, kind: str, n: int, labels=("a", "b"), max_out=3, tau_bias=0.5):
    sr = make_semiring(kind)
    states = [f"s{i}" for i in range(n)]
    trans = []
    for x in states:
        for _ in range(rng.randint(0, max_out)):
            a = TAU if (not labels or rng.random() < tau_bias) else rng.choice(labels)
            trans.append((x, a, rng.choice(states), rng.choice(WEIGHTS[kind])))
    return build_system(sr, make_tau_absorption(labels), states, trans, initial=states[0])


def random_arrow_table(rng, kind, source, target, labels, density=0.4):
    out = {}
    for x in source:
        for a in (TAU,) + tuple(labels):
            for y in target:
                if rng.random() < density:
                    out[x, a, y] = rng.choice(WEIGHTS[kind])
    return out


# ---------------------------------------------------------------------------
# oracles written independently of the package's solvers


def floyd_warshall(states, tau_edges):
    """All-pairs shortest paths (min, +) with d(x,x) = 0."""
    d = {(x, y): INF for x in states for y in states}
    for x in states:
        d[x, x] = F(0)
    for (x, y), w in tau_edges.items():
        d[x, y] = min(d[x, y], w)
    for k in states:
        for i in states:
            for j in states:
                if d[i, k] + d[k, j] < d[i, j]:
                    d[i, j] = d[i, k] + d[k, j]
    return d


def weak_lts(system):
    """Milner's weak transition relation via graph reachability.

    x =tau=> y iff y is tau*-reachable; x =a=> y iff x tau* . a . tau* y.
    """
    g = nx.DiGraph()
    g.add_nodes_from(system.source)
    g.add_edges_from((x, y) for (x, a, y), w in system.weights.items() if a == TAU and w)
    reach = {x: nx.descendants(g, x) | {x} for x in system.source}
    out = {(x, TAU, y) for x in system.source for y in reach[x]}
    for (x1, a, y1), w in system.weights.items():
        if a == TAU or not w:
            continue
        for x in system.source:
            if x1 in reach[x]:
                out |= {(x, a, y) for y in reach[y1]}
    return out


def count_tau_paths(states, edges, src, dst):
    """Number of tau paths src -> dst in a DAG (edges with multiplicity)."""
    g = nx.MultiDiGraph()
    g.add_nodes_from(states)
    for (x, y), m in edges.items():
        for _ in range(m):
            g.add_edge(x, y)
    return sum(1 for _ in nx.all_simple_edge_paths(g, src, dst)) if src != dst else 1


def coarsest_by_enumeration(states, accept):
    """Among all set partitions accepted by ``accept``, the one with fewest blocks."""
    def parts(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for smaller in parts(rest):
            yield [[first]] + smaller
            for i in range(len(smaller)):
                yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]

    best = None
    for blocks in parts(list(states)):
        p = Partition.from_blocks(states, blocks)
        if accept(p) and (best is None or len(p) < len(best)):
            best = p
    return best


def pairs(seq):
    return itertools.combinations(seq, 2)
