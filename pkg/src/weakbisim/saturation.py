"""Least solutions of ``x = f v x . alpha`` and the saturation ``alpha*``.

``ps_solve(alpha, f)`` returns the least fixed point of ``F(x) = f v (x . alpha)``
where ``x . alpha`` is "first alpha, then x".  With ``f`` the unit this is the
saturated (double arrow) system; with ``f`` a quotient map it gives the rows
used to decide weak bisimilarity.

Solving strategies:

closure  -- Kleene iteration until two iterates are identical.  Exact and
            finite for boolean and tropical weights.
policy   -- exact least fixed point of the max-affine system for ``arith``
            (and ``nat_inf``): SCC decomposition, spectral test per SCC,
            policy iteration with exact Gaussian elimination.
nat      -- Kleene iteration over N u {inf} with divergence promotion.
iterate  -- Kleene iteration stopped at an entrywise residual <= epsilon.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from . import linalg
from .semiring import INF
from .wlts import KleisliMap, ShapeError, compose, join, unit

log = logging.getLogger(__name__)

MODES = ("auto", "closure", "policy", "nat", "iterate")


@dataclass(frozen=True)
class SolveConfig:
    mode: str = "auto"
    epsilon: Fraction = Fraction(1, 10**12)
    cap: int = 10000
    overflow: Fraction = Fraction(10**12)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.mode == "iterate" and self.epsilon == 0:
            raise ValueError("iterate mode needs epsilon > 0")
        if self.cap < 1:
            raise ValueError("cap must be positive")


@dataclass
class SaturationResult:
    value: KleisliMap
    status: str  # exact | converged | capped
    iterations: int
    infinite_cells: frozenset = field(default_factory=frozenset)
    residual: Fraction | None = None
    mode: str = ""

    @property
    def exact(self) -> bool:
        return self.status == "exact"


class PolicyCycle(RuntimeError):
    pass


def f_step(alpha: KleisliMap, f: KleisliMap, x: KleisliMap) -> KleisliMap:
    """``F(x) = f v x . alpha``."""
    return join(f, compose(x, alpha))


def g_step(alpha: KleisliMap, x: KleisliMap) -> KleisliMap:
    """``G(x) = x v x . alpha``."""
    return join(x, compose(x, alpha))


def kleene(alpha: KleisliMap, f: KleisliMap, depth: int, step: str = "F") -> list[KleisliMap]:
    """The iterates ``F^0(f) .. F^depth(f)`` (or with ``G``)."""
    out = [f]
    x = f
    for _ in range(depth):
        x = f_step(alpha, f, x) if step == "F" else g_step(alpha, x)
        out.append(x)
    return out


def _check_shapes(alpha: KleisliMap, f: KleisliMap):
    if alpha.source != alpha.target:
        raise ShapeError("alpha must be an endo-arrow")
    if f.source != alpha.source:
        raise ShapeError("f.source must equal the states of alpha")
    if f.semiring.kind != alpha.semiring.kind or f.algebra != alpha.algebra:
        raise ShapeError("alpha and f use different semirings or label algebras")


def resolve_mode(kind: str, mode: str) -> str:
    if mode != "auto":
        return mode
    return {"boolean": "closure", "tropical": "closure", "nat_inf": "nat", "arith": "policy"}[kind]


def ps_solve(alpha: KleisliMap, f: KleisliMap, cfg: SolveConfig | None = None) -> SaturationResult:
    cfg = cfg or SolveConfig()
    _check_shapes(alpha, f)
    kind = alpha.semiring.kind
    mode = resolve_mode(kind, cfg.mode)
    if mode == "closure":
        return closure_solve(alpha, f, cfg.cap)
    if mode == "nat":
        if kind != "nat_inf":
            raise ValueError("nat mode needs the nat_inf semiring")
        return nat_inf_solve(alpha, f)
    if mode == "policy":
        try:
            return policy_solve(alpha, f)
        except PolicyCycle:
            log.warning("policy iteration cycled; falling back to iterate mode")
            eps = cfg.epsilon or Fraction(1, 10**12)
            return iterate_solve(alpha, f, eps, cfg.cap, cfg.overflow)
    return iterate_solve(alpha, f, cfg.epsilon, cfg.cap, cfg.overflow)


def saturate(alpha: KleisliMap, cfg: SolveConfig | None = None) -> SaturationResult:
    """``alpha*`` as the least solution of ``x = id v x . alpha``."""
    return ps_solve(alpha, unit(alpha.source, alpha.semiring, alpha.algebra), cfg)


# ---------------------------------------------------------------------------
# Kleene based strategies


def closure_solve(alpha: KleisliMap, f: KleisliMap, cap: int = 10000) -> SaturationResult:
    x = f
    for n in range(1, cap + 1):
        nxt = f_step(alpha, f, x)
        if nxt == x:
            return SaturationResult(nxt, "exact", n, mode="closure")
        x = nxt
    return SaturationResult(x, "capped", cap, mode="closure")


def _delta(kind, old, new):
    if old == new:
        return Fraction(0)
    if kind == "boolean":
        return Fraction(1)
    if new == INF or old == INF:
        return INF
    return abs(new - old)


def iterate_solve(alpha, f, epsilon, cap=10000, overflow=Fraction(10**12)) -> SaturationResult:
    sr = alpha.semiring
    numeric_up = sr.kind in ("arith", "nat_inf")
    promoted: set = set()
    x = f
    for n in range(1, cap + 1):
        nxt = f_step(alpha, f, x)
        if numeric_up:
            big = {c for c, w in nxt.weights.items() if w != INF and w > overflow}
            if big:
                promoted |= big
                w = dict(nxt.weights)
                w.update({c: INF for c in big})
                nxt = nxt.with_weights(w)
        cells = set(x.weights) | set(nxt.weights)
        residual = max((_delta(sr.kind, x[c], nxt[c]) for c in cells), default=Fraction(0))
        x = nxt
        if residual == 0 and not promoted:
            return SaturationResult(x, "exact", n, mode="iterate", residual=Fraction(0))
        if residual <= epsilon:
            return SaturationResult(x, "converged", n, frozenset(promoted), residual, mode="iterate")
    return SaturationResult(x, "capped", cap, frozenset(promoted), residual, mode="iterate")


def nat_inf_solve(alpha: KleisliMap, f: KleisliMap) -> SaturationResult:
    """Kleene iteration over N u {inf}, promoting cells that keep growing to inf.

    After ``|X| * |A_tau| * |Y|`` rounds every cell with a finite least
    fixed point has stabilised, so cells that still increase diverge.
    """
    _check_shapes(alpha, f)
    if alpha.semiring.kind != "nat_inf":
        raise ValueError("nat_inf_solve needs the nat_inf semiring")
    bound = max(1, len(f.source) * len(f.algebra.labels) * len(f.target))
    x = f
    infinite: set = set()
    total = 0
    for _ in range(bound + 1):
        prev = x
        for _ in range(bound):
            total += 1
            prev, x = x, f_step(alpha, f, x)
            if x == prev:
                return SaturationResult(x, "exact", total, frozenset(infinite), mode="nat")
        growing = {c for c, w in x.weights.items() if w != prev[c]}
        infinite |= growing
        w = dict(x.weights)
        w.update({c: INF for c in growing})
        x = x.with_weights(w)
    raise AssertionError("divergence promotion did not stabilise")  # unreachable


# ---------------------------------------------------------------------------
# exact max-affine solver


def _lin_coefficients(alpha: KleisliMap):
    """coef[(x, c)][(z, b)] = sum of alpha(x)(a, z) over labels a with a.b = c."""
    alg, sr = alpha.algebra, alpha.semiring
    coef: dict = {(x, c): {} for x in alpha.source for c in alg.labels}
    for (x, a, z), w in alpha.cells():
        for b in alg.labels:
            c = alg.concat(a, b)
            if c is None:
                continue
            row = coef[x, c]
            row[z, b] = sr.add(row.get((z, b), sr.zero), w)
    return coef


def _mul(a, b):
    if a == 0 or b == 0:
        return Fraction(0)
    return a * b


def policy_solve(alpha: KleisliMap, f: KleisliMap) -> SaturationResult:
    """Exact least fixed point for ``arith``/``nat_inf`` weights.

    Each target state ``y`` gives an independent system over cells ``(x, c)``
    of the form ``v = max(base, A v)``.  Cells that can never become positive
    are dropped; the rest are solved one strongly connected component at a time
    (dependencies first).  Inside a cyclic component with external input ``e``:

    * spectral radius > 1, an infinite coefficient, or an infinite input: inf
    * spectral radius == 1: finite only when ``e == 0`` -- then the solution
      is the smallest multiple of the Perron vector dominating ``base``
    * spectral radius < 1: the fixed point is unique; policy iteration over
      the choice base/linear per cell, each policy evaluated exactly.
    """
    _check_shapes(alpha, f)
    if alpha.semiring.kind not in ("arith", "nat_inf"):
        raise ValueError("policy mode needs arith or nat_inf weights")
    coef = _lin_coefficients(alpha)
    cells = list(coef)
    rdep: dict = {u: [] for u in cells}
    for u, row in coef.items():
        for v, w in row.items():
            if w != 0:
                rdep[v].append(u)
    values: dict = {}
    infinite: set = set()
    rounds = 0
    for y in f.target:
        base = {(x, c): f[x, c, y] for x, c in cells}
        # cells that can become positive
        nz = {u for u in cells if base[u] != 0}
        todo = list(nz)
        while todo:
            v = todo.pop()
            for u in rdep[v]:
                if u not in nz:
                    nz.add(u)
                    todo.append(u)
        order = [u for u in cells if u in nz]
        graph = nx.DiGraph()
        graph.add_nodes_from(order)
        graph.add_edges_from((u, v) for u in order for v, w in coef[u].items() if w != 0 and v in nz)
        cond = nx.condensation(graph)
        val: dict = {}
        for comp in reversed(list(nx.topological_sort(cond))):
            members = [u for u in order if u in cond.nodes[comp]["members"]]
            rounds += _solve_component(members, coef, base, val)
        for (x, c), w in val.items():
            if w != 0:
                values[x, c, y] = w
                if w == INF:
                    infinite.add((x, c, y))
    value = KleisliMap(f.source, f.target, f.semiring, f.algebra, values)
    return SaturationResult(value, "exact", max(rounds, 1), frozenset(infinite), mode="policy")


def _solve_component(members, coef, base, val) -> int:
    inside = set(members)
    ext = {}
    for u in members:
        total = Fraction(0)
        for v, w in coef[u].items():
            if v not in inside and v in val:
                total = total + _mul(w, val[v])
        ext[u] = total
    cyclic = len(members) > 1 or coef[members[0]].get(members[0], 0) != 0
    if not cyclic:
        u = members[0]
        val[u] = max(base[u], ext[u])
        return 0
    internal = [[coef[u].get(v, Fraction(0)) for v in members] for u in members]
    if any(base[u] == INF or ext[u] == INF for u in members) or any(
        w == INF for row in internal for w in row
    ):
        rho = 1
    else:
        rho = linalg.spectral_class(internal)
    if rho > 0:
        for u in members:
            val[u] = INF
        return 0
    if rho == 0:
        if any(ext[u] != 0 for u in members):
            for u in members:
                val[u] = INF
            return 0
        n = len(members)
        vec = linalg.nullspace_vector(
            [[(1 if i == j else 0) - internal[i][j] for j in range(n)] for i in range(n)]
        )
        if vec[0] < 0:
            vec = [-v for v in vec]
        t = max(base[u] / vec[i] for i, u in enumerate(members))
        for i, u in enumerate(members):
            val[u] = t * vec[i]
        return 1
    return _policy_iteration(members, internal, base, ext, val)


def _policy_iteration(members, internal, base, ext, val) -> int:
    n = len(members)
    b = [base[u] for u in members]
    e = [ext[u] for u in members]
    use_lin = [False] * n
    seen = set()
    rounds = 0
    while True:
        rounds += 1
        key = tuple(use_lin)
        if key in seen:
            raise PolicyCycle(key)
        seen.add(key)
        mat = []
        rhs = []
        for i in range(n):
            if use_lin[i]:
                mat.append([(1 if i == j else 0) - internal[i][j] for j in range(n)])
                rhs.append(e[i])
            else:
                mat.append([1 if i == j else 0 for j in range(n)])
                rhs.append(b[i])
        v = linalg.solve(mat, rhs)
        switched = False
        for i in range(n):
            lin = sum((internal[i][j] * v[j] for j in range(n)), Fraction(0)) + e[i]
            if use_lin[i] and b[i] > lin:
                use_lin[i] = False
                switched = True
            elif not use_lin[i] and lin > b[i]:
                use_lin[i] = True
                switched = True
        if not switched:
            for i, u in enumerate(members):
                val[u] = v[i]
            return rounds
