import random
import time
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from helpers import bh_system
from weakbisim.bisim import Partition
from weakbisim.semiring import make_semiring
from weakbisim.segala import (
    ConvexArrow,
    cm_compose,
    cm_coproduct,
    cm_embed,
    cm_join,
    cm_leq,
    cm_ps_solve,
    cm_unit,
    from_weighted,
    in_hull,
    is_weak_convex_bisim,
    make_gen,
    reduce,
    reduce_gens,
    to_weighted,
    weak_convex_bisim,
)
from weakbisim.wlts import TAU, KleisliMap, compose, make_tau_absorption

ALG = make_tau_absorption(["a", "b"])
S = ("s", "t")
seeds = st.integers(0, 10**6)


def arrow(gens, src=S, tgt=S, alg=ALG):
    return ConvexArrow(src, tgt, alg, {x: tuple(make_gen(g) for g in gs) for x, gs in gens.items()})


def rand_arrow(rng, src=S, tgt=S, labels=(TAU, "a"), max_gens=2):
    gens = {}
    for x in src:
        gens[x] = []
        for _ in range(rng.randint(1, max_gens)):
            g = {}
            for _ in range(rng.randint(1, 2)):
                key = (rng.choice(labels), rng.choice(tgt))
                g[key] = g.get(key, 0) + F(rng.randint(1, 3), 4)
            gens[x].append(g)
    return arrow(gens, src, tgt)


def equal_sets(a, b):
    return cm_leq(a, b) and cm_leq(b, a)


def test_unit():
    u = cm_unit(S, ALG)
    assert u["s"] == (((( TAU, "s"), F(1)),),)


def test_unit_laws_examples():
    f = arrow({"s": [{("a", "t"): F(1, 2), (TAU, "s"): F(1, 2)}, {(TAU, "t"): 1}], "t": [{("b", "t"): 1}]})
    u = cm_unit(S, ALG)
    assert cm_compose(u, f) == f
    assert cm_compose(f, u) == f
    # cm_unit after F keeps both generators
    assert set(cm_compose(u, f)["s"]) == set(f["s"])


def test_annihilated_mass():
    f = arrow({"s": [{("a", "t"): 1}], "t": [{("b", "t"): 1}]})
    c = cm_compose(f, f)
    assert c["s"] == ((),)  # the zero generator: all mass annihilated


def test_reduce_drops_midpoint():
    g1, g2, mid = make_gen({(TAU, "s"): 1}), make_gen({(TAU, "t"): 1}), make_gen({(TAU, "s"): F(1, 2), (TAU, "t"): F(1, 2)})
    assert set(reduce_gens([g1, g2, mid])) == {g1, g2}
    assert in_hull(mid, [g1, g2])
    assert not in_hull(make_gen({(TAU, "s"): 2}), [g1, g2])


def test_join_and_leq():
    rng = random.Random(1)
    for _ in range(20):
        a, b, c = rand_arrow(rng), rand_arrow(rng), rand_arrow(rng)
        j = cm_join(a, b)
        assert cm_leq(a, j) and cm_leq(b, j)
        assert equal_sets(cm_join(a, a), a)
        assert equal_sets(j, cm_join(b, a))
        assert equal_sets(cm_join(j, c), cm_join(a, cm_join(b, c)))


def test_mutual_leq_iff_equal_reduced_hulls():
    rng = random.Random(2)
    for _ in range(40):
        a = rand_arrow(rng, max_gens=3)
        b = ConvexArrow(a.source, a.target, a.algebra, {x: reduce_gens(a[x]) for x in a.source})
        assert equal_sets(a, b) and a == b
        c = rand_arrow(rng, max_gens=3)
        assert equal_sets(a, c) == all(set(reduce(a)[x]) == set(reduce(c)[x]) for x in S)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_compose_associative(seed):
    rng = random.Random(seed)
    f, g, h = rand_arrow(rng), rand_arrow(rng), rand_arrow(rng)
    assert cm_compose(h, cm_compose(g, f)) == cm_compose(cm_compose(h, g), f)


@settings(max_examples=30, deadline=None)
@given(seed=seeds)
def test_embedding_matches_weighted_composition(seed):
    rng = random.Random(seed)
    sr = make_semiring("arith")
    states = ("s", "t", "u")

    def det():
        w = {}
        for x in states:
            for _ in range(rng.randint(0, 2)):
                key = (x, rng.choice([TAU, "a"]), rng.choice(states))
                w[key] = w.get(key, 0) + F(rng.randint(1, 4), 4)
        return KleisliMap(states, states, sr, ALG, w)

    f, g = det(), det()
    expected = compose(g, f)
    got = cm_compose(from_weighted(g), from_weighted(f))
    # states whose selections hit a generator-free row are dropped in CM
    for x in states:
        if all(from_weighted(g)[y] for (_, y) in f.row(x)):
            row = to_weighted(ConvexArrow(states, states, ALG, {s: got[s] if s == x else () for s in states}))
            assert row.row(x) == expected.row(x)


def test_from_weighted_round_trip():
    s = bh_system()
    c = from_weighted(s)
    assert c["z"] == ()
    assert to_weighted(c).weights == s.weights


def test_kleene_monotone_and_acyclic_depth():
    alpha = arrow(
        {"s": [{(TAU, "t"): 1}, {("a", "t"): 1}], "t": [{(TAU, "u"): F(1, 2), ("b", "u"): F(1, 2)}], "u": []},
        ("s", "t", "u"),
        ("s", "t", "u"),
    )
    res = cm_ps_solve(alpha, cm_unit(alpha.source, ALG))
    assert res.status == "exact"
    assert res.depth <= 2 + 1  # longest tau path plus one
    for lo, hi in zip(res.history, res.history[1:]):
        assert cm_leq(lo, hi)


def test_empty_alpha_unit():
    alpha = ConvexArrow(S, S, ALG, {})
    res = cm_ps_solve(alpha, cm_unit(S, ALG))
    assert res.value == cm_unit(S, ALG)
    assert res.depth == 1 and res.status == "exact"


def bh_convex(p=F(1, 4), q=F(1, 2)):
    return from_weighted(bh_system(p, q))


def test_bh_hull_endpoints():
    c = bh_convex()
    part = Partition.from_blocks(c.source, [["x", "y"], ["z"]])
    res = cm_ps_solve(c, cm_embed(part.quotient(), c.source, part.blocks, c.algebra), cap=4)
    z = ("z",)
    for k in range(1, 5):
        xk = max(dict(g).get((TAU, z), 0) for g in res.history[k]["x"])
        yk = max(dict(g).get((TAU, z), 0) for g in res.history[k]["y"])
        assert (xk, yk) == (1 - F(1, 2) ** k, 1 - F(3, 4) ** k)
    assert max(dict(g).get((TAU, z), 0) for g in res.history[2]["x"]) == F(3, 4)
    assert max(dict(g).get((TAU, z), 0) for g in res.history[2]["y"]) == F(7, 16)


def test_bh_identity_with_certificates():
    c = bh_convex()
    start = time.perf_counter()
    v = weak_convex_bisim(c, 64, observations={"z": "halt"})
    assert time.perf_counter() - start < 5
    assert v.answer == "distinguished"
    assert v.partition == Partition.discrete(c.source)
    cert = v.certificates["x", "y"]
    assert [d for d, _, _ in cert.depths] == list(range(1, 65))
    assert not cert.exact


def test_twin_branches_merge():
    alpha = arrow(
        {
            "s": [{("a", "u"): F(1, 2), ("b", "u"): F(1, 2)}],
            "t": [{("a", "u"): F(1, 2), ("b", "u"): F(1, 2)}],
            "u": [],
        },
        ("s", "t", "u"),
        ("s", "t", "u"),
    )
    v = weak_convex_bisim(alpha)
    assert v.answer == "bisimilar_exact"
    assert v.partition.as_lists() == [["s", "t"], ["u"]]
    assert is_weak_convex_bisim(alpha, v.partition) == (True, "exact")


def test_singleton():
    alpha = ConvexArrow(("s",), ("s",), ALG, {"s": (make_gen({("a", "s"): 1}),)})
    v = weak_convex_bisim(alpha)
    assert v.answer == "bisimilar_exact" and len(v.partition) == 1


def test_coproduct():
    a = arrow({"s": [{("a", "t"): 1}], "t": []})
    u = cm_coproduct(a, a, ("A", "B"))
    assert u.source == (("A", "s"), ("A", "t"), ("B", "s"), ("B", "t"))
    assert u[("B", "s")] == (((("a", ("B", "t")), F(1)),),)
    v = weak_convex_bisim(u)
    assert v.partition.same_block(("A", "s"), ("B", "s"))


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        arrow({"s": [{("a", "t"): -1}]})
