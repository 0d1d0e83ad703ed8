import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from helpers import bh_system, coarsest_by_enumeration, random_system
from weakbisim.bisim import (
    Partition,
    brute_force_oracle,
    compare,
    greatest_strong_bisim,
    greatest_weak_bisim,
    is_strong_bisim,
    is_weak_bisim,
    milner_closure_oracle,
    minimize,
    partition_witness,
    split_by_rows,
    weak_rows,
)
from weakbisim.saturation import SolveConfig, saturate
from weakbisim.semiring import KINDS, make_semiring
from weakbisim.wlts import TAU, ShapeError, build_system, make_tau_absorption

BOOL = make_semiring("boolean")
ALG = make_tau_absorption(["a"])
seeds = st.integers(0, 10**6)


def bool_system(states, trans, labels=("a",), initial=None):
    return build_system(BOOL, make_tau_absorption(labels), states, [(*t, True) for t in trans], initial=initial)


def milner_example():
    return bool_system(
        ["x", "x1", "y", "y1", "y2"],
        [("x", "a", "x1"), ("y", TAU, "y1"), ("y1", "a", "y2")],
    )


# Partition

def test_partition_canonical_and_validated():
    p = Partition.from_blocks("abc", [["c", "a"], ["b"]])
    assert p.blocks == (("a", "c"), ("b",))
    assert p.as_lists() == [["a", "c"], ["b"]]
    with pytest.raises(ValueError):
        Partition.from_blocks("abc", [["a"], ["b"]])
    with pytest.raises(ValueError):
        Partition.from_blocks("abc", [["a", "b"], ["b", "c"]])
    assert Partition.discrete("ab").refines(Partition.single("ab"))
    assert not Partition.single("ab").refines(Partition.discrete("ab"))


# weak rows

@pytest.mark.parametrize("kind", KINDS)
def test_identity_partition_rows_equal_saturation(kind):
    rng = random.Random(kind)
    for _ in range(10):
        s = random_system(rng, kind, rng.randint(1, 4))
        rows = weak_rows(s, Partition.discrete(s.states))
        sat = saturate(s).value
        assert {(x, a, y[0]): w for (x, a, y), w in rows.weights.items()} == sat.weights


def test_boolean_bh_shape_rows():
    s = bool_system(["x", "y", "z"], [("x", TAU, "z"), ("x", TAU, "x"), ("y", TAU, "z"), ("y", TAU, "y")])
    p = Partition.from_blocks(s.states, [["x", "y"], ["z"]])
    rows = weak_rows(s, p)
    assert rows["x", TAU, ("z",)] is True


def test_arith_bh_rows():
    s = bh_system()
    p = Partition.from_blocks(s.states, [["x", "y"], ["z"]])
    rows = weak_rows(s, p, SolveConfig("policy"))
    assert rows["x", TAU, ("z",)] == 1 == rows["y", TAU, ("z",)]


# checking partitions

@pytest.mark.parametrize("kind", KINDS)
def test_identity_always_accepted(kind):
    rng = random.Random(kind)
    for _ in range(20):
        s = random_system(rng, kind, rng.randint(1, 5))
        assert is_weak_bisim(s, Partition.discrete(s.states))
        assert is_strong_bisim(s, Partition.discrete(s.states))


def test_bh_partition_checks():
    s = bh_system()
    assert is_weak_bisim(s, Partition.from_blocks(s.states, [["x", "y"], ["z"]]), SolveConfig("policy"))
    bad = Partition.from_blocks(s.states, [["x", "z"], ["y"]])
    assert not is_weak_bisim(s, bad)
    w = partition_witness(s, bad)
    assert w.states == ("x", "z") and w.label == "observation"


def test_bh_rows_alone_accept_xz_block():
    # without the halting observation, {x,z} and {y} have equal rows:
    # both x and z reach [x,z] with weight 1 and never reach [y]
    s = bh_system(observations=False)
    part = Partition.from_blocks(s.states, [["x", "z"], ["y"]])
    rows = weak_rows(s, part)
    assert rows.row("x") == rows.row("z") == {(TAU, ("x", "z")): 1}
    assert is_weak_bisim(s, part)


def test_rows_witness_for_unstable_partition():
    s = bool_system(["p", "q"], [("p", "a", "p")])
    w = partition_witness(s, Partition.single(s.states))
    assert w.states == ("p", "q") and w.label == "a" and w.weights == (True, False)


# greatest bisimulations

def test_bh_greatest_weak():
    v = greatest_weak_bisim(bh_system(), SolveConfig("policy"))
    assert v.partition.as_lists() == [["x", "y"], ["z"]]
    assert v.status == "exact"


def test_bh_without_observations_collapses():
    v = greatest_weak_bisim(bh_system(observations=False))
    assert v.partition.as_lists() == [["x", "y", "z"]]


def test_bh_iterate_mode_is_approximate():
    v = greatest_weak_bisim(bh_system(), SolveConfig("iterate", F(1, 10**12)), delta=F(1, 10**9))
    assert v.partition.as_lists() == [["x", "y"], ["z"]]
    assert v.status == "approximate" and v.delta == F(1, 10**9)


def test_capped_solver_marks_approximate():
    v = greatest_weak_bisim(bh_system(), SolveConfig("iterate", F(1, 10**12), cap=5), delta=F(1, 2))
    assert v.status == "approximate"
    assert "capped" in v.solver_statuses.values()


def test_milner_example():
    s = milner_example()
    v = greatest_weak_bisim(s)
    assert v.partition.same_block("x", "y")
    assert v.partition == brute_force_oracle(s).coarsest


def test_no_transitions_single_block():
    s = bool_system(["p", "q", "r"], [])
    assert len(greatest_weak_bisim(s).partition) == 1
    assert len(greatest_strong_bisim(s).partition) == 1


def test_bh_strong_is_identity():
    assert greatest_strong_bisim(bh_system(observations=False)).partition.as_lists() == [["x"], ["y"], ["z"]]


@pytest.mark.parametrize("kind", KINDS)
def test_tau_free_strong_equals_weak(kind):
    rng = random.Random(kind)
    for _ in range(15):
        s = random_system(rng, kind, rng.randint(1, 5), tau_bias=0.0)
        assert greatest_strong_bisim(s).partition == greatest_weak_bisim(s).partition


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_strong_implies_weak(kind, seed):
    rng = random.Random(seed)
    s = random_system(rng, kind, rng.randint(1, 5))
    assert is_weak_bisim(s, greatest_strong_bisim(s).partition)


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=25, deadline=None)
@given(seed=seeds)
def test_result_is_stable(kind, seed):
    rng = random.Random(seed)
    s = random_system(rng, kind, rng.randint(1, 5))
    v = greatest_weak_bisim(s)
    assert split_by_rows(weak_rows(s, v.partition), v.partition) == v.partition
    assert is_weak_bisim(s, v.partition)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_weak_is_strong_on_double_arrow_system(seed):
    rng = random.Random(seed)
    s = random_system(rng, "boolean", rng.randint(1, 5), ("a", "b"))
    assert greatest_weak_bisim(s).partition == greatest_strong_bisim(milner_closure_oracle(s)).partition


@pytest.mark.parametrize("kind", ("boolean", "nat_inf"))
def test_agrees_with_independent_enumeration(kind):
    rng = random.Random(kind + "enum")
    for _ in range(25):
        s = random_system(rng, kind, rng.randint(1, 4))
        best = coarsest_by_enumeration(s.states, lambda p: is_weak_bisim(s, p))
        assert greatest_weak_bisim(s).partition == best


def test_brute_force_oracle_examples():
    s = bh_system()
    report = brute_force_oracle(s)
    assert report.coarsest.as_lists() == [["x", "y"], ["z"]]
    assert any(p == Partition.discrete(s.states) for p in report.accepted)
    assert report.closed
    rng = random.Random(5)
    for _ in range(20):
        r = random_system(rng, "boolean", 5)
        assert brute_force_oracle(r).coarsest == greatest_weak_bisim(r).partition


# compare

def test_compare_reflexive_and_symmetric():
    rng = random.Random(9)
    for kind in KINDS:
        for _ in range(5):
            a = random_system(rng, kind, rng.randint(1, 4))
            b = random_system(rng, kind, rng.randint(1, 4))
            assert compare(a, a).bisimilar
            assert compare(a, b).bisimilar == compare(b, a).bisimilar


def test_compare_bh_components():
    sr, alg = make_semiring("arith"), make_tau_absorption([])
    obs = {"z": "halt"}
    xs = build_system(sr, alg, ["x", "z"], [("x", TAU, "z", F(3, 4)), ("x", TAU, "x", F(1, 4))], "x", obs)
    ys = build_system(sr, alg, ["y", "z"], [("y", TAU, "z", F(1, 4)), ("y", TAU, "y", F(3, 4))], "y", obs)
    assert compare(xs, ys).bisimilar
    assert not compare(xs, ys, strong=True).bisimilar


def test_compare_loops_gives_witness():
    alg = ("a", "b")
    a = bool_system(["p"], [("p", "a", "p")], alg, "p")
    b = bool_system(["q"], [("q", "b", "q")], alg, "q")
    c = compare(a, b)
    assert not c.bisimilar
    assert c.witness.label == "a" and c.witness.weights == (True, False)


def test_compare_needs_initial_states():
    a = bool_system(["p"], [])
    with pytest.raises(ShapeError):
        compare(a, a)


# minimise

def test_minimize_bh():
    m = minimize(bh_system(), SolveConfig("policy"))
    xy, z = ("x", "y"), ("z",)
    assert m.states == (xy, z)
    assert m.weights == {(xy, TAU, xy): 1, (xy, TAU, z): 1, (z, TAU, z): 1}
    assert m.initial == xy


def test_minimize_refuses_approximate():
    s = bh_system()
    v = greatest_weak_bisim(s, SolveConfig("iterate", F(1, 10**12)))
    with pytest.raises(ValueError):
        minimize(s, verdict=v)


def test_minimize_already_minimal():
    s = bool_system(["p", "q"], [("p", "a", "q")])
    m = minimize(s)
    assert len(m.states) == 2


def test_minimize_tau_chain_matches_oracle():
    s = bool_system(["x", "y", "z"], [("x", TAU, "y"), ("y", TAU, "z")])
    assert len(minimize(s).states) == len(brute_force_oracle(s).coarsest)


# rule closure oracle

def test_milner_closure_rules():
    s = bool_system(["x", "y", "z"], [("x", TAU, "y"), ("y", "a", "z")])
    c = milner_closure_oracle(s)
    assert c["x", "a", "z"] is True
    assert all(c[x, TAU, x] for x in s.states)
