"""Positively ordered, omega-continuous semirings used as transition weights.

Four carriers are shipped:

* ``boolean``  -- ({False, True}, or, and), join = or
* ``arith``    -- ([0, inf], +, *), numeric order, join = max
* ``nat_inf``  -- (N u {inf}, +, *), numeric order, join = max
* ``tropical`` -- ([0, inf], min, +), zero = inf, one = 0; the positive order is
  the reversed numeric order, so join = min and inf is the bottom

Numeric weights are :class:`fractions.Fraction` values or :data:`INF`.  No
floating point arithmetic happens inside the algebra; ``INF`` is only a
sentinel.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Any, Callable, Iterable, Sequence

INF = math.inf

KINDS = ("boolean", "arith", "nat_inf", "tropical")

Weight = Any  # bool | Fraction | INF


class WeightError(ValueError):
    """A literal or value is not a weight of the requested semiring."""


def _is_num(w) -> bool:
    return (isinstance(w, (int, Fraction)) and not isinstance(w, bool)) or w == INF


def _arith_mul(a, b):
    # 0 * inf = 0: the zero annihilates
    if a == 0 or b == 0:
        return Fraction(0)
    return a * b


def _trop_add(a, b):
    return a if a <= b else b


def _trop_mul(a, b):
    return a + b


@dataclass(frozen=True, eq=False)
class SemiringSpec:
    kind: str
    add: Callable[[Weight, Weight], Weight]
    mul: Callable[[Weight, Weight], Weight]
    zero: Weight
    one: Weight
    leq: Callable[[Weight, Weight], bool]
    join: Callable[[Weight, Weight], Weight]
    is_weight: Callable[[Weight], bool] = field(default=lambda w: True)

    def sum(self, values: Iterable[Weight]) -> Weight:
        return reduce(self.add, values, self.zero)

    def join_all(self, values: Iterable[Weight]) -> Weight:
        return reduce(self.join, values, self.zero)

    def is_zero(self, w: Weight) -> bool:
        return w == self.zero

    def check(self, w: Weight) -> Weight:
        if not self.is_weight(w):
            raise WeightError(f"{w!r} is not a {self.kind} weight")
        return w

    @property
    def idempotent(self) -> bool:
        """Whether addition coincides with the join (LD holds in the Kleisli category)."""
        return self.kind in ("boolean", "tropical")

    def parse(self, literal) -> Weight:
        return parse_weight(self, literal)

    def format(self, w: Weight):
        return format_weight(self, w)

    def __repr__(self):
        return f"SemiringSpec({self.kind!r})"


def _num_weight(w) -> bool:
    return _is_num(w) and w >= 0


def _nat_weight(w) -> bool:
    return _num_weight(w) and (w == INF or Fraction(w).denominator == 1)


@lru_cache(maxsize=None)
def make_semiring(kind: str) -> SemiringSpec:
    """Return the shared, immutable spec for one of :data:`KINDS`."""
    if kind == "boolean":
        return SemiringSpec(
            kind="boolean",
            add=lambda a, b: a or b,
            mul=lambda a, b: a and b,
            zero=False,
            one=True,
            leq=lambda a, b: (not a) or b,
            join=lambda a, b: a or b,
            is_weight=lambda w: isinstance(w, bool),
        )
    if kind in ("arith", "nat_inf"):
        return SemiringSpec(
            kind=kind,
            add=lambda a, b: a + b,
            mul=_arith_mul,
            zero=Fraction(0),
            one=Fraction(1),
            leq=lambda a, b: a <= b,
            join=max,
            is_weight=_num_weight if kind == "arith" else _nat_weight,
        )
    if kind == "tropical":
        return SemiringSpec(
            kind="tropical",
            add=_trop_add,
            mul=_trop_mul,
            zero=INF,
            one=Fraction(0),
            leq=lambda a, b: b <= a,
            join=_trop_add,
            is_weight=_num_weight,
        )
    raise ValueError(f"unknown semiring kind {kind!r}; expected one of {KINDS}")


def parse_weight(spec: SemiringSpec, literal) -> Weight:
    """Parse ``"3/4"``, ``"2"``, ``"inf"``, ``true``/``false`` or a JSON int."""
    if spec.kind == "boolean":
        if isinstance(literal, bool):
            return literal
        if literal in ("true", "tt", "1", 1):
            return True
        if literal in ("false", "ff", "0", 0):
            return False
        raise WeightError(f"bad boolean weight {literal!r}")
    if isinstance(literal, bool):
        raise WeightError(f"boolean literal {literal!r} in a {spec.kind} system")
    if isinstance(literal, str) and literal.strip().lower() in ("inf", "+inf", "infinity", "∞"):
        value = INF
    elif isinstance(literal, (int, str)):
        try:
            value = Fraction(literal)
        except (ValueError, ZeroDivisionError) as exc:
            raise WeightError(f"bad weight literal {literal!r}") from exc
    else:
        raise WeightError(f"weights must be strings or integers, got {literal!r}")
    return spec.check(value)


def format_weight(spec: SemiringSpec, w: Weight):
    if spec.kind == "boolean":
        return bool(w)
    if w == INF:
        return "inf"
    return str(Fraction(w))


# ---------------------------------------------------------------------------
# law checking


@dataclass
class LawResult:
    name: str
    passed: bool
    witness: tuple | None = None
    checked: int = 0


@dataclass
class LawReport:
    subject: str
    laws: list[LawResult]

    @property
    def ok(self) -> bool:
        return all(law.passed for law in self.laws)

    def __getitem__(self, name: str) -> LawResult:
        for law in self.laws:
            if law.name == name:
                return law
        raise KeyError(name)

    def failures(self) -> list[LawResult]:
        return [law for law in self.laws if not law.passed]

    def as_dict(self, fmt=str) -> dict:
        return {
            "subject": self.subject,
            "ok": self.ok,
            "laws": [
                {
                    "name": law.name,
                    "passed": law.passed,
                    "checked": law.checked,
                    "witness": None if law.witness is None else [fmt(w) for w in law.witness],
                }
                for law in self.laws
            ],
        }


def _check(name, cases, predicate) -> LawResult:
    n = 0
    for case in cases:
        n += 1
        if not predicate(*case):
            return LawResult(name, False, tuple(case), n)
    return LawResult(name, True, None, n)


def close_samples(spec: SemiringSpec, samples: Sequence[Weight], rounds: int = 1) -> list[Weight]:
    """Extend ``samples`` with ``rounds`` rounds of pairwise add/mul results."""
    seen = list(dict.fromkeys(samples))
    for _ in range(rounds):
        new = [op(a, b) for a in seen for b in seen for op in (spec.add, spec.mul)]
        seen = list(dict.fromkeys(seen + new))
    return seen


def ascending_chains(spec: SemiringSpec, samples: Sequence[Weight]) -> list[list[Weight]]:
    """Maximal ascending chain through the samples (all shipped orders are total)."""
    chain: list[Weight] = []
    for w in samples:
        pos = 0
        while pos < len(chain) and spec.leq(chain[pos], w):
            pos += 1
        if pos and chain[pos - 1] == w:
            continue
        chain.insert(pos, w)
    ok = all(spec.leq(a, b) for a, b in zip(chain, chain[1:]))
    return [chain] if ok and len(chain) > 1 else []


def validate_semiring(
    spec: SemiringSpec,
    samples: Sequence[Weight],
    chains: Sequence[Sequence[Weight]] | None = None,
) -> LawReport:
    """Check the semiring and order-enrichment laws exhaustively on ``samples``.

    Failures are reported with the first witness found, never raised.
    ``chains`` are finite ascending chains; the continuity law checks that
    multiplying or adding a sample commutes with the join of the chain.
    """
    if not samples:
        raise ValueError("validate_semiring needs at least one sample")
    s = list(samples)
    add, mul, leq, join = spec.add, spec.mul, spec.leq, spec.join
    zero, one = spec.zero, spec.one
    pairs = list(itertools.product(s, repeat=2))
    triples = list(itertools.product(s, repeat=3))
    if chains is None:
        chains = ascending_chains(spec, s)

    def lub(a, b):
        j = join(a, b)
        if not (leq(a, j) and leq(b, j)):
            return False
        return all(leq(j, u) for u in s if leq(a, u) and leq(b, u))

    def continuous(a, chain):
        top = reduce(join, chain)
        return (
            reduce(join, [mul(a, c) for c in chain]) == mul(a, top)
            and reduce(join, [mul(c, a) for c in chain]) == mul(top, a)
            and reduce(join, [add(a, c) for c in chain]) == add(a, top)
        )

    laws = [
        _check("add_associative", triples, lambda a, b, c: add(add(a, b), c) == add(a, add(b, c))),
        _check("add_commutative", pairs, lambda a, b: add(a, b) == add(b, a)),
        _check("mul_associative", triples, lambda a, b, c: mul(mul(a, b), c) == mul(a, mul(b, c))),
        _check(
            "distributive",
            triples,
            lambda a, b, c: mul(a, add(b, c)) == add(mul(a, b), mul(a, c))
            and mul(add(b, c), a) == add(mul(b, a), mul(c, a)),
        ),
        _check("units", [(a,) for a in s], lambda a: add(a, zero) == a and mul(a, one) == a == mul(one, a)),
        _check("zero_annihilates", [(a,) for a in s], lambda a: mul(a, zero) == zero == mul(zero, a)),
        _check("zero_is_bottom", [(a,) for a in s], lambda a: leq(zero, a)),
        _check("zerosumfree", pairs, lambda a, b: add(a, b) != zero or (a == zero and b == zero)),
        _check(
            "add_monotone",
            triples,
            lambda a, b, c: not leq(a, b) or (leq(add(a, c), add(b, c)) and leq(add(c, a), add(c, b))),
        ),
        _check(
            "mul_monotone",
            triples,
            lambda a, b, c: not leq(a, b) or (leq(mul(a, c), mul(b, c)) and leq(mul(c, a), mul(c, b))),
        ),
        _check("join_is_lub", pairs, lub),
        _check("chain_continuity", [(a, list(ch)) for a in s for ch in chains], continuous),
    ]
    return LawReport(spec.kind, laws)


def find_add_join_witness(spec: SemiringSpec, samples: Sequence[Weight]):
    """Search for (a, b, c, d) with (a v b) + (c v d) != (a + c) v (b + d).

    This is the scalar shape of a left-distributivity failure in the Kleisli
    category.  Returns ``None`` when the law holds on all sampled quadruples.
    """
    add, join = spec.add, spec.join
    for a, b, c, d in itertools.product(samples, repeat=4):
        if add(join(a, b), join(c, d)) != join(add(a, c), add(b, d)):
            return (a, b, c, d)
    return None
