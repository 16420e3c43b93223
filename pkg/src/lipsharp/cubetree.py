"""Nested dyadic cube families with exact geometry.

Level ``n`` cubes have half-side ``2^-j_n``. Inside a level-``n`` cube ``Q``
with center ``a`` the grid of sub-cubes of half-side ``2^-j_{n+1}`` is
filtered by the center rule

    2 * 2^-l_n + 2^-j_{n+1}  <=  |a - a'|_inf  <=  2^-j_n - 2^-l_n - 2^-j_{n+1}

which leaves an ``l_inf`` gap of at least ``2^-l_n`` both to the boundary of
``Q`` and to its inner cube ``I_Q`` (half-side ``2^-l_n``). Child offsets are
stored as odd integers in units of ``2^-j_{n+1}``, so every comparison below
is an integer comparison and nothing is ever rounded.

Generations are never materialized: only counts, chains of offsets and
membership tests are computed.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Optional, Sequence

from .dyadic import Dyadic

__all__ = [
    "ParamSequence",
    "ValidationReport",
    "DyadicCube",
    "CubeChain",
    "Location",
    "auto_j",
    "choose_a",
    "exp_neg_bounds",
    "validate_params",
    "children_count",
    "enumerate_children",
    "is_selected_child",
    "inner_cube",
    "locate",
    "generation_measure",
    "measure_by_count",
    "inner_set_lower_bound",
    "random_chain",
    "default_params",
    "relaxed_demo_params",
]


# measure-factor constants ------------------------------------------------------


def exp_neg_bounds(x: Fraction, terms: int) -> tuple[Fraction, Fraction]:
    """Rational bracket ``lo <= exp(-x) <= hi`` for ``0 <= x <= 1``.

    Consecutive Taylor partial sums of an alternating series with
    decreasing terms bracket the limit.
    """
    x = Fraction(x)
    if not 0 <= x <= 1:
        raise ValueError("bracket requires 0 <= x <= 1")
    total, term = Fraction(1), Fraction(1)
    prev = total
    for i in range(1, terms + 1):
        term = -term * x / i
        prev, total = total, total + term
    return (min(prev, total), max(prev, total))


def _factor_margin_positive(a: Fraction, n: int, N: int) -> bool:
    """Decide ``(1-a)^N - (2a)^N > exp(-2^-n)`` exactly."""
    lhs = (1 - a) ** N - (2 * a) ** N
    x = Fraction(1, 2**n)
    terms = 4
    while True:
        lo, hi = exp_neg_bounds(x, terms)
        if lhs > hi:
            return True
        if lhs <= lo:
            return False
        terms *= 2
        if terms > 4096:  # lhs is rational and exp(-x) is not, so this never triggers
            raise ArithmeticError("could not separate the factor inequality")


def choose_a(n: int, N: int) -> Fraction:
    """Largest ``a = 2^-m`` (``m >= 1``) with ``(1-a)^N - (2a)^N > exp(-2^-n)``."""
    if n < 0 or N < 1:
        raise ValueError("need n >= 0 and N >= 1")
    m = 1
    while not _factor_margin_positive(Fraction(1, 2**m), n, N):
        m += 1
    return Fraction(1, 2**m)


# parameters ------------------------------------------------------------------


def auto_j(depth: int) -> tuple[int, ...]:
    """Smallest strict sequence: ``j_{n+1}`` = least multiple of 3 >= 9(j_n + 1)."""
    j = [0]
    for _ in range(depth):
        nxt = 9 * (j[-1] + 1)
        j.append(nxt + (-nxt) % 3)
    return tuple(j)


@dataclass(frozen=True)
class ParamSequence:
    """Scale sequences of the construction.

    ``j`` has ``n_max + 1`` entries; levels ``0 .. n_max - 1`` carry inner
    cubes and bumps, and level ``n_max`` is the depth cap. ``k`` is defined
    at every level, ``l``, ``a`` and ``eps`` below the cap.

    In relaxed mode ``k`` and ``l`` are rounded (floor and ceiling) so tiny
    sequences such as ``(0, 3, 6)`` or ``(0, 2, 4)`` are usable. An explicit
    ``l`` overrides the derivation (used for fault injection).
    """

    j: tuple
    N: int = 2
    mode: str = "strict"
    l_override: Optional[tuple] = None

    def __post_init__(self):
        j = tuple(int(v) for v in self.j)
        object.__setattr__(self, "j", j)
        if self.mode not in ("strict", "relaxed"):
            raise ValueError(f"mode must be 'strict' or 'relaxed', got {self.mode!r}")
        if len(j) < 2:
            raise ValueError("j needs at least two entries")
        if any(v < 0 for v in j):
            raise ValueError("j entries must be nonnegative")
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.l_override is not None:
            lo = tuple(int(v) for v in self.l_override)
            if len(lo) != len(j) - 1:
                raise ValueError("l needs one entry fewer than j")
            object.__setattr__(self, "l_override", lo)

    @property
    def n_max(self) -> int:
        return len(self.j) - 1

    @cached_property
    def k(self) -> tuple:
        return tuple(2 * v // 3 for v in self.j)

    @cached_property
    def l_formula(self) -> tuple:
        j = self.j
        return tuple(-(-(j[n + 1] + 2 * j[n]) // 3) + 1 for n in range(self.n_max))

    @cached_property
    def l(self) -> tuple:
        return self.l_override if self.l_override is not None else self.l_formula

    @cached_property
    def a(self) -> tuple:
        return tuple(choose_a(n, self.N) for n in range(self.n_max))

    @cached_property
    def counts(self) -> tuple:
        """Children per selected cube at each level below the cap."""
        return tuple(children_count(n, self) for n in range(self.n_max))

    def card(self, n: int) -> int:
        """Number of selected level-``n`` cubes."""
        return math.prod(self.counts[:n])

    @cached_property
    def eps(self) -> tuple:
        """Per-level Lip-norm budget ``2^-n / card(Q_n)``; None if the level is empty."""
        out = []
        for n in range(self.n_max):
            c = self.card(n)
            out.append(Fraction(1, 2**n * c) if c > 0 else None)
        return tuple(out)

    def offset_bounds(self, n: int) -> tuple[int, int]:
        """``(U, L)``: a child offset ``o`` is selected iff ``L <= max|o_i| <= U``."""
        j, jn, l = self.j[n], self.j[n + 1], self.l[n]
        # bounds scaled by 2^j_{n+1}; exact as Fractions when l > j_{n+1}
        upper = Fraction(2 ** (jn - j)) - Fraction(2) ** (jn - l) - 1
        lower = 2 * Fraction(2) ** (jn - l) + 1
        return math.floor(upper), math.ceil(lower)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "mode": self.mode,
            "j": list(self.j),
            "k": list(self.k),
            "l": list(self.l),
            "a": [str(v) for v in self.a],
            "counts": [str(c) for c in self.counts],
            "eps": [None if e is None else _fraction_str(e) for e in self.eps],
        }


def default_params(N: int = 2) -> ParamSequence:
    return ParamSequence(auto_j(3), N, "strict")


def relaxed_demo_params(N: int = 2) -> ParamSequence:
    return ParamSequence((0, 3, 6), N, "relaxed")


def _fraction_str(x: Fraction) -> str:
    """Exact rational string, compacted to ``p/2^e`` for dyadic denominators."""
    den = x.denominator
    if den & (den - 1) == 0 and den > 1:
        return f"{x.numerator}/2^{den.bit_length() - 1}"
    return f"{x.numerator}/{den}" if den != 1 else str(x.numerator)


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)
    checked: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": self.violations, "checked": self.checked,
                "skipped": self.skipped}


def validate_params(p: ParamSequence) -> ValidationReport:
    """Check the construction constraints; violations are returned, not raised."""
    bad, checked, skipped = [], [], []
    j, n_max = p.j, p.n_max

    def check(name, cond, message):
        checked.append(name)
        if not cond:
            bad.append(message)

    check("j_0 = 0", j[0] == 0, f"j_0 = {j[0]} != 0")
    for n in range(n_max):
        check(f"j increasing at {n}", j[n + 1] > j[n], f"j_{n + 1} <= j_{n}")
        check(f"inner cube inside cube at {n}", p.l[n] > j[n], f"l_{n} = {p.l[n]} <= j_{n} = {j[n]}")
        check(f"child grid finer than inner cube at {n}", p.l[n] < j[n + 1],
              f"l_{n} = {p.l[n]} >= j_{n + 1} = {j[n + 1]}")
    if bad:
        # counts are meaningless for inconsistent scales
        return ValidationReport(False, bad, checked, skipped)
    for n in range(n_max):
        check(f"nonempty children at {n}", p.counts[n] > 0,
              f"level {n} has no selected children")
        if p.counts[n] > 0:
            card, eps = p.card(n), p.eps[n]
            check(f"budget at {n}", card * eps <= Fraction(1, 2**n),
                  f"card(Q_{n}) * eps_{n} > 2^-{n}")

    strict_checks = []
    for n, v in enumerate(j):
        strict_checks.append((f"j_{n} = 0 mod 3", v % 3 == 0, f"j_{n} = {v} is not divisible by 3"))
    for n in range(n_max):
        bound = 9 * (j[n] + 1)
        strict_checks.append((f"factor-9 growth at {n}", j[n + 1] >= bound,
                              f"j_{n + 1} < 9(j_{n}+1) = {bound}"))
        if j[n] % 3 == 0 and j[n + 1] % 3 == 0:
            kf = 2 * j[n] // 3
            lf = j[n + 1] // 3 + 2 * j[n] // 3 + 1
            strict_checks.append((f"k_{n} formula", p.k[n] == kf, f"k_{n} = {p.k[n]} != {kf}"))
            strict_checks.append((f"l_{n} formula", p.l[n] == lf,
                                  f"l_{n} = {p.l[n]} != j_{n + 1}/3 + 2j_{n}/3 + 1 = {lf}"))
        # 2^(j_n - l_n) <= a_n, compared as exponents since a_n = 2^-m
        m = p.a[n].denominator.bit_length() - 1
        strict_checks.append((f"growth inequality at {n}", j[n] - p.l[n] <= -m,
                              f"growth inequality fails at n={n}: 2^(j_{n}-l_{n}) = "
                              f"2^{j[n] - p.l[n]} > a_{n} = 2^-{m}"))
        strict_checks.append((f"factor inequality at {n}", _factor_margin_positive(p.a[n], n, p.N),
                              f"(1-a_{n})^N - (2a_{n})^N <= exp(-2^-{n})"))
    for name, cond, msg in strict_checks:
        if p.mode == "strict":
            check(name, cond, msg)
        else:
            skipped.append(name)
    return ValidationReport(not bad, bad, checked, skipped)


# cubes -----------------------------------------------------------------------


@dataclass(frozen=True)
class DyadicCube:
    """Closed cube ``center + [-2^-e, 2^-e]^N`` with ``e = half_side_exponent``."""

    level: int
    center: tuple
    half_side_exponent: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(Dyadic.coerce(c) for c in self.center))

    @property
    def half_side(self) -> Dyadic:
        return Dyadic.pow2(-self.half_side_exponent)

    @property
    def N(self) -> int:
        return len(self.center)

    def linf_distance(self, x) -> Dyadic:
        return max(abs(Dyadic.coerce(xi) - ci) for xi, ci in zip(x, self.center))

    def contains(self, x) -> bool:
        return self.linf_distance(x) <= self.half_side

    def contains_interior(self, x) -> bool:
        return self.linf_distance(x) < self.half_side

    def bounds(self) -> list:
        h = self.half_side
        return [(c - h, c + h) for c in self.center]

    def to_dict(self) -> dict:
        return {"level": self.level, "center": [str(c) for c in self.center],
                "half_side_exponent": self.half_side_exponent}


def root_cube(p: ParamSequence) -> DyadicCube:
    return DyadicCube(0, (0,) * p.N, p.j[0])


@dataclass(frozen=True)
class CubeChain:
    """Root-to-leaf address: per-level odd offsets in units of ``2^-j_{n+1}``."""

    offsets: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(tuple(int(v) for v in o) for o in self.offsets))

    def __len__(self):
        return len(self.offsets)

    def prefix(self, n: int) -> "CubeChain":
        return CubeChain(self.offsets[:n])

    def extend(self, offset) -> "CubeChain":
        return CubeChain(self.offsets + (tuple(offset),))

    def cube(self, p: ParamSequence) -> DyadicCube:
        if len(self.offsets) > p.n_max:
            raise ValueError("chain deeper than the parameter sequence")
        center = [Dyadic(0)] * p.N
        for n, off in enumerate(self.offsets):
            if len(off) != p.N:
                raise ValueError("offset dimension mismatch")
            center = [c + Dyadic(o, p.j[n + 1]) for c, o in zip(center, off)]
        n = len(self.offsets)
        return DyadicCube(n, tuple(center), p.j[n])

    def is_valid(self, p: ParamSequence) -> bool:
        return all(is_selected_child(None, off, p, level=n) for n, off in enumerate(self.offsets))

    def key(self) -> str:
        return "/".join(",".join(str(v) for v in off) for off in self.offsets) or "root"

    @classmethod
    def parse(cls, text: str) -> "CubeChain":
        text = text.strip()
        if text in ("", "root"):
            return cls(())
        return cls(tuple(tuple(int(v) for v in part.split(",")) for part in text.split("/")))

    def to_list(self) -> list:
        return [list(o) for o in self.offsets]


def is_selected_child(parent: Optional[DyadicCube], offset, p: ParamSequence, *,
                      level: Optional[int] = None) -> bool:
    """Center rule for the sub-cube at ``offset`` (odd integers, units ``2^-j_{n+1}``).

    Evaluated directly on dyadic distances, independently of the integer
    bounds used by :func:`children_count`.
    """
    n = parent.level if parent is not None else level
    if n is None or not 0 <= n < p.n_max:
        raise ValueError("level has no children")
    span = 2 ** (p.j[n + 1] - p.j[n])
    for o in offset:
        if o % 2 == 0 or abs(o) > span - 1:
            raise ValueError(f"offset {tuple(offset)} does not index a sub-cube")
    dist = Dyadic(max(abs(o) for o in offset), p.j[n + 1])
    fine = Dyadic.pow2(-p.j[n + 1])
    inner = Dyadic.pow2(-p.l[n])
    lower = inner.scale2(1) + fine
    upper = Dyadic.pow2(-p.j[n]) - inner - fine
    return lower <= dist <= upper


def _axis_counts(n: int, p: ParamSequence) -> tuple[int, int]:
    """``(A, B)``: odd offsets with ``|o| <= U`` and with ``|o| < L``."""
    U, L = p.offset_bounds(n)
    span = 2 ** (p.j[n + 1] - p.j[n])
    U = min(U, span - 1)

    def odd_upto(m):  # odd o with |o| <= m
        return 0 if m < 1 else 2 * ((m + 1) // 2)

    A = odd_upto(U)
    B = odd_upto(L - 1)
    return A, B


def children_count(n: int, p: ParamSequence) -> int:
    """Selected children of any level-``n`` cube: ``A^N - min(A, B)^N``."""
    if not 0 <= n < p.n_max:
        raise ValueError("level has no children")
    A, B = _axis_counts(n, p)
    return A**p.N - min(A, B) ** p.N


def enumerate_children(n: int, p: ParamSequence, *, selected_only: bool = True) -> Iterator[tuple]:
    """Brute-force walk over every sub-cube offset of a level-``n`` cube."""
    span = 2 ** (p.j[n + 1] - p.j[n])
    axis = range(-(span - 1), span, 2)
    for off in itertools.product(axis, repeat=p.N):
        if not selected_only or is_selected_child(None, off, p, level=n):
            yield off


def child_cube(parent: DyadicCube, offset, p: ParamSequence) -> DyadicCube:
    n = parent.level
    center = tuple(c + Dyadic(o, p.j[n + 1]) for c, o in zip(parent.center, offset))
    return DyadicCube(n + 1, center, p.j[n + 1])


def inner_cube(Q: DyadicCube, p: ParamSequence) -> DyadicCube:
    """Concentric closed cube of half-side ``2^-l_n``."""
    if Q.level >= p.n_max:
        raise ValueError("no inner cube at the depth cap")
    return DyadicCube(Q.level, Q.center, p.l[Q.level])


# location --------------------------------------------------------------------


@dataclass(frozen=True)
class Location:
    """Outcome of :func:`locate`.

    ``kind`` is ``"inner"`` (x in ``I_Q`` of the last cube), ``"escaped"``
    (x is in the last cube but in none of its selected children nor its
    inner cube) or ``"deep"`` (still inside at the depth cap).
    """

    kind: str
    level: int
    chain: CubeChain
    cube: DyadicCube

    def to_dict(self) -> dict:
        return {"kind": self.kind, "level": self.level, "chain": self.chain.to_list()}


def _axis_candidates(y: Dyadic) -> list:
    """Odd ``o`` with ``o - 1 <= y <= o + 1``."""
    lo = (y - 2).scale2(-1).ceil()
    hi = y.scale2(-1).floor()
    return [2 * m + 1 for m in range(lo, hi + 1)]


def locate(x, p: ParamSequence, max_depth: Optional[int] = None) -> Location:
    """Walk the selected cubes containing the dyadic point ``x``.

    At each level the inner cube is tested first, then the depth cap, then
    the selected children; ties on shared faces go to the lexicographically
    smallest offset so the answer is deterministic.
    """
    try:
        xs = tuple(Dyadic.coerce(v) for v in x)
    except (TypeError, ValueError) as exc:
        raise ValueError("locate needs exact dyadic coordinates") from exc
    if len(xs) != p.N:
        raise ValueError("point dimension mismatch")
    cap = p.n_max if max_depth is None else min(max_depth, p.n_max)
    Q = root_cube(p)
    if not Q.contains(xs):
        raise ValueError("point outside [-1, 1]^N")
    chain = CubeChain()
    while True:
        n = Q.level
        if n < p.n_max and inner_cube(Q, p).contains(xs):
            return Location("inner", n, chain, Q)
        if n >= cap:
            return Location("deep", n, chain, Q)
        scaled = [(xi - ci).scale2(p.j[n + 1]) for xi, ci in zip(xs, Q.center)]
        found = None
        for off in itertools.product(*(_axis_candidates(y) for y in scaled)):
            try:
                if is_selected_child(Q, off, p):
                    found = off
                    break
            except ValueError:
                continue
        if found is None:
            return Location("escaped", n, chain, Q)
        chain = chain.extend(found)
        Q = child_cube(Q, found, p)


# measures --------------------------------------------------------------------


def level_factor(n: int, p: ParamSequence) -> Fraction:
    """``(1 - 2^(j-l))^N - (2 * 2^(j-l))^N`` at level ``n``."""
    s = Fraction(2) ** (p.j[n] - p.l[n])
    return (1 - s) ** p.N - (2 * s) ** p.N


def generation_measure(n: int, p: ParamSequence) -> Fraction:
    """Exact Lebesgue measure of the union of the level-``n`` cubes (product formula)."""
    if not 0 <= n <= p.n_max:
        raise ValueError("level out of range")
    out = Fraction(2**p.N)
    for i in range(n):
        out *= level_factor(i, p)
    return out


def measure_by_count(n: int, p: ParamSequence) -> Fraction:
    """Oracle: ``card(Q_n)`` times the volume of one level-``n`` cube."""
    return p.card(n) * Fraction(2, 2 ** p.j[n]) ** p.N


def inner_set_lower_bound(p: ParamSequence) -> dict:
    """Lower bounds for the measure of the residual set.

    ``running`` lists the exact generation measures, ``bound`` extends the
    built product by ``exp(-2^-i)`` for every level past the cap (the factor
    inequality), and ``floor`` is ``2^N e^-2``.
    """
    running = [generation_measure(n, p) for n in range(p.n_max + 1)]
    tail = math.exp(-(2.0 ** (1 - p.n_max)))
    return {
        "running": running,
        "bound": float(running[-1]) * tail,
        "floor": 2**p.N * math.exp(-2.0),
    }


# sampling --------------------------------------------------------------------


def random_child(n: int, p: ParamSequence, rng: random.Random) -> tuple:
    """Uniform draw from the selected children of a level-``n`` cube."""
    U, L = p.offset_bounds(n)
    U = min(U, 2 ** (p.j[n + 1] - p.j[n]) - 1)
    if children_count(n, p) == 0:
        raise ValueError(f"level {n} has no selected children")
    half = (U + 1) // 2  # odd values in [1, U]
    while True:
        off = tuple((2 * rng.randrange(half) + 1) * rng.choice((-1, 1)) for _ in range(p.N))
        if max(abs(o) for o in off) >= L:
            return off


def random_chain(p: ParamSequence, depth: int, rng) -> CubeChain:
    """A uniformly sampled chain of ``depth`` levels (``rng`` a Random or a seed)."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    if depth > p.n_max:
        raise ValueError("depth exceeds n_max")
    return CubeChain(tuple(random_child(n, p, rng) for n in range(depth)))


def corner_offsets(n: int, p: ParamSequence) -> Sequence[tuple]:
    """Offsets of the sub-cubes touching the parent's corners."""
    span = 2 ** (p.j[n + 1] - p.j[n]) - 1
    return list(itertools.product((-span, span), repeat=p.N))
