"""The assembled example: a function with integrable lip but nowhere-small Lip.

``f`` is the sum over all selected cubes ``Q`` (level ``n``) of a capacity
bump ``phi_Q`` centred at the centre of ``Q``, with plateau ``2^-k_n``,
support inside the inner cube ``I_Q`` and Lip-norm at most ``eps_n``.
Points are classified by :func:`cubetree.locate`; residual-set points are
handled through chains, and every emitted number is either exact or a
one-sided bound with its rounding direction fixed.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .capacity import Bump, BumpSpec, eval_bump, make_bump
from .cubetree import (
    CubeChain,
    DyadicCube,
    Location,
    ParamSequence,
    locate,
)
from .dyadic import Dyadic, ScaledFloat
from .lorentz import LogProfile, LorentzIndex, RadialProfile

__all__ = [
    "SharpExample",
    "CertifiedValue",
    "ProbeRow",
    "Witness",
    "NotCandidateError",
    "eval_f",
    "lip_probe",
    "nondiff_witness",
    "lip_field_norm_budget",
    "sup_on_ball",
]


class NotCandidateError(ValueError):
    """The probed point is not deep enough in the cube tree."""


@dataclass(frozen=True)
class CertifiedValue:
    """``f(x)`` lies in ``[value, value + uncertainty]`` (f is nonnegative).

    ``uncertainty`` is zero when the point was resolved and otherwise the
    height bound of every bump the depth cap left unexplored.
    """

    value: float
    uncertainty: ScaledFloat
    location: Location

    @property
    def exact(self) -> bool:
        return self.uncertainty.mantissa == 0

    def upper(self) -> Fraction:
        return Fraction(self.value) + _scaled_to_fraction(self.uncertainty)

    def to_dict(self) -> dict:
        return {"value": self.value, "uncertainty": str(self.uncertainty),
                "location": self.location.to_dict()}


def _scaled_to_fraction(s: ScaledFloat) -> Fraction:
    if s.mantissa == 0:
        return Fraction(0)
    return Fraction(s.mantissa) * Fraction(2) ** s.exponent


class SharpExample:
    """Lazy bump registry over the cube tree.

    Bumps are built once per level (at the origin) and translated to each
    cube centre, so a bump depends only on its level and chain, never on
    the order in which the cache was filled.
    """

    def __init__(self, params: ParamSequence, profile: Optional[RadialProfile] = None,
                 q_S: float = 2.0):
        if q_S <= 1:
            raise ValueError("q_S must exceed 1")
        self.params = params
        self.profile = profile if profile is not None else LogProfile(params.N)
        self.S_index = LorentzIndex(params.N, q_S)
        self._templates: dict = {}
        self.bump_cache: dict = {}
        self._lock = threading.Lock()

    @property
    def N(self) -> int:
        return self.params.N

    def height_exponent(self, n: int) -> int:
        return self.params.k[n]

    def level_spec(self, n: int) -> BumpSpec:
        p = self.params
        eps_n = p.eps[n]
        if eps_n is None:
            raise ValueError(f"level {n} is empty")
        return BumpSpec((0,) * p.N, math.ldexp(1.0, -p.l[n]), math.ldexp(1.0, -p.k[n]), p.N,
                        self.profile, float(eps_n), self.S_index.q)

    def template(self, n: int) -> Bump:
        with self._lock:
            b = self._templates.get(n)
            if b is None:
                b = make_bump(self.level_spec(n))
                self._templates[n] = b
            return b

    def bump(self, chain: CubeChain) -> Bump:
        key = chain.offsets
        with self._lock:
            b = self.bump_cache.get(key)
        if b is not None:
            return b
        tmpl = self.template(len(chain))
        b = tmpl.translated(chain.cube(self.params).center)
        with self._lock:
            return self.bump_cache.setdefault(key, b)


def _height(ex: SharpExample, level: int) -> ScaledFloat:
    """Bound on every bump at ``level`` or deeper."""
    p = ex.params
    return ScaledFloat.pow2(-p.k[min(level, p.n_max)])


def eval_f(ex: SharpExample, x, max_depth: Optional[int] = None) -> CertifiedValue:
    loc = locate(x, ex.params, max_depth)
    if loc.kind == "inner":
        return CertifiedValue(eval_bump(ex.bump(loc.chain), x), ScaledFloat(0.0), loc)
    if loc.kind == "escaped":
        return CertifiedValue(0.0, ScaledFloat(0.0), loc)
    return CertifiedValue(0.0, _height(ex, loc.level + 1), loc)


# probes ----------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeRow:
    """``sup_{|y-x| < 2^radius_exp} |f(y)-f(x)| / 2^radius_exp <= 2^bound_exp``."""

    level: int
    radius_exp: int
    bound_exp: int
    gap_to_boundary: Dyadic
    gap_to_inner: Dyadic

    @property
    def bound(self) -> ScaledFloat:
        return ScaledFloat.pow2(self.bound_exp)


def _chain_point(ex: SharpExample, chain: CubeChain):
    return chain.cube(ex.params).center


def lip_probe(ex: SharpExample, chain: CubeChain, depth: int) -> list[ProbeRow]:
    """Small-ball bounds along a chain prefix.

    The representative point is the centre of the last cube of ``chain``,
    which must reach level ``depth + 1``. Inside the level-``n`` cube the
    ball of radius ``2^-l_n`` misses both the boundary and the inner cube
    (checked exactly), so only bumps of height ``<= 2^-k_{n+1}`` are seen,
    and f(x) itself is one of those.
    """
    p = ex.params
    if depth < 0 or len(chain) < depth + 1:
        raise NotCandidateError(f"not an I-candidate: chain of length {len(chain)} "
                                f"cannot probe depth {depth}")
    x = _chain_point(ex, chain)
    loc = locate(x, p, depth)
    if loc.kind != "deep" or loc.level != depth:
        raise NotCandidateError(f"not an I-candidate: point classified {loc.kind} at level {loc.level}")
    rows = []
    for n in range(depth + 1):
        Q = chain.prefix(n).cube(p)
        dist = Q.linf_distance(x)
        radius = Dyadic.pow2(-p.l[n])
        to_boundary = Q.half_side - dist
        to_inner = dist - radius
        if to_boundary < radius or to_inner < radius:
            raise RuntimeError(f"gap property fails at level {n}")
        rows.append(ProbeRow(n, -p.l[n], p.l[n] - p.k[n + 1], to_boundary, to_inner))
    return rows


@dataclass(frozen=True)
class Witness:
    level: int
    x: tuple
    y: tuple
    kind: str  # "center" or "boundary"
    f_y: float
    f_x: CertifiedValue
    ratio_lower: ScaledFloat
    target: ScaledFloat
    certified: bool
    candidates: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"level": self.level, "kind": self.kind, "y": [str(c) for c in self.y],
                "f_y": self.f_y, "f_x": self.f_x.to_dict(), "ratio_lower": str(self.ratio_lower),
                "target": str(self.target), "certified": self.certified}


def _sq_dist(x, y) -> Fraction:
    total = Dyadic(0)
    for a, b in zip(x, y):
        d = Dyadic.coerce(a) - Dyadic.coerce(b)
        total = total + d * d
    return total.to_fraction()


def _boundary_point(Q: DyadicCube, x, grid_exp: int) -> tuple:
    """Ray from the centre of ``Q`` through ``x`` to its boundary, snapped to ``2^-grid_exp``."""
    diff = [Dyadic.coerce(xi) - c for xi, c in zip(x, Q.center)]
    m = max(abs(d) for d in diff)
    if m.num == 0:
        raise ValueError("x is the centre; no ray")
    scale = Q.half_side.to_fraction() / m.to_fraction()
    unit = Fraction(1, 2**grid_exp)
    out = []
    for c, d in zip(Q.center, diff):
        v = d.to_fraction() * scale
        snapped = round(v / unit) * unit
        out.append(c + Dyadic.coerce(snapped))
    return tuple(out)


def nondiff_witness(ex: SharpExample, chain: CubeChain, n: int,
                    max_depth: Optional[int] = None) -> Witness:
    """Certified difference quotient at scale ``2^-j_n`` along ``chain``.

    ``x`` is the centre of the last cube of ``chain`` (level > n). With
    ``a`` the centre of the level-``n`` cube and ``b`` the boundary point on
    the ray through ``x``, ``f(a) = 2^-k_n`` and ``f(b) = 0`` are confirmed by
    uncertainty-free evaluations; the quotient bound uses the certified
    interval for ``f(x)``, an exact squared distance, and downward rounding.
    """
    p = ex.params
    if not 0 <= n < len(chain) or n >= p.n_max:
        raise ValueError("chain must extend past level n and n must carry a bump")
    x = _chain_point(ex, chain)
    depth = len(chain) if max_depth is None else max_depth
    fx = eval_f(ex, x, depth)
    Q = chain.prefix(n).cube(p)
    a = Q.center
    b = _boundary_point(Q, x, p.j[n + 1])
    fa, fb = eval_f(ex, a, depth), eval_f(ex, b, depth)
    tau = Fraction(1, 2 ** p.k[n])
    if not (fa.exact and fb.exact and Fraction(fa.value) == tau and fb.value == 0):
        raise RuntimeError(f"witness endpoints not resolved: f(a)={fa.value}, f(b)={fb.value}")

    fx_lo, fx_hi = Fraction(fx.value), fx.upper()
    cands = {}
    for kind, y, num in (("center", a, tau - fx_hi), ("boundary", b, fx_lo)):
        d2 = _sq_dist(x, y)
        if num <= 0 or d2 == 0:
            cands[kind] = (y, Fraction(0))
        else:
            cands[kind] = (y, num * num / d2)
    kind = max(cands, key=lambda k: cands[k][1])
    y, r2 = cands[kind]
    # target 2^(j_n - k_n) / (2 sqrt N); equals 2^(j_n/3) / (2 sqrt N) when 3 | j_n
    target2 = Fraction(2) ** (2 * (p.j[n] - p.k[n])) / (4 * p.N)
    ratio = ScaledFloat.from_fraction(r2, "down").sqrt("down")
    target = ScaledFloat.from_fraction(target2, "nearest").sqrt("down")
    fy = fa.value if kind == "center" else fb.value
    return Witness(n, tuple(x), y, kind, fy, fx, ratio, target, r2 >= target2,
                   {k: str(ScaledFloat.from_fraction(v[1], "down").sqrt("down"))
                    for k, v in cands.items()})


def lip_field_norm_budget(ex: SharpExample) -> Fraction:
    """``sum_n card(Q_n) eps_n`` over the built levels, exactly."""
    p = ex.params
    total = Fraction(0)
    for n in range(p.n_max):
        if p.eps[n] is not None:
            total += p.card(n) * p.eps[n]
    return total


# balls -----------------------------------------------------------------------


def _range_on_box(ex: SharpExample, loc: Location, x, r: Dyadic) -> tuple[Fraction, Fraction]:
    """Bounds ``(inf, sup)`` of f on the l_inf box of half-width ``r`` around ``x``."""
    p = ex.params
    chain = loc.chain
    for n in range(len(chain), -1, -1):
        Q = chain.prefix(n).cube(p)
        dist = Q.linf_distance(x)
        if n > 0 and dist + r > Q.half_side:
            continue
        if n >= p.n_max:
            return Fraction(0), Fraction(1, 2 ** p.k[n])
        below = Fraction(1, 2 ** p.k[n + 1])
        inner = Dyadic.pow2(-p.l[n])
        if dist - r > inner:
            return Fraction(0), below
        b = ex.bump(chain.prefix(n))
        rho = math.sqrt(float(_sq_dist(x, Q.center)))
        near = rho * (1 - 1e-12) - float(r) * (1 + 1e-12)
        peak = b.tau if near <= 0 else float(b.value_at_log_radius(math.log(near)))
        if dist + r <= inner:
            # the box sits inside I_Q, where f is this bump alone (radially nonincreasing)
            far = (rho + math.sqrt(p.N) * float(r)) * (1 + 1e-12)
            low = float(b.value_at_log_radius(math.log(far)))
            return Fraction(low), Fraction(peak)
        return Fraction(0), max(Fraction(peak), below)
    return Fraction(0), Fraction(1)


def sup_on_ball(ex: SharpExample, x, r, max_depth: Optional[int] = None) -> tuple[float, float]:
    """Certified ``(lower, upper)`` for ``sup_{|y-x| <= r} |f(y) - f(x)|``.

    The upper bound uses the height of the shallowest generation the ball
    can reach, refined by the exact bump profile when the ball meets an
    inner cube; the lower bound uses bump centres and cube-boundary points
    inside the ball.
    """
    r = Dyadic.coerce(r)
    if r <= 0:
        raise ValueError("radius must be positive")
    fx = eval_f(ex, x, max_depth)
    fx_lo, fx_hi = Fraction(fx.value), fx.upper()
    bottom, top = _range_on_box(ex, fx.location, x, r)
    upper = max(top - fx_lo, fx_hi - bottom, Fraction(0))
    lower = Fraction(0)
    r2 = r.to_fraction() ** 2
    chain = fx.location.chain
    for n in range(min(len(chain) + 1, ex.params.n_max)):
        c = chain.prefix(n).cube(ex.params).center
        if _sq_dist(x, c) <= r2:
            fc = Fraction(1, 2 ** ex.params.k[n])
            lower = max(lower, fc - fx_hi, fx_lo - fc)
    # axis points at distance r, and where the axes leave the chain's cubes
    # (f vanishes on cube boundaries), each evaluated with its own interval
    xs = [Dyadic.coerce(v) for v in x]
    one = Dyadic(1)
    probes = set()
    for i in range(len(xs)):
        targets = [xs[i] + r, xs[i] - r]
        for n in range(len(chain) + 1):
            Q = chain.prefix(n).cube(ex.params)
            targets += [Q.center[i] + Q.half_side, Q.center[i] - Q.half_side]
        for t in targets:
            if abs(t - xs[i]) <= r and abs(t) <= one and t != xs[i]:
                probes.add(tuple(xs[:i] + [t] + xs[i + 1:]))
    for y in sorted(probes):
        fy = eval_f(ex, y, max_depth)
        lower = max(lower, Fraction(fy.value) - fx_hi, fx_lo - fy.upper())
    return float(lower), float(upper)


def probe_chain(ex: SharpExample, chain: CubeChain, depth: int) -> dict:
    """Lip bounds and witnesses for one chain, as plain data."""
    rows = lip_probe(ex, chain, depth)
    witnesses = [nondiff_witness(ex, chain, n) for n in range(1, min(depth, ex.params.n_max - 1) + 1)]
    return {"chain": chain, "lip": rows, "witnesses": witnesses}
