"""Named invariant checks shared by ``lipsharp verify`` and the demos.

Each check returns a :class:`CheckResult`; a check that raises is recorded
as failed with the exception text, never skipped silently.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import capacity, cubetree, gradcheck, lorentz, sharpfn
from .lorentz import LogProfile, LorentzIndex, StepFunction

__all__ = ["CheckResult", "CHECKS", "run_checks", "gradcheck_bump", "bump_grid_case"]


def gradcheck_bump(N: int = 2, profile=None):
    """The bump used by the grid harness: wide enough to resolve on ``[-1, 1]^N``.

    ``eps = 0.5`` keeps ``eps/2`` inside the range where the log profile is
    nonincreasing.
    """
    profile = profile if profile is not None else LogProfile(N)
    return capacity.make_bump(capacity.BumpSpec((0,) * N, 0.5, 1.0, N, profile, 0.05))


def bump_grid_case(n: int = 201, q: float = 1.0, pairs: int = 10_000, seed: int = 0,
                   bump=None) -> dict:
    """Grid samples of a bump, its Lip field, their maximal function and random node pairs.

    Radii are the integer cell multiples below a quarter of the grid width.
    """
    bump = bump if bump is not None else gradcheck_bump()
    N = bump.spec.N
    F = gradcheck.GridField.from_function(bump.values, n, N)
    G = gradcheck.GridField.from_function(bump.lip, n, N)
    radii = G.h * np.arange(1, max(2, n // 4))
    M = gradcheck.maximal_function(G, q, radii)
    P = gradcheck.random_pairs(F, pairs, np.random.default_rng(seed))
    return {"bump": bump, "f": F, "g": G, "M": M, "pairs": P, "radii": radii, "q": q}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "seconds": round(self.seconds, 3)}


def _params_check(ctx) -> tuple[bool, dict]:
    rep = cubetree.validate_params(ctx["params"])
    return rep.ok, rep.to_dict()


def _measure_check(ctx) -> tuple[bool, dict]:
    p = ctx["params"]
    lb = cubetree.inner_set_lower_bound(p)
    running = [float(m) for m in lb["running"]]
    ok = all(m > lb["floor"] for m in running) and lb["bound"] > lb["floor"]
    if p.mode == "relaxed":
        ok = True  # the e^-2 floor is a strict-mode statement
    match = all(cubetree.generation_measure(n, p) == cubetree.measure_by_count(n, p)
                for n in range(p.n_max + 1))
    return ok and match, {"running": [str(m) for m in lb["running"]], "bound": lb["bound"],
                          "floor": lb["floor"], "count_oracle_match": match}


def _geometry_check(ctx) -> tuple[bool, dict]:
    p = cubetree.relaxed_demo_params(ctx["params"].N)
    bad = 0
    for n in range(p.n_max):
        kids = list(cubetree.enumerate_children(n, p))
        bad += len(kids) != cubetree.children_count(n, p)
        span = 2 ** (p.j[n + 1] - p.j[n])
        U, L = p.offset_bounds(n)
        for off in kids:
            m = max(abs(o) for o in off)
            # l_inf gap to the inner cube and to the parent boundary, in units 2^-j_{n+1}
            gap_inner = (m - 1) - 2 ** (p.j[n + 1] - p.l[n])
            gap_bound = span - (m + 1)
            bad += gap_inner < 2 ** (p.j[n + 1] - p.l[n]) or gap_bound < 2 ** (p.j[n + 1] - p.l[n])
    return bad == 0, {"relaxed_j": list(p.j), "discrepancies": bad}


def _lorentz_check(ctx) -> tuple[bool, dict]:
    rng = random.Random(ctx["seed"])
    worst = 0.0
    for _ in range(20):
        m = Fraction(rng.randint(1, 1000), rng.randint(1, 100))
        Q = rng.choice([1, 2, 3, 4, 1.5, 2.5])
        got = lorentz.lorentz_norm(StepFunction.indicator(m), LorentzIndex(Q, 1)).value
        want = Q * float(m) ** (1 / Q)
        worst = max(worst, abs(got - want) / want)
    g = LogProfile(2)
    n22 = lorentz.lorentz_norm(g, LorentzIndex(2, 2))
    n21 = lorentz.lorentz_norm(g, LorentzIndex(2, 1))
    ok = worst <= 1e-9 and abs(n22.value - 1) <= 1e-6 and n21.divergent
    return ok, {"indicator_rel_err": worst, "g_22": n22.value, "g_21": n21.status}


def _capacity_check(ctx) -> tuple[bool, dict]:
    b = capacity.make_bump(capacity.BumpSpec((0,) * 2, 0.1, 1.0, 2, LogProfile(2), 0.05))
    return b.verified_norm <= 0.05, {"verified_norm": b.verified_norm, "lambda": b.lam,
                                     "log_delta": str(b.log_delta)}


def _probe_check(ctx) -> tuple[bool, dict]:
    p = ctx["params"]
    if p.mode != "strict" or p.n_max < 3:
        return True, {"skipped": "needs strict params with n_max >= 3"}
    ex = ctx["example"]()
    rng = random.Random(ctx["seed"])
    rows = []
    ok = True
    for _ in range(ctx.get("probe_chains", 3)):
        chain = cubetree.random_chain(p, 3, rng)
        lip = sharpfn.lip_probe(ex, chain, 2)
        ok &= all(a.bound_exp > b.bound_exp for a, b in zip(lip, lip[1:]))
        for n in (1, 2):
            w = sharpfn.nondiff_witness(ex, chain, n)
            ok &= w.certified
            rows.append(str(w.ratio_lower))
    return ok, {"witness_ratios": rows}


def _budget_check(ctx) -> tuple[bool, dict]:
    ex = ctx["example"]()
    total = sharpfn.lip_field_norm_budget(ex)
    return total <= 2, {"budget": str(total)}


def _gradcheck_check(ctx) -> tuple[bool, dict]:
    b = gradcheck_bump()
    rng = np.random.default_rng(ctx["seed"])
    hook = gradcheck.sphere_breakpoints((0, 0), [0.25])
    passed = 0
    for _ in range(10):
        curve = gradcheck.random_polyline(rng, box=0.3)
        passed += gradcheck.chain_inequality(b.values, b.lip, curve, 64, breakpoints=hook).passed
    G = gradcheck.GridField.from_function(b.lip, 41)
    M1 = gradcheck.maximal_function(G, 1, [0.1, 0.2])
    M2 = gradcheck.maximal_function(G, 2, [0.1, 0.2])
    mono = bool(np.all(M1.values >= G.values) and np.all(M1.values <= M2.values * (1 + 1e-12)))
    return passed == 10 and mono, {"chains_passed": passed, "maximal_ok": mono}


CHECKS: dict[str, Callable] = {
    "params": _params_check,
    "measure": _measure_check,
    "geometry": _geometry_check,
    "lorentz": _lorentz_check,
    "capacity": _capacity_check,
    "probes": _probe_check,
    "budget": _budget_check,
    "gradcheck": _gradcheck_check,
}


def run_checks(params, names=None, seed: int = 0, profile=None, q_S: float = 2.0) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {', '.join(unknown)}")
    cache = {}

    def example():
        if "ex" not in cache:
            cache["ex"] = sharpfn.SharpExample(params, profile, q_S)
        return cache["ex"]

    ctx = {"params": params, "seed": seed, "example": example}
    out = []
    for name in names:
        t = time.perf_counter()
        try:
            ok, detail = CHECKS[name](ctx)
        except Exception as exc:  # a crash is a failed check, reported by name
            ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t))
    return out
