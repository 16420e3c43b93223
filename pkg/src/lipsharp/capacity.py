"""Lipschitz bumps with a full-height plateau and tiny gradient norm.

Given a capacity-degenerate profile g* (one whose potential
``u(r) = int_r^m t^(1/N - 1) g*(t) dt`` is infinite at 0) the radial
function

    phi(x) = tau                                  |x - a| <= delta
           = tau * (lam * u(Omega_N |x - a|^N) - Lam)   delta <= |x - a| <= eps/2
           = 0                                    |x - a| >= eps/2

has pointwise Lipschitz constant ``tau * C_N * lam * g*(Omega_N |x-a|^N)``
on the annulus, with ``C_N = N * Omega_N^(1/N)``. Since ``lam -> 0`` as
``delta -> 0``, the gradient norm can be pushed under any budget.

The inner radius is usually far below float range, so a bump records it
through ``u_inner = u(Omega_N delta^N)`` and ``log_delta`` (an mpmath
number); evaluation compares potentials instead of radii.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy import integrate, optimize

from .dyadic import Dyadic
from .lorentz import (
    InconclusiveError,
    LorentzIndex,
    RadialProfile,
    ShiftedProfile,
    TruncatedProfile,
    lorentz_norm,
    unit_ball_volume,
)

__all__ = [
    "BumpSpec",
    "Bump",
    "NotDegenerateError",
    "u_value",
    "make_bump",
    "eval_bump",
    "bump_lip",
    "lip_field_norm",
    "lip_constant",
]

# shifted-profile quadrature is used only while t0/t1 stays above this
_SHIFT_RATIO_FLOOR = 1e-8


class NotDegenerateError(ValueError):
    """The profile has finite potential at 0, so no delta meets the budget."""


def lip_constant(N: int) -> float:
    """Chain-rule constant ``N * Omega_N^(1/N)`` relating |grad phi| to lam * g*."""
    return N * unit_ball_volume(N) ** (1.0 / N)


# --------------------------------------------------------------------------
# the potential u


def _u_quad(profile: RadialProfile, N: int, log_r: float) -> float:
    def integrand(ell):
        return math.exp(ell / N + float(profile.log_g(ell)))

    top = profile.log_measure
    if log_r >= top:
        return 0.0
    val, err = integrate.quad(integrand, log_r, top, epsabs=1e-12, epsrel=1e-11, limit=400)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise InconclusiveError(f"u quadrature did not settle at log r = {log_r}")
    return val


def _u_log(profile: RadialProfile, N: int, log_r):
    """u at ``r = exp(log_r)``; ``log_r`` may be a float, array or mpf."""
    val = profile.u_closed(log_r, N)
    if val is not None:
        return val
    if isinstance(log_r, np.ndarray):
        return np.array([_u_quad(profile, N, float(x)) for x in log_r.ravel()]).reshape(log_r.shape)
    return _u_quad(profile, N, float(log_r))


def _u_inverse_log(profile: RadialProfile, N: int, value: float):
    """``log r`` with ``u(r) = value``; ``-inf`` when r underflows."""
    closed = profile.u_inverse_closed(value, N)
    if closed is not None:
        return closed
    top = profile.log_measure
    lo = top - 1.0
    while _u_log(profile, N, lo) < value:
        lo = top - 2 * (top - lo)
        if lo < -1e300:
            return -math.inf
    return optimize.brentq(lambda x: _u_log(profile, N, x) - value, lo, top, xtol=1e-14, rtol=1e-15)


def u_value(profile: RadialProfile, N: int, r: float) -> float:
    """Capacity potential ``u(r)``; ``inf`` when the integral diverges at 0."""
    if r < 0 or r > profile.support_measure * (1 + 1e-15):
        raise ValueError("need 0 <= r <= support measure")
    if r == 0:
        res = lorentz_norm(profile, LorentzIndex(N, 1))
        if res.status == "inconclusive":
            raise InconclusiveError("u(0) could not be settled")
        return float(res.value)
    return float(_u_log(profile, N, math.log(r)))


# --------------------------------------------------------------------------
# bumps


@dataclass(frozen=True)
class BumpSpec:
    """Request for a bump at ``center`` inside ``B(center, eps)``.

    ``norm_budget`` bounds the ``L^{N,q}`` norm of the Lip field.
    """

    center: tuple
    eps: float
    tau: float
    N: int
    profile: RadialProfile
    norm_budget: float
    q: float = 2.0

    def __post_init__(self):
        center = tuple(Dyadic.coerce(c) for c in self.center)
        object.__setattr__(self, "center", center)
        if len(center) != self.N or self.N < 2:
            raise ValueError("center must have N >= 2 coordinates")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 <= self.tau <= 1:
            raise ValueError("tau must lie in [0, 1]")
        if not self.norm_budget > 0:
            raise ValueError("norm budget must be positive")
        LorentzIndex(self.N, self.q)

    @property
    def index(self) -> LorentzIndex:
        return LorentzIndex(self.N, self.q)


@dataclass(frozen=True)
class Bump:
    spec: BumpSpec
    lam: float
    Lam: float
    C_N: float
    u_inner: float
    u_outer: float
    log_delta: object  # mpmath.mpf; the radius itself may not be representable
    log_t_outer: float
    norm_bound: float
    verified_norm: Optional[float] = None
    _log_omega: float = field(default=0.0, repr=False)

    @property
    def tau(self) -> float:
        return self.spec.tau

    @property
    def delta(self) -> float:
        """Inner radius as a float (0.0 once it underflows)."""
        return float(mpmath.exp(self.log_delta))

    @property
    def center_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.spec.center])

    def translated(self, center) -> "Bump":
        spec = BumpSpec(center, self.spec.eps, self.spec.tau, self.spec.N, self.spec.profile,
                        self.spec.norm_budget, self.spec.q)
        return Bump(spec, self.lam, self.Lam, self.C_N, self.u_inner, self.u_outer,
                    self.log_delta, self.log_t_outer, self.norm_bound, self.verified_norm,
                    self._log_omega)

    # radial evaluation in log-radius ------------------------------------

    def _log_t(self, log_rho):
        return self._log_omega + self.spec.N * log_rho

    def value_at_log_radius(self, log_rho):
        """phi at distance ``exp(log_rho)`` from the center (vectorized)."""
        tau = self.spec.tau
        log_rho = np.asarray(log_rho, dtype=float)
        out = np.zeros(log_rho.shape)
        log_t = self._log_t(log_rho)
        live = log_t < self.log_t_outer
        out[np.isneginf(log_rho)] = tau
        live &= ~np.isneginf(log_rho)
        if np.any(live):
            u = np.asarray(_u_log(self.spec.profile, self.spec.N, log_t[live]), dtype=float)
            vals = np.where(u >= self.u_inner, tau, tau * (self.lam * u - self.Lam))
            out[live] = np.clip(vals, 0.0, tau)
        return out if out.ndim else float(out)

    def lip_at_log_radius(self, log_rho):
        """Lip phi at distance ``exp(log_rho)`` (vectorized)."""
        log_rho = np.asarray(log_rho, dtype=float)
        out = np.zeros(log_rho.shape)
        if self.spec.tau == 0:
            return out if out.ndim else 0.0
        log_t = self._log_t(log_rho)
        live = (log_t <= self.log_t_outer) & ~np.isneginf(log_rho)
        if np.any(live):
            lt = log_t[live]
            u = np.asarray(_u_log(self.spec.profile, self.spec.N, lt), dtype=float)
            with np.errstate(over="ignore"):
                g = np.exp(np.asarray(self.spec.profile.log_g(lt), dtype=float))
            out[live] = np.where(u > self.u_inner, 0.0,
                                 self.spec.tau * self.C_N * self.lam * g)
        return out if out.ndim else float(out)

    def log_lip_at_log_radius(self, log_rho: float) -> float:
        """``log Lip phi`` at one radius; ``-inf`` where the field vanishes."""
        if self.spec.tau == 0 or log_rho == -math.inf:
            return -math.inf
        log_t = self._log_t(log_rho)
        if log_t > self.log_t_outer or _u_log(self.spec.profile, self.spec.N, log_t) > self.u_inner:
            return -math.inf
        return (math.log(self.spec.tau) + math.log(self.C_N) + math.log(self.lam)
                + float(self.spec.profile.log_g(log_t)))

    def _log_radius(self, points):
        pts = np.asarray(points, dtype=float)
        diff = pts - self.center_float
        with np.errstate(divide="ignore"):
            return np.log(np.sqrt(np.sum(diff * diff, axis=-1)))

    def values(self, points) -> np.ndarray:
        """phi on an ``(..., N)`` float array of points."""
        return self.value_at_log_radius(self._log_radius(points))

    def lip(self, points) -> np.ndarray:
        """Lip phi on an ``(..., N)`` float array of points."""
        return self.lip_at_log_radius(self._log_radius(points))

    def to_dict(self) -> dict:
        return {
            "center": [str(c) for c in self.spec.center],
            "N": self.spec.N,
            "eps": self.spec.eps,
            "tau": self.spec.tau,
            "q": self.spec.q,
            "norm_budget": self.spec.norm_budget,
            "profile": self.spec.profile.to_dict(),
            "delta": self.delta,
            "log_delta": mpmath.nstr(self.log_delta, 17),
            "lambda": self.lam,
            "Lambda": self.Lam,
            "C_N": self.C_N,
            "u_inner": self.u_inner,
            "u_outer": self.u_outer,
            "norm_bound": self.norm_bound,
            "verified_norm": self.verified_norm,
        }


def _log_distance(center: Sequence[Dyadic], x) -> float:
    """log |x - center|, exact for dyadic input so tiny offsets survive."""
    try:
        xs = [Dyadic.coerce(c) for c in x]
    except (TypeError, ValueError):
        xs = None
    if xs is not None:
        sq = Dyadic(0)
        for xi, ci in zip(xs, center):
            d = xi - ci
            sq = sq + d * d
        return -math.inf if sq.num == 0 else 0.5 * sq.log()
    diff = np.asarray(x, dtype=float) - np.array([float(c) for c in center])
    rho = math.hypot(*diff)
    return -math.inf if rho == 0 else math.log(rho)


def eval_bump(b: Bump, x) -> float:
    """Value of the bump at point ``x`` (dyadic or float coordinates)."""
    return float(b.value_at_log_radius(_log_distance(b.spec.center, x)))


def bump_lip(b: Bump, x) -> float:
    """Pointwise Lipschitz constant of the bump at ``x``."""
    return float(b.lip_at_log_radius(_log_distance(b.spec.center, x)))


def lip_field_norm(b: Bump, idx: Optional[LorentzIndex] = None) -> float:
    """Lorentz norm of ``x -> bump_lip(b, x)`` by polar quadrature.

    Independent of the rearrangement identity used in :func:`make_bump`:
    the field is radially nonincreasing on the annulus, so its
    rearrangement at ``s = Omega_N (rho^N - delta^N)`` is its value at
    radius ``rho``, and the norm integral is taken over ``log rho``.
    """
    idx = idx or b.spec.index
    if b.spec.tau == 0:
        return 0.0
    N, Q, q = b.spec.N, idx.Q, idx.q
    prof = b.spec.profile
    log_delta = float(b.log_delta)
    top = (b.log_t_outer - b._log_omega) / N
    log_scale = math.log(b.spec.tau * b.C_N * b.lam)
    log_N = math.log(N)

    def integrand(ell):
        # (s^(1/Q) Lip)^q ds/s with ds = N Omega rho^N dlog(rho); written around
        # t = Omega rho^N so the huge log terms cancel analytically
        if ell <= log_delta:
            return 0.0
        log_t = b._log_t(ell)
        if _u_log(prof, N, log_t) > b.u_inner:
            return 0.0
        shrink = 0.0
        if math.isfinite(log_delta):
            shrink = math.log1p(-math.exp(N * (log_delta - ell)))
        w = float(prof.log_weighted_g(log_t, Q))
        return math.exp(q * (log_scale + w + shrink / Q) + log_N - shrink)

    # log-spaced breakpoints keep each piece well scaled for QUADPACK
    edges = [top]
    k = -1
    while k < 300:
        nxt = top - 10.0 ** k
        if nxt <= log_delta:
            break
        edges.append(nxt)
        k += 1
    pieces = list(zip(edges[1:], edges))
    pieces.append((log_delta if log_delta > -math.inf else -math.inf, edges[-1]))
    total = 0.0
    with warnings.catch_warnings():
        # roundoff notices near 1e-11 relative are expected on the smooth pieces
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in pieces:
            total += integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-11, limit=200)[0]
    return total ** (1.0 / q)


def make_bump(spec: BumpSpec, *, max_doublings: int = 1200, verify: bool = True) -> Bump:
    """Build a bump meeting ``spec.norm_budget``.

    Starting from ``delta = eps/4`` the potential gap
    ``u(Omega delta^N) - u(Omega (eps/2)^N) = 1/lam`` is doubled until
    ``tau * C_N * lam * ||g* on the annulus||`` fits the budget. Doubling
    the gap halves ``lam``; for log-type profiles that corresponds to
    squaring ``delta`` rather than halving it, which is what makes budgets
    like 1e-50 reachable at all.
    """
    N, prof = spec.N, spec.profile
    log_omega = math.log(unit_ball_volume(N))
    C = lip_constant(N)
    log_t1 = log_omega + N * math.log(spec.eps / 2)
    if log_t1 > prof.log_monotone_limit:
        raise ValueError("eps/2 exceeds the radius on which the profile is nonincreasing")
    u_out = float(_u_log(prof, N, log_t1))
    log_t_start = log_omega + N * math.log(spec.eps / 4)
    u_start = float(_u_log(prof, N, log_t_start))

    def build(gap, log_t0, bound):
        lam = 1.0 / gap
        log_delta = (mpmath.mpf(log_t0) - log_omega) / N
        return Bump(spec, lam, lam * u_out, C, u_out + gap, u_out, log_delta, log_t1, bound,
                    None, log_omega)

    if spec.tau == 0:
        return build(u_start - u_out, log_t_start, 0.0)

    trunc = TruncatedProfile(prof, log_t1)
    u0 = lorentz_norm(trunc, LorentzIndex(N, 1))
    if u0.status == "inconclusive":
        raise InconclusiveError("could not decide whether u(0) diverges")
    if u0.finite:
        raise NotDegenerateError("profile not capacity-degenerate: budget unreachable as delta->0")
    full = lorentz_norm(trunc, spec.index)
    if not full.finite:
        raise ValueError(f"profile is not in L^({N},{spec.q}) near 0: {full.status}")

    gap = u_start - u_out
    for _ in range(max_doublings):
        lam = 1.0 / gap
        log_t0 = _u_inverse_log(prof, N, u_out + gap)
        annulus = full.value
        if log_t0 - log_t1 > math.log(_SHIFT_RATIO_FLOOR):
            shifted = lorentz_norm(ShiftedProfile(prof, float(log_t0), log_t1), spec.index)
            if shifted.finite:
                annulus = min(annulus, shifted.value)
        bound = spec.tau * C * lam * annulus
        if bound <= spec.norm_budget:
            break
        gap *= 2.0
        if not math.isfinite(gap):
            break
    else:
        gap = math.inf
    if not math.isfinite(gap):
        raise NotDegenerateError("norm budget not reached before the potential gap overflowed")

    bump = build(gap, log_t0, bound)
    if verify:
        checked = lip_field_norm(bump)
        if checked > spec.norm_budget * (1 + 1e-6):
            raise RuntimeError(f"post-hoc Lip norm {checked} exceeds budget {spec.norm_budget}")
        bump = Bump(**{**bump.__dict__, "verified_norm": checked})
    return bump
