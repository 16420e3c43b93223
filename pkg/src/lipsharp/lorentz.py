"""Distribution functions, nonincreasing rearrangements and Lorentz norms.

Step functions live on [0, inf) with exact rational breakpoints, so the
equimeasurability identities hold exactly. Radial profiles are the
nonincreasing generators g* used by the capacity bumps; they are
evaluated in log coordinates (``log t``) because the radii involved in
the construction underflow any float long before the interesting
behaviour of the profile shows up.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from scipy import integrate

__all__ = [
    "LorentzIndex",
    "NormResult",
    "StepFunction",
    "RadialProfile",
    "IndicatorProfile",
    "LogProfile",
    "CallableProfile",
    "TruncatedProfile",
    "ShiftedProfile",
    "distribution_function",
    "rearrangement",
    "lorentz_norm",
    "radial_map_norm",
    "profile_from_dict",
    "DIVERGENCE_THRESHOLD",
    "InconclusiveError",
    "unit_ball_volume",
]

DIVERGENCE_THRESHOLD = 1e6
QUAD_TOL = 1e-9
_LN10 = math.log(10.0)


class InconclusiveError(RuntimeError):
    """Quadrature did not converge within its budget."""


@dataclass(frozen=True)
class LorentzIndex:
    """Exponents (Q, q) with 1 <= q <= Q < inf."""

    Q: float
    q: float

    def __post_init__(self):
        if not (1 <= self.q <= self.Q < math.inf):
            raise ValueError(f"Lorentz index needs 1 <= q <= Q < inf, got Q={self.Q}, q={self.q}")


@dataclass(frozen=True)
class NormResult:
    """A Lorentz norm with its status.

    ``status`` is ``"finite"``, ``"divergent"`` (value is inf) or
    ``"inconclusive"`` (value is nan; quadrature failed to settle).
    """

    value: float
    status: str = "finite"
    error: float = 0.0
    certificate: Optional[dict] = None

    @property
    def finite(self) -> bool:
        return self.status == "finite"

    @property
    def divergent(self) -> bool:
        return self.status == "divergent"

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        out = {"status": self.status, "value": None if not self.finite else self.value,
               "error": self.error}
        if self.certificate:
            out["certificate"] = self.certificate
        return out


# --------------------------------------------------------------------------
# step functions


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError("step function data must be finite")
    return Fraction(x)


class StepFunction:
    """Piecewise constant function on [0, inf), zero past the last breakpoint.

    Piece ``i`` is ``[breakpoints[i], breakpoints[i+1])`` with value
    ``values[i]``. All data is held as exact fractions.
    """

    __slots__ = ("breakpoints", "values", "rearranged")

    def __init__(self, breakpoints: Sequence, values: Sequence, rearranged: bool = False):
        bps = tuple(_frac(b) for b in breakpoints)
        vals = tuple(_frac(v) for v in values)
        if not bps or bps[0] != 0:
            raise ValueError("breakpoints must start at 0")
        if len(vals) != len(bps) - 1:
            raise ValueError("need exactly one value per interval")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(v < 0 for v in vals):
            raise ValueError("values must be nonnegative")
        if rearranged and any(v1 > v0 for v0, v1 in zip(vals, vals[1:])):
            raise ValueError("a rearranged step function must be nonincreasing")
        self.breakpoints = bps
        self.values = vals
        self.rearranged = rearranged

    @classmethod
    def from_pieces(cls, lengths: Sequence, values: Sequence) -> "StepFunction":
        bps = [Fraction(0)]
        for ln in lengths:
            bps.append(bps[-1] + _frac(ln))
        return cls(bps, values)

    @classmethod
    def indicator(cls, measure) -> "StepFunction":
        return cls([0, measure], [1], rearranged=True)

    @property
    def lengths(self):
        return [b1 - b0 for b0, b1 in zip(self.breakpoints, self.breakpoints[1:])]

    def __call__(self, t):
        t = _frac(t)
        if t < 0:
            raise ValueError("step functions live on [0, inf)")
        for b1, v in zip(self.breakpoints[1:], self.values):
            if t < b1:
                return v
        return Fraction(0)

    def scaled(self, c) -> "StepFunction":
        c = abs(_frac(c))
        return StepFunction(self.breakpoints, [c * v for v in self.values], self.rearranged)

    def _canonical(self):
        pieces = []
        for ln, v in zip(self.lengths, self.values):
            if pieces and pieces[-1][1] == v:
                pieces[-1][0] += ln
            else:
                pieces.append([ln, v])
        while pieces and pieces[-1][1] == 0:
            pieces.pop()
        return tuple((ln, v) for ln, v in pieces)

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())

    def __repr__(self):
        bps = ", ".join(str(b) for b in self.breakpoints)
        vals = ", ".join(str(v) for v in self.values)
        return f"StepFunction([{bps}], [{vals}], rearranged={self.rearranged})"

    def to_dict(self) -> dict:
        return {
            "type": "step",
            "breakpoints": [str(b) for b in self.breakpoints],
            "values": [str(v) for v in self.values],
            "rearranged": self.rearranged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StepFunction":
        return cls([Fraction(b) for b in data["breakpoints"]],
                   [Fraction(v) for v in data["values"]],
                   bool(data.get("rearranged", False)))


def distribution_function(f: StepFunction, alpha) -> Fraction:
    """Measure of ``{t : f(t) > alpha}``."""
    alpha = _frac(alpha)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    return sum((ln for ln, v in zip(f.lengths, f.values) if v > alpha), Fraction(0))


def rearrangement(f: StepFunction) -> StepFunction:
    """Nonincreasing rearrangement ``f*`` of a step function."""
    pieces = sorted(((v, ln) for ln, v in zip(f.lengths, f.values) if v > 0),
                    key=lambda p: p[0], reverse=True)
    merged: list = []
    for v, ln in pieces:
        if merged and merged[-1][0] == v:
            merged[-1][1] += ln
        else:
            merged.append([v, ln])
    bps = [Fraction(0)]
    for _, ln in merged:
        bps.append(bps[-1] + ln)
    return StepFunction(bps, [v for v, _ in merged], rearranged=True)


def _step_norm(f: StepFunction, idx: LorentzIndex) -> NormResult:
    fs = f if f.rearranged else rearrangement(f)
    Q, q = idx.Q, idx.q
    p = q / Q
    terms = []
    for b0, b1, v in zip(fs.breakpoints, fs.breakpoints[1:], fs.values):
        if v == 0:
            continue
        terms.append(float(v) ** q * (Q / q) * (float(b1) ** p - float(b0) ** p))
    total = math.fsum(terms)
    return NormResult(total ** (1.0 / q) if total > 0 else 0.0)


# --------------------------------------------------------------------------
# radial profiles


def _is_mp(x) -> bool:
    return isinstance(x, mpmath.mpf)


class RadialProfile:
    """A nonincreasing function g* on (0, m], zero beyond ``m``.

    Subclasses implement ``log_g(log_t)``. Closed forms are optional hints:
    ``u_closed`` for the capacity potential, ``u_inverse_closed`` for its
    inverse, and ``lorentz_partial_closed`` for Lorentz partial integrals.
    Any of them may return ``None`` to fall back on quadrature.
    """

    name = "custom"

    def __init__(self, log_measure: float):
        self.log_measure = float(log_measure)

    @property
    def log_monotone_limit(self) -> float:
        """``log t`` up to which g* is known to be nonincreasing."""
        return self.log_measure

    @property
    def support_measure(self) -> float:
        return math.exp(self.log_measure)

    def log_g(self, log_t):
        raise NotImplementedError

    def log_weighted_g(self, log_t, Q: float):
        """``log(t^(1/Q) g*(t))``; overridden where the two terms cancel."""
        return log_t / Q + self.log_g(log_t)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = (t > 0) & (t <= self.support_measure)
        with np.errstate(divide="ignore"):
            out[inside] = np.exp(self.log_g(np.log(t[inside])))
        out[t <= 0] = np.inf
        return out if out.ndim else float(out)

    def u_closed(self, log_r, dim: int):
        return None

    def u_inverse_closed(self, value, dim: int):
        return None

    def lorentz_partial_closed(self, log_r, idx: LorentzIndex):
        return None

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"type": "profile", "name": self.name, "params": self.params()}

    def is_monotone(self, n: int = 2001, log_upper: Optional[float] = None) -> bool:
        """Spot-check monotonicity on a log-spaced grid over (0, exp(log_upper)]."""
        top = self.log_measure if log_upper is None else min(log_upper, self.log_measure)
        ell = top - np.linspace(0.0, 700.0, n)
        vals = np.array([float(self.log_g(x)) for x in ell])
        return bool(np.all(np.diff(vals) >= -1e-12 * np.maximum(1.0, np.abs(vals[1:]))))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


class IndicatorProfile(RadialProfile):
    """Constant ``height`` on (0, measure]; bounded, so never capacity-degenerate."""

    name = "indicator"

    def __init__(self, height: float = 1.0, measure: float = 1.0):
        if height < 0 or measure <= 0:
            raise ValueError("height must be nonnegative and measure positive")
        super().__init__(math.log(measure))
        self.height = float(height)

    def log_g(self, log_t):
        lh = math.log(self.height) if self.height > 0 else -math.inf
        if isinstance(log_t, np.ndarray):
            return np.full(log_t.shape, lh)
        return lh

    def u_closed(self, log_r, dim):
        if _is_mp(log_r):
            log_r = float(log_r)
        r_pow = 0.0 if log_r == -math.inf else np.exp(np.asarray(log_r) / dim)
        val = self.height * dim * (math.exp(self.log_measure / dim) - r_pow)
        return val if np.ndim(val) else float(val)

    def lorentz_partial_closed(self, log_r, idx):
        p = idx.q / idx.Q
        log_r = float(log_r)
        r_pow = 0.0 if log_r == -math.inf else math.exp(p * log_r)
        return self.height ** idx.q * (idx.Q / idx.q) * (math.exp(p * self.log_measure) - r_pow)

    def params(self):
        return {"height": self.height, "measure": self.support_measure}


class LogProfile(RadialProfile):
    """``g*(t) = t**(-1/dim) * log(e/t)**(-beta)`` on (0, 1].

    For ``beta = 1`` this lies in L^{dim,q} for every q > 1 but not in
    L^{dim,1}: the capacity potential is ``u(r) = log log(e/r)``, which
    diverges at 0 and so makes points capacity-null.

    The function is nonincreasing only for ``t <= exp(1 - beta*dim)``;
    above that it rises towards ``g(1) = 1``. Bumps only sample the
    monotone part, and norms with ``q == Q`` do not depend on the ordering.
    """

    name = "log"

    def __init__(self, dim: int = 2, beta: float = 1.0):
        if dim < 1 or beta <= 0:
            raise ValueError("need dim >= 1 and beta > 0")
        super().__init__(0.0)
        self.dim = int(dim)
        self.beta = float(beta)

    def log_g(self, log_t):
        if _is_mp(log_t):
            return -log_t / self.dim - self.beta * mpmath.log(1 - log_t)
        if isinstance(log_t, np.ndarray):
            return -log_t / self.dim - self.beta * np.log1p(-log_t)
        return -log_t / self.dim - self.beta * math.log1p(-log_t)

    @staticmethod
    def _power_integral(S, p):
        """Return the integral of s**-p over [1, S]."""
        if _is_mp(S):
            if S == mpmath.inf:
                return mpmath.inf if p <= 1 else mpmath.mpf(1) / (p - 1)
            return mpmath.log(S) if p == 1 else (S ** (1 - p) - 1) / (1 - p)
        if p == 1:
            return np.log(S)
        with np.errstate(over="ignore"):
            return (np.power(S, 1 - p) - 1) / (1 - p)

    @property
    def log_monotone_limit(self):
        return min(0.0, 1.0 - self.beta * self.dim)

    def log_weighted_g(self, log_t, Q):
        power = 1.0 / Q - 1.0 / self.dim
        if _is_mp(log_t):
            return power * log_t - self.beta * mpmath.log(1 - log_t)
        lead = power * log_t if power != 0 else 0.0
        if isinstance(log_t, np.ndarray):
            return lead - self.beta * np.log1p(-log_t)
        return lead - self.beta * math.log1p(-log_t)

    def u_closed(self, log_r, dim):
        if dim != self.dim:
            return None
        if _is_mp(log_r):
            return self._power_integral(1 - log_r, self.beta)
        if np.ndim(log_r) == 0 and log_r == -math.inf:
            return math.inf if self.beta <= 1 else 1.0 / (self.beta - 1)
        val = self._power_integral(1 - np.asarray(log_r, dtype=float), self.beta)
        return val if np.ndim(val) else float(val)

    def u_inverse_closed(self, value, dim):
        """Return ``log r`` (an mpf) with ``u(r) = value``."""
        if dim != self.dim:
            return None
        v = mpmath.mpf(value)
        b = self.beta
        if b == 1:
            S = mpmath.exp(v)
        elif b < 1:
            S = (1 + (1 - b) * v) ** (1 / (1 - b))
        else:
            base = 1 - (b - 1) * v
            if base <= 0:
                return -mpmath.inf
            S = base ** (-1 / (b - 1))
        return 1 - S

    def lorentz_partial_closed(self, log_r, idx):
        if idx.Q != self.dim:
            return None
        p = self.beta * idx.q
        if _is_mp(log_r) or log_r == -math.inf:
            return self._power_integral(1 - mpmath.mpf(log_r), p)
        return float(self._power_integral(1.0 - log_r, p))

    def params(self):
        return {"dim": self.dim, "beta": self.beta}


class CallableProfile(RadialProfile):
    """Profile from a user function; everything goes through quadrature.

    Give ``log_func(log_t) -> log g*(e**log_t)`` when the profile must be
    evaluated below float range; otherwise ``func(t)`` is used and points
    whose ``t`` underflows are treated as unevaluable.
    """

    def __init__(self, func: Optional[Callable[[float], float]] = None, measure: float = 1.0,
                 name: str = "custom", log_func: Optional[Callable[[float], float]] = None):
        if func is None and log_func is None:
            raise ValueError("need func or log_func")
        super().__init__(math.log(measure))
        self.func = func
        self.log_func = log_func
        self.name = name

    def log_g(self, log_t):
        if isinstance(log_t, np.ndarray):
            return np.array([self.log_g(float(x)) for x in log_t])
        if self.log_func is not None:
            return float(self.log_func(float(log_t)))
        t = math.exp(float(log_t))
        if t == 0.0:
            raise OverflowError("profile argument underflows; supply log_func")
        val = self.func(t)
        return math.log(val) if val > 0 else -math.inf

    def params(self):
        return {"measure": self.support_measure}


class TruncatedProfile(RadialProfile):
    """The restriction of ``base`` to (0, exp(log_measure)]."""

    def __init__(self, base: RadialProfile, log_measure: float):
        if log_measure > base.log_measure:
            raise ValueError("truncation point lies beyond the base support")
        super().__init__(log_measure)
        self.base = base
        self.name = f"{base.name}|trunc"

    def log_g(self, log_t):
        return self.base.log_g(log_t)

    def log_weighted_g(self, log_t, Q):
        return self.base.log_weighted_g(log_t, Q)

    @property
    def log_monotone_limit(self):
        return min(self.log_measure, self.base.log_monotone_limit)

    def u_closed(self, log_r, dim):
        lo = self.base.u_closed(log_r, dim)
        if lo is None:
            return None
        return lo - self.base.u_closed(self.log_measure, dim)

    def u_inverse_closed(self, value, dim):
        off = self.base.u_closed(self.log_measure, dim)
        if off is None:
            return None
        return self.base.u_inverse_closed(value + off, dim)

    def lorentz_partial_closed(self, log_r, idx):
        lo = self.base.lorentz_partial_closed(log_r, idx)
        if lo is None:
            return None
        return lo - self.base.lorentz_partial_closed(self.log_measure, idx)

    def params(self):
        return {"base": self.base.to_dict(), "log_measure": self.log_measure}


class ShiftedProfile(RadialProfile):
    """``s -> g*(s + t0)`` on (0, t1 - t0]: the rearrangement of g* on an annulus."""

    def __init__(self, base: RadialProfile, log_t0: float, log_t1: float):
        if not log_t0 < log_t1 <= base.log_measure:
            raise ValueError("need t0 < t1 <= support")
        super().__init__(log_t1 + math.log1p(-math.exp(log_t0 - log_t1)))
        self.base = base
        self.log_t0 = float(log_t0)
        self.name = f"{base.name}|shift"

    def log_g(self, log_t):
        return self.base.log_g(np.logaddexp(log_t, self.log_t0))

    def params(self):
        return {"base": self.base.to_dict(), "log_t0": self.log_t0,
                "log_measure": self.log_measure}


def profile_from_dict(data: dict) -> RadialProfile:
    name = data.get("name", "log")
    params = dict(data.get("params", {}))
    if name == "log":
        return LogProfile(**params)
    if name == "indicator":
        return IndicatorProfile(**params)
    raise ValueError(f"unknown built-in profile {name!r}")


# --------------------------------------------------------------------------
# Lorentz norms of profiles


def _iterated_exp(x, k):
    for _ in range(k):
        x = mpmath.exp(x)
    return x


def _certify_closed_divergence(f: RadialProfile, idx: LorentzIndex, threshold: float):
    """Walk the shrinking schedule until the closed-form partial integral
    passes ``threshold``.

    Stage 0 uses r = m * 10**(-3i); each later stage exponentiates the
    distance ``-log(r/m)`` once more, so logarithmically slow divergence is
    still caught after a handful of steps.
    """
    for stage in range(4):
        for i in range(1, 101):
            L = _iterated_exp(mpmath.mpf(3 * i) * mpmath.log(10), stage)
            log_r = mpmath.mpf(f.log_measure) - L
            partial = f.lorentz_partial_closed(log_r, idx)
            if partial > threshold:
                return {"log_r": mpmath.nstr(log_r, 12), "partial": float(partial),
                        "stage": stage, "step": i}
    return None


def _quad(func, a, b, tol):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            val, err = integrate.quad(func, a, b, epsabs=tol, epsrel=1e-12, limit=400)
        except ArithmeticError:
            return math.nan, math.inf, True
    bad = any(issubclass(w.category, integrate.IntegrationWarning) for w in caught)
    return val, err, bad


def _profile_norm_quadrature(f: RadialProfile, idx: LorentzIndex, threshold: float,
                             tol: float) -> NormResult:
    Q, q = idx.Q, idx.q

    def integrand(ell):
        lw = float(f.log_weighted_g(ell, Q))
        if lw == -math.inf:
            return 0.0
        return math.exp(q * lw)

    top = f.log_measure
    partial = 0.0
    error = 0.0
    prev = top
    for i in range(1, 101):
        ell = top - 3 * i * _LN10
        val, err, bad = _quad(integrand, ell, prev, tol)
        if bad and err > tol:
            return NormResult(math.nan, "inconclusive", err)
        partial += val
        error += err
        prev = ell
        if partial > threshold:
            return NormResult(math.inf, "divergent",
                              certificate={"log_r": repr(ell), "partial": partial,
                                           "stage": 0, "step": i})
        if val < tol * 1e-3 and i > 2:
            break
    tail, err, bad = _quad(integrand, -math.inf, prev, tol)
    if bad or err > tol or not math.isfinite(tail):
        return NormResult(math.nan, "inconclusive", err)
    total = partial + tail
    error += err
    if total > threshold:
        return NormResult(math.inf, "divergent",
                          certificate={"log_r": "-inf", "partial": total, "stage": 0, "step": -1})
    value = total ** (1.0 / q)
    return NormResult(value, "finite", error * value / max(q * total, 1e-300))


def lorentz_norm(f, idx: LorentzIndex, *, threshold: float = DIVERGENCE_THRESHOLD,
                 tol: float = QUAD_TOL) -> NormResult:
    """Lorentz (Q, q) norm of a step function or of a profile taken as f*.

    Step functions use the closed form on each piece. Profiles use their
    closed-form partial integrals when available and otherwise adaptive
    quadrature in ``log t`` with absolute tolerance ``tol``. A norm is
    reported divergent once a partial integral over (r, m] exceeds
    ``threshold``; quadrature that fails to settle is ``inconclusive``.
    """
    if isinstance(f, StepFunction):
        return _step_norm(f, idx)
    if not isinstance(f, RadialProfile):
        raise TypeError("lorentz_norm takes a StepFunction or a RadialProfile")
    limit = f.lorentz_partial_closed(-math.inf, idx)
    if limit is None:
        return _profile_norm_quadrature(f, idx, threshold, tol)
    if limit == mpmath.inf or limit == math.inf:
        cert = _certify_closed_divergence(f, idx, threshold)
        return NormResult(math.inf, "divergent", certificate=cert or {"closed_form": "inf"})
    limit = float(limit)
    return NormResult(limit ** (1.0 / idx.q) if limit > 0 else 0.0)


def radial_map_norm(g: RadialProfile, N: int, idx: LorentzIndex, **kw) -> NormResult:
    """Norm of ``x -> g*(Omega_N |x|^N)`` on R^N.

    The radial map and g* are equimeasurable (the ball of volume t has
    radius ``(t/Omega_N)^(1/N)``), so the norm is that of g* itself.
    """
    if N < 2:
        raise ValueError("radial maps are taken in dimension N >= 2")
    return lorentz_norm(g, idx, **kw)


def unit_ball_volume(N: int) -> float:
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)
