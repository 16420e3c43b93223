"""Grid and curve harness for the upper-gradient chaining argument.

Three computable steps are checked numerically on ``[-1, 1]^N``:

* the chaining estimate: split an arc-length parametrized path into ``n``
  equal pieces, pick in each piece a point where ``g`` is at most its
  average, and telescope the pointwise inequality between neighbours,
  ending at ``4 * int_gamma g``;
* the perturbed maximal function ``M_q g = sup_r (mean_{B(x,r)} g^q)^(1/q)``
  on a grid, with discrete balls made of the nodes within distance ``r``;
* the pointwise (Hajlasz-type) inequality
  ``|f(x) - f(y)| <= C |x - y| (M(x) + M(y))`` over sampled node pairs.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "GridField",
    "PolyCurve",
    "ChainReport",
    "chain_inequality",
    "segment_integral",
    "maximal_function",
    "random_pairs",
    "hajlasz_pair_check",
    "minimal_hajlasz_constant",
    "grid_lorentz_norm",
    "maximal_lorentz_ratio",
    "random_polyline",
    "sphere_breakpoints",
]


# fields ----------------------------------------------------------------------


@dataclass(frozen=True)
class GridField:
    """Values on the regular grid ``-1 + i h`` (``i = 0..n-1``, ``h = 2/(n-1)``) per axis."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < 1 or len(set(v.shape)) != 1 or v.shape[0] < 2:
            raise ValueError("grid must be square with at least 2 nodes per axis")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], n: int, N: int = 2) -> "GridField":
        """Sample ``func`` on an ``(..., N)`` array of grid nodes."""
        return cls(np.asarray(func(grid_points(n, N)), dtype=float))

    @property
    def N(self) -> int:
        return self.values.ndim

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def h(self) -> float:
        return 2.0 / (self.n - 1)

    def points(self) -> np.ndarray:
        return grid_points(self.n, self.N)

    def interpolate(self, pts) -> np.ndarray:
        """Piecewise multilinear interpolation at ``(..., N)`` points."""
        axis = np.linspace(-1.0, 1.0, self.n)
        interp = RegularGridInterpolator((axis,) * self.N, self.values, method="linear")
        pts = np.asarray(pts, dtype=float)
        return interp(np.clip(pts, -1.0, 1.0))

    def __call__(self, pts) -> np.ndarray:
        return self.interpolate(pts)

    def to_csv(self, path) -> None:
        """Rows ``i_0, ..., i_{N-1}, value``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"i_{d}" for d in range(self.N)] + ["value"])
            for idx in np.ndindex(self.values.shape):
                w.writerow(list(idx) + [repr(float(self.values[idx]))])

    @classmethod
    def from_csv(cls, path) -> "GridField":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        N = len(header) - 1
        idx = np.array([[int(c) for c in r[:N]] for r in body])
        vals = np.array([float(r[N]) for r in body])
        n = int(idx.max()) + 1
        out = np.full((n,) * N, np.nan)
        out[tuple(idx.T)] = vals
        if np.isnan(out).any():
            raise ValueError("CSV does not cover every grid node")
        return cls(out)


def grid_points(n: int, N: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, n)
    mesh = np.meshgrid(*([axis] * N), indexing="ij")
    return np.stack(mesh, axis=-1)


# curves ----------------------------------------------------------------------


@dataclass(frozen=True)
class PolyCurve:
    """Polygonal path through ``points`` with arc-length bookkeeping."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError("a curve needs at least two points")
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg == 0):
            raise ValueError("consecutive points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self._cum)

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    @property
    def vertex_params(self) -> np.ndarray:
        return self._cum

    def __call__(self, s) -> np.ndarray:
        """Arc-length parametrization, vectorized over ``s``."""
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        k = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self.points) - 2)
        t = (s - self._cum[k]) / (self._cum[k + 1] - self._cum[k])
        p0, p1 = self.points[k], self.points[k + 1]
        return p0 + t[..., None] * (p1 - p0)


def random_polyline(rng: np.random.Generator, N: int = 2, vertices=(2, 6), box: float = 1.0,
                    grid_exp: int = 12) -> PolyCurve:
    """Random polyline with dyadic vertices in ``[-box, box]^N``."""
    m = int(rng.integers(vertices[0], vertices[1] + 1))
    scale = 2**grid_exp
    while True:
        pts = rng.integers(-int(box * scale), int(box * scale) + 1, size=(m, N)) / scale
        if np.all(np.linalg.norm(np.diff(pts, axis=0), axis=1) > 0):
            return PolyCurve(pts)


def sphere_breakpoints(center, radii) -> Callable:
    """Breakpoint hook: parameters in ``(0, 1)`` where a segment crosses the given spheres."""
    c = np.asarray(center, dtype=float)
    radii = [float(r) for r in radii]

    def hook(p0, p1):
        d = p1 - p0
        a = float(d @ d)
        b = 2.0 * float(d @ (p0 - c))
        out = [-b / (2 * a)]  # closest approach
        for r in radii:
            cc = float((p0 - c) @ (p0 - c)) - r * r
            disc = b * b - 4 * a * cc
            if disc >= 0:
                sq = math.sqrt(disc)
                out += [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
        return [t for t in out if 0.0 < t < 1.0]

    return hook


# integrals -------------------------------------------------------------------


def _batched_midpoint(g, p0s, p1s, *, rtol=1e-9, max_points=1 << 18, start=8):
    """Composite midpoint rule on many segments at once.

    Each segment doubles its own sample count until two successive
    refinements agree to ``rtol`` relative. Returns per-segment integrals,
    the minimum sample of the final refinement with its location (which is
    at most the segment average), and convergence flags.
    """
    p0s, p1s = np.atleast_2d(p0s).astype(float), np.atleast_2d(p1s).astype(float)
    P, N = p0s.shape
    lengths = np.linalg.norm(p1s - p0s, axis=1)
    out = np.zeros(P)
    best = np.zeros(P)
    best_pt = p0s.copy()
    ok = np.ones(P, dtype=bool)

    def sample(rows, m):
        t = (np.arange(m) + 0.5) / m
        d = p1s[rows] - p0s[rows]
        pts = p0s[rows][:, None, :] + t[None, :, None] * d[:, None, :]
        vals = np.asarray(g(pts.reshape(-1, N)), dtype=float).reshape(len(rows), m)
        return vals, pts

    rows = np.arange(P)
    m = start
    vals, pts = sample(rows, m)
    prev = lengths[rows] * vals.mean(axis=1)
    while rows.size:
        m *= 2
        if m > max_points:
            done = np.ones(rows.size, dtype=bool)
            ok[rows] = False
            cur = prev
        else:
            vals, pts = sample(rows, m)
            with np.errstate(invalid="ignore"):
                cur = lengths[rows] * vals.mean(axis=1)
                done = (np.abs(cur - prev) <= rtol * np.abs(cur)) | ((cur == 0) & (prev == 0))
            done |= ~np.isfinite(cur)
        idx = rows[done]
        out[idx] = cur[done]
        j = np.argmin(vals[done], axis=1)
        best[idx] = vals[done][np.arange(idx.size), j]
        best_pt[idx] = pts[done][np.arange(idx.size), j]
        rows, prev = rows[~done], cur[~done]
    return out, best, best_pt, ok


def segment_integral(g, p0, p1, *, rtol: float = 1e-9) -> tuple[float, bool]:
    """Composite midpoint rule for ``int_{[p0, p1]} g ds``; returns ``(value, converged)``."""
    val, _, _, ok = _batched_midpoint(g, np.asarray(p0, float)[None], np.asarray(p1, float)[None],
                                      rtol=rtol)
    return float(val[0]), bool(ok[0])


@dataclass
class ChainReport:
    n: int
    length: float
    lhs: float
    chain_lhs: float
    telescoped: float
    averaged: float
    integral: float
    bound: float
    slack: float
    step_violations: int
    converged: bool
    vacuous: bool
    passed: bool
    points: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("points")
        return d


def chain_inequality(f: Callable, g: Callable, curve: PolyCurve, n: int = 64, *,
                     breakpoints: Optional[Callable] = None, rtol: float = 1e-9) -> ChainReport:
    """Reproduce the ``4 g`` chaining estimate along ``curve``.

    ``f`` and ``g`` map ``(k, N)`` point arrays to values (a :class:`GridField`
    works for either). ``breakpoints(p0, p1)`` may return segment parameters
    where ``g`` jumps; pieces are split there so the midpoint rule converges.
    The reported ``bound`` is ``4 * int_gamma g``; ``telescoped`` is the sum of
    ``|x_k - x_{k+1}| (g(x_k) + g(x_{k+1}))`` over consecutive chosen points
    and ``averaged`` the proof's next line with piece averages.
    """
    if n < 1:
        raise ValueError("need at least one piece")
    L = curve.length
    cuts_s = set(np.linspace(0.0, L, n + 1).tolist()) | set(curve.vertex_params.tolist())
    if breakpoints is not None:
        cum = curve.vertex_params
        for k in range(len(curve.points) - 1):
            seg_len = cum[k + 1] - cum[k]
            for t in breakpoints(curve.points[k], curve.points[k + 1]):
                cuts_s.add(float(cum[k] + t * seg_len))
    cuts = np.array(sorted(cuts_s))
    cuts = cuts[np.concatenate([[True], np.diff(cuts) > 0])]

    mids = 0.5 * (cuts[:-1] + cuts[1:])
    owner = np.minimum((mids / L * n).astype(int), n - 1)
    ends = curve(np.stack([cuts[:-1], cuts[1:]], axis=1))
    vals, mins, min_pts, ok = _batched_midpoint(g, ends[:, 0], ends[:, 1], rtol=rtol)
    converged = bool(ok.all())
    piece_int = np.bincount(owner, weights=vals, minlength=n)
    best_val = np.full(n, math.inf)
    best_pt = np.zeros((n, curve.points.shape[1]))
    for k, v, pt in zip(owner, mins, min_pts):
        if v < best_val[k]:
            best_val[k], best_pt[k] = v, pt

    ends = curve(np.array([0.0, L]))
    fe = np.asarray(f(ends), dtype=float)
    lhs = float(abs(fe[1] - fe[0]))
    integral = float(piece_int.sum())
    if not math.isfinite(integral):
        return ChainReport(n, L, lhs, math.nan, math.inf, math.inf, math.inf, math.inf, math.inf,
                           0, converged, True, True, best_pt)

    fx = np.asarray(f(best_pt), dtype=float)
    step = np.linalg.norm(np.diff(best_pt, axis=0), axis=1)
    jumps = np.abs(np.diff(fx))
    gsum = best_val[:-1] + best_val[1:]
    telescoped = float(np.sum(step * gsum))
    avg = piece_int / (L / n)
    averaged = float(np.sum((2 * L / n) * (avg[:-1] + avg[1:])))
    bound = 4.0 * integral
    chain_lhs = float(abs(fx[-1] - fx[0]))
    passed = lhs <= bound and telescoped <= bound * (1 + 1e-12)
    slack = bound / lhs if lhs > 0 else math.inf
    return ChainReport(n, L, lhs, chain_lhs, telescoped, averaged, integral, bound, slack,
                       int(np.sum(jumps > step * gsum)), converged, False, passed, best_pt)


# maximal function --------------------------------------------------------------


def _ball_sums(arr: np.ndarray, r_cells: float) -> np.ndarray:
    """Sum of ``arr`` over the nodes within ``r_cells`` (Euclidean, in cells) of each node.

    Nodes outside the grid contribute zero. The ball is a stack of windows
    along the last axis, each summed from a prefix sum, so the cost per node
    is ``O(r^(N-1))`` rather than ``O(r^N)``.
    """
    N = arr.ndim
    m = int(math.floor(r_cells + 1e-9))
    n = arr.shape[0]
    padded = np.pad(arr, m)
    csum = np.concatenate([np.zeros(padded.shape[:-1] + (1,)), np.cumsum(padded, axis=-1)], axis=-1)
    out = np.zeros_like(arr, dtype=float)
    lead = itertools.product(range(-m, m + 1), repeat=N - 1)
    last = np.arange(n) + m
    for d in lead:
        rem = r_cells * r_cells + 1e-9 - sum(v * v for v in d)
        if rem < 0:
            continue
        w = int(math.floor(math.sqrt(rem)))
        sl = tuple(slice(m + v, m + v + n) for v in d)
        rows = csum[sl]
        out += rows[..., last + w + 1] - rows[..., last - w]
    return np.maximum(out, 0.0)


def maximal_function(g: GridField, q: float = 1.0, radii: Sequence[float] = ()) -> GridField:
    """Discrete perturbed maximal function over the given radii.

    Balls are the grid nodes within Euclidean distance ``r`` that lie in the
    domain; the one-node ball (radius ``h/2``) is always included, so the
    result dominates ``g`` at every node.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("radii must be nonempty")
    if q < 1:
        raise ValueError("q must be at least 1")
    diam = 2.0 * math.sqrt(g.N)
    if any(r <= 0 or r > diam for r in radii):
        raise ValueError("radii must lie in (0, diam]")
    gq = g.values**q
    ones = np.ones_like(gq)
    best = gq.copy()
    for r in sorted(set(radii)):
        s = _ball_sums(gq, r / g.h)
        c = _ball_sums(ones, r / g.h)
        np.maximum(best, s / c, out=best)
    return GridField(best ** (1.0 / q))


def _pair_arrays(field_: GridField, pairs):
    pairs = np.asarray(pairs, dtype=np.int64)
    pts = field_.points().reshape(-1, field_.N)
    return pairs[:, 0], pairs[:, 1], pts


def random_pairs(field_: GridField, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` node pairs (flat indices) with distinct endpoints, uniform otherwise."""
    size = field_.values.size
    out = np.empty((0, 2), dtype=np.int64)
    while len(out) < count:
        draw = rng.integers(0, size, (count, 2))
        out = np.concatenate([out, draw[draw[:, 0] != draw[:, 1]]])
    return out[:count]


def hajlasz_pair_check(f: GridField, M: GridField, pairs, C: float) -> list:
    """Node pairs ``(i, j)`` (flat indices) violating ``|f_i - f_j| <= C |x_i - x_j| (M_i + M_j)``."""
    i, j, pts = _pair_arrays(f, pairs)
    fv, mv = f.values.ravel(), M.values.ravel()
    lhs = np.abs(fv[i] - fv[j])
    rhs = C * np.linalg.norm(pts[i] - pts[j], axis=1) * (mv[i] + mv[j])
    bad = np.nonzero(lhs > rhs)[0]
    return [(int(i[b]), int(j[b]), float(lhs[b]), float(rhs[b])) for b in bad]


def minimal_hajlasz_constant(f: GridField, M: GridField, pairs) -> float:
    """Smallest ``C`` for which :func:`hajlasz_pair_check` reports nothing."""
    i, j, pts = _pair_arrays(f, pairs)
    fv, mv = f.values.ravel(), M.values.ravel()
    lhs = np.abs(fv[i] - fv[j])
    den = np.linalg.norm(pts[i] - pts[j], axis=1) * (mv[i] + mv[j])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lhs == 0, 0.0, lhs / den)
    return float(ratio.max()) if ratio.size else 0.0


# Lorentz norms of grid data ------------------------------------------------------


def grid_lorentz_norm(values, cell: float, Q: float, q: float = 1.0) -> float:
    """``||.||_{Q,q}`` of the step function taking each value on a cell of measure ``cell``.

    Same closed form as the exact step-function norm, in floating point.
    """
    v = np.sort(np.abs(np.asarray(values, dtype=float)).ravel())[::-1]
    v = v[v > 0]
    if v.size == 0:
        return 0.0
    b = cell * np.arange(v.size + 1)
    w = (Q / q) * np.diff(b ** (q / Q))
    return float(np.sum(v**q * w) ** (1.0 / q))


def maximal_lorentz_ratio(g: GridField, q: float = 1.0, radii: Sequence[float] = (),
                          Q: Optional[float] = None) -> float:
    """Observed ``||M_q g||_{Q,1} / ||g||_{Q,1}`` on the grid."""
    Q = float(g.N if Q is None else Q)
    M = maximal_function(g, q, radii)
    cell = g.h**g.N
    den = grid_lorentz_norm(g.values, cell, Q, 1.0)
    return grid_lorentz_norm(M.values, cell, Q, 1.0) / den if den > 0 else 0.0
