"""Central regions: the upper level sets ``{x : depth(x) >= alpha}``.

Atomic measures get exact rational polygons.  Measures with continuous parts
get a certified radial approximation: along each direction from a deep point,
an inner point of depth at least ``alpha`` and an outer point of depth below
``alpha`` no more than ``eps`` apart.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull, QhullError

from .measure import Measure, Point, as_point, to_fraction
from . import depth as _depth

DEFAULT_DIRECTIONS = 256
DEFAULT_EPS = 1e-6
CORNER_FACTOR = 3.0


class RegionError(RuntimeError):
    """Exact region construction failed its own verification."""


# --------------------------------------------------------------------------
# region shapes


@dataclass(frozen=True)
class EmptyRegion:
    level: float | Fraction
    diagnostic: str = ""


@dataclass(frozen=True)
class Polygon:
    """Convex polygon with exact counterclockwise vertices (1 or 2 when degenerate)."""

    level: Fraction
    vertices: tuple[Point, ...]

    def contains(self, p: Sequence) -> bool:
        return polygon_contains(self.vertices, as_point(p))


@dataclass
class ApproxConvexBody:
    """Radially sampled convex body with a per-direction certificate.

    ``inner[k]`` has depth at least ``level`` and ``outer[k]`` has depth below
    it; both lie on the ray from ``center`` along ``directions[k]``.
    """

    level: float
    center: np.ndarray
    directions: np.ndarray
    inner: np.ndarray
    outer: np.ndarray
    tolerance: float
    corners: list = field(default_factory=list)

    def boundary(self) -> np.ndarray:
        """Inner samples with detected corners spliced in by angle."""
        pts = list(map(tuple, self.inner))
        pts += [tuple(c.location) for c in self.corners]
        P = np.array(pts)
        ang = np.arctan2(P[:, 1] - self.center[1], P[:, 0] - self.center[0])
        return P[np.argsort(ang, kind="stable")]


CentralRegion = Union[EmptyRegion, Polygon, ApproxConvexBody]


@dataclass(frozen=True)
class ExtremePoint:
    location: tuple
    confidence_radius: float
    turning: float


# --------------------------------------------------------------------------
# exact planar geometry


def _cross3(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> list[Point]:
    """Counterclockwise hull without collinear points (monotone chain)."""
    pts = sorted(set(as_point(p) for p in points))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross3(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross3(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:
        return hull[:1]
    return hull


def _simplify(poly: list) -> list:
    """Drop repeated and collinear vertices of a convex polygon."""
    out: list = []
    for p in poly:
        if not out or out[-1] != p:
            out.append(p)
    while len(out) > 1 and out[0] == out[-1]:
        out.pop()
    if len(out) <= 2:
        return out
    if all(_cross3(out[0], out[1], q) == 0 for q in out[2:]):
        # all collinear: keep the extreme pair
        return convex_hull(out)
    changed = True
    while changed and len(out) > 2:
        changed = False
        for i in range(len(out)):
            a, b, c = out[i - 1], out[i], out[(i + 1) % len(out)]
            if _cross3(a, b, c) == 0:
                del out[i]
                changed = True
                break
    return out


def clip_halfplane(poly: list, n, c) -> list:
    """Intersect a convex polygon with ``{y : <n, y> >= c}``, exactly."""
    if not poly:
        return []

    def f(p):
        return n[0] * p[0] + n[1] * p[1] - c

    if len(poly) == 1:
        return list(poly) if f(poly[0]) >= 0 else []
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp, fq = f(p), f(q)
        if fp >= 0:
            out.append(p)
        if (fp > 0 and fq < 0) or (fp < 0 and fq > 0):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return _simplify(out)


def polygon_contains(vertices: Sequence[Point], p: Point) -> bool:
    """Closed membership in a convex CCW polygon (points and segments allowed)."""
    v = list(vertices)
    if not v:
        return False
    if len(v) == 1:
        return v[0] == p
    if len(v) == 2:
        a, b = v
        if _cross3(a, b, p) != 0:
            return False
        return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    return all(_cross3(v[i], v[(i + 1) % len(v)], p) >= 0 for i in range(len(v)))


def is_convex_ccw(vertices: Sequence[Point]) -> bool:
    v = list(vertices)
    if len(v) < 3:
        return True
    return all(_cross3(v[i], v[(i + 1) % len(v)], v[(i + 2) % len(v)]) > 0 for i in range(len(v)))


def _line_intersection(p1, d1, p2, d2):
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0:
        return None
    t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / den
    return (p1[0] + t * d1[0], p1[1] + t * d1[1])


# --------------------------------------------------------------------------
# atomic measures


def _atomic_items(m: Measure) -> list[tuple[Point, Fraction]]:
    if not m.is_atomic:
        raise ValueError("exact regions need a purely atomic measure")
    return list(m.atoms().items())


def _pair_lines(atoms):
    """Distinct lines through two atoms, as (point, direction) with primitive direction."""
    seen = set()
    lines = []
    for (p, _), (q, _) in combinations(atoms, 2):
        d = (q[0] - p[0], q[1] - p[1])
        # canonical key: normal (a, b) and offset c, scaled so the first nonzero of (a, b) is 1
        a, b = -d[1], d[0]
        s = a if a != 0 else b
        a, b = a / s, b / s
        key = (a, b, a * p[0] + b * p[1])
        if key not in seen:
            seen.add(key)
            lines.append((p, d))
    return lines


def achieved_levels(m: Measure) -> list[Fraction]:
    """Every depth value taken anywhere in the plane, in increasing order.

    Depth is constant on the open cells, edges and vertices of the arrangement
    of lines through pairs of atoms.  Bounded faces attain their value at a
    vertex (regions are convex), unbounded ones have depth zero.
    """
    atoms = _atomic_items(m)
    pts = {p for p, _ in atoms}
    lines = _pair_lines(atoms)
    for (p1, d1), (p2, d2) in combinations(lines, 2):
        x = _line_intersection(p1, d1, p2, d2)
        if x is not None:
            pts.add(x)
    levels = {Fraction(0)}
    levels.update(_depth.depth_atomic_value(m, x) for x in pts)
    return sorted(levels)


def _candidate_halfplanes(rows, extended: bool):
    """Closed halfplanes ``<n, y> >= c`` (integer data) with the weight of their open complement."""
    out = []
    pts = [(x, y) for x, y, _ in rows]
    dirs = set()
    normals_at = []
    for (p, q) in combinations(pts, 2):
        d = (q[0] - p[0], q[1] - p[1])
        g = math.gcd(*d)
        d = (d[0] // g, d[1] // g)
        if d < (0, 0):
            d = (-d[0], -d[1])
        dirs.add(d)
        normals_at.append((p, (-d[1], d[0])))
    if extended:
        dirs |= {(1, 0), (0, 1)}
        normals_at += [(p, d) for p in pts for d in dirs]
    seen = set()
    for p, n in normals_at:
        for sgn in (1, -1):
            nn = (sgn * n[0], sgn * n[1])
            c = nn[0] * p[0] + nn[1] * p[1]
            if (nn, c) in seen:
                continue
            seen.add((nn, c))
            light = sum(w for x, y, w in rows if nn[0] * x + nn[1] * y < c)
            out.append((nn, c, light))
    return out


def _build_polygon(rows, alpha_scaled, extended):
    poly = convex_hull([(x, y) for x, y, _ in rows])
    for n, c, light in _candidate_halfplanes(rows, extended):
        if light < alpha_scaled:
            poly = clip_halfplane(poly, n, c)
            if not poly:
                break
    return poly


def central_region_atomic(m: Measure, alpha, verify_edges: bool = True) -> CentralRegion:
    """Exact central region of an atomic measure at level ``alpha > 0``.

    Every candidate halfplane used is a valid constraint, so the result always
    contains the true region; checking that every vertex is deep enough then
    proves equality.
    """
    alpha = to_fraction(alpha)
    if alpha <= 0:
        raise ValueError("level must be positive; the level-0 region is the whole plane")
    atoms = _atomic_items(m)
    level = alpha
    if not atoms:
        return EmptyRegion(alpha, "measure has no atoms")
    rows, L, W = _depth._atom_table(m)

    def deep(v, a):
        return _depth.depth_atomic_value(m, v) >= a

    # Depth takes finitely many values, so the region at a level that is not
    # taken equals the one at the next level up; constraints must use that one.
    for attempt in range(2):
        poly = []
        for extended in (False, True):
            poly = [(Fraction(v[0], L), Fraction(v[1], L))
                    for v in _build_polygon(rows, alpha * W, extended)]
            if not poly:
                return EmptyRegion(level, "no point reaches this depth")
            if all(deep(v, alpha) for v in poly):
                break
        else:
            if attempt == 0:
                higher = [a for a in achieved_levels(m) if a >= alpha]
                if not higher:
                    return EmptyRegion(level, "level exceeds the maximal depth")
                if higher[0] != alpha:
                    alpha = higher[0]
                    continue
            bad = [v for v in poly if not deep(v, alpha)]
            raise RegionError(f"vertex {bad[0]} of the level-{alpha} region is too shallow")
        break
    if verify_edges and len(poly) >= 3:
        for i in range(len(poly)):
            a, b = poly[i], poly[(i + 1) % len(poly)]
            mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
            out = (b[1] - a[1], a[0] - b[0])  # outward for CCW order
            scale = Fraction(1, 1 << 20)
            y = (mid[0] + scale * out[0], mid[1] + scale * out[1])
            if deep(y, alpha):
                raise RegionError(f"point {y} beyond an edge of the level-{alpha} region is too deep")
    return Polygon(level, tuple(poly))


# --------------------------------------------------------------------------
# radial approximation


def default_bbox(m: Measure, pad: float = 0.5) -> tuple[float, float, float, float]:
    """A box holding the interesting part of the depth function."""
    from .measure import AxisCauchyMixture, CauchyProduct, UniformDisk

    xs, ys = [], []
    for p in m.atoms():
        xs.append(float(p[0]))
        ys.append(float(p[1]))
    for c, _ in m.continuous():
        if isinstance(c, UniformDisk):
            xs += [c.center[0] - c.radius, c.center[0] + c.radius]
            ys += [c.center[1] - c.radius, c.center[1] + c.radius]
        elif isinstance(c, CauchyProduct):
            xs += [c.center[0] - 3, c.center[0] + 3]
            ys += [c.center[1] - 3, c.center[1] + 3]
        elif isinstance(c, AxisCauchyMixture):
            xs += [-3.0, 3.0]
            ys += [-3.0, 3.0]
    if not xs:
        return (-1.0, -1.0, 1.0, 1.0)
    return (min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)


def batch_depth_fn(m: Measure) -> Callable[[np.ndarray], np.ndarray]:
    if m.is_atomic:
        return lambda X: _depth.depth_atomic_np(m, X)
    return lambda X: _depth.depth_mixture_many(m, X)[0]


def find_deep_point(fn, alpha: float, bbox, n: int = 41):
    """A point of depth at least ``alpha`` or ``None``.

    The centroid of the grid nodes that are deep enough lies in the (convex)
    region; otherwise a local search starts from the best node.
    """
    x0, y0, x1, y1 = bbox
    X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    P = np.column_stack([X.ravel(), Y.ravel()])
    v = fn(P)
    deep = P[v >= alpha]
    if len(deep):
        c = deep.mean(axis=0)
        if fn(c[None])[0] >= alpha:
            return c
        return deep[np.argmin(np.linalg.norm(deep - c, axis=1))]
    best = P[np.argmax(v)]
    res = minimize(lambda q: -fn(q[None])[0], best, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
    if fn(res.x[None])[0] >= alpha:
        return res.x
    return None


def radial_region(fn, alpha: float, center, n_directions: int = DEFAULT_DIRECTIONS,
                  eps: float = DEFAULT_EPS, scale: float = 1.0, max_radius: float = 1e8):
    """Vectorised bisection along ``n_directions`` rays from ``center``."""
    center = np.asarray(center, dtype=float)
    th = 2 * np.pi * np.arange(n_directions) / n_directions
    U = np.column_stack([np.cos(th), np.sin(th)])
    lo, hi = _bisect_rays(fn, alpha, center, U, eps, scale, max_radius)
    return U, center + lo[:, None] * U, center + hi[:, None] * U


def _bisect_rays(fn, alpha, center, U, eps, scale, max_radius=1e8):
    n_directions = len(U)
    lo = np.zeros(n_directions)
    hi = np.full(n_directions, float(scale))
    while True:
        inside = fn(center + hi[:, None] * U) >= alpha
        if not inside.any():
            break
        lo[inside] = hi[inside]
        hi[inside] *= 2.0
        if hi.max() > max_radius:
            raise ValueError("region looks unbounded")
    while (hi - lo).max() > eps:
        act = (hi - lo) > eps
        mid = 0.5 * (lo[act] + hi[act])
        ok = fn(center + mid[:, None] * U[act]) >= alpha
        idx = np.flatnonzero(act)
        lo[idx[ok]] = mid[ok]
        hi[idx[~ok]] = mid[~ok]
    return lo, hi


def central_region_mixture(m: Measure, alpha: float, eps: float = DEFAULT_EPS,
                           n_directions: int = DEFAULT_DIRECTIONS, start=None, bbox=None,
                           depth_fn=None) -> CentralRegion:
    """Certified radial approximation of the level-``alpha`` region."""
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("level must be positive; the level-0 region is the whole plane")
    fn = depth_fn or batch_depth_fn(m)
    bbox = bbox or default_bbox(m)
    if start is None:
        start = find_deep_point(fn, alpha, bbox)
        if start is None:
            return EmptyRegion(alpha, "no point of this depth found on the search grid")
    elif fn(np.asarray(start, dtype=float)[None])[0] < alpha:
        raise ValueError("start point is not deep enough")
    scale = 0.25 * math.hypot(bbox[2] - bbox[0], bbox[3] - bbox[1])
    U, inner, outer = radial_region(fn, alpha, start, n_directions, eps, scale)
    body = ApproxConvexBody(alpha, np.asarray(start, dtype=float), U, inner, outer, eps)
    runs = _turning_runs(body.inner, body.tolerance)
    found = [_refine_corner(fn, body, run, scale) for run in runs]
    extra = [q for _, q in found if q is not None]
    if extra:
        _merge_samples(body, *(np.concatenate(parts) for parts in zip(*extra)))
    body.corners = [c for c, _ in found if c is not None]
    return body


def _turns(P: np.ndarray) -> np.ndarray:
    step = np.roll(P, -1, axis=0) - P
    prev = np.roll(step, 1, axis=0)
    return np.arctan2(prev[:, 0] * step[:, 1] - prev[:, 1] * step[:, 0],
                      (prev * step).sum(axis=1))


def _turning_runs(P: np.ndarray, tolerance: float) -> list[list[int]]:
    """Cyclic runs of samples where the boundary turns much faster than the rays."""
    K = len(P)
    if K < 8:
        return []
    seg = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
    if seg.max() <= 4 * tolerance:
        return []  # region collapsed to (nearly) a point
    flagged = _turns(P) > CORNER_FACTOR * 2 * np.pi / K
    if flagged.all() or not flagged.any():
        return []
    start = int(np.flatnonzero(~flagged)[0])
    runs, cur = [], []
    for k in range(1, K + 1):
        i = (start + k) % K
        if flagged[i]:
            cur.append(i)
        elif cur:
            runs.append(cur)
            cur = []
    return runs


def _refine_corner(fn, body: ApproxConvexBody, run: list[int], scale: float,
                   rounds: int = 4, sub: int = 16):
    """Zoom in on a turning run; keep it only if the turn stays concentrated.

    At a vertex the whole turn remains at one sample however fine the rays
    get, while along a tightly curved arc it spreads out with the step.
    Returns the corner (or ``None``) and the extra certified samples.
    """
    K = len(body.inner)
    th = np.arctan2(body.directions[:, 1], body.directions[:, 0])
    lo_i, hi_i = run[0] - 1, run[-1] + 1
    t0 = th[lo_i % K]
    t1 = t0 + np.mod(th[hi_i % K] - t0, 2 * np.pi)
    total = float(_turns(body.inner)[run].sum())
    keep_u, keep_in, keep_out = [], [], []
    for _ in range(rounds):
        ts = np.linspace(t0, t1, sub + 1)
        U = np.column_stack([np.cos(ts), np.sin(ts)])
        lo, hi = _bisect_rays(fn, body.level, body.center, U, body.tolerance, scale)
        Q = body.center + lo[:, None] * U
        keep_u.append(U[1:-1])
        keep_in.append(Q[1:-1])
        keep_out.append((body.center + hi[:, None] * U)[1:-1])
        tr = np.zeros(len(Q))
        d = np.diff(Q, axis=0)
        tr[1:-1] = np.arctan2(d[:-1, 0] * d[1:, 1] - d[:-1, 1] * d[1:, 0],
                              (d[:-1] * d[1:]).sum(axis=1))
        i = int(np.clip(np.argmax(tr), 2, sub - 2))
        t0, t1 = ts[i - 1], ts[i + 1]
    extra = (np.concatenate(keep_u), np.concatenate(keep_in), np.concatenate(keep_out))
    if tr[i - 1:i + 2].sum() < 0.5 * total:
        return None, extra
    a0, a1, b0, b1 = Q[i - 2], Q[i - 1], Q[i + 1], Q[i + 2]
    d1, d2 = a1 - a0, b1 - b0
    den = d1[0] * d2[1] - d1[1] * d2[0]
    n1, n2 = np.linalg.norm(d1), np.linalg.norm(d2)
    if n1 == 0 or n2 == 0 or abs(den) / (n1 * n2) < 1e-9:
        return None, extra
    sin = abs(den) / (n1 * n2)
    t = ((b0[0] - a0[0]) * d2[1] - (b0[1] - a0[1]) * d2[0]) / den
    c = a0 + t * d1
    lever = 1.0 + np.linalg.norm(c - a1) / n1 + np.linalg.norm(c - b0) / n2
    radius = body.tolerance * lever / sin
    return ExtremePoint((float(c[0]), float(c[1])), float(radius), total), extra


def _merge_samples(body: ApproxConvexBody, U, inner, outer) -> None:
    D = np.concatenate([body.directions, U])
    ang = np.mod(np.arctan2(D[:, 1], D[:, 0]), 2 * np.pi)
    order = np.argsort(ang, kind="stable")
    body.directions = D[order]
    body.inner = np.concatenate([body.inner, inner])[order]
    body.outer = np.concatenate([body.outer, outer])[order]


def extreme_points(r: CentralRegion) -> list[ExtremePoint]:
    """Vertices of exact polygons; corner-like boundary points of approximations."""
    if isinstance(r, EmptyRegion):
        raise ValueError("empty region has no extreme points")
    if isinstance(r, Polygon):
        v = r.vertices
        out = []
        for i, p in enumerate(v):
            if len(v) < 3:
                tau = math.pi
            else:
                a, b = v[i - 1], v[(i + 1) % len(v)]
                u1 = (float(p[0] - a[0]), float(p[1] - a[1]))
                u2 = (float(b[0] - p[0]), float(b[1] - p[1]))
                tau = math.atan2(u1[0] * u2[1] - u1[1] * u2[0], u1[0] * u2[0] + u1[1] * u2[1])
            out.append(ExtremePoint(p, 0.0, tau))
        return out
    return list(r.corners)


# --------------------------------------------------------------------------
# nesting and distances


def _as_float_polygon(r: CentralRegion) -> np.ndarray:
    if isinstance(r, Polygon):
        return np.array([[float(p[0]), float(p[1])] for p in r.vertices])
    if isinstance(r, ApproxConvexBody):
        return r.boundary()
    return np.zeros((0, 2))


def _hull_ccw(P: np.ndarray) -> np.ndarray:
    """Convex hull of float samples; bisection noise can leave tiny dents."""
    if len(P) < 3:
        return P
    try:
        return P[ConvexHull(P).vertices]
    except QhullError:  # collinear or repeated points
        return P


def _dist_outside(poly: np.ndarray, q: np.ndarray) -> float:
    """Distance from ``q`` to a convex CCW polygon, zero when inside."""
    k = len(poly)
    if k == 0:
        return math.inf
    if k == 1:
        return float(np.linalg.norm(q - poly[0]))
    inside = True
    best = math.inf
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        ab = b - a
        L = float(ab @ ab)
        t = 0.0 if L == 0 else min(1.0, max(0.0, float((q - a) @ ab) / L))
        best = min(best, float(np.linalg.norm(q - (a + t * ab))))
        if ab[0] * (q[1] - a[1]) - ab[1] * (q[0] - a[0]) < 0:
            inside = False
    if k >= 3 and inside:
        return 0.0
    return best


@dataclass(frozen=True)
class NestingVerdict:
    ok: bool
    violation: tuple | None = None  # (lower level, higher level, offending point)


def region_nesting_check(m: Measure, levels: Sequence, eps: float = DEFAULT_EPS,
                         n_directions: int = DEFAULT_DIRECTIONS) -> NestingVerdict:
    """Check that regions shrink as the level grows; return the first violation."""
    levels = sorted(levels)
    if m.is_atomic:
        regions = [central_region_atomic(m, a) for a in levels]
    else:
        regions = [central_region_mixture(m, a, eps, n_directions) for a in levels]
    for lo, hi in zip(regions, regions[1:]):
        if isinstance(hi, EmptyRegion):
            continue
        if isinstance(lo, EmptyRegion):
            return NestingVerdict(False, (lo.level, hi.level, None))
        if isinstance(lo, Polygon) and isinstance(hi, Polygon):
            for v in hi.vertices:
                if not polygon_contains(lo.vertices, v):
                    return NestingVerdict(False, (lo.level, hi.level, v))
            continue
        outer = _hull_ccw(_as_float_polygon(lo))
        tol = 2 * eps + (lo.tolerance if isinstance(lo, ApproxConvexBody) else 0.0)
        for q in _as_float_polygon(hi):
            if _dist_outside(outer, q) > tol + _sagitta(lo):
                return NestingVerdict(False, (lo.level, hi.level, tuple(q)))
    return NestingVerdict(True)


def _sagitta(r: CentralRegion) -> float:
    """Largest gap a chord between neighbouring samples can leave (crude bound)."""
    if not isinstance(r, ApproxConvexBody):
        return 0.0
    P = r.inner
    seg = np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)
    return float(seg.max() ** 2 / 8.0 / max(np.linalg.norm(P - r.center, axis=1).min(), 1e-12))


# --------------------------------------------------------------------------
# export


def region_to_json(r: CentralRegion) -> dict:
    def fmt(v):
        if isinstance(v, Fraction):
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return float(v)

    if isinstance(r, EmptyRegion):
        return {"level": fmt(r.level), "kind": "empty", "vertices": [], "diagnostic": r.diagnostic}
    if isinstance(r, Polygon):
        return {"level": fmt(r.level), "kind": "polygon", "exact": True,
                "vertices": [[fmt(p[0]), fmt(p[1])] for p in r.vertices], "tolerance": 0.0}
    return {"level": float(r.level), "kind": "approx", "exact": False,
            "vertices": r.boundary().tolist(), "tolerance": r.tolerance,
            "directions": len(r.directions),
            "corners": [{"location": list(c.location), "confidence_radius": c.confidence_radius}
                        for c in r.corners]}


def region_to_csv(r: CentralRegion, path, header: Sequence[str] = ()) -> None:
    """Write ``x,y`` vertex rows; ``header`` lines are written as ``#`` comments."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for p in _as_float_polygon(r):
            w.writerow([f"{p[0]:.12g}", f"{p[1]:.12g}"])
