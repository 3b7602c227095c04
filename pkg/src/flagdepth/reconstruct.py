"""Recovering atoms of a measure from its depth function alone.

The only access to the measure is a :class:`DepthOracle`.  Atoms are sought
among corners of central regions; their masses come from the drop in depth
just beyond them (an upper bound that is tight in general position), and the
result is accepted only after an exact round-trip check.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .measure import Halfspace, Measure, as_point, to_fraction
from . import depth as _depth
from . import regions as _regions

JUMP_TOL = 1e-9
JUMP_T0 = 1e-3
JUMP_T_MIN = 1e-7
N_SCAN_DIRECTIONS = 16


# --------------------------------------------------------------------------
# oracle


@dataclass
class DepthOracle:
    """Black-box depth evaluation.

    ``func`` maps one point to its depth (a Fraction when ``exact``), ``batch``
    maps an ``(N, 2)`` float array to float depths.
    """

    func: Callable
    bbox: tuple[float, float, float, float]
    batch: Callable | None = None
    total_mass: float | Fraction | None = None
    exact: bool = False
    calls: int = 0

    @classmethod
    def from_measure(cls, m: Measure, bbox=None) -> "DepthOracle":
        bbox = tuple(bbox) if bbox is not None else _regions.default_bbox(m, pad=1.0)
        total = m.total_mass()
        if m.is_atomic:
            return cls(lambda x: _depth.depth_atomic_value(m, x), bbox,
                       lambda X: _depth.depth_atomic_np(m, X), total.exact, True)
        return cls(lambda x: float(_depth.depth_flag(m, x).value.value), bbox,
                   lambda X: _depth.depth_mixture_many(m, X)[0], total.value, False)

    def __call__(self, x):
        self.calls += 1
        return self.func(x)

    def many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, 2)
        self.calls += len(X)
        if self.batch is not None:
            return np.asarray(self.batch(X), dtype=float)
        return np.array([float(self.func(tuple(p))) for p in X])

    @property
    def diagonal(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return math.hypot(x1 - x0, y1 - y0)


def deepest_point(oracle: DepthOracle, n: int = 61):
    """Approximate maximiser of the depth and its value (grid then simplex search)."""
    x0, y0, x1, y1 = oracle.bbox
    X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    P = np.column_stack([X.ravel(), Y.ravel()])
    v = oracle.many(P)
    top = v.max()
    best = P[v >= top].mean(axis=0)
    if oracle.many(best[None])[0] < top:
        best = P[np.argmax(v)]
    res = minimize(lambda q: -oracle.many(q[None])[0], best, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 600})
    cand = res.x if -res.fun >= top else best
    return np.asarray(cand, dtype=float), float(oracle.many(np.asarray(cand)[None])[0])


# --------------------------------------------------------------------------
# support report


@dataclass
class SupportReport:
    """Level-set boundaries that carry all the mass the depth can see."""

    levels: list
    contours: list  # one (K, 2) array per level, empty for empty regions
    note: str = ("mass lies in the closure of the union of these boundaries; "
                 "the true support may be much smaller")

    def to_json(self) -> dict:
        return {"levels": [float(a) for a in self.levels],
                "contours": [c.tolist() for c in self.contours], "note": self.note}


def support_report(oracle: DepthOracle, levels: Sequence, n_directions: int = 256,
                   eps: float = 1e-6) -> SupportReport:
    contours = []
    for a in levels:
        r = _regions.central_region_mixture(None, float(a), eps, n_directions,
                                            bbox=oracle.bbox, depth_fn=oracle.many)
        contours.append(np.zeros((0, 2)) if isinstance(r, _regions.EmptyRegion) else r.boundary())
    return SupportReport(list(levels), contours)


# --------------------------------------------------------------------------
# depth jumps


@dataclass(frozen=True)
class JumpEstimate:
    """Drop of depth across ``x`` when leaving it away from ``z``.

    ``inner`` is the depth at ``x`` (equal to the limit from the ``z`` side),
    ``outer`` the limit from beyond.  ``jump = inner - outer`` bounds the mass
    at ``x`` from above.
    """

    jump: float | Fraction
    inner: float | Fraction
    outer: float | Fraction
    stabilized: bool
    t_final: float


def _exact_limit(oracle, x, v, k0: int = 16, k_max: int = 80, repeats: int = 3):
    """Limit of the depth at ``x + 2^-k v`` as ``k`` grows, by exact repetition."""
    last, same, k = None, 0, k0
    while k <= k_max:
        t = Fraction(1, 1 << k)
        val = oracle((x[0] + t * v[0], x[1] + t * v[1]))
        if val == last:
            same += 1
            if same >= repeats - 1:
                return val, True, float(t)
        else:
            same = 0
        last = val
        k += 2
    return last, False, float(t)


def _float_limit(oracle, x, u, t0, tol, t_min):
    """One-sided limit along ``u`` by halving with linear extrapolation.

    ``2 f(t/2) - f(t)`` removes the first-order term of a smooth profile, so
    the estimates settle quickly even where the depth varies continuously.
    """
    t = t0
    ts = [t * 0.5 ** k for k in range(int(math.log2(t0 / t_min)) + 2)]
    pts = np.array([[x[0] + s * u[0], x[1] + s * u[1]] for s in ts])
    f = oracle.many(pts)
    est = 2 * f[1:] - f[:-1]
    for k in range(1, len(est)):
        if abs(est[k] - est[k - 1]) <= tol:
            return float(est[k]), True, ts[k + 1]
    return float(est[-1]), False, ts[-1]


def jump_along_line(oracle: DepthOracle, x, z, t0: float = JUMP_T0,
                    tol: float = JUMP_TOL, t_min: float = JUMP_T_MIN) -> JumpEstimate:
    """Depth jump at ``x`` along the line from the deeper point ``z``."""
    if oracle.exact:
        x, z = as_point(x), as_point(z)
        if x == z:
            raise ValueError("x and z coincide")
        v = (x[0] - z[0], x[1] - z[1])
        inner = oracle(x)
        if oracle(z) <= inner:
            raise ValueError("z must be strictly deeper than x")
        outer, ok, t = _exact_limit(oracle, x, v)
        if not ok:
            warnings.warn(f"depth beyond {x} did not settle", RuntimeWarning)
        return JumpEstimate(inner - outer, inner, outer, ok, t)
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    d = x - z
    n = float(np.linalg.norm(d))
    if n == 0:
        raise ValueError("x and z coincide")
    u = d / n
    dx, dz = oracle.many(np.stack([x, z]))
    if dz <= dx:
        raise ValueError("z must be strictly deeper than x")
    outer, ok1, t1 = _float_limit(oracle, x, u, t0, tol, t_min)
    inner, ok2, t2 = _float_limit(oracle, x, -u, t0, tol, t_min)
    ok = ok1 and ok2
    if not ok:
        warnings.warn(f"depth near {tuple(x)} did not settle", RuntimeWarning)
    return JumpEstimate(inner - outer, inner, outer, ok, max(t1, t2))


def _scan_directions(n: int = N_SCAN_DIRECTIONS):
    """Integer directions spread around the circle, none parallel to another."""
    out = []
    for k in range(n):
        th = 2 * math.pi * (k + 0.37) / n
        out.append((round(1000 * math.cos(th)), round(1000 * math.sin(th))))
    return out


def all_direction_jump(oracle: DepthOracle, x) -> tuple:
    """Largest drop of depth when leaving ``x`` in any of several fixed directions.

    Some direction makes an acute angle with a minimising normal at ``x``; the
    drop along it is at least the mass at ``x``, so the maximum is an upper
    bound for that mass.
    """
    if not oracle.exact:
        raise ValueError("direction scan needs an exact oracle")
    x = as_point(x)
    base = oracle(x)
    best, ok_all = None, True
    for v in _scan_directions():
        lim, ok, _ = _exact_limit(oracle, x, v)
        ok_all &= ok
        j = base - lim
        best = j if best is None or j > best else best
    return best, ok_all


# --------------------------------------------------------------------------
# atom detection from corners of central regions


def _rat(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass
class AtomCandidate:
    location: tuple
    level: float | Fraction
    persistence: tuple  # (lowest, highest) level at which the corner was seen
    jump_bound: float | Fraction | None  # upper bound for the mass
    mass_estimate: float | Fraction | None
    confident: bool = False
    undecidable: bool = False
    note: str = ""

    def to_json(self) -> dict:
        def num(v):
            if isinstance(v, Fraction):
                return _rat(v)
            return None if v is None else float(v)

        return {"location": [num(c) for c in self.location], "level": num(self.level),
                "persistence": [num(p) for p in self.persistence],
                "jump_bound": num(self.jump_bound), "mass_estimate": num(self.mass_estimate),
                "confident": self.confident, "undecidable": self.undecidable, "note": self.note}


@dataclass
class DetectionResult:
    candidates: list  # confident atoms
    rejected: list  # persistent corners whose jump vanished
    undecidable: list  # points with no deeper point to jump from
    levels: list
    max_depth: float
    deepest: tuple


def _cluster(points: list, radius: float) -> list[list]:
    """Greedy single-link clusters of (level, location, radius) tuples by location."""
    clusters: list[list] = []
    for item in points:
        loc = np.asarray(item[1])
        for cl in clusters:
            if any(np.linalg.norm(loc - np.asarray(o[1])) <= radius for o in cl):
                cl.append(item)
                break
        else:
            clusters.append([item])
    return clusters


def detect_atoms(oracle: DepthOracle, levels: Sequence | None = None, n_levels: int = 16,
                 n_directions: int = 256, eps: float = 1e-7, cluster_radius: float | None = None,
                 min_persistence: int = 2, mass_tol: float = 1e-6) -> DetectionResult:
    """Corners of central regions that recur over several levels, with their jumps.

    An exact atomic oracle is handed to :func:`reconstruct_finite_atomic`,
    whose round trip certifies every mass, including atoms in the deepest
    region where no jump from a deeper point exists.  If that check fails the
    corner search below runs as for any other oracle.
    """
    if oracle.exact:
        m_hat, report = reconstruct_finite_atomic(oracle)
        if report.verdict == "PASS":
            top = max(c.level for c in report.candidates)
            deepest = next(c.location for c in report.candidates if c.level == top)
            return DetectionResult(report.candidates, report.rejected, [], report.levels,
                                   max(report.levels), tuple(deepest))
    deep, dmax = deepest_point(oracle)
    if levels is None:
        levels = [dmax * k / (n_levels + 1) for k in range(1, n_levels + 1)]
    levels = sorted(float(a) for a in levels)
    radius = cluster_radius if cluster_radius is not None else 1e-4 * oracle.diagonal
    corners = []
    for a in levels:
        r = _regions.central_region_mixture(None, a, eps, n_directions, start=deep,
                                            bbox=oracle.bbox, depth_fn=oracle.many)
        if isinstance(r, _regions.EmptyRegion):
            continue
        corners += [(a, c.location, c.confidence_radius) for c in r.corners]
    result = DetectionResult([], [], [], levels, dmax, tuple(deep))
    for cl in _cluster(corners, radius):
        seen = sorted({a for a, _, _ in cl})
        if len(seen) < min_persistence:
            continue
        loc = np.median(np.array([c[1] for c in cl]), axis=0)
        cand = AtomCandidate(tuple(float(c) for c in loc), float("nan"), (seen[0], seen[-1]),
                             None, None)
        if np.linalg.norm(loc - deep) <= radius:
            cand.undecidable = True
            cand.level = dmax
            cand.note = "deepest point: no deeper point to jump from"
            result.undecidable.append(cand)
            continue
        j = jump_along_line(oracle, loc, deep)
        cand.level = j.inner
        if j.inner >= dmax - mass_tol:
            cand.undecidable = True
            cand.note = "no deeper point to jump from"
            result.undecidable.append(cand)
            continue
        cand.jump_bound = j.jump
        cand.mass_estimate = j.jump
        cand.confident = j.stabilized and j.jump > mass_tol
        (result.candidates if cand.confident else result.rejected).append(cand)
    if not any(np.linalg.norm(np.asarray(c.location) - deep) <= radius for c in result.undecidable):
        result.undecidable.append(AtomCandidate(
            tuple(float(c) for c in deep), dmax, (dmax, dmax), None, None, False, True,
            "deepest point: no deeper point to jump from"))
    return result


def detection_report(result: DetectionResult, support: SupportReport | None = None,
                     mass_tol: float = 1e-6) -> ReconstructionReport:
    """Wrap a detection run in a report.

    Without an atomic oracle there is nothing to round-trip, so the verdict
    only says every confident candidate carries a positive stabilized jump.
    A persistence interval longer than the mass is reported as a warning: an
    atom on the hull of the support stays a corner at every lower level.
    """
    problems, warnings_ = [], []
    for c in result.candidates:
        length = c.persistence[1] - c.persistence[0]
        if c.mass_estimate is None or c.mass_estimate <= mass_tol:
            problems.append(f"{c.location}: no positive mass")
        elif length > c.mass_estimate + mass_tol:
            warnings_.append(f"{c.location}: persists over {length:.6g} > mass")
    verification = {"round_trip": "not applicable: continuous parts are not reconstructed",
                    "max_depth": float(result.max_depth),
                    "deepest": [float(v) for v in result.deepest],
                    "problems": problems, "warnings": warnings_}
    contours = []
    if support is not None:
        contours = [{"level": float(a), "points": int(len(c))}
                    for a, c in zip(support.levels, support.contours)]
    return ReconstructionReport(list(result.candidates), list(result.undecidable),
                                list(result.levels), verification,
                                "FAIL" if problems else "PASS", None, contours,
                                list(result.rejected))


# --------------------------------------------------------------------------
# touching halfspaces


def touching_halfspace_for_face(region, face: tuple, x) -> Halfspace:
    """Halfplane bounded by the line of ``face``, on the side away from the region.

    ``x`` must lie strictly beyond that line, so that no open segment from
    ``x`` to a point of the face enters the region.
    """
    p, q = face
    if isinstance(region, _regions.Polygon):
        p, q, xx = as_point(p), as_point(q), as_point(x)
        verts = list(region.vertices)
    else:
        p, q, xx = (tuple(map(float, p)), tuple(map(float, q)), tuple(map(float, x)))
        verts = [tuple(v) for v in _regions._as_float_polygon(region)]
    if p == q:
        raise ValueError("face must have two distinct endpoints")
    n = (q[1] - p[1], p[0] - q[0])  # outward for a counterclockwise boundary
    side = lambda y: n[0] * (y[0] - p[0]) + n[1] * (y[1] - p[1])
    if side(xx) <= 0:
        raise ValueError("x is not strictly beyond the face")
    if isinstance(region, _regions.Polygon):
        if any(side(v) > 0 for v in verts):
            raise ValueError("face is not a supporting edge of the region")
        return Halfspace.through(p, n)
    scale = max(1.0, max(abs(c) for v in verts for c in v))
    # sampled boundaries wobble by up to the bracket width, and a line through
    # two such samples tilts by that much over the face length
    face = math.hypot(*n)
    reach = max(math.hypot(v[0] - p[0], v[1] - p[1]) for v in verts)
    slack = max(1e-9 * scale, 2 * getattr(region, "tolerance", 0.0) * (1 + reach / face))
    if any(side(v) > slack * math.hypot(*n) for v in verts):
        raise ValueError("face is not a supporting edge of the region")
    L = math.hypot(*n)
    u = (n[0] / L, n[1] / L)
    return Halfspace(u, u[0] * p[0] + u[1] * p[1])


# --------------------------------------------------------------------------
# exact round trip for atomic measures


@dataclass
class ReconstructionReport:
    candidates: list
    undecidable: list
    levels: list
    verification: dict
    verdict: str
    witness: tuple | None = None
    contours: list = field(default_factory=list)
    rejected: list = field(default_factory=list)

    def to_json(self) -> dict:
        def num(v):
            return _rat(v) if isinstance(v, Fraction) else v

        return {"verdict": self.verdict,
                "candidates": [c.to_json() for c in self.candidates],
                "undecidable": [c.to_json() for c in self.undecidable],
                "rejected": [c.to_json() for c in self.rejected],
                "levels": [num(a) if isinstance(a, Fraction) else float(a) for a in self.levels],
                "verification": self.verification,
                "witness": None if self.witness is None else [num(c) for c in self.witness],
                "contours": self.contours}


def _rational_grid(bbox, step: Fraction, offset: Fraction = Fraction(0)):
    x0, y0, x1, y1 = (Fraction(v).limit_denominator(1 << 20) for v in bbox)
    xs, v = [], math.floor((x0 - offset) / step) * step + offset
    while v <= x1:
        if v >= x0:
            xs.append(v)
        v += step
    ys, v = [], math.floor((y0 - offset) / step) * step + offset
    while v <= y1:
        if v >= y0:
            ys.append(v)
        v += step
    return [(a, b) for b in ys for a in xs]


def _snap(v: float, max_den: int) -> Fraction:
    return Fraction(v).limit_denominator(max_den)


def _trace_polygon_vertices(oracle: DepthOracle, alpha: Fraction, center, n_rays: int = 180,
                            eps: float = 1e-11, rounds: int = 6) -> list[np.ndarray]:
    """Approximate vertices of a convex polygonal region from radial samples.

    Samples are grouped into runs lying on one line; consecutive lines are
    intersected.  A vertex is accepted when the ray through it reaches the
    boundary there; otherwise that ray reveals a missed edge and is added.
    """
    fa = float(alpha)
    fn = lambda X: oracle.many(X) >= fa - 1e-12
    c = np.asarray(center, dtype=float)

    def boundary(theta):
        U = np.column_stack([np.cos(theta), np.sin(theta)])
        lo = np.zeros(len(theta))
        hi = np.full(len(theta), 1.0)
        while True:
            ins = fn(c + hi[:, None] * U)
            if not ins.any():
                break
            lo[ins] = hi[ins]
            hi[ins] *= 2
        while (hi - lo).max() > eps:
            mid = 0.5 * (lo + hi)
            ok = fn(c + mid[:, None] * U)
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        return c + lo[:, None] * U

    thetas = np.sort(2 * np.pi * (np.arange(n_rays) + 0.123) / n_rays)
    pts = boundary(thetas)
    if np.linalg.norm(pts - c, axis=1).max() < 1e-9:
        return [c]
    verts: list[np.ndarray] = []
    for _ in range(rounds):
        order = np.argsort(thetas)
        thetas, pts = thetas[order], pts[order]
        runs = _collinear_runs(pts)
        lines = [(pts[r[0]], pts[r[-1]] - pts[r[0]]) for r in runs if len(r) >= 2]
        singles = [r[0] for r in runs if len(r) == 1]
        verts, extra = [], []
        k = len(lines)
        for i in range(k):
            p1, d1 = lines[i]
            p2, d2 = lines[(i + 1) % k]
            den = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(den) < 1e-14 * np.linalg.norm(d1) * np.linalg.norm(d2):
                continue
            t = ((p2[0] - p1[0]) * d2[1] - (p2[1] - p1[1]) * d2[0]) / den
            verts.append(p1 + t * d1)
        if verts:
            V = np.array(verts)
            th = np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]) % (2 * np.pi)
            reach = boundary(th)
            gap = np.linalg.norm(V - c, axis=1) - np.linalg.norm(reach - c, axis=1)
            bad = gap > 1e-8
            extra += list(th[bad])
        for i in singles:
            j0, j1 = thetas[i - 1], thetas[(i + 1) % len(thetas)]
            if j1 < thetas[i]:
                j1 += 2 * np.pi
            extra += [0.5 * (j0 + thetas[i]), 0.5 * (thetas[i] + j1)]
        if not extra:
            break
        extra = np.array(extra) % (2 * np.pi)
        thetas = np.concatenate([thetas, extra])
        pts = np.concatenate([pts, boundary(extra)])
    return verts


def _collinear_runs(P: np.ndarray, tol: float = 1e-8) -> list[list[int]]:
    """Cyclic runs of consecutive points lying on a common line."""
    n = len(P)

    def on_line(a, b, q):
        d = P[b] - P[a]
        L = np.linalg.norm(d)
        if L == 0:
            return True
        return abs(d[0] * (P[q][1] - P[a][1]) - d[1] * (P[q][0] - P[a][0])) / L <= tol

    # start at a point that begins a new edge
    start = 0
    for i in range(n):
        if not on_line((i - 2) % n, (i - 1) % n, i):
            start = i
            break
    runs: list[list[int]] = []
    cur = [start]
    for k in range(1, n):
        i = (start + k) % n
        if len(cur) == 1 or on_line(cur[0], cur[-1], i):
            cur.append(i)
        else:
            runs.append(cur)
            cur = [i]
    runs.append(cur)
    # a run of two may really be two single points on different edges; keep
    # it, the vertex check downstream catches a wrong line
    if len(runs) > 1 and on_line(runs[-1][0], runs[-1][-1], runs[0][0]) and len(runs[-1]) > 1 \
            and on_line(runs[-1][0], runs[-1][-1], runs[0][-1]):
        runs[0] = runs[-1] + runs[0]
        runs.pop()
    return runs


def reconstruct_finite_atomic(oracle: DepthOracle, probe_step=Fraction(1, 2),
                              max_den: int = 4096, n_rays: int = 180,
                              check_step=Fraction(1, 3), check_offset=Fraction(1, 7)):
    """Recover a finitely atomic measure from an exact depth oracle.

    Returns the reconstructed measure (or ``None``) and a report whose verdict
    is ``"PASS"`` only if the reconstructed depth equals the oracle exactly on
    every probe and on a second, offset grid.
    """
    if not oracle.exact:
        raise ValueError("exact reconstruction needs an exact oracle")
    probes = _rational_grid(oracle.bbox, to_fraction(probe_step))
    values = {p: oracle(p) for p in probes}
    levels = sorted({v for v in values.values() if v > 0})
    cands: dict = {}
    for a in levels:
        deep = [p for p, v in values.items() if v >= a]
        for h in _regions.convex_hull(deep):
            cands[h] = None
        hull = _regions.convex_hull(deep)
        if len(hull) >= 3:
            ctr = np.mean([[float(p[0]), float(p[1])] for p in hull], axis=0)
            for v in _trace_polygon_vertices(oracle, a, ctr, n_rays):
                s = (_snap(v[0], max_den), _snap(v[1], max_den))
                if abs(float(s[0]) - v[0]) < 1e-7 and abs(float(s[1]) - v[1]) < 1e-7:
                    cands[s] = None
        elif len(hull) == 2:
            for end in _segment_ends(oracle, a, hull, max_den):
                cands[end] = None
    # masses: the smallest of several upper bounds
    found, undecidable = [], []
    for x in cands:
        dx = oracle(x)
        if dx == 0:
            continue
        bound, ok = all_direction_jump(oracle, x)
        deeper = sorted((p for p, v in values.items() if v > dx),
                        key=lambda p: (p[0] - x[0]) ** 2 + (p[1] - x[1]) ** 2)[:3]
        for z in deeper:
            j = jump_along_line(oracle, x, z)
            if j.stabilized:
                bound = min(bound, j.jump)
        if bound > 0:
            found.append(AtomCandidate(x, dx, (dx, dx), bound, bound, True,
                                       False, "" if deeper else "mass from the direction scan"))
    found, dropped = _settle_collinear(found, oracle)
    if not found:
        return None, ReconstructionReport([], undecidable, levels, {"points": 0}, "FAIL",
                                          rejected=dropped)
    try:
        m_hat = Measure.atomic([(c.location, c.mass_estimate) for c in found])
    except Exception as exc:  # pragma: no cover - defensive
        return None, ReconstructionReport(found, undecidable, levels, {"error": str(exc)}, "FAIL",
                                          rejected=dropped)
    fresh = _rational_grid(oracle.bbox, to_fraction(check_step), to_fraction(check_offset))
    worst, witness, stats = Fraction(0), None, {}
    for name, pts in (("probe", probes), ("fresh", fresh)):
        local = Fraction(0)
        for p in pts:
            want = values[p] if name == "probe" else oracle(p)
            diff = abs(_depth.depth_atomic_value(m_hat, p) - want)
            local = max(local, diff)
            if diff > worst:
                worst, witness = diff, p
        stats[f"{name}_points"] = len(pts)
        stats[f"{name}_max_abs_diff"] = float(local)
    stats["max_abs_diff"] = float(worst)
    verdict = "PASS" if worst == 0 else "FAIL"
    if oracle.total_mass is not None:
        stats["total_mass_matches"] = m_hat.total_mass().exact == to_fraction(oracle.total_mass)
        if not stats["total_mass_matches"]:
            verdict = "FAIL"
    report = ReconstructionReport(found, undecidable, levels, stats, verdict, witness,
                                  rejected=dropped)
    return m_hat, report


def _strictly_between(x, b, c) -> bool:
    bx, by = b[0] - x[0], b[1] - x[1]
    cx, cy = c[0] - x[0], c[1] - x[1]
    return bx * cy - by * cx == 0 and bx * cx + by * cy < 0


def _split_between(found: list) -> tuple[list, list]:
    """Separate atoms from corners that only look like atoms.

    A corner of a central region that carries no mass sits strictly inside a
    segment joining two atoms on one of the region's edge lines, while with no
    three atoms collinear an atom never does.  Candidates with no such pair are
    atoms; a candidate between two atoms is not; the rest is settled by
    iterating.  Anything still open is kept and left to the round-trip check.
    """
    locs = [c.location for c in found]
    pairs = {i: [(j, k) for j in range(len(locs)) for k in range(j + 1, len(locs))
                 if i not in (j, k) and _strictly_between(locs[i], locs[j], locs[k])]
             for i in range(len(locs))}
    status = {i: (True if not pairs[i] else None) for i in pairs}
    changed = True
    while changed:
        changed = False
        for i, ps in pairs.items():
            if status[i] is not None:
                continue
            if any(status[j] is True and status[k] is True for j, k in ps):
                status[i], changed = False, True
            elif all(status[j] is False or status[k] is False for j, k in ps):
                status[i], changed = True, True
    keep, drop = [], []
    for i, c in enumerate(found):
        if status[i] is False:
            c.confident, c.note = False, "between two atoms"
            drop.append(c)
        else:
            if status[i] is None:
                c.note = "collinear with other candidates"
            keep.append(c)
    return keep, drop


def _flag_sets(i: int, locs: list) -> set:
    """Index sets of the other points covered by the flags at ``locs[i]``.

    Flags whose line passes through another point are enough: any other flag
    covers the same points as one of them.
    """
    u = locs[i]
    others = [j for j in range(len(locs)) if j != i]
    out = set()
    for s in others:
        d = (locs[s][0] - u[0], locs[s][1] - u[1])
        for sgn in (1, -1):
            n = (-d[1] * sgn, d[0] * sgn)
            for r in (1, -1):
                inside = []
                for j in others:
                    q = (locs[j][0] - u[0], locs[j][1] - u[1])
                    h = n[0] * q[0] + n[1] * q[1]
                    if h > 0 or (h == 0 and r * (d[0] * q[0] + d[1] * q[1]) > 0):
                        inside.append(j)
                out.add(frozenset(inside))
    return out or {frozenset()}


def _solve_exact(A, b):
    """Unique solution of a consistent linear system over the rationals, else None."""
    n = len(A[0])
    rows = [list(r) + [v] for r, v in zip(A, b)]
    for c in range(n):
        k = next((i for i in range(c, len(rows)) if rows[i][c] != 0), None)
        if k is None:
            return None
        rows[c], rows[k] = rows[k], rows[c]
        rows[c] = [v / rows[c][c] for v in rows[c]]
        for i in range(len(rows)):
            if i != c and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * p for a, p in zip(rows[i], rows[c])]
    if any(row[-1] != 0 for row in rows[n:]):
        return None
    return [rows[i][-1] for i in range(n)]


def settle_masses(locs, depths, known: dict, bounds, total=None, max_unknown: int = 6,
                  max_guesses: int = 50_000, flags: dict | None = None) -> list:
    """Mass assignments for the unsettled candidates that reproduce their depths.

    ``known`` maps candidate indices to settled masses.  Each unsettled
    candidate ``u`` satisfies ``depth(u) = w_u + min`` over flags at ``u`` of the
    other masses; guessing which flag is active makes that linear, so every
    guess is solved exactly and kept if it is consistent, lies within
    ``[0, bounds]`` and matches ``total`` when given.  ``flags`` caches the
    flag sets per candidate.
    """
    unknown = [i for i in range(len(locs)) if i not in known]
    k = len(unknown)
    if k == 0 or k > max_unknown:
        return []
    pos = {i: j for j, i in enumerate(unknown)}
    table = []
    flags = {} if flags is None else flags
    for i in unknown:
        if i not in flags:
            flags[i] = _flag_sets(i, locs)
        best: dict = {}
        for fs in flags[i]:
            a = sum((known[j] for j in fs if j in known), Fraction(0))
            B = frozenset(j for j in fs if j in pos)
            if B not in best or a < best[B]:
                best[B] = a
        # a pattern with a superset and no smaller constant never is the unique minimum
        items = [(B, a) for B, a in best.items()
                 if not any(B2 < B and a2 <= a for B2, a2 in best.items())]
        table.append(items)
    if math.prod(len(t) for t in table) > max_guesses:
        return []
    rest = None if total is None else to_fraction(total) - sum(known.values(), Fraction(0))
    sols: list = []
    for choice in itertools.product(*table):
        A, b = [], []
        for j, (B, a) in enumerate(choice):
            row = [Fraction(0)] * k
            row[j] = Fraction(1)
            for v in B:
                row[pos[v]] += 1
            A.append(row)
            b.append(depths[unknown[j]] - a)
        if rest is not None:
            A.append([Fraction(1)] * k)
            b.append(rest)
        w = _solve_exact(A, b)
        if w is None or any(v < 0 or v > bounds[unknown[j]] for j, v in enumerate(w)):
            continue
        if all(depths[unknown[j]] == w[j] + min(a + sum(w[pos[v]] for v in B) for B, a in table[j])
               for j in range(k)):
            sol = {unknown[j]: w[j] for j in range(k)}
            if sol not in sols:
                sols.append(sol)
    return sols


def _through_lines(i: int, locs: list) -> set:
    """Directions of lines through ``locs[i]`` with other candidates on both sides."""
    x = locs[i]
    out = set()
    for j in range(len(locs)):
        for k in range(j + 1, len(locs)):
            if i not in (j, k) and _strictly_between(x, locs[j], locs[k]):
                d = (locs[j][0] - x[0], locs[j][1] - x[1])
                g = max(abs(d[0]), abs(d[1]))
                d = (d[0] / g, d[1] / g)
                out.add(max(d, (-d[0], -d[1])))
    return out


def _line_mass(oracle, x, level, d):
    """Depth at ``x`` minus the smaller one-sided limit along the line through ``x`` with direction ``d``."""
    lims = [_exact_limit(oracle, x, v) for v in (d, (-d[0], -d[1]))]
    if not all(ok for _, ok, _ in lims):
        return None
    return level - min(v for v, _, _ in lims)


def _sparse_remainder(found: list, known: dict, bounds: list, total: Fraction,
                      max_size: int = 2) -> list:
    """Assignments putting the unsettled mass on as few candidates as possible.

    Subsets of one, then two candidates carry the mass, everything else gets
    none; each guess is solved exactly and must reproduce every candidate's
    depth.
    """
    locs = [c.location for c in found]
    depths = [c.level for c in found]
    unknown = [i for i in range(len(found)) if i not in known]
    flags: dict = {}
    for size in range(1, max_size + 1):
        sols = []
        for K in itertools.combinations(unknown, size):
            fixed = {**known, **{i: Fraction(0) for i in unknown if i not in K}}
            for sol in settle_masses(locs, depths, fixed, bounds, total, flags=flags):
                if any(w == 0 for w in sol.values()):
                    continue
                trial = {**{i: Fraction(0) for i in unknown}, **sol}
                m = Measure.atomic([(locs[i], w) for i, w in {**known, **trial}.items() if w > 0])
                if all(_depth.depth_atomic_value(m, x) == d for x, d in zip(locs, depths)):
                    sols.append(trial)
        if sols:
            return sols
    return []


def _settle_collinear(found: list, oracle: DepthOracle) -> tuple[list, list]:
    """Exact masses for candidates lying between two others.

    Elsewhere the jump already equals the mass.  Between two candidates it may
    overshoot (collinear atoms) or belong to a massless corner.  With a single
    such line through the candidate, the two limits along that line cover
    every flag there and give the mass exactly; the few candidates on several
    lines are settled from the depths.  Failing a unique answer the
    betweenness rule decides.
    """
    locs = [c.location for c in found]
    n = len(locs)
    inner = {i for i in range(n) if _through_lines(i, locs)}
    if not inner:
        return found, []
    known = {i: found[i].mass_estimate for i in range(n) if i not in inner}
    # every line through a candidate bounds its mass from above, and with a
    # single line the bound is exact; massless candidates stop defining
    # lines, so repeat until nothing changes
    bounds = [c.jump_bound for c in found]
    cache: dict = {}
    changed = True
    while changed:
        changed = False
        alive = [i for i in range(n) if known.get(i, 1) != 0]
        sub = [locs[i] for i in alive]
        for j, i in enumerate(alive):
            if i in known:
                continue
            here = _through_lines(j, sub)
            if not here:
                known[i], changed = bounds[i], True
                continue
            for d in here:
                if (i, d) not in cache:
                    cache[i, d] = _line_mass(oracle, locs[i], found[i].level, d)
            got = [cache[i, d] for d in here if cache[i, d] is not None]
            if got:
                bounds[i] = min(bounds[i], *got)
            if (len(here) == 1 and got) or bounds[i] == 0:
                known[i], changed = bounds[i], True
    masses = dict(known)
    settled = sum(known.values(), Fraction(0))
    if len(known) < n and oracle.total_mass is not None and settled == to_fraction(oracle.total_mass):
        # masses are non-negative, so nothing is left for the rest
        masses.update({i: Fraction(0) for i in range(n) if i not in known})
    elif len(known) < n:
        sols = []
        if oracle.total_mass is not None:
            sols = _sparse_remainder(found, known, bounds, to_fraction(oracle.total_mass))
        if not sols:
            sols = settle_masses(locs, [c.level for c in found], known, bounds,
                                 oracle.total_mass)
        if len(sols) != 1:
            return _split_between(found)
        masses.update(sols[0])
    keep, drop = [], []
    for i, c in enumerate(found):
        w = masses[i]
        if w == 0:
            c.confident, c.note = False, "no mass: a corner between two atoms"
            drop.append(c)
        else:
            if i in inner:
                c.mass_estimate, c.note = w, "mass from limits along its line"
            keep.append(c)
    return keep, drop


def _segment_ends(oracle, alpha, hull, max_den):
    """Endpoints of a segment-shaped region through two deep probes."""
    a, b = (np.array([float(c) for c in p]) for p in hull)
    d = (b - a) / np.linalg.norm(b - a)
    out = []
    for start, u in ((a, -d), (b, d)):
        lo, hi = 0.0, 1.0
        while oracle.many((start + hi * u)[None])[0] >= float(alpha) - 1e-12:
            lo, hi = hi, 2 * hi
        while hi - lo > 1e-11:
            mid = 0.5 * (lo + hi)
            if oracle.many((start + mid * u)[None])[0] >= float(alpha) - 1e-12:
                lo = mid
            else:
                hi = mid
        e = start + lo * u
        out.append((_snap(e[0], max_den), _snap(e[1], max_den)))
    return out
