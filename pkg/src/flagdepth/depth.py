"""Halfspace depth in the plane.

Three evaluators:

* :func:`depth_atomic` - exact O(n log n) angular sweep for atomic measures.
* :func:`depth_flag` - minimum of the flag-halfspace mass over the flags
  centered at ``x``.  Exact enumeration for atomic measures; for measures
  with continuous parts a vectorised angular search (coarse scan, zoom
  refinement, plus exact evaluation at every critical normal).
* :func:`depth` - dispatches between the two.

The minimum over flags is always attained, so every result carries a witness
flag; ``attained`` reports whether a closed halfplane reaches the same mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from typing import Sequence

import numpy as np

from .measure import (
    FlagHalfspace2D,
    MassValue,
    Measure,
    Point,
    as_point,
)

GRID_ANGLES = 2048
THETA_TOL = 1e-10
VALUE_TOL = 1e-12


@dataclass(frozen=True)
class DepthValue:
    value: MassValue
    attained: bool
    witness: FlagHalfspace2D | None = None

    def __float__(self) -> float:
        return self.value.value

    @property
    def exact(self) -> Fraction | None:
        return self.value.exact


# --------------------------------------------------------------------------
# exact atomic sweep


@lru_cache(maxsize=256)
def _atom_table(m: Measure):
    """Atoms as integers: coordinates over a common denominator, weights likewise."""
    if not m.is_atomic:
        raise ValueError("measure has continuous components")
    items = tuple(m.atoms().items())
    L = math.lcm(1, *(c.denominator for p, _ in items for c in p))
    W = math.lcm(1, *(w.denominator for _, w in items))
    rows = tuple((p[0].numerator * (L // p[0].denominator),
                  p[1].numerator * (L // p[1].denominator),
                  w.numerator * (W // w.denominator)) for p, w in items)
    return rows, L, W


def _integer_vectors(table, x: Point):
    """Atom offsets from ``x`` scaled to integers; integer weight of atoms at ``x``."""
    rows, L0, _ = table
    dx, dy = x[0].denominator, x[1].denominator
    L = math.lcm(L0, dx, dy)
    f = L // L0
    xs = (x[0].numerator * (L // dx), x[1].numerator * (L // dy))
    vecs, at_x = [], 0
    for a0, a1, w in rows:
        v = (a0 * f - xs[0], a1 * f - xs[1])
        if v == (0, 0):
            at_x += w
        else:
            vecs.append((v, w))
    return vecs, at_x


def _half(d) -> int:
    return 0 if (d[1] > 0 or (d[1] == 0 and d[0] > 0)) else 1


def _angle_cmp(a, b) -> int:
    ha, hb = _half(a), _half(b)
    if ha != hb:
        return ha - hb
    c = a[0] * b[1] - a[1] * b[0]
    return -1 if c > 0 else (1 if c < 0 else 0)


def _grouped_directions(vecs):
    groups: dict[tuple[int, int], int] = {}
    for (vx, vy), w in vecs:
        g = math.gcd(vx, vy)
        key = (vx // g, vy // g)
        groups[key] = groups.get(key, 0) + w
    dirs = sorted(groups, key=cmp_to_key(_angle_cmp))
    return dirs, [groups[d] for d in dirs]


def _sweep(m: Measure, x: Point):
    """Exact depth (scaled integer), weight at ``x`` and the minimising (normal, ray)."""
    table = _atom_table(m)
    vecs, at_x = _integer_vectors(table, x)
    if not vecs:
        return at_x, at_x, ((1, 0), (0, 1))
    dirs, weights = _grouped_directions(vecs)
    k = len(dirs)
    total = sum(weights)
    prefix = [0]
    for i in range(2 * k):
        prefix.append(prefix[-1] + weights[i % k])

    def in_turn(d, e) -> bool:
        c = d[0] * e[1] - d[1] * e[0]
        return c > 0 or (c == 0 and d[0] * e[0] + d[1] * e[1] < 0)

    best, arg = None, None
    j = 0
    for i in range(k):
        j = max(j, i + 1)
        while j < i + k and in_turn(dirs[i], dirs[j % k]):
            j += 1
        inside = prefix[j] - prefix[i + 1]
        d = dirs[i]
        if best is None or inside < best:
            best, arg = inside, ((-d[1], d[0]), (-d[0], -d[1]))
        if total - inside < best:
            best, arg = total - inside, ((d[1], -d[0]), d)
    return best + at_x, at_x, arg


def depth_atomic(m: Measure, x: Sequence) -> DepthValue:
    """Exact depth of a purely atomic measure by a rotating half-turn sweep.

    Directions of the atoms seen from ``x`` are sorted by angle; for each
    direction ``d_i`` the atoms in the half-open half-turn ``(d_i, d_i + pi]``
    are counted with a two-pointer scan.  Every generic open halfplane is
    one of these half-turns or its complement.
    """
    x = as_point(x)
    value, _, (normal, ray) = _sweep(m, x)
    W = _atom_table(m)[2]
    witness = FlagHalfspace2D.exact(x, normal, ray)
    return DepthValue(MassValue.of(Fraction(value, W)), True, witness)


def depth_atomic_value(m: Measure, x: Sequence) -> Fraction:
    """Exact depth only, without building a witness."""
    value, _, _ = _sweep(m, as_point(x))
    return Fraction(value, _atom_table(m)[2])


# --------------------------------------------------------------------------
# flag enumeration


def _depth_flag_atomic(m: Measure, x: Point) -> DepthValue:
    """Exhaustive minimum of the flag mass over the critical flags at ``x``.

    The flag mass is piecewise constant in the normal angle with breaks at
    normals orthogonal to an atom direction, so those normals with both ray
    orientations contain a minimiser.
    """
    best, arg = None, None
    directions = []
    for a in m.atoms():
        v = (a[0] - x[0], a[1] - x[1])
        if v != (0, 0):
            directions.append(v)
    if not directions:
        directions = [(Fraction(0), Fraction(1))]
    for v in directions:
        for normal in ((-v[1], v[0]), (v[1], -v[0])):
            for ray in (v, (-v[0], -v[1])):
                f = FlagHalfspace2D.exact(x, normal, ray)
                val = m.flag_mass(f).exact
                if best is None or val < best:
                    best, arg = val, f
    return DepthValue(MassValue.of(best), True, arg)


# --------------------------------------------------------------------------
# mixtures: vectorised angular minimisation


def _unit(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _flag_values(m: Measure, X, U):
    """Best flag mass for normal ``U`` at ``X`` plus the closed-halfplane mass.

    Returns ``(flag, closed, ray_sign)``; the ray is ``ray_sign * rot90(U)``.
    """
    opened = m.open_mass_np(X, U)
    plus, minus, at = m.line_split_np(X, U)
    opened = np.asarray(opened + at, dtype=float)
    plus = np.broadcast_to(np.asarray(plus, dtype=float), opened.shape)
    minus = np.broadcast_to(np.asarray(minus, dtype=float), opened.shape)
    flag = opened + np.minimum(plus, minus)
    closed = opened + plus + minus
    sign = np.where(plus <= minus, 1.0, -1.0)
    return flag, closed, sign


def _critical_normals(m: Measure, X):
    """Normals (P, C, 2) orthogonal to each atom direction, plus the axis normals."""
    P = X.shape[0]
    normals = [np.broadcast_to(np.array(n, dtype=float), (P, 2))
               for n in ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))]
    tags = [None] * 4
    for a in m.atoms():
        v = np.array([float(a[0]), float(a[1])]) - X
        norm = np.hypot(v[:, 0], v[:, 1])
        safe = np.where(norm > 0, norm, 1.0)
        n1 = np.stack([-v[:, 1], v[:, 0]], axis=-1) / safe[:, None]
        n1 = np.where(norm[:, None] > 0, n1, np.array([1.0, 0.0]))
        normals += [n1, -n1]
        tags += [(a, 1), (a, -1)]
    return np.stack(normals, axis=1), tags


def _mixture_batch(m: Measure, X, grid: int = GRID_ANGLES, n_local: int = 4,
                   theta_tol: float = THETA_TOL):
    P = X.shape[0]
    step = 2 * np.pi / grid
    thetas = np.arange(grid) * step + 0.5 * step
    Ug = _unit(thetas)
    Xb = X[:, None, :]
    fg, cg, sg = _flag_values(m, Xb, Ug[None, :, :])

    # zoom refinement around the best local minima of the coarse scan
    left, right = np.roll(fg, 1, axis=1), np.roll(fg, -1, axis=1)
    score = np.where((fg <= left) & (fg <= right), fg, np.inf)
    K = min(n_local, grid)
    idx = np.argpartition(score, K - 1, axis=1)[:, :K]
    centers = thetas[idx]
    half = step
    offsets = np.linspace(-1.0, 1.0, 17)
    while half > theta_tol:
        th = centers[:, :, None] + half * offsets
        f, _, _ = _flag_values(m, X[:, None, None, :], _unit(th))
        j = np.argmin(f, axis=2)
        centers = np.take_along_axis(th, j[:, :, None], axis=2)[:, :, 0]
        half = half / 8
    Ur = _unit(centers)
    fr, cr, sr = _flag_values(m, Xb, Ur)

    Uc, tags = _critical_normals(m, X)
    fc, cc, sc = _flag_values(m, Xb, Uc)

    # a refined minimiser that sits on a critical normal is only a limit
    crit_theta = np.arctan2(Uc[..., 1], Uc[..., 0])
    gap = np.abs(np.angle(np.exp(1j * (centers[:, :, None] - crit_theta[:, None, :]))))
    interior = gap.min(axis=2) > 1e-7

    F = np.concatenate([fc, fr, fg], axis=1)
    best = np.argmin(F, axis=1)
    value = F[np.arange(P), best]
    tol = VALUE_TOL * (1.0 + np.abs(value))
    reach = ((cc <= value[:, None] + tol[:, None]).any(axis=1)
             | ((cr <= value[:, None] + tol[:, None]) & interior).any(axis=1)
             | (cg <= value[:, None] + tol[:, None]).any(axis=1))

    C = Uc.shape[1]
    U_all = np.concatenate([Uc, Ur, np.broadcast_to(Ug, (P, grid, 2))], axis=1)
    S_all = np.concatenate([sc, sr, sg], axis=1)
    normal = U_all[np.arange(P), best]
    sign = S_all[np.arange(P), best]
    crit = [tags[b] if b < C else None for b in best]
    return value, reach, normal, sign, crit


def _mixture_witness(x: Point, normal, sign, tag) -> FlagHalfspace2D:
    sign = 1 if sign > 0 else -1
    if tag is not None and tag[0] != x:
        a, s = tag
        v = (a[0] - x[0], a[1] - x[1])
        n = (-s * v[1], s * v[0])
        ray = (-sign * n[1], sign * n[0])
        return FlagHalfspace2D.exact(x, n, ray)
    n = (float(normal[0]), float(normal[1]))
    if n in ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)):
        q = (Fraction(n[0]), Fraction(n[1]))
        return FlagHalfspace2D.exact(x, q, (-sign * q[1], sign * q[0]))
    r = (-sign * n[1], sign * n[0])
    return FlagHalfspace2D(x, n, r, x, as_point(n), as_point(r), False)


def depth_mixture_many(m: Measure, points, chunk: int = 256, grid: int = GRID_ANGLES):
    """Depth values (floats) and attainment flags for an array of points."""
    X = np.asarray(points, dtype=float).reshape(-1, 2)
    values = np.empty(len(X))
    reach = np.empty(len(X), dtype=bool)
    for s in range(0, len(X), chunk):
        v, r, _, _, _ = _mixture_batch(m, X[s:s + chunk], grid)
        values[s:s + chunk] = v
        reach[s:s + chunk] = r
    return values, reach


def depth_flag(m: Measure, x: Sequence) -> DepthValue:
    """Minimum flag-halfspace mass at ``x``."""
    x = as_point(x)
    if m.is_atomic:
        return _depth_flag_atomic(m, x)
    X = np.array([[float(x[0]), float(x[1])]])
    value, reach, normal, sign, crit = _mixture_batch(m, X)
    witness = _mixture_witness(x, normal[0], float(sign[0]), crit[0])
    return DepthValue(MassValue(float(value[0])), bool(reach[0]), witness)


def depth(m: Measure, x: Sequence) -> DepthValue:
    """Halfspace depth of ``x``: exact sweep when atomic, flag search otherwise."""
    if m.is_atomic:
        return depth_atomic(m, x)
    return depth_flag(m, x)


def depth_atomic_np(m: Measure, points) -> np.ndarray:
    """Float depth of an atomic measure at many points.

    Closed-halfplane mass only changes when the boundary line passes an atom,
    so the infimum over normals is the minimum over the open arcs between
    consecutive critical angles; one probe per arc suffices.  Used for fast
    tracing; exact answers come from :func:`depth_atomic`.
    """
    X = np.asarray(points, dtype=float).reshape(-1, 2)
    items = list(m.atoms().items())
    out = np.zeros(len(X))
    if not items:
        return out
    A = np.array([[float(p[0]), float(p[1])] for p, _ in items])
    w = np.array([float(a) for _, a in items])
    for s in range(0, len(X), 512):
        Xc = X[s:s + 512]
        V = A[None, :, :] - Xc[:, None, :]
        at = (V[..., 0] == 0.0) & (V[..., 1] == 0.0)
        phi = np.arctan2(V[..., 1], V[..., 0])
        crit = np.concatenate([phi + np.pi / 2, phi - np.pi / 2], axis=1) % (2 * np.pi)
        crit = np.sort(np.where(np.concatenate([at, at], axis=1), np.nan, crit), axis=1)
        # NaN sorts last; pad with the largest angle so the wrap-around arc survives
        top = np.nanmax(np.where(np.isnan(crit).all(axis=1, keepdims=True), 0.0, crit),
                        axis=1, keepdims=True)
        crit = np.where(np.isnan(crit), top, crit)
        nxt = np.concatenate([crit[:, 1:], crit[:, :1] + 2 * np.pi], axis=1)
        mid = 0.5 * (crit + nxt)
        wide = (nxt - crit) > 1e-15
        # mass of the closed halfplane with inner normal at each mid angle
        cosd = np.cos(phi[:, None, :] - mid[:, :, None])
        inside = (cosd > 0) & ~at[:, None, :]
        mass = np.einsum("pkj,j->pk", inside, w)
        mass = np.where(wide, mass, np.inf)
        best = mass.min(axis=1)
        best = np.where(np.isfinite(best), best, 0.0)
        out[s:s + 512] = best + at.astype(float) @ w
    return out


def depth_many(m: Measure, points) -> np.ndarray:
    """Depth at many points as floats (exact values rounded for atomic measures)."""
    if m.is_atomic:
        return np.array([float(depth_atomic(m, p).value.value) for p in np.asarray(points, dtype=float).reshape(-1, 2)])
    return depth_mixture_many(m, points)[0]


# --------------------------------------------------------------------------
# closed-form references


def depth_cauchy_closed_form(x: Sequence[float], d: int | None = None) -> float:
    """Depth shared by the Cauchy-product-plus-center-atom and axis-Cauchy measures."""
    d = len(x) if d is None else d
    if d < 1:
        raise ValueError("dimension must be positive")
    mx = max(abs(float(c)) for c in x)
    if mx == 0.0:
        return 0.5
    return (0.5 - math.atan(mx) / math.pi) / d


def depth_cauchy_closed_form_np(X, d: int = 2):
    X = np.asarray(X, dtype=float)
    mx = np.max(np.abs(X), axis=-1)
    return np.where(mx == 0.0, 0.5, (0.5 - np.arctan(mx) / np.pi) / d)


def _disk_share(r: float, radius: float) -> float:
    if r >= radius:
        return 0.0
    t = r / radius
    return (math.acos(t) - t * math.sqrt(1.0 - t * t)) / math.pi


def _hull_radius(x, a) -> float:
    """Smallest radius rho with ``x`` in the convex hull of the disk B(0, rho) and ``a``."""
    ex, ey = x[0] - a[0], x[1] - a[1]
    ee = ex * ex + ey * ey
    if ee == 0.0:
        return 0.0
    r = math.hypot(x[0], x[1])
    # foot of the perpendicular from the origin on the line a + t (x - a)
    t_foot = -(a[0] * ex + a[1] * ey) / ee
    if t_foot >= 1.0:
        return min(r, abs(a[0] * ey - a[1] * ex) / math.sqrt(ee))
    return r


def depth_disk_atom_closed_form(x: Sequence[float], delta: float = 0.1,
                                radius: float = 2.0, atom=(1.0, 1.0)) -> float:
    """Depth of the uniform disk (mass 1) plus an atom inside it, from region geometry.

    Below the atom's disk level the regions are the disk's own; above it they
    are the hull of the disk region and the atom, cut by the disk region
    ``delta`` lower.  Inverting region membership gives the depth.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    x = (float(x[0]), float(x[1]))
    a = (float(atom[0]), float(atom[1]))
    r = math.hypot(*x)
    own = _disk_share(r, radius)
    base = _disk_share(math.hypot(*a), radius)
    hull = _disk_share(_hull_radius(x, a), radius)
    return max(own, min(hull, delta + max(base, own)))
