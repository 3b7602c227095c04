"""Independent reference computations: brute-force depth, Monte Carlo masses, depth fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .measure import (
    AxisCauchyMixture,
    CauchyProduct,
    Component,
    DiracAtom,
    FiniteAtomic,
    FlagHalfspace2D,
    Halfspace,
    Measure,
    UniformDisk,
    as_point,
)
from . import depth as _depth

MC_CHUNK = 4096


def brute_force_depth_atomic(m: Measure, x: Sequence) -> Fraction:
    """Minimum closed-halfplane mass over every combinatorially distinct normal.

    For each line through ``x`` and an atom, both closed sides are taken, and
    each normal is also tilted slightly either way by an exact amount small
    enough that no atom changes side except those on the line.
    """
    if not m.is_atomic:
        raise ValueError("brute force depth needs an atomic measure")
    x = as_point(x)
    atoms = [((a[0] - x[0], a[1] - x[1]), w) for a, w in m.atoms().items()]
    if not atoms:
        return Fraction(0)

    def closed_mass(n) -> Fraction:
        return sum((w for v, w in atoms if n[0] * v[0] + n[1] * v[1] >= 0), Fraction(0))

    best = None
    for d, _ in atoms:
        if d == (0, 0):
            continue
        for s in (1, -1):
            p = (-s * d[1], s * d[0])
            eps = None
            for v, _ in atoms:
                a = p[0] * v[0] + p[1] * v[1]
                b = d[0] * v[0] + d[1] * v[1]
                if a != 0 and b != 0:
                    bound = abs(a) / abs(b)
                    eps = bound if eps is None else min(eps, bound)
            eps = Fraction(1) if eps is None else eps / 2
            for n in (p, (p[0] + eps * d[0], p[1] + eps * d[1]),
                      (p[0] - eps * d[0], p[1] - eps * d[1])):
                val = closed_mass(n)
                best = val if best is None else min(best, val)
    if best is None:
        # every atom sits at x
        return closed_mass((Fraction(1), Fraction(0)))
    return best


# --------------------------------------------------------------------------
# Monte Carlo


def _open_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniforms in the open interval (0, 1)."""
    return (rng.integers(0, 2 ** 53, size=n) + 0.5) / 2.0 ** 53


def _cauchy(rng, n):
    return np.tan(np.pi * (_open_unit(rng, n) - 0.5))


def sample_component(c: Component, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` draws from the component normalised to a probability law."""
    if isinstance(c, UniformDisk):
        r = c.radius * np.sqrt(_open_unit(rng, n))
        t = 2 * np.pi * _open_unit(rng, n)
        return np.column_stack([c.center[0] + r * np.cos(t), c.center[1] + r * np.sin(t)])
    if isinstance(c, CauchyProduct):
        return np.column_stack([c.center[0] + _cauchy(rng, n), c.center[1] + _cauchy(rng, n)])
    if isinstance(c, AxisCauchyMixture):
        axis = rng.integers(0, 2, size=n)
        s = _cauchy(rng, n)
        out = np.zeros((n, 2))
        out[np.arange(n), axis] = s
        return out
    if isinstance(c, (FiniteAtomic, DiracAtom)):
        items = c.atom_items()
        w = np.array([float(a) for _, a in items])
        pts = np.array([[float(p[0]), float(p[1])] for p, _ in items])
        return pts[rng.choice(len(items), size=n, p=w / w.sum())]
    raise TypeError(f"cannot sample {type(c).__name__}")


def _indicator(region, Y: np.ndarray) -> np.ndarray:
    if isinstance(region, Halfspace):
        return Y @ np.asarray(region.normal) >= region.offset
    if isinstance(region, FlagHalfspace2D):
        V = Y - np.asarray(region.center)
        s = V @ np.asarray(region.plane_normal)
        t = V @ np.asarray(region.ray_direction)
        at = (V[:, 0] == 0) & (V[:, 1] == 0)
        return (s > 0) | ((s == 0) & (t > 0)) | at
    raise TypeError("region must be a Halfspace or FlagHalfspace2D")


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    n: int


def monte_carlo_mass(c: Component, region, n: int, seed: int = 0) -> MonteCarloEstimate:
    """Estimate the component's mass of ``region`` from ``n`` samples.

    Sample chunk ``k`` (``MC_CHUNK`` draws each) uses the ``k``-th child of
    ``SeedSequence(seed)``, so the estimate does not depend on how chunks are
    scheduled.
    """
    if n <= 0:
        raise ValueError("sample count must be positive")
    n_chunks = -(-n // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    hits = 0
    for k, ss in enumerate(children):
        size = min(MC_CHUNK, n - k * MC_CHUNK)
        Y = sample_component(c, size, np.random.Generator(np.random.PCG64(ss)))
        hits += int(np.count_nonzero(_indicator(region, Y)))
    p = hits / n
    scale = float(c.total_mass())
    return MonteCarloEstimate(scale * p, scale * math.sqrt(p * (1 - p) / n), n)


# --------------------------------------------------------------------------
# depth fields


@dataclass
class DepthField:
    bbox: tuple[float, float, float, float]
    resolution: tuple[int, int]
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.bbox[0], self.bbox[2], self.resolution[0])

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.bbox[1], self.bbox[3], self.resolution[1])

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.12g")

    def sidecar(self) -> dict:
        return {"bbox": list(self.bbox), "resolution": list(self.resolution),
                "layout": "row-major, rows follow y ascending", **self.metadata}


def grid_points(bbox, resolution) -> np.ndarray:
    x0, y0, x1, y1 = bbox
    nx, ny = resolution
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate bounding box {bbox}")
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2x2")
    X, Y = np.meshgrid(np.linspace(x0, x1, nx), np.linspace(y0, y1, ny))
    return np.column_stack([X.ravel(), Y.ravel()])


def depth_field(m: Measure, bbox, resolution, metadata: dict | None = None) -> DepthField:
    """Depth at every node of a regular grid, row-major with y as the row index."""
    pts = grid_points(bbox, resolution)
    vals = _depth.depth_many(m, pts).reshape(resolution[1], resolution[0])
    return DepthField(tuple(map(float, bbox)), tuple(resolution), vals, dict(metadata or {}))


# --------------------------------------------------------------------------
# random instances


def random_atomic_measure(rng: np.random.Generator, n_max: int = 12, coord: int = 5,
                          max_weight: int = 5, general_position: bool = False,
                          weights: Sequence | None = None) -> Measure:
    """Atoms on integer points of ``[-coord, coord]^2``.

    Weights are drawn from ``weights`` when given, otherwise integers in
    ``1..max_weight``.  With ``general_position`` no three atoms are collinear.
    """
    n = int(rng.integers(1, n_max + 1))
    pts: list[tuple[int, int]] = []
    tries = 0
    while len(pts) < n and tries < 10_000:
        tries += 1
        p = tuple(int(v) for v in rng.integers(-coord, coord + 1, size=2))
        if p in pts:
            continue
        if general_position and any(
                (b[0] - a[0]) * (p[1] - a[1]) == (b[1] - a[1]) * (p[0] - a[0])
                for i, a in enumerate(pts) for b in pts[i + 1:]):
            continue
        pts.append(p)
    if weights is None:
        ws = [Fraction(int(rng.integers(1, max_weight + 1))) for _ in pts]
    else:
        ws = [Fraction(weights[int(rng.integers(0, len(weights)))]) for _ in pts]
    return Measure.atomic(list(zip(pts, ws)))
