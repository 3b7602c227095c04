"""Planar measures, halfspaces and flag halfspaces.

Atomic weights and atom coordinates are held as :class:`fractions.Fraction`
so that boundary incidences (is this atom on that line?) are decided exactly.
Continuous components (uniform disk, Cauchy product, axis-supported Cauchy
mixture) evaluate in double precision from closed forms.

Halfspaces use the inner-normal convention ``{y : <normal, y> >= offset}``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Sequence, Union

import numpy as np

Point = tuple[Fraction, Fraction]
Scalar = Union[int, float, Fraction]

UNIT_TOL = 1e-12
AXIS_TOL = 1e-12


class MeasureError(ValueError):
    """Invalid measure, halfspace or flag construction."""


def to_fraction(v: Scalar) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MeasureError(f"not a rational: {v!r}") from exc
    if isinstance(v, bool):
        raise MeasureError(f"not a number: {v!r}")
    f = float(v)
    if not math.isfinite(f):
        raise MeasureError(f"non-finite value {v!r}")
    return Fraction(f)


def as_point(p: Sequence[Scalar]) -> Point:
    if len(p) != 2:
        raise MeasureError(f"expected a planar point, got {p!r}")
    return (to_fraction(p[0]), to_fraction(p[1]))


def _is_rational_vec(v: Sequence) -> bool:
    return all(isinstance(c, (int, Fraction)) for c in v)


def _dot(a: Sequence, b: Sequence):
    return a[0] * b[0] + a[1] * b[1]


def _cross(a: Sequence, b: Sequence):
    return a[0] * b[1] - a[1] * b[0]


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _unit_float(v: Sequence) -> tuple[float, float]:
    x, y = float(v[0]), float(v[1])
    n = math.hypot(x, y)
    if n == 0.0:
        raise MeasureError("zero direction vector")
    return (x / n, y / n)


def _check_unit(v: Sequence[float], what: str) -> None:
    n = math.hypot(float(v[0]), float(v[1]))
    if abs(n - 1.0) > UNIT_TOL:
        raise MeasureError(f"{what} must be a unit vector (norm {n!r})")


# --------------------------------------------------------------------------
# mass values


@dataclass(frozen=True)
class MassValue:
    """A mass, exact when only atomic parts contributed."""

    value: float
    exact: Fraction | None = None

    @classmethod
    def of(cls, v) -> "MassValue":
        if isinstance(v, MassValue):
            return v
        if isinstance(v, Fraction):
            return cls(float(v), v)
        return cls(float(v), None)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "MassValue") -> "MassValue":
        other = MassValue.of(other)
        if self.exact is not None and other.exact is not None:
            return MassValue.of(self.exact + other.exact)
        return MassValue(self.value + other.value)

    __radd__ = __add__

    def __str__(self) -> str:
        if self.exact is not None:
            return str(self.exact)
        return f"{self.value:.12g}"


def _total(parts: Iterable) -> MassValue:
    acc = MassValue.of(Fraction(0))
    for p in parts:
        acc = acc + MassValue.of(p)
    return acc


# --------------------------------------------------------------------------
# halfspaces


@dataclass(frozen=True)
class Halfspace:
    """Closed halfplane ``{y : <normal, y> >= offset}`` with a unit normal.

    ``qnormal``/``qoffset`` hold an exact (possibly unnormalised) description
    of the same set; exact predicates use them.  Build with
    :meth:`through` to keep rational input rational.
    """

    normal: tuple[float, float]
    offset: float
    qnormal: tuple[Fraction, Fraction] = field(default=None, repr=False, compare=False)
    qoffset: Fraction = field(default=None, repr=False, compare=False)
    rational: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        normal = (float(self.normal[0]), float(self.normal[1]))
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))
        if not (math.isfinite(normal[0]) and math.isfinite(normal[1]) and math.isfinite(self.offset)):
            raise MeasureError("non-finite halfspace")
        if self.qnormal is None:
            _check_unit(normal, "halfspace normal")
            object.__setattr__(self, "qnormal", (Fraction(normal[0]), Fraction(normal[1])))
            object.__setattr__(self, "qoffset", Fraction(self.offset))

    @classmethod
    def through(cls, point: Sequence[Scalar], normal: Sequence[Scalar],
                rational: bool | None = None) -> "Halfspace":
        """Closed halfplane with ``point`` on its boundary and inner normal ``normal``.

        The normal need not be unit length; rational inputs stay exact.
        """
        p = as_point(point)
        qn = as_point(normal)
        if qn == (0, 0):
            raise MeasureError("zero normal")
        qc = _dot(qn, p)
        scale = math.hypot(float(qn[0]), float(qn[1]))
        if rational is None:
            rational = _is_rational_vec(normal) and _is_rational_vec(point)
        return cls(_unit_float(qn), float(qc) / scale, qn, qc, rational)

    def complement(self) -> "Halfspace":
        """The halfspace with flipped normal and offset; its open part is the complement."""
        return Halfspace((-self.normal[0], -self.normal[1]), -self.offset,
                         (-self.qnormal[0], -self.qnormal[1]), -self.qoffset, self.rational)

    def side(self, p: Point) -> int:
        """Exact sign of ``<normal, p> - offset``."""
        return _sign(_dot(self.qnormal, p) - self.qoffset)

    def contains(self, p: Sequence[Scalar], closed: bool = True) -> bool:
        s = self.side(as_point(p))
        return s >= 0 if closed else s > 0

    def boundary_direction(self) -> tuple[Fraction, Fraction]:
        return (-self.qnormal[1], self.qnormal[0])

    def boundary_point(self) -> Point:
        n = self.qnormal
        k = self.qoffset / _dot(n, n)
        return (n[0] * k, n[1] * k)


@dataclass(frozen=True)
class FlagHalfspace2D:
    """``{center} ∪ open ray ∪ open halfplane`` in the plane.

    The open halfplane is ``{y : <plane_normal, y - center> > 0}`` and the open
    ray is ``{center + t * ray_direction : t > 0}`` on its boundary line.
    """

    center: tuple[float, float]
    plane_normal: tuple[float, float]
    ray_direction: tuple[float, float]
    qcenter: Point = field(default=None, repr=False, compare=False)
    qnormal: tuple[Fraction, Fraction] = field(default=None, repr=False, compare=False)
    qray: tuple[Fraction, Fraction] = field(default=None, repr=False, compare=False)
    rational: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if self.qnormal is None:
            _check_unit(self.plane_normal, "plane normal")
            _check_unit(self.ray_direction, "ray direction")
            if abs(_dot(self.plane_normal, self.ray_direction)) > UNIT_TOL:
                raise MeasureError("ray direction must be orthogonal to the plane normal")
            object.__setattr__(self, "qcenter", as_point(self.center))
            object.__setattr__(self, "qnormal", as_point(self.plane_normal))
            object.__setattr__(self, "qray", as_point(self.ray_direction))
        object.__setattr__(self, "center", (float(self.qcenter[0]), float(self.qcenter[1])))
        object.__setattr__(self, "plane_normal", tuple(map(float, self.plane_normal)))
        object.__setattr__(self, "ray_direction", tuple(map(float, self.ray_direction)))

    @classmethod
    def exact(cls, center: Sequence[Scalar], normal: Sequence[Scalar],
              ray: Sequence[Scalar]) -> "FlagHalfspace2D":
        """Flag from exact (not necessarily unit) direction vectors."""
        c, n, r = as_point(center), as_point(normal), as_point(ray)
        if n == (0, 0) or r == (0, 0):
            raise MeasureError("zero direction vector")
        if _dot(n, r) != 0:
            raise MeasureError("ray direction must be orthogonal to the plane normal")
        rational = all(_is_rational_vec(v) for v in (center, normal, ray))
        return cls(c, _unit_float(n), _unit_float(r), c, n, r, rational)

    def open_halfspace(self) -> Halfspace:
        """Closed halfspace whose interior is the open halfplane part."""
        return Halfspace.through(self.qcenter, self.qnormal, self.rational)

    def contains(self, p: Sequence[Scalar]) -> bool:
        p = as_point(p)
        v = (p[0] - self.qcenter[0], p[1] - self.qcenter[1])
        s = _dot(self.qnormal, v)
        if s != 0:
            return s > 0
        if v == (0, 0):
            return True
        return _dot(self.qray, v) > 0

    def shifted(self, new_center: Sequence[Scalar]) -> "FlagHalfspace2D":
        """Translate the flag so that it is centered at ``new_center``."""
        c, n, r = as_point(new_center), self.qnormal, self.qray
        return FlagHalfspace2D(c, self.plane_normal, self.ray_direction, c, n, r, self.rational)


# --------------------------------------------------------------------------
# components


def _segment_fraction(tau):
    """Share of a disk beyond a chord at signed distance ``tau`` (in radii)."""
    tau = np.clip(tau, -1.0, 1.0)
    return (np.arccos(tau) - tau * np.sqrt(1.0 - tau * tau)) / np.pi


def _cauchy_upper(q):
    """P(S > q) for a standard Cauchy variable S."""
    return 0.5 - np.arctan(q) / np.pi


class _Atomic:
    """Shared behaviour of FiniteAtomic and DiracAtom."""

    is_atomic = True

    def atom_items(self) -> tuple[tuple[Point, Fraction], ...]:
        raise NotImplementedError

    def total_mass(self) -> Fraction:
        return sum((w for _, w in self.atom_items()), Fraction(0))

    def halfspace_mass(self, h: Halfspace, closed: bool = True) -> Fraction:
        lo = 0 if closed else 1
        return sum((w for a, w in self.atom_items() if h.side(a) >= lo), Fraction(0))

    def line_mass(self, p: Point, d: Sequence[Fraction], rational: bool = True) -> Fraction:
        return sum((w for a, w in self.atom_items()
                    if _cross(d, (a[0] - p[0], a[1] - p[1])) == 0), Fraction(0))

    def ray_mass(self, o: Point, d: Sequence[Fraction], open: bool = True,
                 rational: bool = True) -> Fraction:
        total = Fraction(0)
        for a, w in self.atom_items():
            v = (a[0] - o[0], a[1] - o[1])
            if _cross(d, v) != 0:
                continue
            t = _dot(d, v)
            if t > 0 or (t == 0 and not open):
                total += w
        return total

    def point_mass(self, x: Point) -> Fraction:
        return sum((w for a, w in self.atom_items() if a == x), Fraction(0))

    # vectorised kernels used by the mixture engine ------------------------

    def _arrays(self):
        items = self.atom_items()
        A = np.array([[float(a[0]), float(a[1])] for a, _ in items]).reshape(-1, 2)
        W = np.array([float(w) for _, w in items])
        return A, W

    def open_mass_np(self, X, U):
        A, W = self._arrays()
        out = 0.0
        for (a0, a1), w in zip(A, W):
            dx, dy = a0 - X[..., 0], a1 - X[..., 1]
            s = U[..., 0] * dx + U[..., 1] * dy
            tol = UNIT_TOL * (1.0 + np.abs(dx) + np.abs(dy))
            out = out + w * (s > tol)
        return out

    def line_split_np(self, X, U):
        A, W = self._arrays()
        plus = minus = at = 0.0
        for (a0, a1), w in zip(A, W):
            dx, dy = a0 - X[..., 0], a1 - X[..., 1]
            tol = UNIT_TOL * (1.0 + np.abs(dx) + np.abs(dy))
            on = np.abs(U[..., 0] * dx + U[..., 1] * dy) <= tol
            t = -U[..., 1] * dx + U[..., 0] * dy
            plus = plus + w * (on & (t > tol))
            minus = minus + w * (on & (t < -tol))
            at = at + w * (on & (np.abs(t) <= tol))
        return plus, minus, at


@dataclass(frozen=True)
class FiniteAtomic(_Atomic):
    """Finitely many atoms with exact rational weights."""

    atoms: tuple[tuple[Point, Fraction], ...]

    def __post_init__(self):
        items = tuple((as_point(p), to_fraction(w)) for p, w in self.atoms)
        seen = set()
        for p, w in items:
            if w <= 0:
                raise MeasureError(f"atom weight must be positive, got {w}")
            if p in seen:
                raise MeasureError(f"duplicate atom at {p}; merge weights explicitly")
            seen.add(p)
        object.__setattr__(self, "atoms", items)

    def atom_items(self):
        return self.atoms


@dataclass(frozen=True)
class DiracAtom(_Atomic):
    location: Point
    mass: Fraction

    def __post_init__(self):
        object.__setattr__(self, "location", as_point(self.location))
        object.__setattr__(self, "mass", to_fraction(self.mass))
        if self.mass <= 0:
            raise MeasureError("Dirac mass must be positive")

    def atom_items(self):
        return ((self.location, self.mass),)


class _Continuous:
    is_atomic = False

    def line_mass(self, p, d, rational=True) -> float:
        return Fraction(0)

    def ray_mass(self, o, d, open=True, rational=True) -> float:
        return Fraction(0)

    def point_mass(self, x) -> Fraction:
        return Fraction(0)

    def line_split_np(self, X, U):
        return 0.0, 0.0, 0.0


@dataclass(frozen=True)
class UniformDisk(_Continuous):
    """Uniform distribution on a closed disk carrying ``total_mass``."""

    center: tuple[float, float]
    radius: float
    total_mass_: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise MeasureError("disk radius must be positive")
        if not (self.total_mass_ > 0):
            raise MeasureError("disk mass must be positive")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "total_mass_", float(self.total_mass_))

    def total_mass(self) -> float:
        return self.total_mass_

    def halfspace_mass(self, h: Halfspace, closed: bool = True) -> float:
        t = (h.offset - _dot(h.normal, self.center)) / self.radius
        return self.total_mass_ * float(_segment_fraction(t))

    def open_mass_np(self, X, U):
        t = (U[..., 0] * (X[..., 0] - self.center[0])
             + U[..., 1] * (X[..., 1] - self.center[1])) / self.radius
        return self.total_mass_ * _segment_fraction(t)


@dataclass(frozen=True)
class CauchyProduct(_Continuous):
    """Independent standard Cauchy marginals, shifted to ``center``."""

    dimension: int = 2
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.dimension != 2:
            raise MeasureError("planar mass evaluation needs dimension 2")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def total_mass(self) -> float:
        return 1.0

    def halfspace_mass(self, h: Halfspace, closed: bool = True) -> float:
        # <u, X> is Cauchy with location <u, center> and scale ||u||_1
        scale = abs(h.normal[0]) + abs(h.normal[1])
        return float(_cauchy_upper((h.offset - _dot(h.normal, self.center)) / scale))

    def open_mass_np(self, X, U):
        t = (U[..., 0] * (X[..., 0] - self.center[0])
             + U[..., 1] * (X[..., 1] - self.center[1]))
        return _cauchy_upper(t / (np.abs(U[..., 0]) + np.abs(U[..., 1])))


@dataclass(frozen=True)
class AxisCauchyMixture(_Continuous):
    """Standard Cauchy laws on the coordinate axes, each with weight 1/d."""

    dimension: int = 2

    def __post_init__(self):
        if self.dimension != 2:
            raise MeasureError("planar mass evaluation needs dimension 2")

    def total_mass(self) -> float:
        return 1.0

    def _parallel(self, comp, rational: bool) -> bool:
        return comp == 0 if rational else abs(float(comp)) <= AXIS_TOL

    def halfspace_mass(self, h: Halfspace, closed: bool = True) -> float:
        total = 0.0
        for i in range(2):
            if self._parallel(h.qnormal[i], h.rational):
                # whole axis is on one side, or inside the boundary line
                c = h.qoffset if h.rational else h.offset
                tol = 0 if h.rational else AXIS_TOL
                inside = c <= tol if closed else c < -tol
                total += 1.0 if inside else 0.0
            else:
                q = h.offset / h.normal[i]
                total += float(_cauchy_upper(q)) if h.normal[i] > 0 else float(1.0 - _cauchy_upper(q))
        return total / 2

    def _axis_of_line(self, p, d, rational: bool):
        for i in range(2):
            j = 1 - i
            if self._parallel(d[j], rational) and self._parallel(p[j], rational):
                return i
        return None

    def line_mass(self, p, d, rational=True) -> float:
        return 0.5 if self._axis_of_line(p, d, rational) is not None else Fraction(0)

    def ray_mass(self, o, d, open=True, rational=True) -> float:
        i = self._axis_of_line(o, d, rational)
        if i is None:
            return Fraction(0)
        q = float(o[i])
        up = float(_cauchy_upper(q))
        return 0.5 * (up if d[i] > 0 else 1.0 - up)

    def open_mass_np(self, X, U):
        ux = U[..., 0] * X[..., 0] + U[..., 1] * X[..., 1]
        total = 0.0
        for i in range(2):
            ui = U[..., i]
            par = np.abs(ui) <= AXIS_TOL
            safe = np.where(par, 1.0, ui)
            q = ux / safe
            tail = np.where(ui > 0, _cauchy_upper(q), 1.0 - _cauchy_upper(q))
            total = total + np.where(par, (ux < -AXIS_TOL).astype(float), tail)
        return total / 2

    def line_split_np(self, X, U):
        plus = minus = 0.0
        for i in range(2):
            j = 1 - i
            on = (np.abs(U[..., i]) <= AXIS_TOL) & (np.abs(X[..., j]) <= AXIS_TOL)
            # ray direction r = (-u2, u1)
            ri = -U[..., 1] if i == 0 else U[..., 0]
            up = _cauchy_upper(X[..., i])
            plus = plus + np.where(on, np.where(ri > 0, up, 1.0 - up), 0.0) / 2
            minus = minus + np.where(on, np.where(ri > 0, 1.0 - up, up), 0.0) / 2
        return plus, minus, 0.0


Component = Union[FiniteAtomic, DiracAtom, UniformDisk, CauchyProduct, AxisCauchyMixture]


# --------------------------------------------------------------------------
# measures


def _direction(d: Sequence[Scalar]) -> tuple[tuple[Fraction, Fraction], bool]:
    rational = _is_rational_vec(d)
    if not rational:
        _check_unit(d, "direction")
    q = as_point(d)
    if q == (0, 0):
        raise MeasureError("zero direction vector")
    return q, rational


def _scaled(weight: Fraction, v):
    if isinstance(v, Fraction):
        return weight * v
    return float(weight) * v


@dataclass(frozen=True)
class Measure:
    """Weighted sum of components.  Immutable; safe to share across threads."""

    components: tuple[tuple[Component, Fraction], ...]

    def __post_init__(self):
        comps = tuple((c, to_fraction(w)) for c, w in self.components)
        for _, w in comps:
            if w <= 0:
                raise MeasureError("component weights must be positive")
        object.__setattr__(self, "components", comps)

    @classmethod
    def atomic(cls, atoms: Iterable[tuple[Sequence[Scalar], Scalar]]) -> "Measure":
        return cls(((FiniteAtomic(tuple(atoms)), Fraction(1)),))

    def __add__(self, other: "Measure") -> "Measure":
        return Measure(self.components + other.components)

    @property
    def is_atomic(self) -> bool:
        return all(c.is_atomic for c, _ in self.components)

    def atoms(self) -> dict[Point, Fraction]:
        """Merged atoms of all atomic components, weights included."""
        out: dict[Point, Fraction] = {}
        for c, w in self.components:
            if c.is_atomic:
                for p, a in c.atom_items():
                    out[p] = out.get(p, Fraction(0)) + w * a
        return out

    def continuous(self) -> list[tuple[Component, float]]:
        return [(c, float(w)) for c, w in self.components if not c.is_atomic]

    def total_mass(self) -> MassValue:
        return _total(_scaled(w, c.total_mass()) for c, w in self.components)

    def halfspace_mass(self, h: Halfspace) -> MassValue:
        return _total(_scaled(w, c.halfspace_mass(h, True)) for c, w in self.components)

    def open_halfspace_mass(self, h: Halfspace) -> MassValue:
        return _total(_scaled(w, c.halfspace_mass(h, False)) for c, w in self.components)

    def line_mass(self, p: Sequence[Scalar], direction: Sequence[Scalar]) -> MassValue:
        d, rational = _direction(direction)
        p = as_point(p)
        return _total(_scaled(w, c.line_mass(p, d, rational)) for c, w in self.components)

    def ray_mass(self, origin: Sequence[Scalar], direction: Sequence[Scalar],
                 open: bool = True) -> MassValue:
        d, rational = _direction(direction)
        o = as_point(origin)
        return _total(_scaled(w, c.ray_mass(o, d, open, rational)) for c, w in self.components)

    def point_mass(self, x: Sequence[Scalar]) -> MassValue:
        x = as_point(x)
        return _total(w * c.point_mass(x) for c, w in self.components)

    def flag_mass(self, f: FlagHalfspace2D) -> MassValue:
        plane = self.open_halfspace_mass(f.open_halfspace())
        ray = _total(_scaled(w, c.ray_mass(f.qcenter, f.qray, True, f.rational))
                     for c, w in self.components)
        return plane + ray + self.point_mass(f.qcenter)

    # vectorised kernels ---------------------------------------------------

    def open_mass_np(self, X, U):
        """Mass of ``{y : <u, y - x> > 0}`` for broadcast arrays of x and u."""
        out = 0.0
        for c, w in self.components:
            out = out + float(w) * c.open_mass_np(X, U)
        return out

    def line_split_np(self, X, U):
        """Masses on the boundary line split into (ray along r, ray along -r, at x).

        ``r`` is the normal rotated by +90 degrees.
        """
        plus = minus = at = 0.0
        for c, w in self.components:
            p, m, a = c.line_split_np(X, U)
            plus = plus + float(w) * p
            minus = minus + float(w) * m
            at = at + float(w) * a
        return plus, minus, at


def halfspace_mass(m: Measure, h: Halfspace) -> MassValue:
    return m.halfspace_mass(h)


def open_halfspace_mass(m: Measure, h: Halfspace) -> MassValue:
    return m.open_halfspace_mass(h)


def line_mass(m: Measure, p, direction) -> MassValue:
    return m.line_mass(p, direction)


def ray_mass(m: Measure, origin, direction, open: bool = True) -> MassValue:
    return m.ray_mass(origin, direction, open)


def flag_mass(m: Measure, f: FlagHalfspace2D) -> MassValue:
    return m.flag_mass(f)


def point_mass(m: Measure, x) -> MassValue:
    return m.point_mass(x)


# --------------------------------------------------------------------------
# reference measures


def disk_with_atom(delta: Scalar = Fraction(1, 10), radius: float = 2.0,
                   atom: Sequence[Scalar] = (1, 1)) -> Measure:
    """Uniform probability on a disk at the origin plus an atom of mass ``delta``."""
    return Measure(((UniformDisk((0.0, 0.0), radius, 1.0), Fraction(1)),
                    (DiracAtom(as_point(atom), to_fraction(delta)), Fraction(1))))


def cauchy_with_center_atom(d: int = 2) -> Measure:
    """Cauchy product with weight 1/d plus a Dirac at 0 with weight 1/2 - 1/(2d)."""
    return Measure(((CauchyProduct(d), Fraction(1, d)),
                    (DiracAtom((0, 0), Fraction(1, 2) - Fraction(1, 2 * d)), Fraction(1))))


def axis_cauchy(d: int = 2) -> Measure:
    """Cauchy laws on the coordinate axes, mixed with equal weights."""
    return Measure(((AxisCauchyMixture(d), Fraction(1)),))


# --------------------------------------------------------------------------
# JSON measure specs

_SPEC_KEYS = {
    "finite_atomic": {"atoms"},
    "uniform_disk": {"center", "radius", "total_mass"},
    "cauchy_product": {"dimension", "center"},
    "axis_cauchy": {"dimension"},
    "dirac": {"location", "mass"},
}


def _rat_json(q: Fraction):
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _num(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise MeasureError(f"{what}: expected a number, got {v!r}")
    f = float(to_fraction(v)) if isinstance(v, str) else float(v)
    if not math.isfinite(f):
        raise MeasureError(f"{what}: non-finite value")
    return f


def _pair(v, what: str):
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise MeasureError(f"{what}: expected [x, y]")
    return v


def component_from_json(d: dict) -> tuple[Component, Fraction]:
    if not isinstance(d, dict) or "type" not in d:
        raise MeasureError("component needs a 'type'")
    kind = d["type"]
    if kind not in _SPEC_KEYS:
        raise MeasureError(f"unknown component type {kind!r}")
    extra = set(d) - _SPEC_KEYS[kind] - {"type", "weight"}
    if extra:
        raise MeasureError(f"unknown keys for {kind}: {sorted(extra)}")
    weight = to_fraction(d.get("weight", 1))
    if kind == "finite_atomic":
        atoms = d.get("atoms")
        if not isinstance(atoms, list) or not atoms:
            raise MeasureError("finite_atomic needs a non-empty 'atoms' list of [x, y, weight]")
        rows = []
        for a in atoms:
            if not isinstance(a, (list, tuple)) or len(a) != 3:
                raise MeasureError(f"atom must be [x, y, weight], got {a!r}")
            rows.append(((to_fraction(a[0]), to_fraction(a[1])), to_fraction(a[2])))
        return FiniteAtomic(tuple(rows)), weight
    if kind == "dirac":
        return DiracAtom(as_point(_pair(d.get("location"), "dirac location")),
                         to_fraction(d.get("mass", 1))), weight
    if kind == "uniform_disk":
        c = _pair(d.get("center", [0, 0]), "disk center")
        return UniformDisk((_num(c[0], "center"), _num(c[1], "center")),
                           _num(d.get("radius"), "radius"),
                           _num(d.get("total_mass", 1), "total_mass")), weight
    if kind == "cauchy_product":
        c = _pair(d.get("center", [0, 0]), "cauchy center")
        return CauchyProduct(int(d.get("dimension", 2)),
                             (_num(c[0], "center"), _num(c[1], "center"))), weight
    return AxisCauchyMixture(int(d.get("dimension", 2))), weight


def measure_from_json(obj: dict) -> Measure:
    """Build a measure from a parsed spec ``{"components": [...]}``."""
    if not isinstance(obj, dict):
        raise MeasureError("spec must be a JSON object")
    extra = set(obj) - {"components"}
    if extra:
        raise MeasureError(f"unknown top-level keys: {sorted(extra)}")
    comps = obj.get("components")
    if not isinstance(comps, list) or not comps:
        raise MeasureError("spec needs a non-empty 'components' list")
    return Measure(tuple(component_from_json(c) for c in comps))


def component_to_json(c: Component, w: Fraction) -> dict:
    if isinstance(c, FiniteAtomic):
        d = {"type": "finite_atomic",
             "atoms": [[_rat_json(p[0]), _rat_json(p[1]), _rat_json(a)] for p, a in c.atoms]}
    elif isinstance(c, DiracAtom):
        d = {"type": "dirac", "location": [_rat_json(c.location[0]), _rat_json(c.location[1])],
             "mass": _rat_json(c.mass)}
    elif isinstance(c, UniformDisk):
        d = {"type": "uniform_disk", "center": list(c.center), "radius": c.radius,
             "total_mass": c.total_mass_}
    elif isinstance(c, CauchyProduct):
        d = {"type": "cauchy_product", "dimension": c.dimension, "center": list(c.center)}
    elif isinstance(c, AxisCauchyMixture):
        d = {"type": "axis_cauchy", "dimension": c.dimension}
    else:
        raise MeasureError(f"cannot serialise {type(c).__name__}")
    d["weight"] = _rat_json(w)
    return d


def measure_to_json(m: Measure) -> dict:
    return {"components": [component_to_json(c, w) for c, w in m.components]}


def load_measure(path) -> Measure:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeasureError(f"malformed JSON in {path}: {exc}") from exc
    return measure_from_json(obj)


def dump_measure(m: Measure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(measure_to_json(m), fh, indent=2)
        fh.write("\n")


def spec_hash(m: Measure) -> str:
    """SHA-256 of the canonical JSON form of ``m``."""
    canon = json.dumps(measure_to_json(m), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
