"""Hyperboloid-model plane geometry: points, geodesics, reflections, polygons.

Everything lives on the upper sheet of <x,x> = -1 in R^{2,1}, with the
Minkowski pairing <u,v> = -u0*v0 + u1*v1 + u2*v2.  Geodesics are cut out by
spacelike unit normals, isometries are linear maps preserving the pairing,
so every combinatorial decision downstream (which wall a ray exits through,
which side of a wall a boundary direction sits on) reduces to a sign test
of one bilinear form.

Scalar work is done in numpy extended precision (80-bit on x86-64): long
products of reflection matrices lose relative accuracy linearly in the word
length, and the tracing code multiplies dozens of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCrossingError, DomainError, InvalidInputError

REAL = np.longdouble

HYPERBOLOID_TOL = 1e-12
UNIT_NORMAL_TOL = 1e-12
FORM_TOL = 1e-10
TANGENCY_TOL = 1e-9
CANONICAL_QUANTUM = 1e-9

_J_DIAG = np.array([-1.0, 1.0, 1.0])


def mink(u, v):
    """Minkowski pairing, vectorized over leading axes."""
    u = np.asarray(u)
    v = np.asarray(v)
    return -u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] + u[..., 2] * v[..., 2]


def _as_vec(x, dtype=REAL):
    a = np.asarray(x, dtype=dtype)
    if a.shape != (3,):
        raise InvalidInputError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class HPoint:
    """Point on the upper hyperboloid sheet: <x,x> = -1, x0 > 0."""

    coords: np.ndarray

    def __post_init__(self):
        c = _as_vec(self.coords)
        object.__setattr__(self, "coords", c)
        norm = float(mink(c, c))
        # the pairing cancels quadratically in the entries, so the tolerance
        # must scale with x0^2
        scale = max(1.0, float(c[0]) ** 2)
        if abs(norm + 1.0) > HYPERBOLOID_TOL * scale:
            raise InvalidInputError(f"point off the hyperboloid: <x,x> = {norm!r}")
        if c[0] <= 0:
            raise InvalidInputError("point on the lower sheet (x0 <= 0)")


@dataclass(frozen=True, eq=False)
class HGeodesic:
    """Geodesic as the zero set of <y,n> for a spacelike unit normal n.

    The stored normal is canonical: after quantization at 1e-9 the first
    nonzero coordinate is positive, so geodesics arising repeatedly from
    different chambers carry an identical representative.
    """

    normal: np.ndarray

    def __post_init__(self):
        n = _as_vec(self.normal)
        norm = float(mink(n, n))
        scale = max(1.0, float(np.max(np.abs(n))) ** 2)
        if abs(norm - 1.0) > UNIT_NORMAL_TOL * scale:
            raise InvalidInputError(f"normal not spacelike-unit: <n,n> = {norm!r}")
        object.__setattr__(self, "normal", canonical_normal(n))


@dataclass(frozen=True, eq=False)
class HIsometry:
    """Linear map preserving the Minkowski form and the upper sheet."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=REAL)
        if m.shape != (3, 3):
            raise InvalidInputError("isometry matrix must be 3x3")
        object.__setattr__(self, "matrix", m)
        gram = m.T @ np.diag(_J_DIAG.astype(REAL)) @ m
        err = float(np.max(np.abs(gram - np.diag(_J_DIAG.astype(REAL)))))
        scale = float(np.max(np.abs(m)))
        if err > FORM_TOL * max(1.0, scale * scale):
            raise InvalidInputError(f"matrix does not preserve the form (err {err:g})")
        if m[0, 0] <= 0:
            raise InvalidInputError("isometry swaps the sheets ((0,0) entry <= 0)")

    def apply(self, x: HPoint) -> HPoint:
        return HPoint(self.matrix @ x.coords)

    def apply_normal(self, g: HGeodesic) -> HGeodesic:
        return HGeodesic(self.matrix @ g.normal)


@dataclass(frozen=True, eq=False)
class Ray:
    """Geodesic ray r(s) = cosh(s) base + sinh(s) dir, s >= 0."""

    base: HPoint
    direction: np.ndarray

    def __post_init__(self):
        d = _as_vec(self.direction)
        object.__setattr__(self, "direction", d)
        if abs(float(mink(d, d)) - 1.0) > 1e-10:
            raise InvalidInputError("ray direction must be unit spacelike")
        if abs(float(mink(self.base.coords, d))) > 1e-10:
            raise InvalidInputError("ray direction must be tangent at the base")

    def point_at(self, s) -> HPoint:
        s = REAL(s)
        return HPoint(np.cosh(s) * self.base.coords + np.sinh(s) * self.direction)


@dataclass(frozen=True, eq=False)
class Polygon:
    """Regular right-angled p-gon centered at the base point (1,0,0)."""

    p: int
    vertices: tuple
    sides: tuple
    circumradius: float
    inradius: float
    side_length: float


def origin() -> HPoint:
    return HPoint(np.array([1.0, 0.0, 0.0], dtype=REAL))


def canonical_normal(n):
    """Fix the sign so the first coordinate nonzero after quantization is positive."""
    n = np.asarray(n, dtype=REAL)
    for i in range(3):
        if abs(float(n[i])) > CANONICAL_QUANTUM:
            if n[i] < 0:
                return -n
            return n
    return n


def dist(x: HPoint, y: HPoint) -> float:
    """Hyperbolic distance arccosh(-<x,y>)."""
    arg = -mink(x.coords, y.coords)
    if arg < 1:
        # roundoff can push the pairing slightly above -1 for equal points
        if arg < 1 - 1e-9:
            raise InvalidInputError("points not both on the hyperboloid")
        arg = REAL(1.0)
    return float(np.arccosh(arg))


def dist_batch(xs, ys):
    arg = np.maximum(-mink(xs, ys), 1.0)
    return np.arccosh(arg)


def reflection_matrix(w: HGeodesic) -> HIsometry:
    """Matrix of the reflection through the wall, x -> x - 2<x,n>n."""
    return HIsometry(_reflection_matrix_raw(w.normal))


def _reflection_matrix_raw(n):
    n = np.asarray(n, dtype=REAL)
    jn = n * _J_DIAG.astype(REAL)
    return np.eye(3, dtype=REAL) - 2.0 * np.outer(n, jn)


def reflect(w: HGeodesic, x: HPoint) -> HPoint:
    c = float(mink(x.coords, w.normal))
    return HPoint(x.coords - REAL(2.0) * REAL(c) * w.normal)


def geodesic_through(x: HPoint, y: HPoint) -> HGeodesic:
    """The unique geodesic through two distinct points."""
    raw = _J_DIAG.astype(REAL) * np.cross(x.coords, y.coords)
    s = float(mink(raw, raw))
    if s <= 0:
        raise InvalidInputError("points too close to span a geodesic")
    return HGeodesic(raw / np.sqrt(REAL(s)))


def tangent_toward(x: HPoint, y: HPoint):
    """Unit tangent at x pointing toward y."""
    u = y.coords + mink(x.coords, y.coords) * x.coords
    s = float(mink(u, u))
    if s <= 0:
        raise InvalidInputError("coincident points have no direction")
    return u / np.sqrt(REAL(s))


def angle_at(x: HPoint, y1: HPoint, y2: HPoint) -> float:
    """Angle at x between the segments toward y1 and y2."""
    u1 = tangent_toward(x, y1)
    u2 = tangent_toward(x, y2)
    c = float(mink(u1, u2))
    return float(np.arccos(np.clip(REAL(c), REAL(-1.0), REAL(1.0))))


def ray_from_angle(theta, base: HPoint | None = None) -> Ray:
    """Ray from the base point in the tangent direction at angle theta."""
    if base is None:
        base = origin()
    t = REAL(theta)
    d = np.array([REAL(0.0), np.cos(t), np.sin(t)], dtype=REAL)
    if float(base.coords[0]) != 1.0:
        raise InvalidInputError("angle-parametrized rays require the base point (1,0,0)")
    return Ray(base, d)


def _vertex_angle(p: int, radius) -> REAL:
    """Interior angle of the regular p-gon with circumradius `radius`."""
    r = REAL(radius)
    alpha = REAL(2.0) * REAL(np.pi) / REAL(p)
    v0 = np.array([np.cosh(r), np.sinh(r), REAL(0.0)], dtype=REAL)
    v1 = np.array([np.cosh(r), np.sinh(r) * np.cos(alpha), np.sinh(r) * np.sin(alpha)])
    vm = np.array([np.cosh(r), np.sinh(r) * np.cos(alpha), -np.sinh(r) * np.sin(alpha)])
    u1 = v1 + mink(v0, v1) * v0
    um = vm + mink(v0, vm) * v0
    c = mink(u1, um) / np.sqrt(mink(u1, u1) * mink(um, um))
    return np.arccos(np.clip(c, REAL(-1.0), REAL(1.0)))


def build_right_angled_polygon(p: int) -> Polygon:
    """Regular hyperbolic p-gon with all interior angles pi/2.

    The circumradius is found by bisection on the vertex-angle residual
    (the closed-form side length is kept out of the construction so it can
    serve as an independent oracle).
    """
    if p <= 4:
        raise DomainError(
            f"no right-angled regular hyperbolic {p}-gon: interior angles of a "
            "compact hyperbolic polygon must sum to less than (p-2)*pi"
        )
    target = REAL(np.pi) / REAL(2.0)
    lo, hi = REAL(1e-6), REAL(10.0)
    if not (_vertex_angle(p, lo) > target > _vertex_angle(p, hi)):
        raise DomainError(f"vertex angle residual does not bracket pi/2 for p={p}")
    for _ in range(120):
        mid = (lo + hi) / REAL(2.0)
        if _vertex_angle(p, mid) > target:
            lo = mid
        else:
            hi = mid
    radius = (lo + hi) / REAL(2.0)

    alpha = REAL(2.0) * REAL(np.pi) / REAL(p)
    verts = []
    for k in range(p):
        a = alpha * REAL(k)
        verts.append(
            HPoint(
                np.array(
                    [np.cosh(radius), np.sinh(radius) * np.cos(a), np.sinh(radius) * np.sin(a)],
                    dtype=REAL,
                )
            )
        )
    sides = tuple(geodesic_through(verts[k], verts[(k + 1) % p]) for k in range(p))
    side_len = dist(verts[0], verts[1])
    inr = float(np.arcsinh(np.abs(mink(origin().coords, sides[0].normal))))
    return Polygon(
        p=p,
        vertices=tuple(verts),
        sides=sides,
        circumradius=float(radius),
        inradius=inr,
        side_length=side_len,
    )


def crossing_parameter(r: Ray, w: HGeodesic):
    """Parameter s >= 0 where the ray crosses the wall, or None.

    The pairing along the ray is f(s) = A cosh(s) + B sinh(s) with
    A = <base,n>, B = <dir,n>; a transverse crossing exists exactly when f
    changes sign on [0, inf).  Grazing configurations (|A| ~ |B| with
    opposite signs, or the ray inside the wall) are reported as degenerate
    so the caller can perturb.
    """
    a = REAL(mink(r.base.coords, w.normal))
    b = REAL(mink(r.direction, w.normal))
    scale = max(abs(float(a)), abs(float(b)), 1e-300)
    if abs(float(a)) <= TANGENCY_TOL * scale:
        if abs(float(b)) <= TANGENCY_TOL * scale:
            raise DegenerateCrossingError("ray lies inside the wall")
        return 0.0
    asymptotic = a + b  # sign of f at infinity
    if abs(float(asymptotic)) <= TANGENCY_TOL * scale:
        raise DegenerateCrossingError("ray asymptotically tangent to the wall")
    if (float(a) > 0) == (float(asymptotic) > 0):
        return None
    s = np.arctanh(-a / b)
    return float(s)
