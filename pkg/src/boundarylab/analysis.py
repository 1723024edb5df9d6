"""Averaging inequalities on the sampled boundary and its cone graphs.

The chain of checks mirrors how a variation |u(x) - u(y)| gets controlled:
a discrete upper gradient turns curve integrals into edge sums, averaging
over the curve family of a cone bounds the variation by fiber averages of
the gradient (a finite Fubini swap), a dyadic splitting lemma turns the
segment average into endpoint maximal functions, and the ball form of the
inequality is checked directly on sampled balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    PreconditionError,
    UndefinedValueError,
    UndersampledError,
)


# ------------------------------------------------------------ step functions

@dataclass(frozen=True)
class StepFunction:
    """Nonnegative piecewise-constant function on [0, length]."""

    edges: tuple  # increasing, edges[0] = 0, edges[-1] = length
    values: tuple  # one nonnegative value per piece

    def __post_init__(self):
        if len(self.edges) != len(self.values) + 1:
            raise DomainError("need one more edge than values")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise DomainError("edges must increase strictly")
        if self.edges[0] != 0.0:
            raise DomainError("domain must start at 0")
        if any(v < 0 for v in self.values):
            raise DomainError("step values must be nonnegative")

    @property
    def length(self):
        return self.edges[-1]

    def integral(self) -> float:
        return float(
            sum(v * (b - a) for v, a, b in zip(self.values, self.edges, self.edges[1:]))
        )

    def rescaled(self, factor: float) -> "StepFunction":
        """The function t -> f(t / factor) on [0, factor * length]."""
        return StepFunction(
            edges=tuple(e * factor for e in self.edges), values=self.values
        )

    def mirrored(self) -> "StepFunction":
        """Reflection t -> f(length - t)."""
        length = self.length
        edges = tuple(length - e for e in reversed(self.edges))
        return StepFunction(edges=edges, values=tuple(reversed(self.values)))

    @classmethod
    def random(cls, rng, length: float = 1.0, max_pieces: int = 64) -> "StepFunction":
        pieces = int(rng.integers(1, max_pieces + 1))
        cuts = np.sort(rng.uniform(0.0, length, size=pieces - 1))
        edges = (0.0, *map(float, cuts), length)
        edges = tuple(dict.fromkeys(edges))  # drop accidental duplicates
        values = tuple(float(v) for v in rng.exponential(1.0, size=len(edges) - 1))
        return cls(edges=edges, values=values)


class _EnvelopeIntegrator:
    """O(1) evaluation of integral_0^r min(t, l-t)^expo f(t) dt.

    The midpoint is inserted as a breakpoint; prefix integrals at the
    breakpoints are precomputed, so each query costs one closed-form tail.
    """

    def __init__(self, f: StepFunction, expo: float):
        self.length = f.length
        self.expo = expo
        half = 0.5 * f.length
        edges = [f.edges[0]]
        values = []
        for v, a, b in zip(f.values, f.edges, f.edges[1:]):
            if a < half < b:
                edges.append(half)
                values.append(v)
            edges.append(b)
            values.append(v)
        self.edges = np.array(edges)
        self.values = np.array(values)
        prefix = [0.0]
        for v, a, b in zip(self.values, self.edges, self.edges[1:]):
            prefix.append(prefix[-1] + self._piece(v, a, b))
        self.prefix = np.array(prefix)

    def _piece(self, v, a, b):
        expo = self.expo
        half = 0.5 * self.length
        if b <= half:
            return v * (b ** (expo + 1.0) - a ** (expo + 1.0)) / (expo + 1.0)
        return (
            v
            * ((self.length - a) ** (expo + 1.0) - (self.length - b) ** (expo + 1.0))
            / (expo + 1.0)
        )

    def __call__(self, r: float) -> float:
        if r <= 0.0:
            return 0.0
        if r >= self.length:
            return float(self.prefix[-1])
        i = int(np.searchsorted(self.edges, r, side="right")) - 1
        i = max(0, min(i, len(self.values) - 1))
        return float(self.prefix[i] + self._piece(self.values[i], self.edges[i], r))


def _left_sup(f: StepFunction, exponent: float) -> float:
    """sup over r <= l of r^-exponent * integral_0^r envelope^(exponent-1) f.

    On pieces left of the midpoint the objective is constant in r between
    breakpoints, so candidates are the breakpoints; right of the midpoint
    the stationarity residual is strictly decreasing per piece and a guarded
    Newton iteration finds the interior candidate.
    """
    length = f.length
    expo = exponent - 1.0
    half = 0.5 * length
    integral = _EnvelopeIntegrator(f, expo)

    def objective(r):
        if r <= 0:
            return 0.0
        return integral(r) / r**exponent

    candidates = list(integral.edges[1:])
    # interior stationary points right of the midpoint:
    # g(r) = r (l-r)^expo f(r) - exponent * F(r), strictly decreasing
    for v, a, b in zip(integral.values, integral.edges, integral.edges[1:]):
        lo = max(float(a), half)
        hi = min(float(b), length)
        if hi <= lo or v == 0.0:
            continue

        def g(r, v=v):
            return r * (length - r) ** expo * v - exponent * integral(r)

        glo, ghi = g(lo), g(hi)
        if not (glo > 0.0 > ghi):
            continue
        x = 0.5 * (lo + hi)
        for _ in range(40):
            gx = g(x, v)
            if gx > 0.0:
                lo = x
            else:
                hi = x
            # derivative of g: (l-r)^expo v (1 - expo r/(l-r)) - exponent (l-r)^expo v
            lr = length - x
            slope = lr**expo * v * (1.0 - expo * x / lr - exponent)
            if slope != 0.0:
                x_new = x - gx / slope
                if not (lo < x_new < hi):
                    x_new = 0.5 * (lo + hi)
            else:
                x_new = 0.5 * (lo + hi)
            if abs(x_new - x) <= 1e-15 * length:
                x = x_new
                break
            x = x_new
        candidates.append(x)
    return max(objective(float(r)) for r in candidates)


@dataclass(frozen=True)
class DyadicBoundReport:
    mean: float  # (1/l) integral of f
    sup_left: float
    sup_right: float
    ratio: float
    bound: float  # the proof constant 2^(exponent-1)

    @property
    def holds(self) -> bool:
        return self.ratio <= self.bound + 1e-12


def dyadic_average_bound(f: StepFunction, exponent: float) -> DyadicBoundReport:
    """Mean of f against the two endpoint-weighted suprema.

    Splitting [0, l] into dyadic shells around each endpoint bounds the mean
    by 2^(exponent-1) times the sum of the two suprema, since the shell at
    scale 2^-n contributes at most 2^(exponent-1) 2^-n times the sup and the
    scales sum to one.  The ratio must never exceed that constant.
    """
    if exponent < 1.0:
        raise DomainError("exponent must be at least 1")
    mean = f.integral() / f.length
    s_left = _left_sup(f, exponent)
    s_right = _left_sup(f.mirrored(), exponent)
    denom = s_left + s_right
    ratio = math.inf if denom == 0.0 and mean > 0.0 else (
        0.0 if denom == 0.0 else mean / denom
    )
    return DyadicBoundReport(
        mean=mean,
        sup_left=s_left,
        sup_right=s_right,
        ratio=ratio,
        bound=2.0 ** (exponent - 1.0),
    )


# -------------------------------------------------------- maximal functions

def maximal_function(distances, weights, values, radius: float) -> float:
    """sup over r < radius of the weighted ball average of the values.

    The supremum over a continuum of radii is attained on the finite set of
    radii where ball membership changes, so the scan walks the distance
    order once.
    """
    distances = np.asarray(distances, dtype=float)
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    inside = distances < radius
    if not inside.any():
        raise UndefinedValueError("empty ball at every radius below the cap")
    order = np.argsort(distances[inside], kind="stable")
    w = weights[inside][order]
    v = values[inside][order]
    d = distances[inside][order]
    cw = np.cumsum(w)
    cs = np.cumsum(w * v)
    # group ties: an open ball either contains a full tie-group or none of it
    best = -math.inf
    i = 0
    n = len(d)
    while i < n:
        j = i
        while j + 1 < n and d[j + 1] == d[i]:
            j += 1
        if cw[j] > 0:
            best = max(best, cs[j] / cw[j])
        i = j + 1
    return float(best)


# ---------------------------------------------------------- upper gradients

def upper_gradient(edges, u):
    """Minimal discrete upper gradient |du| / length on every edge.

    edges: iterable of (node_a, node_b, length); u: mapping node -> value.
    The telescoping sum along any path then dominates the endpoint
    difference exactly.
    """
    rho = np.empty(len(edges))
    for i, (na, nb, ln) in enumerate(edges):
        if ln <= 0:
            raise PreconditionError(f"edge {i} ({na},{nb}) has nonpositive length")
        rho[i] = abs(u[na] - u[nb]) / ln
    return rho


def check_upper_gradient(edges, u, rho, tol=1e-9):
    """Verify the defining inequality edge by edge; name the first violator."""
    for i, (na, nb, ln) in enumerate(edges):
        lhs = abs(u[na] - u[nb])
        scale = max(1.0, abs(u[na]), abs(u[nb]))
        if lhs > rho[i] * ln + tol * scale:
            raise PreconditionError(
                f"not an upper gradient: edge {i} joining nodes {na} and {nb} "
                f"carries |du| = {lhs:.6g} > rho*len = {rho[i] * ln:.6g}"
            )


@dataclass(frozen=True)
class FiberAverageReport:
    lhs: float  # |u(start) - u(end)|
    rhs: float  # sum over levels of dt x fiber average of rho
    fubini_gap: float
    holds: bool


def fiber_average_bound(cone, u, rho) -> FiberAverageReport:
    """Variation of u against fiber averages of its upper gradient.

    Averaging the telescoped path inequality over the cone's curve family
    and swapping the two finite sums gives the level-by-level form; the
    swap discrepancy is tracked and must vanish to rounding.
    """
    check_upper_gradient(cone.edges, u, rho)
    n_curves = len(cone.curves)
    lengths = np.array([e[2] for e in cone.edges])
    # per-level averages (level i owns the edge from level i to i+1)
    n_levels = len(cone.levels) - 1
    level_sum = np.zeros(n_levels)
    curve_totals = 0.0
    for labels, nodes, edge_ids in cone.curves:
        acc = 0.0
        for i, ei in enumerate(edge_ids):
            contrib = rho[ei] * lengths[ei]
            level_sum[i] += contrib
            acc += contrib
        curve_totals += acc
    rhs_levels = float(level_sum.sum() / n_curves)
    rhs_curves = float(curve_totals / n_curves)
    gap = abs(rhs_levels - rhs_curves)
    lhs = abs(u[cone.start_node()] - u[cone.end_node()])
    return FiberAverageReport(
        lhs=lhs,
        rhs=rhs_levels,
        fubini_gap=gap,
        holds=lhs <= rhs_levels + 1e-9 * max(1.0, rhs_levels),
    )


# ------------------------------------------------------ pointwise inequality

@dataclass(frozen=True)
class PointwiseReport:
    lhs: float
    distance: float
    maximal_start: float
    maximal_end: float
    empirical_constant: float
    violation: bool


def pointwise_variation_bound(
    distance: float,
    u_start: float,
    u_end: float,
    distances_from_start,
    distances_from_end,
    weights,
    rho_values,
    radius: float,
) -> PointwiseReport:
    """Empirical constant in |u(x)-u(y)| <= C d(x,y) (M rho(x) + M rho(y)).

    A zero denominator with a nonzero variation is reported as a violation
    rather than an infinite constant.
    """
    if radius < distance:
        raise PreconditionError("maximal-function radius must reach the distance")
    lhs = abs(u_start - u_end)
    m1 = maximal_function(distances_from_start, weights, rho_values, radius)
    m2 = maximal_function(distances_from_end, weights, rho_values, radius)
    denom = distance * (m1 + m2)
    if denom == 0.0:
        return PointwiseReport(lhs, distance, m1, m2, 0.0 if lhs == 0.0 else math.inf,
                               violation=lhs > 0.0)
    return PointwiseReport(lhs, distance, m1, m2, lhs / denom, violation=False)


# ----------------------------------------------------------- ball inequality

@dataclass(frozen=True)
class BallReport:
    lhs: float  # average over B of |u - u_B|
    rhs_core: float  # diam(B) x (average of rho^alpha over C0 B)^(1/alpha)
    ball_points: int
    inflated_points: int


def ball_variation_bound(
    dist_to_center,
    weights,
    u_values,
    rho_values,
    radius: float,
    inflation: float,
    alpha: float = 1.0,
    pairwise_distances=None,
    min_points: int = 30,
) -> BallReport:
    """Ball average of |u - u_B| against the inflated-ball mean of rho^alpha."""
    if alpha < 1.0:
        raise DomainError("alpha must be at least 1")
    dist_to_center = np.asarray(dist_to_center, dtype=float)
    weights = np.asarray(weights, dtype=float)
    u_values = np.asarray(u_values, dtype=float)
    rho_values = np.asarray(rho_values, dtype=float)
    inside = dist_to_center < radius
    n_in = int(inside.sum())
    if n_in < min_points:
        raise UndersampledError(
            f"ball holds {n_in} sample points (< {min_points}); enlarge the atlas"
        )
    w_in = weights[inside]
    u_in = u_values[inside]
    u_mean = float(np.average(u_in, weights=w_in))
    lhs = float(np.average(np.abs(u_in - u_mean), weights=w_in))
    big = dist_to_center < inflation * radius
    w_big = weights[big]
    grad_mean = float(np.average(rho_values[big] ** alpha, weights=w_big)) ** (
        1.0 / alpha
    )
    if pairwise_distances is not None:
        diam = float(pairwise_distances[np.ix_(inside, inside)].max())
    else:
        diam = 2.0 * radius
    return BallReport(
        lhs=lhs,
        rhs_core=diam * grad_mean,
        ball_points=n_in,
        inflated_points=int(big.sum()),
    )


# ------------------------------------------------------- test function suite

def make_test_functions(points, metric, rng, count: int = 20):
    """Named test functions on a finite point set of coded boundary points.

    Families: distance to an anchor, the segment coordinate (supplied by
    the caller via metric to the start point), random Lipschitz hulls, and
    smooth bumps.  Every function is finite everywhere.
    """
    n = len(points)
    suite = []
    kinds = ["distance", "lipschitz", "bump"]
    for i in range(count):
        kind = kinds[i % len(kinds)]
        if kind == "distance":
            anchor = int(rng.integers(0, n))
            vals = np.array([metric(j, anchor) for j in range(n)])
            name = f"distance_to_{anchor}"
        elif kind == "lipschitz":
            m = int(rng.integers(2, 5))
            anchors = rng.integers(0, n, size=m)
            offsets = rng.uniform(0.0, 0.5, size=m)
            vals = np.array(
                [
                    min(metric(j, int(a)) + c for a, c in zip(anchors, offsets))
                    for j in range(n)
                ]
            )
            name = f"lipschitz_hull_{m}"
        else:
            anchor = int(rng.integers(0, n))
            width = float(rng.uniform(0.2, 1.0))
            vals = np.array(
                [math.exp(-((metric(j, anchor) / width) ** 2)) for j in range(n)]
            )
            name = f"bump_{anchor}"
        suite.append((f"{i:02d}_{name}", vals))
    return suite
