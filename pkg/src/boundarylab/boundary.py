"""Coded boundary points, the visual quasi-metric, and the sampled measure.

A boundary point of the building is a direction on the apartment circle
plus a branch word: one label per wall crossing of the ray toward that
direction, label 0 meaning "stay in the apartment".  Two points share a
wall crossing when the wall appears in both rays' crossing sequences; the
coded product counts shared crossings whose labels agree, truncated at the
first disagreement, and the quasi-metric is base^-product.

The boundary measure is sampled: directions are drawn from a dyadic
subdivision driven by interval diameters (the 1-regular stand-in for the
length measure of the boundary circle), and branch labels are uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .apartment import Apartment
from .errors import (
    CapacityError,
    DomainError,
    ResolutionLimitError,
)

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CodedPoint:
    """Boundary point: a direction and branch labels over its crossings."""

    theta: float
    word: tuple

    def is_apartment_point(self) -> bool:
        return all(c == 0 for c in self.word)


@dataclass
class BoundaryAtlas:
    """Seeded sample of boundary points with cached crossing data."""

    apartment: Apartment
    horizon: float
    seed: int
    points: list
    weights: np.ndarray
    trace_ids: list  # per point: tuple of crossed wall ids within horizon
    trace_pos: list  # per point: dict wall id -> crossing index
    circle_measure: float  # normalizer of the direction measure

    @property
    def constants(self):
        return self.apartment.constants

    def __len__(self):
        return len(self.points)


def shared_count(apartment: Apartment, th1: float, th2: float):
    """Stabilized number of walls crossed by both rays."""
    if th1 == th2:
        return None
    value, _ = apartment.stabilized_product(th1, th2)
    return value


def interval_measure(apartment: Apartment, th_lo: float, th_hi: float) -> float:
    """Length-measure stand-in for a circle interval: its visual diameter.

    The boundary circle with the visual quasi-metric is 1-regular, so the
    measure of an interval is comparable to its diameter base^-product.
    """
    value, _ = apartment.stabilized_product(th_lo, th_hi)
    return apartment.constants.base ** (-value)


def arc_endpoints(
    apartment: Apartment, theta: float, level: int, horizon: float = 30.0
):
    """Endpoints of {theta' : walls separating theta' >= level}.

    Every wall crossed by the ray toward theta separates an arc of ideal
    points containing theta itself, so the separation count at offset delta
    equals the number of far-arc endpoints beyond delta; the level-th
    largest endpoint offset on each side is exact, no search needed.
    """
    st = apartment.trace(theta, horizon)
    eff = st.theta_eff
    rights = []
    lefts = []
    for normal in st.normals:
        d = math.asinh(abs(float(normal[0])))
        phi = math.atan2(float(normal[2]), float(normal[1]))
        half = math.asin(1.0 / math.cosh(d))
        rights.append((phi + half - eff) % _TWO_PI)
        lefts.append((eff - (phi - half)) % _TWO_PI)
    if len(rights) < level:
        raise ResolutionLimitError(
            f"only {len(rights)} crossings within the horizon; need {level}"
        )
    rights.sort(reverse=True)
    lefts.sort(reverse=True)
    return theta - lefts[level - 1], theta + rights[level - 1]


# ---------------------------------------------------------------- sampling

def sample_boundary(
    apartment: Apartment,
    n: int,
    seed: int,
    horizon: float = 24.0,
    root_cells: int = 64,
    split_depth: int = 10,
) -> BoundaryAtlas:
    """Draw n boundary points: directions from the interval-diameter measure,
    branch labels independent uniform.

    The direction law is realized by recursive dyadic splitting: each
    interval's two halves receive the sample counts of a binomial split
    weighted by their visual diameters.  Splitting stops at split_depth
    product levels; below that the law is uniform within a cell, far finer
    than any ball the sample itself can resolve.
    """
    if n < 1:
        raise DomainError("atlas size must be positive")
    constants = apartment.constants
    rng = np.random.default_rng(seed)
    max_level = max(4, min(split_depth, int((horizon * 0.8) / constants.log_base)))

    edges = np.linspace(0.0, _TWO_PI, root_cells + 1)
    # root weights from interval diameters
    ids_cache = {}

    def ids_of(th):
        if th not in ids_cache:
            st = apartment.trace(th, horizon)
            ids_cache[th] = frozenset(st.ids_up_to(horizon))
        return ids_cache[th]

    def diam(lo, hi):
        k = len(ids_of(lo) & ids_of(hi))
        return constants.base ** (-k), k

    root_w = []
    for i in range(root_cells):
        w, _ = diam(edges[i], edges[i + 1])
        root_w.append(w)
    root_w = np.array(root_w)
    circle_measure = float(root_w.sum())
    counts = rng.multinomial(n, root_w / circle_measure)

    thetas = np.empty(n)
    fill = 0
    active = [
        (edges[i], edges[i + 1], int(counts[i]))
        for i in range(root_cells)
        if counts[i] > 0
    ]
    while active:
        nxt = []
        mids = [0.5 * (lo + hi) for lo, hi, _ in active]
        # warm the trace cache for this level in one batch
        missing = [m for m in mids if m not in ids_cache]
        if missing:
            rows = apartment.trace_batch(np.array(missing), horizon)
            for th, row in zip(missing, rows):
                ids_cache[th] = frozenset(w for w, s in row if s <= horizon)
        for (lo, hi, cnt), mid in zip(active, mids):
            _, klo = diam(lo, mid)
            if klo >= max_level or (hi - lo) < 1e-12:
                thetas[fill : fill + cnt] = rng.uniform(lo, hi, size=cnt)
                fill += cnt
                continue
            w_left, _ = diam(lo, mid)
            w_right, _ = diam(mid, hi)
            n_left = int(rng.binomial(cnt, w_left / (w_left + w_right)))
            if n_left > 0:
                nxt.append((lo, mid, n_left))
            if cnt - n_left > 0:
                nxt.append((mid, hi, cnt - n_left))
        active = nxt

    thetas = thetas[:fill]
    order = np.argsort(thetas)
    thetas = thetas[order]

    rows = apartment.trace_batch(thetas, horizon)
    points = []
    trace_ids = []
    trace_pos = []
    for th, row in zip(thetas, rows):
        ids = tuple(w for w, s in row if s <= horizon)
        word = tuple(int(x) for x in rng.integers(0, constants.q - 1, size=len(ids)))
        points.append(CodedPoint(theta=float(th), word=word))
        trace_ids.append(ids)
        trace_pos.append({w: i for i, w in enumerate(ids)})
    weights = np.full(len(points), 1.0 / len(points))
    return BoundaryAtlas(
        apartment=apartment,
        horizon=horizon,
        seed=seed,
        points=points,
        weights=weights,
        trace_ids=trace_ids,
        trace_pos=trace_pos,
        circle_measure=circle_measure,
    )


def code_point(apartment: Apartment, theta: float, word=None, horizon: float = 30.0) -> CodedPoint:
    """Coded point at a direction; all-zero word embeds the apartment circle."""
    st = apartment.trace(theta, horizon)
    n = len(st.ids_up_to(horizon))
    if word is None:
        word = (0,) * n
    word = tuple(word)
    if len(word) != n:
        raise DomainError(
            f"word length {len(word)} does not match {n} crossings at this horizon"
        )
    return CodedPoint(theta=float(theta), word=word)


# ---------------------------------------------------------------- products

def _walk(ids1, word1, ids2, pos2, word2):
    count = 0
    for i1, w in enumerate(ids1):
        i2 = pos2.get(w)
        if i2 is None:
            continue
        if i1 >= len(word1) or i2 >= len(word2):
            return count, True
        if word1[i1] != word2[i2]:
            return count, False
        count += 1
    return count, False


def _point_trace(apartment, z: CodedPoint, horizon):
    st = apartment.trace(z.theta, horizon)
    ids = tuple(st.ids_up_to(horizon))
    return ids, {w: i for i, w in enumerate(ids)}


def coded_gromov_product(
    apartment: Apartment,
    z1: CodedPoint,
    z2: CodedPoint,
    horizon: float = 30.0,
    _cache1=None,
    _cache2=None,
):
    """Shared label-agreeing crossings, truncated at the first divergence.

    Symmetric by construction: the walk runs in both rays' crossing orders
    and the smaller count wins.  Returns (count, capped); capped means the
    words ended before any disagreement was seen.
    """
    ids1, pos1 = _cache1 if _cache1 is not None else _point_trace(apartment, z1, horizon)
    ids2, pos2 = _cache2 if _cache2 is not None else _point_trace(apartment, z2, horizon)
    c1, cap1 = _walk(ids1, z1.word, ids2, pos2, z2.word)
    c2, cap2 = _walk(ids2, z2.word, ids1, pos1, z1.word)
    if c1 <= c2:
        return c1, cap1
    return c2, cap2


def quasi_metric(apartment: Apartment, z1: CodedPoint, z2: CodedPoint, horizon: float = 30.0) -> float:
    """Visual quasi-metric base^-product; exactly 0 for identical codes."""
    if z1 == z2:
        return 0.0
    count, capped = coded_gromov_product(apartment, z1, z2, horizon)
    if capped and z1.theta == z2.theta and z1.word == z2.word:
        return 0.0
    return apartment.constants.base ** (-count)


def relabel_at_wall(points, trace_pos_list, wall_id: int, permutation):
    """Apply a branch relabeling at one wall across coded points.

    Models the endpoint-fixing group action: permuting sibling branches at
    a good wall is a measure-preserving bijection of boundary points.
    """
    out = []
    for z, pos in zip(points, trace_pos_list):
        idx = pos.get(wall_id)
        if idx is None or idx >= len(z.word):
            out.append(z)
            continue
        word = list(z.word)
        word[idx] = permutation[word[idx]]
        out.append(CodedPoint(theta=z.theta, word=tuple(word)))
    return out


# ------------------------------------------------------------- regularity

@dataclass(frozen=True)
class ProfileRow:
    center_index: int
    radius: float
    level: int
    direct_count: int
    direct_mass: float
    telescoped_mass: float
    estimator: str
    flagged: bool

    @property
    def mass(self):
        return self.direct_mass if self.estimator == "direct" else self.telescoped_mass


@dataclass(frozen=True)
class AhlforsProfile:
    rows: list
    slope: float
    intercept: float
    fit_points: int


def fiber_ball_mass(q: int, k: int) -> float:
    """Exact ball mass in the fixed-direction fiber tree: (q-1)^-k."""
    if q < 3:
        raise DomainError("q must be at least 3")
    if k < 0:
        raise DomainError("depth must be nonnegative")
    return float(q - 1) ** (-k)


def ahlfors_profile(
    atlas: BoundaryAtlas,
    centers,
    radii,
    min_direct: int = 30,
) -> AhlforsProfile:
    """Ball-mass profile of the sampled measure against r^Q.

    Direct rows count atlas points inside the coded ball.  Below the
    sampling resolution, masses telescope through the product structure:
    a ball of radius base^-k is (label agreement on k+1 shared walls) x
    (the direction arc where at least k+1 walls are shared), whose measure
    is its visual diameter over the circle normalizer.  The log-log slope
    is fitted on the telescoped masses, which exist at every radius; direct
    rows cross-check them where the sample can see.
    """
    apt = atlas.apartment
    constants = atlas.constants
    n = len(atlas)
    rows = []
    fit_x = []
    fit_y = []
    for ci in centers:
        z = atlas.points[ci]
        cache_c = (atlas.trace_ids[ci], atlas.trace_pos[ci])
        prods = np.empty(n, dtype=int)
        for j in range(n):
            if j == ci:
                prods[j] = 10**9
                continue
            cache_j = (atlas.trace_ids[j], atlas.trace_pos[j])
            prods[j], _ = coded_gromov_product(
                apt, z, atlas.points[j], atlas.horizon, cache_c, cache_j
            )
        for r in radii:
            # d < r iff product > log_base(1/r)
            level = int(math.floor(-math.log(r) / constants.log_base)) + 1
            count = int((prods >= level).sum())
            lo, hi = arc_endpoints(apt, z.theta, level, horizon=atlas.horizon)
            arc_mass = interval_measure(apt, lo, hi) / atlas.circle_measure
            telescoped = (constants.q - 1.0) ** (-level) * arc_mass
            direct_ok = count >= min_direct
            rows.append(
                ProfileRow(
                    center_index=ci,
                    radius=r,
                    level=level,
                    direct_count=count,
                    direct_mass=count / n,
                    telescoped_mass=telescoped,
                    estimator="direct" if direct_ok else "telescoped",
                    flagged=not direct_ok and telescoped <= 0.0,
                )
            )
            if telescoped > 0:
                fit_x.append(math.log(r))
                fit_y.append(math.log(telescoped))
    if len(fit_x) < 2:
        raise ResolutionLimitError("no usable profile rows for the slope fit")
    slope, intercept = np.polyfit(np.array(fit_x), np.array(fit_y), 1)
    return AhlforsProfile(
        rows=rows, slope=float(slope), intercept=float(intercept), fit_points=len(fit_x)
    )


# ---------------------------------------------------------------- segments

@dataclass(frozen=True)
class SegmentParametrization:
    """The boundary segment between two directions as the interval [0, l].

    l is the visual distance between the endpoints (the segment carries a
    geodesic metric, so its length is the distance); interior samples are
    placed by cumulative one-level chain sums normalized to total l.
    """

    theta_start: float
    theta_end: float
    samples: tuple  # ((t_0, theta_0), ..., (t_m, theta_m))
    length: float

    def direction_at(self, t: float) -> float:
        ts = [s[0] for s in self.samples]
        ths = [s[1] for s in self.samples]
        if t <= ts[0]:
            return ths[0]
        if t >= ts[-1]:
            return ths[-1]
        i = int(np.searchsorted(ts, t)) - 1
        i = max(0, min(i, len(ts) - 2))
        t0, t1 = ts[i], ts[i + 1]
        if t1 <= t0:
            return ths[i]
        u = (t - t0) / (t1 - t0)
        return ths[i] + u * (ths[i + 1] - ths[i])


def parametrize_segment(
    apartment: Apartment,
    theta_start: float,
    theta_end: float,
    m: int,
    profile_tol: float = 0.02,
    max_refine: int = 6,
) -> SegmentParametrization:
    if m < 2:
        raise DomainError("need at least two subdivisions")
    span = (theta_end - theta_start) % _TWO_PI
    if span == 0.0:
        raise DomainError("segment endpoints coincide")
    if span > math.pi:
        span -= _TWO_PI  # walk the shorter arc, negative direction
    end = theta_start + span

    length = interval_measure(apartment, theta_start, end)

    # cumulative profile from one-level chain sums on a refined partition
    refine = 1
    prev_profile = None
    profile = None
    while True:
        cells = m * (2**refine)
        ths = np.linspace(theta_start, end, cells + 1)
        rows = apartment.trace_batch(ths, apartment.horizon_cap / 2)
        idsets = [frozenset(w for w, _ in r) for r in rows]
        weights = np.array(
            [
                apartment.constants.base ** (-len(idsets[i] & idsets[i + 1]))
                for i in range(cells)
            ]
        )
        cum = np.concatenate([[0.0], np.cumsum(weights)])
        cum /= cum[-1]
        profile = cum[:: 2**refine]  # at the m-grid
        if prev_profile is not None:
            drift = float(np.max(np.abs(profile - prev_profile)))
            if drift < profile_tol:
                break
        if refine >= max_refine:
            if prev_profile is not None and drift > 10 * profile_tol:
                raise ResolutionLimitError(
                    f"segment profile did not stabilize (drift {drift:.3g})",
                    partial=profile,
                )
            break
        prev_profile = profile
        refine += 1

    samples = tuple(
        (float(length * profile[i]), float(theta_start + span * (i / m)))
        for i in range(m + 1)
    )
    return SegmentParametrization(
        theta_start=theta_start,
        theta_end=end,
        samples=samples,
        length=length,
    )


# -------------------------------------------------------------------- cone

@dataclass
class ConeGraph:
    """Finite graph model of the curve family joining two boundary points.

    Nodes are (level, branch labels restricted to the good walls active at
    that level); curves are label assignments over all good walls, each
    visiting one node per level.  Edge lengths are the parameter increments
    of the segment, so every curve has total length l exactly.
    """

    segment: SegmentParametrization
    good_wall_ids: tuple
    levels: list  # per level: dict(theta, t, active: tuple of good-wall ids)
    node_keys: dict  # (level, restricted labels) -> node index
    node_points: list  # CodedPoint per node
    node_measure: np.ndarray
    edges: list  # (u, v, length)
    curves: list  # per curve: (labels, tuple of node indices, tuple of edge indices)
    containment_radius: float

    @property
    def length(self):
        return self.segment.length

    def node_count(self):
        return len(self.node_points)

    def start_node(self):
        return self.curves[0][1][0]

    def end_node(self):
        return self.curves[0][1][-1]


def build_cone_auto(
    apartment: Apartment,
    theta_start: float,
    theta_end: float,
    m: int,
    max_good: int = 10,
    curve_cap: int = 4096,
):
    """Build the deepest cone whose good-wall count stays within the cap."""
    segment = parametrize_segment(apartment, theta_start, theta_end, m)
    best = None
    horizon = 2.0
    while horizon <= 12.0:
        try:
            cone = build_cone(
                apartment,
                theta_start,
                theta_end,
                m,
                horizon,
                curve_cap=curve_cap,
                segment=segment,
            )
        except CapacityError:
            break
        if len(cone.good_wall_ids) > max_good:
            break
        best = cone
        horizon += 1.0
    if best is None:
        raise CapacityError("no nontrivial cone fits the configured caps")
    return best


def build_cone(
    apartment: Apartment,
    theta_start: float,
    theta_end: float,
    m: int,
    horizon: float,
    curve_cap: int = 4096,
    segment: SegmentParametrization | None = None,
) -> ConeGraph:
    """Construct the cone: one curve per branch labeling of the good walls.

    Good walls are those crossed by some segment ray within the horizon but
    by neither endpoint ray; crossings of bad walls carry the fixed label 0
    on every curve.
    """
    constants = apartment.constants
    if segment is None:
        segment = parametrize_segment(apartment, theta_start, theta_end, m)
    ts = [s[0] for s in segment.samples]
    ths = [s[1] for s in segment.samples]

    # endpoint rays traced deep enough to classify every wall within horizon
    ends_horizon = min(2.0 * horizon + 20.0, apartment.horizon_cap)
    xi_ids = set(apartment.trace(segment.theta_start, ends_horizon).ids_up_to(ends_horizon))
    eta_ids = set(apartment.trace(segment.theta_end, ends_horizon).ids_up_to(ends_horizon))
    bad_ids = xi_ids | eta_ids

    level_cross = []
    first_param = {}
    for th in ths:
        st = apartment.trace(th, horizon)
        ids = tuple(st.ids_up_to(horizon))
        params = {w: s for w, s in zip(st.wall_ids, st.params) if s <= horizon}
        level_cross.append(ids)
        for w in ids:
            if w not in bad_ids:
                cur = first_param.get(w)
                if cur is None or params[w] < cur:
                    first_param[w] = params[w]

    good = tuple(sorted(first_param, key=lambda w: (first_param[w], w)))
    n_curves = (constants.q - 1) ** len(good)
    if n_curves > curve_cap:
        raise CapacityError(
            f"cone would carry {n_curves} curves over {len(good)} good walls "
            f"(cap {curve_cap}); lower the horizon"
        )
    good_index = {w: i for i, w in enumerate(good)}
    active = [tuple(w for w in ids if w in good_index) for ids in level_cross]

    node_keys = {}
    node_points = []
    node_levels = []

    def node_of(level, labels_by_wall):
        key = (level, tuple(labels_by_wall.get(w, 0) for w in active[level]))
        idx = node_keys.get(key)
        if idx is None:
            idx = len(node_points)
            node_keys[key] = idx
            word = tuple(
                labels_by_wall.get(w, 0) if w in good_index else 0
                for w in level_cross[level]
            )
            node_points.append(CodedPoint(theta=ths[level], word=word))
            node_levels.append(level)
        return idx

    import itertools as _it

    edge_keys = {}
    edges = []
    curves = []
    for labels in _it.product(range(constants.q - 1), repeat=len(good)):
        by_wall = {w: c for w, c in zip(good, labels)}
        nodes = [node_of(i, by_wall) for i in range(len(ths))]
        curve_edges = []
        for i in range(len(nodes) - 1):
            ek = (nodes[i], nodes[i + 1])
            ei = edge_keys.get(ek)
            if ei is None:
                ei = len(edges)
                edge_keys[ek] = ei
                edges.append((nodes[i], nodes[i + 1], ts[i + 1] - ts[i]))
            curve_edges.append(ei)
        curves.append((labels, tuple(nodes), tuple(curve_edges)))

    # node measure: fiber weight x trapezoidal parameter share
    mlev = len(ths) - 1
    shares = np.empty(len(ths))
    shares[0] = 0.5 * (ts[1] - ts[0])
    shares[-1] = 0.5 * (ts[-1] - ts[-2])
    for i in range(1, mlev):
        shares[i] = 0.5 * (ts[i + 1] - ts[i - 1])
    node_measure = np.empty(len(node_points))
    for (level, _), idx in node_keys.items():
        fiber_weight = float(constants.q - 1) ** (-len(active[level]))
        node_measure[idx] = shares[level] * fiber_weight

    # containment: how far cone nodes sit from the endpoints, in units of l
    xi_pt = code_point(apartment, segment.theta_start, horizon=horizon)
    eta_pt = code_point(apartment, segment.theta_end, horizon=horizon)
    sample = node_points[:: max(1, len(node_points) // 64)]
    worst = 0.0
    for zp in sample:
        worst = max(
            worst,
            quasi_metric(apartment, zp, xi_pt, horizon),
            quasi_metric(apartment, zp, eta_pt, horizon),
        )
    containment = worst / segment.length if segment.length > 0 else math.inf

    return ConeGraph(
        segment=segment,
        good_wall_ids=good,
        levels=[
            {"theta": ths[i], "t": ts[i], "active": active[i]} for i in range(len(ths))
        ],
        node_keys=node_keys,
        node_points=node_points,
        node_measure=node_measure,
        edges=edges,
        curves=curves,
        containment_radius=containment,
    )
