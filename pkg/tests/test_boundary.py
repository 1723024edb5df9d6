import itertools
import math

import numpy as np
import pytest

from boundarylab.apartment import Apartment, compute_constants
from boundarylab import boundary
from boundarylab.errors import CapacityError, DomainError


@pytest.fixture(scope="module")
def apt():
    return Apartment(compute_constants(6, 3), seed=42)


@pytest.fixture(scope="module")
def atlas(apt):
    return boundary.sample_boundary(apt, 1500, seed=7, horizon=24.0)


def test_atlas_weights_sum_to_one(atlas):
    assert abs(float(atlas.weights.sum()) - 1.0) < 1e-12


def test_atlas_reproducible(apt):
    a1 = boundary.sample_boundary(apt, 300, seed=11, horizon=24.0)
    a2 = boundary.sample_boundary(apt, 300, seed=11, horizon=24.0)
    assert [z.theta for z in a1.points] == [z.theta for z in a2.points]
    assert [z.word for z in a1.points] == [z.word for z in a2.points]


def test_atlas_label_frequencies(atlas):
    # per-level labels are uniform on {0, ..., q-2}; q = 3 here
    level = 3
    labels = [z.word[level] for z in atlas.points if len(z.word) > level]
    n = len(labels)
    freq = sum(1 for c in labels if c == 0) / n
    sigma = math.sqrt(0.25 / n)
    assert abs(freq - 0.5) < 3.5 * sigma


def test_quasi_metric_axioms(apt, atlas):
    z0, z1 = atlas.points[0], atlas.points[1]
    assert boundary.quasi_metric(apt, z0, z0) == 0.0
    d01 = boundary.quasi_metric(apt, z0, z1)
    assert d01 > 0
    assert d01 == boundary.quasi_metric(apt, z1, z0)


def test_all_zero_words_restrict_to_apartment_product(apt):
    rng = np.random.default_rng(3)
    for _ in range(10):
        t1 = float(rng.uniform(0, 2 * math.pi))
        t2 = t1 + float(10 ** rng.uniform(-3, -0.5))
        horizon = 24.0
        z1 = boundary.code_point(apt, t1, horizon=horizon)
        z2 = boundary.code_point(apt, t2, horizon=horizon)
        count, _ = boundary.coded_gromov_product(apt, z1, z2, horizon)
        assert count == apt.gromov_product(t1, t2, horizon)


def test_same_theta_product_is_first_label_mismatch(apt):
    theta = 0.9
    z0 = boundary.code_point(apt, theta, horizon=24.0)
    n = len(z0.word)
    word = list(z0.word)
    j = 4
    word[j] = 1
    z1 = boundary.CodedPoint(theta, tuple(word))
    count, capped = boundary.coded_gromov_product(apt, z0, z1, 24.0)
    assert count == j and not capped


def test_fixed_fiber_ultrametric(apt):
    theta = 1.7
    z0 = boundary.code_point(apt, theta, horizon=24.0)
    rng = np.random.default_rng(5)
    codes = [
        boundary.CodedPoint(theta, tuple(int(x) for x in rng.integers(0, 2, len(z0.word))))
        for _ in range(12)
    ]
    for zi, zj, zk in itertools.permutations(codes, 3):
        dik = boundary.quasi_metric(apt, zi, zk)
        m = max(boundary.quasi_metric(apt, zi, zj), boundary.quasi_metric(apt, zj, zk))
        assert dik <= m + 1e-15


def test_relabel_preserves_products_past_the_wall(apt, atlas):
    # permuting sibling branches at a wall is an isometry on points whose
    # divergence happens at or after that wall
    apt_pts = atlas.points[:60]
    pos = atlas.trace_pos[:60]
    perm = {0: 1, 1: 0}
    relabeled = boundary.relabel_at_wall(apt_pts, pos, wall_id=atlas.trace_ids[0][0], permutation=perm)
    for (za, zb), (ra, rb) in zip(
        itertools.combinations(apt_pts[:15], 2), itertools.combinations(relabeled[:15], 2)
    ):
        ca, _ = boundary.coded_gromov_product(apt, za, zb, atlas.horizon)
        cb, _ = boundary.coded_gromov_product(apt, ra, rb, atlas.horizon)
        assert ca == cb


def test_fiber_ball_mass_matches_snowflake_exponent():
    c = compute_constants(6, 3)
    for k in range(1, 15):
        r = c.base ** (-k)
        assert abs(boundary.fiber_ball_mass(3, k) - r ** (c.dimension - 1.0)) < 1e-12


def test_arc_endpoints_monotone_levels(apt):
    theta = 2.2
    prev = None
    for level in range(2, 10):
        lo, hi = boundary.arc_endpoints(apt, theta, level, horizon=24.0)
        width = hi - lo
        assert width > 0
        if prev is not None:
            assert width <= prev * 1.0000001
        prev = width


def test_profile_slope_near_dimension(apt, atlas):
    c = apt.constants
    rng = np.random.default_rng(2)
    centers = sorted(int(i) for i in rng.choice(len(atlas), 10, replace=False))
    radii = [c.base ** (-k) for k in range(4, 13)]
    prof = boundary.ahlfors_profile(atlas, centers, radii)
    assert abs(prof.slope - c.dimension) / c.dimension < 0.05


def test_profile_direct_rows_cross_check(apt, atlas):
    # at coarse radii the direct counts and telescoped masses agree within
    # a moderate factor (different realizations of the same measure)
    c = apt.constants
    rng = np.random.default_rng(4)
    centers = sorted(int(i) for i in rng.choice(len(atlas), 8, replace=False))
    radii = [c.base ** (-1.0), c.base ** (-1.5)]
    prof = boundary.ahlfors_profile(atlas, centers, radii)
    for row in prof.rows:
        if row.estimator == "direct" and row.telescoped_mass > 0:
            ratio = row.direct_mass / row.telescoped_mass
            assert 0.2 < ratio < 5.0


def test_segment_parametrization_contract(apt):
    seg = boundary.parametrize_segment(apt, 0.4, 1.6, 32)
    ts = [s[0] for s in seg.samples]
    ths = [s[1] for s in seg.samples]
    assert ts[0] == 0.0
    assert abs(ts[-1] - seg.length) < 1e-12
    assert all(b >= a for a, b in zip(ts, ts[1:]))
    assert all(b >= a for a, b in zip(ths, ths[1:]))  # monotone along the arc
    # the length equals the endpoint distance (geodesic segment)
    assert seg.length == pytest.approx(apt.quasi_metric(0.4, 1.6))


def test_segment_length_stable_under_doubling(apt):
    l1 = boundary.parametrize_segment(apt, 0.4, 1.6, 32).length
    l2 = boundary.parametrize_segment(apt, 0.4, 1.6, 64).length
    assert abs(l2 - l1) < 1e-3 * l1


def test_segment_rejects_degenerate_input(apt):
    with pytest.raises(DomainError):
        boundary.parametrize_segment(apt, 0.4, 0.4, 8)


def test_cone_structure(apt):
    cone = boundary.build_cone(apt, 0.4, 1.6, 24, horizon=4.0)
    q = apt.constants.q
    assert len(cone.curves) == (q - 1) ** len(cone.good_wall_ids)
    start, end = cone.start_node(), cone.end_node()
    for labels, nodes, edge_ids in cone.curves:
        assert nodes[0] == start and nodes[-1] == end
        total = sum(cone.edges[e][2] for e in edge_ids)
        assert total == pytest.approx(cone.length, abs=1e-12)
    assert float(cone.node_measure.sum()) == pytest.approx(cone.length, abs=1e-9)


def test_cone_capacity_error(apt):
    with pytest.raises(CapacityError):
        boundary.build_cone(apt, 0.4, 1.6, 16, horizon=8.0, curve_cap=8)


def test_cone_single_curve_when_no_good_walls(apt):
    # a very shallow horizon leaves only walls crossing an endpoint ray
    cone = boundary.build_cone(apt, 0.4, 1.6, 12, horizon=1.2)
    if len(cone.good_wall_ids) == 0:
        assert len(cone.curves) == 1


def test_curves_coincide_exactly_while_active_labels_agree(apt):
    # two curves share a node exactly when their labels agree on the good
    # walls active at that level; in particular they coincide until the
    # first differing label becomes active
    cone = boundary.build_cone(apt, 0.4, 1.6, 24, horizon=4.0)
    if len(cone.good_wall_ids) < 1:
        pytest.skip("no branching at this horizon")
    gid = {w: k for k, w in enumerate(cone.good_wall_ids)}
    for (la, na, _), (lb, nb, _) in zip(cone.curves[:6], cone.curves[1:7]):
        for i, (a, b) in enumerate(zip(na, nb)):
            active = cone.levels[i]["active"]
            agree = all(la[gid[w]] == lb[gid[w]] for w in active)
            assert (a == b) == agree
