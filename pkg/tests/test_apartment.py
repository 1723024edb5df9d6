import math

import numpy as np
import pytest

from boundarylab.apartment import (
    Apartment,
    arclength_gap_statistics,
    compute_constants,
    crofton_mean_gap,
    prefix_growth_rate,
)
from boundarylab.errors import CoverageError, DomainError, ResolutionLimitError
from boundarylab.hypgeom import mink


@pytest.fixture(scope="module")
def apt63():
    return Apartment(compute_constants(6, 3), seed=42)


@pytest.fixture(scope="module")
def apt53():
    return Apartment(compute_constants(5, 3), seed=42)


# ------------------------------------------------------------- constants

def test_constants_reference_values():
    cases = {
        (5, 3): (1.7202098, 2.6180340),
        (6, 3): (1.5263245, 3.7320508),
        (6, 4): (1.8342046, 3.7320508),
    }
    for (p, q), (dim, base) in cases.items():
        c = compute_constants(p, q)
        assert abs(c.dimension - dim) < 1e-6
        assert abs(c.base - base) < 1e-6


def test_constants_against_closed_form_base():
    # base = (p-2)/2 + sqrt(((p-2)/2)^2 - 1)
    for p in range(5, 12):
        for q in (3, 4, 6):
            c = compute_constants(p, q)
            half = (p - 2) / 2.0
            assert abs(c.base - (half + math.sqrt(half * half - 1.0))) < 1e-12
            assert c.dimension > 1.0
            assert c.base > 1.0
            assert abs(c.log_base * (c.dimension - 1.0) - math.log(q - 1)) < 1e-12


def test_constants_domain_errors():
    with pytest.raises(DomainError):
        compute_constants(4, 3)
    with pytest.raises(DomainError):
        compute_constants(5, 2)


# ---------------------------------------------------------- tessellation

def test_tessellation_ring_counts(apt53):
    assert len(apt53.generate_tessellation(0)) == 1
    assert len(apt53.generate_tessellation(1)) == 1 + 2 * 5


def test_tessellation_deterministic():
    a1 = Apartment(compute_constants(5, 3), seed=42)
    a2 = Apartment(compute_constants(5, 3), seed=42)
    c1 = a1.generate_tessellation(2)
    c2 = a2.generate_tessellation(2)
    k1 = sorted(
        (round(float(np.arccosh(max(ch.center()[0], 1.0))), 9) for ch in c1)
    )
    k2 = sorted(
        (round(float(np.arccosh(max(ch.center()[0], 1.0))), 9) for ch in c2)
    )
    assert k1 == k2


def test_tessellation_growth_is_geometric(apt53):
    chambers = apt53.generate_tessellation(4)
    by_ring = {}
    for ch in chambers:
        by_ring[ch.ring] = by_ring.get(ch.ring, 0) + 1
    assert by_ring[2] > 2 * by_ring[1]
    assert by_ring[3] > 2 * by_ring[2]


def test_chambers_share_at_most_edge_or_vertex(apt53):
    # quantized shared vertex count between close chamber pairs is 0, 1 or 2
    chambers = apt53.generate_tessellation(2)
    polys = []
    for ch in chambers[:30]:
        mat = np.asarray(ch.matrix, dtype=float)
        verts = [mat @ v.coords.astype(float) for v in apt53.polygon.vertices]
        polys.append([tuple(np.round(v / 1e-7).astype(int)) for v in verts])
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            shared = len(set(polys[i]) & set(polys[j]))
            assert shared in (0, 1, 2)


# ------------------------------------------------------------------ walls

def test_enumerate_walls_base_sides(apt53):
    apt53.generate_tessellation(2)
    walls = apt53.enumerate_walls(apt53.polygon.inradius + 1e-9)
    assert len(walls) == 5


def test_enumerate_walls_requires_coverage():
    apt = Apartment(compute_constants(5, 3), seed=1)
    apt.generate_tessellation(1)
    with pytest.raises(CoverageError) as err:
        apt.enumerate_walls(50.0)
    assert err.value.required_rings is not None


def test_wall_count_monotone_in_radius(apt53):
    apt53.generate_tessellation(4)
    r = apt53.covered_radius()
    n1 = len(apt53.enumerate_walls(r * 0.5))
    n2 = len(apt53.enumerate_walls(r * 0.75))
    n3 = len(apt53.enumerate_walls(r))
    assert n1 < n2 < n3


def test_intersecting_walls_are_orthogonal(apt53):
    apt53.generate_tessellation(3)
    walls = apt53.enumerate_walls(2.5)
    normals = [w.geod.normal.astype(float) for w in walls]
    for i in range(len(normals)):
        for j in range(i + 1, len(normals)):
            g = float(mink(normals[i], normals[j]))
            if abs(g) < 1.0 - 1e-6:  # intersecting pair
                assert abs(g) < 1e-8


# --------------------------------------------------------------- tracing

def test_walls_crossed_empty_at_zero_horizon(apt63):
    seq = apt63.walls_crossed(0.7, 0.0)
    assert seq.crossings == []


def test_crossing_parameters_strictly_increase(apt63):
    seq = apt63.walls_crossed(1.234, 30.0)
    params = seq.parameters()
    assert all(b - a > 1e-9 for a, b in zip(params, params[1:]))
    assert len(set(seq.wall_ids())) == len(seq.wall_ids())
    assert all(s <= 30.0 for s in params)


def test_trace_batch_matches_scalar(apt63):
    rng = np.random.default_rng(3)
    thetas = rng.uniform(0, 2 * np.pi, 60)
    batch = apt63.trace_batch(thetas, 25.0)
    agree = 0
    for th, row in zip(thetas, batch):
        st = apt63.trace(float(th), 25.0)
        scalar = [w for w, s in zip(st.wall_ids, st.params) if s <= 25.0]
        agree += scalar == [w for w, _ in row]
    assert agree >= 58


# -------------------------------------------------------------- products

def test_gromov_product_self_is_crossing_count(apt63):
    seq = apt63.walls_crossed(0.9, 20.0)
    assert apt63.gromov_product(0.9, 0.9, 20.0) == len(seq.crossings)


def test_gromov_product_opposite_rays_zero(apt63):
    assert apt63.gromov_product(0.42, 0.42 + math.pi, 40.0) == 0


def test_gromov_product_symmetric_and_monotone(apt63):
    rng = np.random.default_rng(8)
    for _ in range(20):
        t1, t2 = rng.uniform(0, 2 * np.pi, 2)
        g1 = apt63.gromov_product(float(t1), float(t2), 25.0)
        g2 = apt63.gromov_product(float(t2), float(t1), 25.0)
        assert g1 == g2
        assert apt63.gromov_product(float(t1), float(t2), 50.0) >= g1


def test_stabilized_product_matches_bruteforce_intersection(apt63):
    rng = np.random.default_rng(12)
    for _ in range(15):
        t1 = float(rng.uniform(0, 2 * np.pi))
        t2 = t1 + float(10 ** rng.uniform(-4, -0.5))
        value, horizon = apt63.stabilized_product(t1, t2)
        ids1 = set(apt63.trace(t1, horizon).ids_up_to(horizon))
        ids2 = set(apt63.trace(t2, horizon).ids_up_to(horizon))
        assert value == len(ids1 & ids2)


def test_separation_count_oracle_agrees(apt63):
    # sign-test counting is an independent oracle for the id intersection
    rng = np.random.default_rng(23)
    for _ in range(15):
        t1 = float(rng.uniform(0, 2 * np.pi))
        t2 = t1 + float(10 ** rng.uniform(-3, -0.5))
        value, horizon = apt63.stabilized_product(t1, t2)
        oracle = apt63.separation_count(t1, t2, horizon)
        assert value == oracle


def test_quasi_metric_axioms(apt63):
    assert apt63.quasi_metric(0.5, 0.5) == 0.0
    rng = np.random.default_rng(5)
    for _ in range(10):
        t1, t2 = (float(x) for x in rng.uniform(0, 2 * np.pi, 2))
        d12 = apt63.quasi_metric(t1, t2)
        assert d12 > 0
        assert d12 == apt63.quasi_metric(t2, t1)


def test_quasi_triangle_constant_bounded(apt63):
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(200):
        t1 = float(rng.uniform(0, 2 * np.pi))
        t2 = t1 + float(10 ** rng.uniform(-5, -0.5))
        t3 = t1 + float(10 ** rng.uniform(-5, -0.5))
        d13 = apt63.quasi_metric(t1, t3)
        m = max(apt63.quasi_metric(t1, t2), apt63.quasi_metric(t2, t3))
        worst = max(worst, d13 / m)
    assert worst < 100.0


def test_perturbation_seed_stability(apt63):
    # products move by at most 2 under a different jitter seed on most pairs
    other = Apartment(compute_constants(6, 3), seed=1234)
    rng = np.random.default_rng(9)
    moved = 0
    total = 60
    for _ in range(total):
        t1 = float(rng.uniform(0, 2 * np.pi))
        t2 = t1 + float(10 ** rng.uniform(-4, -1))
        g1, _ = apt63.stabilized_product(t1, t2)
        g2, _ = other.stabilized_product(t1, t2)
        if abs(g1 - g2) > 2:
            moved += 1
    assert moved <= max(1, int(0.01 * total))


# ----------------------------------------------------------------- rates

def test_crossing_rate_matches_crofton(apt63):
    mean_gap, n = arclength_gap_statistics(apt63, 150, 40.0, seed=2)
    predicted = crofton_mean_gap(apt63.constants, apt63.polygon)
    assert n > 3000
    assert abs(mean_gap - predicted) / predicted < 0.03


def test_prefix_growth_rate_matches_base(apt63):
    rate, counts = prefix_growth_rate(apt63, max_level=5, resolution=32768)
    assert counts[0] == apt63.constants.p
    assert abs(math.log(rate) - apt63.constants.log_base) / apt63.constants.log_base < 0.05


def test_identical_directions_hit_resolution_limit(apt63):
    with pytest.raises(ResolutionLimitError):
        apt63.stabilized_product(0.3, 0.3)
