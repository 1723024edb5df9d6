import math

import numpy as np
import pytest

from boundarylab.apartment import Apartment, compute_constants
from boundarylab import boundary, modulus
from boundarylab.errors import DomainError

EXPONENT = 1.5263245


def path_problem(k, exponent=EXPONENT):
    return modulus.ModulusProblem(
        n_nodes=k,
        edges=[(i, i + 1) for i in range(k - 1)],
        lengths=np.ones(k),
        measures=np.ones(k),
        source={0},
        target={k - 1},
        exponent=exponent,
    )


@pytest.mark.parametrize("k", [2, 5, 10])
def test_single_path_stationary_value(k):
    # constant density 1/k is optimal on a unit path: value k^(1-Q)
    sol = modulus.discrete_modulus(path_problem(k), tol=1e-8)
    assert abs(sol.value - k ** (1.0 - EXPONENT)) < 1e-4
    assert sol.max_violation <= 1e-9


def test_parallel_paths_are_additive():
    n = 10
    edges = [(i, i + 1) for i in range(4)] + [(5 + i, 5 + i + 1) for i in range(4)]
    prob = modulus.ModulusProblem(
        n, edges, np.ones(n), np.ones(n), {0, 5}, {4, 9}, EXPONENT,
        require_connected=False,
    )
    sol = modulus.discrete_modulus(prob, tol=1e-8)
    assert abs(sol.value - 2.0 * 5.0 ** (1.0 - EXPONENT)) < 1e-3


def test_no_connecting_path_gives_zero():
    prob = modulus.ModulusProblem(
        4, [(0, 1), (2, 3)], np.ones(4), np.ones(4), {0, 1}, {2, 3}, EXPONENT
    )
    sol = modulus.discrete_modulus(prob, tol=1e-8)
    assert sol.value == 0.0
    assert sol.paths == []


def test_single_edge_closed_form():
    # two nodes, one edge: rho*(len1+len2) = 1 at optimum with the measure
    # split by the stationarity condition
    prob = modulus.ModulusProblem(
        2, [(0, 1)], np.array([1.0, 1.0]), np.array([1.0, 1.0]), {0}, {1}, 2.0
    )
    bf = modulus.brute_force_modulus(prob)
    # exponent 2, unit data: rho = 1/2 on both nodes, value = 2*(1/2)^2
    assert bf == pytest.approx(0.5, abs=1e-9)


def test_subfamily_monotone_under_edge_removal():
    rng = np.random.default_rng(9)
    for _ in range(10):
        n = 8
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.4]
        if not edges:
            continue
        lengths = rng.uniform(0.5, 1.5, n)
        measures = rng.uniform(0.5, 1.5, n)
        prob = modulus.ModulusProblem(n, edges, lengths, measures, {0}, {n - 1}, 1.8)
        full = modulus.discrete_modulus(prob, tol=1e-7).value
        sub_edges = edges[: max(1, len(edges) - 3)]
        prob2 = modulus.ModulusProblem(n, sub_edges, lengths, measures, {0}, {n - 1}, 1.8)
        sub = modulus.discrete_modulus(prob2, tol=1e-7).value
        assert sub <= full + 1e-6


def test_bracket_validity_on_oracle_instances():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(5, 10))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.3]
        lengths = rng.uniform(0.3, 2.0, n)
        measures = rng.uniform(0.3, 2.0, n)
        prob = modulus.ModulusProblem(n, edges, lengths, measures, {0}, {n - 1}, 1.7)
        sol = modulus.discrete_modulus(prob, tol=1e-9)
        if not sol.paths:
            continue
        bf = modulus.brute_force_modulus(prob)
        assert sol.lower_bound <= bf + 1e-7
        assert bf <= sol.value + 1e-7


def test_brute_force_agreement_battery():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(5, 13))
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.24]
        lengths = rng.uniform(0.3, 2.0, n)
        measures = rng.uniform(0.3, 2.0, n)
        prob = modulus.ModulusProblem(
            n, edges, lengths, measures, {0}, {n - 1}, float(rng.uniform(1.2, 2.5))
        )
        bf = modulus.brute_force_modulus(prob)
        sol = modulus.discrete_modulus(prob, tol=1e-9)
        worst = max(worst, abs(sol.value - bf))
    assert worst < 1e-6


def test_determinism():
    prob = path_problem(7)
    s1 = modulus.discrete_modulus(prob, tol=1e-8)
    s2 = modulus.discrete_modulus(path_problem(7), tol=1e-8)
    assert s1.value == s2.value
    assert s1.iterations == s2.iterations


def test_separation_ratio_properties():
    pts = {0: 0.0, 1: 1.0, 2: 4.0, 3: 5.0}

    def metric(a, b):
        return abs(pts[a] - pts[b])

    delta = modulus.separation_ratio([0, 1], [2, 3], metric)
    assert delta == pytest.approx(3.0 / 1.0)
    scaled = modulus.separation_ratio([0, 1], [2, 3], lambda a, b: 7.0 * metric(a, b))
    assert scaled == pytest.approx(delta)
    with pytest.raises(DomainError):
        modulus.separation_ratio([0], [2, 3], metric)


def test_separation_ratio_touching_sets():
    pts = {0: 0.0, 1: 1.0, 2: 1.0, 3: 2.0}

    def metric(a, b):
        return abs(pts[a] - pts[b])

    assert modulus.separation_ratio([0, 1], [2, 3], metric) == 0.0


def test_separation_matches_bruteforce_pairwise():
    rng = np.random.default_rng(23)
    xs = rng.uniform(0, 10, 30)

    def metric(a, b):
        return abs(xs[a] - xs[b])

    a_set = list(range(12))
    b_set = list(range(12, 30))
    got = modulus.separation_ratio(a_set, b_set, metric)
    dist = min(metric(a, b) for a in a_set for b in b_set)
    diam_a = max(metric(a, b) for a in a_set for b in a_set)
    diam_b = max(metric(a, b) for a in b_set for b in b_set)
    assert got == pytest.approx(dist / min(diam_a, diam_b), abs=1e-12)


def test_loewner_rows_monotone():
    apt = Apartment(compute_constants(6, 3), seed=42)
    atlas = boundary.sample_boundary(apt, 500, seed=13, horizon=24.0)
    c = apt.constants
    rows, pairs = modulus.loewner_profile(
        atlas, c.base ** (-1.75), (0.5, 1.0, 2.0), seed=3, n_pairs=10, tol=1e-3
    )
    values = [r.value for r in rows if not r.flagged]
    assert len(values) >= 2
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-12
    assert all(v > 0 for v in values)
