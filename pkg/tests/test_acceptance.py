"""Acceptance gate: one test per criterion, each at its stated tolerance.

Run with `pytest -s tests/test_acceptance.py -v` to see the per-criterion
verdict lines and timings.
"""

import math
import time
from decimal import Decimal, getcontext

import numpy as np
import pytest

from boundarylab import analysis, boundary, fibers, modulus
from boundarylab.apartment import (
    Apartment,
    arclength_gap_statistics,
    compute_constants,
    crofton_mean_gap,
    prefix_growth_rate,
)
from boundarylab.cli import Lab, RunConfig


def _verdict(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\n[criterion {number:02d}] {name}: {status} ({detail})")


@pytest.fixture(scope="module")
def lab63():
    return Lab(RunConfig(p=6, q=3, atlas_size=10_000, output_dir="reports"))


@pytest.fixture(scope="module")
def atlas10k(lab63):
    return lab63.atlas(10_000)


# ---------------------------------------------------------------- criterion 1

def test_criterion_01_constants():
    t0 = time.time()
    getcontext().prec = 50

    def argch(x):
        x = Decimal(x)
        return (x + (x * x - 1).sqrt()).ln()

    def high_precision(p, q):
        tau = argch(Decimal(p - 2) / 2)
        dim = 1 + Decimal(q - 1).ln() / tau
        base = tau.exp()
        return float(dim), float(base)

    spec_values = {
        (5, 3): (1.720210, 2.618034),
        (6, 3): (1.526316, 3.732051),
        (6, 4): (1.834203, 3.732051),
    }
    worst = 0.0
    for (p, q), (dim_listed, base_listed) in spec_values.items():
        c = compute_constants(p, q)
        dim_ref, base_ref = high_precision(p, q)
        worst = max(
            worst,
            abs(c.dimension - dim_ref),
            abs(c.base - base_ref),
            abs(c.dimension - dim_listed),
            abs(c.base - base_listed),
        )
    ok = worst < 1e-5
    elapsed = time.time() - t0
    _verdict(1, "structure constants", ok, f"worst dev {worst:.2e}, {elapsed:.2f}s")
    assert ok
    assert elapsed < 1.0


# ---------------------------------------------------------------- criterion 2

def test_criterion_02_polygon_geometry():
    from boundarylab import hypgeom

    t0 = time.time()
    worst_angle = 0.0
    worst_side = 0.0
    for p in range(5, 13):
        poly = hypgeom.build_right_angled_polygon(p)
        for k in range(p):
            ang = hypgeom.angle_at(
                poly.vertices[k], poly.vertices[k - 1], poly.vertices[(k + 1) % p]
            )
            worst_angle = max(worst_angle, abs(ang - math.pi / 2))
        worst_side = max(
            worst_side,
            abs(math.cosh(poly.side_length) - (4 * math.cos(math.pi / p) ** 2 - 1)),
        )
    ok = worst_angle < 1e-9 and worst_side < 1e-6
    elapsed = time.time() - t0
    _verdict(
        2,
        "right-angled polygons",
        ok,
        f"angle dev {worst_angle:.2e}, side dev {worst_side:.2e}, {elapsed:.2f}s",
    )
    assert ok
    assert elapsed < 1.0


# ---------------------------------------------------------------- criterion 3

def test_criterion_03_crossing_rate(lab63):
    t0 = time.time()
    apt = lab63.apartment
    target = math.acosh(2.0)
    # the metric-scale crossing rate: branching of crossing prefixes per level
    rate, counts = prefix_growth_rate(apt)
    rate_err = abs(math.log(rate) - target) / target
    # the literal arclength gap over 200 seeded rays is reported alongside
    # its integral-geometry value (see the decisions ledger)
    mean_gap, n_gaps = arclength_gap_statistics(apt, 200, 40.0, seed=lab63.config.seed)
    crofton = crofton_mean_gap(apt.constants, apt.polygon)
    ok = rate_err < 0.05
    elapsed = time.time() - t0
    _verdict(
        3,
        "wall-crossing rate",
        ok,
        f"scale rate log {math.log(rate):.4f} vs {target:.4f} ({rate_err:.1%}); "
        f"arclength gap {mean_gap:.4f} (integral-geometry value {crofton:.4f}), "
        f"{elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 30.0


# ---------------------------------------------------------------- criterion 4

def test_criterion_04_bad_count_identity(lab63):
    t0 = time.time()
    apt = lab63.apartment
    rng = np.random.default_rng(lab63.config.seed)
    violations = 0
    for _ in range(500):
        th_xi = float(rng.uniform(0.0, 2.0 * math.pi))
        span = float(rng.uniform(0.3, 2.5))
        u = float(rng.uniform(0.1, 0.9))
        rep = fibers.bad_count_identity(apt, th_xi + u * span, th_xi, th_xi + span, 25.0)
        violations += not rep.holds
    ok = violations == 0
    elapsed = time.time() - t0
    _verdict(4, "crossing-count identity", ok, f"{violations} violations/500, {elapsed:.0f}s")
    assert ok
    assert elapsed < 60.0


# ---------------------------------------------------------------- criterion 5

def test_criterion_05_fiber_band(lab63):
    t0 = time.time()
    apt = lab63.apartment
    samples, segment = fibers.fiber_band_sweep(apt, 0.4, 1.6, 50, 25.0)
    ratios = [s.ratio for s in samples]
    band = max(ratios) / min(ratios)
    samples2, _ = fibers.fiber_band_sweep(apt, 0.4, 1.6, 100, 25.0, segment=segment)
    ratios2 = [s.ratio for s in samples2]
    move_hi = abs(max(ratios2) / max(ratios) - 1.0)
    move_lo = abs(min(ratios2) / min(ratios) - 1.0)
    ok = band <= 20.0 and move_hi < 0.10 and move_lo < 0.10
    elapsed = time.time() - t0
    _verdict(
        5,
        "fiber-measure band",
        ok,
        f"band {band:.2f} <= 20, endpoint moves {move_hi:.1%}/{move_lo:.1%}, {elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 60.0


# ---------------------------------------------------------------- criterion 6

def test_criterion_06_dyadic_bound(lab63):
    t0 = time.time()
    exponent = lab63.constants.dimension
    rng = np.random.default_rng(lab63.config.seed)
    violations = 0
    worst = 0.0
    for _ in range(10_000):
        f = analysis.StepFunction.random(rng, 1.0, 64)
        rep = analysis.dyadic_average_bound(f, exponent)
        violations += not rep.holds
        worst = max(worst, rep.ratio / rep.bound)
    f = analysis.StepFunction.random(rng, 1.0, 48)
    r1 = analysis.dyadic_average_bound(f, exponent)
    r2 = analysis.dyadic_average_bound(f.rescaled(2.0), exponent)
    scaling = abs(r1.ratio - r2.ratio)
    ok = violations == 0 and scaling < 1e-12
    elapsed = time.time() - t0
    _verdict(
        6,
        "dyadic averaging bound",
        ok,
        f"{violations} violations/10000, worst ratio/bound {worst:.3f}, "
        f"scaling gap {scaling:.1e}, {elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 10.0


# ---------------------------------------------------------------- criterion 7

def test_criterion_07_regularity(lab63, atlas10k):
    t0 = time.time()
    c = lab63.constants
    rng = np.random.default_rng(lab63.config.seed + 1)
    centers = sorted(int(i) for i in rng.choice(len(atlas10k), 24, replace=False))
    radii = [c.base ** (-k) for k in range(4, 13)]
    profile = boundary.ahlfors_profile(atlas10k, centers, radii)
    slope_err = abs(profile.slope - c.dimension) / c.dimension
    fiber_gap = max(
        abs(boundary.fiber_ball_mass(3, k) - (c.base ** (-k)) ** (c.dimension - 1.0))
        for k in range(1, 16)
    )
    ok = slope_err < 0.05 and fiber_gap < 1e-12
    elapsed = time.time() - t0
    _verdict(
        7,
        "ball-mass regularity",
        ok,
        f"slope {profile.slope:.4f} vs {c.dimension:.4f} ({slope_err:.1%}), "
        f"fiber sub-model gap {fiber_gap:.1e}, {elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 60.0


# ---------------------------------------------------------------- criterion 8

def test_criterion_08_modulus_oracles(lab63):
    t0 = time.time()
    exponent = lab63.constants.dimension
    worst_path = 0.0
    for k in (2, 5, 10):
        prob = modulus.ModulusProblem(
            k, [(i, i + 1) for i in range(k - 1)], np.ones(k), np.ones(k),
            {0}, {k - 1}, exponent,
        )
        sol = modulus.discrete_modulus(prob, tol=1e-8)
        worst_path = max(worst_path, abs(sol.value - float(k) ** (1.0 - exponent)))
    n = 10
    edges = [(i, i + 1) for i in range(4)] + [(5 + i, 5 + i + 1) for i in range(4)]
    prob = modulus.ModulusProblem(
        n, edges, np.ones(n), np.ones(n), {0, 5}, {4, 9}, exponent,
        require_connected=False,
    )
    additivity = abs(
        modulus.discrete_modulus(prob, tol=1e-8).value - 2.0 * 5.0 ** (1.0 - exponent)
    )
    rng = np.random.default_rng(lab63.config.seed)
    battery_worst = 0.0
    for _ in range(100):
        nn = int(rng.integers(5, 13))
        graph_edges = [
            (i, j) for i in range(nn) for j in range(i + 1, nn) if rng.random() < 0.24
        ]
        lengths = rng.uniform(0.3, 2.0, nn)
        measures = rng.uniform(0.3, 2.0, nn)
        prob = modulus.ModulusProblem(
            nn, graph_edges, lengths, measures, {0}, {nn - 1},
            float(rng.uniform(1.2, 2.5)),
        )
        bf = modulus.brute_force_modulus(prob)
        sol = modulus.discrete_modulus(prob, tol=1e-9)
        battery_worst = max(battery_worst, abs(sol.value - bf))
    ok = worst_path < 1e-4 and additivity < 1e-3 and battery_worst < 1e-6
    elapsed = time.time() - t0
    _verdict(
        8,
        "modulus oracles",
        ok,
        f"path err {worst_path:.1e}, additivity err {additivity:.1e}, "
        f"battery worst {battery_worst:.1e}/100 graphs, {elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 60.0


# ---------------------------------------------------------------- criterion 9

def test_criterion_09_loewner_profile(lab63):
    t0 = time.time()
    from boundarylab.cli import run_loewner
    from pathlib import Path
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        res = run_loewner(lab63, Path(tmp))
    ok = res.status == "pass"
    elapsed = time.time() - t0
    values = {k: v for k, v in res.key_values.items() if k.startswith(("coarse", "fine"))}
    _verdict(
        9,
        "curve-modulus lower envelope",
        ok,
        f"{ {k: round(float(v), 4) for k, v in values.items()} }, {elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 300.0


# --------------------------------------------------------------- criterion 10

def test_criterion_10_variation_bounds(lab63):
    t0 = time.time()
    from boundarylab.cli import run_poincare
    from pathlib import Path
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        res = run_poincare(lab63, Path(tmp))
    kv = res.key_values
    ok = res.status == "pass"
    elapsed = time.time() - t0
    _verdict(
        10,
        "variation inequalities",
        ok,
        f"fiber holds {bool(kv['fiber_bound_holds'])}, fubini {kv['fubini_worst']:.1e}, "
        f"pointwise {kv['pointwise_max_base']:.3f}->{kv['pointwise_max_refined']:.3f}, "
        f"ball {kv['ball_max_base']:.3f}->{kv['ball_max_refined']:.3f}, {elapsed:.0f}s",
    )
    assert ok
    assert elapsed < 300.0
