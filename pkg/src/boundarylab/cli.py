"""Batch front door: experiment orchestration and CSV/JSON reports.

Every subcommand runs one family of checks, writes a CSV with a trailing
metadata comment, and contributes a pass/fail record to the summary.  Hard
checks (exact identities, the dyadic bound, oracle agreements) gate the
exit code; band and stability checks carry their thresholds with them.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, analysis, boundary, fibers, modulus
from .apartment import (
    Apartment,
    arclength_gap_statistics,
    compute_constants,
    crofton_mean_gap,
    prefix_growth_rate,
)
from .errors import (
    CapacityError,
    CoverageError,
    DomainError,
    NonConvergenceError,
    ResolutionLimitError,
    UndersampledError,
)

SUBCOMMANDS = (
    "dim",
    "polygon",
    "apartment",
    "identity",
    "lemma4",
    "lemma5",
    "regularity",
    "poincare",
    "modulus",
    "loewner",
    "report",
)


@dataclass
class RunConfig:
    p: int = 5
    q: int = 3
    seed: int = 42
    tessellation_rings: int = 8
    horizon_L: float = 30.0
    atlas_size: int = 10_000
    segment_samples: int = 64
    cone_depth_cap: int = 12
    modulus_tol: float = 1e-6
    C0: float = 10.0
    output_dir: str = "reports"

    def __post_init__(self):
        if self.p < 5 or self.q < 3:
            raise DomainError("config requires p >= 5 and q >= 3")
        for name in (
            "tessellation_rings",
            "atlas_size",
            "segment_samples",
            "cone_depth_cap",
        ):
            if getattr(self, name) <= 0:
                raise DomainError(f"config field {name} must be positive")
        if self.modulus_tol <= 0 or self.horizon_L <= 0 or self.C0 <= 0:
            raise DomainError("tolerances and horizons must be positive")

    @classmethod
    def from_file(cls, path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def _fmt(x):
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def write_csv(path: Path, header, rows, config: RunConfig, constants):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    meta = (
        f"# p={config.p},q={config.q},Q={_fmt(constants.dimension)},"
        f"a={_fmt(constants.base)},seed={config.seed},version={__version__}"
    )
    lines.append(meta)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class CheckResult:
    check: str
    status: str  # pass | fail | warn
    key_values: dict


class Lab:
    """Shared expensive state across the subcommands of one run."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.constants = compute_constants(config.p, config.q)
        self._apartment = None
        self._atlas = {}

    @property
    def apartment(self) -> Apartment:
        if self._apartment is None:
            self._apartment = Apartment(self.constants, seed=self.config.seed)
        return self._apartment

    def atlas(self, size, horizon=None):
        horizon = self.config.horizon_L if horizon is None else horizon
        key = (size, horizon)
        if key not in self._atlas:
            self._atlas[key] = boundary.sample_boundary(
                self.apartment, size, seed=self.config.seed, horizon=horizon
            )
        return self._atlas[key]


# ------------------------------------------------------------- subcommands

def run_dim(lab: Lab, out: Path):
    c = lab.constants
    half = (lab.config.p - 2) / 2.0
    base_closed = half + math.sqrt(half * half - 1.0)
    ok = (
        c.dimension > 1.0
        and abs(c.base - base_closed) < 1e-12
        and abs(c.log_base * (c.dimension - 1.0) - math.log(lab.config.q - 1)) < 1e-12
    )
    rows = [(lab.config.p, lab.config.q, c.dimension, c.base)]
    write_csv(out / "dim.csv", ["p", "q", "dimension", "base"], rows, lab.config, c)
    return CheckResult(
        "dim",
        "pass" if ok else "fail",
        {"dimension": c.dimension, "base": c.base},
    )


def run_polygon(lab: Lab, out: Path):
    from . import hypgeom

    rows = []
    worst_angle = 0.0
    worst_side = 0.0
    for p in range(5, 13):
        poly = hypgeom.build_right_angled_polygon(p)
        angle_res = 0.0
        for k in range(p):
            ang = hypgeom.angle_at(
                poly.vertices[k], poly.vertices[k - 1], poly.vertices[(k + 1) % p]
            )
            angle_res = max(angle_res, abs(ang - math.pi / 2))
        side_res = abs(math.cosh(poly.side_length) - (4 * math.cos(math.pi / p) ** 2 - 1))
        worst_angle = max(worst_angle, angle_res)
        worst_side = max(worst_side, side_res)
        rows.append((p, poly.side_length, poly.circumradius, angle_res, side_res))
    ok = worst_angle < 1e-9 and worst_side < 1e-6
    write_csv(
        out / "polygon.csv",
        ["p", "side_length", "circumradius", "angle_residual", "side_residual"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "polygon",
        "pass" if ok else "fail",
        {"worst_angle_residual": worst_angle, "worst_side_residual": worst_side},
    )


def run_apartment(lab: Lab, out: Path):
    apt = lab.apartment
    cfg = lab.config
    rings = min(cfg.tessellation_rings, 4)
    chambers = apt.generate_tessellation(rings)
    walls = apt.enumerate_walls(min(apt.covered_radius(), 6.0))
    ortho_worst = 0.0
    from .hypgeom import mink

    normals = [w.geod.normal.astype(float) for w in walls[:120]]
    for i in range(len(normals)):
        for j in range(i + 1, len(normals)):
            g = abs(float(mink(normals[i], normals[j])))
            if g < 1.0 - 1e-6:
                ortho_worst = max(ortho_worst, g)

    mean_gap, n_gaps = arclength_gap_statistics(apt, 200, 40.0, seed=cfg.seed)
    crofton = crofton_mean_gap(lab.constants, apt.polygon)
    rate, counts = prefix_growth_rate(apt, max_level=5, resolution=49152)
    rate_err = abs(math.log(rate) - lab.constants.log_base) / lab.constants.log_base
    ok = ortho_worst < 1e-8 and rate_err < 0.05
    rows = [
        (
            rings,
            len(chambers),
            len(walls),
            ortho_worst,
            mean_gap,
            crofton,
            rate,
            math.exp(lab.constants.log_base),
            rate_err,
        )
    ]
    write_csv(
        out / "apartment.csv",
        [
            "rings",
            "chambers",
            "walls",
            "orthogonality_residual",
            "mean_arclength_gap",
            "crofton_gap",
            "prefix_growth_rate",
            "metric_base",
            "rate_rel_err",
        ],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "apartment",
        "pass" if ok else "fail",
        {
            "mean_arclength_gap": mean_gap,
            "crofton_gap": crofton,
            "prefix_growth_rate": rate,
            "rate_rel_err": rate_err,
        },
    )


def run_identity(lab: Lab, out: Path, n_triples: int = 500, horizon: float = 25.0):
    apt = lab.apartment
    rng = np.random.default_rng(lab.config.seed)
    violations = 0
    rows = []
    for k in range(n_triples):
        th_xi = float(rng.uniform(0.0, 2.0 * math.pi))
        span = float(rng.uniform(0.3, 2.5))
        u = float(rng.uniform(0.1, 0.9))
        rep = fibers.bad_count_identity(apt, th_xi + u * span, th_xi, th_xi + span, horizon)
        violations += not rep.holds
        if k < 50:
            rows.append(
                (
                    k,
                    rep.n_bad,
                    rep.product_left,
                    rep.product_right,
                    rep.product_ends,
                    rep.holds,
                )
            )
    rows.append(("violations", violations, "", "", "", ""))
    write_csv(
        out / "identity.csv",
        ["triple", "n_bad", "product_left", "product_right", "product_ends", "holds"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "identity",
        "pass" if violations == 0 else "fail",
        {"triples": n_triples, "violations": violations},
    )


def run_lemma4(lab: Lab, out: Path, grid: int = 50, horizon: float = 25.0):
    apt = lab.apartment
    th_xi, th_eta = 0.4, 1.6
    samples, segment = fibers.fiber_band_sweep(apt, th_xi, th_eta, grid, horizon)
    ratios = [s.ratio for s in samples]
    band = max(ratios) / min(ratios)
    samples2, _ = fibers.fiber_band_sweep(
        apt, th_xi, th_eta, 2 * grid, horizon, segment=segment
    )
    ratios2 = [s.ratio for s in samples2]
    band2 = max(ratios2) / min(ratios2)
    move_hi = abs(max(ratios2) / max(ratios) - 1.0)
    move_lo = abs(min(ratios2) / min(ratios) - 1.0)
    ok = band <= 20.0 and move_hi < 0.10 and move_lo < 0.10
    rows = [
        (s.t, s.length, s.n_bad, s.mass, s.envelope, s.ratio, s.refined_ratio)
        for s in samples
    ]
    rows.append(("band", band, "band_doubled", band2, "moves", move_hi, move_lo))
    write_csv(
        out / "lemma4.csv",
        ["t", "length", "n_bad", "mass", "envelope", "ratio", "refined_ratio"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "lemma4",
        "pass" if ok else "fail",
        {
            "band": band,
            "band_doubled": band2,
            "endpoint_move_hi": move_hi,
            "endpoint_move_lo": move_lo,
        },
    )


def run_lemma5(lab: Lab, out: Path, n_functions: int = 10_000):
    rng = np.random.default_rng(lab.config.seed)
    exponent = lab.constants.dimension
    worst = 0.0
    violations = 0
    for _ in range(n_functions):
        f = analysis.StepFunction.random(rng, 1.0, 64)
        rep = analysis.dyadic_average_bound(f, exponent)
        worst = max(worst, rep.ratio / rep.bound)
        violations += not rep.holds
    f = analysis.StepFunction.random(rng, 1.0, 32)
    r1 = analysis.dyadic_average_bound(f, exponent)
    r2 = analysis.dyadic_average_bound(f.rescaled(2.0), exponent)
    scaling_gap = abs(r1.ratio - r2.ratio)
    ok = violations == 0 and scaling_gap < 1e-12
    rows = [(n_functions, worst, violations, scaling_gap, 2.0 ** (exponent - 1.0))]
    write_csv(
        out / "lemma5.csv",
        ["functions", "worst_ratio_over_bound", "violations", "scaling_gap", "bound"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "lemma5",
        "pass" if ok else "fail",
        {"worst_ratio_over_bound": worst, "violations": violations, "scaling_gap": scaling_gap},
    )


def run_regularity(lab: Lab, out: Path):
    cfg = lab.config
    c = lab.constants
    atlas = lab.atlas(cfg.atlas_size)
    rng = np.random.default_rng(cfg.seed + 1)
    centers = sorted(int(i) for i in rng.choice(len(atlas), size=24, replace=False))
    radii = [c.base ** (-k) for k in range(2, 13)]
    profile = boundary.ahlfors_profile(atlas, centers, radii)
    fit_lo, fit_hi = c.base ** (-12.0), c.base ** (-4.0)
    xs, ys = [], []
    for row in profile.rows:
        if fit_lo * 0.999 <= row.radius <= fit_hi * 1.001 and row.telescoped_mass > 0:
            xs.append(math.log(row.radius))
            ys.append(math.log(row.telescoped_mass))
    slope = float(np.polyfit(xs, ys, 1)[0])
    slope_err = abs(slope - c.dimension) / c.dimension

    # fixed-direction fiber sub-model: exact mass (q-1)^-k = r^(Q-1)
    fiber_gap = 0.0
    for k in range(1, 16):
        r = c.base ** (-k)
        fiber_gap = max(
            fiber_gap, abs(boundary.fiber_ball_mass(cfg.q, k) - r ** (c.dimension - 1.0))
        )
    ok = slope_err < 0.05 and fiber_gap < 1e-12
    rows = [
        (r.center_index, r.radius, r.level, r.direct_count, r.direct_mass,
         r.telescoped_mass, r.estimator, r.flagged)
        for r in profile.rows
    ]
    rows.append(("slope", slope, "target", c.dimension, "rel_err", slope_err, "", ""))
    write_csv(
        out / "regularity.csv",
        ["center", "radius", "level", "direct_count", "direct_mass",
         "telescoped_mass", "estimator", "flagged"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "regularity",
        "pass" if ok else "fail",
        {"slope": slope, "target": c.dimension, "rel_err": slope_err,
         "fiber_submodel_gap": fiber_gap},
    )


def _cone_suite(lab: Lab, m: int):
    """Cone, its node metric, the test-function suite, and edge gradients."""
    apt = lab.apartment
    cone = boundary.build_cone_auto(
        apt, 0.4, 1.6, m, max_good=lab.config.cone_depth_cap,
        curve_cap=(lab.config.q - 1) ** lab.config.cone_depth_cap,
    )
    pts = cone.node_points
    n = len(pts)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = boundary.quasi_metric(apt, pts[i], pts[j])
    rng = np.random.default_rng(lab.config.seed + 2)
    suite = analysis.make_test_functions(
        pts, lambda i, j: dist[i, j], rng, count=20
    )
    # include the segment coordinate: u(node) = t(level)
    level_of = {}
    for (level, _), idx in cone.node_keys.items():
        level_of[idx] = level
    ts = [cone.levels[level_of[i]]["t"] for i in range(n)]
    suite.append(("20_segment_coordinate", np.array(ts)))
    return cone, dist, suite


def _ball_suite(lab: Lab, atlas, stage: str):
    """Ball-form checks on fixed (center, radius, anchor) triples.

    The ball objects are seeded from the config alone, so refining the
    atlas evaluates the same balls on a denser sample and the worst
    constants are comparable across stages.
    """
    cfg = lab.config
    apt = lab.apartment
    c = lab.constants
    rng = np.random.default_rng(cfg.seed + 3)
    n = len(atlas)
    pts = atlas.points
    rows = []
    worst = 0.0
    for bi in range(10):
        theta_c = float(rng.uniform(0.0, 2.0 * math.pi))
        theta_a = float(rng.uniform(0.0, 2.0 * math.pi))
        # radii sized so every ball stays well-sampled at the base stage
        radius = c.base ** (-float(rng.uniform(1.2, 2.0)))
        if radius * cfg.C0 > 1.0:
            radius = 1.0 / cfg.C0
        center = boundary.code_point(apt, theta_c, horizon=atlas.horizon)
        anchor = boundary.code_point(apt, theta_a, horizon=atlas.horizon)
        dists = np.array(
            [boundary.quasi_metric(apt, center, pts[j], atlas.horizon) for j in range(n)]
        )
        u_vals = np.array(
            [boundary.quasi_metric(apt, anchor, pts[j], atlas.horizon) for j in range(n)]
        )
        rho_vals = np.ones(n)  # unit slope bounds every distance function
        try:
            rep = analysis.ball_variation_bound(
                dists,
                atlas.weights,
                u_vals,
                rho_vals,
                radius=radius,
                inflation=cfg.C0,
                alpha=1.0,
            )
        except UndersampledError:
            rows.append((stage, f"ball_{bi}", "undersampled", "", "", ""))
            continue
        if rep.rhs_core > 0:
            worst = max(worst, rep.lhs / rep.rhs_core)
        rows.append((stage, f"ball_{bi}", rep.lhs, rep.rhs_core, "", ""))
    return worst, rows


def run_poincare(lab: Lab, out: Path):
    cfg = lab.config
    rows = []
    all_hold = True
    fubini_worst = 0.0
    pw_max = {}
    ball_max = {}
    for stage, m, atlas_n in (
        ("base", cfg.segment_samples, max(2000, cfg.atlas_size // 2)),
        ("refined", 2 * cfg.segment_samples, max(4000, cfg.atlas_size)),
    ):
        cone, dist, suite = _cone_suite(lab, m)
        start, end = cone.start_node(), cone.end_node()
        worst_c = 0.0
        for name, u in suite:
            rho = analysis.upper_gradient(cone.edges, u)
            rep = analysis.fiber_average_bound(cone, u, rho)
            all_hold &= rep.holds
            fubini_worst = max(fubini_worst, rep.fubini_gap)
            # pointwise form on the cone nodes
            rho_nodes = np.zeros(len(cone.node_points))
            for (na, nb, ln), rv in zip(cone.edges, rho):
                rho_nodes[na] = max(rho_nodes[na], rv)
                rho_nodes[nb] = max(rho_nodes[nb], rv)
            weights = cone.node_measure / cone.node_measure.sum()
            pw = analysis.pointwise_variation_bound(
                distance=cone.length,
                u_start=u[start],
                u_end=u[end],
                distances_from_start=dist[start],
                distances_from_end=dist[end],
                weights=weights,
                rho_values=rho_nodes,
                radius=2.0 * max(cone.length, float(dist[start].max())),
            )
            if not pw.violation and math.isfinite(pw.empirical_constant):
                worst_c = max(worst_c, pw.empirical_constant)
            rows.append(
                (stage, name, rep.lhs, rep.rhs, rep.fubini_gap, pw.empirical_constant)
            )
        pw_max[stage] = worst_c

        atlas = lab.atlas(atlas_n)
        ball_worst, ball_rows = _ball_suite(lab, atlas, stage)
        rows.extend(ball_rows)
        ball_max[stage] = ball_worst

    pw_stable = (
        pw_max["base"] > 0
        and 0.5 <= pw_max["refined"] / pw_max["base"] <= 2.0
    )
    ball_stable = (
        ball_max["base"] > 0
        and 0.5 <= ball_max["refined"] / ball_max["base"] <= 2.0
    )
    ok = all_hold and fubini_worst <= 1e-12 and pw_stable and ball_stable
    write_csv(
        out / "poincare.csv",
        ["stage", "function", "lhs", "rhs", "fubini_gap", "pointwise_constant"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "poincare",
        "pass" if ok else "fail",
        {
            "fiber_bound_holds": all_hold,
            "fubini_worst": fubini_worst,
            "pointwise_max_base": pw_max["base"],
            "pointwise_max_refined": pw_max["refined"],
            "ball_max_base": ball_max["base"],
            "ball_max_refined": ball_max["refined"],
        },
    )


def run_modulus(lab: Lab, out: Path, n_graphs: int = 100):
    exponent = lab.constants.dimension
    rows = []
    worst_path = 0.0
    for k in (2, 5, 10):
        prob = modulus.ModulusProblem(
            n_nodes=k,
            edges=[(i, i + 1) for i in range(k - 1)],
            lengths=np.ones(k),
            measures=np.ones(k),
            source={0},
            target={k - 1},
            exponent=exponent,
        )
        sol = modulus.discrete_modulus(prob, tol=lab.config.modulus_tol)
        exact = float(k) ** (1.0 - exponent)
        err = abs(sol.value - exact)
        worst_path = max(worst_path, err)
        rows.append(("path", k, sol.value, exact, err))
    n = 10
    edges = [(i, i + 1) for i in range(4)] + [(5 + i, 5 + i + 1) for i in range(4)]
    prob = modulus.ModulusProblem(
        n, edges, np.ones(n), np.ones(n), {0, 5}, {4, 9}, exponent,
        require_connected=False,
    )
    sol = modulus.discrete_modulus(prob, tol=lab.config.modulus_tol)
    additivity_err = abs(sol.value - 2.0 * 5.0 ** (1.0 - exponent))
    rows.append(("parallel", 5, sol.value, 2.0 * 5.0 ** (1.0 - exponent), additivity_err))

    rng = np.random.default_rng(lab.config.seed)
    battery_worst = 0.0
    battery_n = 0
    for _ in range(n_graphs):
        nn = int(rng.integers(5, 13))
        edges = [
            (i, j)
            for i in range(nn)
            for j in range(i + 1, nn)
            if rng.random() < 0.24
        ]
        lengths = rng.uniform(0.3, 2.0, nn)
        measures = rng.uniform(0.3, 2.0, nn)
        prob = modulus.ModulusProblem(
            nn, edges, lengths, measures, {0}, {nn - 1}, float(rng.uniform(1.2, 2.5))
        )
        bf = modulus.brute_force_modulus(prob)
        sol = modulus.discrete_modulus(prob, tol=1e-9)
        battery_worst = max(battery_worst, abs(sol.value - bf))
        battery_n += 1
    rows.append(("battery", battery_n, battery_worst, "", ""))
    ok = worst_path < 1e-4 and additivity_err < 1e-3 and battery_worst < 1e-6
    write_csv(
        out / "modulus.csv",
        ["case", "size", "value", "reference", "error"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "modulus",
        "pass" if ok else "fail",
        {
            "worst_path_error": worst_path,
            "additivity_error": additivity_err,
            "battery_graphs": battery_n,
            "battery_worst_error": battery_worst,
        },
    )


def run_loewner(lab: Lab, out: Path):
    cfg = lab.config
    c = lab.constants
    thresholds = (0.5, 1.0, 2.0)
    results = {}
    rows = []
    specs = [
        ("coarse", max(500, cfg.atlas_size // 16)),
        ("fine", max(1000, cfg.atlas_size // 8)),
    ]
    pair_scale = None
    for name, size in specs:
        atlas = lab.atlas(size)
        resolution = modulus.connectivity_resolution(atlas)
        if pair_scale is None:
            pair_scale = 4.0 * resolution  # absolute: shared by both stages
        lrows, pairs = modulus.loewner_profile(
            atlas, resolution, thresholds, seed=cfg.seed, n_pairs=24,
            tol=cfg.modulus_tol, pair_scale=pair_scale,
        )
        results[name] = {r.threshold: r for r in lrows}
        for r in lrows:
            rows.append((name, resolution, r.threshold, r.value, r.pair_count, r.flagged))
    positive = all(
        (not results[name][t].flagged) and results[name][t].value > 0.0
        for name in results
        for t in thresholds
    )
    stable = True
    for t in thresholds:
        va = results["coarse"][t].value
        vb = results["fine"][t].value
        if (
            not (math.isfinite(va) and math.isfinite(vb))
            or va <= 0.0
            or not (0.5 <= vb / va <= 2.0)
        ):
            stable = False
    ok = positive and stable
    write_csv(
        out / "loewner.csv",
        ["resolution_name", "resolution", "threshold", "value", "pairs", "flagged"],
        rows,
        lab.config,
        lab.constants,
    )
    return CheckResult(
        "loewner",
        "pass" if ok else "fail",
        {
            "positive": positive,
            "stable": stable,
            **{
                f"{name}_t{t}": results[name][t].value
                for name in results
                for t in thresholds
            },
        },
    )


_RUNNERS = {
    "dim": run_dim,
    "polygon": run_polygon,
    "apartment": run_apartment,
    "identity": run_identity,
    "lemma4": run_lemma4,
    "lemma5": run_lemma5,
    "regularity": run_regularity,
    "poincare": run_poincare,
    "modulus": run_modulus,
    "loewner": run_loewner,
}


def run(subcommand: str, config: RunConfig) -> int:
    """Execute one subcommand (or the full report); return the exit status."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    lab = Lab(config)
    names = list(_RUNNERS) if subcommand == "report" else [subcommand]
    if subcommand not in SUBCOMMANDS:
        raise DomainError(f"unknown subcommand {subcommand!r}")
    results = []
    for name in names:
        try:
            results.append(_RUNNERS[name](lab, out))
        except (
            CapacityError,
            CoverageError,
            DomainError,
            NonConvergenceError,
            ResolutionLimitError,
            UndersampledError,
        ) as exc:
            record = {
                "check": name,
                "error_type": type(exc).__name__,
                "message": str(exc),
            }
            (out / "error.json").write_text(
                json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            print(f"{name}: error ({type(exc).__name__}: {exc})", file=sys.stderr)
            return 2
    config_echo = asdict(config)
    config_echo.pop("output_dir")  # environment detail, not experiment identity
    summary = {
        "config": config_echo,
        "version": __version__,
        "checks": [
            {"check": r.check, "status": r.status, "key_values": r.key_values}
            for r in results
        ],
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8",
    )
    for r in results:
        print(f"{r.check}: {r.status}")
    return 0 if all(r.status == "pass" for r in results) else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="boundarylab",
        description="Numerical checks on a right-angled building-boundary model",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=str, default=None, help="flat JSON config")
    parser.add_argument("--seed", type=int, default=None, help="override the seed")
    parser.add_argument("--out", type=str, default=None, help="override output dir")
    args = parser.parse_args(argv)
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    return run(args.subcommand, config)


if __name__ == "__main__":
    sys.exit(main())
