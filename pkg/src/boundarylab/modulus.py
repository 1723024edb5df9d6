"""Discrete modulus of curve families on node-weighted graphs.

The modulus of the family of paths joining two node sets is the infimum of
sum(measure * rho^exponent) over densities rho >= 0 that give every joining
path rho-length at least one.  Admissibility is enforced through a
separation oracle (nonnegative-weight shortest path); the restricted
problem over the discovered paths is solved by coordinate ascent on its
dual, whose value certifies a lower bound while the rescaled primal gives
the admissible upper bound.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, NonConvergenceError


@dataclass
class ModulusProblem:
    """Curve-family modulus instance on a finite graph.

    Densities live on nodes; a path's rho-length is the sum of
    rho(v) * length(v) over its nodes, and the objective integrates
    rho^exponent against the node measure.
    """

    n_nodes: int
    edges: list  # (u, v) undirected
    lengths: np.ndarray
    measures: np.ndarray
    source: frozenset
    target: frozenset
    exponent: float
    require_connected: bool = True  # continua proper; off for free node sets

    def __post_init__(self):
        self.lengths = np.asarray(self.lengths, dtype=float)
        self.measures = np.asarray(self.measures, dtype=float)
        self.source = frozenset(self.source)
        self.target = frozenset(self.target)
        if self.exponent <= 1.0:
            raise DomainError("exponent must exceed 1")
        if not self.source or not self.target:
            raise DomainError("both continua must be nonempty")
        if self.source & self.target:
            raise DomainError("continua must be disjoint")
        if (self.lengths <= 0).any() or (self.measures <= 0).any():
            raise DomainError("lengths and measures must be positive")
        self._adj = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            self._adj[u].append(v)
            self._adj[v].append(u)
        if self.require_connected:
            for name, group in (("source", self.source), ("target", self.target)):
                if not self._connected_within(group):
                    raise DomainError(f"{name} set is not connected in the graph")

    def _connected_within(self, group):
        group = set(group)
        start = next(iter(group))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in self._adj[v]:
                if w in group and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == group


@dataclass
class ModulusSolution:
    density: np.ndarray
    value: float  # admissible (rescaled) objective: an upper bound
    lower_bound: float  # dual value over the discovered paths
    max_violation: float
    iterations: int
    paths: list


def shortest_path(prob: ModulusProblem, rho: np.ndarray):
    """Min-cost source-to-target path under node costs rho * length.

    Costs include both endpoints.  Deterministic tie-breaking via node
    indices.  Returns (cost, path tuple) or (inf, None).
    """
    cost = rho * prob.lengths
    dist = np.full(prob.n_nodes, np.inf)
    parent = np.full(prob.n_nodes, -1, dtype=int)
    heap = []
    for s in sorted(prob.source):
        dist[s] = cost[s]
        heapq.heappush(heap, (dist[s], s))
    visited = np.zeros(prob.n_nodes, dtype=bool)
    while heap:
        d, v = heapq.heappop(heap)
        if visited[v]:
            continue
        visited[v] = True
        if v in prob.target:
            path = [v]
            while parent[path[-1]] >= 0:
                path.append(int(parent[path[-1]]))
            path.reverse()
            return float(d), tuple(path)
        for w in prob._adj[v]:
            if visited[w]:
                continue
            nd = d + cost[w]
            if nd < dist[w]:
                dist[w] = nd
                parent[w] = v
                heapq.heappush(heap, (nd, w))
    return math.inf, None


def _ascend(prob, paths, lam, sweeps, tol):
    """Coordinate ascent on the dual of the restricted problem.

    Stationarity gives rho(v) = (sigma_v / (exponent * mu_v))^(1/(exponent-1))
    with sigma_v = length(v) * sum of multipliers of paths through v; each
    coordinate update solves the one-dimensional tightness equation of its
    path (monotone increasing in the multiplier) by a guarded Newton step.
    """
    q = prob.exponent
    expo = 1.0 / (q - 1.0)
    lengths = prob.lengths
    mus = prob.measures
    sigma = np.zeros(prob.n_nodes)
    node_arrays = [np.fromiter(p, dtype=int) for p in paths]
    for lp, nodes in zip(lam, node_arrays):
        if lp > 0:
            sigma[nodes] += lp * lengths[nodes]

    def rho_of(sig):
        return (np.maximum(sig, 0.0) / (q * mus)) ** expo

    n_paths = len(node_arrays)
    for sweep in range(sweeps):
        worst = 0.0
        # rotate the sweep start to break coordinate-ascent limit cycles
        offset = sweep % n_paths if n_paths else 0
        for kk in range(n_paths):
            k = (kk + offset) % n_paths
            nodes = node_arrays[k]
            lens = lengths[nodes]
            mu_k = q * mus[nodes]
            base = np.maximum(sigma[nodes] - lam[k] * lens, 0.0)

            def cost_and_slope(x):
                arg = np.maximum(base + x * lens, 0.0) / mu_k
                r = arg**expo
                c = float((lens * r).sum())
                with np.errstate(divide="ignore", invalid="ignore"):
                    dr = np.where(arg > 0.0, expo * r / (arg * mu_k), 0.0)
                slope = float((lens * lens * dr).sum())
                return c, slope

            c0, _ = cost_and_slope(0.0)
            if c0 >= 1.0:
                new = 0.0
            else:
                lo, hi = 0.0, max(lam[k], 1.0)
                while cost_and_slope(hi)[0] < 1.0:
                    lo = hi
                    hi *= 2.0
                    if hi > 1e18:
                        raise NonConvergenceError("dual multiplier diverged")
                x = min(max(lam[k], lo + 0.25 * (hi - lo)), hi)
                for _ in range(60):
                    c, slope = cost_and_slope(x)
                    if c < 1.0:
                        lo = x
                    else:
                        hi = x
                    if abs(c - 1.0) <= 1e-14:
                        break
                    if slope > 0.0:
                        step = (1.0 - c) / slope
                        x_new = x + step
                        if not (lo < x_new < hi):
                            x_new = 0.5 * (lo + hi)
                    else:
                        x_new = 0.5 * (lo + hi)
                    if abs(x_new - x) <= 1e-16 * max(1.0, x):
                        x = x_new
                        break
                    x = x_new
                new = x
            delta = new - lam[k]
            if abs(delta) > worst:
                worst = abs(delta)
            if delta != 0.0:
                sigma[nodes] = np.maximum(sigma[nodes] + delta * lens, 0.0)
                lam[k] = new
        if worst <= tol:
            break
    rho = rho_of(sigma)
    dual = float(sum(lam)) - (q - 1.0) * float((mus * rho**q).sum())
    return rho, lam, dual


def _newton_polish(prob, paths, lam, rounds=60):
    """Active-set Newton on the dual stationarity system.

    Coordinate ascent stalls on overlapping paths when the exponent sits
    near 1 (the primal map rho ~ sigma^(1/(q-1)) is then extremely stiff);
    the tightness residuals are smooth in the multipliers, so a damped
    Newton solve of the active system closes the last digits.
    """
    q = prob.exponent
    expo = 1.0 / (q - 1.0)
    lengths = prob.lengths
    node_arrays = [np.fromiter(p, dtype=int) for p in paths]
    lam = np.asarray(lam, dtype=float).copy()

    def state(lam_vec):
        sigma = np.zeros(prob.n_nodes)
        for lv, nodes in zip(lam_vec, node_arrays):
            if lv > 0:
                sigma[nodes] += lv * lengths[nodes]
        arg = np.maximum(sigma, 0.0) / (q * prob.measures)
        rho = arg**expo
        costs = np.array([(lengths[nd] * rho[nd]).sum() for nd in node_arrays])
        return sigma, rho, costs

    for _ in range(rounds):
        sigma, rho, costs = state(lam)
        active = [k for k, lv in enumerate(lam) if lv > 0 or costs[k] < 1.0 - 1e-12]
        if not active:
            break
        res = 1.0 - costs[active]
        if np.max(np.abs(res)) <= 1e-14 and costs.min() >= 1.0 - 1e-13:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            dr = np.where(sigma > 0.0, expo * rho / sigma, 0.0)
        jac = np.empty((len(active), len(active)))
        for a, ka in enumerate(active):
            na = node_arrays[ka]
            mask = np.zeros(prob.n_nodes)
            mask[na] = lengths[na]
            for b, kb in enumerate(active):
                nb = node_arrays[kb]
                jac[a, b] = float((mask[nb] * lengths[nb] * dr[nb]).sum())
        try:
            delta = np.linalg.solve(jac + 1e-14 * np.eye(len(active)), res)
        except np.linalg.LinAlgError:
            break
        step = 1.0
        best = lam.copy()
        improved = False
        base_err = float(np.max(np.abs(res)))
        for _ in range(30):
            trial = lam.copy()
            trial[active] = np.maximum(lam[active] + step * delta, 0.0)
            _, _, tc = state(trial)
            ta = [k for k, lv in enumerate(trial) if lv > 0 or tc[k] < 1.0 - 1e-12]
            terr = float(np.max(np.abs(1.0 - tc[ta]))) if ta else 0.0
            if terr < base_err:
                best = trial
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        lam = best
    return lam


def discrete_modulus(
    prob: ModulusProblem,
    tol: float = 1e-6,
    max_iter: int = 100_000,
    window: int = 50,
    settle_tol: float = 1e-8,
    sweeps: int = 6,
) -> ModulusSolution:
    """Cutting-plane solve: grow the path family through the shortest-path
    oracle, re-solve the restricted dual, stop when the worst violation is
    within tolerance and the objective has settled.

    Dual sweeps run over the active paths (positive multiplier or violated);
    dormant constraints stay satisfied and are rechecked by the oracle.
    The returned density is rescaled by its worst path cost, hence exactly
    admissible; the pre-rescale dual value accompanies it as a certified
    lower bound for the restricted family.
    """
    cost0, path0 = shortest_path(prob, np.zeros(prob.n_nodes))
    if path0 is None:
        return ModulusSolution(
            density=np.zeros(prob.n_nodes),
            value=0.0,
            lower_bound=0.0,
            max_violation=0.0,
            iterations=0,
            paths=[],
        )
    paths = []
    seen = set()
    lam = []
    rho = np.zeros(prob.n_nodes)
    history = []
    for iteration in range(1, max_iter + 1):
        cost, path = shortest_path(prob, rho)
        violation = 1.0 - cost
        objective = float((prob.measures * rho**prob.exponent).sum())
        history.append(objective)
        settled = (
            len(history) > window
            and abs(history[-1] - history[-1 - window])
            <= settle_tol * max(history[-1], 1e-300)
        )
        if violation <= tol and settled:
            break
        if path not in seen:
            seen.add(path)
            paths.append(path)
            lam.append(0.0)
        # discover a few more violated paths before re-solving: boost the
        # density provisionally along each find so the oracle spreads out
        rho_tmp = rho.copy()
        for _ in range(4):
            nodes = list(path)
            deficit = max(0.0, 1.0 - float((rho_tmp[nodes] * prob.lengths[nodes]).sum()))
            if deficit <= tol:
                break
            rho_tmp[nodes] += deficit / float(prob.lengths[nodes].sum())
            cost2, path2 = shortest_path(prob, rho_tmp)
            if cost2 >= 1.0 - tol or path2 in seen:
                break
            seen.add(path2)
            paths.append(path2)
            lam.append(0.0)
            path = path2
        costs = [
            float((rho[list(p)] * prob.lengths[list(p)]).sum()) for p in paths
        ]
        active_idx = [
            k for k in range(len(paths)) if lam[k] > 0.0 or costs[k] < 1.0
        ]
        sub_paths = [paths[k] for k in active_idx]
        sub_lam = [lam[k] for k in active_idx]
        rho, sub_lam, dual = _ascend(prob, sub_paths, sub_lam, sweeps=sweeps, tol=tol * 1e-3)
        for k, lv in zip(active_idx, sub_lam):
            lam[k] = lv
    else:
        raise NonConvergenceError(
            "modulus solve hit the iteration cap",
            lower=float(sum(lam)) if lam else 0.0,
            upper=float((prob.measures * rho**prob.exponent).sum()),
        )
    active_idx = [k for k in range(len(paths)) if lam[k] > 0.0]
    sub_paths = [paths[k] for k in active_idx]
    sub_lam = [lam[k] for k in active_idx]
    rho_final, sub_lam, dual = _ascend(prob, sub_paths, sub_lam, sweeps=60, tol=1e-14)
    for k, lv in zip(active_idx, sub_lam):
        lam[k] = lv
    worst_cost, _ = shortest_path(prob, rho_final)
    scaled = rho_final / worst_cost
    value = float((prob.measures * scaled**prob.exponent).sum())
    return ModulusSolution(
        density=scaled,
        value=value,
        lower_bound=dual,
        max_violation=max(0.0, 1.0 - worst_cost),
        iterations=iteration,
        paths=paths,
    )


def enumerate_paths(prob: ModulusProblem, cap: int = 200_000):
    """All simple source-to-target paths (small graphs only)."""
    out = []
    target = prob.target

    def dfs(v, visited, acc):
        if len(out) > cap:
            raise CapacityError("path family too large to enumerate")
        if v in target:
            out.append(tuple(acc))
            return
        for w in prob._adj[v]:
            if w not in visited:
                visited.add(w)
                acc.append(w)
                dfs(w, visited, acc)
                acc.pop()
                visited.remove(w)

    for s in sorted(prob.source):
        dfs(s, {s}, [s])
    return out


def brute_force_modulus(prob: ModulusProblem, node_cap: int = 12) -> float:
    """Exact modulus over the fully enumerated path family.

    Solved by dual coordinate ascent run to stationarity; optimality is
    certified by the duality gap (weak duality needs only lam >= 0 and the
    enumerated paths being genuine curves), and a second ascent from a
    different sweep order must agree.
    """
    if prob.n_nodes > node_cap:
        raise CapacityError(f"brute force limited to {node_cap} nodes")
    paths = enumerate_paths(prob)
    if not paths:
        return 0.0
    indicator = np.zeros((len(paths), prob.n_nodes))
    for i, p in enumerate(paths):
        indicator[i, list(p)] = 1.0

    def solve(order):
        lam = np.zeros(len(paths))
        upper = math.inf
        dual = 0.0
        for round_no in range(200):
            # active set: tight or nearly violated paths plus carriers of mass
            sigma = (indicator * prob.lengths[None, :] * lam[:, None]).sum(axis=0)
            rho = (np.maximum(sigma, 0.0) / (prob.exponent * prob.measures)) ** (
                1.0 / (prob.exponent - 1.0)
            )
            costs = indicator @ (rho * prob.lengths)
            active = np.nonzero((lam > 0.0) | (costs < 1.0 + 1e-9))[0]
            ordered = [paths[i] for i in order if i in set(active.tolist())]
            idx = [i for i in order if i in set(active.tolist())]
            sub_lam = [float(lam[i]) for i in idx]
            _, sub_lam, dual = _ascend(prob, ordered, sub_lam, sweeps=12, tol=1e-15)
            for i, lv in zip(idx, sub_lam):
                lam[i] = lv
            if round_no >= 2:
                lam = _newton_polish(prob, paths, lam)
            sigma = (indicator * prob.lengths[None, :] * lam[:, None]).sum(axis=0)
            rho = (np.maximum(sigma, 0.0) / (prob.exponent * prob.measures)) ** (
                1.0 / (prob.exponent - 1.0)
            )
            worst = float((indicator @ (rho * prob.lengths)).min())
            if worst <= 0:
                continue
            upper = float((prob.measures * (rho / worst) ** prob.exponent).sum())
            dual = float(lam.sum()) - (prob.exponent - 1.0) * float(
                (prob.measures * rho**prob.exponent).sum()
            )
            if upper - dual <= 1e-9 * max(upper, 1e-12):
                return upper, dual
        return upper, dual

    order_fwd = list(range(len(paths)))
    upper, dual = solve(order_fwd)
    if upper - dual > 5e-8 * max(upper, 1e-12):
        raise NonConvergenceError(
            "brute-force duality gap did not close", lower=dual, upper=upper
        )
    upper2, _ = solve(list(reversed(order_fwd)))
    if abs(upper2 - upper) > 1e-7 * max(upper, 1e-12):
        raise NonConvergenceError(
            "independent solver configurations disagree", lower=upper2, upper=upper
        )
    return upper


def separation_ratio(set_a, set_b, metric) -> float:
    """dist(A, B) / min(diam A, diam B) under the supplied metric function."""
    set_a = list(set_a)
    set_b = list(set_b)
    if len(set_a) < 2 or len(set_b) < 2:
        raise DomainError("continua must be non-degenerate (at least two points)")
    diam_a = max(metric(x, y) for i, x in enumerate(set_a) for y in set_a[i + 1 :])
    diam_b = max(metric(x, y) for i, x in enumerate(set_b) for y in set_b[i + 1 :])
    if diam_a == 0.0 or diam_b == 0.0:
        raise DomainError("continua must have positive diameter")
    dist = min(metric(x, y) for x in set_a for y in set_b)
    return dist / min(diam_a, diam_b)


# ------------------------------------------------------------ atlas graphs

@dataclass
class AtlasGraph:
    """Neighbor graph over atlas points at one resolution.

    Nodes carry the resolution as their length element and the atlas weight
    as measure; edges join pairs within the linking radius.
    """

    n_nodes: int
    edges: list
    lengths: np.ndarray
    measures: np.ndarray
    distances: dict  # (i, j) i<j -> quasi-metric distance of linked pairs
    resolution: float


def connectivity_resolution(atlas, factor: float = 1.5) -> float:
    """Linking radius that keeps the sampled circle in one component.

    The largest quasi-metric gap between angularly adjacent sample points
    bounds the nearest-neighbor distance of every point, so linking at a
    modest multiple of it joins the whole cyclic chain.
    """
    from . import boundary as _boundary

    apt = atlas.apartment
    n = len(atlas)
    order = sorted(range(n), key=lambda i: atlas.points[i].theta)
    worst = 0.0
    for a, b in zip(order, order[1:] + order[:1]):
        count, _ = _boundary.coded_gromov_product(
            apt,
            atlas.points[a],
            atlas.points[b],
            atlas.horizon,
            (atlas.trace_ids[a], atlas.trace_pos[a]),
            (atlas.trace_ids[b], atlas.trace_pos[b]),
        )
        worst = max(worst, atlas.constants.base ** (-count))
    return factor * worst


def build_atlas_graph(atlas, resolution: float) -> AtlasGraph:
    """Link atlas points within the resolution; distances via the coded product.

    Pairs are pruned by direction first: the quasi-metric of two points is
    at least a fixed multiple of their angular separation at these scales.
    """
    from . import boundary as _boundary

    apt = atlas.apartment
    pts = atlas.points
    n = len(pts)
    thetas = np.array([z.theta for z in pts])
    order = np.argsort(thetas)
    edges = []
    distances = {}
    # angular window: directions further apart than ~4x resolution cannot be
    # within the linking radius (their shared prefix is too short)
    window = min(math.pi, 6.0 * resolution)
    for oi in range(n):
        i = int(order[oi])
        for oj in range(oi + 1, n):
            j = int(order[oj])
            if thetas[j] - thetas[i] > window:
                break
            cache_i = (atlas.trace_ids[i], atlas.trace_pos[i])
            cache_j = (atlas.trace_ids[j], atlas.trace_pos[j])
            count, _ = _boundary.coded_gromov_product(
                apt, pts[i], pts[j], atlas.horizon, cache_i, cache_j
            )
            d = atlas.constants.base ** (-count)
            if d <= resolution:
                a, b = (i, j) if i < j else (j, i)
                edges.append((a, b))
                distances[(a, b)] = d
    lengths = np.full(n, resolution)
    return AtlasGraph(
        n_nodes=n,
        edges=edges,
        lengths=lengths,
        measures=atlas.weights.copy(),
        distances=distances,
        resolution=resolution,
    )


def _grow_continuum(graph_adj, start, distances_fn, target_diam, size_cap=400):
    """Breadth-first ball growth until the set's diameter reaches the target.

    Returns None when the component is exhausted well short of the target
    (an under-realized continuum would distort separation ratios).
    """
    group = [start]
    frontier = [start]
    seen = {start}
    diam = 0.0
    while frontier:
        nxt = []
        for v in frontier:
            for w in graph_adj[v]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        for w in nxt:
            for g in group:
                d = distances_fn(w, g)
                if d > diam:
                    diam = d
            group.append(w)
            if len(group) > size_cap:
                return None
        if diam >= target_diam and len(group) >= 2:
            return group
        frontier = nxt
    if len(group) >= 2 and diam >= 0.6 * target_diam:
        return group
    return None


@dataclass(frozen=True)
class LoewnerRow:
    threshold: float
    value: float
    pair_count: int
    best_pair: tuple
    flagged: bool


def loewner_profile(
    atlas,
    resolution: float,
    thresholds,
    seed: int,
    n_pairs: int = 30,
    tol: float = 1e-5,
    pair_scale: float | None = None,
):
    """Estimated modulus lower-envelope over continuum pairs by separation.

    Builds the atlas graph at the given resolution, grows seeded connected
    continua, and for each threshold t reports the minimum modulus over the
    sampled pairs with separation ratio at most t.  The estimate is an
    upper bound for the true infimum (the family is sampled, never
    exhaustive).
    """
    from . import boundary as _boundary

    apt = atlas.apartment
    graph = build_atlas_graph(atlas, resolution)
    adj = [[] for _ in range(graph.n_nodes)]
    for u, v in graph.edges:
        adj[u].append(v)
        adj[v].append(u)

    metric_cache = {}

    def metric(i, j):
        if i == j:
            return 0.0
        key = (min(i, j), max(i, j))
        hit = metric_cache.get(key)
        if hit is None:
            count, _ = _boundary.coded_gromov_product(
                apt,
                atlas.points[i],
                atlas.points[j],
                atlas.horizon,
                (atlas.trace_ids[i], atlas.trace_pos[i]),
                (atlas.trace_ids[j], atlas.trace_pos[j]),
            )
            hit = atlas.constants.base ** (-count)
            metric_cache[key] = hit
        return hit

    rng = np.random.default_rng(seed)
    candidates = [v for v in range(graph.n_nodes) if adj[v]]
    if not candidates:
        raise DomainError("atlas graph has no edges at this resolution")
    thetas = np.array([atlas.points[v].theta for v in candidates])
    max_t = max(thresholds)

    # pair specs live in absolute units so successive resolutions realize
    # the same continuum pairs on denser samples
    if pair_scale is None:
        pair_scale = 4.0 * resolution
    specs = []
    for _ in range(n_pairs):
        specs.append(
            (
                float(rng.uniform(0.0, 2.0 * math.pi)),
                pair_scale * float(rng.uniform(0.5, 1.5)),
                float(10.0 ** rng.uniform(-0.9, 0.25)),
            )
        )

    pairs = []
    for theta_a, diam_target, frac in specs:
        offs = np.abs((thetas - theta_a + math.pi) % (2.0 * math.pi) - math.pi)
        va = candidates[int(np.argmin(offs))]
        ca = _grow_continuum(adj, va, metric, diam_target)
        if ca is None:
            continue
        dist_target = diam_target * frac
        window = 30.0 * diam_target
        near = offs < window
        offsets = [
            v
            for v, keep in zip(candidates, near)
            if keep and 0 < metric(va, v) < 8.0 * diam_target
        ]
        if not offsets:
            continue
        vb = min(offsets, key=lambda v: abs(metric(va, v) - dist_target))
        cb = _grow_continuum(adj, vb, metric, diam_target)
        if cb is None or set(ca) & set(cb):
            continue
        try:
            delta = separation_ratio(ca, cb, metric)
        except DomainError:
            continue
        if delta > max_t:
            continue  # qualifies for no threshold: skip the solve
        # the pair must be joined by curves at this resolution
        seen_bfs = set(ca)
        stack = list(ca)
        reachable = False
        cb_set = set(cb)
        while stack:
            v = stack.pop()
            if v in cb_set:
                reachable = True
                break
            for w in adj[v]:
                if w not in seen_bfs:
                    seen_bfs.add(w)
                    stack.append(w)
        if not reachable:
            continue
        prob = ModulusProblem(
            n_nodes=graph.n_nodes,
            edges=graph.edges,
            lengths=graph.lengths,
            measures=graph.measures,
            source=frozenset(ca),
            target=frozenset(cb),
            exponent=atlas.constants.dimension,
        )
        sol = discrete_modulus(
            prob, tol=max(tol, 1e-3), window=5, settle_tol=1e-3, sweeps=2
        )
        pairs.append((delta, sol.value, (va, vb)))

    rows = []
    for t in thresholds:
        qualifying = [(v, p) for d, v, p in pairs if d <= t]
        if not qualifying:
            rows.append(LoewnerRow(t, math.nan, 0, (), True))
            continue
        best = min(qualifying, key=lambda x: x[0])
        rows.append(LoewnerRow(t, best[0], len(qualifying), best[1], False))
    return rows, pairs
