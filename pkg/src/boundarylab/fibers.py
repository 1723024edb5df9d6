"""Fiber trees over segment points: good/bad crossings and branch measures.

A ray from the base point toward an interior point of a boundary segment
crosses a sequence of walls.  A crossing is bad when its wall also crosses
the ray toward either segment endpoint, good otherwise.  Branching the
building along good walls produces a subtree of the full crossing tree:
good levels branch (q-1)-fold, bad levels pass straight through, so the
mass of the subtree boundary inside the full tree is (q-1)^-N with N the
number of bad crossings.  N obeys an exact inclusion-exclusion identity in
the three pairwise wall-count products, which the tests enforce as integer
equality.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .apartment import Apartment, ModelConstants
from .errors import CapacityError, DomainError

DEFAULT_LEAF_CAP = 2**20


@dataclass(frozen=True)
class CrossingFlags:
    """Good/bad classification of one ray's wall crossings.

    flags[i] is True when crossing i is bad (its wall also crosses the ray
    toward one of the two segment endpoints).
    """

    wall_ids: tuple
    params: tuple
    flags: tuple

    @property
    def n_bad(self) -> int:
        return sum(1 for f in self.flags if f)

    @property
    def n_good(self) -> int:
        return len(self.flags) - self.n_bad

    def __len__(self):
        return len(self.flags)


@dataclass(frozen=True)
class IdentityReport:
    n_bad: int
    product_left: int  # walls shared with the left endpoint ray
    product_right: int  # walls shared with the right endpoint ray
    product_ends: int  # walls shared between the endpoint rays
    holds: bool


@dataclass(frozen=True)
class FiberTree:
    """The branch tree over one ray's crossings.

    Good levels have q-1 children, bad levels one; leaves are words over
    the good levels, each carrying the uniform weight (q-1)^-n_good.
    """

    q: int
    flags: CrossingFlags
    leaf_count: int
    leaf_weight: float

    def leaves(self):
        """Iterate leaf words (one label per good level)."""
        return itertools.product(range(self.q - 1), repeat=self.flags.n_good)

    def mass_in_full_tree(self) -> float:
        """Total weight of this subtree's leaves inside the full tree.

        Every level of the full tree branches (q-1)-fold, so each leaf has
        mass (q-1)^-len inside it and the subtree keeps only the good-level
        branchings.
        """
        n = len(self.flags)
        return self.leaf_count * float(self.q - 1) ** (-n)


def _classification_horizon(apartment: Apartment, theta_t, theta_xi, theta_eta, start):
    """Horizon at which all three pairwise products have stabilized, doubled.

    Coincident directions share every wall; they are skipped (their product
    never stabilizes and contributes no finite horizon requirement).
    """
    horizons = [start]
    for a, b in ((theta_xi, theta_t), (theta_t, theta_eta), (theta_xi, theta_eta)):
        if a == b:
            continue
        _, h = apartment.stabilized_product(a, b, start=start)
        horizons.append(h)
    return min(2.0 * max(horizons), apartment.horizon_cap)


def classify_crossings(
    apartment: Apartment,
    theta_t: float,
    theta_xi: float,
    theta_eta: float,
    horizon: float,
) -> CrossingFlags:
    """Flag each crossing of the ray toward theta_t as good or bad.

    Bad means the wall appears in the crossing sequence of the ray toward
    theta_xi or theta_eta, with all three rays traced to a common horizon
    at which the pairwise products have stabilized.
    """
    common = _classification_horizon(apartment, theta_t, theta_xi, theta_eta, horizon)
    tr = apartment.trace(theta_t, common)
    xi_ids = set(apartment.trace(theta_xi, common).ids_up_to(common))
    eta_ids = set(apartment.trace(theta_eta, common).ids_up_to(common))
    wall_ids = []
    params = []
    flags = []
    for wid, s in zip(tr.wall_ids, tr.params):
        if s > common:
            break
        wall_ids.append(wid)
        params.append(s)
        flags.append(wid in xi_ids or wid in eta_ids)
    return CrossingFlags(tuple(wall_ids), tuple(params), tuple(flags))


def bad_count_identity(
    apartment: Apartment,
    theta_t: float,
    theta_xi: float,
    theta_eta: float,
    horizon: float,
) -> IdentityReport:
    """Exact integer identity: N = {xi|t} + {t|eta} - {xi|eta}.

    All four quantities are computed from traces at one stabilized common
    horizon, so the equality is checked as exact integers.
    """
    common = _classification_horizon(apartment, theta_t, theta_xi, theta_eta, horizon)
    t_ids = set(apartment.trace(theta_t, common).ids_up_to(common))
    xi_ids = set(apartment.trace(theta_xi, common).ids_up_to(common))
    eta_ids = set(apartment.trace(theta_eta, common).ids_up_to(common))
    n_bad = len(t_ids & (xi_ids | eta_ids))
    g_left = len(t_ids & xi_ids)
    g_right = len(t_ids & eta_ids)
    g_ends = len(xi_ids & eta_ids)
    return IdentityReport(
        n_bad=n_bad,
        product_left=g_left,
        product_right=g_right,
        product_ends=g_ends,
        holds=(n_bad == g_left + g_right - g_ends),
    )


def branch_mass(flags: CrossingFlags, q: int) -> float:
    """Mass (q-1)^-N of the branch subtree inside the full crossing tree."""
    if q < 3:
        raise DomainError("q must be at least 3")
    return float(q - 1) ** (-flags.n_bad)


def build_fiber_tree(flags: CrossingFlags, q: int, leaf_cap: int = DEFAULT_LEAF_CAP) -> FiberTree:
    if q < 3:
        raise DomainError("q must be at least 3")
    n_good = flags.n_good
    leaf_count = (q - 1) ** n_good
    if leaf_count > leaf_cap:
        raise CapacityError(
            f"fiber tree would have {leaf_count} leaves (cap {leaf_cap}); "
            "use a coarser horizon"
        )
    return FiberTree(
        q=q,
        flags=flags,
        leaf_count=leaf_count,
        leaf_weight=float(q - 1) ** (-n_good),
    )


@dataclass(frozen=True)
class FiberBandSample:
    t: float
    length: float
    n_bad: int
    mass: float
    envelope: float  # min(t, l - t)
    ratio: float  # mass / envelope^(Q-1)
    refined_ratio: float  # mass / (t (l-t)/l)^(Q-1)


def fiber_band_sweep(
    apartment: Apartment,
    theta_start: float,
    theta_end: float,
    grid_size: int,
    horizon: float,
    segment=None,
    clamp: float = 1.0 / 50.0,
):
    """Band samples over a t-grid clamped one base step away from the ends.

    Doubling grid_size refines the same clamped range, so the band
    endpoints are comparable across resolutions.
    """
    from . import boundary as _boundary

    if segment is None:
        segment = _boundary.parametrize_segment(
            apartment, theta_start, theta_end, max(64, grid_size)
        )
    length = segment.length
    constants = apartment.constants
    out = []
    lo = clamp * length
    hi = (1.0 - clamp) * length
    for t in [lo + (hi - lo) * i / (grid_size - 1) for i in range(grid_size)]:
        theta_t = segment.direction_at(t)
        flags = classify_crossings(
            apartment, theta_t, segment.theta_start, segment.theta_end, horizon
        )
        out.append(fiber_band_ratio(t, length, flags, constants))
    return out, segment


def fiber_band_ratio(
    t: float,
    length: float,
    flags: CrossingFlags,
    constants: ModelConstants,
) -> FiberBandSample:
    """Two-sided comparability sample: branch mass against min(t, l-t)^(Q-1).

    Only defined for interior points of the segment; the mass degenerates
    at the endpoints.
    """
    if not (0.0 < t < length):
        raise DomainError(f"t must lie strictly inside (0, {length}), got {t}")
    mass = branch_mass(flags, constants.q)
    envelope = min(t, length - t)
    expo = constants.dimension - 1.0
    ratio = mass / envelope**expo
    refined = mass / (t * (length - t) / length) ** expo
    return FiberBandSample(
        t=t,
        length=length,
        n_bad=flags.n_bad,
        mass=mass,
        envelope=envelope,
        ratio=ratio,
        refined_ratio=refined,
    )
