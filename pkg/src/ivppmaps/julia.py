"""Julia set point clouds by backward iteration from an unstable orbit.

Starting from the points of an unstable periodic orbit, every level replaces
the frontier by all preimages found for it; the union over levels samples
the closure of the backward orbit. Each cloud point remembers its depth and
the orbit point it lands on after that many forward steps, which is what
:func:`verify_cloud` checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import minimize

from . import maps
from .ivpp import VspCurve
from .maps import get_family
from .numerics import merge_new_points, sup_norm
from .periodic import UNSTABLE, PeriodicOrbit, enumerate_dspp, iterate_batch

CLOUD_DEDUP = 1e-8
FORWARD_TOL = 1e-6


class SeedNotUnstable(ValueError):
    pass


@dataclass
class JuliaCloud:
    params: dict
    seed_orbit: PeriodicOrbit
    points: np.ndarray
    depths: np.ndarray
    # index into seed_orbit.points reached after `depth` forward steps
    anchors: np.ndarray
    depth_reached: int
    # preimages dropped because they failed the forward re-check
    rejected: int = 0

    def __len__(self):
        return len(self.points)


def _hyperbolic(orbit: PeriodicOrbit, margin: float = 1e-6) -> bool:
    return all(abs(abs(m) - 1) > margin for m in orbit.multipliers)


def _in_coordinate_plane(orbit: PeriodicOrbit, tol: float = 1e-12) -> bool:
    return bool(np.any(np.max(np.abs(orbit.points), axis=0) < tol))


def _has_preimages(family, P, orbit: PeriodicOrbit, rng, budget: int = 48) -> bool:
    found = maps.preimages_batch(family, P, orbit.points, budget, rng, wide_fraction=0.5)
    for f in found:
        for p in f:
            if np.min(sup_norm(orbit.points - p)) > CLOUD_DEDUP:
                return True
    return False


def select_seed(family, params, n_max: int = 2, budget_per_period: int = 200,
                seed: int = 0) -> PeriodicOrbit:
    """Lowest-period isolated unstable orbit with a nontrivial backward orbit.

    Within one period hyperbolic orbits come first, since a fixed point
    with a multiplier on the unit circle (such as the origin of moebius2d)
    can have no preimages besides itself. After that, orbits off the
    coordinate planes come first: lv3d maps each plane ``x_i = 0`` into
    itself, and an orbit inside one has a thin backward tree.
    """
    family = get_family(family)
    P = family.param_values(params)
    search, probe = np.random.SeedSequence(seed).spawn(2)
    cat = enumerate_dspp(family, P, n_max, budget_per_period, int(search.generate_state(1)[0]))
    rng = np.random.default_rng(probe)
    for n in sorted(cat.entries):
        unstable = [o for o in cat.entries[n] if o.stability == UNSTABLE]
        for o in sorted(unstable, key=lambda o: (not _hyperbolic(o), _in_coordinate_plane(o))):
            if _has_preimages(family, P, o, rng):
                return o
    raise SeedNotUnstable(f"no unstable orbit with preimages up to period {n_max}")


def backward_orbit(family, params, seed_orbit: PeriodicOrbit, depth: int,
                   max_points: int, rng_seed: int, budget: int = 24,
                   wide_fraction: float = 0.5) -> JuliaCloud:
    """Breadth-first preimage expansion of ``seed_orbit`` up to ``depth`` levels.

    ``budget`` random Newton starts are spent per frontier point, a
    ``wide_fraction`` share of them far from the origin. A new
    preimage at depth ``k`` is kept only if ``k`` forward steps bring it back
    within ``FORWARD_TOL * 2^k`` of its orbit point; near the blow-up points
    of the map rounding errors can grow faster than that. Once the cloud
    would exceed ``max_points``, the new level is subsampled uniformly.
    """
    family = get_family(family)
    P = family.param_values(params)
    if seed_orbit.stability != UNSTABLE:
        raise SeedNotUnstable(f"seed orbit is {seed_orbit.stability}")
    rng = np.random.default_rng(rng_seed)

    pts = np.asarray(seed_orbit.points, dtype=complex)
    anchors = np.arange(len(pts))
    if len(pts) > max_points:
        pick = np.sort(rng.choice(len(pts), size=max_points, replace=False))
        pts, anchors = pts[pick], anchors[pick]
    cloud, cloud_depth, cloud_anchor = [pts], [np.zeros(len(pts), int)], [anchors]
    total = len(pts)
    frontier, frontier_anchor = pts, anchors
    reached, rejected = 0, 0
    for level in range(1, depth + 1):
        if total >= max_points or len(frontier) == 0:
            break
        found = maps.preimages_batch(family, P, frontier, budget, rng, wide_fraction=wide_fraction)
        cand = [f for f in found if len(f)]
        if not cand:
            break
        cand_anchor = np.concatenate([np.full(len(f), a) for f, a in zip(found, frontier_anchor) if len(f)])
        cand = np.concatenate(cand)
        keep = merge_new_points(np.concatenate(cloud), cand, CLOUD_DEDUP)
        new, new_anchor = cand[keep], cand_anchor[keep]
        fine = _forward_ok(family, P, new, level, seed_orbit.points[new_anchor])
        rejected += int(np.sum(~fine))
        new, new_anchor = new[fine], new_anchor[fine]
        room = max_points - total
        if len(new) > room:
            pick = np.sort(rng.choice(len(new), size=room, replace=False))
            new, new_anchor = new[pick], new_anchor[pick]
        if len(new) == 0:
            break
        cloud.append(new)
        cloud_depth.append(np.full(len(new), level))
        cloud_anchor.append(new_anchor)
        total += len(new)
        frontier, frontier_anchor = new, new_anchor
        reached = level
    return JuliaCloud(family.param_dict(P), seed_orbit, np.concatenate(cloud),
                      np.concatenate(cloud_depth), np.concatenate(cloud_anchor), reached, rejected)


def _forward_ok(family, P, X, k: int, targets) -> np.ndarray:
    img, ok = iterate_batch(family, P, X, k)
    with np.errstate(invalid="ignore"):
        err = sup_norm(img - targets)
    return ok & (err < FORWARD_TOL * 2.0 ** k)


def verify_cloud(family, cloud: JuliaCloud) -> np.ndarray:
    """Forward error ``|f^k(p) - anchor|`` divided by ``FORWARD_TOL * 2^k``.

    Every entry must be below 1 for the cloud to be consistent.
    """
    family = get_family(family)
    ratios = np.zeros(len(cloud))
    for k in np.unique(cloud.depths):
        idx = np.flatnonzero(cloud.depths == k)
        img, ok = iterate_batch(family, cloud.params, cloud.points[idx], int(k))
        with np.errstate(invalid="ignore"):
            err = sup_norm(img - cloud.seed_orbit.points[cloud.anchors[idx]])
        err[~ok] = np.inf
        ratios[idx] = err / (FORWARD_TOL * 2.0 ** k)
    return ratios


def distance_to_curve(p, curve: VspCurve, t0=None) -> float:
    """Euclidean distance from ``p`` to ``curve`` minimised over complex ``t``.

    Local Nelder-Mead search in ``(Re t, Im t)`` started from the third
    coordinate of ``p`` (the curve's own ``z = t``) and from ``t0`` if given.
    """
    p = np.asarray(p, dtype=complex)

    def dist2(v):
        t = complex(v[0], v[1])
        if abs(t) < 1e-12 or abs(t - 1) < 1e-12:
            return np.inf
        return float(np.sum(np.abs(curve.points(t) - p) ** 2))

    starts = [p[2]] + ([] if t0 is None else [complex(t0)])
    best = np.inf
    for s in starts:
        res = minimize(dist2, [s.real, s.imag], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000})
        best = min(best, res.fun)
    return float(np.sqrt(best))


def accumulation_distance(cloud: Union[JuliaCloud, np.ndarray],
                          target: Union[VspCurve, np.ndarray, list, tuple]) -> float:
    """Median Euclidean distance from the cloud points to a point or a VSP curve."""
    pts = cloud.points if isinstance(cloud, JuliaCloud) else np.asarray(cloud, dtype=complex)
    if len(pts) == 0:
        raise ValueError("empty cloud")
    if isinstance(target, VspCurve):
        d = np.array([distance_to_curve(p, target) for p in pts])
    else:
        q = np.asarray(target, dtype=complex)
        d = np.sqrt(np.sum(np.abs(pts - q) ** 2, axis=1))
    return float(np.median(d))
