"""Periodic points: residuals, multistart search, minimal periods, stability.

A period-``n`` point solves ``f^n(x) - x = 0``. The search runs damped
Newton from random starts, groups roots into orbits, drops roots whose
minimal period is a proper divisor of ``n`` and classifies each orbit by the
eigenvalues of the Jacobian of ``f^n``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from . import maps
from .maps import SingularEvaluation, get_family
from .numerics import (CONVERGED, NewtonOptions, as_point, multipliers,
                       newton_solve_batch, polish_batch, sup_norm)

log = logging.getLogger(__name__)

ORBIT_DEDUP = 1e-6
MINIMAL_PERIOD_TOL = 1e-6
ORBIT_TOL = 1e-8
STABILITY_MARGIN = 1e-8

STABLE, UNSTABLE, NEUTRAL = "stable", "unstable", "neutral"


class IvppDetected(Exception):
    """Period-``n`` points of the map are not isolated on a level set."""

    def __init__(self, period: int, points):
        super().__init__(f"period-{period} points fill a level set (integrable regime)")
        self.period = period
        self.points = points


@dataclass
class PeriodicOrbit:
    points: np.ndarray
    minimal_period: int
    params: dict
    multipliers: list
    stability: str
    residual: float
    # False when other period-n points lie arbitrarily close (a continuum)
    isolated: bool = True

    def to_dict(self) -> dict:
        return {
            "isolated": bool(self.isolated),
            "points": [[[float(c.real), float(c.imag)] for c in p] for p in self.points],
            "multipliers": [[float(m.real), float(m.imag)] for m in self.multipliers],
            "stability": self.stability,
            "residual": float(self.residual),
            "minimal_period": int(self.minimal_period),
        }


@dataclass
class DsppCatalogue:
    params: dict
    entries: Dict[int, List[PeriodicOrbit]] = field(default_factory=dict)
    # orbits lying on continua of period-n points, left out of ``entries``
    continua: Dict[int, List[PeriodicOrbit]] = field(default_factory=dict)
    budget_used: Dict[int, int] = field(default_factory=dict)

    def orbits(self) -> List[PeriodicOrbit]:
        return [o for n in sorted(self.entries) for o in self.entries[n]]


def iterate_batch(family, params, X, n: int):
    """Return ``(f^n(X), ok)``."""
    family = get_family(family)
    P = family.param_values(params)
    X = np.asarray(X, dtype=complex)
    ok = np.ones(len(X), dtype=bool)
    for _ in range(n):
        X, ok_i = maps.evaluate_batch(family, P, X)
        ok &= ok_i
    return X, ok


def cycle_batch(family, P, X, n: int):
    """``f^n(X) - X`` with the chain-rule Jacobian minus identity."""
    d = family.dimension
    Y = X
    M = np.broadcast_to(np.eye(d, dtype=complex), (len(X), d, d)).copy()
    ok = np.ones(len(X), dtype=bool)
    for _ in range(n):
        J, ok_j = maps.jacobian_batch(family, P, Y)
        Y, ok_y = maps.evaluate_batch(family, P, Y)
        ok &= ok_j & ok_y
        M = J @ M
    with np.errstate(all="ignore"):
        F = Y - X
    ok &= np.isfinite(F).all(axis=1) & np.isfinite(M).all(axis=(1, 2))
    return F, M - np.eye(d), ok


def periodicity_residual(family, params, x, n: int) -> np.ndarray:
    """``f^n(x) - x``; raises :class:`SingularEvaluation` on the singular locus."""
    if n < 1:
        raise ValueError("period must be >= 1")
    family = get_family(family)
    x = as_point(x, family.dimension)
    y = x
    for _ in range(n):
        y = maps.evaluate(family, params, y)
    return y - x


def cycle_jacobian(family, params, points) -> np.ndarray:
    """Product of per-step Jacobians around the cycle starting at ``points[0]``."""
    family = get_family(family)
    M = np.eye(family.dimension, dtype=complex)
    for p in points:
        M = maps.jacobian(family, params, p) @ M
    return M


def minimal_period(family, params, x, n: int, tol: float = MINIMAL_PERIOD_TOL) -> int:
    """Smallest divisor ``m`` of ``n`` with ``|f^m(x) - x| < tol``, else ``n``."""
    x = as_point(x)
    for m in range(1, n):
        if n % m:
            continue
        try:
            if np.max(np.abs(periodicity_residual(family, params, x, m))) < tol:
                return m
        except SingularEvaluation:
            continue
    return n


def _classify(mults) -> str:
    moduli = [abs(m) for m in mults]
    if any(r > 1 + STABILITY_MARGIN for r in moduli):
        return UNSTABLE
    if all(r < 1 - STABILITY_MARGIN for r in moduli):
        return STABLE
    return NEUTRAL


def classify_stability(orbit, family, params):
    """Return ``(stability, multipliers)`` for an orbit (or its list of points)."""
    points = orbit.points if isinstance(orbit, PeriodicOrbit) else np.asarray(orbit)
    mults = multipliers(cycle_jacobian(family, params, points))
    return _classify(mults), mults


def is_isolated(family, params, x, n: int, delta: float = 1e-4, tol: float = 1e-11) -> bool:
    """Whether the period-``n`` point ``x`` is isolated among period-``n`` points.

    A point with ``D(f^n) - I`` of full rank is isolated. Otherwise look for
    a period-``n`` point at distance ``delta`` along the null direction by
    Gauss-Newton on ``f^n(y) - y = 0`` together with ``v^H (y - x) = delta``;
    finding one means ``x`` sits on a continuum.
    """
    family = get_family(family)
    P = family.param_values(params)
    x = as_point(x, family.dimension)
    F, A, ok = cycle_batch(family, P, x[None, :], n)
    if not ok[0]:
        return True
    _, sv, vh = np.linalg.svd(A[0])
    if sv[-1] > 1e-7 * max(1.0, sv[0]):
        return True
    v = vh[-1].conj()
    y = x + delta * v
    for _ in range(30):
        F, A, ok = cycle_batch(family, P, y[None, :], n)
        if not ok[0]:
            return True
        G = np.concatenate([F[0], [np.vdot(v, y - x) - delta]])
        if np.max(np.abs(G)) < tol:
            return False
        JG = np.vstack([A[0], v.conj()[None, :]])
        y = y - np.linalg.pinv(JG, rcond=1e-13) @ G
        if not np.isfinite(y).all():
            return True
    return True


def _canonical_rotation(points: np.ndarray) -> np.ndarray:
    keys = [tuple(v for c in p for v in (round(c.real, 9), round(c.imag, 9))) for p in points]
    start = min(range(len(points)), key=lambda i: keys[i])
    return np.roll(points, -start, axis=0)


def build_orbit(family, params, x, n: int):
    """Orbit record for a period-``n`` root, or ``None`` if it fails the checks."""
    family = get_family(family)
    P = family.param_values(params)
    try:
        pts = [as_point(x, family.dimension)]
        for _ in range(n - 1):
            pts.append(maps.evaluate(family, P, pts[-1]))
        pts = np.array(pts)
        res = max(np.max(np.abs(periodicity_residual(family, P, p, n))) for p in pts)
        if not res < ORBIT_TOL or not np.isfinite(pts).all():
            return None
        if minimal_period(family, P, pts[0], n) != n:
            return None
        pts = _canonical_rotation(pts)
        stability, mults = classify_stability(pts, family, P)
        isolated = is_isolated(family, P, pts[0], n)
    except SingularEvaluation:
        return None
    return PeriodicOrbit(pts, n, family.param_dict(P), mults, stability, float(res), isolated)


def _solve_roots(family, P, n: int, seeds: np.ndarray, opts: NewtonOptions):
    def fun(X, rows):
        return cycle_batch(family, P, X, n)

    X, status, _ = newton_solve_batch(fun, seeds, opts)
    roots = X[status == CONVERGED]
    return polish_batch(fun, roots, steps=40)


def _lex_order(X: np.ndarray) -> np.ndarray:
    keys = []
    for j in reversed(range(X.shape[1])):
        keys += [X[:, j].imag, X[:, j].real]
    return np.lexsort(keys) if len(X) else np.arange(0)


def find_periodic_points(family, params, n: int, budget: int, seed: int,
                         opts: NewtonOptions = NewtonOptions()) -> List[PeriodicOrbit]:
    """Multistart Newton search for orbits of minimal period exactly ``n``."""
    if n < 1:
        raise ValueError("period must be >= 1")
    family = get_family(family)
    P = family.param_values(params)
    if budget <= 0:
        return []
    rng = np.random.default_rng(seed)
    seeds = maps.random_box(rng, budget, family.dimension)
    roots = _solve_roots(family, P, n, seeds, opts)
    roots = roots[_lex_order(roots)]

    orbits: List[PeriodicOrbit] = []
    known = np.zeros((0, family.dimension), dtype=complex)
    for x in roots:
        if len(known) and np.min(sup_norm(known - x)) < ORBIT_DEDUP:
            continue
        orbit = build_orbit(family, P, x, n)
        if orbit is None:
            continue
        orbits.append(orbit)
        known = np.concatenate([known, orbit.points])
    log.debug("%s period %d: %d roots, %d orbits", family.id, n, len(roots), len(orbits))
    return orbits


def _level_midpoint(family, p, q):
    """A point on the common level set of ``p`` and ``q``, between them."""
    h = maps.invariants(family, p)
    if family.id == "moebius2d":
        return maps.level_set_points(family, h, (p[0] + q[0]) / 2)[0]
    cands = maps.level_set_points(family, h, (p[2] + q[2]) / 2)
    target = (p + q) / 2
    return cands[np.argmin(sup_norm(cands - target))]


def detect_ivpp(family, params, orbits: List[PeriodicOrbit], n: int):
    """Raise :class:`IvppDetected` if two orbits share invariants and the
    level-set point between them is also period ``n``.

    Only meaningful where the map conserves its invariants, that is at
    zero parameters; elsewhere this does nothing.
    """
    family = get_family(family)
    if not orbits or family.invariant_count(params) == 0:
        return
    base = np.array([o.points[0] for o in orbits])
    h = maps.invariants_batch(family, base)
    for i in range(len(orbits)):
        for j in range(i + 1, len(orbits)):
            if np.max(np.abs(h[i] - h[j])) >= 1e-6:
                continue
            with np.errstate(all="ignore"):
                mid = _level_midpoint(family, base[i], base[j])
            if not np.isfinite(mid).all() or np.min(sup_norm(base[[i, j]] - mid)) < ORBIT_DEDUP:
                continue
            try:
                res = np.max(np.abs(periodicity_residual(family, params, mid, n)))
            except SingularEvaluation:
                continue
            if res < MINIMAL_PERIOD_TOL:
                raise IvppDetected(n, [base[i], base[j], mid])


def enumerate_dspp(family, params, n_max: int, budget_per_period: int, seed: int,
                   opts: NewtonOptions = NewtonOptions()) -> DsppCatalogue:
    """Search periods ``1..n_max`` and collect a deduplicated catalogue.

    Orbits on continua of periodic points (such as the line ``x = y = 0``
    of lv3d fixed points) go to ``continua`` instead of ``entries``. Raises :class:`IvppDetected` when some period fills a level set, which
    happens at zero parameters where the map is integrable.
    """
    family = get_family(family)
    P = family.param_values(params)
    cat = DsppCatalogue(params=family.param_dict(P))
    children = np.random.SeedSequence(seed).spawn(n_max)
    seen = np.zeros((0, family.dimension), dtype=complex)
    for n in range(1, n_max + 1):
        child = int(children[n - 1].generate_state(1)[0])
        found = find_periodic_points(family, P, n, budget_per_period, child, opts)
        detect_ivpp(family, P, found, n)
        kept, cont = [], []
        for orbit in found:
            if not orbit.isolated:
                cont.append(orbit)
                continue
            if len(seen) and np.min(sup_norm(seen[:, None, :] - orbit.points[None]).ravel()) < ORBIT_DEDUP:
                continue
            kept.append(orbit)
            seen = np.concatenate([seen, orbit.points])
        cat.entries[n] = kept
        cat.continua[n] = cont
        cat.budget_used[n] = budget_per_period
    return cat
