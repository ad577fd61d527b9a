"""Invariant varieties of periodic points at zero parameters.

At ``a = 0`` every period-``k`` point of ``moebius2d`` lies on a curve
``gamma_k(r) = 0`` and every point of that curve is period ``k``; the same
holds for ``lv3d`` at ``a = b = 0`` with ``gamma_k(r, s) = 0``. The
catalogue below holds the closed forms for the periods available in closed
form; nothing here generates new ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from . import maps
from .maps import SingularEvaluation, get_family
from .periodic import periodicity_residual


class UnknownPeriod(KeyError):
    pass


class DomainError(ValueError):
    pass


class DegenerateLevelSet(ValueError):
    pass


def _cubic_lv(h):
    r, s = h
    return (s - r) ** 2 + (r + 1) * (s + 1)


def _quartic_lv(h):
    r, s = h
    return (s - r) ** 3 + s * (r + 1) ** 3


GAMMA: Dict[str, Dict[int, Callable]] = {
    "moebius2d": {
        3: lambda h: h[0] + 3,
        4: lambda h: h[0] + 1,
        5: lambda h: h[0] ** 2 + 10 * h[0] + 5,
    },
    "lv3d": {
        2: lambda h: h[1] + 1,
        3: _cubic_lv,
        4: _quartic_lv,
    },
}


@dataclass(frozen=True)
class GammaEntry:
    family_id: str
    period: int

    def __call__(self, h) -> complex:
        return gamma(self.family_id, self.period, h)


def catalogue(family_id: str) -> Tuple[GammaEntry, ...]:
    fam = get_family(family_id).id
    return tuple(GammaEntry(fam, k) for k in sorted(GAMMA[fam]))


def gamma(family_id, period: int, h) -> complex:
    fam = get_family(family_id).id
    try:
        poly = GAMMA[fam][period]
    except KeyError:
        raise UnknownPeriod(f"no closed-form IVPP of period {period} for {fam}") from None
    h = np.asarray(h, dtype=complex).reshape(-1)
    return complex(poly(h))


def hyperbola_branches(n: int, coprime_only: bool = True) -> list:
    """Constants ``c_m = tan^2(pi m / n)`` of the hyperbolas ``xy + c_m = 0``.

    With ``coprime_only`` the branches with ``gcd(m, n) > 1`` are left out:
    they coincide with the hyperbolas of period ``n / gcd(m, n)``.
    """
    if n < 3:
        raise DomainError("hyperbola branches need n >= 3")
    return [math.tan(math.pi * m / n) ** 2 for m in range(1, n)
            if not coprime_only or math.gcd(m, n) == 1]


def continuous_ivpp_constant(t: float) -> float:
    """``tan^2(pi / t)``, the hyperbola constant at real period ``t > 2``."""
    if not t > 2:
        raise DomainError("continuous IVPP constant needs t > 2")
    if math.isinf(t):
        return 0.0
    return math.tan(math.pi / t) ** 2


def invariant_roots(family_id, period: int):
    """Invariant values on the period-``period`` IVPP.

    moebius2d: the roots ``r`` of ``gamma``. lv3d: a function drawing a
    random ``r`` and returning the ``s`` values solving ``gamma(r, s) = 0``.
    """
    fam = get_family(family_id).id
    gamma(fam, period, np.zeros(maps.FAMILIES[fam].zero_invariant_count))
    if fam == "moebius2d":
        coeffs = {3: [1, 3], 4: [1, 1], 5: [1, 10, 5]}[period]
        return [complex(r) for r in np.roots(coeffs)]

    def s_roots(r):
        if period == 2:
            coeffs = [1, 1]
        elif period == 3:
            # (s - r)^2 + (r + 1)(s + 1)
            coeffs = [1, -2 * r + r + 1, r * r + r + 1]
        else:
            # (s - r)^3 + s (r + 1)^3
            coeffs = [1, -3 * r, 3 * r * r + (r + 1) ** 3, -r ** 3]
        return [complex(s) for s in np.roots(coeffs)]

    return s_roots


def sample_level_set(family_id, h, count: int, seed: int, max_condition: float = 1e8):
    """``count`` random points whose invariants equal ``h``.

    moebius2d: ``(t, r/t)`` for random nonzero complex ``t``. lv3d:
    ``z = t`` random and ``(x, y)`` the roots of the quadratic fixed by
    ``r`` and ``s``; one of the two roots is picked at random.
    """
    family = get_family(family_id)
    h = np.asarray(h, dtype=complex).reshape(-1)
    if count <= 0:
        return []
    rng = np.random.default_rng(seed)
    if family.id == "lv3d" and h[0] == 0:
        raise DegenerateLevelSet("lv3d level sets need r != 0")
    out = []
    for _ in range(10 * count):
        t = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if abs(t) < 0.1 or abs(t - 1) < 0.1:
            continue
        pts = maps.level_set_points(family, h, t)
        p = pts[rng.integers(len(pts))]
        if not np.isfinite(p).all() or np.max(np.abs(p)) > max_condition:
            continue
        if np.max(np.abs(maps.invariants(family, p) - h)) > 1e-10 * (1 + np.max(np.abs(h))):
            continue
        out.append(p)
        if len(out) == count:
            return out
    raise DegenerateLevelSet("could not draw enough well-conditioned level-set points")


def ivpp_membership(family_id, period: int, x, tol: float = 1e-8) -> bool:
    family = get_family(family_id)
    return abs(gamma(family, period, maps.invariants(family, x))) < tol


@dataclass(frozen=True)
class VspCurve:
    """One of the curves ``Lambda+`` / ``Lambda-`` where ``(r, s) = (-1, -1)``."""

    sign: str

    def __post_init__(self):
        if self.sign not in ("plus", "minus"):
            raise ValueError("sign must be 'plus' or 'minus'")

    def point(self, t) -> np.ndarray:
        return vsp_point(self.sign, t)

    def points(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=complex)
        a, b = 1 - 1 / t, 1 / (1 - t)
        first, second = (a, b) if self.sign == "plus" else (b, a)
        return np.stack([first, second, t], axis=-1)


LAMBDA_PLUS = VspCurve("plus")
LAMBDA_MINUS = VspCurve("minus")


def vsp_point(sign: str, t) -> np.ndarray:
    t = complex(t)
    if t == 0 or t == 1:
        raise DomainError("the VSP curves have poles at t = 0 and t = 1")
    a, b = 1 - 1 / t, 1 / (1 - t)
    if sign == "plus":
        return np.array([a, b, t])
    if sign == "minus":
        return np.array([b, a, t])
    raise ValueError("sign must be 'plus' or 'minus'")


@dataclass
class IvppReport:
    family_id: str
    period: int
    samples: int
    max_residual: float
    failures: int
    # smallest residual over proper divisor periods; stays away from 0
    min_divisor_residual: float

    def to_dict(self) -> dict:
        return {
            "map": self.family_id,
            "period": self.period,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "failures": self.failures,
            "min_divisor_residual": self.min_divisor_residual,
        }


def _draw_ivpp_invariants(family, period, rng):
    if family.id == "moebius2d":
        roots = invariant_roots(family, period)
        return np.array([roots[rng.integers(len(roots))]])
    s_roots = invariant_roots(family, period)
    r = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
    ss = s_roots(r)
    return np.array([r, ss[rng.integers(len(ss))]])


def verify_ivpp_periodicity(family_id, period: int, samples: int, seed: int,
                            tol: float = 1e-8, h=None) -> IvppReport:
    """Sample points on the IVPP (or on the level set ``h`` if given) and
    report how far ``f^period`` is from the identity there.

    Points whose residual is at least ``tol`` count as failures.
    """
    family = get_family(family_id)
    gamma(family, period, np.zeros(family.zero_invariant_count))
    rng = np.random.default_rng(seed)
    worst, failures, divisor_min = 0.0, 0, math.inf
    for k in range(samples):
        hk = np.asarray(h, dtype=complex) if h is not None else _draw_ivpp_invariants(family, period, rng)
        child = int(rng.integers(2 ** 32))
        try:
            (p,) = sample_level_set(family, hk, 1, child)
            res = float(np.max(np.abs(periodicity_residual(family, None, p, period))))
            for m in range(1, period):
                if period % m == 0:
                    rm = float(np.max(np.abs(periodicity_residual(family, None, p, m))))
                    divisor_min = min(divisor_min, rm)
        except (SingularEvaluation, DegenerateLevelSet):
            res = math.inf
        worst = max(worst, res)
        failures += not res < tol
    return IvppReport(family.id, period, samples, worst, failures, divisor_min)


def vsp_samples(sign: str, count: int, seed: int) -> np.ndarray:
    """``count`` points of ``Lambda+``/``Lambda-`` at random complex ``t``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        t = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        if abs(t) < 0.05 or abs(t - 1) < 0.05:
            continue
        out.append(vsp_point(sign, t))
    return np.array(out)


def gamma_on_grid(family_id, period: int, r_grid, s_grid=None) -> np.ndarray:
    """Vectorised ``gamma`` over a grid (``(r, s)`` for lv3d, ``r`` otherwise)."""
    fam = get_family(family_id).id
    poly = GAMMA[fam].get(period)
    if poly is None:
        raise UnknownPeriod(f"no closed-form IVPP of period {period} for {fam}")
    if fam == "moebius2d":
        return poly([np.asarray(r_grid)])
    return poly([np.asarray(r_grid), np.asarray(s_grid)])

