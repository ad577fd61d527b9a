"""The two parameterised rational map families.

``moebius2d``::

    (x, y) -> ( x (1 - y) / (1 - x - a),  y (1 - x) / (1 - y) )

``lv3d`` (a deformed three dimensional Lotka-Volterra map)::

    (x, y, z) -> ( x (1 - y + yz) / (1 + a - z + zx),
                   y (1 + b - z + zx) / (1 - x + xy),
                   z (1 - x + xy) / (1 - y + yz) )

With all parameters zero, ``moebius2d`` conserves ``r = xy`` and ``lv3d``
conserves ``r = xyz`` and ``s = (1-x)(1-y)(1-z)``.

Every map routine has a batched form working on arrays of shape ``(N, d)``;
the scalar forms raise :class:`SingularEvaluation` where the batched forms
return a mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Tuple, Union

import numpy as np

from .numerics import (CONVERGED, NewtonOptions, as_point, dedup_points,
                       newton_solve_batch, polish_batch, sup_norm)

SINGULAR_RTOL = 1e-14
PREIMAGE_TOL = 1e-9
PREIMAGE_DEDUP = 1e-8
SEED_BOX = 5.0

Params = Union[Mapping[str, complex], Sequence[complex], complex, None]


class SingularEvaluation(ArithmeticError):
    """A denominator of the map vanished; ``component`` is its 0-based index."""

    def __init__(self, component: int, x=None):
        super().__init__(f"denominator of component {component} vanishes")
        self.component = component
        self.x = x


@dataclass(frozen=True)
class MapFamily:
    id: str
    dimension: int
    param_names: Tuple[str, ...]
    # number of invariants when every parameter is zero
    zero_invariant_count: int

    def param_values(self, params: Params = None) -> Tuple[complex, ...]:
        """Normalise ``params`` to a tuple ordered like ``param_names``.

        Accepts a mapping by name (missing names default to 0), a sequence,
        a bare number for one-parameter families, or ``None`` for all zeros.
        """
        if params is None:
            return tuple(0j for _ in self.param_names)
        if isinstance(params, Mapping):
            unknown = set(params) - set(self.param_names)
            if unknown:
                raise ValueError(f"{self.id} has no parameter(s) {sorted(unknown)}")
            vals = tuple(complex(params.get(n, 0)) for n in self.param_names)
        elif np.isscalar(params):
            vals = (complex(params),)
        else:
            vals = tuple(complex(v) for v in params)
        if len(vals) != len(self.param_names):
            raise ValueError(f"{self.id} takes {len(self.param_names)} parameter(s)")
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("parameters must be finite")
        return vals

    def param_dict(self, params: Params = None) -> dict:
        return dict(zip(self.param_names, self.param_values(params)))

    def invariant_count(self, params: Params = None) -> int:
        vals = self.param_values(params)
        return self.zero_invariant_count if all(v == 0 for v in vals) else 0

    # (num, den) with f_i = num_i / den_i
    def parts(self, P, X):
        raise NotImplementedError

    def jacobian_batch(self, P, X):
        raise NotImplementedError

    def invariants_batch(self, X):
        raise NotImplementedError


class _Moebius2D(MapFamily):
    def parts(self, P, X):
        (a,) = P
        x, y = X[:, 0], X[:, 1]
        num = np.stack([x * (1 - y), y * (1 - x)], axis=1)
        den = np.stack([1 - x - a, 1 - y], axis=1)
        return num, den

    def jacobian_batch(self, P, X):
        (a,) = P
        x, y = X[:, 0], X[:, 1]
        d1 = 1 - x - a
        d2 = 1 - y
        J = np.empty((X.shape[0], 2, 2), dtype=complex)
        J[:, 0, 0] = (1 - y) * (1 - a) / d1 ** 2
        J[:, 0, 1] = -x / d1
        J[:, 1, 0] = -y / d2
        J[:, 1, 1] = (1 - x) / d2 ** 2
        return J

    def invariants_batch(self, X):
        return (X[:, 0] * X[:, 1])[:, None]


class _LotkaVolterra3D(MapFamily):
    @staticmethod
    def _abc(X):
        x, y, z = X[:, 0], X[:, 1], X[:, 2]
        return x, y, z, 1 - y + y * z, 1 - z + z * x, 1 - x + x * y

    def parts(self, P, X):
        a, b = P
        x, y, z, A, B, C = self._abc(X)
        num = np.stack([x * A, y * (B + b), z * C], axis=1)
        den = np.stack([B + a, C, A], axis=1)
        return num, den

    def jacobian_batch(self, P, X):
        a, b = P
        x, y, z, A, B, C = self._abc(X)
        Ba, Bb = B + a, B + b
        J = np.empty((X.shape[0], 3, 3), dtype=complex)
        J[:, 0, 0] = A / Ba - x * A * z / Ba ** 2
        J[:, 0, 1] = x * (z - 1) / Ba
        J[:, 0, 2] = x * y / Ba - x * A * (x - 1) / Ba ** 2
        J[:, 1, 0] = y * z / C - y * Bb * (y - 1) / C ** 2
        J[:, 1, 1] = Bb / C - y * Bb * x / C ** 2
        J[:, 1, 2] = y * (x - 1) / C
        J[:, 2, 0] = z * (y - 1) / A
        J[:, 2, 1] = z * x / A - z * C * (z - 1) / A ** 2
        J[:, 2, 2] = C / A - z * C * y / A ** 2
        return J

    def invariants_batch(self, X):
        x, y, z = X[:, 0], X[:, 1], X[:, 2]
        return np.stack([x * y * z, (1 - x) * (1 - y) * (1 - z)], axis=1)


MOEBIUS2D = _Moebius2D("moebius2d", 2, ("a",), 1)
LV3D = _LotkaVolterra3D("lv3d", 3, ("a", "b"), 2)
FAMILIES = {f.id: f for f in (MOEBIUS2D, LV3D)}


def get_family(family: Union[str, MapFamily]) -> MapFamily:
    if isinstance(family, MapFamily):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown map {family!r}; choose from {sorted(FAMILIES)}") from None


def _as_batch(family: MapFamily, X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != family.dimension:
        raise ValueError(f"{family.id} points have {family.dimension} coordinates")
    return X


def _singular_mask(den, X):
    scale = SINGULAR_RTOL * (1 + sup_norm(X))
    return np.abs(den) < scale[:, None]


def evaluate_batch(family, params, X):
    """Return ``(Y, ok)``; rows with a vanishing denominator have ``ok`` False."""
    family = get_family(family)
    P = family.param_values(params)
    X = _as_batch(family, X)
    num, den = family.parts(P, X)
    bad = _singular_mask(den, X).any(axis=1) | ~np.isfinite(X).all(axis=1)
    with np.errstate(all="ignore"):
        Y = num / np.where(bad[:, None], 1.0, den)
    return Y, ~bad


def evaluate(family, params, x) -> np.ndarray:
    family = get_family(family)
    P = family.param_values(params)
    X = _as_batch(family, as_point(x, family.dimension))
    num, den = family.parts(P, X)
    bad = _singular_mask(den, X)[0]
    if bad.any():
        raise SingularEvaluation(int(np.flatnonzero(bad)[0]), X[0])
    return num[0] / den[0]


def invariants(family, x) -> np.ndarray:
    """``(r,)`` for moebius2d and ``(r, s)`` for lv3d, by direct formula."""
    family = get_family(family)
    return family.invariants_batch(_as_batch(family, as_point(x, family.dimension)))[0]


def invariants_batch(family, X) -> np.ndarray:
    family = get_family(family)
    return family.invariants_batch(_as_batch(family, X))


def jacobian_batch(family, params, X):
    """Return ``(J, ok)`` with analytic partial derivatives."""
    family = get_family(family)
    P = family.param_values(params)
    X = _as_batch(family, X)
    _, den = family.parts(P, X)
    bad = _singular_mask(den, X).any(axis=1)
    with np.errstate(all="ignore"):
        J = family.jacobian_batch(P, np.where(bad[:, None], 0.0, X))
    return J, ~bad


def jacobian(family, params, x) -> np.ndarray:
    family = get_family(family)
    evaluate(family, params, x)
    P = family.param_values(params)
    return family.jacobian_batch(P, _as_batch(family, as_point(x, family.dimension)))[0]


def is_indeterminate(family, params, x, tol: float = 1e-10) -> bool:
    """True when some component of the map is of the form 0/0 at ``x``."""
    family = get_family(family)
    P = family.param_values(params)
    X = _as_batch(family, as_point(x, family.dimension))
    num, den = family.parts(P, X)
    scale = tol * (1 + sup_norm(X)[0])
    return bool(np.any((np.abs(num[0]) < scale) & (np.abs(den[0]) < scale)))


def random_box(rng: np.random.Generator, n: int, d: int, half_width: float = SEED_BOX):
    """``n`` points with real and imaginary parts uniform in ``[-w, w]``."""
    re = rng.uniform(-half_width, half_width, size=(n, d))
    im = rng.uniform(-half_width, half_width, size=(n, d))
    return re + 1j * im


def random_log_radius(rng: np.random.Generator, n: int, d: int, lo: float = 1e-2, hi: float = 1e3):
    """``n`` points whose coordinates have log-uniform modulus in ``[lo, hi]``
    and uniform argument."""
    r = np.exp(rng.uniform(np.log(lo), np.log(hi), size=(n, d)))
    return r * np.exp(1j * rng.uniform(0, 2 * np.pi, size=(n, d)))


def preimages_batch(family, params, Ys, budget: int, rng: np.random.Generator,
                    opts: NewtonOptions = NewtonOptions(residual_tolerance=1e-12),
                    wide_fraction: float = 0.0):
    """Preimages of several targets at once; returns one array per target.

    Each target gets ``budget`` random starts in the seed box, of which a
    ``wide_fraction`` share is drawn with log-uniform modulus instead (some
    preimages lie far outside the box). Results are deduplicated and
    sorted, but no completeness is claimed.
    """
    family = get_family(family)
    P = family.param_values(params)
    Ys = _as_batch(family, Ys) if len(Ys) else np.zeros((0, family.dimension), complex)
    d = family.dimension
    if budget <= 0 or len(Ys) == 0:
        return [np.zeros((0, d), dtype=complex) for _ in range(len(Ys))]
    seeds = random_box(rng, len(Ys) * budget, d)
    if wide_fraction > 0:
        wide = rng.random(len(seeds)) < wide_fraction
        seeds[wide] = random_log_radius(rng, int(wide.sum()), d)
    targets = np.repeat(Ys, budget, axis=0)

    def fun(X, rows):
        num, den = family.parts(P, X)
        bad = _singular_mask(den, X).any(axis=1)
        with np.errstate(all="ignore"):
            F = num / np.where(bad[:, None], 1.0, den) - targets[rows]
            J = family.jacobian_batch(P, np.where(bad[:, None], 0.0, X))
        return F, J, ~bad

    X, status, _ = newton_solve_batch(fun, seeds, opts)
    conv = np.flatnonzero(status == CONVERGED)
    X[conv] = polish_batch(lambda Z, rows: fun(Z, conv[rows]), X[conv], steps=6)
    Y, ok = evaluate_batch(family, P, X)
    good = ok & (status == CONVERGED)
    with np.errstate(invalid="ignore"):
        good &= sup_norm(Y - targets) < PREIMAGE_TOL
    out = []
    for k in range(len(Ys)):
        sl = slice(k * budget, (k + 1) * budget)
        cand = X[sl][good[sl]]
        out.append(dedup_points(cand, PREIMAGE_DEDUP))
    return out


def preimages(family, params, y, budget: int, seed: int) -> list:
    """Best-effort list of ``x`` with ``f(x) = y`` from ``budget`` random starts."""
    family = get_family(family)
    y = as_point(y, family.dimension)
    rng = np.random.default_rng(seed)
    found = preimages_batch(family, params, y[None, :], budget, rng)[0]
    return [p for p in found]


def level_set_points(family, h, t) -> np.ndarray:
    """Points with invariants ``h``, parametrised by ``t``.

    moebius2d: ``(t, r/t)``. lv3d: ``z = t`` and ``x, y`` the two roots of
    ``q^2 - (1 + r/t - s/(1-t)) q + r/t``; returns both roots per ``t`` so the
    result has shape ``(2 len(t), 3)`` ordered (root+, root-) per ``t``.
    """
    family = get_family(family)
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    h = np.asarray(h, dtype=complex).reshape(-1)
    if family.id == "moebius2d":
        return np.stack([t, h[0] / t], axis=1)
    r, s = h
    prod = r / t
    total = 1 + prod - s / (1 - t)
    disc = np.sqrt(total * total - 4 * prod)
    big = np.where(np.abs(total + disc) >= np.abs(total - disc), total + disc, total - disc) / 2
    with np.errstate(all="ignore"):
        small = np.where(big != 0, prod / big, total - big)
    first = np.stack([big, small, t], axis=1)
    second = np.stack([small, big, t], axis=1)
    return np.stack([first, second], axis=1).reshape(-1, 3)
