"""Complex vector helpers, damped Newton solving and small-matrix eigenvalues.

The Newton solver works on stacks of independent problems at once: every
row of ``X`` is its own iterate with its own damping factor, so multistart
searches cost one vectorised pass instead of a Python loop over seeds.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

CONDITION_LIMIT = 1e14
DIVERGENCE_RADIUS = 1e8

# status codes of the batched solver
CONVERGED = 0
MAX_ITERATIONS = 1
SINGULAR_JACOBIAN = 2
DIVERGED = 3
SINGULAR_EVALUATION = 4

REASONS = {
    MAX_ITERATIONS: "max-iterations",
    SINGULAR_JACOBIAN: "singular-Jacobian",
    DIVERGED: "diverged",
    SINGULAR_EVALUATION: "singular-evaluation",
}


@dataclass(frozen=True)
class NewtonOptions:
    max_iterations: int = 64
    residual_tolerance: float = 1e-10
    damping_floor: float = 1.0 / 64
    step_cap: float = 10.0

    def __post_init__(self):
        if self.residual_tolerance <= 0:
            raise ValueError("residual_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0 < self.damping_floor <= 1:
            raise ValueError("damping_floor must lie in (0, 1]")
        if self.step_cap <= 0:
            raise ValueError("step_cap must be positive")


class NewtonFailure(Exception):
    """Newton did not reach the residual tolerance.

    ``reason`` is one of ``max-iterations``, ``singular-Jacobian``,
    ``diverged`` or ``singular-evaluation``; ``x`` is the last iterate.
    """

    def __init__(self, reason: str, x: np.ndarray):
        super().__init__(reason)
        self.reason = reason
        self.x = x


# fun(X, rows) -> (F, J, ok): F (N, d), J (N, d, d), ok (N,) bool; rows index
# the original batch so per-row data (targets, parameters) can follow a row
BatchResidual = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


def as_point(x, d: Optional[int] = None) -> np.ndarray:
    p = np.asarray(x, dtype=complex).reshape(-1)
    if d is not None and p.shape[0] != d:
        raise ValueError(f"expected {d} coordinates, got {p.shape[0]}")
    return p


def sup_norm(v: np.ndarray) -> np.ndarray:
    """inf-norm over the last axis."""
    return np.max(np.abs(v), axis=-1)


def _row_norms(F: np.ndarray, ok: np.ndarray) -> np.ndarray:
    out = np.full(F.shape[0], np.inf)
    if ok.any():
        with np.errstate(invalid="ignore"):
            out[ok] = sup_norm(F[ok])
    out[~np.isfinite(out)] = np.inf
    return out


def newton_solve_batch(fun: BatchResidual, X0, opts: NewtonOptions = NewtonOptions()):
    """Damped Newton on a stack of square systems.

    Returns ``(X, status, residual)``; ``status`` holds one of the module
    status codes per row.
    """
    X = np.array(X0, dtype=complex, copy=True)
    if X.ndim != 2:
        raise ValueError("X0 must have shape (N, d)")
    N, d = X.shape
    status = np.full(N, -1)
    residual = np.full(N, np.inf)
    if N == 0:
        return X, status, residual

    diverged = ~np.isfinite(X).all(axis=1) | (sup_norm(X) > DIVERGENCE_RADIUS)
    status[diverged] = DIVERGED

    active = np.flatnonzero(status < 0)
    F = np.zeros((N, d), dtype=complex)
    J = np.zeros((N, d, d), dtype=complex)
    if active.size:
        Fa, Ja, ok = fun(X[active], active)
        F[active], J[active] = Fa, Ja
        residual[active] = _row_norms(Fa, ok)
        status[active[~ok]] = SINGULAR_EVALUATION

    for iteration in range(opts.max_iterations + 1):
        active = np.flatnonzero(status < 0)
        done = residual[active] < opts.residual_tolerance
        status[active[done]] = CONVERGED
        active = active[~done]
        if active.size == 0:
            break
        if iteration == opts.max_iterations:
            status[active] = MAX_ITERATIONS
            break

        Ja = J[active]
        with np.errstate(all="ignore"):
            cond = np.linalg.cond(Ja)
        singular = ~np.isfinite(cond) | (cond > CONDITION_LIMIT)
        status[active[singular]] = SINGULAR_JACOBIAN
        active = active[~singular]
        if active.size == 0:
            continue

        step = np.linalg.solve(J[active], -F[active][..., None])[..., 0]
        size = sup_norm(step)
        scale = np.minimum(1.0, opts.step_cap / np.maximum(size, 1e-300))
        step *= scale[:, None]

        lam = np.ones(active.size)
        pending = np.ones(active.size, dtype=bool)
        while pending.any():
            rows = active[pending]
            trial = X[rows] + lam[pending, None] * step[pending]
            Ft, Jt, ok = fun(trial, rows)
            rt = _row_norms(Ft, ok)
            at_floor = lam[pending] / 2 < opts.damping_floor
            accept = ok & ((rt < residual[rows]) | at_floor)
            acc_rows = rows[accept]
            X[acc_rows], F[acc_rows], J[acc_rows] = trial[accept], Ft[accept], Jt[accept]
            residual[acc_rows] = rt[accept]
            dead = ~ok & at_floor
            status[rows[dead]] = SINGULAR_EVALUATION
            idx = np.flatnonzero(pending)
            pending[idx[accept | dead]] = False
            lam[idx[~(accept | dead)]] /= 2

        moved = active[status[active] < 0]
        escaped = sup_norm(X[moved]) > DIVERGENCE_RADIUS
        status[moved[escaped]] = DIVERGED

    return X, status, residual


def newton_solve(fun: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]], x0,
                 opts: NewtonOptions = NewtonOptions()) -> np.ndarray:
    """Solve ``F(x) = 0`` for a single start point.

    ``fun`` returns ``(F, J)`` and may raise an ``ArithmeticError`` (such as
    a singular map evaluation) to signal that ``x`` is outside its domain.
    Raises :class:`NewtonFailure` when the tolerance is not reached.
    """

    def batch(X, rows):
        F = np.zeros(X.shape, dtype=complex)
        J = np.zeros(X.shape + (X.shape[1],), dtype=complex)
        ok = np.ones(X.shape[0], dtype=bool)
        for i, x in enumerate(X):
            try:
                Fi, Ji = fun(x)
            except ArithmeticError:
                ok[i] = False
                continue
            F[i], J[i] = Fi, Ji
        return F, J, ok

    x0 = as_point(x0)
    X, status, _ = newton_solve_batch(batch, x0[None, :], opts)
    if status[0] != CONVERGED:
        raise NewtonFailure(REASONS[int(status[0])], X[0])
    return X[0]


def _sorted_roots(roots):
    # descending modulus; ties broken by real then imaginary part
    return sorted(roots, key=lambda z: (-abs(z), -z.real, -z.imag))


def _cbrt(w: complex) -> complex:
    if w == 0:
        return 0j
    return cmath.exp(cmath.log(w) / 3)


def _cubic_roots(c2: complex, c1: complex, c0: complex):
    """Roots of t^3 + c2 t^2 + c1 t + c0 by Cardano with polishing."""
    shift = -c2 / 3
    p = c1 - c2 * c2 / 3
    q = 2 * c2 ** 3 / 27 - c2 * c1 / 3 + c0
    disc = cmath.sqrt(q * q / 4 + p ** 3 / 27)
    # pick the larger branch to avoid cancellation
    w = -q / 2 + disc if abs(-q / 2 + disc) >= abs(-q / 2 - disc) else -q / 2 - disc
    u = _cbrt(w)
    omega = complex(-0.5, 3 ** 0.5 / 2)
    roots = []
    for k in range(3):
        uk = u * omega ** k
        vk = -p / (3 * uk) if uk != 0 else 0j
        roots.append(shift + uk + vk)

    def poly(t):
        return ((t + c2) * t + c1) * t + c0

    def dpoly(t):
        return (3 * t + 2 * c2) * t + c1

    polished = []
    for t in roots:
        for _ in range(3):
            dp = dpoly(t)
            if dp == 0:
                break
            nt = t - poly(t) / dp
            if abs(poly(nt)) >= abs(poly(t)):
                break
            t = nt
        polished.append(t)
    return polished


def multipliers(J) -> list:
    """Eigenvalues of a 2x2 or 3x3 complex matrix, largest modulus first.

    Uses the characteristic polynomial in closed form; no iterative
    eigensolver is involved.
    """
    J = np.asarray(J, dtype=complex)
    if J.shape not in ((2, 2), (3, 3)):
        raise ValueError(f"multipliers needs a 2x2 or 3x3 matrix, got shape {J.shape}")
    # scale to unit size so the closed forms neither underflow nor overflow
    # (power-of-two scaling, so it is exact)
    big = float(np.max(np.abs(J)))
    e = math.frexp(big)[1] if 0 < big < math.inf else 0
    unit = np.ldexp(J.real, -e) + 1j * np.ldexp(J.imag, -e)
    return [complex(math.ldexp(m.real, e), math.ldexp(m.imag, e)) for m in _unit_multipliers(unit)]


def _unit_multipliers(J) -> list:
    if J.shape == (2, 2):
        tr = J[0, 0] + J[1, 1]
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        disc = cmath.sqrt(tr * tr / 4 - det)
        big = tr / 2 + disc if abs(tr / 2 + disc) >= abs(tr / 2 - disc) else tr / 2 - disc
        small = det / big if big != 0 else tr - big
        return _sorted_roots([complex(big), complex(small)])
    tr = J[0, 0] + J[1, 1] + J[2, 2]
    minors = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
              + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
              + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    det = (J[0, 0] * (J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
           - J[0, 1] * (J[1, 0] * J[2, 2] - J[1, 2] * J[2, 0])
           + J[0, 2] * (J[1, 0] * J[2, 1] - J[1, 1] * J[2, 0]))
    return _sorted_roots([complex(r) for r in _cubic_roots(-tr, minors, -det)])


def dedup_points(points, radius: float) -> np.ndarray:
    """Drop points within ``radius`` (inf-norm) of an earlier kept point.

    Candidates are first sorted lexicographically by the real then imaginary
    part of each coordinate, so the result does not depend on input order.
    """
    P = np.asarray(points, dtype=complex)
    if P.size == 0:
        return P.reshape(0, P.shape[-1] if P.ndim == 2 else 0)
    keys = []
    for j in reversed(range(P.shape[1])):
        keys += [P[:, j].imag, P[:, j].real]
    P = P[np.lexsort(keys)]
    emb = np.concatenate([P.real, P.imag], axis=1)
    tree = cKDTree(emb)
    keep = np.ones(len(P), dtype=bool)
    for i in range(len(P)):
        if not keep[i]:
            continue
        for j in tree.query_ball_point(emb[i], radius, p=np.inf):
            if j > i:
                keep[j] = False
    return P[keep]


def central_difference_jacobian(fun: Callable[[np.ndarray], np.ndarray], x, h: float = 1e-6):
    """Complex-analytic Jacobian by central differences along real axes."""
    x = as_point(x)
    cols = []
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h))
    return np.stack(cols, axis=1)


def polish_batch(fun: BatchResidual, X, steps: int = 3):
    """Extra undamped Newton steps, each kept only if it lowers the residual.

    Uses a pseudo-inverse so rank-deficient Jacobians (points on a continuum
    of solutions) still get a minimum-norm correction.
    """
    X = np.array(X, dtype=complex, copy=True)
    if len(X) == 0:
        return X
    rows = np.arange(len(X))
    F, J, ok = fun(X, rows)
    res = _row_norms(F, ok)
    for _ in range(steps):
        live = np.flatnonzero(np.isfinite(res) & (res > 0))
        if live.size == 0:
            break
        with np.errstate(all="ignore"):
            step = -(np.linalg.pinv(J[live], rcond=1e-13) @ F[live][..., None])[..., 0]
        trial = X[live] + step
        Ft, Jt, okt = fun(trial, live)
        rt = _row_norms(Ft, okt)
        better = rt < res[live]
        idx = live[better]
        X[idx], F[idx], J[idx], res[idx] = trial[better], Ft[better], Jt[better], rt[better]
        if not better.any():
            break
    return X


def merge_new_points(existing, new, radius: float) -> np.ndarray:
    """Indices of ``new`` rows that are farther than ``radius`` (inf-norm)
    from every ``existing`` row and from every earlier kept ``new`` row, in
    lexicographic order of the kept points."""
    new = np.asarray(new, dtype=complex)
    if len(new) == 0:
        return np.zeros(0, dtype=int)
    keys = []
    for j in reversed(range(new.shape[1])):
        keys += [new[:, j].imag, new[:, j].real]
    order = np.lexsort(keys)
    emb_new = np.concatenate([new.real, new.imag], axis=1)
    keep = np.ones(len(new), dtype=bool)
    existing = np.asarray(existing, dtype=complex)
    if len(existing):
        tree = cKDTree(np.concatenate([existing.real, existing.imag], axis=1))
        dist, _ = tree.query(emb_new, p=np.inf)
        keep &= dist > radius
    tree_new = cKDTree(emb_new)
    for i in order:
        if not keep[i]:
            continue
        for j in tree_new.query_ball_point(emb_new[i], radius, p=np.inf):
            if j != i:
                keep[j] = False
    return np.array([i for i in order if keep[i]], dtype=int)
