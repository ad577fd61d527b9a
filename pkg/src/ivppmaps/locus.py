"""Parameter-eliminated loci and continuation of periodic points.

Two polynomial loci are shipped: the moebius2d period-2 curve ``G2(x, y)``
and the lv3d period-2 surface ``K2(x, y, z)``, the latter as a term-list data
file. Both are sparse integer polynomials evaluated with exact (``fsum``)
summation of the terms, and residuals are reported relative to the sum of
the term moduli.

Continuation follows one point of a periodic orbit along a parameter
schedule: the previous point predicts, Newton on ``f^n(x) - x`` corrects.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Sequence, Tuple

import numpy as np

from .maps import get_family
from .numerics import (CONVERGED, DIVERGED, DIVERGENCE_RADIUS, NewtonOptions,
                       as_point, newton_solve_batch, polish_batch, sup_norm)
from .periodic import PeriodicOrbit, cycle_batch

REACHED_ZERO = "reached_zero"
ESCAPED = "escaped_to_infinity"
LOST = "lost"

PATH_TOL = 1e-8
MOVE_FACTOR = 10.0
MAX_BISECTIONS = 20


class TermFileError(ValueError):
    pass


@dataclass(frozen=True)
class TermPolynomial:
    variables: Tuple[str, ...]
    terms: Tuple[Tuple[int, Tuple[int, ...]], ...]

    def __post_init__(self):
        seen = set()
        for c, e in self.terms:
            if c == 0:
                raise ValueError("zero coefficient in term list")
            if len(e) != len(self.variables):
                raise ValueError(f"exponent tuple {e} does not match {len(self.variables)} variables")
            if any(k < 0 for k in e):
                raise ValueError(f"negative exponent in {e}")
            if e in seen:
                raise ValueError(f"duplicate exponent tuple {e}")
            seen.add(e)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    @classmethod
    def constant(cls, value: int, variables: Sequence[str]) -> "TermPolynomial":
        variables = tuple(variables)
        return cls(variables, ((int(value), (0,) * len(variables)),) if value else ())

    def __call__(self, x):
        return eval_term_polynomial(self, x)


def _body_digest(lines: List[str]) -> str:
    return hashlib.sha256("".join(l + "\n" for l in lines).encode()).hexdigest()


def parse_term_file(text: str) -> TermPolynomial:
    """Parse ``# vars: ... terms: N`` / ``# sha256: ...`` headed term lists.

    The declared term count and, when present, the checksum of the term
    lines are checked.
    """
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# vars:"):
        raise TermFileError("missing '# vars:' header")
    head = lines[0][len("# vars:"):]
    if "terms:" not in head:
        raise TermFileError("header lacks 'terms:' count")
    names, count = head.split("terms:")
    variables = tuple(names.split())
    try:
        count = int(count)
    except ValueError:
        raise TermFileError("term count is not an integer") from None
    digest = None
    for l in lines[1:]:
        if l.startswith("# sha256:"):
            digest = l.split(":", 1)[1].strip()
    body = [l for l in lines[1:] if l.strip() and not l.startswith("#")]
    terms = []
    for l in body:
        fields = l.split()
        if len(fields) != len(variables) + 1:
            raise TermFileError(f"bad term line {l!r}")
        try:
            c, *e = (int(v) for v in fields)
        except ValueError:
            raise TermFileError(f"bad term line {l!r}") from None
        terms.append((c, tuple(e)))
    if len(terms) != count:
        raise TermFileError(f"header declares {count} terms, found {len(terms)}")
    if digest is not None and _body_digest(body) != digest:
        raise TermFileError("term list checksum mismatch")
    try:
        return TermPolynomial(variables, tuple(terms))
    except ValueError as e:
        raise TermFileError(str(e)) from None


def format_term_file(poly: TermPolynomial, comments: Sequence[str] = ()) -> str:
    body = [" ".join(str(v) for v in (c,) + e) for c, e in poly.terms]
    out = [f"# vars: {' '.join(poly.variables)}  terms: {len(body)}",
           f"# sha256: {_body_digest(body)}"]
    out += ["# " + c for c in comments]
    return "\n".join(out + body) + "\n"


def _load(name: str) -> TermPolynomial:
    text = resources.files("ivppmaps.data").joinpath(name).read_text()
    return parse_term_file(text)


_CACHE: dict = {}


def load_k2() -> TermPolynomial:
    """The lv3d period-2 surface ``K2(x, y, z)``."""
    if "k2" not in _CACHE:
        _CACHE["k2"] = _load("k2.txt")
    return _CACHE["k2"]


def load_k2_listing() -> TermPolynomial:
    """A 239-term listing that is *not* the period-2 surface (negative control)."""
    if "listing" not in _CACHE:
        _CACHE["listing"] = _load("k2_listing.txt")
    return _CACHE["listing"]


# (2-x)^2 (1-y)^2 - 3 (1-x)(1-y)(2-x) + (1-x)^2 (2-x+xy), expanded
G2 = TermPolynomial(("x", "y"), (
    (1, (3, 1)), (-1, (3, 0)), (1, (2, 2)), (-1, (2, 1)), (2, (2, 0)),
    (-4, (1, 2)), (4, (0, 2)), (-2, (0, 1)),
))


def _term_values(poly: TermPolynomial, X: np.ndarray) -> np.ndarray:
    """Matrix of term values, shape ``(N, n_terms)``."""
    if not poly.terms:
        return np.zeros((len(X), 0), dtype=complex)
    coeffs = np.array([c for c, _ in poly.terms], dtype=float)
    E = np.array([e for _, e in poly.terms], dtype=int)
    out = np.broadcast_to(coeffs.astype(complex), (len(X), len(coeffs))).copy()
    for j in range(poly.dimension):
        top = int(E[:, j].max())
        powers = np.ones((len(X), top + 1), dtype=complex)
        for k in range(1, top + 1):
            powers[:, k] = powers[:, k - 1] * X[:, j]
        out *= powers[:, E[:, j]]
    return out


def eval_term_polynomial(poly: TermPolynomial, x) -> Tuple[complex, float]:
    """``(value, magnitude_scale)``: the exactly rounded sum of the terms and
    the sum of their moduli."""
    x = as_point(x, poly.dimension)
    t = _term_values(poly, x[None, :])[0]
    value = complex(math.fsum(t.real), math.fsum(t.imag))
    return value, math.fsum(np.abs(t))


def eval_term_polynomial_batch(poly: TermPolynomial, X) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised evaluation with plain summation, for grids and plots."""
    X = np.asarray(X, dtype=complex).reshape(-1, poly.dimension)
    t = _term_values(poly, X)
    return t.sum(axis=1), np.abs(t).sum(axis=1)


def relative_residual(poly: TermPolynomial, x) -> float:
    value, scale = eval_term_polynomial(poly, x)
    if scale == 0:
        return 0.0
    return abs(value) / scale


def eval_G2(x: complex, y: complex) -> Tuple[complex, float]:
    return eval_term_polynomial(G2, (x, y))


def surface_samples(poly: TermPolynomial, count: int, seed: int, box: float = 3.0) -> np.ndarray:
    """Real points of a 3-variable surface: random real ``(x, y)`` in the box
    and every real root ``z`` of the polynomial in ``z``."""
    if poly.dimension != 3:
        raise ValueError("surface samples need a 3-variable polynomial")
    rng = np.random.default_rng(seed)
    top = max(e[2] for _, e in poly.terms)
    out = []
    while len(out) < count:
        x, y = rng.uniform(-box, box, size=2)
        coeffs = np.zeros(top + 1)
        for c, (ex, ey, ez) in poly.terms:
            coeffs[top - ez] += c * x ** ex * y ** ey
        if not np.any(coeffs):
            continue
        for z in np.roots(np.trim_zeros(coeffs, "f")):
            if abs(z.imag) < 1e-9 and abs(z.real) <= box:
                out.append((x, y, z.real))
    return np.array(out[:count])


@dataclass
class ContinuationPath:
    family_id: str
    period: int
    schedule: list
    points: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    terminal_status: str = REACHED_ZERO
    # schedule steps that were not reached (path stopped early)
    remaining: int = 0

    def to_rows(self) -> List[list]:
        rows = []
        for i, (p, x, r) in enumerate(zip(self.schedule, self.points, self.residuals)):
            row = [i]
            for v in p.values():
                row += [v.real, v.imag]
            for c in x:
                row += [c.real, c.imag]
            rows.append(row + [r])
        return rows

    def header(self) -> List[str]:
        family = get_family(self.family_id)
        cols = ["step"]
        for n in family.param_names:
            cols += [f"{n}_re", f"{n}_im"]
        for v in "xyz"[:family.dimension]:
            cols += [f"{v}_re", f"{v}_im"]
        return cols + ["residual"]


def geometric_schedule(start, stop, steps: int) -> List[tuple]:
    """``steps`` parameter vectors from ``start`` to ``stop``, geometric in
    every component (a zero component stays zero)."""
    if steps < 2:
        raise ValueError("a schedule needs at least 2 steps")
    start = np.atleast_1d(np.asarray(start, dtype=complex))
    stop = np.atleast_1d(np.asarray(stop, dtype=complex))
    if start.shape != stop.shape:
        raise ValueError("start and stop have different lengths")
    k = np.arange(steps)[:, None] / (steps - 1)
    out = np.zeros((steps, len(start)), dtype=complex)
    for j, (s, e) in enumerate(zip(start, stop)):
        if s == 0 and e == 0:
            continue
        if s == 0 or e == 0:
            raise ValueError("a geometric schedule cannot start or end at 0")
        out[:, j] = s * (e / s) ** k[:, 0]
        out[-1, j] = e
    return [tuple(row) for row in out]


def _correct(family, P, n, x, opts):
    def fun(X, rows):
        return cycle_batch(family, P, X, n)

    X, status, _ = newton_solve_batch(fun, x[None, :], opts)
    if status[0] == CONVERGED:
        X = polish_batch(fun, X, steps=5)
    F, _, ok = fun(X, np.arange(1))
    res = float(sup_norm(F)[0]) if ok[0] else math.inf
    return X[0], int(status[0]), res


def continuation_trace(family, start: PeriodicOrbit, schedule,
                       opts: NewtonOptions = NewtonOptions(residual_tolerance=1e-11)) -> ContinuationPath:
    """Follow ``start.points[0]`` along ``schedule``.

    Each step is corrected by Newton from the previous point. A step is
    refused and the parameter step halved when the corrected point moves
    more than ``MOVE_FACTOR`` times the expected move, estimated from the
    previous step (or from the parameter step size on the first one). The
    path ends early with ``escaped_to_infinity`` once the point leaves the
    ball of radius ``DIVERGENCE_RADIUS``, or ``lost`` when Newton fails
    otherwise or the bisection limit is hit.
    """
    family = get_family(family)
    sched = [family.param_values(p) for p in schedule]
    if not sched:
        raise ValueError("empty schedule")
    n = start.minimal_period
    P0 = np.array(sched[0])
    x = np.asarray(start.points[0], dtype=complex)
    F, _, ok = cycle_batch(family, sched[0], x[None, :], n)
    res0 = float(sup_norm(F)[0]) if ok[0] else math.inf
    if not res0 < PATH_TOL:
        raise ValueError(f"start is not period {n} at the first schedule entry (residual {res0:.3g})")

    path = ContinuationPath(family.id, n, [family.param_dict(sched[0])], [x.copy()], [res0])
    last_move, last_dp = None, None
    p_cur = P0
    for i in range(1, len(sched)):
        target = np.array(sched[i])
        status = None
        p_from, x_from = p_cur, x
        halvings = 0
        while True:
            dp = float(np.max(np.abs(target - p_from)))
            x_new, code, res = _correct(family, tuple(target), n, x_from, opts)
            if dp == 0:
                expected = math.inf
            elif last_move is not None:
                expected = last_move * dp / last_dp
            else:
                expected = dp * (1 + float(np.max(np.abs(x_from))))
            escaped = code == DIVERGED or not np.isfinite(x_new).all() or np.max(np.abs(x_new)) > DIVERGENCE_RADIUS
            if escaped:
                status = ESCAPED
                break
            move = float(np.max(np.abs(x_new - x_from)))
            if code == CONVERGED and res < PATH_TOL and move <= MOVE_FACTOR * max(expected, PATH_TOL):
                if dp:
                    last_move, last_dp = move, dp
                p_from, x_from = target, x_new
                if np.array_equal(target, np.array(sched[i])):
                    break
                target = np.array(sched[i])
                halvings = 0
                continue
            if halvings == MAX_BISECTIONS or dp == 0:
                status = LOST
                break
            halvings += 1
            target = (p_from + target) / 2
        if status is not None:
            path.terminal_status = status
            path.remaining = len(sched) - i
            break
        x, p_cur = x_from, p_from
        path.schedule.append(family.param_dict(sched[i]))
        path.points.append(x.copy())
        path.residuals.append(res)
    return path


def locus_residual_report(path: ContinuationPath, locus: TermPolynomial) -> dict:
    if locus.dimension != get_family(path.family_id).dimension:
        raise ValueError("locus and path dimensions differ")
    per_step = [relative_residual(locus, x) for x in path.points]
    return {"max_relative_residual": max(per_step, default=0.0), "per_step": per_step}


def write_path_csv(path: ContinuationPath, fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(path.header())
    for row in path.to_rows():
        w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
