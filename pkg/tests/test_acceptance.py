"""Acceptance criteria, one check per criterion.

Each ``criterion_N`` returns ``(passed, detail)``. Under pytest every
criterion is its own test and a PASS/FAIL line per criterion is printed in
the terminal summary. Run directly (``python tests/test_acceptance.py``) to
get only the lines; the exit status is 3 when any criterion fails.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from ivppmaps import ivpp, julia, locus, maps, periodic
from ivppmaps.numerics import central_difference_jacobian, multipliers

RESULTS = {}


def _record(n, ok, detail, seconds):
    RESULTS[n] = (ok, detail, seconds)
    return ok


def criterion_1():
    """moebius2d IVPPs for n = 3, 4, 5."""
    parts, ok = [], True
    for n, seed in ((3, 11), (4, 12), (5, 13)):
        rep = ivpp.verify_ivpp_periodicity("moebius2d", n, 100, seed)
        good = rep.failures == 0 and rep.max_residual < 1e-8 and rep.min_divisor_residual > 1e-3
        ok &= good
        parts.append(f"n={n} max|f^n-x|={rep.max_residual:.1e} min divisor residual={rep.min_divisor_residual:.2g}")
    return ok, "; ".join(parts)


def criterion_2():
    """lv3d IVPPs for n = 2, 3, 4."""
    parts, ok = [], True
    for n, seed in ((2, 21), (3, 22), (4, 23)):
        rep = ivpp.verify_ivpp_periodicity("lv3d", n, 100, seed)
        good = rep.failures == 0 and rep.max_residual < 1e-8
        ok &= good
        parts.append(f"n={n} max={rep.max_residual:.1e}")
    return ok, "; ".join(parts)


def criterion_3():
    """Hyperbola constants against the gamma roots."""
    c3 = ivpp.hyperbola_branches(3)
    c4 = ivpp.hyperbola_branches(4)
    c5 = sorted(ivpp.hyperbola_branches(5))
    roots5 = sorted(np.roots([1, -10, 5]).real)
    errs = [abs(c - 3) for c in c3] + [abs(c - 1) for c in c4]
    errs += [abs(a - b) for a, b in zip(sorted(set(np.round(c5, 12))), roots5)]
    # the gammas vanish at r = -c
    errs += [abs(ivpp.gamma("moebius2d", 3, [-c])) for c in c3]
    errs += [abs(ivpp.gamma("moebius2d", 4, [-c])) for c in c4]
    errs += [abs(ivpp.gamma("moebius2d", 5, [-c])) / 50 for c in c5]
    worst = max(errs)
    return worst < 1e-12, f"max deviation {worst:.1e}"


def criterion_4():
    """All lv3d gammas vanish at (-1, -1); Lambda+- have invariants (-1, -1)
    and are indeterminate points of the map."""
    gam = [ivpp.gamma("lv3d", n, [-1, -1]) for n in (2, 3, 4)]
    ok_gamma = all(g == 0 for g in gam)
    detail = [f"gamma2..4(-1,-1)={[complex(g).real for g in gam]}"]
    ok = ok_gamma
    for sign, seed in (("plus", 41), ("minus", 42)):
        pts = ivpp.vsp_samples(sign, 100, seed)
        h = maps.invariants_batch("lv3d", pts)
        inv_err = float(np.max(np.abs(h + 1)))
        indet = sum(maps.is_indeterminate("lv3d", None, p) for p in pts)
        good = inv_err < 1e-12 and indet == len(pts)
        ok &= good
        detail.append(f"Lambda{'+' if sign == 'plus' else '-'}: invariant err {inv_err:.1e}, "
                      f"indeterminate {indet}/100")
    return ok, "; ".join(detail)


def _period2_orbits_lv3d(count, seed):
    """``count`` period-2 orbits off the invariant plane z = 0, each at its
    own random (a, b) in [-0.2, 0.2]^2."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a, b = rng.uniform(-0.2, 0.2, size=2)
        found = periodic.find_periodic_points("lv3d", (a, b), 2, 100, int(rng.integers(2 ** 32)))
        found = [o for o in found if np.max(np.abs(o.points[:, 2])) > 1e-12]
        if found:
            out.append(found[int(rng.integers(len(found)))])
    return out


def criterion_5():
    """K2 vanishes on period-2 orbits and not at generic points."""
    K = locus.load_k2()
    orbits = _period2_orbits_lv3d(50, 51)
    on = max(locus.relative_residual(K, p) for o in orbits for p in o.points)
    rng = np.random.default_rng(52)
    generic = maps.random_box(rng, 50, 3)
    off = [locus.relative_residual(K, p) for p in generic]
    below = sum(v <= 1e-3 for v in off)
    ok = on < 1e-6 and below == 0
    return ok, (f"on-orbit max {on:.1e} over {sum(len(o.points) for o in orbits)} points; "
                f"generic min {min(off):.1e}, median {np.median(off):.1e}, {below}/50 at or below 1e-3")


def criterion_6():
    """G2 vanishes on moebius2d period-2 orbits; G2(0, 0) = 0 exactly."""
    worst, count = 0.0, 0
    for a, seed in ((0.05, 61), (0.1, 62), (0.2, 63)):
        orbits = periodic.find_periodic_points("moebius2d", a, 2, 2000, seed)
        for o in orbits:
            for p in o.points:
                v, s = locus.eval_G2(*p)
                worst = max(worst, abs(v) / s)
                count += 1
    v0, _ = locus.eval_G2(0, 0)
    ok = count > 0 and worst < 1e-6 and v0 == 0
    return ok, f"{count} orbit points, max relative residual {worst:.1e}; G2(0,0)={v0.real}"


def criterion_7():
    """Julia clouds approach (1, 1) as a decreases."""
    meds = []
    for a in (0.2, 0.1, 0.05, 0.02):
        seed_orbit = julia.select_seed("moebius2d", a, 2, 200, 70)
        cloud = julia.backward_orbit("moebius2d", a, seed_orbit, 10, 20000, 71)
        meds.append(julia.accumulation_distance(cloud, [1, 1]))
    ok = all(x > y for x, y in zip(meds, meds[1:]))
    return ok, "medians " + " > ".join(f"{m:.4f}" for m in meds)


def criterion_8():
    """Continuation endpoints of the period-3 and period-2 paths."""
    sched = locus.geometric_schedule(0.3, 1e-4, 40)
    p3 = periodic.find_periodic_points("moebius2d", 0.3, 3, 500, 80)
    stable3 = [o for o in p3 if o.stability == periodic.STABLE]
    # no stable period-3 orbit exists at a = 0.3; follow the least unstable
    pick = stable3 or sorted(p3, key=lambda o: max(abs(m) for m in o.multipliers))
    path3 = locus.continuation_trace("moebius2d", pick[0], sched)
    x = path3.points[-1]
    gap = abs(x[0] * x[1] + 3)
    ok3 = path3.terminal_status == locus.REACHED_ZERO and gap < 1e-2

    p2 = periodic.find_periodic_points("moebius2d", 0.3, 2, 500, 81)
    stable2 = [o for o in p2 if o.stability == periodic.STABLE]
    pick2 = stable2 or p2
    path2 = locus.continuation_trace("moebius2d", pick2[0], sched)
    ok2 = path2.terminal_status == locus.ESCAPED
    y = path2.points[-1]
    detail = (f"period 3 ({'stable' if stable3 else 'no stable orbit; least unstable, |lambda|max='}"
              f"{'' if stable3 else format(max(abs(m) for m in pick[0].multipliers), '.3g')}): "
              f"{path3.terminal_status}, |xy+3|={gap:.1e}; "
              f"period 2 ({'stable' if stable2 else 'no stable orbit; only orbit'}): "
              f"{path2.terminal_status} at ({y[0].real:.4f}, {y[1].real:.4f})")
    return ok3 and ok2, detail


def criterion_9():
    """Isolated orbits at a = 0.2; IvppDetected at a = 0 for period 3."""
    cat = periodic.enumerate_dspp("moebius2d", 0.2, 4, 300, 90)
    orbits = cat.orbits()
    iso = all(o.isolated for o in orbits) and not any(cat.continua.values())
    try:
        periodic.enumerate_dspp("moebius2d", 0.0, 3, 300, 91)
        raised = False
    except periodic.IvppDetected as e:
        raised = e.period == 3
    return iso and raised, f"{len(orbits)} isolated orbits at a=0.2; IvppDetected at a=0: {raised}"


def criterion_10():
    """Analytic Jacobians against central differences; multiplier identities."""
    rng = np.random.default_rng(100)
    worst_j, worst_m = 0.0, 0.0
    for fam, params in (("moebius2d", (0.13,)), ("lv3d", (0.07, -0.11))):
        d = maps.get_family(fam).dimension
        pts = maps.random_box(rng, 50, d, 2.0)
        for x in pts:
            J = maps.jacobian(fam, params, x)
            Jn = central_difference_jacobian(lambda v: maps.evaluate(fam, params, v), x)
            worst_j = max(worst_j, float(np.max(np.abs(J - Jn)) / max(1.0, np.max(np.abs(J)))))
            m = multipliers(J)
            scale = max(1.0, float(np.max(np.abs(J))) ** d)
            worst_m = max(worst_m, abs(sum(m) - np.trace(J)) / max(1.0, abs(np.trace(J))),
                          abs(np.prod(m) - np.linalg.det(J)) / scale)
    return worst_j < 1e-6 and worst_m < 1e-10, f"Jacobian rel err {worst_j:.1e}; trace/det err {worst_m:.1e}"


CRITERIA = {
    1: ("IVPP catalogue (moebius2d)", criterion_1),
    2: ("IVPP catalogue (lv3d)", criterion_2),
    3: ("hyperbola/gamma cross-check", criterion_3),
    4: ("VSP intersection", criterion_4),
    5: ("period-2 surface K2", criterion_5),
    6: ("G2 locus", criterion_6),
    7: ("Julia transition trend", criterion_7),
    8: ("continuation endpoints", criterion_8),
    9: ("discreteness vs IVPP", criterion_9),
    10: ("numerics hygiene", criterion_10),
}


def run(n):
    t = time.perf_counter()
    ok, detail = CRITERIA[n][1]()
    _record(n, ok, detail, time.perf_counter() - t)
    return ok, detail


def format_line(n) -> str:
    ok, detail, sec = RESULTS[n]
    return f"criterion {n:2d} {'PASS' if ok else 'FAIL'} [{CRITERIA[n][0]}] ({sec:.1f}s) {detail}"


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, detail = run(n)
    assert ok, f"criterion {n}: {detail}"


if __name__ == "__main__":
    failed = 0
    for n in sorted(CRITERIA):
        ok, _ = run(n)
        failed += not ok
        print(format_line(n), flush=True)
    sys.exit(3 if failed else 0)
