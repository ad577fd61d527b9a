import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ivppmaps import maps
from ivppmaps.numerics import central_difference_jacobian

coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, coord, coord)


def test_moebius_hand_values():
    # (x, y) = (2, 3), a = 0.5: (2 (1-3) / (1-2-0.5), 3 (1-2) / (1-3))
    y = maps.evaluate("moebius2d", {"a": 0.5}, [2, 3])
    assert np.allclose(y, [-4 / -1.5, 1.5])


def test_lv3d_hand_values():
    x, y, z, a, b = 0.3, -0.4, 1.7, 0.1, -0.2
    A, B, C = 1 - y + y * z, 1 - z + z * x, 1 - x + x * y
    want = [x * A / (B + a), y * (B + b) / C, z * C / A]
    assert np.allclose(maps.evaluate("lv3d", (a, b), [x, y, z]), want)


def test_singular_evaluation_reports_component():
    with pytest.raises(maps.SingularEvaluation) as e:
        maps.evaluate("moebius2d", 0.0, [0.5, 1.0])
    assert e.value.component == 1
    Y, ok = maps.evaluate_batch("moebius2d", 0.0, [[0.5, 1.0], [0.5, 0.5]])
    assert ok.tolist() == [False, True]


def test_param_normalisation():
    fam = maps.LV3D
    assert fam.param_values({"a": 1}) == (1, 0)
    assert fam.param_values(None) == (0, 0)
    with pytest.raises(ValueError):
        fam.param_values({"c": 1})
    with pytest.raises(ValueError):
        fam.param_values((1, 2, 3))
    with pytest.raises(ValueError):
        maps.MOEBIUS2D.param_values(float("nan"))
    with pytest.raises(ValueError):
        maps.get_family("nosuch")


def test_invariant_count():
    assert maps.MOEBIUS2D.invariant_count(0) == 1
    assert maps.MOEBIUS2D.invariant_count(0.1) == 0
    assert maps.LV3D.invariant_count((0, 0)) == 2
    assert maps.LV3D.invariant_count((0, 0.1)) == 0


@given(cplx, cplx)
@settings(max_examples=300, deadline=None)
def test_moebius_conserves_r_at_zero(x, y):
    p = np.array([x, y])
    try:
        q = maps.evaluate("moebius2d", 0, p)
    except maps.SingularEvaluation:
        return
    assume(np.all(np.isfinite(q)) and np.max(np.abs(q)) < 1e6)
    h0, h1 = maps.invariants("moebius2d", p), maps.invariants("moebius2d", q)
    # rounding in f is relative to the size of the quotients
    scale = 1 + np.max(np.abs(q)) * np.max(np.abs(p)) * 1e3
    assert np.all(np.abs(h1 - h0) <= 1e-9 * (1 + np.abs(h0)) * scale)


@given(cplx, cplx, cplx)
@settings(max_examples=300, deadline=None)
def test_lv3d_conserves_r_and_s_at_zero(x, y, z):
    p = np.array([x, y, z])
    try:
        q = maps.evaluate("lv3d", None, p)
    except maps.SingularEvaluation:
        return
    _, den = maps.LV3D.parts((0, 0), p[None, :])
    assume(np.min(np.abs(den)) > 1e-3 and np.max(np.abs(q)) < 1e3)
    h0, h1 = maps.invariants("lv3d", p), maps.invariants("lv3d", q)
    assert np.all(np.abs(h1 - h0) <= 1e-9 * (1 + np.abs(h0)))


@pytest.mark.parametrize("fam,params", [("moebius2d", 0.2), ("lv3d", (0.1, -0.05))])
def test_jacobian_matches_finite_differences(fam, params):
    rng = np.random.default_rng(3)
    for x in maps.random_box(rng, 30, maps.get_family(fam).dimension, 2.0):
        J = maps.jacobian(fam, params, x)
        Jn = central_difference_jacobian(lambda v: maps.evaluate(fam, params, v), x)
        assert np.max(np.abs(J - Jn)) <= 1e-6 * max(1, np.max(np.abs(J)))


def test_is_indeterminate_at_one_one():
    assert maps.is_indeterminate("moebius2d", 0, [1, 1])
    assert not maps.is_indeterminate("moebius2d", 0, [0.3, 0.4])


def test_preimages_contain_source():
    rng = np.random.default_rng(7)
    for fam, params in (("moebius2d", 0.2), ("lv3d", (0.1, 0.05))):
        d = maps.get_family(fam).dimension
        for x0 in maps.random_box(rng, 5, d, 1.5):
            y = maps.evaluate(fam, params, x0)
            pre = maps.preimages(fam, params, y, 400, 1)
            assert pre, "no preimage found"
            for x in pre:
                assert np.max(np.abs(maps.evaluate(fam, params, x) - y)) < 1e-9
            assert min(np.max(np.abs(x - x0)) for x in pre) < 1e-8


def test_preimages_zero_budget():
    assert maps.preimages("moebius2d", 0.2, [0, 0], 0, 0) == []


def test_preimages_deterministic():
    a = maps.preimages("moebius2d", 0.2, [0.3, -0.7], 50, 5)
    b = maps.preimages("moebius2d", 0.2, [0.3, -0.7], 50, 5)
    assert np.array_equal(np.array(a), np.array(b))


@pytest.mark.parametrize("fam,h", [("moebius2d", [-3]), ("lv3d", [0.7 - 0.2j, -1.3])])
def test_level_set_points_have_invariants(fam, h):
    t = np.array([0.3 + 0.2j, -1.1, 2.5j])
    pts = maps.level_set_points(fam, h, t)
    assert np.allclose(maps.invariants_batch(fam, pts), np.array(h)[None, :], atol=1e-12)
