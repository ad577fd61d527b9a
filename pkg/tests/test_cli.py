import json

import numpy as np
import pytest

from ivppmaps import cli


def test_periodic_example(tmp_path):
    out = tmp_path / "orbits.json"
    assert cli.main(["periodic", "--map", "moebius2d", "--params", "a=0", "--period", "3",
                     "--budget", "200", "--seed", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["orbits"]
    for o in doc["orbits"]:
        for (x, y) in o["points"]:
            xc, yc = complex(*x), complex(*y)
            assert abs(xc * yc + 3) < 1e-6


def test_zero_budget_is_empty_not_an_error(tmp_path):
    out = tmp_path / "o.json"
    assert cli.main(["periodic", "--map", "moebius2d", "--period", "2", "--budget", "0",
                     "--out", str(out)]) == 0
    assert json.loads(out.read_text())["orbits"] == []


@pytest.mark.parametrize("argv", [
    ["periodic", "--map", "nosuch", "--period", "2"],
    ["periodic", "--map", "moebius2d", "--period", "0"],
    ["periodic", "--map", "moebius2d", "--period", "2", "--params", "q=1"],
    ["periodic", "--map", "moebius2d"],
    ["continuation", "--map", "moebius2d", "--period", "3", "--start", "a=0.3", "--stop", "a=0"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as e:
        code = cli.main(argv)
        raise SystemExit(code)
    assert e.value.code == 2


def test_seed_from_environment(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv(cli.SEED_ENV, "17")
    cli.main(["periodic", "--map", "moebius2d", "--params", "a=0.2", "--period", "2",
              "--budget", "50", "--out", str(a)])
    cli.main(["periodic", "--map", "moebius2d", "--params", "a=0.2", "--period", "2",
              "--budget", "50", "--seed", "17", "--out", str(b)])
    assert json.loads(a.read_text())["seed"] == 17
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv(cli.SEED_ENV, "x")
    with pytest.raises(SystemExit) as e:
        raise SystemExit(cli.main(["periodic", "--map", "moebius2d", "--period", "1"]))
    assert e.value.code == 2


def test_json_keeps_17_significant_digits():
    v = 0.1 + 0.2
    text = cli.to_json({"v": v, "c": 1 / 3 + 2j, "bad": float("nan")})
    doc = json.loads(text)
    assert doc["v"] == v and doc["c"] == [1 / 3, 2.0] and doc["bad"] is None


def test_ivpp_check_passes(tmp_path):
    out = tmp_path / "check.json"
    assert cli.main(["ivpp-check", "--samples", "10", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["pass"] and len(doc["reports"]) == 6


def test_hyperbola_svg_branches_and_determinism(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert cli.main(["plot", "hyperbolas", "--out", str(a)]) == 0
    assert cli.main(["plot", "hyperbolas", "--out", str(b)]) == 0
    text = a.read_text()
    assert text.count('id="branch-n') == 10
    assert a.read_bytes() == b.read_bytes()


def test_gamma_plot_marks_minus_one(tmp_path):
    from ivppmaps import plotting
    # gamma3 vanishes only at (-1, -1), a grid node of the default window
    cx, cy = plotting.gamma_zero_cells(3)
    assert len(cx) and np.max(np.hypot(cx + 1, cy + 1)) < 0.02
    assert cli.main(["plot", "gamma", "--out", str(tmp_path / "g.svg")]) == 0


def test_plot_csv_inputs(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("x_re,x_im,y_re,y_im\n")
    assert cli.main(["plot", "scatter", "--csv", str(empty), "--out", str(tmp_path / "e.svg")]) == 0
    bad = tmp_path / "bad.csv"
    bad.write_text("x_re,x_im,y_re,y_im\n1,0,oops,0\n")
    with pytest.raises(SystemExit) as e:
        raise SystemExit(cli.main(["plot", "scatter", "--csv", str(bad), "--out", str(tmp_path / "b.svg")]))
    assert e.value.code == 2


def test_julia_smoke(tmp_path):
    out, summ, svg = tmp_path / "c.csv", tmp_path / "s.json", tmp_path / "c.svg"
    assert cli.main(["julia", "--map", "moebius2d", "--params", "a=0.2", "--depth", "4",
                     "--max-points", "200", "--out", str(out), "--summary", str(summ),
                     "--svg", str(svg)]) == 0
    doc = json.loads(summ.read_text())
    assert doc["points"] == len(out.read_text().splitlines()) - 1
    assert doc["max_forward_ratio"] < 1
    assert svg.read_text().startswith("<?xml")


def test_julia_at_ivpp_parameter_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as e:
        raise SystemExit(cli.main(["julia", "--map", "moebius2d", "--params", "a=0", "--seed-period", "3",
                                   "--out", str(tmp_path / "c.csv")]))
    assert e.value.code in (2, 3)


def test_continuation_smoke(tmp_path):
    out, rep = tmp_path / "p.csv", tmp_path / "r.json"
    assert cli.main(["continuation", "--map", "moebius2d", "--period", "2", "--start", "a=0.3",
                     "--stop", "a=0.01", "--steps", "10", "--budget", "3000",
                     "--out", str(out), "--report", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["locus"] == "G2" and doc["locus_residual"]["max_relative_residual"] < 1e-6
    assert len(out.read_text().splitlines()) == doc["steps_traced"] + 1


def test_surface_points_lie_on_k2(tmp_path):
    from ivppmaps import locus
    out = tmp_path / "s.csv"
    assert cli.main(["surface", "--count", "20", "--seed", "3", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[1:]
    assert rows
    K = locus.load_k2()
    for r in rows:
        assert locus.relative_residual(K, [float(v) for v in r.split(",")]) < 1e-8
