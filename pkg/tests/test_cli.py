import json

import numpy as np
import pytest

from flagdepth import __version__
from flagdepth.cli import fmt, main
from flagdepth.measure import Measure, cauchy_with_center_atom, disk_with_atom, dump_measure, spec_hash

TRIANGLE = Measure.atomic([((0, 0), 1), ((2, 0), 1), ((0, 2), 1)])


@pytest.fixture
def specs(tmp_path):
    paths = {}
    for name, m in [("tri", TRIANGLE), ("ex1", disk_with_atom()), ("ex2", cauchy_with_center_atom())]:
        paths[name] = tmp_path / f"{name}.json"
        dump_measure(m, paths[name])
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fmt_prints_fractions_with_ratio():
    from fractions import Fraction
    assert fmt(Fraction(1, 3)) == "0.333333333333 (1/3)"
    assert fmt(Fraction(2)) == "2"
    assert fmt(0.1 + 0.2) == "0.3"


# depth ----------------------------------------------------------------------------------


def test_depth_at_cauchy_median(capsys, specs):
    code, out, _ = run(capsys, "depth", "--spec", specs["ex2"], "0", "0")
    js = json.loads(out)
    assert code == 0
    assert js["results"][0]["depth"] == pytest.approx(0.5, abs=1e-15)
    assert js["spec_hash"] == spec_hash(cauchy_with_center_atom())
    assert js["version"] == __version__


def test_depth_csv_for_triangle(capsys, specs):
    code, out, _ = run(capsys, "depth", "--spec", specs["tri"], "--format", "csv", "3", "3", "1/2", "1/2")
    rows = out.strip().splitlines()
    assert code == 0 and rows[0].startswith("x,y,depth")
    assert rows[1].split(",")[2] == "0"
    assert rows[2].split(",")[2] == "1" and rows[2].split(",")[3] == "true"


def test_depth_at_unattained_point(capsys, specs):
    _, out, _ = run(capsys, "depth", "--spec", specs["ex1"], "1", "0")
    r = json.loads(out)["results"][0]
    assert r["depth"] == pytest.approx(0.195501109478, abs=1e-11)
    assert r["attained"] is False and r["exact"] is False


@pytest.mark.parametrize("argv", [
    ["depth", "--spec", "missing.json", "0", "0"],
    ["depth", "--spec", "{tri}", "0"],
    ["depth", "--spec", "{tri}", "a", "b"],
    ["bogus"],
    ["field", "--spec", "{tri}", "--bbox", "0,0,0,1", "--out", "{out}"],
    ["field", "--spec", "{tri}", "--resolution", "1x5", "--out", "{out}"],
    ["regions", "--spec", "{tri}", "--levels", "0,1", "--out", "{out}"],
    ["regions", "--spec", "{tri}", "--levels", "1", "--tol", "-1", "--out", "{out}"],
    ["field", "--spec", "{tri}", "--threads", "0", "--out", "{out}"],
])
def test_usage_errors_exit_two_and_write_nothing(capsys, specs, tmp_path, argv):
    out = tmp_path / "out"
    argv = [a.format(tri=specs["tri"], out=out) for a in argv]
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert not out.exists()


def test_malformed_spec_is_reported(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"components": [{"type": "finite_atomic", "atoms": [[0, 0, -1]]}]}')
    code, _, err = run(capsys, "depth", "--spec", bad, "0", "0")
    assert code == 2 and "error" in err


# files ---------------------------------------------------------------------------------------


def test_field_is_byte_identical_across_runs_and_threads(capsys, specs, tmp_path):
    outs = []
    for k, threads in enumerate((1, 1, 3)):
        d = tmp_path / f"f{k}"
        code, _, _ = run(capsys, "field", "--spec", specs["ex2"], "--bbox", "-3,-3,3,3",
                         "--resolution", "21x15", "--threads", threads, "--format", "csv", "--out", d)
        assert code == 0
        outs.append(((d / "field.csv").read_bytes(), (d / "field.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]
    side = json.loads(outs[0][1])
    assert side["spec_hash"] == spec_hash(cauchy_with_center_atom())
    values = np.loadtxt(tmp_path / "f0" / "field.csv", delimiter=",")
    assert values.shape == (15, 21)


def test_regions_writes_polygons_and_notes_empty_levels(capsys, specs, tmp_path):
    code, out, _ = run(capsys, "regions", "--spec", specs["tri"], "--levels", "1,2",
                       "--format", "csv", "--out", tmp_path)
    assert code == 0
    assert "polygon with 3 vertices" in out and "empty" in out
    text = (tmp_path / "region_000.csv").read_text().splitlines()
    assert any(line.startswith("# spec_hash=") for line in text)
    js = json.loads((tmp_path / "regions.json").read_text())
    assert [r["kind"] for r in js["regions"]] == ["polygon", "empty"]


def test_atomic_reconstruction_passes(capsys, specs, tmp_path):
    code, out, _ = run(capsys, "reconstruct", "--spec", specs["tri"], "--out", tmp_path)
    assert code == 0 and "verdict PASS" in out
    first = (tmp_path / "report.json").read_bytes()
    run(capsys, "reconstruct", "--spec", specs["tri"], "--out", tmp_path)
    assert (tmp_path / "report.json").read_bytes() == first
    js = json.loads(first)
    assert js["mode"] == "atomic" and len(js["candidates"]) == 3


def test_atomic_mode_refuses_mixtures(capsys, specs):
    code, _, err = run(capsys, "reconstruct", "--spec", specs["ex1"], "--mode", "atomic")
    assert code == 2 and "atomic" in err


# verify -------------------------------------------------------------------------------------


def test_verify_example_two(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "example2", "--out", tmp_path)
    assert code == 0 and "FAIL" not in out
    js = json.loads((tmp_path / "verify_example2.json").read_text())
    assert js["pass"] is True and js["target"] == "example2"


def test_verify_properties(capsys):
    code, out, _ = run(capsys, "verify", "properties", "--seed", "3")
    assert code == 0
    assert out.count("PASS") == len(out.strip().splitlines())
