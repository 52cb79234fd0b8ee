import os
import subprocess
import sys

import pytest

from wobble.cli import main
from wobble.terrain import parse_terrain


def run_cli(args, cwd, env_extra=None):
    env = dict(os.environ)
    env.setdefault("WOBBLE_THREADS", "1")
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "wobble", *args],
                          cwd=cwd, env=env, capture_output=True, text=True,
                          timeout=600)


@pytest.fixture(scope="module")
def terrain10(tmp_path_factory):
    d = tmp_path_factory.mktemp("terr")
    path = d / "t10.json"
    r = run_cli(["gen-terrain", "--seed", "7", "--theta", "10", "--bumps", "20",
                 "--out", str(path)], cwd=d)
    assert r.returncode == 0, r.stderr
    return path


def test_gen_terrain_writes_parseable_file(terrain10):
    text = terrain10.read_text()
    t = parse_terrain(text)
    assert len(t.bumps) == 20
    import math
    assert t.slope_bound <= math.radians(10.0)


def test_gen_terrain_zero_bumps(tmp_path):
    out = tmp_path / "flat.json"
    r = run_cli(["gen-terrain", "--seed", "1", "--theta", "10", "--bumps", "0",
                 "--out", str(out)], cwd=tmp_path)
    assert r.returncode == 0
    t = parse_terrain(out.read_text())
    assert t.height(0.0, 0.0) == 0.0


def test_gen_terrain_zero_theta(tmp_path):
    out = tmp_path / "flat0.json"
    r = run_cli(["gen-terrain", "--seed", "1", "--theta", "0", "--bumps", "20",
                 "--out", str(out)], cwd=tmp_path)
    assert r.returncode == 0
    t = parse_terrain(out.read_text())
    assert all(b.amplitude == 0.0 for b in t.bumps)


def test_check_reports_slope(terrain10, tmp_path):
    r = run_cli(["check", "--terrain", str(terrain10), "--samples", "40000"],
                cwd=tmp_path)
    assert r.returncode == 0
    assert "slope bound est" in r.stdout
    assert "10.0000 deg" in r.stdout


def test_solve_march_success(terrain10, tmp_path):
    out = tmp_path / "trace.csv"
    r = run_cli(["solve", "--terrain", str(terrain10), "--motion", "gamma",
                 "--out", str(out)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert "equilibrium:     found" in r.stdout
    lines = out.read_text().splitlines()
    assert lines[0] == ("param_deg,x1,y1,z1,x2,y2,z2,x3,y3,z3,x4,y4,z4,"
                        "h4,sphere_R_over_L,lat_deg,warnings")
    sweep = [ln for ln in r.stdout.splitlines() if "azimuth sweep" in ln][0]
    assert float(sweep.split()[2]) <= 90.0 + 0.25
    samples = [ln for ln in r.stdout.splitlines() if "samples:" in ln][0]
    assert len(lines) - 1 == int(samples.split()[1])


def test_solve_flat_degenerate(tmp_path):
    flat = tmp_path / "flat.json"
    run_cli(["gen-terrain", "--seed", "1", "--theta", "10", "--bumps", "0",
             "--out", str(flat)], cwd=tmp_path)
    out = tmp_path / "trace.csv"
    r = run_cli(["solve", "--terrain", str(flat), "--out", str(out)],
                cwd=tmp_path)
    assert r.returncode == 0
    assert "azimuth sweep:   0.0000 deg" in r.stdout


def test_solve_steep_terrain_exit_3(tmp_path):
    steep = tmp_path / "t20.json"
    run_cli(["gen-terrain", "--seed", "2", "--theta", "20", "--out", str(steep)],
            cwd=tmp_path)
    r = run_cli(["solve", "--terrain", str(steep), "--motion", "gamma",
                 "--out", str(tmp_path / "x.csv")], cwd=tmp_path)
    assert r.returncode == 3
    assert "14.47" in r.stderr
    # the rotate-then-slide motion accepts this slope
    r2 = run_cli(["solve", "--terrain", str(steep), "--motion", "rt",
                  "--out", str(tmp_path / "y.csv")], cwd=tmp_path)
    assert r2.returncode == 0, r2.stderr


def test_solve_missing_terrain_exit_4(tmp_path):
    r = run_cli(["solve", "--terrain", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "x.csv")], cwd=tmp_path)
    assert r.returncode == 4


def test_usage_errors_exit_64(tmp_path):
    r = run_cli(["montecarlo", "--n", "0", "--out", "x.csv"], cwd=tmp_path)
    assert r.returncode == 64
    r = run_cli(["solve"], cwd=tmp_path)
    assert r.returncode == 64
    r = run_cli(["nonsense"], cwd=tmp_path)
    assert r.returncode == 64


def test_scan_square_table(terrain10, tmp_path):
    out = tmp_path / "scan.csv"
    r = run_cli(["scan", "--terrain", str(terrain10), "--side", "1",
                 "--out", str(out)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert "(even)" in r.stdout
    lines = out.read_text().splitlines()
    assert lines[0] == "theta_deg,h1,h2,h3,h4,g"
    assert len(lines) == 1 + 4096


def test_scan_half_hexagon_ratios(terrain10, tmp_path):
    r = run_cli(["scan", "--terrain", str(terrain10), "--circle", "1.0",
                 "--angles", "0,60,120,180", "--out",
                 str(tmp_path / "hh.csv")], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert "alpha=0.666667" in r.stdout
    assert "beta=0.333333" in r.stdout


def test_scan_flat_degenerate(tmp_path):
    flat = tmp_path / "flat.json"
    run_cli(["gen-terrain", "--seed", "1", "--theta", "0", "--bumps", "0",
             "--out", str(flat)], cwd=tmp_path)
    r = run_cli(["scan", "--terrain", str(flat), "--out",
                 str(tmp_path / "s.csv")], cwd=tmp_path)
    assert r.returncode == 0
    assert "degenerate" in r.stdout


def test_montecarlo_small_campaign(tmp_path):
    out = tmp_path / "camp.csv"
    r = run_cli(["montecarlo", "--n", "3", "--theta", "14", "--seed", "5",
                 "--out", str(out)], cwd=tmp_path)
    assert r.returncode == 0, r.stderr
    assert "found:           3/3" in r.stdout
    lines = out.read_text().splitlines()
    assert len(lines) == 4


def test_montecarlo_deterministic_and_worker_independent(tmp_path):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    r1 = run_cli(["montecarlo", "--n", "3", "--theta", "12", "--seed", "9",
                  "--out", str(a)], cwd=tmp_path)
    r2 = run_cli(["montecarlo", "--n", "3", "--theta", "12", "--seed", "9",
                  "--out", str(b)], cwd=tmp_path)
    r3 = run_cli(["montecarlo", "--n", "3", "--theta", "12", "--seed", "9",
                  "--out", str(c)], cwd=tmp_path, env_extra={"WOBBLE_THREADS": "2"})
    assert r1.returncode == r2.returncode == r3.returncode == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_main_in_process_usage():
    assert main(["montecarlo", "--n", "0", "--out", "x.csv"]) == 64
