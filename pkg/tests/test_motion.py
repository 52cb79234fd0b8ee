import math

import numpy as np
import pytest

from wobble.contact import ContactState, FootSet, TableSpec, settle_three_feet
from wobble.errors import ConditionViolation, DomainError
from wobble.motion import (
    MotionSample,
    MotionTrace,
    find_equilibrium,
    run_march,
    run_pivot_slide,
    verify_equilibrium,
)
from wobble.terrain import BumpTerrain, Extent, generate_terrain

EXT = Extent(-8.0, 8.0, -8.0, 8.0)
TABLE = TableSpec.square(1.0)


def test_march_flat_degenerate_equilibrium(flat):
    trace = run_march(TABLE, flat)
    assert trace.degenerate_start
    result = find_equilibrium(trace, flat)
    assert result.found and result.degenerate
    assert result.sweep == 0.0
    assert result.max_abs_height < 1e-12


def test_march_self_consistency(hills14):
    trace = run_march(TABLE, hills14)
    h4 = trace.h4_values
    assert h4[0] > 0
    assert h4[-1] <= 1e-9
    params = trace.params
    assert np.all(np.diff(params) > 0)
    for s in trace.samples:
        assert not s.flags
        assert max(abs(h) for h in s.contact.heights[:3]) < 1e-9
        assert s.feet.rigidity_residual(TABLE) < 1e-9
    # endpoint identity: final feet 1,2 on initial feet 2,3
    last = trace.samples[-1].feet
    assert np.linalg.norm(last.p1 - trace.start_feet.p2) < 1e-9
    assert np.linalg.norm(last.p2 - trace.start_feet.p3) < 1e-9
    # sphere radius bound
    ratio = trace.sphere.radius / TABLE.side
    assert 1.0 / math.sqrt(2.0) < ratio < math.sqrt(3.0) / 2.0
    # azimuths of both marching feet strictly increase
    phi2 = [s.azimuth2 for s in trace.samples]
    assert all(b > a for a, b in zip(phi2, phi2[1:]))


def test_march_finds_equilibrium(hills14):
    trace = run_march(TABLE, hills14)
    result = find_equilibrium(trace, hills14)
    assert result.found
    assert result.max_abs_height < 1e-9
    assert result.sign_changes >= 1
    assert math.degrees(result.sweep) <= 90.0 + math.degrees(trace.step)
    checks = verify_equilibrium(result.feet, TABLE, hills14)
    assert checks.all_ok


def test_march_steep_slope_refused():
    steep = generate_terrain(2, math.radians(20.0), 20, EXT)
    with pytest.raises(ConditionViolation, match="14.47"):
        run_march(TABLE, steep)


def test_march_override_runs_past_limit():
    steep = generate_terrain(7, math.radians(16.0), 20, EXT)
    trace = run_march(TABLE, steep, override=True)
    assert any("exceeds" in w for w in trace.warnings)
    result = find_equilibrium(trace, steep)
    assert result.found


def test_march_rejects_circle_tables(flat):
    table = TableSpec.circle(1.0, [math.radians(a) for a in (0, 60, 120, 180)])
    with pytest.raises(DomainError):
        run_march(table, flat)


def test_march_workspace_must_fit(hills14):
    with pytest.raises(DomainError, match="margin"):
        run_march(TABLE, hills14, center_xy=(6.0, 0.0))


def test_pivot_slide_self_consistency(hills30):
    trace = run_pivot_slide(TABLE, hills30)
    h4 = trace.h4_values
    assert h4[0] > 0
    assert h4[-1] <= 1e-9
    assert np.all(np.diff(trace.params) > 0)
    stages = {s.stage for s in trace.samples}
    assert stages == {"pivot", "slide"}
    for s in trace.samples:
        assert max(abs(h) for h in s.contact.heights[:3]) < 1e-9
        assert s.feet.rigidity_residual(TABLE) < 1e-9
    last = trace.samples[-1].feet
    assert np.linalg.norm(last.p1 - trace.start_feet.p2) < 1e-9
    assert np.linalg.norm(last.p2 - trace.start_feet.p3) < 1e-9
    assert np.linalg.norm(last.p3 - trace.drop.landed) < 1e-9


def test_pivot_slide_finds_equilibrium_with_clear_legs(hills30):
    trace = run_pivot_slide(TABLE, hills30)
    result = find_equilibrium(trace, hills30)
    assert result.found
    assert result.max_abs_height < 1e-9
    assert result.legs_clear
    checks = verify_equilibrium(result.feet, TABLE, hills30)
    assert checks.all_ok
    assert checks.min_leg_clearance > 0.0


def test_pivot_slide_steep_slope_refused():
    steep = generate_terrain(2, math.radians(40.0), 20, EXT)
    with pytest.raises(ConditionViolation, match="35.26"):
        run_pivot_slide(TABLE, steep)


def test_inverted_start_when_no_labeling_floats():
    # on this steep terrain every labeling settles with the free foot below
    # ground; the motion then runs from negative to positive free height
    terrain = generate_terrain(7852234893926765442, math.radians(35.0), 20, EXT)
    trace = run_pivot_slide(TABLE, terrain)
    h4 = trace.h4_values
    assert h4[0] < 0
    assert h4[-1] >= -1e-9
    result = find_equilibrium(trace, terrain)
    assert result.found and result.max_abs_height < 1e-9


def test_relabel_path_taken_when_free_foot_sinks():
    # bump under nominal foot 4 forces the odd relabel
    terrain = BumpTerrain([(-0.5, 0.5, 0.04, 0.35)], EXT)
    trace = run_march(TABLE, terrain)
    assert trace.relabeled
    result = find_equilibrium(trace, terrain)
    assert result.found and result.max_abs_height < 1e-9


def _synthetic_trace(flat, h4_values):
    feet = settle_three_feet(TABLE, flat, (0.0, 0.0), 0.0)
    samples = [
        MotionSample(param=float(i), feet=feet,
                     contact=ContactState((0.0, 0.0, 0.0, h), 1e-9),
                     stage="synthetic")
        for i, h in enumerate(h4_values)
    ]
    return MotionTrace(kind="march", table=TABLE, terrain=flat, samples=samples,
                       start_feet=feet, center_xy=(0.0, 0.0), yaw=0.0,
                       step=1.0, override=False, slope_bound=0.0)


def test_find_equilibrium_no_sign_change(flat):
    trace = _synthetic_trace(flat, [0.5, 0.4, 0.3])
    result = find_equilibrium(trace, flat)
    assert not result.found
    assert result.min_abs_h4 == pytest.approx(0.3)


def test_find_equilibrium_all_zero(flat):
    trace = _synthetic_trace(flat, [0.0, 0.0, 0.0])
    result = find_equilibrium(trace, flat)
    assert result.found and result.degenerate
    assert result.parameter == 0.0


def test_find_equilibrium_refines_on_bump_terrain():
    terrain = BumpTerrain([(-0.5, -0.5, 0.05, 0.4)], EXT)
    trace = run_march(TABLE, terrain)
    result = find_equilibrium(trace, terrain)
    assert result.found
    lo, hi = result.intervals[0]
    assert lo <= result.parameter <= hi
    assert result.max_abs_height < 1e-9


def test_verify_equilibrium_flags_lifted_foot(flat):
    feet = settle_three_feet(TABLE, flat, (0.0, 0.0), 0.0)
    lifted = feet.points.copy()
    lifted[3, 2] += 1e-3
    checks = verify_equilibrium(FootSet(lifted), TABLE, flat)
    assert not checks.heights_ok
    assert checks.max_abs_height == pytest.approx(1e-3)
    assert checks.legs_clear


def test_verify_equilibrium_passes_on_flat(flat):
    feet = settle_three_feet(TABLE, flat, (0.0, 0.0), 0.0)
    checks = verify_equilibrium(feet, TABLE, flat)
    assert checks.all_ok
    assert checks.min_leg_clearance > 0.9 * TABLE.leg_length / 50.0


def test_march_trace_resolver_matches_samples(hills14):
    trace = run_march(TABLE, hills14)
    mid = trace.samples[len(trace.samples) // 2]
    re = trace.resolver(mid.param)
    assert np.max(np.abs(re.feet.points - mid.feet.points)) < 1e-9
    assert re.contact.h4 == pytest.approx(mid.contact.h4, abs=1e-9)
