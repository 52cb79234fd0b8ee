import math

import numpy as np
import pytest

from wobble.errors import BlockedMotion, ConditionViolation, DomainError
from wobble.geometry import Sphere
from wobble.ring import (
    chord_advance,
    circle_surface_intersection,
    flat_chord_azimuth_gap,
    ring_point,
    trace_ring,
)
from wobble.terrain import BumpTerrain, Extent, GridTerrain, generate_terrain

EXT = Extent(-8.0, 8.0, -8.0, 8.0)
STEP = math.radians(0.25)


def test_ring_point_flat_equator(flat):
    s = Sphere(center=np.array([0.0, 0.0, 0.0]), radius=1.0)
    p, lam = ring_point(s, flat, 0.0)
    assert np.allclose(p, (1.0, 0.0, 0.0), atol=1e-12)
    assert lam == pytest.approx(0.0, abs=1e-12)


def test_ring_point_steep_terrain_refused():
    steep = generate_terrain(2, math.radians(34.0), 20, EXT)
    s = Sphere(center=np.array([0.0, 0.0, 0.0]), radius=1.0)
    with pytest.raises(ConditionViolation, match="30"):
        ring_point(s, steep, 0.0)
    with pytest.raises(ConditionViolation, match="30"):
        trace_ring(s, steep, STEP)


def test_trace_on_tilted_plane_is_the_analytic_circle(plane10):
    # sphere centered on the plane: the curve is a great circle
    cz = 0.5 * math.tan(math.radians(10.0))
    s = Sphere(center=np.array([0.5, 0.2, cz]), radius=0.9)
    ring = trace_ring(s, plane10, STEP, chord_length=1.0)
    d = ring.points - s.center
    assert np.max(np.abs(np.sqrt((d * d).sum(1)) - 0.9)) < 1e-9
    plane_resid = ring.points[:, 2] - ring.points[:, 0] * math.tan(math.radians(10.0))
    assert np.max(np.abs(plane_resid)) < 1e-9


def test_trace_off_center_sphere_circle_radius(plane10):
    # sphere center lifted off the plane by dist: circle radius sqrt(R^2-dist^2)
    slope = math.tan(math.radians(10.0))
    normal = np.array([-slope, 0.0, 1.0]) / math.hypot(slope, 1.0)
    dist = 0.12
    center = np.array([0.5, 0.2, 0.5 * slope]) + dist * normal
    s = Sphere(center=center, radius=0.9)
    ring = trace_ring(s, plane10, STEP, chord_length=1.0)
    circle_center = center - dist * normal
    r_want = math.sqrt(0.9**2 - dist**2)
    d = ring.points - circle_center
    assert np.max(np.abs(np.sqrt((d * d).sum(1)) - r_want)) < 1e-9


def test_trace_full_turn_closes(hills14):
    s = Sphere(center=np.array([0.2, -0.1, 0.35]), radius=0.8)
    ring = trace_ring(s, hills14, math.radians(0.5))
    p0, lam0, _ = ring.point_at(float(ring.azimuths[0]))
    p1, lam1, _ = ring.point_at(float(ring.azimuths[0]) + 2.0 * math.pi)
    assert np.linalg.norm(p1 - p0) < 1e-9 * s.radius
    # polyline wrap is continuous
    assert abs(float(ring.latitudes[0]) - float(ring.latitudes[-1])) < 0.05


def test_traced_invariants_on_terrain(hills14):
    s = Sphere(center=np.array([0.0, 0.0, 0.35]), radius=0.8)
    ring = trace_ring(s, hills14, math.radians(0.5))
    assert ring.max_sphere_residual < 1e-9 * s.radius
    assert ring.max_surface_residual < 1e-9
    assert ring.max_abs_latitude < 2.0 * hills14.slope_bound
    assert np.all(np.diff(ring.azimuths) > 0)


def test_trace_step_cap_with_chord():
    s = Sphere(center=np.array([0.0, 0.0, 0.0]), radius=0.75)
    from wobble.terrain import flat_terrain
    with pytest.raises(DomainError, match="cap"):
        trace_ring(s, flat_terrain(EXT), math.radians(2.0), chord_length=1.0)


def test_chord_advance_exact_on_flat_circle(flat):
    s = Sphere(center=np.array([0.0, 0.0, 0.0]), radius=1.0)
    ring = trace_ring(s, flat, STEP, chord_length=0.5)
    start, _, _ = ring.point_at(0.0)
    want = flat_chord_azimuth_gap(0.5, 1.0)
    p2, phi2, lam2, _ = chord_advance(ring, start, 0.0, 0.5, want)
    assert phi2 == pytest.approx(want, abs=1e-12)
    assert np.linalg.norm(p2 - start) == pytest.approx(0.5, abs=1e-12)


def test_chord_advance_blocked_outside_bracket(flat):
    s = Sphere(center=np.array([0.0, 0.0, 0.0]), radius=1.0)
    ring = trace_ring(s, flat, STEP, chord_length=0.5)
    start, _, _ = ring.point_at(0.0)
    bad_hint = flat_chord_azimuth_gap(0.5, 1.0) + math.radians(10.0)
    with pytest.raises(BlockedMotion):
        chord_advance(ring, start, 0.0, 0.5, bad_hint)


def test_chord_advance_equal_steps_on_tilted_circle(plane10):
    cz = 0.5 * math.tan(math.radians(10.0))
    s = Sphere(center=np.array([0.5, 0.2, cz]), radius=0.9)
    chord = 0.5
    ring = trace_ring(s, plane10, STEP, chord_length=chord)
    # equal chords on a circle of radius 0.9 subtend equal intrinsic angles
    intrinsic = 2.0 * math.asin(chord / (2.0 * 0.9))
    phi = float(ring.azimuths[0])
    p, _, _ = ring.point_at(phi)
    hint_gap = intrinsic
    for _ in range(5):
        p_next, phi_next, _, _ = chord_advance(ring, p, phi, chord,
                                               phi + hint_gap)
        assert np.linalg.norm(p_next - p) == pytest.approx(chord, abs=1e-10)
        cosang = float(np.dot(p - s.center, p_next - s.center)) / (0.9 * 0.9)
        angle = math.acos(min(1.0, max(-1.0, cosang)))
        assert angle == pytest.approx(intrinsic, abs=1e-9)
        hint_gap = phi_next - phi
        p, phi = p_next, phi_next


def test_circle_intersection_flat_sides(flat):
    q = circle_surface_intersection(np.zeros(3), np.array([1.0, 0, 0]), 0.7,
                                    flat, side=1)
    assert np.allclose(q, (0.0, 0.7, 0.0), atol=1e-11)
    q = circle_surface_intersection(np.zeros(3), np.array([1.0, 0, 0]), 0.7,
                                    flat, side=-1)
    assert np.allclose(q, (0.0, -0.7, 0.0), atol=1e-11)


def test_circle_intersection_tilted_plane_closed_form(plane10):
    slope = math.tan(math.radians(10.0))
    center = np.array([0.5, 0.2, 0.5 * slope])
    axis = np.array([0.0, 1.0, 0.0])
    q = circle_surface_intersection(center, axis, 0.7, plane10, side=1)
    # the circle lies in the plane y = 0.2; its ground crossing satisfies
    # z = x tan(10) and |q - center| = 0.7
    assert q[1] == pytest.approx(0.2, abs=1e-12)
    assert q[2] == pytest.approx(q[0] * slope, abs=1e-11)
    assert np.linalg.norm(q - center) == pytest.approx(0.7, abs=1e-12)
    # side +1 for axis y-hat means the negative-x half plane
    assert q[0] < center[0]


def test_circle_intersection_four_crossings_flagged():
    # a tall thin ridge pokes through one side of the circle twice
    terrain = BumpTerrain([(0.0, 0.52, 0.62, 0.055)], EXT)
    with pytest.raises(ConditionViolation, match="times"):
        circle_surface_intersection(np.zeros(3), np.array([1.0, 0, 0]), 0.7,
                                    terrain, side=1, enforce_slope=False)


def test_circle_intersection_steep_slope_refused():
    steep = generate_terrain(2, math.radians(40.0), 20, EXT)
    with pytest.raises(ConditionViolation, match="35.26"):
        circle_surface_intersection(np.zeros(3), np.array([1.0, 0, 0]), 0.7,
                                    steep, side=1)


def test_circle_intersection_vertical_axis_rejected(flat):
    with pytest.raises(DomainError):
        circle_surface_intersection(np.zeros(3), np.array([0.0, 0, 1.0]), 0.7,
                                    flat, side=1)
