import dataclasses
import math

import numpy as np
import pytest

from pointselect.world import (
    Building,
    CourseParams,
    OutOfCorridorError,
    ParamError,
    PathRangeError,
    Scene,
    SceneGenerationError,
    SceneParams,
    _bz_deriv,
    _bz_point,
    bezier_curvature,
    build_scenario,
    generate_course,
    generate_scene,
    left_normal,
    path_point,
    project_to_path,
    scenario_from_json,
    scenario_to_json,
    validate_scene,
)

SHORT = CourseParams(total_length_m=1200.0)


def chord_length_oracle(course, n: int = 100_000) -> float:
    """Independent arc length: dense chord summation straight off the segments."""
    total = 0.0
    per_seg = max(2, n // len(course.segments))
    for seg in course.segments:
        ts = np.linspace(0.0, 1.0, per_seg)
        pts = np.array([_bz_point(seg, t) for t in ts])
        total += float(np.sum(np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))))
    return total


def projection_oracle(course, p, n: int = 10_000):
    """Dense-sampling argmin of distance with parabolic refinement."""
    ss = np.linspace(0.0, course.total_length_m, n)
    pts = np.array([path_point(course, s)[0][:2] for s in ss])
    d2 = (pts[:, 0] - p[0]) ** 2 + (pts[:, 1] - p[1]) ** 2
    i = int(np.argmin(d2))
    s = ss[i]
    if 0 < i < n - 1:
        denom = d2[i - 1] - 2 * d2[i] + d2[i + 1]
        if denom > 0:
            s += 0.5 * (d2[i - 1] - d2[i + 1]) / denom * (ss[1] - ss[0])
    return s


class TestGenerateCourse:
    def test_all_straight_has_zero_curvature(self):
        course = generate_course(1, dataclasses.replace(SHORT, straight_fraction=1.0))
        for seg in course.segments:
            for t in np.linspace(0.0, 1.0, 25):
                assert abs(bezier_curvature(seg, t)) < 1e-12

    def test_equal_seed_and_params_serialize_identically(self):
        a = build_scenario(7, SHORT)
        b = build_scenario(7, SHORT)
        assert scenario_to_json(a) == scenario_to_json(b)

    def test_arc_table_matches_quadrature_oracle(self):
        course = generate_course(7, SHORT)
        oracle = chord_length_oracle(course)
        assert abs(course.total_length_m - oracle) / oracle < 1e-4
        # and the generated course hits the requested total within 0.1%
        assert abs(course.total_length_m - SHORT.total_length_m) < 0.001 * SHORT.total_length_m

    def test_curvature_bound_holds_everywhere(self):
        course = generate_course(3, SHORT)
        for seg in course.segments:
            for t in np.linspace(0.0, 1.0, 40):
                assert abs(bezier_curvature(seg, t)) <= SHORT.max_curvature_per_m * (1 + 1e-6)

    def test_c1_continuity_between_segments(self):
        course = generate_course(9, SHORT)
        for a, b in zip(course.segments, course.segments[1:]):
            assert a[3] == b[0]  # shared endpoint, exactly
            da = _bz_deriv(a, 1.0)
            db = _bz_deriv(b, 0.0)
            cross = da[0] * db[1] - da[1] * db[0]
            assert abs(cross) / (math.hypot(*da) * math.hypot(*db)) < 1e-9

    def test_arc_table_strictly_increasing(self):
        course = generate_course(5, SHORT)
        assert np.all(np.diff(course.table_s) > 0)

    def test_infeasible_params_raise_named_error(self):
        with pytest.raises(ParamError, match="max_curvature"):
            generate_course(1, dataclasses.replace(SHORT, max_curvature_per_m=0.0))

    def test_zero_curvature_all_straight_is_fine(self):
        p = dataclasses.replace(SHORT, max_curvature_per_m=0.0, straight_fraction=1.0)
        course = generate_course(1, p)
        assert course.total_length_m > 0


class TestPathQueries:
    def test_s_zero_is_first_control_point(self):
        course = generate_course(7, SHORT)
        pos, _ = path_point(course, 0.0)
        assert pos[:2] == course.segments[0][0]

    def test_straight_course_linear(self):
        course = generate_course(1, dataclasses.replace(SHORT, straight_fraction=1.0))
        pos, tang = path_point(course, 25.0)
        start, t0 = path_point(course, 0.0)
        assert pos[0] == pytest.approx(start[0] + 25.0 * t0[0], abs=1e-9)
        assert pos[1] == pytest.approx(start[1] + 25.0 * t0[1], abs=1e-9)

    def test_random_s_matches_chord_oracle(self):
        course = generate_course(7, SHORT)
        rs = np.random.default_rng(0)
        dense = {}
        for s in rs.uniform(0, course.total_length_m, 50):
            pos, _ = path_point(course, s)
            s_back = projection_oracle(course, pos, n=20_000)
            assert abs(s_back - s) < 0.01

    def test_tangent_is_unit(self):
        course = generate_course(7, SHORT)
        for s in np.linspace(0, course.total_length_m, 200):
            _, tang = path_point(course, float(s))
            assert math.hypot(tang[0], tang[1]) == pytest.approx(1.0, abs=1e-9)

    def test_out_of_range_raises(self):
        course = generate_course(7, SHORT)
        with pytest.raises(PathRangeError):
            path_point(course, -1.0)
        with pytest.raises(PathRangeError):
            path_point(course, course.total_length_m + 1.0)


class TestProjectToPath:
    def test_point_on_lane1_center_has_zero_lateral(self):
        course = generate_course(7, SHORT)
        pos, tang = path_point(course, 50.0)
        nx, ny, _ = left_normal(tang)
        lane1 = (pos[0] - nx * 1.65, pos[1] - ny * 1.65, 0.0)
        pose = project_to_path(course, lane1)
        assert pose.s_m == pytest.approx(50.0, abs=1e-3)
        assert pose.lateral_m == pytest.approx(0.0, abs=1e-3)

    def test_left_offset_gives_positive_lateral(self):
        course = generate_course(7, SHORT)
        pos, tang = path_point(course, 200.0)
        nx, ny, _ = left_normal(tang)
        p = (pos[0] + nx * 1.2, pos[1] + ny * 1.2, 0.0)
        pose = project_to_path(course, p)
        assert pose.lateral_m == pytest.approx(1.2 + 1.65, abs=1e-3)

    def test_random_corridor_points_match_dense_oracle(self):
        course = generate_course(7, SHORT)
        rng = np.random.default_rng(1)
        for _ in range(60):
            s = float(rng.uniform(5, course.total_length_m - 5))
            lat = float(rng.uniform(-30, 30))
            pos, tang = path_point(course, s)
            nx, ny, _ = left_normal(tang)
            p = (pos[0] + nx * lat, pos[1] + ny * lat, 0.0)
            got = project_to_path(course, p)
            want = projection_oracle(course, p)
            assert abs(got.s_m - want) < 0.05

    def test_round_trip_on_one_meter_grid(self):
        course = generate_course(7, SHORT)
        for s in np.arange(0.0, course.total_length_m, 1.0):
            pos, _ = path_point(course, float(s))
            pose = project_to_path(course, pos, s_hint=float(s))
            assert abs(pose.s_m - s) <= 0.05

    def test_beyond_corridor_raises(self):
        course = generate_course(7, SHORT)
        pos, tang = path_point(course, 100.0)
        nx, ny, _ = left_normal(tang)
        p = (pos[0] + nx * 250.0, pos[1] + ny * 250.0, 0.0)
        with pytest.raises(OutOfCorridorError):
            project_to_path(course, p)

    def test_hint_equals_full_scan(self):
        course = generate_course(7, SHORT)
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = float(rng.uniform(0, course.total_length_m))
            lat = float(rng.uniform(-8, 8))
            pos, tang = path_point(course, s)
            nx, ny, _ = left_normal(tang)
            p = (pos[0] + nx * lat, pos[1] + ny * lat, 0.0)
            assert project_to_path(course, p, s_hint=s) == project_to_path(course, p)


class TestGenerateScene:
    def test_sweep_has_no_violations(self):
        course = generate_course(7, SHORT)
        for seed in range(40):
            scene = generate_scene(seed, course)
            assert validate_scene(scene) == []

    def test_buildings_start_after_offset(self):
        course = generate_course(7, SHORT)
        scene = generate_scene(3, course, SceneParams(start_offset_m=100.0))
        assert min(b.s_m for b in scene.buildings) >= 100.0

    def test_degenerate_gap_interval(self):
        course = generate_course(7, SHORT)
        scene = generate_scene(5, course, SceneParams(gap_range_m=(10.0, 10.0)))
        for side in ("left", "right"):
            row = sorted(
                (b for b in scene.buildings if b.side == side), key=lambda b: b.s_m
            )
            for a, b in zip(row, row[1:]):
                gap = (b.s_m - b.size_m[0] / 2) - (a.s_m + a.size_m[0] / 2)
                assert gap == pytest.approx(10.0, abs=1e-9)

    def test_too_short_course_raises(self):
        tiny = generate_course(1, dataclasses.replace(SHORT, total_length_m=90.0))
        with pytest.raises(SceneGenerationError):
            generate_scene(1, tiny, SceneParams(start_offset_m=100.0))


class TestValidateScene:
    def test_fresh_scene_is_clean(self, short_scene):
        assert validate_scene(short_scene) == []

    def test_forced_setback_violation(self, short_scene):
        b0 = short_scene.buildings[0]
        bad = dataclasses.replace(b0, setback_m=4.0)
        scene = Scene(
            course=short_scene.course,
            buildings=(bad,) + short_scene.buildings[1:],
        )
        violations = validate_scene(scene)
        assert [v for v in violations if v.constraint == "setback_range"]
        assert violations[0].building_ids == (0,)

    def test_forced_gap_violation_names_both_ids(self, short_scene):
        row = sorted(
            (b for b in short_scene.buildings if b.side == "left"), key=lambda b: b.s_m
        )
        a, b = row[0], row[1]
        # slide b so the edge gap shrinks to 8 m
        new_s = a.s_m + a.size_m[0] / 2 + 8.0 + b.size_m[0] / 2
        moved = dataclasses.replace(b, s_m=new_s)
        buildings = list(short_scene.buildings)
        buildings[b.id] = moved
        scene = Scene(course=short_scene.course, buildings=tuple(buildings))
        gap_violations = [v for v in validate_scene(scene) if v.constraint == "gap_range"]
        assert gap_violations and gap_violations[0].building_ids == (a.id, b.id)
        assert gap_violations[0].measured == pytest.approx(8.0, abs=1e-9)


class TestScenarioDocument:
    def test_round_trip_is_byte_identical(self, short_scenario):
        text = scenario_to_json(short_scenario)
        again = scenario_to_json(scenario_from_json(text))
        assert text == again

    def test_loaded_scenario_queries_match(self, short_scenario):
        loaded = scenario_from_json(scenario_to_json(short_scenario))
        s = 321.0
        assert path_point(loaded.scene.course, s) == path_point(
            short_scenario.scene.course, s
        )
