from __future__ import annotations

import pytest

from pointselect.world import CourseParams, SceneParams, build_scenario

SHORT_COURSE = CourseParams(total_length_m=1200.0)


@pytest.fixture(scope="session")
def short_scenario():
    """1.2 km scenario shared by tests that only need geometry."""
    return build_scenario(7, SHORT_COURSE, SceneParams())


@pytest.fixture(scope="session")
def short_scene(short_scenario):
    return short_scenario.scene
