"""Tests for the worked examples and their fixtures."""

import numpy as np
import pytest

from skillgeo.mdp import load_mdp
from skillgeo.scenarios import (
    POLYGON_RADIUS,
    POLYGON_SIZE,
    SCENARIOS,
    ScenarioReport,
    c5_polytope,
    c6_mdp_spec,
    polygon_points,
    run_scenario,
    scenario_to_dict,
)


class TestScenarios:
    @pytest.mark.parametrize("name", sorted(SCENARIOS))
    def test_every_scenario_passes(self, name):
        report = run_scenario(name)
        failed = [c.name for c in report.checks if not c.passed]
        assert report.checks
        assert failed == []

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="Unknown scenario"):
            run_scenario("c9")

    def test_only_c7_carries_a_pathology(self):
        assert run_scenario("c7").pathology.found
        assert run_scenario("c5").pathology is None

    def test_to_dict(self):
        report = ScenarioReport("x")
        report.close("radius", 0.2532, 0.2531, 1e-3)
        report.holds("ordering", 1, 2, False)
        doc = scenario_to_dict(report, {"extra": 1})
        assert doc["passed"] is False
        assert [c["passed"] for c in doc["checks"]] == [True, False]
        assert doc["extra"] == 1


class TestFixtures:
    def test_c6_spec_is_valid(self):
        for occupancy in ("stationary", "discounted"):
            assert load_mdp(c6_mdp_spec(occupancy)).occupancy_kind == occupancy

    def test_c5_has_four_vertices(self):
        assert len(c5_polytope()) == 4

    def test_polygon_is_on_the_simplex(self):
        points = np.array(polygon_points())
        assert points.shape[0] == POLYGON_SIZE
        assert np.allclose(points.sum(axis=1), 1.0)
        assert points.min() >= 0.0
        center = points.mean(axis=0)
        radii = np.linalg.norm(points - center, axis=1)
        assert np.allclose(radii, radii[0])
        assert radii[0] <= POLYGON_RADIUS + 1e-12
