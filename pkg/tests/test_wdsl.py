"""Tests for Wasserstein skill placement, PWSEP discovery and the KLSEP demo."""

import numpy as np
import pytest

from skillgeo.divergences import SkillSet
from skillgeo.errors import MalformedSpec
from skillgeo.mdp import (
    enumerate_policy_occupancies,
    extreme_points,
    hull_membership,
    polytope_from_mdp,
    random_mdp,
)
from skillgeo.scenarios import (
    C6_CENTER,
    POLYGON_SIZE,
    V1,
    V2,
    V3,
    c3_polytope,
    c5_polytope,
    c6_mdp,
    c6_polytope,
    polygon_points,
)
from skillgeo.wdsl import (
    awd,
    klsep_pathology_demo,
    matches_vertices,
    maximize_awd,
    maximize_wsep,
    placements_are_extreme,
    pwsep_project,
    pwsep_run,
    pwsep_verdict_for_seed,
    run_pwsep_suite,
    spwd,
)


@pytest.fixture(scope="module")
def c6_candidates():
    return [occ for _, occ in enumerate_policy_occupancies(c6_mdp())]


class TestAwd:
    def test_misl_pair(self):
        assert awd(SkillSet.uniform([V1, V2])) == pytest.approx(0.3, abs=1e-9)

    def test_all_three_vertices(self):
        assert awd(SkillSet.uniform([V1, V2, V3])) == pytest.approx(4 / 15, abs=1e-9)

    def test_single_skill_is_zero(self):
        assert awd(SkillSet.uniform([V3])) == pytest.approx(0.0, abs=1e-12)

    def test_maximizer_on_c6(self):
        result = maximize_awd(c6_polytope(), k=2)
        assert result.indices == [0, 1]
        assert result.value == pytest.approx(0.3, abs=1e-6)
        assert result.heuristic

    def test_k_must_be_positive(self):
        with pytest.raises(MalformedSpec):
            maximize_awd(c6_polytope(), k=0)


class TestMaximizeWsep:
    def test_c3_omits_a_vertex(self):
        result = maximize_wsep(c3_polytope(), k=4)
        assert result.value == pytest.approx(8.6)
        assert result.indices == [0, 0, 1, 2]
        assert 3 not in result.indices

    def test_c5_optimal_pair(self):
        result = maximize_wsep(c5_polytope(), k=2)
        assert result.indices == [0, 2]
        assert result.value == pytest.approx(2.0)

    def test_c6_three_skills(self):
        result = maximize_wsep(c6_polytope(), k=3)
        assert {0, 1} <= set(result.indices)
        assert result.value == pytest.approx(2.8)

    def test_greedy_is_flagged(self):
        result = maximize_wsep(c6_polytope(), k=2, mode="greedy")
        assert result.indices == [0, 1]
        assert result.heuristic

    def test_unknown_mode(self):
        with pytest.raises(MalformedSpec):
            maximize_wsep(c6_polytope(), mode="annealed")

    def test_placements_are_extreme(self):
        polytope = c3_polytope()
        result = maximize_wsep(polytope, k=4)
        assert placements_are_extreme(polytope, result.indices)


class TestPwsepProject:
    def test_point_inside_hull(self):
        result = pwsep_project(C6_CENTER, [V1, V2])
        assert result.distance == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(result.weights, [0.5, 0.5], atol=1e-6)

    def test_point_outside_hull(self):
        result = pwsep_project(V3, [V1, V2])
        assert result.distance == pytest.approx(0.2, abs=1e-9)
        assert np.allclose(result.plan.plan.sum(axis=1), V3)

    def test_empty_basis(self):
        with pytest.raises(MalformedSpec):
            pwsep_project(V1, [])


class TestPwsepRun:
    def test_c6_discovers_every_vertex(self, c6_candidates):
        state = pwsep_run(c6_candidates)
        assert len(state.discovered) == 3
        assert state.iteration == 3
        assert state.last_projected_distance <= 1e-7
        assert matches_vertices(state, extreme_points(c6_candidates))

    def test_progress(self, c6_candidates):
        seen = []
        pwsep_run(c6_candidates, on_progress=lambda p: seen.append(p.status))
        assert seen == ["discover"] * 3 + ["complete"]

    def test_workers_match_serial(self, c6_candidates):
        serial = pwsep_run(c6_candidates, seed=3)
        threaded = pwsep_run(c6_candidates, seed=3, workers=4)
        assert serial.indices == threaded.indices

    def test_single_candidate(self):
        state = pwsep_run([V2])
        assert state.indices == [0]
        assert state.last_projected_distance == 0.0

    def test_needs_candidates(self):
        with pytest.raises(MalformedSpec):
            pwsep_run([])

    def test_seeded_verdict(self):
        verdict = pwsep_verdict_for_seed(0)
        assert verdict.match
        assert verdict.iterations == verdict.vertices

    @pytest.mark.slow
    @pytest.mark.parametrize("occupancy_kind", ["discounted", "stationary"])
    def test_random_mdps_match_oracle(self, occupancy_kind):
        verdicts = run_pwsep_suite(range(100), occupancy_kind=occupancy_kind, workers=4)
        assert all(v.match for v in verdicts)
        assert all(v.iterations == v.vertices for v in verdicts)


class TestPlacementProperties:
    @pytest.mark.parametrize("seed", range(6))
    def test_wsep_placements_are_extreme_on_random_mdps(self, seed):
        polytope = polytope_from_mdp(random_mdp(np.random.default_rng(seed), 3, 3))
        for k in (2, 3):
            result = maximize_wsep(polytope, k=k)
            assert placements_are_extreme(polytope, result.indices)

    def test_c6_wsep_support_strictly_contains_misl_active_set(self):
        assert set(maximize_wsep(c6_polytope(), k=3).indices) > {0, 1}

    @pytest.mark.parametrize("seed", range(3))
    def test_projection_agrees_with_hull_membership(self, seed):
        rng = np.random.default_rng(40 + seed)
        basis = polytope_from_mdp(random_mdp(rng, 4, 2)).matrix
        inside = list(rng.dirichlet(np.ones(len(basis)), size=25) @ basis)
        queries = inside + list(rng.dirichlet(np.ones(4), size=25))
        for x in queries:
            projected = pwsep_project(x, list(basis)).distance <= 1e-7
            assert projected == hull_membership(x, list(basis), tol=1e-6).inside
        assert all(pwsep_project(x, list(basis)).distance <= 1e-7 for x in inside)

    def test_projection_is_convex_along_segments(self):
        rng = np.random.default_rng(50)
        basis = [V1, V2]
        for _ in range(100):
            a, b = rng.dirichlet(np.ones(3), size=2)
            ends = pwsep_project(a, basis).distance + pwsep_project(b, basis).distance
            midpoint = pwsep_project(0.5 * a + 0.5 * b, basis).distance
            assert midpoint <= 0.5 * ends + 1e-9

    def test_discovered_points_stay_covered(self, c6_candidates):
        state = pwsep_run(c6_candidates, seed=4)
        for k in range(1, len(state.discovered) + 1):
            prefix = state.discovered[:k]
            for point in prefix:
                result = hull_membership(point, prefix)
                assert result.inside
                assert result.distance <= 1e-12

    @pytest.mark.parametrize("occupancy_kind", ["discounted", "stationary"])
    def test_small_random_mdps_match_oracle(self, occupancy_kind):
        for num_states, num_actions in [(2, 2), (3, 2), (3, 3), (4, 2)]:
            verdicts = run_pwsep_suite(
                range(3), num_states, num_actions, occupancy_kind=occupancy_kind
            )
            assert all(v.match for v in verdicts)
            assert all(v.iterations == v.vertices for v in verdicts)


class TestSpwd:
    def test_pair(self):
        assert spwd(SkillSet.uniform([V1, V2])) == pytest.approx(1.2, abs=1e-9)

    def test_antipodal_pair_beats_whole_polygon(self):
        points = polygon_points()
        everything = spwd(SkillSet.uniform(points))
        pair = spwd(SkillSet.uniform([points[0], points[POLYGON_SIZE // 2]]))
        assert pair > everything

    def test_needs_two_skills(self):
        with pytest.raises(MalformedSpec):
            spwd(SkillSet.uniform([V1]))


class TestKlsepPathology:
    @pytest.mark.parametrize("num_skills", [2, 3])
    def test_preference_reverses(self, num_skills):
        report = klsep_pathology_demo(num_skills=num_skills)
        assert report.found
        assert report.klsep_near > report.klsep_spread
        assert report.wsep_near < report.wsep_spread

    def test_single_skill_is_empty(self):
        assert klsep_pathology_demo(num_skills=1).empty

    def test_four_skills_unsupported(self):
        with pytest.raises(MalformedSpec):
            klsep_pathology_demo(num_skills=4)
