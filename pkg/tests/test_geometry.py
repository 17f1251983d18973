"""Tests for the MISL center, its weights, tie-breaking and the grid oracle."""

import numpy as np
import pytest

from skillgeo.divergences import SkillSet, lsepin
from skillgeo.errors import (
    DimensionMismatch,
    Infeasible,
    MalformedSpec,
    NonConvergent,
)
from skillgeo.geometry import (
    check_center_certificate,
    check_necessary_conditions,
    grid_center_oracle,
    lsepin_tiebreak,
    misl_center,
    misl_weights,
)
from skillgeo.mdp import OccupancyMeasure, Polytope, polytope_from_mdp, random_mdp
from skillgeo.scenarios import (
    C6_CENTER,
    C6_RADIUS,
    V1,
    V2,
    V3,
    c3_polytope,
    c6_polytope,
)


def _polytope(*points):
    return Polytope(tuple(OccupancyMeasure(p) for p in points))


def _random_polytope(seed, num_states=3, num_actions=3):
    return polytope_from_mdp(
        random_mdp(np.random.default_rng(seed), num_states, num_actions)
    )


@pytest.fixture(scope="module")
def c6_solution():
    return misl_center(c6_polytope())


class TestMislCenter:
    def test_c6_center_and_radius(self, c6_solution):
        assert np.max(np.abs(c6_solution.center.probs - C6_CENTER)) <= 1e-3
        assert c6_solution.radius == pytest.approx(C6_RADIUS, abs=1e-3)

    def test_c6_active_set_and_weights(self, c6_solution):
        assert c6_solution.active == [0, 1]
        assert np.allclose(c6_solution.weights, [0.5, 0.5], atol=1e-4)
        assert c6_solution.trace.gap <= 1e-7

    def test_solution_is_a_skill_set_at_the_radius(self, c6_solution):
        ss = c6_solution.skillset(c6_polytope())
        assert np.allclose(ss.mixture.probs, c6_solution.center.probs, atol=1e-6)

    def test_singleton(self):
        solution = misl_center(_polytope(V3))
        assert solution.radius == 0.0
        assert solution.active == [0]
        assert np.allclose(solution.weights, [1.0])

    def test_segment_center_is_symmetric(self):
        solution = misl_center(_polytope(V1, V2))
        assert np.allclose(solution.center.probs, C6_CENTER, atol=1e-4)

    def test_certificate_holds(self, c6_solution):
        certified, worst = check_center_certificate(c6_solution, c6_polytope())
        assert certified
        assert worst <= 1e-6

    def test_progress_statuses(self):
        seen = []
        misl_center(c6_polytope(), on_progress=lambda p: seen.append(p.status))
        assert seen == ["warm_start", "ascent", "polish", "complete"]

    def test_unreachable_tolerance_raises(self):
        with pytest.raises(NonConvergent):
            misl_center(c3_polytope(), tol=-1.0, max_iter=5)

    def test_initial_weight_count_checked(self):
        with pytest.raises(DimensionMismatch):
            misl_center(c6_polytope(), initial=[1.0, 0.0])

    @pytest.mark.slow
    def test_random_starts_agree(self):
        """Twenty random starting weights reach the same center."""
        for seed in range(50):
            polytope = _random_polytope(seed)
            reference = misl_center(polytope).center.probs
            for start in range(20):
                center = misl_center(polytope, seed=start).center.probs
                assert np.max(np.abs(center - reference)) <= 1e-4


class TestGridOracle:
    def test_c6_agrees_with_solver(self, c6_solution):
        oracle = grid_center_oracle(c6_polytope())
        assert np.max(np.abs(oracle.probs - c6_solution.center.probs)) <= 5e-3

    @pytest.mark.slow
    def test_random_polytopes_agree_with_solver(self):
        for seed in range(5):
            polytope = _random_polytope(seed)
            oracle = grid_center_oracle(polytope)
            center = misl_center(polytope).center
            assert np.max(np.abs(oracle.probs - center.probs)) <= 5e-3

    def test_singleton(self):
        assert np.allclose(grid_center_oracle(_polytope(V2)).probs, V2)

    def test_rejects_four_states(self):
        with pytest.raises(DimensionMismatch):
            grid_center_oracle(c3_polytope())


class TestMislWeights:
    def test_c6_center(self):
        assert np.allclose(misl_weights([V1, V2], C6_CENTER), [0.5, 0.5], atol=1e-9)

    def test_center_outside_hull(self):
        with pytest.raises(Infeasible):
            misl_weights([V1, V3], C6_CENTER)

    def test_needs_a_vertex(self):
        with pytest.raises(MalformedSpec):
            misl_weights([], C6_CENTER)


class TestLsepinTiebreak:
    def test_duplicated_vertices(self):
        result = lsepin_tiebreak([V1, V1, V2, V2], C6_CENTER, C6_RADIUS)
        assert abs(result.weights[0] + result.weights[1] - 0.5) <= 1e-6
        uniform, _ = lsepin(SkillSet.uniform([V1, V1, V2, V2]))
        assert result.lsepin >= uniform - 1e-12
        assert result.lsepin == pytest.approx(C6_RADIUS, abs=1e-3)

    def test_weights_stay_on_the_feasible_slice(self):
        vertices = np.array([V1, V1, V2, V2])
        result = lsepin_tiebreak(vertices, C6_CENTER, C6_RADIUS)
        assert abs(result.weights.sum() - 1.0) <= 1e-12
        assert np.max(np.abs(result.weights @ vertices - C6_CENTER)) <= 1e-7
        recomputed, _ = lsepin(SkillSet(tuple(vertices), result.weights))
        assert result.lsepin == recomputed

    def test_beats_a_brute_force_grid(self):
        result = lsepin_tiebreak([V1, V1, V2, V2], C6_CENTER)
        best = -np.inf
        for a in np.linspace(0.0, 0.5, 101):
            for b in np.linspace(0.0, 0.5, 101):
                weights = np.array([a, 0.5 - a, b, 0.5 - b])
                best = max(best, lsepin(SkillSet((V1, V1, V2, V2), weights))[0])
        assert result.lsepin >= best - 1e-9

    def test_heuristic_is_feasible(self):
        result = lsepin_tiebreak([V1, V1, V2, V2], C6_CENTER)
        mixture = result.heuristic_weights @ np.array([V1, V1, V2, V2])
        assert np.allclose(mixture, C6_CENTER, atol=1e-8)
        assert np.allclose(result.heuristic_weights, 0.25, atol=1e-8)

    def test_unique_weights_returned_as_is(self):
        result = lsepin_tiebreak([V1, V2], C6_CENTER)
        assert np.allclose(result.weights, [0.5, 0.5], atol=1e-9)
        assert result.seeds == 1

    def test_vertex_off_the_radius(self):
        with pytest.raises(Infeasible):
            lsepin_tiebreak([V1, V2, V3], C6_CENTER, C6_RADIUS)


class TestNecessaryConditions:
    def test_duplicated_pair_meets_all(self):
        pair = SkillSet.uniform([V1, V2])
        duplicated = SkillSet.uniform([V1, V1, V2, V2])
        report = check_necessary_conditions([pair, duplicated], [0, 0])
        assert report.passed
        assert report.failed() == []

    def test_different_mixtures_fail(self):
        report = check_necessary_conditions(
            [SkillSet.uniform([V1, V2]), SkillSet.uniform([V1, V3])], [0, 0]
        )
        assert not report.passed
        assert "identical_mixture" in report.failed()

    def test_needs_two_sets(self):
        with pytest.raises(MalformedSpec):
            check_necessary_conditions([SkillSet.uniform([V1])], [0])

    def test_one_shared_index_per_set(self):
        ss = SkillSet.uniform([V1, V2])
        with pytest.raises(DimensionMismatch):
            check_necessary_conditions([ss, ss], [0])
