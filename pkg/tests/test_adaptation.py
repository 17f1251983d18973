"""Tests for adaptation costs and the bounds on them."""

import numpy as np
import pytest

from skillgeo.adaptation import (
    MAC_VARIANTS,
    TargetSource,
    TaskFamily,
    add_reward_target,
    bound_reports_for_seed,
    cz_dz,
    ic_expression,
    ic_z,
    lemma_b1_bound,
    mac,
    mac_bounds,
    mixture_kl_identity_residual,
    run_bound_suite,
    task_targets,
    wac,
    wac_bound_corollary,
)
from skillgeo.divergences import SkillSet, indicator_mi, kl
from skillgeo.errors import AllDiscovered, DegenerateWeight, Infeasible, NotMislSolution
from skillgeo.geometry import check_necessary_conditions, misl_center
from skillgeo.mdp import OccupancyMeasure
from skillgeo.scenarios import (
    C6_CENTER,
    V1,
    V2,
    V3,
    c6_polytope,
    concyclic_fixture,
    duplicated_skillset,
)


def _family(*targets):
    return TaskFamily(
        targets=tuple(OccupancyMeasure(t) for t in targets),
        provenance=tuple(TargetSource("polytope_vertex") for _ in targets),
    )


@pytest.fixture
def pair():
    return SkillSet.uniform([V1, V2])


@pytest.fixture
def c6_targets():
    return task_targets(c6_polytope())


class TestTaskFamily:
    def test_vertices_become_targets(self, c6_targets):
        assert len(c6_targets) == 3
        assert all(s.kind == "polytope_vertex" for s in c6_targets.provenance)

    def test_reward_target_is_optimal_vertex(self, c6_targets):
        tf = add_reward_target(c6_targets, c6_polytope(), [0.0, 0.0, 1.0])
        assert len(tf) == 4
        assert np.allclose(tf.targets[-1].probs, V2)
        assert tf.provenance[-1].reward == (0.0, 0.0, 1.0)

    def test_validate_rejects_outside_target(self):
        tf = _family([1.0, 0.0, 0.0])
        with pytest.raises(Infeasible):
            tf.validate(c6_polytope())


class TestWac:
    def test_misl_pair(self, pair, c6_targets):
        value, worst = wac(pair, c6_targets)
        assert value == pytest.approx(0.3446, abs=1e-4)
        assert worst == 2

    def test_unreachable_target_is_infinite(self):
        ss = SkillSet.uniform([[0.5, 0.5, 0.0]])
        value, _ = wac(ss, _family([0.0, 0.0, 1.0]))
        assert value == np.inf

    def test_adding_a_skill_never_raises_wac(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            skills = rng.dirichlet(np.ones(4), size=4)
            weights = rng.uniform(0.1, 1.0, size=4)
            tf = _family(*rng.dirichlet(np.ones(4), size=5))
            smaller = SkillSet(tuple(skills[:3]), weights[:3] / weights[:3].sum())
            larger = SkillSet(tuple(skills), weights / weights.sum())
            assert wac(larger, tf)[0] <= wac(smaller, tf)[0] + 1e-12


class TestMac:
    def test_pair_against_third_vertex(self, pair):
        assert mac(pair, c6_polytope()) == pytest.approx(0.4)

    def test_single_skill(self):
        assert mac(SkillSet.uniform([V1]), c6_polytope()) == pytest.approx(0.5)

    def test_all_discovered(self):
        with pytest.raises(AllDiscovered):
            mac(SkillSet.uniform([V1, V2, V3]), c6_polytope())

    def test_bounds_on_pair(self, pair):
        reports = mac_bounds(pair, c6_polytope())
        assert [r.variant for r in reports] == list(MAC_VARIANTS)
        assert all(r.satisfied for r in reports)
        proof_derived = reports[2]
        assert proof_derived.bound == pytest.approx(0.4)
        assert proof_derived.slack == pytest.approx(0.0, abs=1e-9)


class TestIc:
    def test_cz_is_half_dz_at_the_other_vertex(self, pair):
        c_z, d_z = cz_dz(pair, 0, V2)
        assert d_z > 0
        assert c_z == pytest.approx(0.5 * d_z, abs=1e-12)

    def test_expression_vanishes_at_other_vertex(self, pair):
        assert ic_expression(pair, 0, V2) == pytest.approx(0.0, abs=1e-12)

    def test_max_over_farthest_targets(self, pair, c6_targets):
        result = ic_z(pair, 0, c6_targets)
        assert result.value == pytest.approx(0.3446, abs=1e-4)
        assert result.witness == 2

    def test_empty_when_never_farthest(self):
        ss = SkillSet.uniform([V3, V1])
        # V3 is the target itself, so it is never the farthest skill
        assert ic_z(ss, 0, _family(V3)).empty

    def test_full_weight_raises(self):
        ss = SkillSet([V1, V2], np.array([1.0, 0.0]))
        with pytest.raises(DegenerateWeight):
            ic_expression(ss, 0, V3)

    def test_identity_residual(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            skills = rng.dirichlet(np.ones(4), size=3)
            weights = rng.dirichlet(np.ones(3))
            target = rng.dirichlet(np.ones(4))
            ss = SkillSet(tuple(skills), weights)
            assert mixture_kl_identity_residual(ss, target) <= 1e-9


class TestSharedSkillComparison:
    """The set where the shared skill carries more indicator MI has the smaller IC bound."""

    @pytest.fixture
    def sets(self, pair):
        return pair, duplicated_skillset()

    def test_sets_are_comparable(self, sets):
        assert check_necessary_conditions(list(sets), [0, 0]).passed

    def test_more_indicator_mi_means_more_weight(self, sets):
        pair, duplicated = sets
        assert indicator_mi(pair, 0) > indicator_mi(duplicated, 0)
        assert pair.weights[0] > duplicated.weights[0] + 1e-9

    def test_ic_bound_no_larger_where_the_skill_is_farthest(self, sets):
        pair, duplicated = sets
        rng = np.random.default_rng(31)
        targets = [V2, V3, C6_CENTER] + list(rng.dirichlet(np.ones(3), size=300))
        checked = 0
        for t in targets:
            if kl(V1, t) < kl(V2, t):
                continue
            checked += 1
            assert ic_expression(pair, 0, t) <= ic_expression(duplicated, 0, t) + 1e-12
        assert checked >= 3


class TestWacCorollary:
    def test_c6_misl_solution(self, pair, c6_targets):
        solution = misl_center(c6_polytope())
        report = wac_bound_corollary(pair, c6_targets, solution)
        assert report.satisfied
        assert report.bound == pytest.approx(0.3446, abs=1e-4)
        assert report.measured == pytest.approx(0.3446, abs=1e-4)

    def test_solves_when_no_solution_given(self, pair, c6_targets):
        assert wac_bound_corollary(pair, c6_targets).satisfied

    def test_not_a_misl_solution(self, c6_targets):
        with pytest.raises(NotMislSolution):
            wac_bound_corollary(SkillSet.uniform([V1, V3]), c6_targets)


class TestLemmaB1:
    def test_concyclic_fixture_is_tight(self):
        fixture = concyclic_fixture()
        ss = SkillSet.uniform(fixture["skills"])
        report = lemma_b1_bound(ss, _family(*fixture["targets"]))
        assert "assumptions_unmet" not in report.tags
        assert report.satisfied
        assert report.bound == pytest.approx(report.measured, abs=1e-9)

    def test_c6_flags_unmet_assumptions(self, pair, c6_targets):
        report = lemma_b1_bound(pair, c6_targets)
        assert "assumptions_unmet" in report.tags


class TestBoundSuite:
    def test_single_seed_variants(self):
        reports = bound_reports_for_seed(0)
        assert reports[0].variant == "wac_corollary"
        assert {r.variant for r in reports[1:]} <= set(MAC_VARIANTS)

    def test_progress_reaches_complete(self):
        seen = []
        run_bound_suite([0, 1], on_progress=lambda p: seen.append(p.status))
        assert seen == ["seed", "seed", "complete"]

    @pytest.mark.slow
    def test_corollary_and_proof_derived_always_hold(self):
        result = run_bound_suite(range(100), workers=4)
        assert result.rate("wac_corollary") == 1.0
        assert result.satisfied["mac_proof_derived"] == result.total["mac_proof_derived"]
