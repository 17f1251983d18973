"""
Skillgeo Scenarios - Embedded worked examples and their self-checks

Every scenario builds its fixture from constants in this module, runs the
relevant solvers and compares the results with the inequality or value the
example is meant to exhibit.

Features:
- 3-state worked MDP (golden numbers)
- Higher-WSEP/higher-MAC, incomplete-WSEP and KLSEP reversal fixtures
- Uniform-weight duplicated skill set
- SPWD on a many-vertex polygon
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .adaptation import mac
from .divergences import (
    SkillSet,
    kl,
    lsepin,
    skill_mutual_information,
    wasserstein,
    wsep,
)
from .geometry import misl_center
from .mdp import OccupancyMeasure, Polytope, TabularMdp, load_mdp, polytope_from_mdp
from .wdsl import PathologyReport, klsep_pathology_demo, maximize_wsep, spwd

# Vertices of the 3-state worked MDP, one per action
V1 = (0.2, 0.7, 0.1)
V2 = (0.2, 0.1, 0.7)
V3 = (0.4, 0.3, 0.3)
C6_CENTER = (0.2, 0.4, 0.4)
C6_RADIUS = 0.2531

# Four vertices where the most separated pair is not the best-covering pair
C5_VERTICES = {
    "a": (0.9, 0.0, 0.0, 0.1),
    "b": (0.2, 0.4, 0.4, 0.0),
    "c": (0.0, 1.0, 0.0, 0.0),
    "d": (0.1, 0.6, 0.2, 0.1),
}

# One isolated vertex and three vertices bunched near each other
C3_VERTICES = (
    (1.0, 0.0, 0.0, 0.0),
    (0.0, 1.0, 0.0, 0.0),
    (0.0, 0.7, 0.3, 0.0),
    (0.0, 0.9, 0.0, 0.1),
)

POLYGON_SIZE = 48
POLYGON_RADIUS = 0.2


def c6_mdp_spec(occupancy: str = "stationary", gamma: float = 0.99) -> Dict[str, Any]:
    """Three states, three actions; action a moves to the same row from every state."""
    rows = [list(V1), list(V2), list(V3)]
    return {
        "num_states": 3,
        "num_actions": 3,
        "transitions": [[row] * 3 for row in rows],
        "initial": [1 / 3, 1 / 3, 1 / 3],
        "gamma": gamma,
        "occupancy": occupancy,
    }


def c6_mdp(occupancy: str = "stationary") -> TabularMdp:
    return load_mdp(c6_mdp_spec(occupancy))


def c6_polytope() -> Polytope:
    return polytope_from_mdp(c6_mdp())


def duplicated_skillset() -> SkillSet:
    """Two copies each of the two MISL vertices, uniformly weighted."""
    return SkillSet.uniform([V1, V1, V2, V2])


def c5_polytope() -> Polytope:
    return Polytope(tuple(OccupancyMeasure(v) for v in C5_VERTICES.values()))


def c3_polytope() -> Polytope:
    return Polytope(tuple(OccupancyMeasure(v) for v in C3_VERTICES))


def polygon_points(
    size: int = POLYGON_SIZE, radius: float = POLYGON_RADIUS
) -> List[np.ndarray]:
    """Points on a circle around the uniform distribution in the 3-simplex plane."""
    e1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    e2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)
    angles = 2.0 * np.pi * np.arange(size) / size
    center = np.full(3, 1.0 / 3.0)
    return [center + radius * (np.cos(t) * e1 + np.sin(t) * e2) for t in angles]


def concyclic_fixture(
    peak: float = 0.6, dip: float = 0.15
) -> Dict[str, List[np.ndarray]]:
    """
    Skills are the permutations of [peak, b, b] and targets those of
    [dip, d, d]. Both sit on KL circles around the uniform mixture.
    """

    def cyclic(first):
        rest = (1.0 - first) / 2.0
        return [np.roll([first, rest, rest], i) for i in range(3)]

    return {"skills": cyclic(peak), "targets": cyclic(dip)}


# ---------------------------------------------------------------------------
# Self-checks
# ---------------------------------------------------------------------------


@dataclass
class ScenarioCheck:
    name: str
    observed: Any
    expected: Any
    passed: bool


@dataclass
class ScenarioReport:
    """Outcome of one scenario."""

    name: str
    checks: List[ScenarioCheck] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    pathology: Optional[PathologyReport] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def close(self, name: str, observed: float, expected: float, tol: float) -> None:
        passed = bool(abs(observed - expected) <= tol)
        self.checks.append(ScenarioCheck(name, observed, expected, passed))

    def holds(self, name: str, observed: Any, expected: Any, passed: bool) -> None:
        self.checks.append(ScenarioCheck(name, observed, expected, bool(passed)))


def scenario_c6() -> ScenarioReport:
    report = ScenarioReport("c6")
    polytope = c6_polytope()
    solution = misl_center(polytope)
    center = solution.center.probs

    report.holds("vertices", len(polytope), 3, len(polytope) == 3)
    report.close("center", float(np.max(np.abs(center - C6_CENTER))), 0.0, 1e-3)
    report.close("radius", solution.radius, C6_RADIUS, 1e-3)
    report.close("kl_v3_center", kl(V3, center), 0.1046, 1e-3)
    report.close("w_v1_v2", wasserstein(V1, V2).cost, 0.6, 1e-9)
    report.close("w_v1_v3", wasserstein(V1, V3).cost, 0.4, 1e-9)
    spread = wsep(SkillSet.uniform([V1, V2, V3]))
    doubled = wsep(SkillSet.uniform([V1, V1, V2]))
    report.close("wsep_spread", spread, 2.8, 1e-9)
    report.close("wsep_doubled", doubled, 2.4, 1e-9)
    report.details = {"center": center.tolist(), "radius": solution.radius}
    return report


def scenario_d() -> ScenarioReport:
    report = ScenarioReport("d")
    duplicated = duplicated_skillset()
    pair = SkillSet.uniform([V1, V2])
    info = skill_mutual_information(duplicated)
    duplicated_lsepin, _ = lsepin(duplicated)
    pair_lsepin, _ = lsepin(pair)

    report.close("mutual_information", info, C6_RADIUS, 1e-3)
    report.close("lsepin_duplicated", duplicated_lsepin, 0.0823, 1e-3)
    report.holds(
        "lsepin_drops",
        duplicated_lsepin,
        pair_lsepin,
        duplicated_lsepin < pair_lsepin,
    )
    return report


def scenario_c5() -> ScenarioReport:
    report = ScenarioReport("c5")
    polytope = c5_polytope()
    a, _, c, d = polytope.vertices
    best = maximize_wsep(polytope, k=2)
    ac, ad = SkillSet.uniform([a, c]), SkillSet.uniform([a, d])

    report.holds("wsep_optimal_pair", best.indices, [0, 2], best.indices == [0, 2])
    report.holds("lower_wsep", wsep(ad), wsep(ac), wsep(ad) < wsep(ac))
    covered, skewed = mac(ac, polytope), mac(ad, polytope)
    report.holds("higher_mac", covered, skewed, covered > skewed)
    return report


def scenario_c3() -> ScenarioReport:
    report = ScenarioReport("c3")
    polytope = c3_polytope()
    best = maximize_wsep(polytope, k=len(polytope))
    every_vertex = wsep(SkillSet.uniform(polytope.vertices))

    missing = sorted(set(range(len(polytope))) - set(best.indices))
    report.holds("omits_vertex", missing, "nonempty", bool(missing))
    report.holds(
        "beats_all_vertices", best.value, every_vertex, best.value > every_vertex
    )
    report.details = {"placements": best.indices, "wsep": best.value}
    return report


def scenario_c7() -> ScenarioReport:
    report = ScenarioReport("c7")
    demo = klsep_pathology_demo()
    report.holds("found", demo.found, True, demo.found)
    report.holds(
        "klsep_prefers_near",
        demo.klsep_near,
        demo.klsep_spread,
        demo.klsep_near > demo.klsep_spread,
    )
    report.holds(
        "wsep_prefers_spread",
        demo.wsep_near,
        demo.wsep_spread,
        demo.wsep_near < demo.wsep_spread,
    )
    report.details = {"epsilon": demo.epsilon, "delta": demo.delta}
    report.pathology = demo
    return report


def scenario_spwd() -> ScenarioReport:
    report = ScenarioReport("spwd")
    points = polygon_points()
    everything = spwd(SkillSet.uniform(points))
    pair = spwd(SkillSet.uniform([points[0], points[POLYGON_SIZE // 2]]))
    report.holds("pair_beats_all", pair, everything, pair > everything)
    report.details = {"all_vertices": everything, "antipodal_pair": pair}
    return report


SCENARIOS: Dict[str, Callable[[], ScenarioReport]] = {
    "c3": scenario_c3,
    "c5": scenario_c5,
    "c6": scenario_c6,
    "c7": scenario_c7,
    "d": scenario_d,
    "spwd": scenario_spwd,
}


def run_scenario(name: str) -> ScenarioReport:
    """Run one named scenario."""
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise ValueError(
            f"Unknown scenario: {name}. Use one of {', '.join(SCENARIOS)}."
        ) from None
    return builder()


def scenario_to_dict(
    report: ScenarioReport, extra: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    doc = {
        "scenario": report.name,
        "passed": report.passed,
        "checks": [
            {
                "name": c.name,
                "observed": c.observed,
                "expected": c.expected,
                "passed": c.passed,
            }
            for c in report.checks
        ],
        "details": report.details,
    }
    if extra:
        doc.update(extra)
    return doc
