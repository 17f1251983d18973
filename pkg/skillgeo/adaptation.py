"""
Skillgeo Adaptation - Adaptation costs of a skill set and their bounds

A downstream task is represented by its optimal feasible state distribution
(a polytope vertex). Adaptation cost is the divergence from the closest
learned skill to that target.

Features:
- Task families from polytope vertices and explicit rewards
- WAC, MAC, C_z / D_z and the IC_z expression
- Bound reports for the WAC corollary, three MAC variants and the
  equidistant-target lemma
- Randomized bound suites over seeded MDPs
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .divergences import (
    CostMatrix,
    SkillSet,
    kl,
    skill_mutual_information,
    wasserstein,
    wsep,
)
from .errors import AllDiscovered, DegenerateWeight, Infeasible, NotMislSolution
from .geometry import MislSolution, misl_center
from .mdp import (
    Distribution,
    OccupancyMeasure,
    Polytope,
    as_probs,
    extreme_points,
    hull_membership,
    optimal_vertex,
    polytope_from_mdp,
    random_mdp,
)
from .progress import ProgressCallback, notify

# measured <= bound + SATISFIED_TOL counts as satisfied
SATISFIED_TOL = 1e-7
# Skills within this L∞ distance of a vertex discover it
DISCOVERY_TOL = 1e-6
# Allowed gap between I(S;Z) and the MISL radius
MISL_RADIUS_TOL = 1e-4

MAC_VARIANTS = ("mac_stated_tight", "mac_stated_relaxed", "mac_proof_derived")


@dataclass(frozen=True)
class TargetSource:
    """Where a task target came from."""

    kind: str  # "polytope_vertex" or "explicit_reward"
    reward: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True, eq=False)
class TaskFamily:
    """Optimal feasible state distributions of a set of downstream tasks."""

    targets: Tuple[OccupancyMeasure, ...]
    provenance: Tuple[TargetSource, ...]

    def __len__(self) -> int:
        return len(self.targets)

    def validate(self, polytope: Polytope, tol: Optional[float] = None) -> None:
        """Raise Infeasible when a target is outside the polytope."""
        tol = config.resolve(tol, "weights_tol")
        for i, t in enumerate(self.targets):
            if not hull_membership(t, polytope.vertices, tol=tol).inside:
                raise Infeasible(f"target {i} lies outside the polytope")


@dataclass
class BoundReport:
    """One bound, the quantity it bounds, and whether it held."""

    variant: str
    bound: float
    measured: float
    satisfied: bool
    slack: float
    witness: Optional[int] = None
    tags: List[str] = field(default_factory=list)


@dataclass
class IcResult:
    """Maximum of the IC_z expression over R_z; ``empty`` when R_z is empty."""

    value: Optional[float]
    witness: Optional[int]

    @property
    def empty(self) -> bool:
        return self.value is None


def _report(
    variant: str,
    bound: float,
    measured: float,
    witness: Optional[int] = None,
    tags: Optional[List[str]] = None,
) -> BoundReport:
    return BoundReport(
        variant=variant,
        bound=float(bound),
        measured=float(measured),
        satisfied=bool(measured <= bound + SATISFIED_TOL),
        slack=float(bound - measured),
        witness=witness,
        tags=list(tags or []),
    )


def _first_max(values: np.ndarray, tie_tol: float) -> int:
    """Lowest index whose value is within tie_tol of the max (+inf aware)."""
    top = values.max()
    if np.isinf(top):
        return int(np.flatnonzero(values == top)[0])
    return int(np.flatnonzero(values >= top - tie_tol)[0])


def _farthest(row: np.ndarray, column: int, tie_tol: float) -> bool:
    """Whether entry ``column`` attains the row max within tie_tol."""
    top = row.max()
    if np.isinf(top):
        return bool(row[column] == top)
    return bool(row[column] >= top - tie_tol)


# ---------------------------------------------------------------------------
# Task families
# ---------------------------------------------------------------------------


def task_targets(polytope: Polytope) -> TaskFamily:
    """Every vertex of the polytope as a task target."""
    return TaskFamily(
        targets=tuple(polytope.vertices),
        provenance=tuple(TargetSource("polytope_vertex") for _ in polytope.vertices),
    )


def add_reward_target(
    tf: TaskFamily, polytope: Polytope, reward: Sequence[float]
) -> TaskFamily:
    """Append the optimal vertex of ``reward`` as an explicit-reward target."""
    index, _ = optimal_vertex(polytope, reward)
    source = TargetSource("explicit_reward", tuple(float(r) for r in reward))
    return TaskFamily(
        targets=tf.targets + (polytope.vertices[index],),
        provenance=tf.provenance + (source,),
    )


# ---------------------------------------------------------------------------
# Adaptation costs
# ---------------------------------------------------------------------------


def _skill_target_kl(ss: SkillSet, tf: TaskFamily) -> Tuple[List[int], np.ndarray]:
    """Active skill indices and K[t, i] = kl(skill active[i], target t)."""
    active = ss.active()
    K = np.array(
        [[kl(ss.skills[z], t) for z in active] for t in tf.targets], dtype=float
    ).reshape(len(tf.targets), len(active))
    return active, K


def wac(ss: SkillSet, tf: TaskFamily) -> Tuple[float, int]:
    """
    Worst-case adaptation cost: max over targets of the min KL from a
    learned skill. +inf when some target is unreachable from every skill.

    Returns:
        (value, index of the worst target)
    """
    _, K = _skill_target_kl(ss, tf)
    costs = K.min(axis=1)
    worst = _first_max(costs, config.get("tie_tol"))
    return float(costs[worst]), worst


def _discovered(ss: SkillSet, polytope: Polytope) -> List[bool]:
    skills = [ss.skills[z].probs for z in ss.active()]
    return [
        any(np.max(np.abs(v.probs - s)) <= DISCOVERY_TOL for s in skills)
        for v in polytope.vertices
    ]


def mac(ss: SkillSet, polytope: Polytope, c: Optional[CostMatrix] = None) -> float:
    """
    Mean adaptation cost: mean over undiscovered vertices of the smallest
    Wasserstein distance from a learned skill.

    Raises:
        AllDiscovered: every vertex is matched by a learned skill
    """
    found = _discovered(ss, polytope)
    undiscovered = [v for v, hit in zip(polytope.vertices, found) if not hit]
    if not undiscovered:
        raise AllDiscovered("every vertex is a learned skill; MAC is undefined")
    active = ss.active()
    costs = [
        min(wasserstein(ss.skills[z], v, c).cost for z in active) for v in undiscovered
    ]
    return float(np.mean(costs))


def cz_dz(ss: SkillSet, z: int, target: Distribution) -> Tuple[float, float]:
    """C_z = I(S;Z) + KL(p(S) ‖ target) and D_z = KL(p(S|z) ‖ target)."""
    c_z = skill_mutual_information(ss) + kl(ss.mixture, target)
    d_z = kl(ss.skills[z], target)
    return c_z, d_z


def ic_expression(ss: SkillSet, z: int, target: Distribution) -> float:
    """
    (C_z − p(z)·D_z) / (1 − p(z)) at one target.

    Equals the weighted mean of KL(p(S|z') ‖ target) over the other skills,
    which is used when an infinite KL would turn the difference into inf − inf.

    Raises:
        DegenerateWeight: p(z) = 1
    """
    pz = float(ss.weights[z])
    if pz >= 1.0:
        raise DegenerateWeight(f"IC_z is undefined for skill {z} with p(z) = 1")
    c_z, d_z = cz_dz(ss, z, target)
    if np.isfinite(c_z) and np.isfinite(d_z):
        return (c_z - pz * d_z) / (1.0 - pz)
    others = sum(
        ss.weights[i] * kl(ss.skills[i], target) for i in ss.active() if i != z
    )
    return float(others / (1.0 - pz))


def ic_z(
    ss: SkillSet, z: int, tf: TaskFamily, tie_tol: Optional[float] = None
) -> IcResult:
    """
    Max of the IC_z expression over R_z, the targets for which skill z is
    (one of) the farthest learned skills in KL.

    A target belongs to R_z when kl(p(S|z), t) is within tie_tol of the
    largest KL over learned skills, so tied targets count for every tied skill.

    Raises:
        DegenerateWeight: p(z) = 1
    """
    tie_tol = config.resolve(tie_tol, "tie_tol")
    if float(ss.weights[z]) >= 1.0:
        raise DegenerateWeight(f"IC_z is undefined for skill {z} with p(z) = 1")
    active, K = _skill_target_kl(ss, tf)
    column = active.index(z)

    best_value, best_target = None, None
    for t, row in enumerate(K):
        if not _farthest(row, column, tie_tol):
            continue
        value = ic_expression(ss, z, tf.targets[t])
        if best_value is None or value > best_value + tie_tol:
            best_value, best_target = value, t
    return IcResult(value=best_value, witness=best_target)


def mixture_kl_identity_residual(ss: SkillSet, target: Distribution) -> float:
    """|Σ_z p(z)·KL(p(S|z) ‖ t) − I(S;Z) − KL(p(S) ‖ t)|; zero for every t."""
    weighted = sum(ss.weights[z] * kl(ss.skills[z], target) for z in ss.active())
    return float(abs(weighted - skill_mutual_information(ss) - kl(ss.mixture, target)))


# ---------------------------------------------------------------------------
# Bound reports
# ---------------------------------------------------------------------------


def wac_bound_corollary(
    ss: SkillSet, tf: TaskFamily, solution: Optional[MislSolution] = None
) -> BoundReport:
    """
    WAC of a MISL solution against max over learned z of IC_z.

    ``solution`` is the MISL solution of the polytope spanned by the targets;
    it is solved here when not supplied.

    Raises:
        NotMislSolution: I(S;Z) differs from the MISL radius by more than 1e-4
    """
    if solution is None:
        solution = misl_center(extreme_points(list(tf.targets)))
    info = skill_mutual_information(ss)
    if abs(info - solution.radius) > MISL_RADIUS_TOL:
        raise NotMislSolution(
            f"I(S;Z) = {info:.6g} but the MISL radius is {solution.radius:.6g}"
        )

    measured, worst = wac(ss, tf)
    active = ss.active()
    if len(active) == 1:
        _, K = _skill_target_kl(ss, tf)
        return _report("wac_corollary", K.max(), measured, worst, ["single_skill"])

    bound, witness = -np.inf, None
    for z in active:
        result = ic_z(ss, z, tf)
        if not result.empty and result.value > bound:
            bound, witness = result.value, result.witness
    return _report("wac_corollary", bound, measured, witness)


def mac_bounds(
    ss: SkillSet, polytope: Polytope, c: Optional[CostMatrix] = None
) -> List[BoundReport]:
    """
    Three upper bounds on MAC built from vertex-to-skill distance sums.

    With L^z = Σ_v W(v, p(S|z)), L = max over vertices v' of Σ_v W(v, v'),
    n_u undiscovered vertices and n_z learned skills:

    - mac_stated_tight: (Σ_z L^z − (n_z − 1)·WSEP) / (n_u·n_z)
    - mac_stated_relaxed: (n_z·L − (n_z − 1)·WSEP) / (n_u·n_z)
    - mac_proof_derived: (Σ_z L^z − WSEP) / (n_u·n_z)

    Raises:
        AllDiscovered: no undiscovered vertex
    """
    measured = mac(ss, polytope, c)
    active = ss.active()
    n_z = len(active)
    n_u = sum(not hit for hit in _discovered(ss, polytope))

    L_z = sum(
        wasserstein(v, ss.skills[z], c).cost for z in active for v in polytope.vertices
    )
    vertex_sums = [
        sum(wasserstein(v, w, c).cost for v in polytope.vertices)
        for w in polytope.vertices
    ]
    L = max(vertex_sums)
    separability = wsep(ss, c)
    scale = n_u * n_z

    return [
        _report("mac_stated_tight", (L_z - (n_z - 1) * separability) / scale, measured),
        _report(
            "mac_stated_relaxed", (n_z * L - (n_z - 1) * separability) / scale, measured
        ),
        _report("mac_proof_derived", (L_z - separability) / scale, measured),
    ]


def lemma_b1_bound(
    ss: SkillSet, tf: TaskFamily, assumption_tol: Optional[float] = None
) -> BoundReport:
    """
    WAC against max_z (C_m − p(z)·D_m) / (1 − p(z)).

    C_m = I(S;Z) + C where C = KL(p(S) ‖ t) should be the same for every
    target, and D_m = min over R_z of KL(p(S|z) ‖ t) should be the same for
    every z. When either fails by more than assumption_tol the report is
    tagged assumptions_unmet and computed with the largest C and the
    smallest D_m observed.
    """
    assumption_tol = config.resolve(assumption_tol, "assumption_tol")
    tie_tol = config.get("tie_tol")
    measured, worst = wac(ss, tf)
    tags: List[str] = []

    C_values = np.array([kl(ss.mixture, t) for t in tf.targets])
    C_m = skill_mutual_information(ss) + float(C_values.max())
    if np.ptp(C_values) > assumption_tol:
        tags.append("assumptions_unmet")

    active, K = _skill_target_kl(ss, tf)
    d_min: Dict[int, float] = {}
    for column, z in enumerate(active):
        rows = [t for t, row in enumerate(K) if _farthest(row, column, tie_tol)]
        if rows:
            d_min[z] = float(K[rows, column].min())
    if d_min and np.ptp(list(d_min.values())) > assumption_tol:
        if "assumptions_unmet" not in tags:
            tags.append("assumptions_unmet")

    usable = [z for z in d_min if float(ss.weights[z]) < 1.0]
    if not usable:
        tags.append("degenerate")
        return _report("lemma_b1", measured, measured, worst, tags)

    D_m = min(d_min.values())
    bound = max((C_m - ss.weights[z] * D_m) / (1.0 - ss.weights[z]) for z in usable)
    return _report("lemma_b1", bound, measured, worst, tags)


# ---------------------------------------------------------------------------
# Randomized suites
# ---------------------------------------------------------------------------


@dataclass
class BoundSuiteResult:
    """Per-variant satisfaction counts over a seed sweep."""

    seeds: List[int]
    satisfied: Dict[str, int]
    total: Dict[str, int]
    reports: Dict[int, List[BoundReport]]

    def rate(self, variant: str) -> float:
        total = self.total.get(variant, 0)
        return self.satisfied.get(variant, 0) / total if total else float("nan")


def bound_reports_for_seed(
    seed: int,
    num_states: int = 3,
    num_actions: int = 3,
    occupancy_kind: str = "discounted",
    c: Optional[CostMatrix] = None,
) -> List[BoundReport]:
    """
    Corollary and MAC bounds on one seeded random MDP.

    The corollary is evaluated on the exact MISL solution. The MAC bounds use
    every vertex but the last as uniformly weighted skills.
    """
    rng = np.random.default_rng(seed)
    mdp = random_mdp(rng, num_states, num_actions, occupancy_kind=occupancy_kind)
    polytope = polytope_from_mdp(mdp)
    tf = task_targets(polytope)

    solution = misl_center(polytope)
    reports = [wac_bound_corollary(solution.skillset(polytope), tf, solution)]
    if len(polytope) >= 2:
        held_out = SkillSet.uniform(polytope.vertices[:-1])
        reports.extend(mac_bounds(held_out, polytope, c))
    return reports


def run_bound_suite(
    seeds: Sequence[int],
    num_states: int = 3,
    num_actions: int = 3,
    occupancy_kind: str = "discounted",
    c: Optional[CostMatrix] = None,
    workers: int = 1,
    on_progress: Optional[ProgressCallback] = None,
) -> BoundSuiteResult:
    """Run bound_reports_for_seed over ``seeds`` and count satisfied variants."""
    seeds = list(seeds)

    def run(seed):
        return seed, bound_reports_for_seed(
            seed, num_states, num_actions, occupancy_kind, c
        )

    reports: Dict[int, List[BoundReport]] = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for done, (seed, rows) in enumerate(executor.map(run, seeds), 1):
                reports[seed] = rows
                notify(on_progress, "seed", done / len(seeds), f"Seed {seed}")
    else:
        for done, seed in enumerate(seeds, 1):
            reports[seed] = run(seed)[1]
            notify(on_progress, "seed", done / len(seeds), f"Seed {seed}")

    satisfied: Dict[str, int] = {}
    total: Dict[str, int] = {}
    for seed in seeds:
        for row in reports[seed]:
            total[row.variant] = total.get(row.variant, 0) + 1
            satisfied[row.variant] = satisfied.get(row.variant, 0) + int(row.satisfied)

    notify(on_progress, "complete", 1.0, f"{len(seeds)} seeds")
    return BoundSuiteResult(seeds=seeds, satisfied=satisfied, total=total, reports=reports)
