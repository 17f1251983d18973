"""
Skillgeo WDSL - Wasserstein-distance skill learning at desk scale

Features:
- AWD objective and its maximization over vertex subsets
- WSEP maximization over vertex multisets (exhaustive or greedy)
- Exact PWSEP projection as one joint transport LP
- PWSEP vertex discovery with tie safeguard, pruning and parallel scoring
- SPWD and the KLSEP preference-reversal demonstrator
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .divergences import (
    CostMatrix,
    SkillSet,
    TransportPlan,
    klsep,
    pairwise_wasserstein,
    resolve_cost,
    wasserstein,
    wsep,
)
from .errors import DimensionMismatch, MalformedSpec, TooLarge
from .lp import solve_lp, transport_lp
from .mdp import (
    Distribution,
    OccupancyMeasure,
    Polytope,
    as_probs,
    enumerate_policy_occupancies,
    extreme_points,
    hull_membership,
    random_mdp,
)
from .progress import ProgressCallback, notify

# Candidates within this distance of the best score count as tied
TIE_TOL = 1e-9
# Discovered points must differ by at least this much in L∞
DISTINCT_TOL = 1e-6
AWD_STEPS = 200


@dataclass
class PlacementResult:
    """Skills placed at polytope vertices by an objective maximizer."""

    skillset: SkillSet
    value: float
    indices: List[int]
    heuristic: bool = False


@dataclass
class ProjectionResult:
    """Wasserstein distance from a point to the hull of a basis."""

    distance: float
    weights: np.ndarray
    plan: TransportPlan


@dataclass
class PwsepStep:
    iteration: int
    candidate: int
    distance: float
    weights: List[float]
    tie: bool = False


@dataclass
class PwsepState:
    """Discovered points of a PWSEP run and its per-iteration history."""

    discovered: List[OccupancyMeasure] = field(default_factory=list)
    indices: List[int] = field(default_factory=list)
    iteration: int = 0
    last_projected_distance: float = float("inf")
    history: List[PwsepStep] = field(default_factory=list)
    cost: Dict[str, Any] = field(default_factory=dict)


@dataclass
class PathologyReport:
    """KLSEP and WSEP of a near-duplicate and a spread skill configuration."""

    near: List[List[float]] = field(default_factory=list)
    spread: List[List[float]] = field(default_factory=list)
    klsep_near: float = 0.0
    klsep_spread: float = 0.0
    wsep_near: float = 0.0
    wsep_spread: float = 0.0
    epsilon: float = 0.0
    delta: float = 0.0
    found: bool = False

    @property
    def empty(self) -> bool:
        return not self.near


# ---------------------------------------------------------------------------
# AWD
# ---------------------------------------------------------------------------


def awd(ss: SkillSet, c: Optional[CostMatrix] = None) -> float:
    """Average Wasserstein distance Σ_z p(z)·W(p(S|z), p(S))."""
    return float(
        sum(ss.weights[z] * wasserstein(ss.skills[z], ss.mixture, c).cost for z in ss.active())
    )


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - cumulative / ranks > 0)[-1]
    return np.maximum(v - cumulative[rho] / (rho + 1), 0.0)


def _awd_value(V: np.ndarray, w: np.ndarray, costs: np.ndarray) -> float:
    mixture = w @ V
    return float(sum(w[z] * transport_lp(p, mixture, costs)[1] for z, p in enumerate(V)))


def _awd_gradient(V: np.ndarray, w: np.ndarray, costs: np.ndarray) -> np.ndarray:
    """A supergradient of AWD in the weights ``w``."""
    mixture = w @ V
    grad = np.zeros_like(w)
    for z, p in enumerate(V):
        _, cost, potentials = transport_lp(p, mixture, costs)
        grad[z] += cost
        # d/dw_j of W(p_z, Σ w p) through the target marginal
        grad += w[z] * (V @ potentials)
    return grad


def _maximize_weights(
    V: np.ndarray, costs: np.ndarray, starts: Sequence[np.ndarray]
) -> Tuple[np.ndarray, float]:
    """Projected ascent with backtracking, best over ``starts``."""
    best_w, best_value = None, -np.inf
    for w in starts:
        value = _awd_value(V, w, costs)
        for _ in range(AWD_STEPS):
            grad = _awd_gradient(V, w, costs)
            step, moved = 1.0, False
            while step > 1e-8:
                trial = _project_simplex(w + step * grad)
                if np.max(np.abs(trial - w)) < 1e-12:
                    break
                trial_value = _awd_value(V, trial, costs)
                if trial_value > value + 1e-12:
                    w, value, moved = trial, trial_value, True
                    break
                step /= 2.0
            if not moved:
                break
        if value > best_value + 1e-12:
            best_w, best_value = w, value
    return best_w, best_value


def maximize_awd(
    polytope: Polytope,
    c: Optional[CostMatrix] = None,
    k: int = 2,
    restarts: Optional[int] = None,
    seed: int = 0,
    subset_cap: Optional[int] = None,
) -> PlacementResult:
    """
    Best AWD over vertex subsets of size at most ``k``.

    Weights of each subset are found by projected supergradient ascent from a
    uniform start plus Dirichlet restarts. AWD is not concave in the weights
    in general, so the result is flagged heuristic.

    Raises:
        TooLarge: the number of subsets exceeds subset_cap
    """
    if k < 1:
        raise MalformedSpec("k must be at least 1")
    restarts = config.resolve(restarts, "awd_restarts")
    cap = config.resolve(subset_cap, "subset_cap")
    n = len(polytope)
    sizes = range(1, min(k, n) + 1)
    count = sum(math.comb(n, j) for j in sizes)
    if count > cap:
        raise TooLarge(f"{count} vertex subsets exceed the subset cap {cap}")

    costs = resolve_cost(c, polytope.num_states).costs
    P = polytope.matrix
    rng = np.random.default_rng(seed)

    best: Optional[Tuple[Tuple[int, ...], np.ndarray, float]] = None
    for size in sizes:
        for subset in itertools.combinations(range(n), size):
            if size == 1:
                weights, value = np.ones(1), 0.0
            else:
                starts = [np.full(size, 1.0 / size)]
                starts += list(rng.dirichlet(np.ones(size), size=max(restarts - 1, 0)))
                weights, value = _maximize_weights(P[list(subset)], costs, starts)
            if best is None or value > best[2] + 1e-12:
                best = (subset, weights, value)

    subset, weights, value = best
    return PlacementResult(
        skillset=SkillSet(tuple(polytope.vertices[i] for i in subset), weights),
        value=value,
        indices=list(subset),
        heuristic=True,
    )


# ---------------------------------------------------------------------------
# WSEP
# ---------------------------------------------------------------------------


def maximize_wsep(
    polytope: Polytope,
    c: Optional[CostMatrix] = None,
    k: int = 2,
    mode: str = "exhaustive",
    subset_cap: Optional[int] = None,
) -> PlacementResult:
    """
    Place ``k`` uniformly weighted skills at vertices to maximize WSEP.

    Duplicate placements are allowed. Exhaustive mode scans multisets in
    lexicographic order (first maximum wins); greedy mode adds the vertex
    with the largest marginal gain, lowest index on ties.

    Raises:
        TooLarge: exhaustive multiset count exceeds subset_cap
    """
    if k < 1:
        raise MalformedSpec("k must be at least 1")
    if mode not in ("exhaustive", "greedy"):
        raise MalformedSpec(f"unknown WSEP mode '{mode}'")
    n = len(polytope)
    W = pairwise_wasserstein(polytope.vertices, c)

    if mode == "exhaustive":
        cap = config.resolve(subset_cap, "subset_cap")
        count = math.comb(n + k - 1, k)
        if count > cap:
            raise TooLarge(f"{count} vertex multisets exceed the subset cap {cap}")
        best, best_value = None, -np.inf
        for multiset in itertools.combinations_with_replacement(range(n), k):
            idx = list(multiset)
            value = float(W[np.ix_(idx, idx)].sum())
            if value > best_value + 1e-12:
                best, best_value = idx, value
    else:
        best = []
        for _ in range(k):
            gains = W[:, best].sum(axis=1) if best else np.zeros(n)
            best.append(int(np.flatnonzero(gains >= gains.max() - 1e-12)[0]))
        best_value = float(W[np.ix_(best, best)].sum())

    skillset = SkillSet.uniform([polytope.vertices[i] for i in best])
    return PlacementResult(
        skillset=skillset,
        value=best_value,
        indices=best,
        heuristic=mode == "greedy",
    )


def placements_are_extreme(polytope: Polytope, indices: Sequence[int]) -> bool:
    """Every placement is outside the hull of the other distinct vertices."""
    for i in set(indices):
        others = [v for j, v in enumerate(polytope.vertices) if j != i]
        if others and hull_membership(polytope.vertices[i], others).inside:
            return False
    return True


# ---------------------------------------------------------------------------
# PWSEP
# ---------------------------------------------------------------------------


def pwsep_project(
    p: Distribution,
    basis: Sequence[Distribution],
    c: Optional[CostMatrix] = None,
) -> ProjectionResult:
    """
    Wasserstein distance from ``p`` to the convex hull of ``basis``.

    One LP over the transport plan T and mixture weights λ jointly:
    min ⟨C, T⟩ s.t. T·1 = p, Tᵀ·1 = Σ_j λ_j basis_j, λ on the simplex.
    """
    if not basis:
        raise MalformedSpec("pwsep_project needs a nonempty basis")
    x = as_probs(p)
    B = np.column_stack([as_probs(b) for b in basis])
    n, m = x.size, B.shape[1]
    if B.shape[0] != n:
        raise DimensionMismatch(f"point has {n} entries, basis vectors have {B.shape[0]}")
    costs = resolve_cost(c, n).costs

    num_plan = n * n
    A_eq = np.zeros((2 * n + 1, num_plan + m))
    for i in range(n):
        A_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        A_eq[n + j, j:num_plan:n] = 1.0
    A_eq[n : 2 * n, num_plan:] = -B
    A_eq[2 * n, num_plan:] = 1.0
    b_eq = np.concatenate([x, np.zeros(n), [1.0]])
    objective = np.concatenate([costs.reshape(-1), np.zeros(m)])

    result = solve_lp(objective, A_eq=A_eq, b_eq=b_eq, what="PWSEP projection")
    plan = np.maximum(result.x[:num_plan].reshape(n, n), 0.0)
    weights = np.maximum(result.x[num_plan:], 0.0)
    weights = weights / weights.sum()
    distance = max(float(result.fun), 0.0)
    return ProjectionResult(distance=distance, weights=weights, plan=TransportPlan(plan, distance))


def _break_tie(
    tied: List[int], arrays: List[np.ndarray], discovered: List[np.ndarray]
) -> int:
    """
    First tied candidate that is an extreme point of the tied candidates plus
    the discovered set. Non-vertex points on a face parallel to the hull can
    tie with the vertices spanning that face.
    """
    for i in tied:
        others = discovered + [
            arrays[j]
            for j in tied
            if j != i and np.max(np.abs(arrays[j] - arrays[i])) >= DISTINCT_TOL
        ]
        if not others or not hull_membership(arrays[i], others).inside:
            return i
    return tied[0]


def _pick(
    scores: Dict[int, float], arrays: List[np.ndarray], discovered: List[np.ndarray]
) -> Tuple[int, float, bool]:
    best = max(scores.values())
    tied = sorted(i for i, d in scores.items() if d >= best - TIE_TOL)
    if len(tied) == 1:
        return tied[0], scores[tied[0]], False
    choice = _break_tie(tied, arrays, discovered)
    return choice, scores[choice], True


def pwsep_run(
    candidates: Sequence[Distribution],
    c: Optional[CostMatrix] = None,
    tol: Optional[float] = None,
    seed: int = 0,
    workers: int = 1,
    prune: bool = True,
    on_progress: Optional[ProgressCallback] = None,
) -> PwsepState:
    """
    Discover the vertices of the hull of ``candidates`` one at a time.

    The first pick is the candidate farthest in W from a seeded random
    candidate. Each later pick maximizes the projected distance to the hull
    of the points discovered so far. The run stops when the largest projected
    distance is at most ``tol``.

    Args:
        candidates: Candidate occupancy measures (e.g. all deterministic policies)
        c: Ground cost (default: unit)
        tol: Termination threshold (default: config pwsep_tol)
        seed: Seed for the random reference candidate
        workers: Threads used to score candidates
        prune: Drop candidates once their projected distance reaches tol
        on_progress: Optional progress callback
    """
    if not candidates:
        raise MalformedSpec("pwsep_run needs at least one candidate")
    tol = config.resolve(tol, "pwsep_tol")
    arrays = [as_probs(p) for p in candidates]
    cost = resolve_cost(c, arrays[0].size)
    state = PwsepState(cost={"symmetric": cost.symmetric, "metric": cost.metric})

    rng = np.random.default_rng(seed)
    reference = int(rng.integers(len(arrays)))
    scores = {
        i: wasserstein(arrays[i], arrays[reference], cost).cost
        for i in range(len(arrays))
    }
    first, distance, tie = _pick(scores, arrays, [])
    state.discovered.append(OccupancyMeasure(arrays[first]))
    state.indices.append(first)
    state.history.append(PwsepStep(0, first, distance, [], tie))
    state.iteration = 1
    notify(on_progress, "discover", 0.0, f"Iteration 0: candidate {first}")

    remaining = [i for i in range(len(arrays)) if i != first]
    while remaining:
        basis = [d.probs for d in state.discovered]

        def score(i):
            return i, pwsep_project(arrays[i], basis, cost)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                projected = dict(executor.map(score, remaining))
        else:
            projected = dict(map(score, remaining))

        distances = {i: r.distance for i, r in projected.items()}
        best = max(distances.values())
        if best <= tol:
            state.last_projected_distance = best
            break

        chosen, distance, tie = _pick(distances, arrays, basis)
        state.history.append(
            PwsepStep(
                state.iteration,
                chosen,
                distance,
                projected[chosen].weights.tolist(),
                tie,
            )
        )
        state.discovered.append(OccupancyMeasure(arrays[chosen]))
        state.indices.append(chosen)
        state.iteration += 1
        notify(
            on_progress,
            "discover",
            min(state.iteration / len(arrays), 1.0),
            f"Iteration {state.iteration - 1}: candidate {chosen} at distance {distance:.6g}",
        )
        if prune:
            remaining = [i for i in remaining if i != chosen and distances[i] > tol]
        else:
            remaining = [i for i in remaining if i != chosen]
    else:
        state.last_projected_distance = 0.0

    notify(on_progress, "complete", 1.0, f"Discovered {len(state.discovered)} points")
    return state


@dataclass
class PwsepVerdict:
    """A PWSEP run on one seeded MDP compared with the extreme-point oracle."""

    seed: int
    discovered: int
    vertices: int
    iterations: int
    match: bool


def matches_vertices(
    state: PwsepState, polytope: Polytope, tol: float = DISTINCT_TOL
) -> bool:
    """Whether the discovered points and the vertices agree as sets (L∞ tol)."""
    found = np.array([d.probs for d in state.discovered])
    vertices = polytope.matrix
    if len(found) != len(vertices):
        return False
    gaps = np.max(np.abs(found[:, None, :] - vertices[None, :, :]), axis=2)
    return bool(np.all(gaps.min(axis=0) <= tol) and np.all(gaps.min(axis=1) <= tol))


def pwsep_verdict_for_seed(
    seed: int,
    num_states: int = 3,
    num_actions: int = 3,
    occupancy_kind: str = "discounted",
    c: Optional[CostMatrix] = None,
) -> PwsepVerdict:
    """Run PWSEP over every deterministic policy of a seeded random MDP."""
    mdp = random_mdp(
        np.random.default_rng(seed),
        num_states,
        num_actions,
        occupancy_kind=occupancy_kind,
    )
    candidates = [occ for _, occ in enumerate_policy_occupancies(mdp)]
    state = pwsep_run(candidates, c, seed=seed)
    polytope = extreme_points(candidates)
    return PwsepVerdict(
        seed=seed,
        discovered=len(state.discovered),
        vertices=len(polytope),
        iterations=state.iteration,
        match=matches_vertices(state, polytope),
    )


def run_pwsep_suite(
    seeds: Sequence[int],
    num_states: int = 3,
    num_actions: int = 3,
    occupancy_kind: str = "discounted",
    c: Optional[CostMatrix] = None,
    workers: int = 1,
    on_progress: Optional[ProgressCallback] = None,
) -> List[PwsepVerdict]:
    """pwsep_verdict_for_seed over ``seeds``, returned in seed order."""
    seeds = list(seeds)

    def run(seed):
        return pwsep_verdict_for_seed(seed, num_states, num_actions, occupancy_kind, c)

    verdicts: List[PwsepVerdict] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for done, verdict in enumerate(executor.map(run, seeds), 1):
                verdicts.append(verdict)
                notify(on_progress, "seed", done / len(seeds), f"Seed {verdict.seed}")
    else:
        for done, seed in enumerate(seeds, 1):
            verdicts.append(run(seed))
            notify(on_progress, "seed", done / len(seeds), f"Seed {seed}")

    matched = sum(v.match for v in verdicts)
    notify(on_progress, "complete", 1.0, f"MATCH {matched}/{len(verdicts)}")
    return verdicts


def spwd(ss: SkillSet, c: Optional[CostMatrix] = None) -> float:
    """Sum over learned skills of the projected distance to the other skills."""
    active = ss.active()
    if len(active) < 2:
        raise MalformedSpec("SPWD needs at least two learned skills")
    total = 0.0
    for z in active:
        others = [ss.skills[i] for i in active if i != z]
        total += pwsep_project(ss.skills[z], others, c).distance
    return total


# ---------------------------------------------------------------------------
# KLSEP pathology
# ---------------------------------------------------------------------------


def _corner(num_states: int, index: int, eps: float) -> np.ndarray:
    p = np.full(num_states, eps)
    p[index] = 1.0 - (num_states - 1) * eps
    return p


def klsep_pathology_demo(
    c: Optional[CostMatrix] = None,
    num_skills: int = 3,
    epsilon: float = 0.05,
) -> PathologyReport:
    """
    Two ways of adding a last skill to smoothed corner skills.

    The spread configuration adds the missing corner. The near configuration
    adds a sharpened copy of the first corner, whose tiny mass elsewhere makes
    KL to it blow up. Searches the sharpening δ over 1e-2 ... 1e-300 until
    KLSEP prefers the near configuration while WSEP prefers the spread one.

    Returns:
        PathologyReport; empty for fewer than two skills, ``found`` False
        when no δ on the grid reverses the preference
    """
    if num_skills < 2:
        return PathologyReport()
    if num_skills > 3:
        raise MalformedSpec("the pathology construction supports 2 or 3 skills")
    n = num_skills
    cost = resolve_cost(c, n)

    base = [_corner(n, i, epsilon) for i in range(n - 1)]
    spread = base + [_corner(n, n - 1, epsilon)]
    spread_set = SkillSet.uniform(spread)
    klsep_spread = klsep(spread_set)
    wsep_spread = wsep(spread_set, cost)

    report = PathologyReport(epsilon=epsilon, spread=[s.tolist() for s in spread])
    for delta in 10.0 ** -np.arange(2, 301, 2):
        near = base + [_corner(n, 0, float(delta))]
        near_set = SkillSet.uniform(near)
        klsep_near = klsep(near_set)
        wsep_near = wsep(near_set, cost)
        report.near = [s.tolist() for s in near]
        report.klsep_near, report.wsep_near = klsep_near, wsep_near
        report.klsep_spread, report.wsep_spread = klsep_spread, wsep_spread
        report.delta = float(delta)
        if klsep_near > klsep_spread and wsep_near < wsep_spread:
            report.found = True
            break
    return report
