"""
Skillgeo Geometry - Exact MISL solutions on a state-distribution polytope

Maximizing I(S;Z) over skills placed in the polytope is the minimax problem
min_q max_v KL(p_v ‖ q) over the hull: a channel-capacity problem whose
inputs are the vertices. The optimal mixture is the unique "center", the
optimal value is the "radius", and the skills at the radius are active.

The center is found in two stages: a softmax-smoothed warm start annealed
over WARM_TEMPERATURES, then a Blahut-Arimoto ascent on the vertex weights
that stops once its duality gap certificate drops below tolerance. The
ascent is then repeated on the active vertices until the active set settles.

Features:
- MISL center with a certified duality gap
- Mixture weights realizing the center
- LSEPIN tie-breaking among equivalent weightings
- Necessary-condition checks for comparing skill sets
- Brute-force grid oracle for |S| <= 3
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import minimize
from scipy.spatial import ConvexHull
from scipy.special import rel_entr, softmax

from . import config
from .divergences import SkillSet, indicator_mi, kl, lsepin
from .errors import DimensionMismatch, Infeasible, MalformedSpec, NonConvergent
from .lp import convex_weights, solve_lp
from .mdp import Distribution, OccupancyMeasure, Polytope, as_probs, hull_membership
from .progress import ProgressCallback, notify

# Softmax temperatures of the smoothed warm start
WARM_TEMPERATURES = np.geomspace(10.0, 1000.0, 5)
WARM_STEPS = 100
# Largest multiplicative step of the certified ascent
MAX_ASCENT_STEP = 64.0


@dataclass
class SolverTrace:
    iterations: int
    gap: float


@dataclass
class MislSolution:
    """Minimax-KL center of a polytope and the skills that realize it."""

    center: OccupancyMeasure
    radius: float
    active: List[int]
    weights: np.ndarray
    trace: SolverTrace
    # Solver weights over every vertex, not only the active ones
    vertex_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def skillset(self, polytope: Polytope) -> SkillSet:
        """The active vertices with their weights as a SkillSet."""
        return SkillSet(tuple(polytope.vertices[i] for i in self.active), self.weights)


@dataclass
class TiebreakResult:
    """Best LSEPIN weighting found, plus the max-min-weight heuristic."""

    weights: np.ndarray
    lsepin: float
    heuristic_weights: np.ndarray
    heuristic_lsepin: float
    seeds: int


@dataclass
class ConditionCheck:
    name: str
    passed: bool
    violation: float


@dataclass
class NecessaryConditionsReport:
    checks: List[ConditionCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]


# ---------------------------------------------------------------------------
# MISL center
# ---------------------------------------------------------------------------


def _vertex_divergences(P: np.ndarray, q: np.ndarray) -> np.ndarray:
    """KL(p_v ‖ q) for every row p_v of P."""
    return rel_entr(P, q[None, :]).sum(axis=1)


def _reweight(mu: np.ndarray, logits: np.ndarray) -> np.ndarray:
    """Multiplicative update mu_v ∝ mu_v·exp(logit_v); zero weights stay zero."""
    with np.errstate(divide="ignore"):
        log_mu = np.log(mu)
    return softmax(np.where(mu > 0, log_mu + logits, -np.inf))


def _smoothed_warm_start(P: np.ndarray, mu: np.ndarray) -> Tuple[np.ndarray, int]:
    """
    Entropic mirror descent on the softmax-smoothed max of KL(p_v ‖ q_mu).

    The temperature is annealed from 10 to 1000.
    """
    steps = 0
    for beta in WARM_TEMPERATURES:
        for _ in range(WARM_STEPS):
            q = mu @ P
            w = softmax(beta * _vertex_divergences(P, q))
            ratio = np.divide(w @ P, q, out=np.zeros_like(q), where=q > 0)
            grad = -(P @ ratio)
            step = 0.5 / max(1.0, float(np.ptp(grad)))
            mu = _reweight(mu, -step * grad)
            steps += 1
    return mu, steps


def _certified_ascent(
    P: np.ndarray, mu: np.ndarray, tol: float, max_iter: int
) -> Tuple[np.ndarray, np.ndarray, float, int]:
    """
    Blahut-Arimoto style ascent of I(mu) = Σ mu_v KL(p_v ‖ q_mu).

    The step grows while I increases and backtracks to 1 (the classical,
    always-monotone update) otherwise. Stops once max_v D_v − I(mu) ≤ tol,
    which bounds the distance to the optimum from above.

    Returns:
        (mu, divergences, gap, iterations)
    """
    D = _vertex_divergences(P, mu @ P)
    info = float(mu @ D)
    step = 1.0
    for iteration in range(max_iter + 1):
        gap = float(D.max() - info)
        if gap <= tol:
            return mu, D, max(gap, 0.0), iteration
        if iteration == max_iter:
            break
        while True:
            trial = _reweight(mu, step * D)
            trial_D = _vertex_divergences(P, trial @ P)
            trial_info = float(trial @ trial_D)
            if trial_info >= info or step == 1.0:
                break
            step = max(1.0, step / 2.0)
        mu, D, info = trial, trial_D, trial_info
        step = min(2.0 * step, MAX_ASCENT_STEP)
    raise NonConvergent(
        f"MISL center gap {gap:.3g} above tolerance {tol:g} after {max_iter} iterations"
    )


def _initial_weights(
    k: int, initial: Optional[Sequence[float]], seed: Optional[int]
) -> np.ndarray:
    if initial is not None:
        mu = np.maximum(np.asarray(initial, dtype=float), 1e-12)
        if mu.size != k:
            raise DimensionMismatch(f"{mu.size} initial weights for {k} vertices")
        return mu / mu.sum()
    if seed is not None:
        return np.random.default_rng(seed).dirichlet(np.ones(k))
    return np.full(k, 1.0 / k)


def misl_center(
    polytope: Polytope,
    tol: Optional[float] = None,
    initial: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
    max_iter: Optional[int] = None,
    active_tol: Optional[float] = None,
    on_progress: Optional[ProgressCallback] = None,
) -> MislSolution:
    """
    Solve MISL exactly: the minimax-KL center of the polytope.

    Args:
        polytope: Vertices of the feasible state-distribution set
        tol: Duality gap target (default: config misl_tol)
        initial: Starting vertex weights (default: uniform)
        seed: Draw starting weights from a flat Dirichlet instead
        max_iter: Iteration cap of the certified phase
        active_tol: KL slack for calling a vertex active
        on_progress: Optional progress callback

    Returns:
        MislSolution with center, radius, active set and weights

    Raises:
        NonConvergent: iteration cap hit with gap above tol
    """
    tol = config.resolve(tol, "misl_tol")
    max_iter = config.resolve(max_iter, "misl_max_iter")
    active_tol = config.resolve(active_tol, "active_tol")
    P = polytope.matrix
    k = len(P)

    mu = _initial_weights(k, initial, seed)
    notify(on_progress, "warm_start", 0.0, f"Smoothed warm start over {k} vertices")
    mu, iterations = _smoothed_warm_start(P, mu)

    notify(on_progress, "ascent", 0.3, "Certified ascent")
    mu, D, gap, used = _certified_ascent(P, mu, tol, max_iter)
    iterations += used

    # Re-solve on the active set so the center lies in its hull exactly
    support = np.flatnonzero(D >= D.max() - active_tol)
    for _ in range(k):
        sub_mu = mu[support] / mu[support].sum()
        sub_mu, _, _, used = _certified_ascent(
            P[support], sub_mu, tol, max(max_iter - iterations, 0)
        )
        iterations += used
        mu = np.zeros(k)
        mu[support] = sub_mu
        D = _vertex_divergences(P, mu @ P)
        gap = max(float(D.max() - mu @ D), 0.0)
        refreshed = np.flatnonzero(D >= D.max() - active_tol)
        if np.array_equal(refreshed, support):
            break
        support = refreshed
    notify(on_progress, "polish", 0.9, f"Active set {support.tolist()}")

    center = OccupancyMeasure(mu @ P)
    radius = float(D.max())
    active = [int(i) for i in np.flatnonzero(D >= radius - active_tol)]
    weights = misl_weights([polytope.vertices[i] for i in active], center)

    notify(on_progress, "complete", 1.0, f"Radius {radius:.6f}, gap {gap:.3g}")
    return MislSolution(
        center=center,
        radius=radius,
        active=active,
        weights=weights,
        trace=SolverTrace(iterations=iterations, gap=gap),
        vertex_weights=mu,
    )


def misl_weights(
    active_vertices: Sequence[Distribution],
    center: Distribution,
    tol: Optional[float] = None,
) -> np.ndarray:
    """
    Convex weights over ``active_vertices`` whose mixture is ``center``.

    Raises:
        Infeasible: center is not in the hull of the active vertices
    """
    tol = config.resolve(tol, "weights_tol")
    if not active_vertices:
        raise MalformedSpec("misl_weights needs at least one vertex")
    hull = hull_membership(center, active_vertices, tol=tol)
    if not hull.inside:
        raise Infeasible(
            f"center is {hull.distance:.3g} away from the hull of the active "
            f"vertices (tolerance {tol:g}); active_tol may be too tight"
        )
    weights, _ = convex_weights([as_probs(v) for v in active_vertices], as_probs(center))
    return weights


def check_center_certificate(
    solution: MislSolution,
    polytope: Polytope,
    eps: float = 1e-4,
    slack: float = 1e-6,
) -> Tuple[bool, float]:
    """
    Directional optimality check of a MISL center.

    Moving the center a step ``eps`` toward any vertex must not lower the
    max-KL objective by more than ``slack``.

    Returns:
        (certified, largest decrease observed)
    """
    P = polytope.matrix
    q = solution.center.probs
    base = float(_vertex_divergences(P, q).max())
    worst = 0.0
    for p_w in P:
        moved = (1.0 - eps) * q + eps * p_w
        worst = max(worst, base - float(_vertex_divergences(P, moved).max()))
    return worst <= slack, worst


# ---------------------------------------------------------------------------
# LSEPIN tie-breaking
# ---------------------------------------------------------------------------


def _lsepin_of(V: np.ndarray, weights: np.ndarray) -> float:
    return lsepin(SkillSet(tuple(V), weights))[0]


def _max_min_weight(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Feasible weights maximizing the smallest weight (LP heuristic)."""
    k = A.shape[1]
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    result = solve_lp(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(k),
        A_eq=np.hstack([A, np.zeros((A.shape[0], 1))]),
        b_eq=b,
        what="max-min weight",
    )
    weights = np.maximum(result.x[:k], 0.0)
    return weights / weights.sum()


def _analytic_center(N: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Maximize Σ log λ_i over the feasible slice λ = base + N y, λ ≥ 0."""
    free = base > 1e-12

    def objective(y):
        lam = base + N @ y
        return -np.sum(np.log(np.maximum(lam[free], 1e-300)))

    def gradient(y):
        lam = base + N @ y
        inv = np.zeros_like(lam)
        inv[free] = 1.0 / np.maximum(lam[free], 1e-300)
        return -(N.T @ inv)

    result = minimize(
        objective,
        np.zeros(N.shape[1]),
        jac=gradient,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda y: base + N @ y, "jac": lambda y: N}],
    )
    lam = base + N @ result.x if result.success else base
    if lam.min() < -1e-9:
        return base
    lam = np.maximum(lam, 0.0)
    return lam / lam.sum()


def _ascent_direction(
    A: np.ndarray, support: np.ndarray, tied: np.ndarray
) -> Optional[np.ndarray]:
    """
    Feasible direction raising every tied weight as much as possible.

    Solves max s s.t. d_z ≥ s (z tied), A d = 0, |d| ≤ 1 on the support and
    d = 0 off it. Returns None when no direction raises the tied weights.
    """
    k = A.shape[1]
    c = np.zeros(k + 1)
    c[-1] = -1.0
    rows = np.flatnonzero(tied)
    A_ub = np.zeros((rows.size, k + 1))
    A_ub[np.arange(rows.size), rows] = -1.0
    A_ub[:, -1] = 1.0
    bounds = [(-1.0, 1.0) if support[i] else (0.0, 0.0) for i in range(k)]
    bounds.append((None, 1.0))
    result = solve_lp(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(rows.size),
        A_eq=np.hstack([A, np.zeros((A.shape[0], 1))]),
        b_eq=np.zeros(A.shape[0]),
        bounds=bounds,
        what="ascent direction",
    )
    if result.x[-1] <= 1e-10:
        return None
    return result.x[:k]


def _local_ascent(
    V: np.ndarray, A: np.ndarray, lam: np.ndarray, max_steps: int = 200
) -> Tuple[np.ndarray, float]:
    """Feasible-direction ascent of LSEPIN from ``lam`` with a ratio test."""
    threshold = config.get("positive_weight")
    value = _lsepin_of(V, lam)
    for _ in range(max_steps):
        ss = SkillSet(tuple(V), lam)
        support = lam > threshold
        values = np.full(lam.size, np.inf)
        for z in np.flatnonzero(support):
            values[z] = indicator_mi(ss, int(z))
        tied = support & (values <= values.min() + 1e-9)
        direction = _ascent_direction(A, support, tied)
        if direction is None:
            break
        basis = null_space(A[:, support])
        if basis.shape[1] == 0:
            break
        # keep A·lam fixed to machine precision
        direction[support] = basis @ (basis.T @ direction[support])

        shrinking = direction < -1e-15
        limit = (
            float(np.min(lam[shrinking] / -direction[shrinking]))
            if shrinking.any()
            else 1.0
        )
        improved = None
        for t in limit * 0.5 ** np.arange(20):
            trial = np.maximum(lam + t * direction, 0.0)
            trial_value = _lsepin_of(V, trial)
            if trial_value > value + 1e-12:
                improved = (trial, trial_value)
                break
        if improved is None:
            break
        lam, value = improved

    dropped = (lam > 0.0) & (lam <= threshold)
    if dropped.any():
        lam = np.where(dropped, 0.0, lam)
        lam = lam / lam.sum()
        value = _lsepin_of(V, lam)
    return lam, value


def lsepin_tiebreak(
    active_vertices: Sequence[Distribution],
    center: Distribution,
    radius: Optional[float] = None,
    seeds: Optional[int] = None,
    seed: int = 0,
) -> TiebreakResult:
    """
    Among weightings of the active vertices that reproduce ``center``,
    find one with the largest LSEPIN.

    Local search from ``seeds`` feasible starts: LP vertices of the
    feasible-weight polytope for seeded random objectives, plus its analytic
    center. The best start wins (lowest seed index on ties). Also reports the
    max-min-weight LP heuristic.

    ``radius`` is accepted for symmetry with MislSolution and only used to
    sanity-check the vertices (every one must sit within active_tol of it).

    Raises:
        Infeasible: center is not representable by the active vertices
    """
    seeds = config.resolve(seeds, "tiebreak_seeds")
    V = np.vstack([as_probs(v) for v in active_vertices])
    k = len(V)

    anchor = misl_weights(list(V), center)
    if radius is not None:
        spread = max(abs(kl(v, center) - radius) for v in V)
        if spread > config.get("active_tol"):
            raise Infeasible(
                f"vertex KL to the center differs from the radius by {spread:.3g}"
            )

    A = np.vstack([V.T, np.ones(k)])
    b = A @ anchor
    heuristic = _max_min_weight(A, b)
    heuristic_value = _lsepin_of(V, heuristic)

    N = null_space(A)
    if N.shape[1] == 0:
        value = _lsepin_of(V, anchor)
        return TiebreakResult(anchor, value, heuristic, heuristic_value, seeds=1)

    rng = np.random.default_rng(seed)
    starts: List[np.ndarray] = []
    for _ in range(max(seeds - 1, 1)):
        vertex = solve_lp(
            rng.standard_normal(k), A_eq=A, b_eq=b, what="feasible-weight vertex"
        ).x
        vertex = np.maximum(vertex, 0.0)
        starts.append(vertex / vertex.sum())
    starts.append(_analytic_center(N, np.mean(starts, axis=0)))

    best_weights, best_value = None, -np.inf
    for start in starts:
        weights, value = _local_ascent(V, A, start)
        if value > best_value + 1e-12:
            best_weights, best_value = weights, value

    return TiebreakResult(
        weights=best_weights,
        lsepin=best_value,
        heuristic_weights=heuristic,
        heuristic_lsepin=heuristic_value,
        seeds=len(starts),
    )


# ---------------------------------------------------------------------------
# Necessary conditions
# ---------------------------------------------------------------------------


def check_necessary_conditions(
    sets: Sequence[SkillSet],
    shared_skill: Sequence[int],
    tol: float = 1e-6,
) -> NecessaryConditionsReport:
    """
    Check the conditions under which two skill sets can be compared.

    1. identical mixtures, 2. the same KL(skill ‖ mixture) for every learned
    skill of every set, 3. the shared skill is the same distribution.
    """
    if len(sets) < 2:
        raise MalformedSpec("check_necessary_conditions needs at least two sets")
    if len(shared_skill) != len(sets):
        raise DimensionMismatch(
            f"{len(shared_skill)} shared-skill indices for {len(sets)} sets"
        )

    first = sets[0]
    mixture_gap = max(
        float(np.max(np.abs(s.mixture.probs - first.mixture.probs))) for s in sets
    )
    divergences = [
        kl(s.skills[z], s.mixture) for s in sets for z in s.active()
    ]
    radius_spread = float(max(divergences) - min(divergences))
    reference = first.skills[shared_skill[0]].probs
    shared_gap = max(
        float(np.max(np.abs(s.skills[z].probs - reference)))
        for s, z in zip(sets, shared_skill)
    )

    return NecessaryConditionsReport(
        checks=[
            ConditionCheck("identical_mixture", mixture_gap <= tol, mixture_gap),
            ConditionCheck("constant_divergence", radius_spread <= tol, radius_spread),
            ConditionCheck("shared_skill", shared_gap <= tol, shared_gap),
        ]
    )


# ---------------------------------------------------------------------------
# Grid oracle
# ---------------------------------------------------------------------------


def _max_divergence(P: np.ndarray, Q: np.ndarray, chunk: int = 65536) -> np.ndarray:
    """max_v KL(p_v ‖ q) for every row q of Q."""
    out = np.empty(len(Q))
    for start in range(0, len(Q), chunk):
        block = Q[start : start + chunk]
        out[start : start + chunk] = (
            rel_entr(P[None, :, :], block[:, None, :]).sum(axis=2).max(axis=1)
        )
    return out


def grid_center_oracle(
    polytope: Polytope, resolution: float = 1e-3, refinements: int = 2
) -> OccupancyMeasure:
    """
    Brute-force MISL center for polytopes with at most 3 states.

    Scans a grid of the polytope's affine hull at ``resolution``, then
    refines twice around the best point with a ten times finer grid.
    """
    if polytope.num_states > 3:
        raise DimensionMismatch(
            f"grid oracle supports at most 3 states, got {polytope.num_states}"
        )
    P = polytope.matrix
    origin = P[0]
    _, singular, vt = np.linalg.svd(P - origin)
    rank = int(np.sum(singular > 1e-12))
    if rank == 0:
        return OccupancyMeasure(origin)
    basis = vt[:rank]
    coords = (P - origin) @ basis.T
    eps = 1e-12

    if rank == 1:
        lo_1d, hi_1d = coords.min(), coords.max()

        def inside(points):
            return (points[:, 0] >= lo_1d - eps) & (points[:, 0] <= hi_1d + eps)

    else:
        equations = ConvexHull(coords).equations

        def inside(points):
            return np.all(points @ equations[:, :-1].T + equations[:, -1] <= eps, axis=1)

    def to_simplex(points):
        Q = np.clip(origin + points @ basis, 0.0, None)
        return Q / Q.sum(axis=1, keepdims=True)

    def best_of(points):
        points = points[inside(points)]
        values = _max_divergence(P, to_simplex(points))
        return points[int(np.argmin(values))]

    def grid(lo, hi, step):
        axes = [np.arange(lo[d], hi[d] + step / 2, step) for d in range(rank)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, rank)

    points = np.vstack([grid(coords.min(axis=0), coords.max(axis=0), resolution), coords])
    best = best_of(points)
    step = resolution
    for _ in range(refinements):
        half = 2.0 * step
        step /= 10.0
        local = np.vstack([grid(best - half, best + half, step), best[None, :]])
        best = best_of(local)

    return OccupancyMeasure(to_simplex(best[None, :])[0])
