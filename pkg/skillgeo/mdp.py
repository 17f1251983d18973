"""
Skillgeo MDP - Tabular MDPs and their state-distribution polytopes

Features:
- MDP spec loading and validation (JSON document or dict)
- Discounted and stationary occupancy measures
- Deterministic-policy enumeration with policy provenance
- Extreme-point filtering and convex-hull membership
- Seeded random MDPs for property suites
"""

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import nnls

from . import config
from .errors import (
    DimensionMismatch,
    MalformedSpec,
    NonConvergent,
    StochasticityViolation,
    TooLarge,
)

OCCUPANCY_KINDS = ("discounted", "stationary")

# Probability vectors within this distance of summing to 1 are renormalized
RENORMALIZE_TOL = 1e-6
# Entries in [-NEGATIVE_TOL, 0) are clamped to 0
NEGATIVE_TOL = 1e-9


def as_distribution(values: Any, what: str) -> np.ndarray:
    """Validate and normalize a probability vector."""
    probs = np.array(values, dtype=float).reshape(-1)
    if probs.size == 0:
        raise MalformedSpec(f"{what} is empty")
    if not np.all(np.isfinite(probs)):
        raise StochasticityViolation(f"{what} has non-finite entries")
    if probs.min() < -NEGATIVE_TOL:
        raise StochasticityViolation(
            f"{what} has a negative entry {probs.min():.3g} below -{NEGATIVE_TOL:g}"
        )
    probs = np.maximum(probs, 0.0)
    total = probs.sum()
    if abs(total - 1.0) > RENORMALIZE_TOL:
        raise StochasticityViolation(
            f"{what} sums to {total:.12g}, off by more than {RENORMALIZE_TOL:g}"
        )
    probs = probs / total
    probs.setflags(write=False)
    return probs


@dataclass(frozen=True, eq=False)
class OccupancyMeasure:
    """A state distribution p(S|z): a point on the |S|-simplex."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "probs", as_distribution(self.probs, "occupancy measure")
        )

    @classmethod
    def exact(cls, probs: np.ndarray) -> "OccupancyMeasure":
        """Wrap a vector that is already a convex combination of distributions.

        Skips renormalization so mixtures keep their exact entries.
        """
        measure = object.__new__(cls)
        values = np.maximum(np.array(probs, dtype=float).reshape(-1), 0.0)
        values.setflags(write=False)
        object.__setattr__(measure, "probs", values)
        return measure

    def __len__(self) -> int:
        return self.probs.size

    def to_list(self) -> List[float]:
        return self.probs.tolist()


Distribution = Union[OccupancyMeasure, Sequence[float], np.ndarray]


def as_probs(p: Distribution) -> np.ndarray:
    """Return the probability vector of an OccupancyMeasure or array-like."""
    if isinstance(p, OccupancyMeasure):
        return p.probs
    return np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """
    Finite MDP with per-action transition matrices.

    transitions[a][s][s'] = P(s'|s, a). ``occupancy_kind`` selects whether
    occupancy() returns the discounted occupancy measure or the limiting
    (stationary) distribution of the policy-induced chain.
    """

    transitions: np.ndarray
    initial: np.ndarray
    gamma: float
    occupancy_kind: str = "discounted"

    def __post_init__(self):
        P = np.array(self.transitions, dtype=float)
        if P.ndim != 3 or P.shape[1] != P.shape[2] or P.shape[1] == 0:
            raise MalformedSpec(
                f"transitions must have shape [actions][states][states], got {P.shape}"
            )
        num_actions, num_states, _ = P.shape
        rows = np.empty_like(P)
        for a in range(num_actions):
            for s in range(num_states):
                rows[a, s] = as_distribution(P[a, s], f"row {s} of action {a}")
        rows.setflags(write=False)
        object.__setattr__(self, "transitions", rows)

        initial = as_distribution(self.initial, "initial distribution")
        if initial.size != num_states:
            raise DimensionMismatch(
                f"initial has {initial.size} entries for {num_states} states"
            )
        object.__setattr__(self, "initial", initial)

        gamma = float(self.gamma)
        if not 0.0 <= gamma < 1.0:
            raise MalformedSpec(f"gamma must lie in [0, 1), got {gamma}")
        object.__setattr__(self, "gamma", gamma)

        if self.occupancy_kind not in OCCUPANCY_KINDS:
            raise MalformedSpec(
                f"occupancy must be one of {OCCUPANCY_KINDS}, got {self.occupancy_kind!r}"
            )

    @property
    def num_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[0]

    def with_kind(self, occupancy_kind: str) -> "TabularMdp":
        """Copy of this MDP with a different occupancy mode."""
        return TabularMdp(self.transitions, self.initial, self.gamma, occupancy_kind)


@dataclass(frozen=True, eq=False)
class Policy:
    """Deterministic (action index per state) or stochastic (|S|x|A|) policy."""

    kind: str
    action_choice: np.ndarray

    def __post_init__(self):
        choice = np.array(self.action_choice)
        if self.kind == "deterministic":
            choice = choice.astype(int).reshape(-1)
            if choice.size and choice.min() < 0:
                raise MalformedSpec("deterministic policy has a negative action index")
        elif self.kind == "stochastic":
            choice = np.array(
                [
                    as_distribution(row, f"policy row {s}")
                    for s, row in enumerate(np.atleast_2d(choice))
                ]
            )
        else:
            raise MalformedSpec(f"unknown policy kind {self.kind!r}")
        choice.setflags(write=False)
        object.__setattr__(self, "action_choice", choice)

    @classmethod
    def deterministic(cls, actions: Sequence[int]) -> "Policy":
        return cls("deterministic", np.asarray(actions))

    @classmethod
    def stochastic(cls, matrix: Sequence[Sequence[float]]) -> "Policy":
        return cls("stochastic", np.asarray(matrix, dtype=float))

    def matrix(self, num_actions: int) -> np.ndarray:
        """The |S|x|A| action-probability matrix."""
        if self.kind == "stochastic":
            if self.action_choice.shape[1] != num_actions:
                raise DimensionMismatch(
                    f"policy has {self.action_choice.shape[1]} actions, MDP has {num_actions}"
                )
            return self.action_choice
        if self.action_choice.max(initial=0) >= num_actions:
            raise DimensionMismatch(
                f"action index {self.action_choice.max()} out of range for {num_actions} actions"
            )
        return np.eye(num_actions)[self.action_choice]

    def to_list(self) -> list:
        return self.action_choice.tolist()


@dataclass(frozen=True, eq=False)
class Polytope:
    """Deduplicated extreme points of the feasible state-distribution set."""

    vertices: Tuple[OccupancyMeasure, ...]
    provenance: Tuple[Optional[Policy], ...] = ()

    def __post_init__(self):
        if not self.vertices:
            raise MalformedSpec("a polytope needs at least one vertex")
        object.__setattr__(self, "vertices", tuple(self.vertices))
        provenance = tuple(self.provenance) or (None,) * len(self.vertices)
        object.__setattr__(self, "provenance", provenance)
        sizes = {len(v) for v in self.vertices}
        if len(sizes) != 1:
            raise DimensionMismatch(f"vertices have mixed dimensions {sorted(sizes)}")

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def num_states(self) -> int:
        return len(self.vertices[0])

    @property
    def matrix(self) -> np.ndarray:
        """Vertices stacked as rows."""
        return np.vstack([v.probs for v in self.vertices])


@dataclass
class HullResult:
    """Outcome of a convex-hull membership query."""

    inside: bool
    coefficients: Optional[np.ndarray]
    distance: float


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def load_mdp(spec: Union[Dict[str, Any], str, Path]) -> TabularMdp:
    """
    Load and validate an MDP spec.

    Args:
        spec: Parsed JSON dict, or a path to the JSON document

    Returns:
        Validated TabularMdp

    Raises:
        MalformedSpec: missing field or bad shape
        StochasticityViolation: a row or the initial distribution is off by > 1e-6
    """
    if isinstance(spec, (str, Path)):
        with open(spec, encoding="utf-8") as f:
            try:
                spec = json.load(f)
            except json.JSONDecodeError as e:
                raise MalformedSpec(f"MDP spec is not valid JSON: {e}") from e
    if not isinstance(spec, dict):
        raise MalformedSpec("MDP spec must be a JSON object")

    for key in ("num_states", "num_actions", "transitions", "initial", "gamma"):
        if key not in spec:
            raise MalformedSpec(f"MDP spec is missing field '{key}'")

    num_states = int(spec["num_states"])
    num_actions = int(spec["num_actions"])
    if num_states < 1 or num_actions < 1:
        raise MalformedSpec("num_states and num_actions must be positive")

    try:
        transitions = np.array(spec["transitions"], dtype=float)
    except (TypeError, ValueError) as e:
        raise MalformedSpec(f"transitions are not a numeric array: {e}") from e
    if transitions.shape != (num_actions, num_states, num_states):
        raise MalformedSpec(
            f"transitions have shape {transitions.shape}, "
            f"expected ({num_actions}, {num_states}, {num_states})"
        )
    if len(spec["initial"]) != num_states:
        raise MalformedSpec(
            f"initial has {len(spec['initial'])} entries, expected {num_states}"
        )

    return TabularMdp(
        transitions=transitions,
        initial=np.asarray(spec["initial"], dtype=float),
        gamma=spec["gamma"],
        occupancy_kind=spec.get("occupancy", "discounted"),
    )


def load_polytope(doc: Union[Dict[str, Any], str, Path]) -> Polytope:
    """Load a polytope from {"vertices": [[...]]} (provenance optional)."""
    if isinstance(doc, (str, Path)):
        with open(doc, encoding="utf-8") as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as e:
                raise MalformedSpec(f"polytope is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "vertices" not in doc:
        raise MalformedSpec("polytope document is missing field 'vertices'")

    provenance = [
        Policy.deterministic(p) if p is not None else None
        for p in doc.get("provenance") or []
    ]
    return Polytope(
        vertices=tuple(OccupancyMeasure(v) for v in doc["vertices"]),
        provenance=tuple(provenance),
    )


# ---------------------------------------------------------------------------
# Occupancy measures
# ---------------------------------------------------------------------------


def state_transition_matrix(mdp: TabularMdp, policy: Policy) -> np.ndarray:
    """M[s, s'] = Σ_a π(a|s) P(s'|s, a)."""
    pi = policy.matrix(mdp.num_actions)
    if pi.shape[0] != mdp.num_states:
        raise DimensionMismatch(
            f"policy covers {pi.shape[0]} states, MDP has {mdp.num_states}"
        )
    return np.einsum("sa,ast->st", pi, mdp.transitions)


def _power_limit(
    operator: np.ndarray,
    start: np.ndarray,
    check: np.ndarray,
    tol: float,
    max_iter: int,
) -> Optional[np.ndarray]:
    """
    Power iteration x_t = operator^t @ start, read at t = 1, 2, 4, ...

    Squaring the operator reaches t = max_iter in log2(max_iter) products.
    Returns the first iterate with ‖check @ x − x‖∞ ≤ tol, or None.
    """
    power = operator.copy()
    steps = 1
    while steps <= max_iter:
        x = power @ start
        if np.max(np.abs(check @ x - x)) <= tol:
            return x
        power = power @ power
        steps *= 2
    return None


def occupancy(
    mdp: TabularMdp,
    policy: Policy,
    occupancy_kind: Optional[str] = None,
    power_tol: Optional[float] = None,
    power_max_iter: Optional[int] = None,
) -> OccupancyMeasure:
    """
    State occupancy measure of a policy.

    Discounted mode solves p = (1−γ)·p0 + γ·Mᵀp. Stationary mode returns the
    limiting distribution of M by power iteration from p0; periodic chains
    fall back to the Cesàro operator (mean of the first |S| powers), whose
    fixed points are the stationary distributions of M.

    Raises:
        NonConvergent: neither iteration reaches power_tol
    """
    kind = occupancy_kind or mdp.occupancy_kind
    M = state_transition_matrix(mdp, policy)
    n = mdp.num_states

    if kind == "discounted":
        A = np.eye(n) - mdp.gamma * M.T
        p = np.clip(np.linalg.solve(A, (1.0 - mdp.gamma) * mdp.initial), 0.0, None)
        return OccupancyMeasure(p / p.sum())

    if kind != "stationary":
        raise MalformedSpec(f"unknown occupancy kind {kind!r}")

    tol = config.resolve(power_tol, "power_tol")
    max_iter = config.resolve(power_max_iter, "power_max_iter")
    MT = M.T

    p = _power_limit(MT, mdp.initial, MT, tol, max_iter)
    if p is None:
        cesaro = np.mean(
            [np.linalg.matrix_power(MT, k) for k in range(n)], axis=0
        )
        p = _power_limit(cesaro, mdp.initial, MT, tol, max_iter)
    if p is None:
        raise NonConvergent(
            f"stationary distribution did not reach residual {tol:g} "
            f"within {max_iter} iterations"
        )
    p = np.clip(p, 0.0, None)
    return OccupancyMeasure(p / p.sum())


def enumerate_policy_occupancies(
    mdp: TabularMdp,
    enumeration_cap: Optional[int] = None,
    occupancy_kind: Optional[str] = None,
) -> List[Tuple[Policy, OccupancyMeasure]]:
    """
    Occupancy measure of every deterministic policy, in policy-index order.

    Policy index is the mixed-radix number whose digit for state s is the
    action chosen in s (state 0 most significant). No deduplication.

    Raises:
        TooLarge: |A|^|S| exceeds enumeration_cap
    """
    cap = config.resolve(enumeration_cap, "enumeration_cap")
    count = mdp.num_actions**mdp.num_states
    if count > cap:
        raise TooLarge(
            f"{count} deterministic policies exceed the enumeration cap {cap}"
        )

    entries = []
    for actions in itertools.product(range(mdp.num_actions), repeat=mdp.num_states):
        policy = Policy.deterministic(actions)
        entries.append((policy, occupancy(mdp, policy, occupancy_kind)))
    return entries


# ---------------------------------------------------------------------------
# Polytope geometry
# ---------------------------------------------------------------------------


def hull_membership(
    point: Distribution,
    basis: Sequence[Distribution],
    tol: Optional[float] = None,
) -> HullResult:
    """
    Test whether ``point`` is a convex combination of ``basis``.

    Solves min ‖[B; 1ᵀ]λ − [point; 1]‖₂ over λ ≥ 0 by NNLS, so the simplex
    constraint is part of the residual.

    Returns:
        HullResult; coefficients (renormalized to sum 1) only when inside
    """
    tol = config.resolve(tol, "hull_tol")
    if not basis:
        raise MalformedSpec("hull_membership needs a nonempty basis")
    x = as_probs(point)
    B = np.column_stack([as_probs(b) for b in basis])
    if B.shape[0] != x.size:
        raise DimensionMismatch(
            f"point has {x.size} entries, basis vectors have {B.shape[0]}"
        )

    A = np.vstack([B, np.ones((1, B.shape[1]))])
    target = np.concatenate([x, [1.0]])
    weights, residual = nnls(A, target)

    inside = bool(residual <= tol) and weights.sum() > 0
    coefficients = weights / weights.sum() if inside else None
    return HullResult(inside=inside, coefficients=coefficients, distance=float(residual))


def extreme_points(
    points: Sequence[Distribution],
    dedupe_tol: Optional[float] = None,
    provenance: Optional[Sequence[Optional[Policy]]] = None,
    hull_tol: Optional[float] = None,
) -> Polytope:
    """
    Reduce a point list to the vertices of its convex hull.

    Deduplicates under L∞ < dedupe_tol (first occurrence wins), then drops
    every point that is a convex combination of the points still kept.
    """
    if not points:
        raise MalformedSpec("extreme_points needs at least one point")
    dedupe_tol = config.resolve(dedupe_tol, "dedupe_tol")
    hull_tol = config.resolve(hull_tol, "hull_tol")
    provenance = list(provenance) if provenance else [None] * len(points)

    arrays = [as_probs(p) for p in points]
    kept: List[int] = []
    for i, p in enumerate(arrays):
        if all(np.max(np.abs(p - arrays[j])) >= dedupe_tol for j in kept):
            kept.append(i)

    for i in list(kept):
        others = [j for j in kept if j != i]
        if others and hull_membership(arrays[i], [arrays[j] for j in others], hull_tol).inside:
            kept.remove(i)

    return Polytope(
        vertices=tuple(
            p if isinstance(p, OccupancyMeasure) else OccupancyMeasure(p)
            for p in (points[i] for i in kept)
        ),
        provenance=tuple(provenance[i] for i in kept),
    )


def polytope_from_mdp(
    mdp: TabularMdp,
    dedupe_tol: Optional[float] = None,
    occupancy_kind: Optional[str] = None,
) -> Polytope:
    """Vertices of the feasible state-distribution polytope of ``mdp``."""
    entries = enumerate_policy_occupancies(mdp, occupancy_kind=occupancy_kind)
    return extreme_points(
        [occ for _, occ in entries],
        dedupe_tol=dedupe_tol,
        provenance=[policy for policy, _ in entries],
    )


def optimal_vertex(
    polytope: Polytope, reward: Sequence[float], tie_tol: Optional[float] = None
) -> Tuple[int, float]:
    """Vertex maximizing ⟨p_v, reward⟩; ties go to the lowest index."""
    r = np.asarray(reward, dtype=float)
    if r.size != polytope.num_states:
        raise DimensionMismatch(
            f"reward has {r.size} entries, polytope has {polytope.num_states} states"
        )
    if not np.all(np.isfinite(r)):
        raise MalformedSpec("reward must be finite")
    tie_tol = config.resolve(tie_tol, "tie_tol")

    values = polytope.matrix @ r
    best = int(np.flatnonzero(values >= values.max() - tie_tol)[0])
    return best, float(values[best])


def random_mdp(
    rng: np.random.Generator,
    num_states: int,
    num_actions: int,
    gamma: float = 0.9,
    occupancy_kind: str = "discounted",
    concentration: float = 1.0,
) -> TabularMdp:
    """Random MDP with Dirichlet transition rows and initial distribution."""
    alpha = np.full(num_states, concentration)
    return TabularMdp(
        transitions=rng.dirichlet(alpha, size=(num_actions, num_states)),
        initial=rng.dirichlet(alpha),
        gamma=gamma,
        occupancy_kind=occupancy_kind,
    )
