"""
Skillgeo Divergences - Exact information-theoretic and transport quantities

Features:
- KL divergence and entropy (exact zero handling, +inf sentinel)
- I(S;Z), I(S;1_z) and LSEPIN for a weighted skill set
- Exact discrete optimal transport, WSEP and KLSEP
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import entr, rel_entr

from . import config
from .errors import (
    DegenerateComplement,
    DegenerateWeight,
    DimensionMismatch,
    MalformedSpec,
)
from .lp import transport_lp
from .mdp import Distribution, OccupancyMeasure, as_distribution, as_probs

# Triangle-inequality and symmetry slack for CostMatrix flags
COST_TOL = 1e-9
# LSEPIN ties are resolved to the lowest skill index within this gap
LSEPIN_TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SkillSet:
    """Skills p(S|z), weights p(Z) and the derived mixture p(S)."""

    skills: Tuple[OccupancyMeasure, ...]
    weights: np.ndarray
    mixture: OccupancyMeasure = field(init=False)

    def __post_init__(self):
        skills = tuple(
            s if isinstance(s, OccupancyMeasure) else OccupancyMeasure(s)
            for s in self.skills
        )
        if not skills:
            raise MalformedSpec("a skill set needs at least one skill")
        sizes = {len(s) for s in skills}
        if len(sizes) != 1:
            raise DimensionMismatch(f"skills have mixed dimensions {sorted(sizes)}")
        weights = as_distribution(self.weights, "skill weights")
        if weights.size != len(skills):
            raise DimensionMismatch(
                f"{weights.size} weights for {len(skills)} skills"
            )
        object.__setattr__(self, "skills", skills)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(
            self, "mixture", OccupancyMeasure.exact(weights @ self.matrix)
        )

    @classmethod
    def uniform(cls, skills: Sequence[Distribution]) -> "SkillSet":
        return cls(tuple(skills), np.full(len(skills), 1.0 / len(skills)))

    @classmethod
    def from_dict(cls, doc: Union[Dict[str, Any], str, Path]) -> "SkillSet":
        """Build from {"skills": [[...]], "weights": [...]} or a path to it."""
        if isinstance(doc, (str, Path)):
            with open(doc, encoding="utf-8") as f:
                try:
                    doc = json.load(f)
                except json.JSONDecodeError as e:
                    raise MalformedSpec(f"skill set is not valid JSON: {e}") from e
        if not isinstance(doc, dict) or "skills" not in doc:
            raise MalformedSpec("skill set document is missing field 'skills'")
        skills = doc["skills"]
        weights = doc.get("weights")
        if weights is None:
            return cls.uniform(skills)
        return cls(tuple(skills), np.asarray(weights, dtype=float))

    def __len__(self) -> int:
        return len(self.skills)

    @property
    def num_states(self) -> int:
        return len(self.skills[0])

    @property
    def matrix(self) -> np.ndarray:
        """Skills stacked as rows."""
        return np.vstack([s.probs for s in self.skills])

    def active(self, positive_weight: Optional[float] = None) -> List[int]:
        """Indices of skills with p(z) above the learned-skill threshold."""
        threshold = config.resolve(positive_weight, "positive_weight")
        return [i for i, w in enumerate(self.weights) if w > threshold]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "skills": [s.to_list() for s in self.skills],
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Ground transport costs between states."""

    costs: np.ndarray
    symmetric: bool = False
    metric: bool = False

    def __post_init__(self):
        C = np.array(self.costs, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise MalformedSpec(f"cost matrix must be square, got shape {C.shape}")
        if not np.all(np.isfinite(C)):
            raise MalformedSpec("cost matrix has non-finite entries")
        if np.any(np.diag(C) != 0.0):
            raise MalformedSpec("cost matrix diagonal must be exactly 0")
        if C.min() < 0.0:
            raise MalformedSpec("cost matrix entries must be nonnegative")
        if self.symmetric and np.max(np.abs(C - C.T)) > COST_TOL:
            raise MalformedSpec("cost matrix flagged symmetric but is not")
        if self.metric:
            # violation[i, j, k] = C[i, k] - (C[i, j] + C[j, k])
            violation = C[:, None, :] - (C[:, :, None] + C[None, :, :])
            if violation.max() > COST_TOL:
                raise MalformedSpec(
                    f"cost matrix flagged metric but violates the triangle "
                    f"inequality by {violation.max():.3g}"
                )
        C.setflags(write=False)
        object.__setattr__(self, "costs", C)

    @classmethod
    def unit(cls, num_states: int) -> "CostMatrix":
        """Cost 1 between every pair of distinct states."""
        return cls(1.0 - np.eye(num_states), symmetric=True, metric=True)

    @classmethod
    def euclidean(cls, embedding: np.ndarray) -> "CostMatrix":
        """Euclidean distances between state embeddings (one row per state)."""
        return cls(cdist(embedding, embedding), symmetric=True, metric=True)

    @classmethod
    def from_json(
        cls,
        doc: Union[Dict[str, Any], str, Path],
        num_states: Optional[int] = None,
    ) -> "CostMatrix":
        """
        Load {"costs": [[...]], "symmetric": bool, "metric": bool}.

        ``doc`` may also be the string "unit" (needs ``num_states``) or a path.
        """
        if isinstance(doc, str) and doc == "unit":
            if num_states is None:
                raise MalformedSpec("unit cost needs the number of states")
            return cls.unit(num_states)
        if isinstance(doc, (str, Path)):
            with open(doc, encoding="utf-8") as f:
                try:
                    doc = json.load(f)
                except json.JSONDecodeError as e:
                    raise MalformedSpec(f"cost matrix is not valid JSON: {e}") from e
        if doc == "unit":
            return cls.from_json("unit", num_states)
        if not isinstance(doc, dict) or "costs" not in doc:
            raise MalformedSpec("cost document is missing field 'costs'")
        cost = cls(
            np.asarray(doc["costs"], dtype=float),
            symmetric=bool(doc.get("symmetric", False)),
            metric=bool(doc.get("metric", False)),
        )
        if num_states is not None and cost.size != num_states:
            raise DimensionMismatch(
                f"cost matrix covers {cost.size} states, expected {num_states}"
            )
        return cost

    @property
    def size(self) -> int:
        return self.costs.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "costs": self.costs.tolist(),
            "symmetric": self.symmetric,
            "metric": self.metric,
        }


@dataclass
class TransportPlan:
    """Optimal coupling and its cost."""

    plan: np.ndarray
    cost: float


def _pair(p: Distribution, q: Distribution) -> Tuple[np.ndarray, np.ndarray]:
    a, b = as_probs(p), as_probs(q)
    if a.shape != b.shape:
        raise DimensionMismatch(f"distributions have {a.size} and {b.size} entries")
    return a, b


def resolve_cost(c: Optional[CostMatrix], num_states: int) -> CostMatrix:
    if c is None:
        return CostMatrix.unit(num_states)
    if c.size != num_states:
        raise DimensionMismatch(
            f"cost matrix covers {c.size} states, distributions have {num_states}"
        )
    return c


# ---------------------------------------------------------------------------
# Information quantities
# ---------------------------------------------------------------------------


def kl(p: Distribution, q: Distribution, smoothing: float = 0.0) -> float:
    """
    KL(p ‖ q) in nats.

    0·ln(0/q) = 0; returns +inf when some q_s = 0 < p_s. ``smoothing`` mixes
    both arguments with the uniform distribution at weight ε, for estimator
    cross-checks only.
    """
    a, b = _pair(p, q)
    if smoothing > 0.0:
        a = (1.0 - smoothing) * a + smoothing / a.size
        b = (1.0 - smoothing) * b + smoothing / b.size
    return float(np.sum(rel_entr(a, b)))


def entropy(p: Distribution) -> float:
    """Shannon entropy in nats."""
    return float(np.sum(entr(as_probs(p))))


def total_variation(p: Distribution, q: Distribution) -> float:
    a, b = _pair(p, q)
    return 0.5 * float(np.abs(a - b).sum())


def skill_mutual_information(ss: SkillSet) -> float:
    """I(S;Z) = Σ_z p(z)·KL(p(S|z) ‖ p(S))."""
    active = ss.active()
    if len(active) < 2:
        return 0.0
    return float(sum(ss.weights[i] * kl(ss.skills[i], ss.mixture) for i in active))


def complement_distribution(ss: SkillSet, z: int) -> np.ndarray:
    """
    p(S|Z≠z) = (p(S) − p(z)·p(S|z)) / (1 − p(z)).

    Raises:
        DegenerateWeight: p(z) = 1
        DegenerateComplement: a complement entry falls below -1e-9
    """
    pz = float(ss.weights[z])
    if pz >= 1.0:
        raise DegenerateWeight(f"skill {z} carries all the weight")
    comp = (ss.mixture.probs - pz * ss.skills[z].probs) / (1.0 - pz)
    if comp.min() < -1e-9:
        raise DegenerateComplement(
            f"complement of skill {z} has entry {comp.min():.3g}"
        )
    comp = np.clip(comp, 0.0, None)
    return comp / comp.sum()


def indicator_mi(ss: SkillSet, z: int) -> float:
    """
    I(S;1_z) = p(z)·KL(p(S|z) ‖ p(S)) + (1 − p(z))·KL(p(S|Z≠z) ‖ p(S)).

    Returns 0 when p(z) = 1.
    """
    pz = float(ss.weights[z])
    if pz >= 1.0 - 1e-15:
        return 0.0
    comp = complement_distribution(ss, z)
    return pz * kl(ss.skills[z], ss.mixture) + (1.0 - pz) * kl(comp, ss.mixture)


def lsepin(ss: SkillSet) -> Tuple[float, int]:
    """Least separability and informativeness: min over learned z of I(S;1_z)."""
    active = ss.active()
    values = np.array([indicator_mi(ss, z) for z in active])
    pick = int(np.flatnonzero(values <= values.min() + LSEPIN_TIE_TOL)[0])
    return float(values[pick]), active[pick]


# ---------------------------------------------------------------------------
# Optimal transport
# ---------------------------------------------------------------------------


def wasserstein(
    p: Distribution, q: Distribution, c: Optional[CostMatrix] = None
) -> TransportPlan:
    """
    Exact optimal transport between two state distributions.

    Unit cost is used when ``c`` is None.
    """
    a, b = _pair(p, q)
    cost = resolve_cost(c, a.size)
    if np.array_equal(a, b):
        return TransportPlan(plan=np.diag(a), cost=0.0)
    plan, value, _ = transport_lp(a, b, cost.costs)
    return TransportPlan(plan=plan, cost=value)


def pairwise_wasserstein(
    skills: Sequence[Distribution], c: Optional[CostMatrix] = None
) -> np.ndarray:
    """Matrix W[i, j] = W(skills[i], skills[j])."""
    k = len(skills)
    W = np.zeros((k, k))
    symmetric = c is None or c.symmetric
    for i in range(k):
        for j in range(k):
            if i == j or (symmetric and j < i):
                continue
            W[i, j] = wasserstein(skills[i], skills[j], c).cost
            if symmetric:
                W[j, i] = W[i, j]
    return W


def wsep(ss: SkillSet, c: Optional[CostMatrix] = None) -> float:
    """
    Wasserstein separability over learned skills.

    Ordered double sum: every unordered pair is counted twice.
    """
    active = ss.active()
    W = pairwise_wasserstein([ss.skills[i] for i in active], c)
    return float(W.sum())


def klsep(ss: SkillSet) -> float:
    """Ordered double sum of KL divergences between learned skills."""
    active = ss.active()
    total = 0.0
    for i in active:
        for j in active:
            if i != j:
                total += kl(ss.skills[i], ss.skills[j])
    return total
