"""
Skillgeo Estimators - Sample-based counterparts of the exact quantities

Features:
- Particle-based entropy from k-nearest-neighbor distances
- kNN estimate of I(S;1_z) and of LSEPIN
- Sliced 1-Wasserstein distance over random orthonormal frames
- Seeded sampling of skill sets into embedded particles
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln
from scipy.stats import ortho_group

from . import config
from .divergences import SkillSet
from .errors import DimensionMismatch, MalformedSpec, TooFewSamples


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Embedded state samples, optionally labeled with the emitting skill."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    seed: int = 0

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or len(points) == 0:
            raise MalformedSpec(f"samples must be a nonempty 2-D array, got {points.shape}")
        object.__setattr__(self, "points", points)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (len(points),):
                raise DimensionMismatch(f"{labels.size} labels for {len(points)} samples")
            if labels.min() < 0:
                raise MalformedSpec("skill labels must be nonnegative")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, mask: np.ndarray) -> "SampleBatch":
        labels = self.labels[mask] if self.labels is not None else None
        return SampleBatch(self.points[mask], labels, self.seed)


def particle_entropy(
    batch: SampleBatch, k: Optional[int] = None, c_stab: Optional[float] = None
) -> float:
    """
    Σ_i log(c_stab + mean distance from s_i to its k nearest neighbors).

    Raises:
        TooFewSamples: k >= number of samples
    """
    k = config.resolve(k, "knn_k")
    c_stab = config.resolve(c_stab, "c_stab")
    if k < 1:
        raise MalformedSpec("k must be at least 1")
    if c_stab < 0:
        raise MalformedSpec("c_stab must be nonnegative")
    if k >= len(batch):
        raise TooFewSamples(f"{len(batch)} samples cannot supply {k} neighbors each")

    # The closest hit of every query is the point itself (distance 0)
    distances, _ = cKDTree(batch.points).query(batch.points, k=k + 1)
    return float(np.sum(np.log(c_stab + distances[:, 1:].mean(axis=1))))


def knn_indicator_mi(
    batch: SampleBatch,
    z: int,
    k: Optional[int] = None,
    c_stab: Optional[float] = None,
) -> float:
    """
    H(S) − [H(S|Z=z) + H(S|Z≠z)] with every term a particle entropy.

    The conditional part is the unweighted sum of the two subset entropies.

    Raises:
        TooFewSamples: either subset has at most k samples
    """
    k = config.resolve(k, "knn_k")
    if batch.labels is None:
        raise MalformedSpec("knn_indicator_mi needs skill labels")
    mask = batch.labels == z
    if mask.sum() <= k or (~mask).sum() <= k:
        raise TooFewSamples(
            f"skill {z} has {int(mask.sum())} samples and its complement "
            f"{int((~mask).sum())}; both need more than k = {k}"
        )
    conditional = particle_entropy(batch.subset(mask), k, c_stab) + particle_entropy(
        batch.subset(~mask), k, c_stab
    )
    return particle_entropy(batch, k, c_stab) - conditional


def estimate_lsepin(
    batch: SampleBatch, k: Optional[int] = None, c_stab: Optional[float] = None
) -> float:
    """Min over skill labels of knn_indicator_mi."""
    if batch.labels is None:
        raise MalformedSpec("estimate_lsepin needs skill labels")
    return min(knn_indicator_mi(batch, int(z), k, c_stab) for z in np.unique(batch.labels))


def _directions(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` unit directions drawn as blocks of random orthonormal frames."""
    if dim == 1:
        return rng.choice([-1.0, 1.0], size=(count, 1))
    frames = []
    while len(frames) * dim < count:
        frames.append(ortho_group.rvs(dim, random_state=rng))
    return np.vstack(frames)[:count]


def _sphere_abs_mean(dim: int) -> float:
    """E|θ_1| for θ uniform on the unit sphere in ``dim`` dimensions."""
    return float(np.exp(gammaln(dim / 2.0) - gammaln((dim + 1) / 2.0)) / np.sqrt(np.pi))


def sliced_w1(
    a: SampleBatch,
    b: SampleBatch,
    n_projections: Optional[int] = None,
    seed: int = 0,
    normalize: bool = False,
) -> float:
    """
    Mean over random directions of the 1-D W1 between projected samples.

    Batches of different sizes are bootstrapped (seeded) to the larger size.
    ``normalize`` divides by E|θ_1| so the value is comparable with the
    Euclidean W1 in the sample dimension.

    Raises:
        DimensionMismatch: batches live in different dimensions
    """
    n_projections = config.resolve(n_projections, "n_projections")
    if n_projections < 1:
        raise MalformedSpec("n_projections must be at least 1")
    if a.dim != b.dim:
        raise DimensionMismatch(f"batches have dimensions {a.dim} and {b.dim}")

    x, y = a.points, b.points
    if len(x) != len(y):
        resample = np.random.default_rng([seed, 1])
        size = max(len(x), len(y))
        if len(x) < size:
            x = x[resample.integers(len(x), size=size)]
        else:
            y = y[resample.integers(len(y), size=size)]

    theta = _directions(a.dim, n_projections, np.random.default_rng([seed, 0]))
    px = np.sort(x @ theta.T, axis=0)
    py = np.sort(y @ theta.T, axis=0)
    value = float(np.mean(np.abs(px - py)))
    if normalize:
        value /= _sphere_abs_mean(a.dim)
    return value


def sample_skillset(
    ss: SkillSet,
    n_per_skill: int,
    seed: int = 0,
    embedding: Optional[np.ndarray] = None,
    jitter: float = 0.0,
) -> SampleBatch:
    """
    Draw ``n_per_skill`` states from every learned skill and embed them.

    Skill z uses the sub-stream (seed, z), so results do not depend on the
    order skills are sampled in. The default embedding is one-hot; ``jitter``
    adds isotropic Gaussian noise of that scale to the embedded points.
    """
    if n_per_skill < 1:
        raise MalformedSpec("n_per_skill must be at least 1")
    num_states = ss.num_states
    if embedding is None:
        embedding = np.eye(num_states)
    embedding = np.asarray(embedding, dtype=float)
    if embedding.ndim != 2 or embedding.shape[0] != num_states:
        raise DimensionMismatch(
            f"embedding has shape {embedding.shape}, expected {num_states} rows"
        )

    points, labels = [], []
    for z in ss.active():
        rng = np.random.default_rng([seed, z])
        states = rng.choice(num_states, size=n_per_skill, p=ss.skills[z].probs)
        emitted = embedding[states]
        if jitter > 0:
            emitted = emitted + rng.normal(0.0, jitter, size=emitted.shape)
        points.append(emitted)
        labels.append(np.full(n_per_skill, z))
    return SampleBatch(np.vstack(points), np.concatenate(labels), seed)
