"""Tests for the particle-based estimators."""

import math

import numpy as np
import pytest
from scipy.stats import spearmanr

from skillgeo.divergences import SkillSet, lsepin
from skillgeo.errors import DimensionMismatch, MalformedSpec, TooFewSamples
from skillgeo.estimators import (
    SampleBatch,
    estimate_lsepin,
    knn_indicator_mi,
    particle_entropy,
    sample_skillset,
    sliced_w1,
)
from skillgeo.scenarios import V1, V2


def _clusters(offset, labels_from, n=200, seed=0):
    """Two Gaussian clouds ``offset`` apart; labels via ``labels_from``."""
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(2 * n, 2))
    points[n:] += offset
    return SampleBatch(points, labels_from(rng, n))


def _by_cloud(rng, n):
    return np.repeat([0, 1], n)


def _shuffled(rng, n):
    return rng.permutation(np.repeat([0, 1], n))


class TestSampleBatch:
    def test_one_dimensional_input_becomes_column(self):
        batch = SampleBatch([0.0, 1.0, 2.0])
        assert batch.dim == 1
        assert len(batch) == 3

    def test_label_count_checked(self):
        with pytest.raises(DimensionMismatch):
            SampleBatch(np.zeros((3, 2)), [0, 1])

    def test_empty(self):
        with pytest.raises(MalformedSpec):
            SampleBatch(np.zeros((0, 2)))


class TestParticleEntropy:
    def test_identical_points(self):
        batch = SampleBatch(np.zeros((10, 3)))
        assert particle_entropy(batch, k=3, c_stab=1.0) == 0.0

    def test_spreading_points_raises_entropy(self):
        points = np.random.default_rng(1).normal(size=(300, 2))
        narrow = particle_entropy(SampleBatch(points), k=5)
        wide = particle_entropy(SampleBatch(10 * points), k=5)
        assert wide > narrow

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        points = rng.normal(size=(300, 3))
        shuffled = points[rng.permutation(300)]
        assert particle_entropy(SampleBatch(points)) == pytest.approx(
            particle_entropy(SampleBatch(shuffled)), rel=1e-12
        )

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            particle_entropy(SampleBatch(np.zeros((3, 2))), k=3)


class TestKnnIndicatorMi:
    def test_separated_skills_beat_shuffled_labels(self):
        separated = knn_indicator_mi(_clusters(100.0, _by_cloud), 0)
        shuffled = knn_indicator_mi(_clusters(0.0, _shuffled), 0)
        # Far-apart clouds keep every neighbor inside the subset
        assert separated == pytest.approx(0.0, abs=1e-9)
        assert shuffled < separated

    def test_needs_labels(self):
        with pytest.raises(MalformedSpec):
            knn_indicator_mi(SampleBatch(np.zeros((10, 2))), 0)

    def test_small_subset(self):
        labels = np.array([0] * 3 + [1] * 20)
        batch = SampleBatch(np.random.default_rng(0).normal(size=(23, 2)), labels)
        with pytest.raises(TooFewSamples):
            knn_indicator_mi(batch, 0, k=3)

    @pytest.mark.slow
    def test_lsepin_rank_consistency(self):
        """Estimated LSEPIN orders skill pairs like the exact value."""
        exact, estimated = [], []
        for d in np.linspace(0.0, 0.35, 20):
            ss = SkillSet.uniform(
                [
                    [0.5 + d, 0.25 - d / 2, 0.25 - d / 2],
                    [0.5 - d, 0.25 + d / 2, 0.25 + d / 2],
                ]
            )
            batch = sample_skillset(ss, 5000, seed=int(d * 1000), jitter=0.01)
            exact.append(lsepin(ss)[0])
            estimated.append(estimate_lsepin(batch, k=100, c_stab=0.0))
        rho, _ = spearmanr(exact, estimated)
        assert rho >= 0.8


class TestSlicedW1:
    @pytest.fixture(scope="class")
    def batches(self):
        ss = SkillSet.uniform([V1, V2])
        batch = sample_skillset(ss, 5000, seed=0)
        return batch.subset(batch.labels == 0), batch.subset(batch.labels == 1)

    def test_close_to_exact_transport(self, batches):
        a, b = batches
        expected = math.sqrt(2) * 0.6
        value = sliced_w1(a, b, n_projections=64, normalize=True)
        assert abs(value - expected) <= 0.15 * expected

    def test_symmetric(self, batches):
        a, b = batches
        assert sliced_w1(a, b, seed=4) == pytest.approx(sliced_w1(b, a, seed=4), abs=1e-12)

    def test_more_projections_settle(self, batches):
        a, b = batches
        coarse = sliced_w1(a, b, n_projections=256)
        fine = sliced_w1(a, b, n_projections=512)
        assert abs(coarse - fine) <= 0.05 * fine

    def test_unequal_sizes_are_resampled(self, batches):
        a, b = batches
        shorter = b.subset(np.arange(len(b)) < 1000)
        assert sliced_w1(a, shorter) > 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            sliced_w1(SampleBatch(np.zeros((5, 2))), SampleBatch(np.zeros((5, 3))))


class TestSampleSkillset:
    def test_counts_and_labels(self):
        batch = sample_skillset(SkillSet.uniform([V1, V2]), 50, seed=1)
        assert len(batch) == 100
        assert np.array_equal(np.bincount(batch.labels), [50, 50])

    def test_seeded(self):
        ss = SkillSet.uniform([V1, V2])
        first = sample_skillset(ss, 20, seed=9)
        again = sample_skillset(ss, 20, seed=9)
        assert np.array_equal(first.points, again.points)

    def test_one_hot_embedding(self):
        batch = sample_skillset(SkillSet.uniform([V1]), 30, seed=2)
        assert np.allclose(batch.points.sum(axis=1), 1.0)
        assert set(np.unique(batch.points)) <= {0.0, 1.0}

    def test_embedding_rows_checked(self):
        with pytest.raises(DimensionMismatch):
            sample_skillset(SkillSet.uniform([V1]), 5, embedding=np.eye(4))
