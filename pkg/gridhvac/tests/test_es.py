#!/usr/bin/env python

import numpy as np
from numpy import testing
import pytest

from ..es import (EsConfig, centered_ranks, es_gradient, perturb_population,
                  train_es)
from ..utils import TrainingDivergedError


class Quadratic(object):
    """Squared distance to a target, picklable for worker pools."""

    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)

    def __call__(self, params, seed):
        return float(np.sum((params - self.target) ** 2))


class NotANumber(object):

    def __call__(self, params, seed):
        return np.nan


class NotANumberAfter(object):
    """Quadratic cost for the first ``calls`` calls, NaN afterwards."""

    def __init__(self, target, calls):
        self.quadratic = Quadratic(target)
        self.calls = calls

    def __call__(self, params, seed):
        self.calls -= 1
        return self.quadratic(params, seed) if self.calls >= 0 else np.nan


class TestGradientEstimate():

    def setup_method(self):
        self.rng = np.random.default_rng(0)
        self.directions = self.rng.standard_normal((5, 3))

    def test_centered_ranks(self):
        testing.assert_allclose(centered_ranks([3.0, 1.0, 2.0]),
                                [0.5, -0.5, 0.0])
        testing.assert_allclose(centered_ranks([1.0, 1.0, 5.0]),
                                [-0.25, -0.25, 0.5])
        testing.assert_array_equal(centered_ranks([4.0]), [0.0])

    def test_constant_fitness_gives_no_step(self):
        gradient = es_gradient(np.full(10, 3.0), self.directions, 0.05)
        testing.assert_array_equal(gradient, 0.0)

    def test_monotone_invariance(self):
        fitness = self.rng.standard_normal(10)
        gradient = es_gradient(fitness, self.directions, 0.05)
        testing.assert_array_equal(
            es_gradient(np.exp(fitness), self.directions, 0.05), gradient)
        testing.assert_array_equal(
            es_gradient(3.0 * fitness + 7.0, self.directions, 0.05), gradient)

    def test_points_uphill(self):
        # fitness increasing along the first axis
        theta = np.zeros(3)
        config = EsConfig(population_size=10, sigma=0.05)
        directions, candidates = perturb_population(theta, config, 4)
        gradient = es_gradient(candidates[:, 0], directions, config.sigma)
        assert gradient[0] > 0.0

    def test_bad_input(self):
        with pytest.raises(ValueError):
            es_gradient(np.zeros(9), self.directions, 0.05)
        fitness = np.zeros(10)
        fitness[3] = np.inf
        with pytest.raises(FloatingPointError):
            es_gradient(fitness, self.directions, 0.05)


def test_antithetic_population():
    theta = np.array([1.0, -1.0, 0.5, 2.0])
    config = EsConfig(population_size=6, sigma=0.1)
    directions, candidates = perturb_population(theta, config, 12)
    assert directions.shape == (3, 4)
    assert candidates.shape == (6, 4)
    testing.assert_allclose(candidates[0::2], theta + 0.1 * directions)
    testing.assert_allclose(candidates[1::2], theta - 0.1 * directions)
    testing.assert_allclose(candidates[0] + candidates[1], 2.0 * theta)
    again, _ = perturb_population(theta, config, 12)
    testing.assert_array_equal(again, directions)


def test_population_size_is_even():
    with pytest.raises(ValueError):
        EsConfig(population_size=7)


class TestTraining():

    def setup_method(self):
        self.target = np.array([2.0, -2.0, 2.5])
        self.config = EsConfig(population_size=10, sigma=0.05,
                               learning_rate=0.02, iterations=200,
                               checkpoint_every=0)

    def test_converges_on_a_quadratic(self):
        initial = np.linalg.norm(self.target)
        for seed in range(5):
            result = train_es(np.zeros(3), self.config.replace(seed=seed),
                              fitness=Quadratic(self.target))
            distance = np.linalg.norm(result.params - self.target)
            assert distance < 0.1 * initial
            assert len(result.curve) == 200
            assert result.final_eval_cost < result.initial_eval_cost

    def test_curve_rows(self):
        config = self.config.replace(iterations=3)
        result = train_es(np.zeros(3), config, fitness=Quadratic(self.target))
        assert [r.iteration for r in result.curve] == [0, 1, 2]
        # evaluated at the start of each iteration
        testing.assert_allclose(result.curve[0].eval_cost, 14.25)
        assert result.initial_eval_cost == result.curve[0].eval_cost
        for row in result.curve:
            assert row.min_cost <= row.mean_cost

    def test_zero_learning_rate(self):
        config = self.config.replace(iterations=5, learning_rate=0.0)
        theta = np.array([0.3, 0.2, 0.1])
        result = train_es(theta, config, fitness=Quadratic(self.target))
        testing.assert_array_equal(result.params, theta)
        assert len({r.eval_cost for r in result.curve}) == 1

    def test_workers_do_not_change_the_result(self):
        config = self.config.replace(iterations=10)
        serial = train_es(np.zeros(3), config, fitness=Quadratic(self.target))
        parallel = train_es(np.zeros(3), config.replace(worker_count=2),
                            fitness=Quadratic(self.target))
        testing.assert_array_equal(serial.params, parallel.params)

    def test_checkpoints(self):
        calls = []
        config = self.config.replace(iterations=25, checkpoint_every=10)
        train_es(np.zeros(3), config, fitness=Quadratic(self.target),
                 checkpoint=lambda i, params: calls.append(i))
        assert calls == [10, 20]

    def test_divergence_keeps_the_partial_curve(self):
        with pytest.raises(TrainingDivergedError) as info:
            train_es(np.zeros(3), self.config, fitness=NotANumber())
        assert info.value.curve == []

    def test_final_evaluation_is_checked(self):
        config = self.config.replace(iterations=2)
        # two iterations of one evaluation and ten candidates each
        fitness = NotANumberAfter(self.target, 22)
        with pytest.raises(TrainingDivergedError) as info:
            train_es(np.zeros(3), config, fitness=fitness)
        assert len(info.value.curve) == 2

    def test_requires_a_fitness(self):
        with pytest.raises(ValueError):
            train_es(np.zeros(3), self.config)
