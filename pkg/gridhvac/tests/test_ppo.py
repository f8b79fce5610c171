#!/usr/bin/env python

import numpy as np
from numpy import testing
import pytest

from ..env import EnvFactory, ScenarioConfig
from ..es import evaluate_fitness
from ..models import five_zone_office
from ..nn import (GaussianPolicy, MlpSpec, flatten, init_gaussian_policy,
                  init_mlp, transfer_warm_start, unflatten)
from ..ppo import (MeanActionCost, Minibatch, PpoConfig, RolloutBatch,
                   collect_rollouts, compute_gae, ppo_loss, train_ppo)
from ..rom import ExogenousGeneratorConfig, generate_synthetic_exogenous
from ..utils import TrainingDivergedError


def numerical_gradient(f, x, eps=1e-6):
    grad = np.empty(len(x))
    for i in range(len(x)):
        step = np.zeros(len(x))
        step[i] = eps
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * eps)
    return grad


def small_factory():
    day = generate_synthetic_exogenous(ExogenousGeneratorConfig(), 1, 3)
    return EnvFactory(five_zone_office(), ScenarioConfig(), [day])


class TestAdvantages():

    def test_worked_example(self):
        batch = RolloutBatch(np.zeros((3, 2)), np.zeros((3, 1)),
                             [1.0, 1.0, 1.0], np.zeros(3), np.full(3, 0.5),
                             [3])
        advantages, targets = compute_gae(batch, 0.9, 0.8, normalize=False)
        testing.assert_allclose(advantages, [1.8932, 1.31, 0.5])
        testing.assert_allclose(targets, [2.3932, 1.81, 1.0])

    def test_episodes_are_independent(self):
        one = RolloutBatch(np.zeros((3, 2)), np.zeros((3, 1)),
                           [1.0, 1.0, 1.0], np.zeros(3), np.full(3, 0.5),
                           [3])
        two = RolloutBatch.concatenate([one, one])
        assert two.episode_ends == [3, 6]
        advantages, _ = compute_gae(two, 0.9, 0.8, normalize=False)
        testing.assert_allclose(advantages[:3], advantages[3:])
        testing.assert_allclose(two.episode_returns, [3.0, 3.0])

    def test_normalization(self):
        rng = np.random.default_rng(0)
        batch = RolloutBatch(np.zeros((20, 2)), np.zeros((20, 1)),
                             rng.standard_normal(20), np.zeros(20),
                             rng.standard_normal(20), [8, 20])
        advantages, targets = compute_gae(batch, 0.99, 0.95)
        testing.assert_allclose(advantages.mean(), 0.0, atol=1e-12)
        testing.assert_allclose(advantages.std(), 1.0, rtol=1e-6)
        raw, raw_targets = compute_gae(batch, 0.99, 0.95, normalize=False)
        testing.assert_array_equal(targets, raw_targets)

    def test_bad_batches(self):
        with pytest.raises(ValueError):
            RolloutBatch(np.zeros((3, 2)), np.zeros((3, 1)), np.zeros(3),
                         np.zeros(3), np.zeros(3), [2])
        with pytest.raises(ValueError):
            RolloutBatch(np.zeros((3, 2)), np.zeros((2, 1)), np.zeros(3),
                         np.zeros(3), np.zeros(3), [3])


class TestLoss():

    def setup_method(self):
        self.rng = np.random.default_rng(5)
        self.spec = MlpSpec((4, 6, 4))
        self.value_spec = MlpSpec((4, 5, 1))
        self.policy = init_gaussian_policy(self.spec, 1, sigma_init=0.4)
        self.value_net = init_mlp(self.value_spec, seed=2)
        self.config = PpoConfig(clip_ratio=0.2, entropy_coefficient=0.01,
                                value_loss_coefficient=0.5)
        states = self.rng.standard_normal((16, 4))
        mean, sigma = self.policy.distribution(states)
        actions = mean + sigma * self.rng.standard_normal(mean.shape)
        log_probs = self.policy.log_prob(states, actions) + \
            0.3 * self.rng.standard_normal(16)
        self.minibatch = Minibatch(states, actions, log_probs,
                                   self.rng.standard_normal(16),
                                   self.rng.standard_normal(16))

    def test_gradients_against_finite_differences(self):
        _, policy_grad, value_grad, info = ppo_loss(
            self.policy, self.value_net, self.minibatch, self.config)
        # some ratios are clipped
        assert 0.0 < info['clip_fraction'] < 1.0

        def policy_loss(params):
            policy = GaussianPolicy(unflatten(params, self.spec),
                                    self.policy.sigma_floor)
            return ppo_loss(policy, self.value_net, self.minibatch,
                            self.config)[0]

        def value_loss(params):
            return ppo_loss(self.policy, unflatten(params, self.value_spec),
                            self.minibatch, self.config)[0]

        testing.assert_allclose(
            policy_grad, numerical_gradient(policy_loss,
                                            flatten(self.policy.net)),
            rtol=1e-4, atol=1e-7)
        testing.assert_allclose(
            value_grad, numerical_gradient(value_loss,
                                           flatten(self.value_net)),
            rtol=1e-4, atol=1e-7)

    def test_clipped_samples_give_no_policy_gradient(self):
        mb = self.minibatch
        # every ratio far above 1 + clip_ratio with positive advantages
        minibatch = Minibatch(mb.states, mb.actions, mb.log_probs - 10.0,
                              np.abs(mb.advantages), mb.targets)
        config = self.config.replace(entropy_coefficient=0.0)
        _, policy_grad, _, info = ppo_loss(self.policy, self.value_net,
                                           minibatch, config)
        testing.assert_array_equal(policy_grad, 0.0)
        assert info['clip_fraction'] == 1.0
        testing.assert_allclose(info['policy_loss'],
                                -1.2 * np.mean(np.abs(mb.advantages)))


class TestTraining():

    def setup_method(self):
        self.factory = small_factory()
        self.es_spec = MlpSpec((108, 16, 6))
        self.es_net = init_mlp(self.es_spec, seed=8)
        self.config = PpoConfig(iterations=2, rollout_episodes=1,
                                epochs_per_batch=1, minibatch_size=96,
                                eval_episodes=1, checkpoint_every=0)

    def warm_start(self):
        return transfer_warm_start(self.es_net, self.es_spec.with_outputs(12),
                                   self.es_spec.with_outputs(1))

    def test_warm_start_matches_the_es_fitness(self):
        policy, _ = self.warm_start()
        evaluate = MeanActionCost(policy.net.spec, policy.sigma_floor,
                                  self.factory, 2)
        assert evaluate(flatten(policy.net), 17) == evaluate_fitness(
            flatten(self.es_net), self.es_spec, self.factory, 2, 17)

    def test_rollouts_are_reproducible(self):
        policy, value_net = self.warm_start()
        first = collect_rollouts(policy, value_net, self.factory,
                                 self.config, 3)
        second = collect_rollouts(policy, value_net, self.factory,
                                  self.config, 3)
        assert len(first) == 288
        assert first.episode_ends == [288]
        testing.assert_array_equal(first.actions, second.actions)
        testing.assert_array_equal(first.rewards, second.rewards)
        testing.assert_allclose(first.log_probs,
                                policy.log_prob(first.states, first.actions))

    def test_frozen_policy(self):
        policy, value_net = self.warm_start()
        before = flatten(policy.net)
        value_before = flatten(value_net)
        config = self.config.replace(learning_rate=0.0)
        result = train_ppo(policy, value_net, config, self.factory,
                           eval_seed=4)
        testing.assert_array_equal(flatten(result.policy.net), before)
        assert not np.array_equal(flatten(result.value_net), value_before)
        assert len(result.curve) == 2
        assert result.curve[0].eval_cost_deterministic == \
            result.curve[1].eval_cost_deterministic
        assert result.final_eval_cost == result.initial_eval_cost
        testing.assert_allclose(result.curve[0].mean_sigma, 0.1, atol=1e-9)

    def test_final_evaluation_is_checked(self, monkeypatch):
        policy, value_net = self.warm_start()
        for last in (np.inf, 31.0):
            costs = iter([10.0, 10.0, last])
            monkeypatch.setattr(MeanActionCost, '__call__',
                                lambda cost, params, seed: next(costs))
            with pytest.raises(TrainingDivergedError) as info:
                train_ppo(policy, value_net, self.config, self.factory,
                          eval_seed=4)
            assert len(info.value.curve) == 2
            assert 'Iteration 2' in str(info.value)

    def test_checkpoints(self):
        calls = []
        policy, value_net = self.warm_start()
        config = self.config.replace(iterations=2, checkpoint_every=1)
        train_ppo(policy, value_net, config, self.factory,
                  checkpoint=lambda i, p, v: calls.append(i))
        assert calls == [1, 2]
