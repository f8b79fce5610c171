#!/usr/bin/env python

import json
import os
import shutil
import tempfile

import numpy as np
from numpy import testing
import pytest
from scipy.stats import norm

from ..nn import (Adam, GaussianPolicy, Mlp, MlpSpec, clip_grad_norm,
                  default_spec, flatten, init_gaussian_policy, init_mlp,
                  load_checkpoint, save_checkpoint, softplus,
                  transfer_warm_start, unflatten)
from ..utils import MalformedFileError


def relative_error(a, b):
    scale = max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / scale


def numerical_gradient(f, x, eps=1e-6):
    x = np.array(x, dtype=float)
    grad = np.empty(x.size)
    for i in range(x.size):
        step = np.zeros(x.size)
        step[i] = eps
        grad[i] = (f(x + step.reshape(x.shape)) -
                   f(x - step.reshape(x.shape))) / (2.0 * eps)
    return grad.reshape(x.shape)


class TestMlp():

    def setup_method(self):
        self.spec = MlpSpec((4, 5, 3, 2))
        self.rng = np.random.default_rng(0)

    def test_default_architecture(self):
        spec = default_spec()
        assert spec.layer_sizes == (108, 256, 128, 128, 64, 64, 32, 16, 6)
        assert spec.n_params == 92438
        assert spec.with_outputs(12).layer_sizes[-1] == 12

    def test_flat_layout(self):
        net = init_mlp(self.spec, seed=1)
        vec = flatten(net)
        assert vec.shape == (self.spec.n_params,)
        # first layer weights are stored row major
        testing.assert_array_equal(vec[:20], net.weights[0].ravel())
        testing.assert_array_equal(vec[20:25], net.biases[0])
        other = Mlp.zeros(self.spec)
        other.assign(vec)
        testing.assert_array_equal(flatten(other), vec)
        testing.assert_array_equal(flatten(unflatten(vec, self.spec)), vec)
        with pytest.raises(ValueError):
            unflatten(vec[:-1], self.spec)

    def test_initialization(self):
        net = init_mlp(self.spec, seed=3)
        testing.assert_array_equal(flatten(net),
                                   flatten(init_mlp(self.spec, seed=3)))
        assert np.all(np.abs(net.weights[0]) <= 0.5)
        assert np.all(np.abs(net.weights[1]) <= 1.0 / np.sqrt(5.0))
        testing.assert_array_equal(
            flatten(init_mlp(self.spec, scheme='zeros')), 0.0)
        with pytest.raises(ValueError):
            init_mlp(self.spec, scheme='xavier')

    def test_forward_batch(self):
        net = init_mlp(self.spec, seed=2)
        x = self.rng.standard_normal((7, 4))
        batch = net.forward(x)
        assert batch.shape == (7, 2)
        testing.assert_allclose(net.forward(x[3]), batch[3], rtol=1e-12)
        with pytest.raises(ValueError):
            net.forward(np.ones(3))

    def test_backward_against_finite_differences(self):
        for _ in range(100):
            net = init_mlp(self.spec, rng=self.rng)
            x = self.rng.standard_normal((3, 4))
            upstream = self.rng.standard_normal((3, 2))
            vec = flatten(net)

            def loss(params):
                return np.sum(upstream * unflatten(params,
                                                   self.spec).forward(x))

            grad, grad_x = net.backward(x, upstream)
            assert relative_error(grad, numerical_gradient(loss, vec)) < 1e-4
            fd_x = numerical_gradient(
                lambda v: np.sum(upstream * net.forward(v)), x)
            assert relative_error(grad_x, fd_x) < 1e-4

    def test_backward_single_input(self):
        net = init_mlp(self.spec, seed=5)
        x = self.rng.standard_normal(4)
        upstream = self.rng.standard_normal(2)
        grad, grad_x = net.backward(x, upstream)
        batch_grad, batch_x = net.backward(x[np.newaxis], upstream[np.newaxis])
        testing.assert_allclose(grad, batch_grad)
        assert grad_x.shape == (4,)
        with pytest.raises(ValueError):
            net.backward(x, np.ones(3))

    def test_invalid_parameters(self):
        net = init_mlp(self.spec, seed=0)
        weights = [w.copy() for w in net.weights]
        weights[1][0, 0] = np.nan
        with pytest.raises(ValueError):
            Mlp(self.spec, weights, net.biases)
        with pytest.raises(ValueError):
            Mlp(self.spec, net.weights[:-1], net.biases)


class TestGaussianPolicy():

    def setup_method(self):
        self.spec = MlpSpec((4, 6, 4))
        self.rng = np.random.default_rng(1)
        self.policy = init_gaussian_policy(self.spec, 0, sigma_init=0.3)

    def test_initial_sigma(self):
        states = self.rng.standard_normal((10, 4))
        _, sigma = self.policy.distribution(states)
        testing.assert_allclose(sigma, 0.3, rtol=1e-12)

    def test_log_prob_and_entropy(self):
        states = self.rng.standard_normal((5, 4))
        mean, sigma = self.policy.distribution(states)
        actions = mean + self.rng.standard_normal(mean.shape)
        expected = np.sum(norm.logpdf(actions, mean, sigma), axis=-1)
        testing.assert_allclose(self.policy.log_prob(states, actions),
                                expected, rtol=1e-10)
        expected = np.sum(norm.entropy(scale=sigma), axis=-1)
        testing.assert_allclose(self.policy.entropy(states), expected,
                                rtol=1e-10)

    def test_sample(self):
        state = self.rng.standard_normal(4)
        action, logp = self.policy.sample(state, np.random.default_rng(2))
        again, logp_again = self.policy.sample(state,
                                               np.random.default_rng(2))
        testing.assert_array_equal(action, again)
        assert logp == logp_again
        testing.assert_allclose(logp, self.policy.log_prob(state, action))

    def test_backward_against_finite_differences(self):
        for _ in range(100):
            net = init_mlp(self.spec, rng=self.rng)
            policy = GaussianPolicy(net, sigma_floor=1e-3)
            states = self.rng.standard_normal((3, 4))
            a = self.rng.standard_normal((3, 2))
            c = self.rng.standard_normal((3, 2))

            def loss(params):
                mean, sigma = GaussianPolicy(unflatten(params, self.spec),
                                             1e-3).distribution(states)
                return np.sum(a * mean + c * sigma)

            grad = policy.backward(states, a, c)
            fd = numerical_gradient(loss, flatten(net))
            assert relative_error(grad, fd) < 1e-4

    def test_odd_outputs(self):
        with pytest.raises(ValueError):
            GaussianPolicy(Mlp.zeros(MlpSpec((4, 3))))

    def test_softplus_is_stable(self):
        testing.assert_allclose(softplus(np.array([-800.0, 0.0, 800.0])),
                                [0.0, np.log(2.0), 800.0])


class TestWarmStart():

    def setup_method(self):
        self.es_spec = default_spec()
        self.es_net = init_mlp(self.es_spec, seed=11)
        self.policy_spec = self.es_spec.with_outputs(12)
        self.value_spec = self.es_spec.with_outputs(1)

    def test_mean_action_is_the_es_output(self):
        policy, value = transfer_warm_start(self.es_net, self.policy_spec,
                                            self.value_spec)
        states = np.random.default_rng(0).standard_normal((1000, 108))
        testing.assert_array_equal(policy.mean_action(states),
                                   self.es_net.forward(states))
        _, sigma = policy.distribution(states)
        testing.assert_allclose(sigma, 0.1, rtol=0.0, atol=1e-9)

    def test_hidden_layers_are_copied(self):
        policy, value = transfer_warm_start(self.es_net, self.policy_spec,
                                            self.value_spec, seed=4)
        for k in range(self.es_spec.n_layers - 1):
            testing.assert_array_equal(policy.net.weights[k],
                                       self.es_net.weights[k])
            testing.assert_array_equal(value.weights[k],
                                       self.es_net.weights[k])
            testing.assert_array_equal(value.biases[k], self.es_net.biases[k])
        assert value.spec == self.value_spec
        testing.assert_array_equal(policy.net.weights[-1][6:], 0.0)
        _, again = transfer_warm_start(self.es_net, self.policy_spec,
                                       self.value_spec, seed=4)
        testing.assert_array_equal(flatten(value), flatten(again))

    def test_incompatible_specs(self):
        with pytest.raises(ValueError):
            transfer_warm_start(self.es_net, self.es_spec.with_outputs(10),
                                self.value_spec)
        with pytest.raises(ValueError):
            transfer_warm_start(self.es_net, self.policy_spec,
                                MlpSpec((108, 32, 1)))
        with pytest.raises(ValueError):
            transfer_warm_start(self.es_net, self.policy_spec,
                                self.value_spec, sigma_init=1e-3)


class TestOptimization():

    def test_adam_without_learning_rate(self):
        params = np.array([1.0, -2.0, 3.0])
        optimizer = Adam(3, 0.0)
        for _ in range(5):
            result = optimizer.step(params, np.array([0.5, 1.0, -1.0]))
        testing.assert_array_equal(result, params)

    def test_adam_minimizes_a_quadratic(self):
        params = np.array([3.0, -4.0])
        optimizer = Adam(2, 0.1)
        for _ in range(500):
            params = optimizer.step(params, 2.0 * params)
        testing.assert_allclose(params, 0.0, atol=0.1)

    def test_adam_rejects_negative_rates(self):
        with pytest.raises(ValueError):
            Adam(2, -1e-3)

    def test_clip_grad_norm(self):
        grad, n = clip_grad_norm(np.array([3.0, 4.0]), 1.0)
        assert n == 5.0
        testing.assert_allclose(grad, [0.6, 0.8])
        grad, n = clip_grad_norm(np.array([0.3, 0.4]), 1.0)
        testing.assert_array_equal(grad, [0.3, 0.4])


class TestCheckpoints():

    def setup_method(self):
        self.directory = tempfile.mkdtemp()
        self.path = os.path.join(self.directory, 'checkpoint.json')

    def teardown_method(self):
        shutil.rmtree(self.directory)

    def test_parameters_round_trip_exactly(self):
        spec = MlpSpec((4, 8, 6))
        policy = init_mlp(spec, seed=2)
        value = init_mlp(spec.with_outputs(1), seed=3)
        save_checkpoint(self.path, {'policy': policy, 'value': value},
                        kind='gaussian', sigma_floor=1e-3, iteration=7)
        networks, header = load_checkpoint(self.path)
        testing.assert_array_equal(flatten(networks['policy']),
                                   flatten(policy))
        testing.assert_array_equal(flatten(networks['value']),
                                   flatten(value))
        assert header['kind'] == 'gaussian'
        assert header['iteration'] == 7
        assert header['format_version'] == 1

    def test_malformed(self):
        save_checkpoint(self.path, {'policy': init_mlp(MlpSpec((2, 2)))})
        with open(self.path) as f:
            data = json.load(f)
        data['networks']['policy']['params'] = data['networks']['policy'][
            'params'][:8]
        with open(self.path, 'w') as f:
            json.dump(data, f)
        with pytest.raises(MalformedFileError):
            load_checkpoint(self.path)

        del data['networks']
        with open(self.path, 'w') as f:
            json.dump(data, f)
        with pytest.raises(MalformedFileError):
            load_checkpoint(self.path)
