#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Feedforward networks with hand written reverse mode gradients, their
flat parameter form, the diagonal Gaussian policy head and the transfer of
trained evolution strategies weights into policy and value networks."""

import base64

# external libraries
import numpy as np
from scipy.special import expit

# local
from .utils import (FORMAT_VERSION, MalformedFileError, check_float,
                    check_format_version, read_json, seed_substream,
                    write_json)

DEFAULT_HIDDEN_SIZES = (256, 128, 128, 64, 64, 32, 16)

LOG_2PI = np.log(2.0 * np.pi)


class MlpSpec(object):
    """Layer sizes of a fully connected network with tanh hidden layers and
    a linear output layer.

    Parameters
    ==========
    layer_sizes : sequence of integer
        Input size, hidden sizes and output size.

    """

    def __init__(self, layer_sizes, hidden_activation='tanh'):
        self.layer_sizes = layer_sizes
        if hidden_activation != 'tanh':
            msg = "Only 'tanh' hidden layers are supported, not {!r}."
            raise ValueError(msg.format(hidden_activation))
        self.hidden_activation = hidden_activation

    @property
    def layer_sizes(self):
        return self._layer_sizes

    @layer_sizes.setter
    def layer_sizes(self, sizes):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2:
            msg = 'A network needs at least 2 layer sizes, not {}.'
            raise ValueError(msg.format(sizes))
        if min(sizes) < 1:
            msg = 'Layer sizes must be positive, not {}.'
            raise ValueError(msg.format(sizes))
        self._layer_sizes = sizes

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    @property
    def n_layers(self):
        """Number of affine layers."""
        return len(self.layer_sizes) - 1

    @property
    def hidden_sizes(self):
        return self.layer_sizes[1:-1]

    def param_layout(self):
        """Returns one (weight slice, weight shape, bias slice) triple per
        layer locating it in the flat parameter vector. Weights are stored
        row major with shape (n_out, n_in), followed by the biases."""
        layout = []
        offset = 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            w = slice(offset, offset + n_in * n_out)
            offset += n_in * n_out
            b = slice(offset, offset + n_out)
            offset += n_out
            layout.append((w, (n_out, n_in), b))
        return layout

    @property
    def n_params(self):
        return sum(n_in * n_out + n_out for n_in, n_out in
                   zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def with_outputs(self, n_outputs):
        return MlpSpec(self.layer_sizes[:-1] + (n_outputs,))

    def to_dict(self):
        return {'layer_sizes': list(self.layer_sizes),
                'hidden_activation': self.hidden_activation}

    @classmethod
    def from_dict(cls, data):
        return cls(data['layer_sizes'],
                   data.get('hidden_activation', 'tanh'))

    def __eq__(self, other):
        return (isinstance(other, MlpSpec) and
                self.layer_sizes == other.layer_sizes)

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'MlpSpec({})'.format(list(self.layer_sizes))


def default_spec(n_inputs=108, n_outputs=6):
    return MlpSpec((n_inputs,) + DEFAULT_HIDDEN_SIZES + (n_outputs,))


class Mlp(object):
    """A network conforming to an MlpSpec.

    Parameters
    ==========
    spec : MlpSpec
    weights : sequence of ndarray
        One (n_out, n_in) array per layer.
    biases : sequence of ndarray
        One (n_out,) array per layer.

    """

    def __init__(self, spec, weights, biases):
        self.spec = spec
        weights = [np.array(w, dtype=float) for w in weights]
        biases = [np.array(b, dtype=float) for b in biases]
        if len(weights) != spec.n_layers or len(biases) != spec.n_layers:
            msg = 'The MlpSpec has {} layers, got {} weights and {} biases.'
            raise ValueError(msg.format(spec.n_layers, len(weights),
                                        len(biases)))
        for (_, shape, _), w, b in zip(spec.param_layout(), weights, biases):
            if w.shape != shape or b.shape != (shape[0],):
                msg = 'Layer shapes {} and {} do not match {}.'
                raise ValueError(msg.format(w.shape, b.shape, shape))
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError('Network parameters must be finite.')
        self.weights = weights
        self.biases = biases

    @classmethod
    def zeros(cls, spec):
        return cls(spec, [np.zeros(shape) for _, shape, _ in
                          spec.param_layout()],
                   [np.zeros(shape[0]) for _, shape, _ in
                    spec.param_layout()])

    def _check_input(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.spec.n_inputs or x.ndim > 2:
            msg = 'Expected inputs of size {}, got shape {}.'
            raise ValueError(msg.format(self.spec.n_inputs, x.shape))
        return x

    def hidden(self, x):
        """Returns the activations of the last hidden layer."""
        a = self._check_input(x)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.tanh(a.dot(w.T) + b)
        return a

    def forward(self, x):
        """Returns the network output for one input of shape(n_inputs,) or
        a batch of shape(B, n_inputs)."""
        return self.hidden(x).dot(self.weights[-1].T) + self.biases[-1]

    def backward(self, x, upstream):
        """Returns the gradient of ``sum(upstream * forward(x))`` with
        respect to the flat parameters, shape(n_params,), and with respect
        to x, shaped like x. Batch gradients are summed."""
        x = self._check_input(x)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        g = np.atleast_2d(np.asarray(upstream, dtype=float))
        if g.shape != (x2.shape[0], self.spec.n_outputs):
            msg = 'Expected an upstream gradient of shape {}, got {}.'
            raise ValueError(msg.format((x2.shape[0], self.spec.n_outputs),
                                        g.shape))
        activations = [x2]
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            activations.append(np.tanh(activations[-1].dot(w.T) + b))

        grad = np.empty(self.spec.n_params)
        layout = self.spec.param_layout()
        delta = g
        for k in reversed(range(self.spec.n_layers)):
            w_slice, shape, b_slice = layout[k]
            a_prev = activations[k]
            grad[w_slice] = delta.T.dot(a_prev).ravel()
            grad[b_slice] = delta.sum(axis=0)
            back = delta.dot(self.weights[k])
            if k > 0:
                delta = back * (1.0 - a_prev ** 2)
        grad_x = back[0] if single else back
        return grad, grad_x

    def flatten(self):
        return flatten(self)

    def assign(self, vec):
        """Sets the parameters in place from a flat vector."""
        vec = _check_length(vec, self.spec)
        for k, (w, shape, b) in enumerate(self.spec.param_layout()):
            self.weights[k] = vec[w].reshape(shape).copy()
            self.biases[k] = vec[b].copy()

    def copy(self):
        return Mlp(self.spec, self.weights, self.biases)


def _check_length(vec, spec):
    vec = np.asarray(vec, dtype=float).reshape(-1)
    if len(vec) != spec.n_params:
        msg = 'The MlpSpec needs {} parameters, got {}.'
        raise ValueError(msg.format(spec.n_params, len(vec)))
    return vec


def forward(net, x):
    return net.forward(x)


def backward(net, x, upstream):
    return net.backward(x, upstream)


def flatten(net):
    """Returns the parameters of a network as one flat vector laid out by
    ``MlpSpec.param_layout``."""
    vec = np.empty(net.spec.n_params)
    for (w, _, b), weight, bias in zip(net.spec.param_layout(), net.weights,
                                       net.biases):
        vec[w] = weight.ravel()
        vec[b] = bias
    return vec


def unflatten(vec, spec):
    """Returns the network with the given flat parameters."""
    vec = _check_length(vec, spec)
    layout = spec.param_layout()
    return Mlp(spec, [vec[w].reshape(shape) for w, shape, _ in layout],
               [vec[b] for _, _, b in layout])


def init_mlp(spec, seed=None, scheme='uniform_fan_in', rng=None):
    """Returns a randomly initialized network.

    Parameters
    ==========
    spec : MlpSpec
    seed : integer, optional
        Used when ``rng`` is not given.
    scheme : string
        'uniform_fan_in' draws every weight and bias from U(-s, s) with
        s = 1 / sqrt(fan_in); 'zeros' gives an all zero network.
    rng : numpy.random.Generator, optional

    """
    if scheme == 'zeros':
        return Mlp.zeros(spec)
    if scheme != 'uniform_fan_in':
        msg = '{} is not a valid initialization scheme.'
        raise ValueError(msg.format(scheme))
    if rng is None:
        rng = seed_substream(0 if seed is None else seed, 'init')
    weights, biases = [], []
    for _, shape, _ in spec.param_layout():
        s = 1.0 / np.sqrt(shape[1])
        weights.append(rng.uniform(-s, s, size=shape))
        biases.append(rng.uniform(-s, s, size=shape[0]))
    return Mlp(spec, weights, biases)


def softplus(x):
    return np.logaddexp(0.0, x)


def inverse_softplus(y):
    return np.log(np.expm1(y))


class GaussianPolicy(object):
    """A diagonal Gaussian policy. The network outputs the action means in
    its first half and pre-sigma values in its second half;
    ``sigma = softplus(pre) + sigma_floor``.

    Parameters
    ==========
    net : Mlp
        Its output size is twice the action size.
    sigma_floor : float

    """

    def __init__(self, net, sigma_floor=1e-3):
        if net.spec.n_outputs % 2 != 0:
            msg = 'The policy network needs an even output size, not {}.'
            raise ValueError(msg.format(net.spec.n_outputs))
        self.net = net
        self.sigma_floor = check_float('sigma_floor', sigma_floor,
                                       lower=0.0)

    @property
    def action_dim(self):
        return self.net.spec.n_outputs // 2

    def _heads(self, states):
        h = self.net.hidden(states)
        d = self.action_dim
        w, b = self.net.weights[-1], self.net.biases[-1]
        mean = h.dot(w[:d].T) + b[:d]
        pre = h.dot(w[d:].T) + b[d:]
        return mean, pre

    def mean_action(self, states):
        """Returns the deterministic action. Only the mean rows of the
        output layer are evaluated."""
        h = self.net.hidden(states)
        d = self.action_dim
        return h.dot(self.net.weights[-1][:d].T) + self.net.biases[-1][:d]

    def distribution(self, states):
        """Returns (mean, sigma)."""
        mean, pre = self._heads(states)
        return mean, softplus(pre) + self.sigma_floor

    def sample(self, state, rng):
        """Returns an action drawn from the policy and its log density."""
        mean, sigma = self.distribution(state)
        action = mean + sigma * rng.standard_normal(mean.shape)
        return action, gaussian_log_prob(mean, sigma, action)

    def log_prob(self, states, actions):
        mean, sigma = self.distribution(states)
        return gaussian_log_prob(mean, sigma, actions)

    def entropy(self, states):
        _, sigma = self.distribution(states)
        return np.sum(np.log(sigma) + 0.5 * (LOG_2PI + 1.0), axis=-1)

    def backward(self, states, d_mean, d_sigma):
        """Returns the flat parameter gradient given the loss gradients with
        respect to the means and sigmas of a batch."""
        _, pre = self._heads(states)
        d_pre = np.asarray(d_sigma) * expit(pre)
        upstream = np.concatenate((np.atleast_2d(d_mean),
                                   np.atleast_2d(d_pre)), axis=-1)
        grad, _ = self.net.backward(states, upstream)
        return grad


def gaussian_log_prob(mean, sigma, action):
    """Returns the log density of a diagonal Gaussian, summed over the last
    axis."""
    z = (action - mean) / sigma
    d = np.shape(mean)[-1]
    return (-np.sum(np.log(sigma), axis=-1) - 0.5 * d * LOG_2PI -
            0.5 * np.sum(z ** 2, axis=-1))


def transfer_warm_start(es_net, policy_spec, value_spec, sigma_init=0.1,
                        sigma_floor=1e-3, seed=0):
    """Returns a (GaussianPolicy, value Mlp) pair initialized from a trained
    deterministic policy network.

    The policy copies every hidden layer and the output rows of
    ``es_net`` as its mean rows. The pre-sigma rows get zero weights and a
    bias giving ``sigma_init`` for every input. The value network copies
    every hidden layer; its output layer is initialized randomly from
    ``seed``.

    """
    es_spec = es_net.spec
    d = es_spec.n_outputs
    hidden = es_spec.layer_sizes[:-1]
    if policy_spec.layer_sizes != hidden + (2 * d,):
        msg = 'Policy layers {} do not extend {} with {} outputs.'
        raise ValueError(msg.format(policy_spec.layer_sizes, hidden, 2 * d))
    if value_spec.layer_sizes != hidden + (1,):
        msg = 'Value layers {} do not extend {} with 1 output.'
        raise ValueError(msg.format(value_spec.layer_sizes, hidden))
    if sigma_init <= sigma_floor:
        msg = 'sigma_init {} must exceed the sigma floor {}.'
        raise ValueError(msg.format(sigma_init, sigma_floor))

    weights = [w.copy() for w in es_net.weights[:-1]]
    biases = [b.copy() for b in es_net.biases[:-1]]
    w_out = np.zeros((2 * d, hidden[-1]))
    w_out[:d] = es_net.weights[-1]
    b_out = np.empty(2 * d)
    b_out[:d] = es_net.biases[-1]
    b_out[d:] = inverse_softplus(sigma_init - sigma_floor)
    policy = GaussianPolicy(Mlp(policy_spec, weights + [w_out],
                                biases + [b_out]), sigma_floor=sigma_floor)

    head = init_mlp(MlpSpec(hidden[-1:] + (1,)),
                    rng=seed_substream(seed, 'value-head'))
    value = Mlp(value_spec,
                [w.copy() for w in es_net.weights[:-1]] + head.weights,
                [b.copy() for b in es_net.biases[:-1]] + head.biases)
    return policy, value


def init_gaussian_policy(spec, seed, sigma_init=0.1, sigma_floor=1e-3):
    """Returns a randomly initialized GaussianPolicy whose pre-sigma rows
    give ``sigma_init`` for every input."""
    net = init_mlp(spec, rng=seed_substream(seed, 'policy-init'))
    d = spec.n_outputs // 2
    net.weights[-1][d:] = 0.0
    net.biases[-1][d:] = inverse_softplus(sigma_init - sigma_floor)
    return GaussianPolicy(net, sigma_floor=sigma_floor)


class Adam(object):
    """The Adam optimizer on a flat parameter vector, minimizing.

    Parameters
    ==========
    learning_rate : float
        May be zero, which leaves the parameters unchanged.

    """

    def __init__(self, n_params, learning_rate, beta1=0.9, beta2=0.999,
                 epsilon=1e-8):
        self.learning_rate = check_float('learning_rate', learning_rate,
                                         lower=0.0)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params, grad):
        """Returns the updated parameters."""
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad ** 2
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.learning_rate * m_hat / (np.sqrt(v_hat) +
                                                      self.epsilon)


def clip_grad_norm(grad, max_norm):
    """Returns the gradient rescaled to a global norm of at most
    ``max_norm`` and its norm before clipping."""
    norm = float(np.linalg.norm(grad))
    if max_norm is not None and norm > max_norm:
        return grad * (max_norm / norm), norm
    return grad, norm


def encode_params(vec):
    """Returns the base64 text of a vector as little endian float64."""
    data = np.asarray(vec, dtype='<f8').tobytes()
    return base64.b64encode(data).decode('ascii')


def decode_params(text, n_params):
    vec = np.frombuffer(base64.b64decode(text.encode('ascii')), dtype='<f8')
    if len(vec) != n_params:
        msg = 'Expected {} parameters, found {}.'
        raise ValueError(msg.format(n_params, len(vec)))
    return vec.astype(float)


def save_checkpoint(path, networks, **header):
    """Writes named networks and header entries to a JSON checkpoint.

    Parameters
    ==========
    path : string
    networks : dictionary
        Maps names, e.g. 'policy' or 'value', to Mlp objects.
    header
        Additional JSON serializable entries, e.g. ``kind``,
        ``sigma_floor``, ``normalization`` or ``iteration``.

    """
    data = dict(header)
    data['format_version'] = FORMAT_VERSION
    data['networks'] = {
        name: dict(net.spec.to_dict(), n_params=net.spec.n_params,
                   params=encode_params(flatten(net)))
        for name, net in networks.items()}
    write_json(path, data)


def load_checkpoint(path):
    """Returns (networks, header) from a checkpoint written by
    ``save_checkpoint``. Parameters round trip bit for bit."""
    data = read_json(path)
    check_format_version(data, path)
    if 'networks' not in data:
        raise MalformedFileError(path, 0, "missing key 'networks'")
    networks = {}
    for name, entry in data.pop('networks').items():
        spec = MlpSpec.from_dict(entry)
        try:
            vec = decode_params(entry['params'], spec.n_params)
        except (ValueError, KeyError) as e:
            raise MalformedFileError(path, 0, '{}: {}'.format(name, e))
        networks[name] = unflatten(vec, spec)
    return networks, data
