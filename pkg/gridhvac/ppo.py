#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Proximal policy optimization fine tuning of a Gaussian policy:
rollout collection, generalized advantage estimation and clipped surrogate
updates with a separate value network."""

import logging
import time
from collections import namedtuple

# external libraries
import numpy as np

# local
from .env import mean_episode_cost
from .nn import (Adam, GaussianPolicy, clip_grad_norm, flatten,
                 gaussian_log_prob, unflatten)
from .parallel import WorkerPool
from .utils import (Configuration, TrainingDivergedError, check_float,
                    check_int, derive_seed, seed_substream)

logger = logging.getLogger(__name__)

CURVE_HEADER = ('iteration', 'eval_cost_deterministic', 'mean_batch_reward',
                'policy_loss', 'value_loss', 'mean_sigma', 'wall_seconds')

IterationReport = namedtuple('IterationReport', CURVE_HEADER)

Minibatch = namedtuple('Minibatch', ['states', 'actions', 'log_probs',
                                     'advantages', 'targets'])


class PpoConfig(Configuration):
    """Settings of a PPO run.

    Parameters
    ==========
    learning_rate : float
        Policy learning rate, zero freezes the policy.
    value_learning_rate : float
    clip_ratio : float
        In (0, 1).
    gae_lambda : float
        In [0, 1].
    discount : float
        In (0, 1].
    epochs_per_batch : integer
    minibatch_size : integer
    rollout_episodes : integer
        Episodes collected per iteration.
    entropy_coefficient : float
    value_loss_coefficient : float
    max_grad_norm : float
        Global gradient norm limit applied to each network.
    iterations : integer
    eval_episodes : integer
        Episodes of the per iteration evaluation of the mean action policy.
    worker_count : integer
    checkpoint_every : integer
        Iterations between checkpoints, 0 for none.
    divergence_factor : float
        Training halts once the evaluation cost exceeds this multiple of
        its starting value.
    seed : integer

    """

    _fields = ('learning_rate', 'value_learning_rate', 'clip_ratio',
               'gae_lambda', 'discount', 'epochs_per_batch',
               'minibatch_size', 'rollout_episodes', 'entropy_coefficient',
               'value_loss_coefficient', 'max_grad_norm', 'iterations',
               'eval_episodes', 'worker_count', 'checkpoint_every',
               'divergence_factor', 'seed')

    def __init__(self, learning_rate=5e-6, value_learning_rate=1e-3,
                 clip_ratio=0.2, gae_lambda=0.95, discount=0.99,
                 epochs_per_batch=10, minibatch_size=256, rollout_episodes=4,
                 entropy_coefficient=0.0, value_loss_coefficient=0.5,
                 max_grad_norm=0.5, iterations=50, eval_episodes=4,
                 worker_count=1, checkpoint_every=10, divergence_factor=3.0,
                 seed=0):
        self.learning_rate = learning_rate
        self.value_learning_rate = value_learning_rate
        self.clip_ratio = clip_ratio
        self.gae_lambda = gae_lambda
        self.discount = discount
        self.epochs_per_batch = epochs_per_batch
        self.minibatch_size = minibatch_size
        self.rollout_episodes = rollout_episodes
        self.entropy_coefficient = entropy_coefficient
        self.value_loss_coefficient = value_loss_coefficient
        self.max_grad_norm = max_grad_norm
        self.iterations = iterations
        self.eval_episodes = eval_episodes
        self.worker_count = worker_count
        self.checkpoint_every = checkpoint_every
        self.divergence_factor = divergence_factor
        self.seed = seed

    @property
    def learning_rate(self):
        return self._learning_rate

    @learning_rate.setter
    def learning_rate(self, value):
        self._learning_rate = check_float('learning_rate', value, lower=0.0)

    @property
    def value_learning_rate(self):
        return self._value_learning_rate

    @value_learning_rate.setter
    def value_learning_rate(self, value):
        self._value_learning_rate = check_float('value_learning_rate', value,
                                                lower=0.0)

    @property
    def clip_ratio(self):
        return self._clip_ratio

    @clip_ratio.setter
    def clip_ratio(self, value):
        self._clip_ratio = check_float('clip_ratio', value, lower=0.0,
                                       upper=1.0, strict_lower=True,
                                       strict_upper=True)

    @property
    def gae_lambda(self):
        return self._gae_lambda

    @gae_lambda.setter
    def gae_lambda(self, value):
        self._gae_lambda = check_float('gae_lambda', value, lower=0.0,
                                       upper=1.0)

    @property
    def discount(self):
        return self._discount

    @discount.setter
    def discount(self, value):
        self._discount = check_float('discount', value, lower=0.0, upper=1.0,
                                     strict_lower=True)

    @property
    def epochs_per_batch(self):
        return self._epochs_per_batch

    @epochs_per_batch.setter
    def epochs_per_batch(self, value):
        self._epochs_per_batch = check_int('epochs_per_batch', value,
                                           lower=1)

    @property
    def minibatch_size(self):
        return self._minibatch_size

    @minibatch_size.setter
    def minibatch_size(self, value):
        self._minibatch_size = check_int('minibatch_size', value, lower=1)

    @property
    def rollout_episodes(self):
        return self._rollout_episodes

    @rollout_episodes.setter
    def rollout_episodes(self, value):
        self._rollout_episodes = check_int('rollout_episodes', value,
                                           lower=1)

    @property
    def entropy_coefficient(self):
        return self._entropy_coefficient

    @entropy_coefficient.setter
    def entropy_coefficient(self, value):
        self._entropy_coefficient = check_float('entropy_coefficient', value,
                                                lower=0.0)

    @property
    def value_loss_coefficient(self):
        return self._value_loss_coefficient

    @value_loss_coefficient.setter
    def value_loss_coefficient(self, value):
        self._value_loss_coefficient = check_float('value_loss_coefficient',
                                                   value, lower=0.0)

    @property
    def max_grad_norm(self):
        return self._max_grad_norm

    @max_grad_norm.setter
    def max_grad_norm(self, value):
        self._max_grad_norm = check_float('max_grad_norm', value, lower=0.0,
                                          strict_lower=True)

    @property
    def iterations(self):
        return self._iterations

    @iterations.setter
    def iterations(self, value):
        self._iterations = check_int('iterations', value, lower=0)

    @property
    def eval_episodes(self):
        return self._eval_episodes

    @eval_episodes.setter
    def eval_episodes(self, value):
        self._eval_episodes = check_int('eval_episodes', value, lower=1)

    @property
    def worker_count(self):
        return self._worker_count

    @worker_count.setter
    def worker_count(self, value):
        self._worker_count = check_int('worker_count', value, lower=1)

    @property
    def checkpoint_every(self):
        return self._checkpoint_every

    @checkpoint_every.setter
    def checkpoint_every(self, value):
        self._checkpoint_every = check_int('checkpoint_every', value,
                                           lower=0)

    @property
    def divergence_factor(self):
        return self._divergence_factor

    @divergence_factor.setter
    def divergence_factor(self, value):
        self._divergence_factor = check_float('divergence_factor', value,
                                              lower=1.0)

    @property
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = check_int('seed', value, lower=0)


class RolloutBatch(object):
    """Transitions of whole episodes laid end to end.

    Parameters
    ==========
    states : ndarray, shape(T, state size)
    actions : ndarray, shape(T, action size)
        Pre-squash actions as sampled.
    rewards : ndarray, shape(T,)
    log_probs : ndarray, shape(T,)
        Log densities at collection time.
    values : ndarray, shape(T,)
        Value predictions at collection time.
    episode_ends : sequence of integer
        Exclusive end index of each episode, increasing, the last equal
        to T.

    """

    def __init__(self, states, actions, rewards, log_probs, values,
                 episode_ends):
        self.states = np.atleast_2d(np.asarray(states, dtype=float))
        self.actions = np.atleast_2d(np.asarray(actions, dtype=float))
        self.rewards = np.asarray(rewards, dtype=float)
        self.log_probs = np.asarray(log_probs, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.episode_ends = [int(e) for e in episode_ends]
        n = len(self.states)
        for name in ('actions', 'rewards', 'log_probs', 'values'):
            if len(getattr(self, name)) != n:
                msg = 'Batch {} has {} entries, expected {}.'
                raise ValueError(msg.format(name, len(getattr(self, name)),
                                            n))
        if (not self.episode_ends or self.episode_ends[-1] != n or
                np.any(np.diff([0] + self.episode_ends) <= 0)):
            msg = 'Episode ends {} do not partition {} transitions.'
            raise ValueError(msg.format(self.episode_ends, n))

    def __len__(self):
        return len(self.states)

    @property
    def episode_returns(self):
        starts = [0] + self.episode_ends[:-1]
        return np.array([self.rewards[s:e].sum() for s, e in
                         zip(starts, self.episode_ends)])

    @classmethod
    def concatenate(cls, batches):
        offsets = np.cumsum([0] + [len(b) for b in batches])
        return cls(np.vstack([b.states for b in batches]),
                   np.vstack([b.actions for b in batches]),
                   np.hstack([b.rewards for b in batches]),
                   np.hstack([b.log_probs for b in batches]),
                   np.hstack([b.values for b in batches]),
                   [o + e for o, b in zip(offsets, batches)
                    for e in b.episode_ends])


class EpisodeCollector(object):
    """Runs one sampled episode from flat policy and value parameters.
    Instances are picklable and are shipped to the worker processes once."""

    def __init__(self, policy_spec, value_spec, sigma_floor, env_factory):
        self.policy_spec = policy_spec
        self.value_spec = value_spec
        self.sigma_floor = sigma_floor
        self.env_factory = env_factory

    def __call__(self, policy_params, value_params, seed, episode):
        policy = GaussianPolicy(unflatten(policy_params, self.policy_spec),
                                self.sigma_floor)
        value_net = unflatten(value_params, self.value_spec)
        env, state = self.env_factory.episode(
            derive_seed(seed, 'episode', episode))
        rng = seed_substream(seed, 'actions', episode)
        states, actions, rewards, log_probs = [], [], [], []
        while not env.done:
            action, log_prob = policy.sample(state, rng)
            outcome = env.step(action)
            states.append(state)
            actions.append(action)
            rewards.append(outcome.reward)
            log_probs.append(log_prob)
            state = outcome.next_state
        states = np.array(states)
        values = value_net.forward(states)[:, 0]
        return RolloutBatch(states, actions, rewards, log_probs, values,
                            [len(states)])


def collect_rollouts(policy, value_net, env_factory, config, seed,
                     pool=None):
    """Returns a RolloutBatch of ``config.rollout_episodes`` episodes
    sampled from the policy. Episode k runs on the episode seed derived
    from ``seed`` and k, the same seeds ``mean_episode_cost`` uses.

    Parameters
    ==========
    policy : gridhvac.nn.GaussianPolicy
    value_net : gridhvac.nn.Mlp
    env_factory : gridhvac.env.EnvFactory
    config : PpoConfig
    seed : integer
    pool : gridhvac.parallel.WorkerPool, optional
        A pool running an ``EpisodeCollector`` with the same specs.

    """
    policy_params = flatten(policy.net)
    value_params = flatten(value_net)
    args = [(policy_params, value_params, seed, k)
            for k in range(config.rollout_episodes)]
    if pool is None:
        collector = EpisodeCollector(policy.net.spec, value_net.spec,
                                     policy.sigma_floor, env_factory)
        episodes = [collector(*a) for a in args]
    else:
        episodes = pool.map(args)
    return RolloutBatch.concatenate(episodes)


def compute_gae(batch, discount, gae_lambda, normalize=True):
    """Returns (advantages, value targets) by generalized advantage
    estimation. Every episode ends at the horizon, so the value after its
    last step is zero. Targets are the advantages before normalization plus
    the values."""
    rewards, values = batch.rewards, batch.values
    advantages = np.zeros(len(batch))
    start = 0
    for end in batch.episode_ends:
        running = 0.0
        for t in reversed(range(start, end)):
            next_value = values[t + 1] if t + 1 < end else 0.0
            delta = rewards[t] + discount * next_value - values[t]
            running = delta + discount * gae_lambda * running
            advantages[t] = running
        start = end
    targets = advantages + values
    if normalize:
        advantages = normalize_advantages(advantages)
    return advantages, targets


def normalize_advantages(advantages):
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def ppo_loss(policy, value_net, minibatch, config):
    """Returns the PPO loss of a minibatch and its gradients.

    The loss is the negated clipped surrogate plus
    ``value_loss_coefficient`` times the value mean squared error minus
    ``entropy_coefficient`` times the mean policy entropy.

    Returns
    =======
    loss : float
    policy_grad : ndarray
        Gradient with respect to the flat policy parameters.
    value_grad : ndarray
        Gradient with respect to the flat value parameters.
    info : dictionary
        policy_loss, value_loss, entropy and clip_fraction.

    """
    states = minibatch.states
    advantages = minibatch.advantages
    n = len(states)
    eps = config.clip_ratio

    mean, sigma = policy.distribution(states)
    log_prob = gaussian_log_prob(mean, sigma, minibatch.actions)
    ratio = np.exp(log_prob - minibatch.log_probs)
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantages
    policy_loss = -np.mean(np.minimum(unclipped, clipped))
    entropy = float(np.mean(np.sum(np.log(sigma), axis=1))) + \
        0.5 * mean.shape[1] * (np.log(2.0 * np.pi) + 1.0)

    values = value_net.forward(states)[:, 0]
    value_loss = float(np.mean((values - minibatch.targets) ** 2))

    loss = (policy_loss + config.value_loss_coefficient * value_loss -
            config.entropy_coefficient * entropy)
    if not np.isfinite(loss):
        msg = ('Non-finite PPO loss: policy {}, value {}, entropy {}, ratio '
               'range [{}, {}], sigma range [{}, {}].')
        raise FloatingPointError(msg.format(policy_loss, value_loss, entropy,
                                            ratio.min(), ratio.max(),
                                            sigma.min(), sigma.max()))

    # the surrogate only depends on the log density where the unclipped
    # term is the minimum
    d_log_prob = np.where(unclipped <= clipped, -ratio * advantages / n, 0.0)
    z = (minibatch.actions - mean) / sigma
    d_mean = d_log_prob[:, np.newaxis] * z / sigma
    d_sigma = (d_log_prob[:, np.newaxis] * (z ** 2 - 1.0) / sigma -
               config.entropy_coefficient / (n * sigma))
    policy_grad = policy.backward(states, d_mean, d_sigma)

    d_values = 2.0 * config.value_loss_coefficient * \
        (values - minibatch.targets) / n
    value_grad, _ = value_net.backward(states, d_values[:, np.newaxis])

    info = {'policy_loss': float(policy_loss), 'value_loss': value_loss,
            'entropy': entropy,
            'clip_fraction': float(np.mean(np.abs(ratio - 1.0) > eps))}
    return float(loss), policy_grad, value_grad, info


class MeanActionCost(object):
    """The cost of flat policy parameters: the mean undiscounted cost of the
    policy's mean action over seeded episodes. With a policy transferred by
    ``transfer_warm_start`` it equals the ES fitness of the source network
    on the same seeds."""

    def __init__(self, spec, sigma_floor, env_factory, episodes):
        self.spec = spec
        self.sigma_floor = sigma_floor
        self.env_factory = env_factory
        self.episodes = episodes

    def __call__(self, params, seed):
        policy = GaussianPolicy(unflatten(params, self.spec),
                                self.sigma_floor)
        return mean_episode_cost(policy.mean_action, self.env_factory,
                                 self.episodes, seed)


class PpoResult(object):
    """The outcome of ``train_ppo``."""

    def __init__(self, policy, value_net, curve, initial_eval_cost,
                 final_eval_cost):
        self.policy = policy
        self.value_net = value_net
        self.curve = curve
        self.initial_eval_cost = initial_eval_cost
        self.final_eval_cost = final_eval_cost


def _check_eval_cost(iteration, eval_cost, initial_eval_cost, config, curve):
    if (not np.isfinite(eval_cost) or
            eval_cost > config.divergence_factor * initial_eval_cost):
        msg = ('Iteration {}: evaluation cost {} exceeds {} times the '
               'starting cost {}.')
        raise TrainingDivergedError(
            msg.format(iteration, eval_cost, config.divergence_factor,
                       initial_eval_cost), curve)


def train_ppo(policy, value_net, config, env_factory, eval_seed=None,
              checkpoint=None):
    """Fine tunes a policy and value network pair with PPO.

    Parameters
    ==========
    policy : gridhvac.nn.GaussianPolicy
        Updated in place.
    value_net : gridhvac.nn.Mlp
        Updated in place.
    config : PpoConfig
    env_factory : gridhvac.env.EnvFactory
    eval_seed : integer, optional
        Seed of the evaluation episodes, identical every iteration.
    checkpoint : callable, optional
        ``checkpoint(iteration, policy, value_net)``.

    Returns
    =======
    result : PpoResult
        ``curve`` holds one IterationReport per iteration; its evaluation
        cost is measured at the start of the iteration.

    """
    if eval_seed is None:
        eval_seed = derive_seed(config.seed, 'eval')
    evaluate = MeanActionCost(policy.net.spec, policy.sigma_floor,
                              env_factory, config.eval_episodes)
    collector = EpisodeCollector(policy.net.spec, value_net.spec,
                                 policy.sigma_floor, env_factory)
    policy_optimizer = Adam(policy.net.spec.n_params, config.learning_rate)
    value_optimizer = Adam(value_net.spec.n_params,
                           config.value_learning_rate)

    curve = []
    start = time.time()
    initial_eval_cost = None
    with WorkerPool(collector, config.worker_count) as pool:
        for i in range(config.iterations):
            eval_cost = float(evaluate(flatten(policy.net), eval_seed))
            if initial_eval_cost is None:
                initial_eval_cost = eval_cost
            _check_eval_cost(i, eval_cost, initial_eval_cost, config, curve)

            batch = collect_rollouts(policy, value_net, env_factory, config,
                                     derive_seed(config.seed, 'rollouts', i),
                                     pool=pool)
            advantages, targets = compute_gae(batch, config.discount,
                                              config.gae_lambda)
            _, sigma = policy.distribution(batch.states)
            mean_sigma = float(np.mean(sigma))

            rng = seed_substream(config.seed, 'minibatches', i)
            policy_losses, value_losses = [], []
            for _ in range(config.epochs_per_batch):
                order = rng.permutation(len(batch))
                for first in range(0, len(batch), config.minibatch_size):
                    idx = order[first:first + config.minibatch_size]
                    minibatch = Minibatch(batch.states[idx],
                                          batch.actions[idx],
                                          batch.log_probs[idx],
                                          advantages[idx], targets[idx])
                    _, policy_grad, value_grad, info = ppo_loss(
                        policy, value_net, minibatch, config)
                    policy_grad, _ = clip_grad_norm(policy_grad,
                                                    config.max_grad_norm)
                    value_grad, _ = clip_grad_norm(value_grad,
                                                   config.max_grad_norm)
                    policy.net.assign(policy_optimizer.step(
                        flatten(policy.net), policy_grad))
                    value_net.assign(value_optimizer.step(
                        flatten(value_net), value_grad))
                    policy_losses.append(info['policy_loss'])
                    value_losses.append(info['value_loss'])

            report = IterationReport(i, eval_cost,
                                     float(np.mean(batch.episode_returns)),
                                     float(np.mean(policy_losses)),
                                     float(np.mean(value_losses)),
                                     mean_sigma, time.time() - start)
            curve.append(report)
            logger.info('PPO iteration %d: eval cost %.4f, batch return '
                        '%.4f, policy loss %.3e, value loss %.3e, sigma '
                        '%.4f, %.1f s', i, eval_cost,
                        report.mean_batch_reward, report.policy_loss,
                        report.value_loss, mean_sigma, report.wall_seconds)
            if (checkpoint is not None and config.checkpoint_every and
                    (i + 1) % config.checkpoint_every == 0):
                checkpoint(i + 1, policy, value_net)

    final_eval_cost = float(evaluate(flatten(policy.net), eval_seed))
    if initial_eval_cost is None:
        initial_eval_cost = final_eval_cost
    _check_eval_cost(config.iterations, final_eval_cost, initial_eval_cost,
                     config, curve)
    return PpoResult(policy, value_net, curve, initial_eval_cost,
                     final_eval_cost)
