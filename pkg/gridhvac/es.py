#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Evolution strategies training of a deterministic policy network:
antithetic perturbations, parallel fitness evaluation and a rank shaped
zero order gradient estimate."""

import logging
import time
from collections import namedtuple

# external libraries
import numpy as np
from scipy.stats import rankdata

# local
from .env import mean_episode_cost
from .nn import unflatten
from .parallel import WorkerPool
from .utils import (Configuration, TrainingDivergedError, check_float,
                    check_int, derive_seed, seed_substream)

logger = logging.getLogger(__name__)

CURVE_HEADER = ('iteration', 'mean_cost', 'std_cost', 'min_cost',
                'eval_cost', 'wall_seconds')

FitnessReport = namedtuple('FitnessReport', CURVE_HEADER)


class EsConfig(Configuration):
    """Settings of an evolution strategies run.

    Parameters
    ==========
    population_size : integer
        Even; each direction gives an antithetic pair.
    sigma : float
        Perturbation standard deviation.
    learning_rate : float
        Zero freezes the parameters.
    iterations : integer
    episodes_per_fitness : integer
        Episodes averaged into each member's cost.
    eval_episodes : integer
        Episodes of the per iteration evaluation of the unperturbed policy.
    worker_count : integer
    checkpoint_every : integer
        Iterations between checkpoints, 0 for none.
    seed : integer

    """

    _fields = ('population_size', 'sigma', 'learning_rate', 'iterations',
               'episodes_per_fitness', 'eval_episodes', 'worker_count',
               'checkpoint_every', 'seed')

    def __init__(self, population_size=64, sigma=0.02, learning_rate=1e-2,
                 iterations=100, episodes_per_fitness=2, eval_episodes=4,
                 worker_count=1, checkpoint_every=10, seed=0):
        self.population_size = population_size
        self.sigma = sigma
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.episodes_per_fitness = episodes_per_fitness
        self.eval_episodes = eval_episodes
        self.worker_count = worker_count
        self.checkpoint_every = checkpoint_every
        self.seed = seed

    @property
    def population_size(self):
        return self._population_size

    @population_size.setter
    def population_size(self, value):
        value = check_int('population_size', value, lower=2)
        if value % 2 != 0:
            msg = 'population_size must be even, not {}.'
            raise ValueError(msg.format(value))
        self._population_size = value

    @property
    def sigma(self):
        return self._sigma

    @sigma.setter
    def sigma(self, value):
        self._sigma = check_float('sigma', value, lower=0.0,
                                  strict_lower=True)

    @property
    def learning_rate(self):
        return self._learning_rate

    @learning_rate.setter
    def learning_rate(self, value):
        self._learning_rate = check_float('learning_rate', value, lower=0.0)

    @property
    def iterations(self):
        return self._iterations

    @iterations.setter
    def iterations(self, value):
        self._iterations = check_int('iterations', value, lower=0)

    @property
    def episodes_per_fitness(self):
        return self._episodes_per_fitness

    @episodes_per_fitness.setter
    def episodes_per_fitness(self, value):
        self._episodes_per_fitness = check_int('episodes_per_fitness', value,
                                               lower=1)

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
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = check_int('seed', value, lower=0)


def perturb_population(theta, config, iteration_seed):
    """Returns the perturbation directions and the population.

    Parameters
    ==========
    theta : ndarray, shape(n,)
    config : EsConfig
    iteration_seed : integer

    Returns
    =======
    directions : ndarray, shape(P / 2, n)
        Standard normal directions.
    candidates : ndarray, shape(P, n)
        Ordered theta + sigma e_0, theta - sigma e_0, theta + sigma e_1, ...

    """
    theta = np.asarray(theta, dtype=float)
    rng = seed_substream(iteration_seed, 'perturbations')
    directions = rng.standard_normal((config.population_size // 2,
                                      len(theta)))
    step = config.sigma * directions
    candidates = np.empty((config.population_size, len(theta)))
    candidates[0::2] = theta + step
    candidates[1::2] = theta - step
    return directions, candidates


class EpisodeFitness(object):
    """The cost of a flat parameter vector: the mean undiscounted cost of
    the deterministic policy network over seeded episodes. Instances are
    picklable and are shipped to the worker processes once.

    Parameters
    ==========
    spec : gridhvac.nn.MlpSpec
    env_factory : gridhvac.env.EnvFactory
    episodes : integer

    """

    def __init__(self, spec, env_factory, episodes):
        self.spec = spec
        self.env_factory = env_factory
        self.episodes = check_int('episodes', episodes, lower=1)

    def __call__(self, params, seed):
        return evaluate_fitness(params, self.spec, self.env_factory,
                                self.episodes, seed)


def evaluate_fitness(params, spec, env_factory, episodes, seed):
    """Returns the mean episode cost of the deterministic policy network
    with the given flat parameters. Episode k uses the seed derived from
    ``seed`` and k, so the cost is a pure function of (params, seed)."""
    net = unflatten(params, spec)
    return mean_episode_cost(net.forward, env_factory, episodes, seed)


def centered_ranks(values):
    """Returns ranks mapped linearly onto [-0.5, 0.5], ties averaged."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return np.zeros(len(values))
    return (rankdata(values) - 1.0) / (len(values) - 1.0) - 0.5


def es_gradient(fitnesses, directions, sigma):
    """Returns the rank shaped gradient estimate of the expected fitness.

    Parameters
    ==========
    fitnesses : array_like, shape(P,)
        Higher is better, ordered as ``perturb_population`` orders the
        population.
    directions : ndarray, shape(P / 2, n)
    sigma : float

    """
    fitnesses = np.asarray(fitnesses, dtype=float)
    directions = np.atleast_2d(directions)
    if len(fitnesses) != 2 * len(directions):
        msg = 'Expected {} fitness values for {} directions, got {}.'
        raise ValueError(msg.format(2 * len(directions), len(directions),
                                    len(fitnesses)))
    if not np.all(np.isfinite(fitnesses)):
        raise FloatingPointError('Non-finite fitness values: {}'.format(
            fitnesses))
    shaped = centered_ranks(fitnesses)
    weights = shaped[0::2] - shaped[1::2]
    return weights.dot(directions) / (len(fitnesses) * sigma)


class EsResult(object):
    """The outcome of ``train_es``."""

    def __init__(self, params, curve, initial_eval_cost, final_eval_cost):
        self.params = params
        self.curve = curve
        self.initial_eval_cost = initial_eval_cost
        self.final_eval_cost = final_eval_cost


def train_es(theta, config, spec=None, env_factory=None, fitness=None,
             eval_seed=None, checkpoint=None):
    """Trains a flat parameter vector by evolution strategies.

    Parameters
    ==========
    theta : array_like, shape(n,)
        Initial parameters.
    config : EsConfig
    spec : gridhvac.nn.MlpSpec, optional
        Required unless ``fitness`` is given.
    env_factory : gridhvac.env.EnvFactory, optional
        Required unless ``fitness`` is given.
    fitness : callable, optional
        ``fitness(params, seed) -> cost`` to minimize; must be picklable when
        ``config.worker_count > 1``. Defaults to ``EpisodeFitness``. It is
        also used for the evaluation of the unperturbed parameters.
    eval_seed : integer, optional
        Seed of the evaluation episodes, identical every iteration.
    checkpoint : callable, optional
        ``checkpoint(iteration, params)``, called every
        ``config.checkpoint_every`` iterations.

    Returns
    =======
    result : EsResult
        ``curve`` holds one FitnessReport per iteration; its eval_cost is
        measured at the start of the iteration.

    """
    theta = np.array(theta, dtype=float)
    if eval_seed is None:
        eval_seed = derive_seed(config.seed, 'eval')
    if fitness is None:
        if spec is None or env_factory is None:
            raise ValueError('A spec and env factory or a fitness function '
                             'are required.')
        fitness = EpisodeFitness(spec, env_factory,
                                 config.episodes_per_fitness)
        evaluate = EpisodeFitness(spec, env_factory, config.eval_episodes)
    else:
        evaluate = fitness

    curve = []
    start = time.time()
    initial_eval_cost = None
    with WorkerPool(fitness, config.worker_count) as pool:
        for i in range(config.iterations):
            eval_cost = float(evaluate(theta, eval_seed))
            if initial_eval_cost is None:
                initial_eval_cost = eval_cost
            iteration_seed = derive_seed(config.seed, 'es', i)
            directions, candidates = perturb_population(theta, config,
                                                        iteration_seed)
            costs = np.array(pool.map((c, iteration_seed)
                                      for c in candidates))
            if not np.all(np.isfinite(costs)) or not np.isfinite(eval_cost):
                msg = 'Iteration {}: non-finite episode costs.'
                raise TrainingDivergedError(msg.format(i), curve)
            gradient = es_gradient(-costs, directions, config.sigma)
            theta = theta + config.learning_rate * gradient
            report = FitnessReport(i, float(np.mean(costs)),
                                   float(np.std(costs)),
                                   float(np.min(costs)), eval_cost,
                                   time.time() - start)
            curve.append(report)
            logger.info('ES iteration %d: mean cost %.4f, min %.4f, '
                        'eval %.4f, step %.3e, %.1f s', i, report.mean_cost,
                        report.min_cost, eval_cost,
                        config.learning_rate * np.linalg.norm(gradient),
                        report.wall_seconds)
            if (checkpoint is not None and config.checkpoint_every and
                    (i + 1) % config.checkpoint_every == 0):
                checkpoint(i + 1, theta)
    final_eval_cost = float(evaluate(theta, eval_seed))
    if initial_eval_cost is None:
        initial_eval_cost = final_eval_cost
    if not np.isfinite(final_eval_cost):
        msg = 'Final evaluation: non-finite cost {}.'
        raise TrainingDivergedError(msg.format(final_eval_cost), curve)
    return EsResult(theta, curve, initial_eval_cost, final_eval_cost)
