#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The settings of a whole experiment and its output directory layout."""

import os

# local
from .env import ScenarioConfig
from .es import EsConfig
from .mpc import MpcConfig
from .nn import DEFAULT_HIDDEN_SIZES, MlpSpec
from .ppo import PpoConfig
from .rom import ExogenousGeneratorConfig
from .utils import Configuration, check_float, check_int

CONTROLLER_KINDS = ('rl:', 'mpc-lin', 'mpc-rom', 'rule-based')

# artifact paths relative to the output directory
DATA_DIR = 'data'
ROM_DIR = 'rom'
TRAIN_DIR = 'train'
EVAL_DIR = 'eval'
REPORT_DIR = 'report'

TRAIN_DATA = os.path.join(DATA_DIR, 'train.csv')
TEST_DATA = os.path.join(DATA_DIR, 'test.csv')
MODEL_FILE = os.path.join(ROM_DIR, 'model.json')
FIT_REPORT = os.path.join(ROM_DIR, 'fit_report.csv')


def checkpoint_path(stage):
    return os.path.join(TRAIN_DIR, '{}_checkpoint.json'.format(stage))


def curve_path(stage):
    return os.path.join(TRAIN_DIR, '{}_curve.csv'.format(stage))


def finetune_stage(learning_rate):
    """Returns the artifact stem of the ES fine tuning run at one learning
    rate, e.g. 'es-finetune-lr5e-06'."""
    return 'es-finetune-lr{:g}'.format(learning_rate)


FINETUNE_LEARNING_RATES = (5e-6, 1e-5, 1e-6)

DEFAULT_CONTROLLERS = ('rl:' + checkpoint_path('ppo'),
                       'rl:' + checkpoint_path('es'), 'mpc-lin',
                       'rule-based')


class ExperimentConfig(Configuration):
    """Every setting of a data, fit, train and evaluate run.

    Parameters
    ==========
    out_dir : string
        Root of the artifacts; the layout below it is fixed.
    seed : integer
        Root seed; every random stream is a named substream of it.
    workers : integer
        Worker processes of training and evaluation.
    train_days, test_days : integer
    data_noise_std : float
        Standard deviation of the process noise of the generated data.
    rom_n_a, rom_n_b : integer
        Lags of the fitted zone models; the MPC needs 1 and 1.
    feature_selection : boolean
        Select features greedily instead of using every candidate.
    hidden_sizes : sequence of integer
    sigma_init, sigma_floor : float
        Gaussian policy exploration at warm start and its floor.
    finetune_learning_rates : sequence of float
        ES learning rates of the 'es-finetune' stage, one run per rate.
    scratch_learning_rate : float
        PPO learning rate of the 'ppo-scratch' stage.
    eval_days : sequence of integer or None
        Test day indices evaluated, all when None.
    controllers : sequence of string
        'rl:<checkpoint>', 'mpc-lin', 'mpc-rom' or 'rule-based'. Relative
        checkpoint paths are resolved against ``out_dir``.
    rule_t_da : float
        Discharge air temperature of the rule based controller.
    exogenous : gridhvac.rom.ExogenousGeneratorConfig
    scenario : gridhvac.env.ScenarioConfig
    es : gridhvac.es.EsConfig
    ppo : gridhvac.ppo.PpoConfig
    mpc : gridhvac.mpc.MpcConfig

    """

    _fields = ('out_dir', 'seed', 'workers', 'train_days', 'test_days',
               'data_noise_std', 'rom_n_a', 'rom_n_b', 'feature_selection',
               'hidden_sizes', 'sigma_init', 'sigma_floor',
               'finetune_learning_rates', 'scratch_learning_rate',
               'eval_days', 'controllers', 'rule_t_da', 'exogenous',
               'scenario', 'es', 'ppo', 'mpc')

    _nested = {'exogenous': ExogenousGeneratorConfig,
               'scenario': ScenarioConfig, 'es': EsConfig, 'ppo': PpoConfig,
               'mpc': MpcConfig}

    def __init__(self, out_dir='run', seed=0, workers=1, train_days=31,
                 test_days=10, data_noise_std=0.0, rom_n_a=1, rom_n_b=1,
                 feature_selection=True, hidden_sizes=DEFAULT_HIDDEN_SIZES,
                 sigma_init=0.1, sigma_floor=1e-3,
                 finetune_learning_rates=FINETUNE_LEARNING_RATES,
                 scratch_learning_rate=1e-2,
                 eval_days=None, controllers=DEFAULT_CONTROLLERS,
                 rule_t_da=13.0, exogenous=None, scenario=None, es=None,
                 ppo=None, mpc=None):
        self.out_dir = out_dir
        self.seed = seed
        self.workers = workers
        self.train_days = train_days
        self.test_days = test_days
        self.data_noise_std = data_noise_std
        self.rom_n_a = rom_n_a
        self.rom_n_b = rom_n_b
        self.feature_selection = feature_selection
        self.hidden_sizes = hidden_sizes
        self.sigma_init = sigma_init
        self.sigma_floor = sigma_floor
        self.finetune_learning_rates = finetune_learning_rates
        self.scratch_learning_rate = scratch_learning_rate
        self.controllers = controllers
        self.rule_t_da = rule_t_da
        self.exogenous = exogenous or ExogenousGeneratorConfig()
        self.scenario = scenario or ScenarioConfig()
        self.es = es or EsConfig()
        self.ppo = ppo or PpoConfig()
        self.mpc = mpc or MpcConfig()
        self.eval_days = eval_days
        if abs(self.exogenous.dt - self.scenario.dt) > 1e-12:
            msg = 'The exogenous dt {} differs from the scenario dt {}.'
            raise ValueError(msg.format(self.exogenous.dt, self.scenario.dt))
        if self.sigma_init <= self.sigma_floor:
            msg = 'sigma_init {} must exceed sigma_floor {}.'
            raise ValueError(msg.format(self.sigma_init, self.sigma_floor))

    @property
    def out_dir(self):
        return self._out_dir

    @out_dir.setter
    def out_dir(self, value):
        if not isinstance(value, str) or not value:
            msg = 'out_dir must be a non-empty string, not {!r}.'
            raise TypeError(msg.format(value))
        self._out_dir = value

    @property
    def seed(self):
        return self._seed

    @seed.setter
    def seed(self, value):
        self._seed = check_int('seed', value, lower=0)

    @property
    def workers(self):
        return self._workers

    @workers.setter
    def workers(self, value):
        self._workers = check_int('workers', value, lower=1)

    @property
    def train_days(self):
        return self._train_days

    @train_days.setter
    def train_days(self, value):
        self._train_days = check_int('train_days', value, lower=1)

    @property
    def test_days(self):
        return self._test_days

    @test_days.setter
    def test_days(self, value):
        self._test_days = check_int('test_days', value, lower=1)

    @property
    def data_noise_std(self):
        return self._data_noise_std

    @data_noise_std.setter
    def data_noise_std(self, value):
        self._data_noise_std = check_float('data_noise_std', value,
                                           lower=0.0)

    @property
    def rom_n_a(self):
        return self._rom_n_a

    @rom_n_a.setter
    def rom_n_a(self, value):
        self._rom_n_a = check_int('rom_n_a', value, lower=1)

    @property
    def rom_n_b(self):
        return self._rom_n_b

    @rom_n_b.setter
    def rom_n_b(self, value):
        self._rom_n_b = check_int('rom_n_b', value, lower=1)

    @property
    def feature_selection(self):
        return self._feature_selection

    @feature_selection.setter
    def feature_selection(self, value):
        if not isinstance(value, bool):
            msg = 'feature_selection must be a boolean, not {!r}.'
            raise TypeError(msg.format(value))
        self._feature_selection = value

    @property
    def hidden_sizes(self):
        return self._hidden_sizes

    @hidden_sizes.setter
    def hidden_sizes(self, value):
        value = tuple(check_int('hidden_sizes', v, lower=1) for v in value)
        if not value:
            raise ValueError('hidden_sizes needs at least one layer.')
        self._hidden_sizes = value

    @property
    def sigma_init(self):
        return self._sigma_init

    @sigma_init.setter
    def sigma_init(self, value):
        self._sigma_init = check_float('sigma_init', value, lower=0.0,
                                       strict_lower=True)

    @property
    def sigma_floor(self):
        return self._sigma_floor

    @sigma_floor.setter
    def sigma_floor(self, value):
        self._sigma_floor = check_float('sigma_floor', value, lower=0.0)

    @property
    def finetune_learning_rates(self):
        return self._finetune_learning_rates

    @finetune_learning_rates.setter
    def finetune_learning_rates(self, value):
        if isinstance(value, (int, float)):
            value = [value]
        value = tuple(check_float('finetune_learning_rates', v, lower=0.0)
                      for v in value)
        if not value:
            msg = 'finetune_learning_rates needs at least one rate.'
            raise ValueError(msg)
        if len(set(finetune_stage(v) for v in value)) != len(value):
            msg = 'finetune_learning_rates {} has repeated rates.'
            raise ValueError(msg.format(value))
        self._finetune_learning_rates = value

    @property
    def scratch_learning_rate(self):
        return self._scratch_learning_rate

    @scratch_learning_rate.setter
    def scratch_learning_rate(self, value):
        self._scratch_learning_rate = check_float('scratch_learning_rate',
                                                  value, lower=0.0)

    @property
    def eval_days(self):
        return self._eval_days

    @eval_days.setter
    def eval_days(self, value):
        if value is not None:
            value = tuple(check_int('eval_days', v, lower=0) for v in value)
            if value and max(value) >= self.test_days:
                msg = 'eval_days {} reach past the {} test days.'
                raise ValueError(msg.format(value, self.test_days))
        self._eval_days = value

    @property
    def controllers(self):
        return self._controllers

    @controllers.setter
    def controllers(self, value):
        if isinstance(value, str):
            value = [value]
        value = tuple(value)
        for name in value:
            if not (name in CONTROLLER_KINDS[1:] or
                    (name.startswith('rl:') and len(name) > 3)):
                msg = ("{!r} is not a controller; use 'rl:<checkpoint>', "
                       "'mpc-lin', 'mpc-rom' or 'rule-based'.")
                raise ValueError(msg.format(name))
        self._controllers = value

    @property
    def rule_t_da(self):
        return self._rule_t_da

    @rule_t_da.setter
    def rule_t_da(self, value):
        self._rule_t_da = check_float('rule_t_da', value)

    @property
    def evaluated_days(self):
        if self.eval_days is None:
            return tuple(range(self.test_days))
        return self.eval_days

    def path(self, relative):
        """Returns a path below the output directory."""
        return os.path.join(self.out_dir, relative)

    def es_spec(self, n_inputs, n_actions):
        return MlpSpec((n_inputs,) + self.hidden_sizes + (n_actions,))

    def policy_spec(self, n_inputs, n_actions):
        return MlpSpec((n_inputs,) + self.hidden_sizes + (2 * n_actions,))

    def value_spec(self, n_inputs):
        return MlpSpec((n_inputs,) + self.hidden_sizes + (1,))
