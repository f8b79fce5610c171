#!/usr/bin/env python

import logging
import os
import shutil
import tempfile

from numpy import testing

from .. import cli
from ..cli import build_parser, main, resolve_config
from ..config import ExperimentConfig
from ..es import EsConfig
from ..nn import load_checkpoint
from ..ppo import PpoConfig
from ..utils import read_csv, read_numeric_csv


def small_config(out_dir):
    return ExperimentConfig(
        out_dir=out_dir, train_days=2, test_days=1, hidden_sizes=(8,),
        controllers=['rule-based'],
        es=EsConfig(population_size=2, iterations=2, episodes_per_fitness=1,
                    eval_episodes=1, checkpoint_every=0),
        ppo=PpoConfig(iterations=1, rollout_episodes=1, epochs_per_batch=1,
                      minibatch_size=288, eval_episodes=1,
                      checkpoint_every=0))


class TestCommandLine():

    def setup_method(self):
        self.directory = tempfile.mkdtemp()
        self.out = os.path.join(self.directory, 'run')
        self.config_path = os.path.join(self.directory, 'experiment.json')
        small_config(self.out).save(self.config_path)

    def teardown_method(self):
        shutil.rmtree(self.directory)

    def run(self, *args):
        return main(list(args) + ['--config', self.config_path])

    def read(self, *parts):
        with open(os.path.join(*parts), 'rb') as f:
            return f.read()

    def test_usage_errors(self):
        assert main([]) == 1
        assert main(['frobnicate']) == 1
        assert main(['train', '--stage', 'everything']) == 1
        assert main(['evaluate', '--days', 'one']) == 1
        assert main(['--version']) == 0

    def test_overrides(self):
        args = build_parser().parse_args(
            ['evaluate', '--config', self.config_path, '--seed', '5',
             '--workers', '2', '--controller', 'mpc-lin', '--controller',
             'rule-based', '--days', '0'])
        config = resolve_config(args)
        assert config.seed == 5
        assert config.workers == 2
        assert config.controllers == ('mpc-lin', 'rule-based')
        assert config.eval_days == (0,)
        assert config.train_days == 2

    def test_missing_files(self, caplog):
        assert main(['gen-data', '--config',
                     os.path.join(self.directory, 'nope.json')]) == 1
        with caplog.at_level(logging.ERROR):
            assert self.run('fit-rom') == 1
        assert 'train.csv' in caplog.text
        assert self.run('evaluate') == 1
        assert self.run('report') == 1
        assert not os.path.exists(os.path.join(self.out, 'report'))

    def test_gen_data_is_reproducible(self):
        assert self.run('gen-data') == 0
        other = os.path.join(self.directory, 'again')
        assert self.run('gen-data', '--out', other) == 0
        for name in ('train.csv', 'test.csv'):
            assert self.read(self.out, 'data', name) == \
                self.read(other, 'data', name)
        _, rows = read_csv(os.path.join(self.out, 'data', 'train.csv'))
        assert len(rows) == 2 * 288
        _, rows = read_csv(os.path.join(self.out, 'data', 'test.csv'))
        assert len(rows) == 288
        assert os.path.exists(os.path.join(self.out, 'data', 'config.json'))

        assert self.run('gen-data', '--out', other, '--seed', '1') == 0
        assert self.read(self.out, 'data', 'train.csv') != \
            self.read(other, 'data', 'train.csv')

    def test_ppo_needs_the_es_checkpoint(self, caplog):
        assert self.run('gen-data') == 0
        assert self.run('fit-rom') == 0
        with caplog.at_level(logging.ERROR):
            assert self.run('train', '--stage', 'ppo') == 1
        assert 'es_checkpoint.json' in caplog.text

    def test_pipeline(self, monkeypatch):
        assert self.run('gen-data') == 0
        assert self.run('fit-rom') == 0
        fit = read_numeric_csv(os.path.join(self.out, 'rom',
                                            'fit_report.csv'),
                               ['zone', 'rmse'])
        testing.assert_array_equal(fit['zone'], [1, 2, 3, 4, 5])
        assert max(fit['rmse']) < 0.1

        assert self.run('train', '--stage', 'both') == 0
        train = os.path.join(self.out, 'train')
        _, es_header = load_checkpoint(os.path.join(train,
                                                    'es_checkpoint.json'))
        assert es_header['kind'] == 'es'
        es_curve = read_numeric_csv(os.path.join(train, 'es_curve.csv'),
                                    ['iteration', 'eval_cost'])
        assert len(es_curve['iteration']) == 2
        ppo_curve = read_numeric_csv(os.path.join(train, 'ppo_curve.csv'),
                                     ['eval_cost_deterministic'])
        # the warm started policy starts where ES stopped
        assert ppo_curve['eval_cost_deterministic'][0] == \
            es_header['final_eval_cost']

        # one fine tuning run per learning rate, all from the ES checkpoint
        assert self.run('train', '--stage', 'es-finetune') == 0
        for rate in ('5e-06', '1e-05', '1e-06'):
            stem = os.path.join(train, 'es-finetune-lr' + rate)
            curve = read_numeric_csv(stem + '_curve.csv', ['eval_cost'])
            assert curve['eval_cost'][0] == es_header['final_eval_cost']
            assert os.path.exists(stem + '_checkpoint.json')

        assert self.run('evaluate', '--controller', 'rule-based',
                        '--controller', 'rl:train/ppo_checkpoint.json') == 0
        summary = read_csv(os.path.join(self.out, 'eval', 'summary.csv'))[1]
        assert len(summary) == 4

        plotted = {}
        plot_learning_curves = cli.plot_learning_curves

        def record_curves(curves, path):
            plotted.update(curves)
            return plot_learning_curves(curves, path)

        monkeypatch.setattr(cli, 'plot_learning_curves', record_curves)
        assert self.run('report') == 0
        assert list(plotted) == ['es', 'ppo', 'es-finetune lr=5e-06',
                                 'es-finetune lr=1e-05',
                                 'es-finetune lr=1e-06']
        for name in ('learning_curves.svg', 'costs.svg',
                     'traces_rule-based_day00.svg'):
            assert os.path.exists(os.path.join(self.out, 'report', name))
