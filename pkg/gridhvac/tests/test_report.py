#!/usr/bin/env python

import os
import shutil
import tempfile

import numpy as np
from numpy import testing
import pytest

from .. import report
from ..env import BuildingEnv, ScenarioConfig, evaluation_dr_event
from ..models import five_zone_office
from ..rom import ExogenousGeneratorConfig, generate_synthetic_exogenous
from ..utils import MalformedFileError, write_csv


class TestFigures():

    def setup_method(self):
        self.directory = tempfile.mkdtemp()

    def teardown_method(self):
        shutil.rmtree(self.directory)

    def path(self, name):
        return os.path.join(self.directory, name)

    def write_curve(self, name, costs, column='eval_cost'):
        path = self.path(name)
        write_csv(path, ['iteration', column],
                  [[i, float(c)] for i, c in enumerate(costs)])
        return path

    def test_learning_curves(self, monkeypatch):
        figures = []
        monkeypatch.setattr(report.plt, 'close', figures.append)
        curves = {'es': [self.write_curve('a.csv', [5.0, 4.0, 3.0, 2.5]),
                         self.write_curve('b.csv', [6.0, 4.5, 3.5, 3.0])],
                  'ppo': [self.write_curve('c.csv', [2.5, 2.4, 2.2],
                                           'eval_cost_deterministic')]}
        path = report.plot_learning_curves(curves, self.path('curves.svg'))
        assert os.path.exists(path)
        ax = figures[0].axes[0]
        testing.assert_allclose(ax.get_xlim(), (0.0, 3.0))
        # mean line and band of the two ES runs
        testing.assert_allclose(ax.lines[0].get_ydata(),
                                [5.5, 4.25, 3.25, 2.75])
        assert len(ax.collections) == 1
        monkeypatch.undo()
        report.plt.close('all')

    def test_nothing_to_plot(self):
        with pytest.raises(ValueError):
            report.plot_learning_curves({}, self.path('curves.svg'))
        with pytest.raises(ValueError):
            report.plot_cost_bars([], self.path('costs.svg'))
        assert os.listdir(self.directory) == []

    def test_curve_without_cost_column(self):
        path = self.path('bad.csv')
        write_csv(path, ['iteration', 'loss'], [[0, 1.0]])
        with pytest.raises(MalformedFileError):
            report.plot_learning_curves({'es': [path]},
                                        self.path('curves.svg'))

    def test_cost_bars(self):
        path = self.path('summary.csv')
        write_csv(path, ['controller', 'scenario', 'days', 'cost'],
                  [['rule-based', 'dr', 2, 10.5],
                   ['rule-based', 'non-dr', 2, 8.0],
                   ['mpc-lin', 'dr', 2, 9.0]])
        summary = report.read_summary(path)
        assert summary[0]['cost'] == 10.5
        assert summary[2]['controller'] == 'mpc-lin'
        written = report.plot_cost_bars(
            summary, os.path.join(self.directory, 'out', 'costs.svg'))
        assert os.path.exists(written)

    def test_reruns_are_identical(self):
        summary = [{'controller': 'rule-based', 'scenario': 'dr',
                    'cost': 10.5},
                   {'controller': 'rule-based', 'scenario': 'non-dr',
                    'cost': 8.0}]
        curves = {'es': [self.write_curve('a.csv', [5.0, 4.0, 3.0])]}
        contents = []
        for name in ('first', 'second'):
            paths = [report.plot_cost_bars(
                         summary, self.path(name + '_costs.svg')),
                     report.plot_learning_curves(
                         curves, self.path(name + '_curves.svg'))]
            files = []
            for path in paths:
                with open(path, 'rb') as f:
                    files.append(f.read())
            contents.append(files)
        assert contents[0] == contents[1]
        assert b'<dc:date>' not in contents[0][0]

    def test_empty_summary(self):
        path = self.path('summary.csv')
        write_csv(path, ['controller', 'scenario', 'cost'], [])
        with pytest.raises(MalformedFileError):
            report.read_summary(path)

    def test_day_traces(self):
        model = five_zone_office()
        day = generate_synthetic_exogenous(ExogenousGeneratorConfig(), 1, 0)
        paths = []
        for event, name in ((evaluation_dr_event(ScenarioConfig()), 'dr'),
                            (None, 'non-dr')):
            env = BuildingEnv(model)
            env.reset(day, dr_event=event)
            while not env.done:
                env.step(np.zeros(6))
            paths.append(self.path(name + '.csv'))
            env.write_trace(paths[-1])
        written = report.plot_day_traces(paths[0], paths[1],
                                         self.path('traces.svg'))
        with open(written) as f:
            assert '<svg' in f.read()
