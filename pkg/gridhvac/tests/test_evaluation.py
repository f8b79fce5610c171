#!/usr/bin/env python

import os
import shutil
import tempfile
import warnings
from collections import OrderedDict

import numpy as np
from numpy import testing
import pytest

from ..config import ExperimentConfig
from ..env import DrEvent, ScenarioConfig, evaluation_dr_event
from ..evaluation import (DR, METRICS, NON_DR, EvaluationReport,
                          EvaluationTask, RuleBasedController,
                          check_controllers, controller_label,
                          episode_metrics, policy_from_checkpoint,
                          precooling_flag, run_evaluation, trace_path)
from ..models import five_zone_office
from ..mpc import MpcConfig
from ..nn import (MlpSpec, init_gaussian_policy, init_mlp, save_checkpoint,
                  transfer_warm_start)
from ..rom import ExogenousGeneratorConfig, generate_synthetic_exogenous
from ..utils import (GridHvacConvergenceWarning, GridHvacUserWarning,
                     MissingArtifactError, read_numeric_csv)


def evaluation_days(n=2, seed=9):
    days = generate_synthetic_exogenous(ExogenousGeneratorConfig(), n, seed)
    return days.split_days(288)


def fake_trace(temps):
    return [OrderedDict([('step', t), ('t_zone_1', T), ('t_zone_2', 24.0)])
            for t, T in enumerate(temps)]


class TestMetrics():

    def setup_method(self):
        self.model = five_zone_office()
        self.config = ExperimentConfig(test_days=2)
        self.task = EvaluationTask(self.model, self.config, evaluation_days())

    def test_cost_identity(self):
        trace, metrics = self.task('rule-based', 0, DR)
        assert list(metrics) == list(METRICS)
        testing.assert_allclose(metrics['cost'],
                                metrics['discomfort_cost'] +
                                metrics['energy_cost'] +
                                metrics['violation_cost'], rtol=1e-12)
        testing.assert_allclose(metrics['cost'],
                                -sum(row['reward'] for row in trace),
                                rtol=1e-12)
        testing.assert_allclose(metrics['energy_kwh'],
                                sum(row['energy_kwh'] for row in trace))
        assert metrics['peak_kw'] == max(row['power_kw'] for row in trace)
        # whole control steps over the limit
        assert metrics['exceedance_minutes'] % 5.0 == 0.0
        assert metrics['dr_steps_over_1kw'] <= 32

    def test_dr_changes_only_the_event_afternoon(self):
        dr, dr_metrics = self.task('rule-based', 1, DR)
        non_dr, non_dr_metrics = self.task('rule-based', 1, NON_DR)
        assert len(dr) == len(non_dr) == 288
        # the rule based commands ignore the grid signal
        for a, b in zip(dr, non_dr):
            assert a['power_kw'] == b['power_kw']
        assert non_dr_metrics['dr_steps_over_1kw'] == 0
        assert {row['p_limit'] for row in dr[168:200]} == {36.0}

    def test_degree_hours(self):
        scenario = ScenarioConfig()
        rows = []
        for step, T in enumerate([26.0, 24.0, 22.0]):
            rows.append(OrderedDict([
                ('step', step), ('t_zone_1', T), ('band_lower', 23.0),
                ('band_upper', 25.0), ('w_discomfort', 0.7),
                ('w_energy', 0.2), ('w_violation', 0.1),
                ('discomfort', 1.0), ('energy_kwh', 1.0), ('violation', 0.0),
                ('power_kw', 12.0), ('p_limit', 10.0), ('in_dr', 1)]))
        metrics = episode_metrics(rows, scenario)
        testing.assert_allclose(metrics['degree_hours'], 2.0 / 12.0)
        testing.assert_allclose(metrics['exceedance_minutes'], 15.0)
        assert metrics['dr_steps_over_1kw'] == 3
        testing.assert_allclose(metrics['max_exceedance_kw'], 2.0)
        testing.assert_allclose(metrics['cost'], 3 * 0.9)


def test_rule_based_controller():
    model = five_zone_office()
    env_config = ScenarioConfig()
    controller = RuleBasedController(model, 12.5)

    class Clock(object):
        config = env_config
        exo = evaluation_days(1)[0]

    env = Clock()
    env.t = 100
    cmd, info = controller.command(env, None)
    testing.assert_allclose(cmd.mdot, [1.21] * 4 + [1.76])
    assert cmd.t_da == 12.5
    assert info == {}
    env.t = 10
    cmd, _ = controller.command(env, None)
    testing.assert_allclose(cmd.mdot, [0.22] * 4 + [0.32])


def test_precooling_flag():
    config = ScenarioConfig()
    event = DrEvent(100, 0.3)
    baseline = fake_trace([24.0] * 150)
    cooled = [24.0] * 150
    cooled[80] = 23.6
    assert precooling_flag(fake_trace(cooled), baseline, event, config)
    # too little
    cooled[80] = 23.8
    assert not precooling_flag(fake_trace(cooled), baseline, event, config)
    # more than four hours ahead
    cooled[80] = 24.0
    cooled[50] = 23.0
    assert not precooling_flag(fake_trace(cooled), baseline, event, config)
    # during the event
    cooled[50] = 24.0
    cooled[120] = 23.0
    assert not precooling_flag(fake_trace(cooled), baseline, event, config)


def test_report_summary_and_reductions():
    rows = []
    for name, cost in (('a', 2.0), ('b', 4.0)):
        for day in (0, 1):
            for scenario in (DR, NON_DR):
                row = OrderedDict([('controller', name), ('day', day),
                                   ('scenario', scenario)])
                row.update((m, 0.0) for m in METRICS)
                row['cost'] = cost + day
                row['precooling'] = (day == 0) if scenario == DR else None
                rows.append(row)
    report = EvaluationReport(rows)
    assert report.controllers == ['a', 'b']
    summary = report.summary()
    assert len(summary) == 4
    assert summary[0]['controller'] == 'a'
    assert summary[0]['scenario'] == DR
    assert summary[0]['days'] == 2
    assert summary[0]['cost'] == 2.5
    assert summary[0]['precooling_days'] == 1
    assert summary[1]['precooling_days'] == 0
    reductions = report.relative_cost_reduction()
    testing.assert_allclose(reductions[DR]['a vs b'], 1.0 - 2.5 / 4.5)
    testing.assert_allclose(reductions[NON_DR]['b vs a'], 1.0 - 4.5 / 2.5)


def test_labels_and_paths():
    assert controller_label('rl:train/ppo_checkpoint.json') == \
        'rl-train-ppo-checkpoint-json'
    assert trace_path('eval', 'mpc-lin', 3, DR) == os.path.join(
        'eval', 'traces', 'mpc-lin_day03_dr.csv')


class TestCheckpointControllers():

    def setup_method(self):
        self.directory = tempfile.mkdtemp()
        self.spec = MlpSpec((108, 8, 6))

    def teardown_method(self):
        shutil.rmtree(self.directory)

    def path(self, name):
        return os.path.join(self.directory, name)

    def test_deterministic_policies(self):
        net = init_mlp(self.spec, seed=1)
        save_checkpoint(self.path('es.json'), {'policy': net}, kind='es')
        act = policy_from_checkpoint(self.path('es.json'), 6)
        states = np.random.default_rng(0).standard_normal((3, 108))
        testing.assert_array_equal(act(states), net.forward(states))

        policy, value = transfer_warm_start(net, self.spec.with_outputs(12),
                                            self.spec.with_outputs(1))
        save_checkpoint(self.path('ppo.json'),
                        {'policy': policy.net, 'value': value},
                        kind='gaussian', sigma_floor=policy.sigma_floor)
        act = policy_from_checkpoint(self.path('ppo.json'), 6)
        testing.assert_array_equal(act(states), net.forward(states))

    def test_bad_checkpoints(self):
        with pytest.raises(MissingArtifactError):
            policy_from_checkpoint(self.path('missing.json'), 6)
        save_checkpoint(self.path('odd.json'),
                        {'policy': init_mlp(self.spec.with_outputs(7))})
        with pytest.raises(ValueError):
            policy_from_checkpoint(self.path('odd.json'), 6)
        save_checkpoint(self.path('value.json'),
                        {'value': init_mlp(self.spec.with_outputs(1))})
        with pytest.raises(ValueError):
            policy_from_checkpoint(self.path('value.json'), 6)

    def test_failures_are_listed_together(self):
        config = ExperimentConfig(out_dir=self.directory)
        names = ['rl:one.json', 'rule-based', 'rl:two.json']
        with pytest.raises(ValueError) as info:
            check_controllers(names, five_zone_office(), config)
        message = str(info.value)
        assert 'rl:one.json' in message
        assert 'rl:two.json' in message
        assert '2 controller' in message

    def test_gaussian_policy_mean_is_used(self):
        policy = init_gaussian_policy(self.spec.with_outputs(12), 3)
        save_checkpoint(self.path('scratch.json'), {'policy': policy.net},
                        kind='gaussian', sigma_floor=policy.sigma_floor)
        act = policy_from_checkpoint(self.path('scratch.json'), 6)
        state = np.zeros(108)
        testing.assert_array_equal(act(state), policy.mean_action(state))


class TestRunEvaluation():

    def setup_method(self):
        self.directory = tempfile.mkdtemp()
        self.model = five_zone_office()
        self.days = evaluation_days()

    def teardown_method(self):
        shutil.rmtree(self.directory)

    def test_duplicate_controllers_give_identical_rows(self):
        config = ExperimentConfig(out_dir=self.directory, test_days=2,
                                  eval_days=[1])
        report = run_evaluation(config, self.model, self.days, self.directory,
                                ['rule-based', 'rule-based'])
        assert len(report.rows) == 4
        first, second = report.rows[:2], report.rows[2:]
        assert first == second
        assert first[0]['scenario'] == DR
        assert first[0]['precooling'] is False
        assert first[1]['precooling'] is None
        for name in ('report.csv', 'summary.csv', 'report.json'):
            assert os.path.exists(os.path.join(self.directory, name))
        trace = read_numeric_csv(trace_path(self.directory, 'rule-based', 1,
                                            DR), ['step', 'p_limit'])
        assert len(trace['step']) == 288

    def test_policy_without_precooling_warns(self):
        spec = MlpSpec((108, 4, 6))
        save_checkpoint(os.path.join(self.directory, 'flat.json'),
                        {'policy': init_mlp(spec, scheme='zeros')},
                        kind='es')
        config = ExperimentConfig(out_dir=self.directory, test_days=2,
                                  eval_days=[0], controllers=['rl:flat.json'])
        with pytest.warns(GridHvacUserWarning):
            report = run_evaluation(config, self.model, self.days,
                                    os.path.join(self.directory, 'eval'))
        assert [r['precooling'] for r in report.rows] == [False, None]

    def test_mpc_solver_columns(self):
        config = ExperimentConfig(
            out_dir=self.directory, test_days=2,
            mpc=MpcConfig(horizon=2, max_iterations=20))
        task = EvaluationTask(self.model, config, self.days)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', GridHvacConvergenceWarning)
            trace, metrics = task('mpc-lin', 0, DR)
        assert len(trace) == 288
        for row in trace:
            assert row['iterations'] >= 1
            assert row['converged'] in (0, 1)
            assert row['solve_seconds'] >= 0.0
        assert metrics['cost'] > 0.0
        assert evaluation_dr_event(config.scenario).start_step == 168
