#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Controllers, the paired DR / non-DR evaluation of test days and the
evaluation report."""

import logging
import os
import re
import time
import warnings
from collections import OrderedDict

# external libraries
import numpy as np

# local
from .env import BuildingEnv, denormalize_action, evaluation_dr_event, \
    is_occupied
from .mpc import MpcController
from .nn import GaussianPolicy, load_checkpoint
from .parallel import WorkerPool
from .rom import HvacCommand
from .utils import (FORMAT_VERSION, GridHvacUserWarning,
                    MissingArtifactError, write_csv, write_json)

logger = logging.getLogger(__name__)

DR = 'dr'
NON_DR = 'non-dr'
SCENARIOS = (DR, NON_DR)

METRICS = ('cost', 'discomfort_cost', 'energy_cost', 'violation_cost',
           'energy_kwh', 'peak_kw', 'max_exceedance_kw',
           'exceedance_minutes', 'dr_steps_over_1kw', 'degree_hours')

PRECOOLING_MARGIN = 0.3
PRECOOLING_HOURS = 4.0


class RuleBasedController(object):
    """Mid range flows when occupied, minimum flows otherwise, at a fixed
    discharge air temperature."""

    def __init__(self, model, t_da=13.0):
        self.model = model
        self.t_da = t_da

    def reset(self):
        pass

    def command(self, env, state):
        lower = np.array([b[0] for b in self.model.mdot_bounds])
        upper = np.array([b[1] for b in self.model.mdot_bounds])
        t = env.t
        if is_occupied(t, env.exo.is_weekday[t], env.config):
            mdot = 0.5 * (lower + upper)
        else:
            mdot = lower
        return HvacCommand(mdot, self.t_da), {}


class PolicyController(object):
    """Applies a deterministic policy ``act(state) -> raw action``."""

    def __init__(self, model, act):
        self.model = model
        self.act = act

    def reset(self):
        pass

    def command(self, env, state):
        return denormalize_action(self.act(state), self.model), {}


class ModelPredictiveController(object):
    """Wraps an MpcController with perfect forecasts from the episode."""

    def __init__(self, model, config, functions=None):
        self.controller = MpcController(model, config, functions)

    def reset(self):
        self.controller.reset()

    def command(self, env, state):
        start = time.time()
        cmd = self.controller.step(env.temps,
                                   env.forecast(self.controller.config.horizon))
        solution = self.controller.last_solution
        return cmd, OrderedDict([('solve_seconds', time.time() - start),
                                 ('iterations', solution.iterations),
                                 ('converged', int(solution.converged))])


def policy_from_checkpoint(path, n_actions):
    """Returns the deterministic action function stored in a checkpoint:
    the network output of an ES checkpoint or the mean action of a Gaussian
    policy checkpoint."""
    if not os.path.exists(path):
        raise MissingArtifactError(path, 'Train a policy first.')
    networks, header = load_checkpoint(path)
    if 'policy' not in networks:
        msg = "The checkpoint {} holds no 'policy' network."
        raise ValueError(msg.format(path))
    net = networks['policy']
    if net.spec.n_outputs == n_actions:
        return net.forward
    elif net.spec.n_outputs == 2 * n_actions:
        policy = GaussianPolicy(net, header.get('sigma_floor', 1e-3))
        return policy.mean_action
    msg = 'The policy in {} has {} outputs, the building needs {} actions.'
    raise ValueError(msg.format(path, net.spec.n_outputs, n_actions))


def resolve_checkpoint(name, out_dir):
    path = name[len('rl:'):]
    if not os.path.isabs(path):
        path = os.path.join(out_dir, path)
    return path


def load_controller(name, model, config, functions=None):
    """Returns the controller named by a controller string.

    Parameters
    ==========
    name : string
        'rl:<checkpoint>', 'mpc-lin', 'mpc-rom' or 'rule-based'.
    model : gridhvac.rom.BuildingModel
    config : gridhvac.config.ExperimentConfig
    functions : gridhvac.codegen.BuildingFunctions, optional
        Shared by MPC controllers.

    """
    if name == 'rule-based':
        return RuleBasedController(model, config.rule_t_da)
    elif name in ('mpc-lin', 'mpc-rom'):
        mpc_config = config.mpc.replace(variant=name.split('-')[1])
        return ModelPredictiveController(model, mpc_config, functions)
    elif name.startswith('rl:'):
        act = policy_from_checkpoint(resolve_checkpoint(name, config.out_dir),
                                     model.n_zones + 1)
        return PolicyController(model, act)
    msg = '{!r} is not a controller.'
    raise ValueError(msg.format(name))


def check_controllers(names, model, config):
    """Loads every RL controller once and raises a ValueError listing each
    one that fails."""
    failures = []
    for name in names:
        if not name.startswith('rl:'):
            continue
        try:
            load_controller(name, model, config)
        except (IOError, ValueError, KeyError) as e:
            failures.append('{}: {}'.format(name, e))
    if failures:
        msg = 'Could not load {} controller(s):\n  {}'
        raise ValueError(msg.format(len(failures), '\n  '.join(failures)))


def run_controller_episode(controller, env, state):
    """Runs ``controller`` to the end of the episode; controller info
    columns are appended to the env trace rows."""
    controller.reset()
    while not env.done:
        cmd, info = controller.command(env, state)
        state = env.step_command(cmd).next_state
        env.trace[-1].update(info)
    return env


def zone_columns(trace):
    return sorted((k for k in trace[0] if k.startswith('t_zone_')),
                  key=lambda k: int(k.split('_')[-1]))


def episode_metrics(trace, config):
    """Returns the cost breakdown, demand and comfort metrics of a trace.

    The weighted cost terms are recomputed from the trace; their sum equals
    the negated episode return.

    """
    kappa = config.kappa
    zones = zone_columns(trace)
    metrics = OrderedDict((m, 0.0) for m in METRICS)
    for row in trace:
        d = row['w_discomfort'] * kappa[0] * row['discomfort']
        e = row['w_energy'] * kappa[1] * row['energy_kwh']
        v = row['w_violation'] * kappa[2] * row['violation']
        metrics['discomfort_cost'] += d
        metrics['energy_cost'] += e
        metrics['violation_cost'] += v
        metrics['cost'] += d + e + v
        metrics['energy_kwh'] += row['energy_kwh']
        excess = row['power_kw'] - row['p_limit']
        metrics['peak_kw'] = max(metrics['peak_kw'], row['power_kw'])
        metrics['max_exceedance_kw'] = max(metrics['max_exceedance_kw'],
                                           excess)
        if excess > 0.0:
            metrics['exceedance_minutes'] += config.minutes_per_step
        if row['in_dr'] and excess > 1.0:
            metrics['dr_steps_over_1kw'] += 1
        for z in zones:
            T = row[z]
            outside = max(T - row['band_upper'], row['band_lower'] - T, 0.0)
            metrics['degree_hours'] += outside * config.dt
    metrics['dr_steps_over_1kw'] = int(metrics['dr_steps_over_1kw'])
    return metrics


def precooling_flag(dr_trace, non_dr_trace, event, config):
    """Returns whether any zone is driven at least 0.3 degrees below its
    non-DR temperature during the 4 hours before the event starts."""
    window = int(round(PRECOOLING_HOURS / config.dt))
    first = max(event.start_step - window, 0)
    for dr_row, row in zip(dr_trace[first:event.start_step],
                           non_dr_trace[first:event.start_step]):
        for z in zone_columns(dr_trace):
            if row[z] - dr_row[z] >= PRECOOLING_MARGIN:
                return True
    return False


def controller_label(name):
    return re.sub(r'[^A-Za-z0-9]+', '-', name).strip('-')


def trace_path(out_dir, name, day, scenario):
    return os.path.join(out_dir, 'traces', '{}_day{:02d}_{}.csv'.format(
        controller_label(name), day, scenario))


class EvaluationTask(object):
    """Runs one (controller, day, scenario) episode. Instances are sent to
    the worker processes once and cache the controllers they load."""

    def __init__(self, model, config, test_days):
        self.model = model
        self.config = config
        self.test_days = list(test_days)
        self._controllers = {}
        self._functions = None

    def controller(self, name):
        if name not in self._controllers:
            if name.startswith('mpc') and self._functions is None:
                from .codegen import generate_building_functions
                self._functions = generate_building_functions(self.model)
            self._controllers[name] = load_controller(
                name, self.model, self.config, self._functions)
        return self._controllers[name]

    def __call__(self, name, day, scenario):
        scenario_config = self.config.scenario
        event = evaluation_dr_event(scenario_config) if scenario == DR \
            else None
        env = BuildingEnv(self.model, scenario_config)
        state = env.reset(self.test_days[day], dr_event=event)
        run_controller_episode(self.controller(name), env, state)
        metrics = episode_metrics(env.trace, scenario_config)
        if abs(metrics['cost'] - env.episode_cost) > 1e-9 * max(
                1.0, abs(env.episode_cost)):
            msg = 'Trace cost {} differs from the episode cost {}.'
            raise FloatingPointError(msg.format(metrics['cost'],
                                                env.episode_cost))
        return env.trace, metrics


class EvaluationReport(object):
    """Per controller, day and scenario rows with group summaries.

    Parameters
    ==========
    rows : list of OrderedDict
        Keys controller, day, scenario, the METRICS and precooling (a
        boolean on DR rows, None on non-DR rows).

    """

    def __init__(self, rows, dr_event=None):
        self.rows = list(rows)
        self.dr_event = dr_event

    @property
    def controllers(self):
        seen = []
        for row in self.rows:
            if row['controller'] not in seen:
                seen.append(row['controller'])
        return seen

    def summary(self):
        """Returns one row per (controller, scenario) holding the mean of
        every metric over the days."""
        summary = []
        for name in self.controllers:
            for scenario in SCENARIOS:
                rows = [r for r in self.rows if r['controller'] == name and
                        r['scenario'] == scenario]
                if not rows:
                    continue
                entry = OrderedDict([('controller', name),
                                     ('scenario', scenario),
                                     ('days', len(rows))])
                for m in METRICS:
                    entry[m] = float(np.mean([r[m] for r in rows]))
                flags = [r['precooling'] for r in rows
                         if r['precooling'] is not None]
                entry['precooling_days'] = int(sum(flags))
                summary.append(entry)
        return summary

    def relative_cost_reduction(self):
        """Returns ``1 - cost(a) / cost(b)`` for every ordered pair of
        distinct controllers in each scenario, keyed 'a vs b'."""
        means = {(s['controller'], s['scenario']): s['cost']
                 for s in self.summary()}
        reductions = OrderedDict()
        for scenario in SCENARIOS:
            entries = OrderedDict()
            for a in self.controllers:
                for b in self.controllers:
                    if a == b or (a, scenario) not in means or \
                            (b, scenario) not in means:
                        continue
                    base = means[(b, scenario)]
                    entries['{} vs {}'.format(a, b)] = \
                        1.0 - means[(a, scenario)] / base if base else np.nan
            reductions[scenario] = entries
        return reductions

    def write(self, out_dir):
        """Writes report.csv, summary.csv and report.json."""
        header = ['controller', 'day', 'scenario'] + list(METRICS) + \
            ['precooling']
        write_csv(os.path.join(out_dir, 'report.csv'), header,
                  [[_csv_value(row[k]) for k in header] for row in self.rows])
        summary = self.summary()
        if summary:
            keys = list(summary[0].keys())
            write_csv(os.path.join(out_dir, 'summary.csv'), keys,
                      [[s[k] for k in keys] for s in summary])
        write_json(os.path.join(out_dir, 'report.json'), {
            'format_version': FORMAT_VERSION,
            'dr_event': self.dr_event.to_dict() if self.dr_event else None,
            'rows': self.rows,
            'summary': summary,
            'relative_cost_reduction': self.relative_cost_reduction()})


def _csv_value(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return int(value)
    return value


def run_evaluation(config, model, test_days, out_dir, controllers=None):
    """Runs every controller on every evaluated test day with and without
    the evaluation DR event, writes the traces and the report below
    ``out_dir`` and returns the EvaluationReport."""
    controllers = list(controllers or config.controllers)
    check_controllers(controllers, model, config)
    days = config.evaluated_days
    tasks = [(name, day, scenario) for name in controllers for day in days
             for scenario in SCENARIOS]
    logger.info('Evaluating %d controllers on %d days, %d episodes',
                len(controllers), len(days), len(tasks))
    with WorkerPool(EvaluationTask(model, config, test_days),
                    config.workers) as pool:
        results = pool.map(tasks)

    os.makedirs(os.path.join(out_dir, 'traces'), exist_ok=True)
    event = evaluation_dr_event(config.scenario)
    traces = {}
    for (name, day, scenario), (trace, _) in zip(tasks, results):
        traces[(name, day, scenario)] = trace
        header = list(trace[0].keys())
        write_csv(trace_path(out_dir, name, day, scenario), header,
                  [[row[k] for k in header] for row in trace])

    rows = []
    for (name, day, scenario), (_, metrics) in zip(tasks, results):
        row = OrderedDict([('controller', name), ('day', day),
                           ('scenario', scenario)])
        row.update(metrics)
        if scenario == DR:
            flag = precooling_flag(traces[(name, day, DR)],
                                   traces[(name, day, NON_DR)], event,
                                   config.scenario)
            row['precooling'] = flag
        else:
            row['precooling'] = None
        rows.append(row)

    report = EvaluationReport(rows, event)
    report.write(out_dir)
    for name in controllers:
        if name.startswith('rl:') and not any(
                r['precooling'] for r in rows if r['controller'] == name):
            msg = 'Controller {} does not pre-cool on any DR day.'
            warnings.warn(msg.format(name), GridHvacUserWarning)
    for s in report.summary():
        logger.info('%s %s: mean cost %.4f, peak %.2f kW, exceedance %.1f '
                    'min', s['controller'], s['scenario'], s['cost'],
                    s['peak_kw'], s['exceedance_minutes'])
    return report
