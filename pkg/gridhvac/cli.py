#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Command line interface: ``gridhvac gen-data``, ``fit-rom``, ``train``,
``evaluate`` and ``report``."""

import argparse
import logging
import os
import sys

# external libraries
import numpy as np

# local
from . import config as layout
from .config import ExperimentConfig
from .env import EnvFactory
from .es import CURVE_HEADER as ES_CURVE_HEADER, train_es
from .evaluation import DR, NON_DR, controller_label, run_evaluation, \
    trace_path
from .models import five_zone_office
from .nn import (flatten, init_gaussian_policy, init_mlp, load_checkpoint,
                 save_checkpoint, transfer_warm_start, unflatten)
from .ppo import CURVE_HEADER as PPO_CURVE_HEADER, train_ppo
from .report import (plot_cost_bars, plot_day_traces, plot_learning_curves,
                     read_summary)
from .rom import (BuildingModel, OperationDataset, exploration_commands,
                  feature_select, fit_arx, generate_synthetic_exogenous,
                  simulate, zone_feature_ids)
from .utils import (MissingArtifactError, TrainingDivergedError,
                    WorkerFailureError, derive_seed, seed_substream,
                    write_csv)
from .version import __version__

logger = logging.getLogger(__name__)

STAGES = ('es', 'ppo', 'both', 'es-finetune', 'ppo-scratch')

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s %(message)s'


class UsageError(ValueError):
    pass


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def echo_config(config, directory):
    """Writes the fully resolved configuration into an output directory."""
    os.makedirs(directory, exist_ok=True)
    config.save(os.path.join(directory, 'config.json'))


def reference_building(config):
    return five_zone_office(dt=config.scenario.dt)


def load_model(config):
    path = config.path(layout.MODEL_FILE)
    if not os.path.exists(path):
        raise MissingArtifactError(path, 'Run gridhvac fit-rom first.')
    return BuildingModel.load(path)


def load_days(config, relative):
    """Returns the whole days of exogenous data in a dataset file."""
    path = config.path(relative)
    if not os.path.exists(path):
        raise MissingArtifactError(path, 'Run gridhvac gen-data first.')
    data = OperationDataset.from_csv(path, dt=config.scenario.dt)
    days = data.exogenous.split_days(config.exogenous.steps_per_day)
    if not days:
        msg = '{} holds no whole day of data.'
        raise ValueError(msg.format(path))
    return days


def cmd_gen_data(config):
    """Simulates the reference building under random exploration commands
    over synthetic weather and writes the training and test datasets."""
    model = reference_building(config)
    echo_config(config, config.path(layout.DATA_DIR))
    periods = (
        (layout.TRAIN_DATA, config.train_days, 'data-train',
         config.exogenous.start_weekday),
        (layout.TEST_DATA, config.test_days, 'data-test',
         (config.exogenous.start_weekday + config.train_days) % 7))
    for relative, days, name, weekday in periods:
        seed = derive_seed(config.seed, name)
        exo = generate_synthetic_exogenous(
            config.exogenous.replace(start_weekday=weekday), days, seed)
        mdot, t_da = exploration_commands(model, len(exo),
                                          seed_substream(seed, 'exploration'))
        initial = np.full(model.n_zones, config.scenario.initial_temp)
        data = simulate(model, exo, mdot, t_da, initial,
                        noise_std=config.data_noise_std,
                        rng=seed_substream(seed, 'noise'))
        path = config.path(relative)
        data.to_csv(path)
        logger.info('Wrote %d days (%d rows) to %s', days, len(data), path)


def cmd_fit_rom(config):
    """Identifies a zone model per zone from the training dataset and writes
    the building model and the fit report."""
    path = config.path(layout.TRAIN_DATA)
    if not os.path.exists(path):
        raise MissingArtifactError(path, 'Run gridhvac gen-data first.')
    data = OperationDataset.from_csv(path, dt=config.scenario.dt)
    reference = reference_building(config)
    if data.n_zones != reference.n_zones:
        msg = 'The dataset has {} zones, the reference building {}.'
        raise ValueError(msg.format(data.n_zones, reference.n_zones))

    zones, rows = [], []
    for zone in range(data.n_zones):
        candidates = zone_feature_ids(data.n_zones, zone)
        try:
            if config.feature_selection:
                features = feature_select(data, zone, candidates,
                                          config.rom_n_a, config.rom_n_b,
                                          reference.c_p)
            else:
                features = candidates
            zone_model = fit_arx(data, zone, config.rom_n_a, config.rom_n_b,
                                 features, reference.c_p)
        except ValueError as e:
            msg = 'Fitting zone {} failed: {}'
            raise ValueError(msg.format(zone + 1, e))
        zones.append(zone_model)
        rows.append([zone + 1, zone_model.n_a, zone_model.n_b,
                     ' '.join(features), zone_model.rmse])
        logger.info('Zone %d: %s, rmse %.3g', zone + 1, ', '.join(features),
                    zone_model.rmse)

    model = BuildingModel(zones, power_a=reference.power_a,
                          power_b=reference.power_b,
                          power_c=reference.power_c, c_p=reference.c_p,
                          t_da_bounds=reference.t_da_bounds,
                          mdot_bounds=reference.mdot_bounds,
                          dt=reference.dt, c_p_units=reference.c_p_units)
    echo_config(config, config.path(layout.ROM_DIR))
    model.save(config.path(layout.MODEL_FILE))
    write_csv(config.path(layout.FIT_REPORT),
              ['zone', 'n_a', 'n_b', 'features', 'rmse'], rows)
    return model


def _write_curve(config, stage, header, curve):
    write_csv(config.path(layout.curve_path(stage)), header,
              [list(row) for row in curve])


class _Trainer(object):
    """Shared state of the training stages of one ``train`` command."""

    def __init__(self, config):
        self.config = config
        self.model = load_model(config)
        self.env_factory = EnvFactory(self.model, config.scenario,
                                      load_days(config, layout.TRAIN_DATA))
        self.n_inputs = config.scenario.state_dimension(self.model.n_zones)
        self.n_actions = self.model.n_zones + 1
        self.es_spec = config.es_spec(self.n_inputs, self.n_actions)
        # ES and PPO curves are evaluated on the same episodes
        self.eval_seed = derive_seed(config.seed, 'train-eval')

    def es_config(self, name, **changes):
        return self.config.es.replace(seed=derive_seed(self.config.seed, name),
                                      worker_count=self.config.workers,
                                      **changes)

    def ppo_config(self, name, **changes):
        return self.config.ppo.replace(
            seed=derive_seed(self.config.seed, name),
            worker_count=self.config.workers, **changes)

    def save_es(self, stage, theta, **header):
        save_checkpoint(self.config.path(layout.checkpoint_path(stage)),
                        {'policy': unflatten(theta, self.es_spec)},
                        kind='es', **header)

    def save_ppo(self, stage, policy, value_net, **header):
        save_checkpoint(self.config.path(layout.checkpoint_path(stage)),
                        {'policy': policy.net, 'value': value_net},
                        kind='gaussian', sigma_floor=policy.sigma_floor,
                        **header)

    def load_es(self):
        path = self.config.path(layout.checkpoint_path('es'))
        if not os.path.exists(path):
            raise MissingArtifactError(path,
                                       'Run gridhvac train --stage es first.')
        networks, _ = load_checkpoint(path)
        net = networks['policy']
        if net.spec != self.es_spec:
            msg = 'The ES checkpoint {} holds layers {}, expected {}.'
            raise ValueError(msg.format(path, net.spec.layer_sizes,
                                        self.es_spec.layer_sizes))
        return net

    def run_es(self, stage, theta, config):
        def checkpoint(iteration, params):
            self.save_es(stage, params, iteration=iteration)
        try:
            result = train_es(theta, config, self.es_spec, self.env_factory,
                              eval_seed=self.eval_seed,
                              checkpoint=checkpoint)
        except TrainingDivergedError as e:
            _write_curve(self.config, stage, ES_CURVE_HEADER, e.curve)
            raise
        _write_curve(self.config, stage, ES_CURVE_HEADER, result.curve)
        self.save_es(stage, result.params, iteration=config.iterations,
                     initial_eval_cost=result.initial_eval_cost,
                     final_eval_cost=result.final_eval_cost)
        logger.info('%s: evaluation cost %.4f -> %.4f', stage,
                    result.initial_eval_cost, result.final_eval_cost)
        return result

    def run_ppo(self, stage, policy, value_net, config):
        def checkpoint(iteration, policy, value_net):
            self.save_ppo(stage, policy, value_net, iteration=iteration)
        try:
            result = train_ppo(policy, value_net, config, self.env_factory,
                               eval_seed=self.eval_seed,
                               checkpoint=checkpoint)
        except TrainingDivergedError as e:
            _write_curve(self.config, stage, PPO_CURVE_HEADER, e.curve)
            raise
        _write_curve(self.config, stage, PPO_CURVE_HEADER, result.curve)
        self.save_ppo(stage, result.policy, result.value_net,
                      iteration=config.iterations,
                      initial_eval_cost=result.initial_eval_cost,
                      final_eval_cost=result.final_eval_cost)
        logger.info('%s: evaluation cost %.4f -> %.4f', stage,
                    result.initial_eval_cost, result.final_eval_cost)
        return result

    def es(self):
        net = init_mlp(self.es_spec, seed=derive_seed(self.config.seed,
                                                      'es-init'))
        return self.run_es('es', flatten(net), self.es_config('es'))

    def ppo(self):
        config = self.config
        policy, value_net = transfer_warm_start(
            self.load_es(), config.policy_spec(self.n_inputs, self.n_actions),
            config.value_spec(self.n_inputs), config.sigma_init,
            config.sigma_floor, seed=derive_seed(config.seed, 'value-head'))
        return self.run_ppo('ppo', policy, value_net, self.ppo_config('ppo'))

    def es_finetune(self):
        """Continues ES from the ES checkpoint once per fine tuning learning
        rate. The runs share their seed so only the rate differs."""
        theta = flatten(self.load_es())
        results = []
        for rate in self.config.finetune_learning_rates:
            config = self.es_config('es-finetune', learning_rate=rate)
            results.append(self.run_es(layout.finetune_stage(rate),
                                       theta.copy(), config))
        return results

    def ppo_scratch(self):
        config = self.config
        seed = derive_seed(config.seed, 'ppo-scratch-init')
        policy = init_gaussian_policy(
            config.policy_spec(self.n_inputs, self.n_actions), seed,
            config.sigma_init, config.sigma_floor)
        value_net = init_mlp(config.value_spec(self.n_inputs),
                             rng=seed_substream(seed, 'value'))
        return self.run_ppo('ppo-scratch', policy, value_net,
                            self.ppo_config('ppo-scratch',
                                            learning_rate=config.
                                            scratch_learning_rate))


def cmd_train(config, stage):
    """Runs a training stage: 'es', 'ppo' (warm started from the ES
    checkpoint), 'both', 'es-finetune' or 'ppo-scratch'."""
    if stage not in STAGES:
        msg = 'Unknown stage {!r}, expected one of {}.'
        raise ValueError(msg.format(stage, ', '.join(STAGES)))
    trainer = _Trainer(config)
    echo_config(config, config.path(layout.TRAIN_DIR))
    if stage in ('es', 'both'):
        trainer.es()
    if stage in ('ppo', 'both'):
        trainer.ppo()
    if stage == 'es-finetune':
        trainer.es_finetune()
    if stage == 'ppo-scratch':
        trainer.ppo_scratch()


def cmd_evaluate(config, controllers=None):
    """Evaluates controllers on the test days and writes the report."""
    model = load_model(config)
    days = load_days(config, layout.TEST_DATA)
    if max(config.evaluated_days) >= len(days):
        msg = 'Day {} is not among the {} test days.'
        raise ValueError(msg.format(max(config.evaluated_days), len(days)))
    out_dir = config.path(layout.EVAL_DIR)
    echo_config(config, out_dir)
    return run_evaluation(config, model, days, out_dir, controllers)


def cmd_report(config, day=0, controller=None, runs=()):
    """Writes the SVG figures of whatever artifacts exist: learning curves
    (with a band over ``runs``, other output directories of the same
    experiment), the DR and non-DR traces of one day and controller and the
    cost bars. Returns the written paths."""
    out_dir = config.path(layout.REPORT_DIR)
    directories = [config.out_dir] + list(runs)
    curves = {}
    stages = [('es', 'es'), ('ppo', 'ppo')]
    stages += [(layout.finetune_stage(rate),
                'es-finetune lr={:g}'.format(rate))
               for rate in config.finetune_learning_rates]
    stages.append(('ppo-scratch', 'ppo-scratch'))
    for stage, label in stages:
        paths = [os.path.join(d, layout.curve_path(stage))
                 for d in directories]
        paths = [p for p in paths if os.path.exists(p)]
        if paths:
            curves[label] = paths

    eval_dir = config.path(layout.EVAL_DIR)
    name = controller or config.controllers[0]
    traces = [trace_path(eval_dir, name, day, s) for s in (DR, NON_DR)]
    summary = os.path.join(eval_dir, 'summary.csv')
    if not curves and not os.path.exists(summary) and \
            not all(os.path.exists(p) for p in traces):
        msg = 'There are no curves, traces or summaries below {}.'
        raise ValueError(msg.format(config.out_dir))

    written = []
    echo_config(config, out_dir)
    if curves:
        written.append(plot_learning_curves(
            curves, os.path.join(out_dir, 'learning_curves.svg')))
    if all(os.path.exists(p) for p in traces):
        figure = 'traces_{}_day{:02d}.svg'.format(controller_label(name), day)
        written.append(plot_day_traces(traces[0], traces[1],
                                       os.path.join(out_dir, figure),
                                       config.scenario.dt))
    if os.path.exists(summary):
        written.append(plot_cost_bars(read_summary(summary),
                                      os.path.join(out_dir, 'costs.svg')))
    return written


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='experiment configuration JSON file')
    common.add_argument('--seed', type=int, help='root seed')
    common.add_argument('--out', help='output directory')
    common.add_argument('--workers', type=int, help='worker processes')
    common.add_argument('--verbose', action='store_true',
                        help='log at DEBUG level')

    parser = _ArgumentParser(
        prog='gridhvac',
        description='Grid-interactive multi-zone HVAC control experiments.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True

    subparsers.add_parser('gen-data', parents=[common],
                          help='generate training and test datasets')
    subparsers.add_parser('fit-rom', parents=[common],
                          help='fit the reduced order building model')
    train = subparsers.add_parser('train', parents=[common],
                                  help='train a policy')
    train.add_argument('--stage', choices=STAGES, default='both')
    evaluate = subparsers.add_parser('evaluate', parents=[common],
                                     help='evaluate controllers')
    evaluate.add_argument('--controller', action='append', dest='controllers',
                          help="'rl:<checkpoint>', 'mpc-lin', 'mpc-rom' or "
                               "'rule-based'; repeat for several")
    evaluate.add_argument('--days', type=int, nargs='+',
                          help='test day indices, all by default')
    report = subparsers.add_parser('report', parents=[common],
                                   help='plot curves, traces and costs')
    report.add_argument('--day', type=int, default=0,
                        help='test day of the trace figure')
    report.add_argument('--controller', help='controller of the trace figure')
    report.add_argument('--runs', nargs='*', default=(),
                        help='output directories of other seeds')
    return parser


def resolve_config(args):
    """Returns the ExperimentConfig of a command: the --config file or the
    defaults, then the command line overrides."""
    if args.config is not None:
        if not os.path.exists(args.config):
            raise MissingArtifactError(args.config)
        config = ExperimentConfig.load(args.config)
    else:
        config = ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes['seed'] = args.seed
    if args.out is not None:
        changes['out_dir'] = args.out
    if args.workers is not None:
        changes['workers'] = args.workers
    if getattr(args, 'days', None):
        changes['eval_days'] = args.days
    if getattr(args, 'controllers', None):
        changes['controllers'] = args.controllers
    return config.replace(**changes) if changes else config


def run(args):
    config = resolve_config(args)
    if args.command == 'gen-data':
        cmd_gen_data(config)
    elif args.command == 'fit-rom':
        cmd_fit_rom(config)
    elif args.command == 'train':
        cmd_train(config, args.stage)
    elif args.command == 'evaluate':
        cmd_evaluate(config)
    elif args.command == 'report':
        cmd_report(config, args.day, args.controller, args.runs)


def main(argv=None):
    """Runs the command line and returns the exit code: 0 on success, 1 on
    usage and configuration errors and 2 on training and solver
    failures."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write('gridhvac: error: {}\n'.format(e))
        return 1
    except SystemExit as e:
        return e.code or 0

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format=LOG_FORMAT)
    try:
        run(args)
    except (TrainingDivergedError, WorkerFailureError,
            FloatingPointError) as e:
        logger.error('%s: %s', type(e).__name__, e)
        return 2
    except (ValueError, TypeError, MissingArtifactError) as e:
        logger.error('%s: %s', type(e).__name__, e)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
