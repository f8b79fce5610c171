#!/usr/bin/env python

"""
Runs the two stage pipeline at desk scale for several seeds: data, model
fit, ES (population 32, 150 iterations) then PPO (50 iterations) and the
evaluation of the ES, PPO, MPC and rule based controllers on 10 test days.

The script prints and writes ``findings.txt`` with the learning trends, the
controller ordering and the DR behavior, and plots the learning curves of
every seed. It asserts nothing.

"""

# standard library
import logging
import os
import time

# external libraries
import numpy as np
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

# local
from gridhvac.cli import (LOG_FORMAT, cmd_evaluate, cmd_fit_rom,
                          cmd_gen_data, cmd_train)
from gridhvac.config import ExperimentConfig, checkpoint_path, curve_path
from gridhvac.evaluation import DR
from gridhvac.nn import load_checkpoint
from gridhvac.utils import read_numeric_csv

ES = 'rl:' + checkpoint_path('es')
PPO = 'rl:' + checkpoint_path('ppo')
CONTROLLERS = (PPO, ES, 'mpc-lin', 'rule-based')


def reduced_config(seed, out_dir, workers):
    config = ExperimentConfig(seed=seed, out_dir=out_dir, workers=workers,
                              test_days=10, controllers=CONTROLLERS)
    return config.replace(
        es=config.es.replace(population_size=32, iterations=150),
        ppo=config.ppo.replace(iterations=50))


def run_seed(config):
    """Returns the ES and PPO checkpoint headers and the evaluation report
    of one seed."""
    start = time.time()
    cmd_gen_data(config)
    cmd_fit_rom(config)
    cmd_train(config, 'both')
    report = cmd_evaluate(config)
    headers = {}
    for stage in ('es', 'ppo'):
        _, headers[stage] = load_checkpoint(config.path(checkpoint_path(
            stage)))
    print('Seed {} took {:1.1f} seconds.'.format(config.seed,
                                                 time.time() - start))
    return headers, report


def findings(results):
    """Returns the lines of the findings over all seeds."""
    lines = []

    title = 'Learning trend'
    lines += [title, '=' * len(title)]
    es_ratio = []
    ppo_lower = 0
    for seed, (headers, _) in sorted(results.items()):
        es, ppo = headers['es'], headers['ppo']
        ratio = es['final_eval_cost'] / es['initial_eval_cost']
        es_ratio.append(ratio)
        lower = ppo['final_eval_cost'] < es['final_eval_cost']
        ppo_lower += lower
        lines.append('seed {}: ES {:1.4f} -> {:1.4f} ({:1.1%}), PPO '
                     '{:1.4f}{}'.format(seed, es['initial_eval_cost'],
                                        es['final_eval_cost'], ratio,
                                        ppo['final_eval_cost'],
                                        ' (lower)' if lower else ''))
    es_final = np.mean([h['es']['final_eval_cost']
                        for h, _ in results.values()])
    ppo_final = np.mean([h['ppo']['final_eval_cost']
                         for h, _ in results.values()])
    lines.append('mean ES final / initial: {:1.1%} (target <= 70%)'.format(
        np.mean(es_ratio)))
    lines.append('mean PPO final {:1.4f}, ES final {:1.4f} (target PPO <= '
                 'ES + 1%), PPO lower on {} of {} seeds'.format(
                     ppo_final, es_final, ppo_lower, len(results)))
    lines.append('')

    title = 'Controller ordering'
    lines += [title, '=' * len(title)]
    costs = {name: [] for name in CONTROLLERS}
    for _, report in results.values():
        for name in CONTROLLERS:
            costs[name] += [r['cost'] for r in report.rows
                            if r['controller'] == name]
    means = {name: np.mean(values) for name, values in costs.items()}
    for name in CONTROLLERS:
        lines.append('{}: mean cost {:1.4f}'.format(name, means[name]))
    for name in (PPO, ES):
        lines.append('{} vs rule-based: {:1.1%} lower (target >= 20%)'.format(
            name, 1.0 - means[name] / means['rule-based']))
    lines.append('')

    title = 'DR behavior'
    lines += [title, '=' * len(title)]
    for seed, (_, report) in sorted(results.items()):
        rows = [r for r in report.rows
                if r['controller'] == PPO and r['scenario'] == DR]
        over = max(r['dr_steps_over_1kw'] for r in rows)
        precooled = sum(bool(r['precooling']) for r in rows)
        lines.append('seed {}: at most {} steps over the limit by 1 kW '
                     '(target <= 2), pre-cooling on {} of {} days'.format(
                         seed, int(over), precooled, len(rows)))
    return lines


def plot_curves(configs, path):
    fig, ax = plt.subplots(1, 2, sharey=True)

    for config in configs:
        es = read_numeric_csv(config.path(curve_path('es')),
                              ['iteration', 'eval_cost'])
        ppo = read_numeric_csv(config.path(curve_path('ppo')),
                               ['iteration', 'eval_cost_deterministic'])
        ax[0].plot(es['iteration'], es['eval_cost'])
        ax[1].plot(ppo['iteration'], ppo['eval_cost_deterministic'])

    ax[0].set_title('ES')
    ax[0].set_ylabel('Evaluation cost')
    ax[1].set_title('PPO fine tuning')
    ax[1].legend(['seed {}'.format(c.seed) for c in configs], loc=1)

    for a in ax.flatten():
        a.set_xlabel('Iteration')

    plt.tight_layout()

    fig.savefig(path)


def run_acceptance(num_seeds, out_dir, workers):

    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)

    configs = [reduced_config(seed, os.path.join(out_dir,
                                                 'seed{}'.format(seed)),
                              workers)
               for seed in range(num_seeds)]

    results = {}
    for config in configs:
        title = 'Seed {}'.format(config.seed)
        print(title)
        print('=' * len(title))
        results[config.seed] = run_seed(config)
        print()

    lines = findings(results)
    print('\n'.join(lines))
    with open(os.path.join(out_dir, 'findings.txt'), 'w') as f:
        f.write('\n'.join(lines) + '\n')

    plot_curves(configs, os.path.join(out_dir, 'learning-curves.png'))

if __name__ == "__main__":

    import argparse

    parser = argparse.ArgumentParser(
        description='Run the desk scale two stage training acceptance run.')

    parser.add_argument('out_dir',
        help="The directory for the runs and the findings.")

    parser.add_argument('--seeds', type=int, default=3,
        help="The number of seeds to train.")

    parser.add_argument('--workers', type=int, default=8,
        help="Worker processes.")

    args = parser.parse_args()

    run_acceptance(args.seeds, args.out_dir, args.workers)
