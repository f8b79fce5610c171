#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""SVG figures of learning curves, DR day traces and evaluation costs."""

import logging
import os

# external libraries
import numpy as np
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

# local
from .utils import MalformedFileError, parse_float, read_csv, \
    read_numeric_csv

logger = logging.getLogger(__name__)

FIGURE_SIZE = (8.0, 4.5)


def _save(fig, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    # no date and salted element ids keep reruns byte identical
    with plt.rc_context({'svg.hashsalt': 'gridhvac'}):
        fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    logger.info('Wrote %s', path)
    return path


def _curve_values(path, columns):
    curve = read_numeric_csv(path, ('iteration',))
    for column in columns:
        if column in curve:
            curve['values'] = curve[column]
            return curve
    msg = 'missing column, expected one of {}'
    raise MalformedFileError(path, 1, msg.format(', '.join(columns)))


def plot_learning_curves(curves, path,
                         columns=('eval_cost', 'eval_cost_deterministic'),
                         ylabel='evaluation cost'):
    """Plots one line per stage with a min to max band over the seeds.

    Parameters
    ==========
    curves : dict
        Maps a stage label to a list of learning curve CSV paths, one per
        seed.
    path : string
        The SVG file to write.
    columns : sequence of string
        Candidate columns for the vertical axis; the first one present in
        a curve file is used.

    Raises
    ======
    ValueError
        If no curve is given; nothing is written.

    """
    loaded = {}
    for label, paths in curves.items():
        runs = [_curve_values(p, columns) for p in paths]
        if runs:
            loaded[label] = runs
    if not loaded:
        raise ValueError('There are no learning curves to plot.')

    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    first, last = np.inf, -np.inf
    for label, runs in loaded.items():
        length = min(len(r['iteration']) for r in runs)
        iterations = runs[0]['iteration'][:length]
        values = np.vstack([r['values'][:length] for r in runs])
        line, = ax.plot(iterations, values.mean(axis=0), label=label)
        if len(runs) > 1:
            ax.fill_between(iterations, values.min(axis=0),
                            values.max(axis=0), color=line.get_color(),
                            alpha=0.25, linewidth=0)
        first = min(first, iterations[0])
        last = max(last, iterations[-1])
    if last > first:
        ax.set_xlim(first, last)
    ax.set_xlabel('iteration')
    ax.set_ylabel(ylabel)
    ax.legend(loc='best')
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _zone_columns(columns, prefix):
    return sorted((k for k in columns if k.startswith(prefix)),
                  key=lambda k: int(k.split('_')[-1]))


def plot_day_traces(dr_trace, non_dr_trace, path, dt=1.0 / 12.0):
    """Plots a DR day next to the same day without the event: zone
    temperatures with the comfort band, zone flows, the discharge air
    temperature and the power against the stepped limit.

    Parameters
    ==========
    dr_trace, non_dr_trace : string
        Trace CSV paths written by the evaluation.
    path : string
    dt : float
        Control interval in hours.

    """
    required = ('step', 't_da', 'power_kw', 'p_limit', 'band_lower',
                'band_upper')
    traces = [read_numeric_csv(p, required) for p in (dr_trace, non_dr_trace)]

    fig, axes = plt.subplots(4, 2, sharex=True, sharey='row',
                             figsize=(11.0, 9.0))
    for col, (trace, title) in enumerate(zip(traces, ('DR', 'non-DR'))):
        hours = trace['step'] * dt
        ax = axes[0, col]
        ax.fill_between(hours, trace['band_lower'], trace['band_upper'],
                        step='post', color='0.85', label='comfort band')
        for name in _zone_columns(trace, 't_zone_'):
            ax.plot(hours, trace[name], linewidth=1.0,
                    label='zone ' + name.split('_')[-1])
        ax.set_title(title)
        ax = axes[1, col]
        for name in _zone_columns(trace, 'mdot_'):
            ax.plot(hours, trace[name], linewidth=1.0)
        axes[2, col].plot(hours, trace['t_da'], color='C3')
        ax = axes[3, col]
        ax.plot(hours, trace['power_kw'], color='k', linewidth=1.0,
                label='power')
        ax.step(hours, trace['p_limit'], where='post', color='C3',
                linestyle='--', label='limit')
        ax.set_xlabel('hour of day')
        ax.set_xlim(hours[0], hours[-1])
    axes[0, 0].set_ylabel('zone temperature [C]')
    axes[1, 0].set_ylabel('mass flow [kg/s]')
    axes[2, 0].set_ylabel('discharge air [C]')
    axes[3, 0].set_ylabel('power [kW]')
    axes[0, 1].legend(loc='best', fontsize='small')
    axes[3, 1].legend(loc='best', fontsize='small')
    fig.tight_layout()
    return _save(fig, path)


def read_summary(path):
    """Returns the rows of an evaluation summary.csv as dictionaries with
    float metric values."""
    header, rows = read_csv(path, ('controller', 'scenario', 'cost'))
    summary = []
    for line, row in enumerate(rows, start=2):
        entry = dict(zip(header, row))
        for key in header:
            if key not in ('controller', 'scenario'):
                entry[key] = parse_float(path, line, entry[key])
        summary.append(entry)
    if not summary:
        raise MalformedFileError(path, 2, 'the file has no data rows')
    return summary


def plot_cost_bars(summary, path, metric='cost'):
    """Plots grouped bars of a summary metric per controller, DR and non-DR
    days side by side.

    Parameters
    ==========
    summary : list of dict
        See ``read_summary``.
    path : string
    metric : string

    """
    if not summary:
        raise ValueError('There is no evaluation summary to plot.')
    controllers = []
    for entry in summary:
        if entry['controller'] not in controllers:
            controllers.append(entry['controller'])
    scenarios = sorted({entry['scenario'] for entry in summary})
    width = 0.8 / len(scenarios)
    x = np.arange(len(controllers))

    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    for j, scenario in enumerate(scenarios):
        values = [next((e[metric] for e in summary
                        if e['controller'] == c and e['scenario'] == scenario),
                       np.nan) for c in controllers]
        ax.bar(x + (j - 0.5 * (len(scenarios) - 1)) * width, values, width,
               label=scenario)
    ax.set_xticks(x)
    ax.set_xticklabels(controllers, rotation=20, ha='right')
    ax.set_ylabel('mean daily ' + metric.replace('_', ' '))
    ax.legend(loc='best')
    fig.tight_layout()
    return _save(fig, path)
