#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The episodic building control problem: state featurization, the
multi-objective reward, comfort schedule, demand response events and the
reset/step engine."""

import math
from collections import OrderedDict, deque

# external libraries
import numpy as np

# local
from .rom import (HvacCommand, hvac_power, interval_energy,
                  step_temperature)
from .utils import (Configuration, EpisodeDoneError, check_float, check_int,
                    check_interval, derive_seed, seed_substream,
                    write_csv)

SAMPLE = 'sample'

# DR event duration and power limit for a uniform draw chi in [0, 1]
DR_BASE_MINUTES = 120.0
DR_BASE_LIMIT = 30.0
DR_LIMIT_SPAN = 20.0


def _check_weights(name, value):
    value = tuple(check_float(name, v, lower=0.0) for v in value)
    if len(value) != 3:
        msg = '{} must have 3 entries, not {}.'
        raise ValueError(msg.format(name, len(value)))
    if abs(sum(value) - 1.0) > 1e-9:
        msg = '{} must sum to 1, not {}.'
        raise ValueError(msg.format(name, sum(value)))
    return value


class ScenarioConfig(Configuration):
    """Settings of an episode: horizon, cost weights, the power limit, the
    demand response lottery, the comfort schedule and the state
    normalization.

    Parameters
    ==========
    horizon : integer
        Control steps per episode.
    dt : float
        Control interval in hours; ``horizon * dt`` must be 24.
    k_history : integer
        Steps of outdoor temperature history in the state.
    k_forecast : integer
        Steps of power limit lookahead in the state.
    weights_normal, weights_dr : 3-tuple of float
        Weights of (discomfort, energy, violation) outside and during a
        demand response event.
    kappa : 3-tuple of float
        Monetizing factors of the three costs.
    p_limit_normal : float
        Power limit in kW outside demand response events.
    dr_probability : float
        Chance an episode has a demand response event.
    dr_window : pair of float
        Hours of the day within which an event starts.
    occupied_band, unoccupied_band : pair of float
        Comfort bands in degrees Celsius.
    occupied_hours : pair of float
        Weekday hours using the occupied band.
    initial_temp : float
        Zone temperature at reset.
    discount : float
        Discount factor of the training return.
    temp_offset, temp_scale, power_scale : float
        State normalization: temperatures map to (x - offset) / scale and
        power limits to x / power_scale.
    eval_dr_chi : float
        Chi of the fixed event used by evaluation days.
    eval_dr_start : float
        Start hour of the fixed event used by evaluation days.

    """

    _fields = ('horizon', 'dt', 'k_history', 'k_forecast', 'weights_normal',
               'weights_dr', 'kappa', 'p_limit_normal', 'dr_probability',
               'dr_window', 'occupied_band', 'unoccupied_band',
               'occupied_hours', 'initial_temp', 'discount', 'temp_offset',
               'temp_scale', 'power_scale', 'eval_dr_chi', 'eval_dr_start')

    def __init__(self, horizon=288, dt=1.0 / 12.0, k_history=48,
                 k_forecast=48, weights_normal=(0.7, 0.2, 0.1),
                 weights_dr=(0.5, 0.0, 0.5), kappa=(1.0, 1.0, 1.0),
                 p_limit_normal=80.0, dr_probability=0.5,
                 dr_window=(11.0, 18.0), occupied_band=(23.0, 25.0),
                 unoccupied_band=(22.0, 28.0), occupied_hours=(7.0, 19.0),
                 initial_temp=24.0, discount=0.99, temp_offset=23.0,
                 temp_scale=10.0, power_scale=80.0, eval_dr_chi=0.3,
                 eval_dr_start=14.0):
        self.horizon = horizon
        self.dt = dt
        self.k_history = k_history
        self.k_forecast = k_forecast
        self.weights_normal = weights_normal
        self.weights_dr = weights_dr
        self.kappa = kappa
        self.p_limit_normal = p_limit_normal
        self.dr_probability = dr_probability
        self.dr_window = dr_window
        self.occupied_band = occupied_band
        self.unoccupied_band = unoccupied_band
        self.occupied_hours = occupied_hours
        self.initial_temp = initial_temp
        self.discount = discount
        self.temp_offset = temp_offset
        self.temp_scale = temp_scale
        self.power_scale = power_scale
        self.eval_dr_chi = eval_dr_chi
        self.eval_dr_start = eval_dr_start
        self._check_day()

    def _check_day(self):
        if abs(self.horizon * self.dt - 24.0) > 1e-9:
            msg = 'horizon * dt must be 24 hours, not {}.'
            raise ValueError(msg.format(self.horizon * self.dt))
        for name in ('dr_window', 'occupied_hours'):
            lower, upper = getattr(self, name)
            if lower < 0.0 or upper > 24.0:
                msg = '{} must lie within the day, not {}.'
                raise ValueError(msg.format(name, (lower, upper)))
        latest_end = self.dr_window[1] + 2.0 * DR_BASE_MINUTES / 60.0
        if latest_end > 24.0:
            msg = 'Events starting at {} h can run past the end of the day.'
            raise ValueError(msg.format(self.dr_window[1]))

    @property
    def horizon(self):
        return self._horizon

    @horizon.setter
    def horizon(self, value):
        self._horizon = check_int('horizon', value, lower=1)

    @property
    def dt(self):
        return self._dt

    @dt.setter
    def dt(self, value):
        self._dt = check_float('dt', value, lower=0.0, strict_lower=True)

    @property
    def k_history(self):
        return self._k_history

    @k_history.setter
    def k_history(self, value):
        self._k_history = check_int('k_history', value, lower=1)

    @property
    def k_forecast(self):
        return self._k_forecast

    @k_forecast.setter
    def k_forecast(self, value):
        self._k_forecast = check_int('k_forecast', value, lower=1)

    @property
    def weights_normal(self):
        return self._weights_normal

    @weights_normal.setter
    def weights_normal(self, value):
        self._weights_normal = _check_weights('weights_normal', value)

    @property
    def weights_dr(self):
        return self._weights_dr

    @weights_dr.setter
    def weights_dr(self, value):
        self._weights_dr = _check_weights('weights_dr', value)

    @property
    def kappa(self):
        return self._kappa

    @kappa.setter
    def kappa(self, value):
        value = tuple(check_float('kappa', v, lower=0.0) for v in value)
        if len(value) != 3:
            msg = 'kappa must have 3 entries, not {}.'
            raise ValueError(msg.format(len(value)))
        self._kappa = value

    @property
    def p_limit_normal(self):
        return self._p_limit_normal

    @p_limit_normal.setter
    def p_limit_normal(self, value):
        self._p_limit_normal = check_float('p_limit_normal', value,
                                           lower=0.0, strict_lower=True)

    @property
    def dr_probability(self):
        return self._dr_probability

    @dr_probability.setter
    def dr_probability(self, value):
        self._dr_probability = check_float('dr_probability', value,
                                           lower=0.0, upper=1.0)

    @property
    def dr_window(self):
        return self._dr_window

    @dr_window.setter
    def dr_window(self, value):
        self._dr_window = check_interval('dr_window', value)

    @property
    def occupied_band(self):
        return self._occupied_band

    @occupied_band.setter
    def occupied_band(self, value):
        self._occupied_band = check_interval('occupied_band', value)

    @property
    def unoccupied_band(self):
        return self._unoccupied_band

    @unoccupied_band.setter
    def unoccupied_band(self, value):
        self._unoccupied_band = check_interval('unoccupied_band', value)

    @property
    def occupied_hours(self):
        return self._occupied_hours

    @occupied_hours.setter
    def occupied_hours(self, value):
        self._occupied_hours = check_interval('occupied_hours', value)

    @property
    def initial_temp(self):
        return self._initial_temp

    @initial_temp.setter
    def initial_temp(self, value):
        self._initial_temp = check_float('initial_temp', value)

    @property
    def discount(self):
        return self._discount

    @discount.setter
    def discount(self, value):
        self._discount = check_float('discount', value, lower=0.0,
                                     upper=1.0, strict_lower=True)

    @property
    def temp_offset(self):
        return self._temp_offset

    @temp_offset.setter
    def temp_offset(self, value):
        self._temp_offset = check_float('temp_offset', value)

    @property
    def temp_scale(self):
        return self._temp_scale

    @temp_scale.setter
    def temp_scale(self, value):
        self._temp_scale = check_float('temp_scale', value, lower=0.0,
                                       strict_lower=True)

    @property
    def power_scale(self):
        return self._power_scale

    @power_scale.setter
    def power_scale(self, value):
        self._power_scale = check_float('power_scale', value, lower=0.0,
                                        strict_lower=True)

    @property
    def eval_dr_chi(self):
        return self._eval_dr_chi

    @eval_dr_chi.setter
    def eval_dr_chi(self, value):
        self._eval_dr_chi = check_float('eval_dr_chi', value, lower=0.0,
                                        upper=1.0)

    @property
    def eval_dr_start(self):
        return self._eval_dr_start

    @eval_dr_start.setter
    def eval_dr_start(self, value):
        self._eval_dr_start = check_float('eval_dr_start', value, lower=0.0,
                                          upper=24.0)

    @property
    def minutes_per_step(self):
        return 60.0 * self.dt

    def state_dimension(self, n_zones):
        return n_zones + self.k_history + 3 + self.k_forecast + 1 + 3


def state_layout(n_zones, config):
    """Returns an ordered mapping of state segment names to slices."""
    sizes = [('zone_temps', n_zones), ('t_out_history', config.k_history),
             ('calendar', 3), ('p_limit_forecast', config.k_forecast),
             ('step_frac', 1), ('weights', 3)]
    layout = OrderedDict()
    start = 0
    for name, size in sizes:
        layout[name] = slice(start, start + size)
        start += size
    return layout


def state_segment(state, name, n_zones, config):
    """Returns one named segment of a state vector."""
    return state[state_layout(n_zones, config)[name]]


class DrEvent(object):
    """A demand response event. For a uniform draw ``chi`` the event lasts
    ``120 (1 + chi)`` minutes under a limit of ``30 + 20 chi`` kW. The
    event covers every control step whose interval overlaps it.

    Parameters
    ==========
    start_step : integer
    chi : float
        In [0, 1].
    minutes_per_step : float

    """

    def __init__(self, start_step, chi, minutes_per_step=5.0):
        self.start_step = check_int('start_step', start_step, lower=0)
        self.chi = check_float('chi', chi, lower=0.0, upper=1.0)
        self.minutes_per_step = check_float('minutes_per_step',
                                            minutes_per_step, lower=0.0,
                                            strict_lower=True)

    @property
    def duration_minutes(self):
        return DR_BASE_MINUTES * (self.chi + 1.0)

    @property
    def power_limit(self):
        return DR_BASE_LIMIT + DR_LIMIT_SPAN * self.chi

    @property
    def duration_steps(self):
        return int(math.ceil(self.duration_minutes / self.minutes_per_step -
                             1e-9))

    @property
    def end_step(self):
        """First step after the event."""
        return self.start_step + self.duration_steps

    def contains(self, step):
        return self.start_step <= step < self.end_step

    def to_dict(self):
        return {'start_step': self.start_step, 'chi': self.chi,
                'duration_steps': self.duration_steps,
                'duration_minutes': self.duration_minutes,
                'power_limit': self.power_limit}

    def __eq__(self, other):
        return (isinstance(other, DrEvent) and
                self.start_step == other.start_step and
                self.chi == other.chi and
                self.minutes_per_step == other.minutes_per_step)

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'DrEvent(start_step={}, chi={}, power_limit={})'.format(
            self.start_step, self.chi, self.power_limit)


def evaluation_dr_event(config):
    """Returns the fixed event of the evaluation days, by default chi = 0.3
    at 14:00 (36 kW for 156 minutes)."""
    start = int(round(config.eval_dr_start / config.dt))
    return DrEvent(start, config.eval_dr_chi, config.minutes_per_step)


def discomfort(t_zone, band):
    """Returns the discomfort of a zone temperature: zero inside the band,
    ``max(d, d**2)`` for an excursion ``d`` outside it."""
    lower, upper = band
    excursion = max(t_zone - upper, lower - t_zone, 0.0)
    return max(excursion, excursion ** 2)


def violation_penalty(power, p_limit):
    """Returns ``(power - p_limit)**2`` when the limit is reached and zero
    otherwise."""
    if power >= p_limit:
        return (power - p_limit) ** 2
    return 0.0


def reward(weights, kappa, discomfort_sum, energy, violation):
    """Returns the negated weighted monetized cost of one step."""
    costs = (discomfort_sum, energy, violation)
    return -float(sum(w * k * c for w, k, c in zip(weights, kappa, costs)))


def sample_dr_event(rng, config):
    """Returns a DrEvent with probability ``config.dr_probability`` and None
    otherwise. Chi is uniform on [0, 1) and the start is uniform over the
    control steps starting within ``config.dr_window``. Three draws are
    taken from ``rng`` either way."""
    occurs = rng.random() < config.dr_probability
    chi = rng.random()
    first = int(math.ceil(config.dr_window[0] / config.dt - 1e-9))
    last = int(math.floor(config.dr_window[1] / config.dt + 1e-9))
    start = int(rng.integers(first, last + 1))
    if not occurs:
        return None
    return DrEvent(start, chi, config.minutes_per_step)


def is_occupied(step, is_weekday, config):
    hour = (step % config.horizon) * config.dt
    start, end = config.occupied_hours
    return bool(is_weekday) and start <= hour < end


def comfort_band(step, is_weekday, config):
    """Returns the (lower, upper) comfort band of a step: the occupied band
    during weekday occupied hours and the unoccupied band otherwise."""
    if is_occupied(step, is_weekday, config):
        return config.occupied_band
    return config.unoccupied_band


def calendar_features(step, is_weekday, config):
    """Returns [occupied flag, sin, cos] of the time of day."""
    angle = 2.0 * np.pi * ((step % config.horizon) * config.dt) / 24.0
    return np.array([float(is_occupied(step, is_weekday, config)),
                     np.sin(angle), np.cos(angle)])


def build_state(temps, t_out_history, calendar, p_limit_schedule, step,
                weights, config):
    """Returns the normalized state vector.

    Parameters
    ==========
    temps : array_like, shape(N,)
        Current zone temperatures.
    t_out_history : array_like, shape(k_history,)
        Outdoor temperatures up to the current step, oldest first.
    calendar : array_like, shape(3,)
        See ``calendar_features``.
    p_limit_schedule : array_like
        Power limit of every step of the episode and beyond; entries
        ``step`` to ``step + k_forecast - 1`` are used.
    step : integer
    weights : array_like, shape(3,)
    config : ScenarioConfig

    Returns
    =======
    state : ndarray, shape(N + k_history + 3 + k_forecast + 1 + 3,)
        Segments in the order of ``state_layout``.

    """
    forecast = np.asarray(p_limit_schedule, dtype=float)[
        step:step + config.k_forecast]
    if len(forecast) < config.k_forecast:
        pad = np.full(config.k_forecast - len(forecast),
                      config.p_limit_normal)
        forecast = np.hstack((forecast, pad))
    history = np.asarray(t_out_history, dtype=float)
    if len(history) != config.k_history:
        msg = 'The outdoor history holds {} values, expected {}.'
        raise ValueError(msg.format(len(history), config.k_history))
    temps = np.asarray(temps, dtype=float)
    return np.hstack(((temps - config.temp_offset) / config.temp_scale,
                      (history - config.temp_offset) / config.temp_scale,
                      calendar,
                      forecast / config.power_scale,
                      float(step) / config.horizon,
                      weights))


def denormalize_action(raw, model):
    """Returns the HvacCommand of an unbounded action vector
    (mdot_1..mdot_N, t_da): tanh then an affine map onto the bounds."""
    raw = np.asarray(raw, dtype=float).reshape(-1)
    lower, upper = model.command_lower, model.command_upper
    if raw.shape != lower.shape:
        msg = 'Actions must have {} entries, not {}.'
        raise ValueError(msg.format(len(lower), len(raw)))
    u = lower + 0.5 * (1.0 + np.tanh(raw)) * (upper - lower)
    return HvacCommand.from_vector(np.clip(u, lower, upper))


def metered_power(cmd, t_out, model):
    """Returns the power the episode is charged for: the power model value,
    never below the idle power ``power_c``."""
    return max(hvac_power(cmd, t_out, model), model.power_c)


class StepOutcome(object):
    """The result of one environment step."""

    def __init__(self, next_state, reward, cost_breakdown, power_kw, done,
                 temps, command, p_limit, weights, in_dr):
        self.next_state = next_state
        self.reward = reward
        self.cost_breakdown = cost_breakdown
        self.power_kw = power_kw
        self.done = done
        self.temps = temps
        self.command = command
        self.p_limit = p_limit
        self.weights = weights
        self.in_dr = in_dr


class ForecastWindow(object):
    """Perfect forecasts of the exogenous inputs, power limits, weights and
    comfort bands of the next steps."""

    def __init__(self, exogenous, p_limit, weights, band_lower, band_upper,
                 kappa, dt):
        self.exogenous = np.atleast_2d(np.asarray(exogenous, dtype=float))
        self.p_limit = np.asarray(p_limit, dtype=float)
        self.weights = np.atleast_2d(np.asarray(weights, dtype=float))
        self.band_lower = np.asarray(band_lower, dtype=float)
        self.band_upper = np.asarray(band_upper, dtype=float)
        self.kappa = np.asarray(kappa, dtype=float)
        self.dt = float(dt)
        n = len(self.exogenous)
        for name in ('p_limit', 'weights', 'band_lower', 'band_upper'):
            if len(getattr(self, name)) != n:
                msg = 'Forecast {} has {} steps, expected {}.'
                raise ValueError(msg.format(name, len(getattr(self, name)),
                                            n))

    def __len__(self):
        return len(self.exogenous)

    @property
    def t_out(self):
        return self.exogenous[:, 0]

    def head(self, steps):
        return ForecastWindow(self.exogenous[:steps], self.p_limit[:steps],
                              self.weights[:steps], self.band_lower[:steps],
                              self.band_upper[:steps], self.kappa, self.dt)


class BuildingEnv(object):
    """A one day episode of building control.

    Parameters
    ==========
    model : gridhvac.rom.BuildingModel
    config : ScenarioConfig, optional

    """

    def __init__(self, model, config=None):
        self.model = model
        self.config = config if config is not None else ScenarioConfig()
        self.done = True
        self.t = 0

    @property
    def state_dimension(self):
        return self.config.state_dimension(self.model.n_zones)

    @property
    def action_dimension(self):
        return self.model.n_zones + 1

    def reset(self, exo_day, seed=None, dr_event=SAMPLE,
              initial_temps=None):
        """Starts an episode and returns the initial state.

        Parameters
        ==========
        exo_day : gridhvac.rom.ExogenousSeries
            At least ``horizon`` records starting at midnight.
        seed : integer, optional
            Required when ``dr_event`` is ``SAMPLE``.
        dr_event : DrEvent, None or SAMPLE
            The event of the episode, no event, or an event drawn with
            ``sample_dr_event``.
        initial_temps : array_like, optional
            Defaults to ``config.initial_temp`` in every zone.

        """
        config = self.config
        if len(exo_day) < config.horizon:
            msg = ('The exogenous data holds {} steps, fewer than the '
                   'horizon {}.')
            raise ValueError(msg.format(len(exo_day), config.horizon))
        if exo_day.n_zones != self.model.n_zones:
            msg = 'The exogenous data has {} zones, the model {}.'
            raise ValueError(msg.format(exo_day.n_zones, self.model.n_zones))
        if isinstance(dr_event, str) and dr_event == SAMPLE:
            if seed is None:
                raise ValueError('A seed is required to sample DR events.')
            dr_event = sample_dr_event(seed_substream(seed, 'dr'), config)
        self.exo = exo_day[:config.horizon]
        self.dr_event = dr_event

        length = config.horizon + config.k_forecast
        self.p_limit_schedule = np.full(length, config.p_limit_normal)
        self.in_dr = np.zeros(length, dtype=bool)
        if dr_event is not None:
            if dr_event.end_step > config.horizon:
                msg = 'The event {} does not fit in the episode.'
                raise ValueError(msg.format(dr_event))
            steps = slice(dr_event.start_step, dr_event.end_step)
            self.p_limit_schedule[steps] = dr_event.power_limit
            self.in_dr[steps] = True

        if initial_temps is None:
            initial_temps = np.full(self.model.n_zones, config.initial_temp)
        initial_temps = np.asarray(initial_temps, dtype=float)
        self._temp_history = np.tile(initial_temps,
                                     (self.model.history_depth, 1))
        self._input_history = []
        self._t_out_history = deque([self.exo.t_out[0]] * config.k_history,
                                    maxlen=config.k_history)
        self.t = 0
        self.done = False
        self.episode_return = 0.0
        self.discounted_return = 0.0
        self.trace = []
        return self.state()

    @property
    def temps(self):
        return self._temp_history[-1].copy()

    @property
    def episode_cost(self):
        return -self.episode_return

    def weights_at(self, step):
        if step < len(self.in_dr) and self.in_dr[step]:
            return self.config.weights_dr
        return self.config.weights_normal

    def state(self):
        t = self.t
        record = min(t, self.config.horizon - 1)
        calendar = calendar_features(t, self.exo.is_weekday[record],
                                     self.config)
        return build_state(self.temps, list(self._t_out_history), calendar,
                           self.p_limit_schedule, t, self.weights_at(t),
                           self.config)

    def forecast(self, steps):
        """Returns the ForecastWindow of the next ``steps`` steps. Steps past
        the end of the episode wrap to the start of the same day with normal
        limits and weights."""
        config = self.config
        rows = np.arange(self.t, self.t + steps)
        wrapped = rows % config.horizon
        exo = self.exo.vectors()[wrapped]
        beyond = rows >= config.horizon
        p_limit = np.where(beyond, config.p_limit_normal,
                           self.p_limit_schedule[np.minimum(
                               rows, len(self.p_limit_schedule) - 1)])
        weights = [config.weights_normal if b else self.weights_at(r)
                   for r, b in zip(rows, beyond)]
        bands = [comfort_band(r, self.exo.is_weekday[r], config)
                 for r in wrapped]
        return ForecastWindow(exo, p_limit, weights, [b[0] for b in bands],
                              [b[1] for b in bands], config.kappa, config.dt)

    def step(self, action):
        """Applies an unbounded action vector and returns the StepOutcome."""
        if self.done:
            raise EpisodeDoneError('The episode is over, call reset.')
        return self.step_command(denormalize_action(action, self.model))

    def step_command(self, cmd):
        """Applies an HvacCommand and returns the StepOutcome."""
        if self.done:
            raise EpisodeDoneError('The episode is over, call reset.')
        config, model = self.config, self.model
        t = self.t
        exo = self.exo[t]

        power = metered_power(cmd, exo.t_out, model)
        energy = interval_energy(power, config.dt)
        if not self._input_history:
            self._input_history = [(cmd, exo)] * model.history_depth
        depth = model.history_depth
        next_temps = step_temperature(model, self._temp_history, cmd, exo,
                                      self._input_history[-depth:])
        band = comfort_band(t, exo.is_weekday, config)
        discomfort_sum = sum(discomfort(T, band) for T in next_temps)
        p_limit = self.p_limit_schedule[t]
        violation = violation_penalty(power, p_limit)
        weights = self.weights_at(t)
        r = reward(weights, config.kappa, discomfort_sum, energy, violation)

        self._temp_history = np.vstack((self._temp_history[1:], next_temps))
        self._input_history.append((cmd, exo))
        del self._input_history[:-depth]
        self._t_out_history.append(
            self.exo.t_out[min(t + 1, config.horizon - 1)])
        self.episode_return += r
        self.discounted_return += config.discount ** t * r
        self.t = t + 1
        self.done = self.t >= config.horizon

        row = OrderedDict([('step', t)])
        for i, T in enumerate(next_temps):
            row['t_zone_{}'.format(i + 1)] = float(T)
        for i, m in enumerate(cmd.mdot):
            row['mdot_{}'.format(i + 1)] = float(m)
        row['t_da'] = cmd.t_da
        row['t_out'] = exo.t_out
        row['power_kw'] = power
        row['p_limit'] = float(p_limit)
        row['in_dr'] = int(self.in_dr[t])
        row['band_lower'] = float(band[0])
        row['band_upper'] = float(band[1])
        row['w_discomfort'] = float(weights[0])
        row['w_energy'] = float(weights[1])
        row['w_violation'] = float(weights[2])
        row['discomfort'] = float(discomfort_sum)
        row['energy_kwh'] = float(energy)
        row['violation'] = float(violation)
        row['reward'] = r
        self.trace.append(row)

        return StepOutcome(self.state(), r,
                           (discomfort_sum, energy, violation), power,
                           self.done, next_temps, cmd, p_limit, weights,
                           bool(self.in_dr[t]))

    def write_trace(self, path):
        """Writes the episode trace as CSV."""
        if not self.trace:
            raise ValueError('The episode has no steps to write.')
        header = list(self.trace[0].keys())
        write_csv(path, header, [[row[k] for k in header]
                                 for row in self.trace])


class EnvFactory(object):
    """Builds seeded episodes over a set of exogenous days. An episode seed
    fixes the day, the demand response event and every other random choice.
    Factories hold plain data and can be sent to worker processes.

    Parameters
    ==========
    model : gridhvac.rom.BuildingModel
    config : ScenarioConfig
    days : sequence of gridhvac.rom.ExogenousSeries

    """

    def __init__(self, model, config, days):
        self.model = model
        self.config = config
        self.days = list(days)
        if not self.days:
            raise ValueError('At least one exogenous day is required.')

    def episode(self, seed, dr_event=SAMPLE):
        """Returns a reset (env, initial state) pair."""
        rng = seed_substream(seed, 'day')
        day = self.days[int(rng.integers(len(self.days)))]
        env = BuildingEnv(self.model, self.config)
        state = env.reset(day, seed=seed, dr_event=dr_event)
        return env, state


def run_episode(env, state, act):
    """Runs an episode to the end with ``act(state) -> raw action`` and
    returns the episode cost."""
    while not env.done:
        state = env.step(act(state)).next_state
    return env.episode_cost


def mean_episode_cost(act, env_factory, episodes, seed):
    """Returns the mean undiscounted cost of ``episodes`` episodes seeded
    from ``seed``. Equal seeds give equal episodes, so controllers compared
    on one seed see the same days and events."""
    episodes = check_int('episodes', episodes, lower=1)
    costs = []
    for k in range(episodes):
        env, state = env_factory.episode(derive_seed(seed, 'episode', k))
        costs.append(run_episode(env, state, act))
    return float(np.mean(costs))
