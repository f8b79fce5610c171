#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Reduced-order multi-zone thermal model: the ARX zone temperature update,
the HVAC power model, system identification from operation data and a
synthetic generator for the non-controllable inputs."""

import logging
import re
import warnings

# external libraries
import numpy as np
import scipy.linalg

# local
from .utils import (FORMAT_VERSION, Configuration, GridHvacConvergenceWarning,
                    MalformedFileError, RankDeficiencyError, check_float,
                    check_int, check_interval, check_format_version,
                    read_csv, parse_float, read_json, seed_substream,
                    write_csv, write_json)

logger = logging.getLogger(__name__)

BASE_FEATURES = ('t_out', 'q_hvac', 'q_solar', 'q_int')

_ZONE_FEATURE = re.compile(r'^t_zone_(\d+)$')

ORIENTATION_PEAK_HOURS = {'east': 9.0, 'south': 12.0, 'north': 12.0,
                          'west': 16.0}

# fraction of the solar peak received by each facade
ORIENTATION_SCALES = {'east': 1.0, 'south': 1.0, 'north': 0.4, 'west': 1.0,
                      'core': 0.0}

RIDGE = 1e-8
MAX_CONDITION = 1e10


def zone_feature_ids(n_zones, zone):
    """Returns every input feature identifier available to a zone: the four
    building-level inputs followed by the other zones' temperatures."""
    return list(BASE_FEATURES) + ['t_zone_{}'.format(k + 1)
                                  for k in range(n_zones) if k != zone]


class ZoneArxModel(object):
    """The autoregressive model with exogenous inputs of one zone::

        T[t+1] = sum_j a[j] * T[t-j] + sum_j b[j] . u[t-j]

    where ``u`` holds the zone's selected input features in
    ``feature_spec`` order.

    Parameters
    ==========
    zone_id : integer
        Zero based index of the zone in the building.
    a_coeffs : array_like, shape(n_a,)
        Autoregressive coefficients, most recent lag first.
    b_coeffs : array_like, shape(n_b, len(feature_spec))
        Input coefficients, most recent lag first.
    feature_spec : sequence of str
        Feature identifiers, see ``zone_feature_ids``.
    rmse : float, optional
        One-step prediction error of the fit that produced the model.

    """

    def __init__(self, zone_id, a_coeffs, b_coeffs, feature_spec, rmse=None):
        self.zone_id = zone_id
        self.feature_spec = feature_spec
        self.a_coeffs = a_coeffs
        self.b_coeffs = b_coeffs
        self.rmse = rmse

    @property
    def zone_id(self):
        return self._zone_id

    @zone_id.setter
    def zone_id(self, value):
        self._zone_id = check_int('zone_id', value, lower=0)

    @property
    def feature_spec(self):
        return self._feature_spec

    @feature_spec.setter
    def feature_spec(self, features):
        features = [str(f) for f in features]
        own = 't_zone_{}'.format(self.zone_id + 1)
        for f in features:
            if f == own:
                msg = ("Zone {} cannot use its own temperature '{}' as an "
                       "input feature.")
                raise ValueError(msg.format(self.zone_id, f))
            if f not in BASE_FEATURES and not _ZONE_FEATURE.match(f):
                msg = "'{}' is not a valid feature identifier."
                raise ValueError(msg.format(f))
        if len(set(features)) != len(features):
            msg = 'Feature identifiers must be unique: {}.'
            raise ValueError(msg.format(features))
        self._feature_spec = features
        self._input_slots = [_feature_slot(f) for f in features]

    @property
    def a_coeffs(self):
        return self._a_coeffs

    @a_coeffs.setter
    def a_coeffs(self, value):
        value = np.array(value, dtype=float).reshape(-1)
        if value.size < 1:
            raise ValueError('At least one autoregressive coefficient is '
                             'required.')
        self._a_coeffs = value

    @property
    def b_coeffs(self):
        return self._b_coeffs

    @b_coeffs.setter
    def b_coeffs(self, value):
        value = np.array(value, dtype=float)
        if value.ndim == 1:
            value = value.reshape(1, -1)
        if value.ndim != 2 or value.shape[0] < 1:
            msg = 'b_coeffs must have shape (n_b, {}), not {}.'
            raise ValueError(msg.format(len(self.feature_spec), value.shape))
        if value.shape[1] != len(self.feature_spec):
            msg = ('Each b_coeffs row must have one weight per feature '
                   '({}), not {}.')
            raise ValueError(msg.format(len(self.feature_spec),
                                        value.shape[1]))
        self._b_coeffs = value

    @property
    def n_a(self):
        return len(self.a_coeffs)

    @property
    def n_b(self):
        return self.b_coeffs.shape[0]

    @property
    def history_depth(self):
        return max(self.n_a, self.n_b)

    def inputs(self, temps, cmd, exo, c_p):
        """Returns this zone's input vector u for one step."""
        i = self.zone_id
        u = np.empty(len(self.feature_spec))
        for k, slot in enumerate(self._input_slots):
            if slot == 't_out':
                u[k] = exo.t_out
            elif slot == 'q_hvac':
                u[k] = delivered_cooling(cmd.mdot[i], cmd.t_da, temps[i],
                                         c_p)
            elif slot == 'q_solar':
                u[k] = exo.q_solar[i]
            elif slot == 'q_int':
                u[k] = exo.q_int[i]
            else:
                u[k] = temps[slot]
        return u

    def to_dict(self):
        return {'zone_id': self.zone_id,
                'a_coeffs': self.a_coeffs.tolist(),
                'b_coeffs': self.b_coeffs.tolist(),
                'feature_spec': list(self.feature_spec),
                'rmse': self.rmse}

    @classmethod
    def from_dict(cls, data):
        return cls(data['zone_id'], data['a_coeffs'], data['b_coeffs'],
                   data['feature_spec'], rmse=data.get('rmse'))

    def __repr__(self):
        return ('ZoneArxModel(zone_id={}, n_a={}, n_b={}, feature_spec={})'
                .format(self.zone_id, self.n_a, self.n_b, self.feature_spec))


def _feature_slot(feature):
    match = _ZONE_FEATURE.match(feature)
    if match:
        return int(match.group(1)) - 1
    return feature


class BuildingModel(object):
    """N zone ARX models together with the HVAC power model and the actuator
    bounds.

    Parameters
    ==========
    zones : sequence of ZoneArxModel
        Ordered by zone id starting at zero.
    power_a, power_b, power_c : float
        Coefficients of the power model
        ``a (T_out - T_da) sum(mdot) + b sum(mdot)**3 + c`` in kW.
    c_p : float
        Scale of the delivered cooling ``c_p mdot (T_zone - T_da)``. The
        unit string is carried in ``c_p_units`` as metadata only.
    t_da_bounds : pair of float
        Discharge air temperature bounds in degrees Celsius.
    mdot_bounds : sequence of pairs of float, optional
        Per zone mass flow bounds in kg/s. Defaults to (0.22, 2.2) for every
        zone.
    dt : float
        Control interval in hours.

    """

    def __init__(self, zones, power_a=1.0, power_b=0.0076, power_c=4.8865,
                 c_p=1.0, t_da_bounds=(10.0, 16.0), mdot_bounds=None,
                 dt=1.0 / 12.0, c_p_units='kWh/(kg K)'):
        self.zones = zones
        self.power_a = power_a
        self.power_b = power_b
        self.power_c = power_c
        self.c_p = c_p
        self.c_p_units = c_p_units
        self.t_da_bounds = t_da_bounds
        if mdot_bounds is None:
            mdot_bounds = [(0.22, 2.2)] * self.n_zones
        self.mdot_bounds = mdot_bounds
        self.dt = dt

    @property
    def zones(self):
        return self._zones

    @zones.setter
    def zones(self, zones):
        zones = list(zones)
        if len(zones) < 1:
            raise ValueError('A building needs at least one zone.')
        for i, zone in enumerate(zones):
            if not isinstance(zone, ZoneArxModel):
                msg = 'Zone {} must be a ZoneArxModel, not {}.'
                raise TypeError(msg.format(i, type(zone)))
            if zone.zone_id != i:
                msg = 'Zone at position {} has zone_id {}.'
                raise ValueError(msg.format(i, zone.zone_id))
            for slot in zone._input_slots:
                if not isinstance(slot, str) and slot >= len(zones):
                    msg = 'Zone {} refers to zone {} of a {} zone building.'
                    raise ValueError(msg.format(i, slot + 1, len(zones)))
        self._zones = zones

    @property
    def n_zones(self):
        return len(self.zones)

    @property
    def history_depth(self):
        return max(zone.history_depth for zone in self.zones)

    @property
    def is_first_order(self):
        return all(z.n_a == 1 and z.n_b == 1 for z in self.zones)

    @property
    def power_b(self):
        return self._power_b

    @power_b.setter
    def power_b(self, value):
        self._power_b = check_float('power_b', value, lower=0.0,
                                    strict_lower=True)

    @property
    def power_c(self):
        return self._power_c

    @power_c.setter
    def power_c(self, value):
        self._power_c = check_float('power_c', value, lower=0.0)

    @property
    def power_a(self):
        return self._power_a

    @power_a.setter
    def power_a(self, value):
        self._power_a = check_float('power_a', value)

    @property
    def c_p(self):
        return self._c_p

    @c_p.setter
    def c_p(self, value):
        self._c_p = check_float('c_p', value, lower=0.0, strict_lower=True)

    @property
    def t_da_bounds(self):
        return self._t_da_bounds

    @t_da_bounds.setter
    def t_da_bounds(self, value):
        self._t_da_bounds = check_interval('t_da_bounds', value)

    @property
    def mdot_bounds(self):
        return self._mdot_bounds

    @mdot_bounds.setter
    def mdot_bounds(self, value):
        value = [check_interval('mdot_bounds', pair) for pair in value]
        if len(value) != self.n_zones:
            msg = 'mdot_bounds needs {} pairs, not {}.'
            raise ValueError(msg.format(self.n_zones, len(value)))
        for lower, upper in value:
            if lower <= 0.0:
                msg = 'Minimum mass flows must be positive, not {}.'
                raise ValueError(msg.format(lower))
        self._mdot_bounds = value

    @property
    def dt(self):
        return self._dt

    @dt.setter
    def dt(self, value):
        self._dt = check_float('dt', value, lower=0.0, strict_lower=True)

    @property
    def command_lower(self):
        """Lower bounds of the command vector (mdot_1..mdot_N, t_da)."""
        return np.array([b[0] for b in self.mdot_bounds] +
                        [self.t_da_bounds[0]])

    @property
    def command_upper(self):
        return np.array([b[1] for b in self.mdot_bounds] +
                        [self.t_da_bounds[1]])

    def to_dict(self):
        return {'format_version': FORMAT_VERSION,
                'zones': [z.to_dict() for z in self.zones],
                'power_a': self.power_a,
                'power_b': self.power_b,
                'power_c': self.power_c,
                'c_p': self.c_p,
                'c_p_units': self.c_p_units,
                't_da_bounds': list(self.t_da_bounds),
                'mdot_bounds': [list(b) for b in self.mdot_bounds],
                'dt': self.dt}

    @classmethod
    def from_dict(cls, data, path='<memory>'):
        check_format_version(data, path)
        try:
            zones = [ZoneArxModel.from_dict(z) for z in data['zones']]
            return cls(zones, power_a=data['power_a'],
                       power_b=data['power_b'], power_c=data['power_c'],
                       c_p=data['c_p'], t_da_bounds=data['t_da_bounds'],
                       mdot_bounds=data['mdot_bounds'], dt=data['dt'],
                       c_p_units=data.get('c_p_units', 'kWh/(kg K)'))
        except KeyError as e:
            raise MalformedFileError(path, 0, 'missing key {}'.format(e))

    def save(self, path):
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_json(path), path=path)


class HvacCommand(object):
    """One control action: per zone mass flows in kg/s and the discharge air
    temperature in degrees Celsius. Bounds are not enforced here, see
    ``bound_violations``."""

    def __init__(self, mdot, t_da):
        mdot = np.array(mdot, dtype=float).reshape(-1)
        if not np.all(np.isfinite(mdot)):
            msg = 'Mass flows must be finite, not {}.'
            raise ValueError(msg.format(mdot))
        self.mdot = mdot
        self.t_da = check_float('t_da', t_da)

    @classmethod
    def from_vector(cls, u):
        u = np.asarray(u, dtype=float)
        return cls(u[:-1], u[-1])

    def as_vector(self):
        return np.hstack((self.mdot, self.t_da))

    @property
    def total_flow(self):
        return float(np.sum(self.mdot))

    def bound_violations(self, model, tol=0.0):
        """Returns a list of messages, one per command entry outside the
        model's bounds."""
        if len(self.mdot) != model.n_zones:
            msg = 'Command has {} flows for a {} zone building.'
            return [msg.format(len(self.mdot), model.n_zones)]
        u = self.as_vector()
        names = ['mdot_{}'.format(i + 1) for i in range(model.n_zones)]
        names.append('t_da')
        violations = []
        for name, value, lower, upper in zip(names, u, model.command_lower,
                                             model.command_upper):
            if value < lower - tol or value > upper + tol:
                msg = '{}={} outside [{}, {}]'
                violations.append(msg.format(name, value, lower, upper))
        return violations

    def within_bounds(self, model, tol=0.0):
        return not self.bound_violations(model, tol=tol)

    def __eq__(self, other):
        return (isinstance(other, HvacCommand) and
                np.array_equal(self.as_vector(), other.as_vector()))

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return 'HvacCommand(mdot={}, t_da={})'.format(self.mdot.tolist(),
                                                      self.t_da)


class ExogenousRecord(object):
    """The non-controllable inputs of one control step."""

    __slots__ = ('step_index', 't_out', 'q_solar', 'q_int', 'is_weekday')

    def __init__(self, step_index, t_out, q_solar, q_int, is_weekday):
        q_solar = np.array(q_solar, dtype=float).reshape(-1)
        q_int = np.array(q_int, dtype=float).reshape(-1)
        if np.any(q_solar < 0.0) or np.any(q_int < 0.0):
            msg = 'Heat gains must be non-negative at step {}.'
            raise ValueError(msg.format(step_index))
        self.step_index = int(step_index)
        self.t_out = float(t_out)
        self.q_solar = q_solar
        self.q_int = q_int
        self.is_weekday = bool(is_weekday)

    def vector(self):
        """Returns (t_out, q_solar_1..N, q_int_1..N)."""
        return np.hstack((self.t_out, self.q_solar, self.q_int))


class ExogenousSeries(object):
    """A time-aligned sequence of exogenous records stored as arrays.
    Indexing with an integer returns an ``ExogenousRecord``; slicing
    returns another series."""

    def __init__(self, step_index, t_out, q_solar, q_int, is_weekday):
        self.step_index = np.asarray(step_index, dtype=int).reshape(-1)
        self.t_out = np.asarray(t_out, dtype=float).reshape(-1)
        self.q_solar = np.atleast_2d(np.asarray(q_solar, dtype=float))
        self.q_int = np.atleast_2d(np.asarray(q_int, dtype=float))
        self.is_weekday = np.asarray(is_weekday, dtype=bool).reshape(-1)
        n = len(self.step_index)
        for name in ('t_out', 'q_solar', 'q_int', 'is_weekday'):
            if len(getattr(self, name)) != n:
                msg = '{} has {} entries, expected {}.'
                raise ValueError(msg.format(name, len(getattr(self, name)),
                                            n))
        if np.any(self.q_solar < 0.0) or np.any(self.q_int < 0.0):
            raise ValueError('Heat gains must be non-negative.')

    @classmethod
    def from_records(cls, records):
        records = list(records)
        return cls([r.step_index for r in records],
                   [r.t_out for r in records],
                   [r.q_solar for r in records],
                   [r.q_int for r in records],
                   [r.is_weekday for r in records])

    @property
    def n_zones(self):
        return self.q_solar.shape[1]

    def __len__(self):
        return len(self.step_index)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return ExogenousSeries(self.step_index[key], self.t_out[key],
                                   self.q_solar[key], self.q_int[key],
                                   self.is_weekday[key])
        return ExogenousRecord(self.step_index[key], self.t_out[key],
                               self.q_solar[key], self.q_int[key],
                               self.is_weekday[key])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def vectors(self):
        """Returns an array of shape(len, 1 + 2N) of record vectors."""
        return np.column_stack((self.t_out, self.q_solar, self.q_int))

    def split_days(self, steps_per_day):
        """Returns the list of whole days in the series."""
        n_days = len(self) // steps_per_day
        return [self[d * steps_per_day:(d + 1) * steps_per_day]
                for d in range(n_days)]


class OperationDataset(object):
    """Time-aligned exogenous inputs, zone temperatures and commands. Row t
    holds the temperatures at the start of step t and the command applied
    during step t.

    Parameters
    ==========
    exogenous : ExogenousSeries
    temps : array_like, shape(n, N)
    mdot : array_like, shape(n, N)
    t_da : array_like, shape(n,)
    dt : float
        Control interval in hours.

    """

    def __init__(self, exogenous, temps, mdot, t_da, dt=1.0 / 12.0):
        self.exogenous = exogenous
        self.temps = np.atleast_2d(np.asarray(temps, dtype=float))
        self.mdot = np.atleast_2d(np.asarray(mdot, dtype=float))
        self.t_da = np.asarray(t_da, dtype=float).reshape(-1)
        self.dt = dt
        n = len(exogenous)
        for name in ('temps', 'mdot', 't_da'):
            if len(getattr(self, name)) != n:
                msg = '{} has {} rows, the exogenous data has {}.'
                raise ValueError(msg.format(name, len(getattr(self, name)),
                                            n))
        if self.temps.shape[1] != exogenous.n_zones or \
                self.mdot.shape[1] != exogenous.n_zones:
            raise ValueError('Zone counts of the dataset columns differ.')
        steps = exogenous.step_index
        if n > 1 and np.any(np.diff(steps) != 1):
            bad = int(np.flatnonzero(np.diff(steps) != 1)[0])
            msg = 'Step indices are not consecutive after step {}.'
            raise ValueError(msg.format(steps[bad]))

    def __len__(self):
        return len(self.exogenous)

    @property
    def n_zones(self):
        return self.temps.shape[1]

    def command(self, t):
        return HvacCommand(self.mdot[t], self.t_da[t])

    def __getitem__(self, key):
        if not isinstance(key, slice):
            raise TypeError('Datasets can only be sliced.')
        return OperationDataset(self.exogenous[key], self.temps[key],
                                self.mdot[key], self.t_da[key], dt=self.dt)

    def feature_column(self, feature, zone, c_p=1.0):
        """Returns the values of one input feature of one zone for every
        row."""
        slot = _feature_slot(feature)
        if slot == 't_out':
            return self.exogenous.t_out.copy()
        elif slot == 'q_hvac':
            return delivered_cooling(self.mdot[:, zone], self.t_da,
                                     self.temps[:, zone], c_p)
        elif slot == 'q_solar':
            return self.exogenous.q_solar[:, zone].copy()
        elif slot == 'q_int':
            return self.exogenous.q_int[:, zone].copy()
        elif isinstance(slot, int) and slot < self.n_zones and slot != zone:
            return self.temps[:, slot].copy()
        msg = "Feature '{}' is not available for zone {}."
        raise ValueError(msg.format(feature, zone))

    def to_csv(self, path):
        exo = self.exogenous
        rows = []
        for t in range(len(self)):
            rows.append([int(exo.step_index[t]), float(exo.t_out[t])] +
                        [float(v) for v in exo.q_solar[t]] +
                        [float(v) for v in exo.q_int[t]] +
                        [float(v) for v in self.temps[t]] +
                        [float(v) for v in self.mdot[t]] +
                        [float(self.t_da[t]), int(exo.is_weekday[t])])
        write_csv(path, dataset_header(self.n_zones), rows)

    @classmethod
    def from_csv(cls, path, dt=1.0 / 12.0):
        header, rows = read_csv(path)
        zone_columns = [h for h in header if h.startswith('t_zone_')]
        n_zones = len(zone_columns)
        if n_zones < 1:
            raise MalformedFileError(path, 1, 'no t_zone_<k> columns')
        expected = dataset_header(n_zones)
        if header != expected:
            msg = 'unexpected header, expected {}'
            raise MalformedFileError(path, 1, msg.format(','.join(expected)))
        if not rows:
            raise MalformedFileError(path, 2, 'the file has no data rows')
        values = np.empty((len(rows), len(header)))
        for i, row in enumerate(rows):
            for j, text in enumerate(row):
                values[i, j] = parse_float(path, i + 2, text)
        n = n_zones
        exo = ExogenousSeries(values[:, 0].astype(int), values[:, 1],
                              values[:, 2:2 + n], values[:, 2 + n:2 + 2 * n],
                              values[:, -1] != 0.0)
        try:
            return cls(exo, values[:, 2 + 2 * n:2 + 3 * n],
                       values[:, 2 + 3 * n:2 + 4 * n], values[:, -2], dt=dt)
        except ValueError as e:
            raise MalformedFileError(path, 0, str(e))


def dataset_header(n_zones):
    """Returns the column names of the operation dataset CSV format."""
    n = range(1, n_zones + 1)
    return (['step', 't_out'] +
            ['q_solar_{}'.format(i) for i in n] +
            ['q_int_{}'.format(i) for i in n] +
            ['t_zone_{}'.format(i) for i in n] +
            ['mdot_{}'.format(i) for i in n] +
            ['t_da', 'is_weekday'])


def hvac_power(cmd, t_out, model):
    """Returns the electrical power in kW drawn by the HVAC system::

        P = a (t_out - t_da) sum(mdot) + b sum(mdot)**3 + c

    """
    total = np.sum(cmd.mdot)
    return float(model.power_a * (t_out - cmd.t_da) * total +
                 model.power_b * total ** 3 + model.power_c)


def interval_energy(power, dt):
    """Returns the energy in kWh used at ``power`` kW over ``dt`` hours."""
    return power * dt


def delivered_cooling(mdot, t_da, t_zone, c_p):
    """Returns the cooling delivered to a zone, ``c_p mdot (t_zone - t_da)``.
    Works elementwise on arrays."""
    return c_p * mdot * (t_zone - t_da)


def step_temperature(model, temp_history, cmd, exo, input_history=()):
    """Returns the zone temperatures at the next step.

    Parameters
    ==========
    model : BuildingModel
    temp_history : array_like, shape(depth, N)
        Recent zone temperatures, oldest first. The last row holds the
        temperatures at the current step.
    cmd : HvacCommand
        The command applied during the current step.
    exo : ExogenousRecord
        The exogenous inputs of the current step.
    input_history : sequence of (HvacCommand, ExogenousRecord)
        The commands and exogenous inputs of earlier steps, oldest first.
        Only needed by zones with more than one input lag.

    Returns
    =======
    temps : ndarray, shape(N,)

    """
    temp_history = np.asarray(temp_history, dtype=float)
    if temp_history.ndim == 1:
        temp_history = temp_history.reshape(1, -1)
    depth = temp_history.shape[0]
    if depth < model.history_depth:
        msg = ('The temperature history holds {} steps but the model needs '
               '{}.')
        raise ValueError(msg.format(depth, model.history_depth))
    max_n_b = max(zone.n_b for zone in model.zones)
    if len(input_history) < max_n_b - 1:
        msg = 'The input history holds {} steps but the model needs {}.'
        raise ValueError(msg.format(len(input_history), max_n_b - 1))

    recent_first = temp_history[::-1]
    next_temps = np.empty(model.n_zones)
    for zone in model.zones:
        i = zone.zone_id
        value = np.dot(zone.a_coeffs, recent_first[:zone.n_a, i])
        for lag in range(zone.n_b):
            if lag == 0:
                c, e = cmd, exo
            else:
                c, e = input_history[-lag]
            u = zone.inputs(recent_first[lag], c, e, model.c_p)
            value += np.dot(zone.b_coeffs[lag], u)
        next_temps[i] = value
    return next_temps


def simulate(model, exogenous, mdot, t_da, initial_temps, noise_std=0.0,
             rng=None):
    """Simulates the building under a sequence of commands and returns the
    resulting ``OperationDataset``.

    Parameters
    ==========
    model : BuildingModel
    exogenous : ExogenousSeries
    mdot : array_like, shape(n, N)
    t_da : array_like, shape(n,)
    initial_temps : array_like, shape(N,)
        Used for every step of history before the first row.
    noise_std : float, optional
        Standard deviation of zero mean Gaussian noise added to each
        temperature update.
    rng : numpy.random.Generator, optional
        Required when ``noise_std`` is positive.

    """
    mdot = np.atleast_2d(np.asarray(mdot, dtype=float))
    t_da = np.asarray(t_da, dtype=float).reshape(-1)
    n = len(exogenous)
    if noise_std > 0.0 and rng is None:
        raise ValueError('An rng is required to simulate with noise.')
    depth = model.history_depth
    history = np.tile(np.asarray(initial_temps, dtype=float), (depth, 1))
    inputs = []
    temps = np.empty((n, model.n_zones))
    for t in range(n):
        temps[t] = history[-1]
        cmd = HvacCommand(mdot[t], t_da[t])
        exo = exogenous[t]
        if not inputs:
            inputs = [(cmd, exo)] * depth
        new = step_temperature(model, history, cmd, exo, inputs[-depth:])
        if noise_std > 0.0:
            new = new + rng.normal(0.0, noise_std, size=model.n_zones)
        history = np.vstack((history[1:], new))
        inputs.append((cmd, exo))
    return OperationDataset(exogenous, temps, mdot, t_da, dt=model.dt)


def exploration_commands(model, steps, rng, max_hold=12):
    """Returns (mdot, t_da) arrays of piecewise constant random commands.
    Each zone flow and the discharge temperature are drawn uniformly within
    the bounds and held for a random 1 to ``max_hold`` steps."""
    lower, upper = model.command_lower, model.command_upper
    u = np.empty((steps, len(lower)))
    for j in range(len(lower)):
        t = 0
        while t < steps:
            hold = int(rng.integers(1, max_hold + 1))
            u[t:t + hold, j] = rng.uniform(lower[j], upper[j])
            t += hold
    return u[:, :-1], u[:, -1]


def _regression(data, zone, n_a, n_b, features, c_p):
    """Returns the regressor matrix, the targets, the column names and the
    target row indices of a zone's one-step-ahead least squares problem."""
    lag_depth = max(n_a, n_b)
    n = len(data)
    if n - lag_depth < 1:
        msg = 'The dataset has {} rows, fewer than the lag depth {} + 1.'
        raise ValueError(msg.format(n, lag_depth))
    own = data.temps[:, zone]
    columns = [data.feature_column(f, zone, c_p) for f in features]
    targets = np.arange(lag_depth, n)
    blocks, names = [], []
    for lag in range(n_a):
        blocks.append(own[targets - 1 - lag])
        names.append('t_zone_{} (lag {})'.format(zone + 1, lag + 1))
    for lag in range(n_b):
        for f, col in zip(features, columns):
            blocks.append(col[targets - 1 - lag])
            names.append('{} (lag {})'.format(f, lag + 1))
    X = np.column_stack(blocks)
    return X, own[targets], names, targets


def _degenerate_columns(X, names):
    s = scipy.linalg.svdvals(X)
    tol = s.max() * max(X.shape) * np.finfo(float).eps if s.size else 0.0
    if s.size and np.sum(s > tol) == X.shape[1]:
        return []
    degenerate, basis = [], []
    for j in range(X.shape[1]):
        candidate = basis + [j]
        if np.linalg.matrix_rank(X[:, candidate], tol=tol) < len(candidate):
            degenerate.append(names[j])
        else:
            basis.append(j)
    return degenerate


def _least_squares(X, y, names, zone):
    if X.shape[0] <= X.shape[1]:
        msg = ('Zone {}: {} usable rows cannot determine {} coefficients.')
        raise ValueError(msg.format(zone, X.shape[0], X.shape[1]))
    degenerate = _degenerate_columns(X, names)
    if degenerate:
        raise RankDeficiencyError(degenerate, zone_id=zone)
    gram = X.T.dot(X)
    rhs = X.T.dot(y)
    if np.linalg.cond(gram) > MAX_CONDITION:
        msg = ('Zone {}: the normal equations are ill conditioned, adding a '
               'ridge of {}.')
        warnings.warn(msg.format(zone, RIDGE), GridHvacConvergenceWarning)
        gram = gram + RIDGE * np.eye(gram.shape[0])
    return scipy.linalg.solve(gram, rhs, assume_a='pos')


def fit_arx(data, zone, n_a=1, n_b=1, features=None, c_p=1.0):
    """Returns the ZoneArxModel minimizing the one-step-ahead squared
    prediction error of a zone over a dataset. The residual RMSE is stored
    on the returned model.

    Parameters
    ==========
    data : OperationDataset
    zone : integer
        Zero based zone index.
    n_a, n_b : integer
        Autoregressive and input lag counts.
    features : sequence of str, optional
        Input features, all of ``zone_feature_ids`` by default.
    c_p : float
        Scale used to compute the delivered cooling feature.

    Raises
    ======
    RankDeficiencyError
        If the regressors are linearly dependent, e.g. constant data.

    """
    n_a = check_int('n_a', n_a, lower=1)
    n_b = check_int('n_b', n_b, lower=1)
    if features is None:
        features = zone_feature_ids(data.n_zones, zone)
    features = list(features)
    X, y, names, _ = _regression(data, zone, n_a, n_b, features, c_p)
    theta = _least_squares(X, y, names, zone)
    rmse = float(np.sqrt(np.mean((y - X.dot(theta)) ** 2)))
    n_f = len(features)
    model = ZoneArxModel(zone, theta[:n_a],
                         theta[n_a:].reshape(n_b, n_f), features, rmse=rmse)
    logger.debug('Zone %d fit with %d features, rmse %g', zone, n_f, rmse)
    return model


def feature_select(data, zone, candidates, n_a=1, n_b=1, c_p=1.0,
                   train_fraction=0.8, min_improvement=0.01):
    """Returns the input features of a zone chosen by greedy forward
    selection on validation RMSE.

    The dataset is split chronologically into a training and a validation
    part. Starting from the autoregressive-only model, the candidate whose
    addition gives the lowest validation RMSE is added as long as it lowers
    the current validation RMSE by at least ``min_improvement`` of it.
    Candidates that make the regressors rank deficient are skipped. The
    result keeps the order of ``candidates``.

    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError('At least one candidate feature is required.')
    if len(data) == 0:
        raise ValueError('The dataset is empty.')
    split = int(train_fraction * len(data))

    def validation_rmse(features):
        X, y, names, targets = _regression(data, zone, n_a, n_b, features,
                                           c_p)
        train = targets < split
        if np.sum(~train) == 0:
            msg = 'The dataset has no validation rows ({} rows in total).'
            raise ValueError(msg.format(len(data)))
        theta = _least_squares(X[train], y[train], names, zone)
        residual = y[~train] - X[~train].dot(theta)
        return float(np.sqrt(np.mean(residual ** 2)))

    selected = []
    current = validation_rmse(selected)
    logger.debug('Zone %d autoregressive baseline rmse %g', zone, current)
    while True:
        best, best_rmse = None, np.inf
        for candidate in candidates:
            if candidate in selected:
                continue
            try:
                rmse = validation_rmse(selected + [candidate])
            except RankDeficiencyError:
                continue
            if rmse < best_rmse:
                best, best_rmse = candidate, rmse
        threshold = max(min_improvement * current, 1e-9)
        if best is None or current - best_rmse < threshold:
            break
        selected.append(best)
        current = best_rmse
        logger.debug('Zone %d selected %s, rmse %g', zone, best, current)
    return [c for c in candidates if c in selected]


class ExogenousGeneratorConfig(Configuration):
    """Settings of the synthetic weather and internal gain generator.

    The outdoor temperature is ``t_mean + t_amplitude sin(2 pi (h - 9) /
    24)`` plus stationary AR(1) noise, peaking at 15:00. Solar gains follow
    a Gaussian bell around a facade dependent hour between 06:00 and 20:00.
    Internal gains follow a weekday occupancy schedule.

    """

    _fields = ('t_mean', 't_amplitude', 'noise_std', 'noise_phi',
               'solar_peak', 'solar_width', 'orientations',
               'internal_occupied', 'internal_unoccupied', 'occupied_hours',
               'start_weekday', 'dt')

    def __init__(self, t_mean=24.0, t_amplitude=8.0, noise_std=0.5,
                 noise_phi=0.9, solar_peak=6.0, solar_width=2.5,
                 orientations=('south', 'east', 'north', 'west', 'core'),
                 internal_occupied=4.0, internal_unoccupied=0.5,
                 occupied_hours=(7.0, 19.0), start_weekday=0,
                 dt=1.0 / 12.0):
        self.t_mean = t_mean
        self.t_amplitude = t_amplitude
        self.noise_std = noise_std
        self.noise_phi = noise_phi
        self.solar_peak = solar_peak
        self.solar_width = solar_width
        self.orientations = orientations
        self.internal_occupied = internal_occupied
        self.internal_unoccupied = internal_unoccupied
        self.occupied_hours = occupied_hours
        self.start_weekday = start_weekday
        self.dt = dt

    @property
    def t_mean(self):
        return self._t_mean

    @t_mean.setter
    def t_mean(self, value):
        self._t_mean = check_float('t_mean', value)

    @property
    def t_amplitude(self):
        return self._t_amplitude

    @t_amplitude.setter
    def t_amplitude(self, value):
        self._t_amplitude = check_float('t_amplitude', value, lower=0.0)

    @property
    def noise_std(self):
        return self._noise_std

    @noise_std.setter
    def noise_std(self, value):
        self._noise_std = check_float('noise_std', value, lower=0.0)

    @property
    def noise_phi(self):
        return self._noise_phi

    @noise_phi.setter
    def noise_phi(self, value):
        self._noise_phi = check_float('noise_phi', value, lower=0.0,
                                      upper=1.0, strict_upper=True)

    @property
    def solar_peak(self):
        return self._solar_peak

    @solar_peak.setter
    def solar_peak(self, value):
        self._solar_peak = check_float('solar_peak', value, lower=0.0)

    @property
    def solar_width(self):
        return self._solar_width

    @solar_width.setter
    def solar_width(self, value):
        self._solar_width = check_float('solar_width', value, lower=0.0,
                                        strict_lower=True)

    @property
    def orientations(self):
        """Facade of each zone: 'south', 'east', 'north', 'west' or
        'core'."""
        return self._orientations

    @orientations.setter
    def orientations(self, value):
        value = tuple(str(v) for v in value)
        for v in value:
            if v not in ORIENTATION_SCALES:
                msg = "'{}' is not an orientation, choose from {}."
                raise ValueError(msg.format(v, sorted(ORIENTATION_SCALES)))
        if not value:
            raise ValueError('At least one zone orientation is required.')
        self._orientations = value

    @property
    def internal_occupied(self):
        return self._internal_occupied

    @internal_occupied.setter
    def internal_occupied(self, value):
        self._internal_occupied = check_float('internal_occupied', value,
                                              lower=0.0)

    @property
    def internal_unoccupied(self):
        return self._internal_unoccupied

    @internal_unoccupied.setter
    def internal_unoccupied(self, value):
        self._internal_unoccupied = check_float('internal_unoccupied',
                                                value, lower=0.0)

    @property
    def occupied_hours(self):
        return self._occupied_hours

    @occupied_hours.setter
    def occupied_hours(self, value):
        self._occupied_hours = check_interval('occupied_hours', value)

    @property
    def start_weekday(self):
        """Day of the week of the first day, 0 is Monday."""
        return self._start_weekday

    @start_weekday.setter
    def start_weekday(self, value):
        value = check_int('start_weekday', value, lower=0)
        if value > 6:
            msg = 'start_weekday must be in 0..6, not {}.'
            raise ValueError(msg.format(value))
        self._start_weekday = value

    @property
    def dt(self):
        return self._dt

    @dt.setter
    def dt(self, value):
        self._dt = check_float('dt', value, lower=0.0, strict_lower=True)

    @property
    def steps_per_day(self):
        return int(round(24.0 / self.dt))

    @property
    def n_zones(self):
        return len(self.orientations)


def generate_synthetic_exogenous(config, days, seed):
    """Returns an ExogenousSeries of ``days`` whole days of synthetic
    outdoor temperature, solar gains and internal gains. The result depends
    only on ``config``, ``days`` and ``seed``.

    Parameters
    ==========
    config : ExogenousGeneratorConfig
    days : integer
    seed : integer

    """
    days = check_int('days', days, lower=1)
    rng = seed_substream(seed, 'exogenous')
    steps_per_day = config.steps_per_day
    n = days * steps_per_day
    steps = np.arange(n)
    hours = (steps % steps_per_day) * config.dt
    day = steps // steps_per_day
    is_weekday = (config.start_weekday + day) % 7 < 5

    noise = np.empty(n)
    phi, sigma = config.noise_phi, config.noise_std
    shocks = rng.standard_normal(n)
    noise[0] = sigma * shocks[0]
    innovation = sigma * np.sqrt(1.0 - phi ** 2)
    for t in range(1, n):
        noise[t] = phi * noise[t - 1] + innovation * shocks[t]
    t_out = (config.t_mean +
             config.t_amplitude * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0) +
             noise)

    daylight = (hours >= 6.0) & (hours <= 20.0)
    q_solar = np.zeros((n, config.n_zones))
    for i, facade in enumerate(config.orientations):
        scale = ORIENTATION_SCALES[facade]
        if scale == 0.0:
            continue
        peak_hour = ORIENTATION_PEAK_HOURS[facade]
        bell = np.exp(-0.5 * ((hours - peak_hour) / config.solar_width) ** 2)
        q_solar[:, i] = np.where(daylight,
                                 config.solar_peak * scale * bell, 0.0)

    start, end = config.occupied_hours
    occupied = is_weekday & (hours >= start) & (hours < end)
    q_int = np.where(occupied, config.internal_occupied,
                     config.internal_unoccupied)
    q_int = np.tile(q_int.reshape(-1, 1), (1, config.n_zones))

    return ExogenousSeries(steps, t_out, q_solar, q_int, is_weekday)
