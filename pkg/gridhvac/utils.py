#!/usr/bin/env python
# -*- coding: utf-8 -*-

import csv
import json
import os
import warnings
import zlib

import numpy as np

FORMAT_VERSION = 1


def seed_substream(root_seed, name, *keys):
    """Returns a numpy random Generator for a named substream of a root
    seed.

    Parameters
    ==========
    root_seed : integer
        The experiment's root seed.
    name : string
        The substream name, e.g. 'data', 'es' or 'eval'.
    keys : integers
        Additional spawn keys, e.g. an iteration or episode index.

    Notes
    =====
    The name is hashed with CRC32 so the stream does not depend on Python's
    per-process string hashing.

    """
    return np.random.default_rng(seed_sequence(root_seed, name, *keys))


def seed_sequence(root_seed, name, *keys):
    """Returns the SeedSequence behind ``seed_substream``."""
    if root_seed is None or int(root_seed) < 0:
        msg = "Seeds must be non-negative integers, not {}."
        raise ValueError(msg.format(root_seed))
    spawn_key = (zlib.crc32(name.encode('utf-8')),) + \
        tuple(int(k) for k in keys)
    return np.random.SeedSequence(int(root_seed), spawn_key=spawn_key)


def derive_seed(root_seed, name, *keys):
    """Returns a 32 bit integer seed derived from a named substream."""
    return int(seed_sequence(root_seed, name, *keys).generate_state(1)[0])


def format_float(value):
    """Returns the shortest string that round trips to the same double."""
    return repr(float(value))


def write_csv(path, header, rows):
    """Writes a CSV file with a header row. Floats are written with
    ``format_float`` so identical inputs give identical bytes."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float)
                             else v for v in row])


def read_csv(path, required_columns=None):
    """Reads a CSV file with a header row.

    Returns
    =======
    header : list of str
    rows : list of list of str
        One list per data line.

    Raises
    ======
    MalformedFileError
        If the file is empty, a row has the wrong number of fields or a
        required column is missing.

    """
    if not os.path.exists(path):
        raise MissingArtifactError(path)
    with open(path, newline='') as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedFileError(path, 1, 'the file is empty')
        rows = []
        for row in reader:
            if len(row) != len(header):
                msg = 'expected {} fields, found {}'
                raise MalformedFileError(path, reader.line_num,
                                         msg.format(len(header), len(row)))
            rows.append(row)
    if required_columns is not None:
        for col in required_columns:
            if col not in header:
                raise MalformedFileError(path, 1,
                                         "missing column '{}'".format(col))
    return header, rows


def parse_float(path, line_number, text):
    try:
        return float(text)
    except ValueError:
        raise MalformedFileError(path, line_number,
                                 "'{}' is not a number".format(text))


def read_numeric_csv(path, required_columns=None):
    """Reads a CSV file of numbers into a dictionary mapping each column
    name to a float ndarray."""
    header, rows = read_csv(path, required_columns)
    if not rows:
        raise MalformedFileError(path, 2, 'the file has no data rows')
    columns = {name: np.empty(len(rows)) for name in header}
    for i, row in enumerate(rows):
        for name, text in zip(header, row):
            # header is line 1
            columns[name][i] = parse_float(path, i + 2, text)
    return columns


def write_json(path, data):
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def read_json(path):
    if not os.path.exists(path):
        raise MissingArtifactError(path)
    with open(path) as f:
        try:
            return json.load(f)
        except ValueError as e:
            raise MalformedFileError(path, getattr(e, 'lineno', 0), str(e))


def check_format_version(data, path='<memory>'):
    version = data.get('format_version')
    if version != FORMAT_VERSION:
        msg = 'unsupported format_version {}, expected {}'
        raise MalformedFileError(path, 0, msg.format(version,
                                                     FORMAT_VERSION))


class GridHvacUserWarning(UserWarning):
    pass


class GridHvacConvergenceWarning(UserWarning):
    pass


class RankDeficiencyError(ValueError):
    """Raised when a least squares regressor matrix does not have full
    column rank. ``columns`` names the degenerate regressors."""

    def __init__(self, columns, zone_id=None):
        self.columns = list(columns)
        self.zone_id = zone_id
        msg = 'Rank deficient regressor matrix, degenerate columns: {}'
        msg = msg.format(', '.join(self.columns))
        if zone_id is not None:
            msg = 'Zone {}: {}'.format(zone_id, msg)
        super(RankDeficiencyError, self).__init__(msg)


class EpisodeDoneError(RuntimeError):
    pass


class WorkerFailureError(RuntimeError):
    pass


class TrainingDivergedError(RuntimeError):
    """Raised when a trainer halts. ``curve`` holds the learning curve rows
    recorded before the halt."""

    def __init__(self, message, curve=None):
        self.curve = list(curve) if curve is not None else []
        super(TrainingDivergedError, self).__init__(message)


class MissingArtifactError(IOError):

    def __init__(self, path, hint=None):
        self.path = path
        msg = 'Required file {} does not exist.'.format(path)
        if hint is not None:
            msg += ' ' + hint
        super(MissingArtifactError, self).__init__(msg)


class MalformedFileError(ValueError):

    def __init__(self, path, line_number, reason):
        self.path = path
        self.line_number = line_number
        msg = '{}:{}: {}'.format(path, line_number, reason)
        super(MalformedFileError, self).__init__(msg)


warnings.simplefilter('once', GridHvacUserWarning)
warnings.simplefilter('once', GridHvacConvergenceWarning)


def check_float(name, value, lower=None, upper=None, strict_lower=False,
                strict_upper=False):
    """Returns ``value`` as a float after checking it is finite and within
    the optional bounds."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        msg = '{} must be a number, not {!r}.'
        raise TypeError(msg.format(name, value))
    if not np.isfinite(value):
        msg = '{} must be finite, not {}.'
        raise ValueError(msg.format(name, value))
    if lower is not None:
        if value < lower or (strict_lower and value == lower):
            msg = '{} must be {} {}, not {}.'
            raise ValueError(msg.format(name, '>' if strict_lower else '>=',
                                        lower, value))
    if upper is not None:
        if value > upper or (strict_upper and value == upper):
            msg = '{} must be {} {}, not {}.'
            raise ValueError(msg.format(name, '<' if strict_upper else '<=',
                                        upper, value))
    return value


def check_int(name, value, lower=None):
    if isinstance(value, bool) or int(value) != value:
        msg = '{} must be an integer, not {!r}.'
        raise TypeError(msg.format(name, value))
    value = int(value)
    if lower is not None and value < lower:
        msg = '{} must be >= {}, not {}.'
        raise ValueError(msg.format(name, lower, value))
    return value


def check_interval(name, value):
    """Returns a (lower, upper) tuple of floats with lower < upper."""
    try:
        lower, upper = value
    except (TypeError, ValueError):
        msg = '{} must be a pair of numbers, not {!r}.'
        raise TypeError(msg.format(name, value))
    lower = check_float(name, lower)
    upper = check_float(name, upper)
    if not lower < upper:
        msg = '{} must satisfy lower < upper, not {}.'
        raise ValueError(msg.format(name, (lower, upper)))
    return (lower, upper)


def _plain(value):
    if isinstance(value, Configuration):
        d = value.to_dict()
        del d['format_version']
        return d
    elif isinstance(value, np.ndarray):
        return value.tolist()
    elif isinstance(value, (tuple, list)):
        return [_plain(v) for v in value]
    else:
        return value


class Configuration(object):
    """Base class for the settings objects. Subclasses list their
    constructor keywords in ``_fields`` (in file order) and map the keywords
    that hold another configuration to its class in ``_nested``. Each field
    is a validated property on the subclass."""

    _fields = ()
    _nested = {}

    def to_dict(self):
        d = {name: _plain(getattr(self, name)) for name in self._fields}
        d['format_version'] = FORMAT_VERSION
        return d

    @classmethod
    def from_dict(cls, data, path='<memory>'):
        data = dict(data)
        version = data.pop('format_version', FORMAT_VERSION)
        if version != FORMAT_VERSION:
            msg = 'unsupported format_version {}, expected {}'
            raise MalformedFileError(path, 0, msg.format(version,
                                                         FORMAT_VERSION))
        for key in sorted(data):
            if key not in cls._fields:
                msg = "Unknown {} key '{}' in {}."
                raise ValueError(msg.format(cls.__name__, key, path))
        kwargs = {}
        for key, value in data.items():
            if key in cls._nested and not isinstance(value, Configuration):
                value = cls._nested[key].from_dict(value, path=path)
            kwargs[key] = value
        return cls(**kwargs)

    def replace(self, **changes):
        """Returns a copy with the given fields replaced."""
        kwargs = {name: getattr(self, name) for name in self._fields}
        kwargs.update(changes)
        return self.__class__(**kwargs)

    def save(self, path):
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_json(path), path=path)

    def __eq__(self, other):
        return (type(self) is type(other) and
                self.to_dict() == other.to_dict())

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        args = ', '.join('{}={!r}'.format(name, getattr(self, name))
                         for name in self._fields)
        return '{}({})'.format(self.__class__.__name__, args)
