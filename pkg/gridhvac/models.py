#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""This module contains some sample building models used for testing,
data generation and examples."""

# local
from .rom import BuildingModel, ZoneArxModel

PERIMETER_ORIENTATIONS = ('south', 'east', 'north', 'west')

PERIMETER_FEATURES = ('t_out', 'q_hvac', 'q_solar', 'q_int', 't_zone_5')
PERIMETER_COEFFS = {'a': 0.995, 't_out': 0.002, 'q_hvac': -0.003,
                    'q_solar': 0.002, 'q_int': 0.002, 't_zone_5': 0.003}

CORE_FEATURES = ('q_hvac', 'q_int', 't_zone_1', 't_zone_2', 't_zone_3',
                 't_zone_4')
CORE_COEFFS = {'a': 0.994, 'q_hvac': -0.003, 'q_int': 0.002,
               't_zone_1': 0.0015, 't_zone_2': 0.0015, 't_zone_3': 0.0015,
               't_zone_4': 0.0015}

ROOM_FEATURES = ('t_out', 'q_hvac', 'q_solar', 'q_int')
ROOM_COEFFS = {'a': 0.99, 't_out': 0.01, 'q_hvac': -0.01, 'q_solar': 0.005,
               'q_int': 0.005}


def _zone(zone_id, features, coeffs):
    return ZoneArxModel(zone_id, [coeffs['a']],
                        [[coeffs[f] for f in features]], list(features))


def five_zone_office(perimeter_coeffs=None, core_coeffs=None, **kwargs):
    """Returns a first order model of a small office with four perimeter
    zones and one core zone:

    ::

        +---------------------+
        |       north (3)     |
        |----+-----------+----|
        |    |           |    |
        |west|  core (5) |east|
        | (4)|           | (2)|
        |----+-----------+----|
        |       south (1)     |
        +---------------------+

    Each perimeter zone sees the outdoor temperature, its own solar and
    internal gains and the core temperature. The core zone sees its internal
    gains and the four perimeter temperatures. The temperature coefficients
    of every zone sum to one so a building at a uniform temperature equal to
    the outdoor temperature, without gains or cooling, stays there.

    Parameters
    ----------
    perimeter_coeffs : dictionary, optional
        Overrides entries of ``PERIMETER_COEFFS``.
    core_coeffs : dictionary, optional
        Overrides entries of ``CORE_COEFFS``.
    kwargs
        Passed to ``BuildingModel``. By default the mass flow bounds are
        [0.22, 2.2] kg/s for the perimeter zones and [0.32, 3.2] kg/s for
        the core zone.

    Returns
    -------
    model : gridhvac.rom.BuildingModel

    """
    perimeter = dict(PERIMETER_COEFFS)
    perimeter.update(perimeter_coeffs or {})
    core = dict(CORE_COEFFS)
    core.update(core_coeffs or {})

    zones = [_zone(i, PERIMETER_FEATURES, perimeter) for i in range(4)]
    zones.append(_zone(4, CORE_FEATURES, core))

    kwargs.setdefault('mdot_bounds', [(0.22, 2.2)] * 4 + [(0.32, 3.2)])
    return BuildingModel(zones, **kwargs)


def single_zone_room(coeffs=None, **kwargs):
    """Returns a first order single zone model, useful for toy control
    problems.

    Parameters
    ----------
    coeffs : dictionary, optional
        Overrides entries of ``ROOM_COEFFS``.
    kwargs
        Passed to ``BuildingModel``.

    """
    room = dict(ROOM_COEFFS)
    room.update(coeffs or {})
    return BuildingModel([_zone(0, ROOM_FEATURES, room)], **kwargs)


def office_orientations():
    """Returns the facade of each zone of ``five_zone_office``."""
    return PERIMETER_ORIENTATIONS + ('core',)
