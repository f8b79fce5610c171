#!/usr/bin/env python

"""Symbolic derivation of the first order building update and the HVAC
power model, and generation of numerical functions for them and their
Jacobians."""

# external libraries
import numpy as np
import sympy as sm
import sympy.physics.mechanics as me


class BuildingFunctions(object):
    """Numerical functions generated from a building's symbolic equations.
    The argument vectors are ordered as such::

        x = [T_1, ..., T_N]
        u = [mdot_1, ..., mdot_N, T_da]
        w = [T_out, Q_solar_1, ..., Q_solar_N, Q_int_1, ..., Q_int_N]

    """

    def __init__(self, step, jacobians, power, power_gradient, constants):
        self._step = step
        self._jacobians = jacobians
        self._power = power
        self._power_gradient = power_gradient
        self.constants = np.asarray(constants, dtype=float)

    def step(self, x, u, w):
        """Returns the zone temperatures at the next step, shape(N,)."""
        return np.asarray(self._step(x, u, w, self.constants),
                          dtype=float).reshape(-1)

    def jacobians(self, x, u, w):
        """Returns the Jacobians of ``step`` with respect to x, shape(N, N),
        and u, shape(N, N + 1)."""
        A, B = self._jacobians(x, u, w, self.constants)
        n = len(x)
        return (np.asarray(A, dtype=float).reshape(n, n),
                np.asarray(B, dtype=float).reshape(n, n + 1))

    def power(self, u, w):
        return float(np.squeeze(self._power(u, w, self.constants)))

    def power_gradient(self, u, w):
        """Returns the gradient of ``power`` with respect to u."""
        return np.asarray(self._power_gradient(u, w, self.constants),
                          dtype=float).reshape(-1)


class BuildingFunctionGenerator(object):
    """This is an abstract base class for the generators. It builds the
    symbolic equations of a first order BuildingModel; a subclass turns them
    into numerical functions.

    Parameters
    ==========
    model : gridhvac.rom.BuildingModel
        Every zone must have one autoregressive and one input lag.

    """

    def __init__(self, model):
        if not model.is_first_order:
            msg = ('Only first order zone models (n_a = n_b = 1) can be '
                   'generated.')
            raise ValueError(msg)
        self.model = model
        n = model.n_zones
        self.temperatures = sm.symbols('T1:{}'.format(n + 1))
        self.flows = sm.symbols('mdot1:{}'.format(n + 1))
        self.discharge_temperature = sm.Symbol('T_da')
        self.outdoor_temperature = sm.Symbol('T_out')
        self.solar_gains = sm.symbols('Qs1:{}'.format(n + 1))
        self.internal_gains = sm.symbols('Qi1:{}'.format(n + 1))
        self.constants = sm.symbols('a, b, c, C_p')

        self.states = list(self.temperatures)
        self.controls = list(self.flows) + [self.discharge_temperature]
        self.exogenous = ([self.outdoor_temperature] +
                          list(self.solar_gains) + list(self.internal_gains))
        self.inputs = [self.states, self.controls, self.exogenous,
                       list(self.constants)]

    def constant_values(self):
        m = self.model
        return [m.power_a, m.power_b, m.power_c, m.c_p]

    def _feature(self, zone, feature):
        i = zone.zone_id
        c_p = self.constants[3]
        if feature == 't_out':
            return self.outdoor_temperature
        elif feature == 'q_hvac':
            return c_p * self.flows[i] * (self.temperatures[i] -
                                          self.discharge_temperature)
        elif feature == 'q_solar':
            return self.solar_gains[i]
        elif feature == 'q_int':
            return self.internal_gains[i]
        else:
            return self.temperatures[int(feature.split('_')[-1]) - 1]

    def next_temperatures(self):
        """Returns the symbolic zone temperatures at the next step as a
        column matrix."""
        rows = []
        for zone in self.model.zones:
            expr = float(zone.a_coeffs[0]) * self.temperatures[zone.zone_id]
            for coeff, feature in zip(zone.b_coeffs[0], zone.feature_spec):
                expr += float(coeff) * self._feature(zone, feature)
            rows.append(expr)
        return sm.Matrix(rows)

    def power(self):
        a, b, c, _ = self.constants
        total = sum(self.flows)
        return (a * (self.outdoor_temperature - self.discharge_temperature) *
                total + b * total ** 3 + c)

    def generate(self):
        raise NotImplementedError


class LambdifyBuildingFunctionGenerator(BuildingFunctionGenerator):

    def _lambdify(self, inputs, outputs):
        subs = {}
        vec_inputs = []
        vec_names = {id(self.states): 'x', id(self.controls): 'u',
                     id(self.exogenous): 'w', id(self.inputs[3]): 'p'}
        for syms in inputs:
            v = sm.DeferredVector(vec_names[id(syms)])
            for i, sym in enumerate(syms):
                subs[sym] = v[i]
            vec_inputs.append(v)

        outputs = [me.msubs(output, subs) for output in outputs]

        modules = [{'ImmutableMatrix': np.array}, 'numpy']

        return sm.lambdify(vec_inputs, outputs, modules=modules)

    def generate(self):
        x, u, w, p = self.inputs
        next_temps = self.next_temperatures()
        power = sm.Matrix([self.power()])

        step = self._lambdify(self.inputs, [next_temps])
        jacobians = self._lambdify(self.inputs,
                                   [next_temps.jacobian(x),
                                    next_temps.jacobian(u)])
        power_f = self._lambdify([u, w, p], [power])
        gradient = self._lambdify([u, w, p], [power.jacobian(u)])

        return BuildingFunctions(lambda *args: step(*args)[0],
                                 jacobians,
                                 lambda *args: power_f(*args)[0],
                                 lambda *args: gradient(*args)[0],
                                 self.constant_values())


def generate_building_functions(model, generator='lambdify'):
    """Returns a ``BuildingFunctions`` for a first order BuildingModel.

    Parameters
    ==========
    model : gridhvac.rom.BuildingModel
    generator : string or BuildingFunctionGenerator subclass, optional
        The method used for generating the numerical functions. 'lambdify'
        is the only string option. You can also pass in a custom subclass
        of BuildingFunctionGenerator.

    """

    generators = {'lambdify': LambdifyBuildingFunctionGenerator}

    if isinstance(generator, type) and \
            issubclass(generator, BuildingFunctionGenerator):
        return generator(model).generate()
    try:
        Generator = generators[generator]
    except KeyError:
        msg = '{} is not a valid generator.'.format(generator)
        raise NotImplementedError(msg)
    return Generator(model).generate()
