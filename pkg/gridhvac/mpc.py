#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Receding horizon control of a first order building model with perfect
forecasts. Two solvers share one projected gradient core: 'lin' minimizes
the horizon cost of the dynamics linearized around a nominal trajectory,
'rom' repeats that around the updated trajectory and then polishes on the
nonlinear model."""

import logging
import warnings

# external libraries
import numpy as np

# local
from .codegen import generate_building_functions
from .rom import HvacCommand
from .utils import (Configuration, GridHvacConvergenceWarning, check_float,
                    check_int)

logger = logging.getLogger(__name__)

VARIANTS = ('lin', 'rom')

MAX_STEP = 1e6


class MpcConfig(Configuration):
    """Settings of the horizon solver.

    Parameters
    ==========
    horizon : integer
        Steps planned per solve.
    variant : string
        'lin' or 'rom'.
    max_iterations : integer
        Projected gradient iterations per solve ('rom' gets this many for
        its polish as well).
    tolerance : float
        Stop once no command moves more than this fraction of its range.
    sqp_iterations : integer
        Relinearization passes of the 'rom' variant.
    armijo : float
        Sufficient decrease constant of the line search.
    backtracking : float
        Step shrink factor of the line search.
    max_backtracks : integer

    """

    _fields = ('horizon', 'variant', 'max_iterations', 'tolerance',
               'sqp_iterations', 'armijo', 'backtracking', 'max_backtracks')

    def __init__(self, horizon=12, variant='lin', max_iterations=500,
                 tolerance=1e-6, sqp_iterations=10, armijo=1e-4,
                 backtracking=0.5, max_backtracks=40):
        self.horizon = horizon
        self.variant = variant
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.sqp_iterations = sqp_iterations
        self.armijo = armijo
        self.backtracking = backtracking
        self.max_backtracks = max_backtracks

    @property
    def horizon(self):
        return self._horizon

    @horizon.setter
    def horizon(self, value):
        self._horizon = check_int('horizon', value, lower=1)

    @property
    def variant(self):
        return self._variant

    @variant.setter
    def variant(self, value):
        if value not in VARIANTS:
            msg = 'variant must be one of {}, not {!r}.'
            raise ValueError(msg.format(VARIANTS, value))
        self._variant = value

    @property
    def max_iterations(self):
        return self._max_iterations

    @max_iterations.setter
    def max_iterations(self, value):
        self._max_iterations = check_int('max_iterations', value, lower=1)

    @property
    def tolerance(self):
        return self._tolerance

    @tolerance.setter
    def tolerance(self, value):
        self._tolerance = check_float('tolerance', value, lower=0.0,
                                      strict_lower=True)

    @property
    def sqp_iterations(self):
        return self._sqp_iterations

    @sqp_iterations.setter
    def sqp_iterations(self, value):
        self._sqp_iterations = check_int('sqp_iterations', value, lower=0)

    @property
    def armijo(self):
        return self._armijo

    @armijo.setter
    def armijo(self, value):
        self._armijo = check_float('armijo', value, lower=0.0, upper=1.0,
                                   strict_upper=True)

    @property
    def backtracking(self):
        return self._backtracking

    @backtracking.setter
    def backtracking(self, value):
        self._backtracking = check_float('backtracking', value, lower=0.0,
                                         upper=1.0, strict_lower=True,
                                         strict_upper=True)

    @property
    def max_backtracks(self):
        return self._max_backtracks

    @max_backtracks.setter
    def max_backtracks(self, value):
        self._max_backtracks = check_int('max_backtracks', value, lower=1)


class LinearizedDynamics(object):
    """The affine map ``T_next = A T + B u + d`` matching the building update
    to first order around an operating point.

    Parameters
    ==========
    A : ndarray, shape(N, N)
    B : ndarray, shape(N, N + 1)
    d : ndarray, shape(N,)

    """

    def __init__(self, A, B, d):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.d = np.asarray(d, dtype=float)
        n = len(self.d)
        if self.A.shape != (n, n) or self.B.shape != (n, n + 1):
            msg = 'Inconsistent shapes A {}, B {} and d {}.'
            raise ValueError(msg.format(self.A.shape, self.B.shape,
                                        self.d.shape))

    def predict(self, temps, u):
        return self.A.dot(temps) + self.B.dot(u) + self.d


def linearize_dynamics(model, temps, cmd, exo, functions=None):
    """Returns the LinearizedDynamics of a first order BuildingModel at
    (temps, cmd, exo).

    Parameters
    ==========
    model : gridhvac.rom.BuildingModel
    temps : array_like, shape(N,)
    cmd : gridhvac.rom.HvacCommand
    exo : gridhvac.rom.ExogenousRecord
    functions : gridhvac.codegen.BuildingFunctions, optional
        Generated for ``model`` when not given.

    """
    if functions is None:
        functions = generate_building_functions(model)
    x = np.asarray(temps, dtype=float)
    u = cmd.as_vector()
    w = exo.vector()
    A, B = functions.jacobians(x, u, w)
    d = functions.step(x, u, w) - A.dot(x) - B.dot(u)
    return LinearizedDynamics(A, B, d)


def _discomfort(temps, lower, upper):
    """Returns the summed discomfort and its gradient."""
    above = temps - upper
    below = lower - temps
    excursion = np.maximum(np.maximum(above, below), 0.0)
    value = np.sum(np.maximum(excursion, excursion ** 2))
    slope = np.where(excursion > 1.0, 2.0 * excursion,
                     np.where(excursion > 0.0, 1.0, 0.0))
    return value, np.where(above > 0.0, slope, -slope)


class _HorizonProblem(object):
    """The horizon cost of a plan and its adjoint gradient for given
    transition and power functions."""

    def __init__(self, temps, forecast, model, transition, power):
        self.temps = np.asarray(temps, dtype=float)
        self.forecast = forecast
        self.model = model
        self.transition = transition
        self.power = power
        self.weights = forecast.weights * forecast.kappa

    def __call__(self, plan, gradient=False):
        f = self.forecast
        c, dt = self.model.power_c, f.dt
        T = self.temps
        total = 0.0
        dT, du, As, Bs = [], [], [], []
        for k, u in enumerate(plan):
            T_next, A, B = self.transition(k, T, u, gradient)
            raw, g = self.power(k, u, gradient)
            power = max(raw, c)
            D, dD = _discomfort(T_next, f.band_lower[k], f.band_upper[k])
            excess = power - f.p_limit[k]
            V = excess ** 2 if excess >= 0.0 else 0.0
            w_d, w_e, w_v = self.weights[k]
            total += w_d * D + w_e * power * dt + w_v * V
            if gradient:
                dP = w_e * dt + (2.0 * w_v * excess if excess >= 0.0 else 0.0)
                dT.append(w_d * dD)
                du.append(dP * g if raw >= c else np.zeros_like(u))
                As.append(A)
                Bs.append(B)
            T = T_next
        if not gradient:
            return total
        grad = np.empty_like(plan)
        mu = np.zeros_like(self.temps)
        for k in reversed(range(len(plan))):
            mu = mu + dT[k]
            grad[k] = Bs[k].T.dot(mu) + du[k]
            mu = As[k].T.dot(mu)
        return total, grad


def _true_problem(temps, forecast, model, functions):
    exo = forecast.exogenous

    def transition(k, T, u, jacobians):
        T_next = functions.step(T, u, exo[k])
        if jacobians:
            A, B = functions.jacobians(T, u, exo[k])
            return T_next, A, B
        return T_next, None, None

    def power(k, u, gradient):
        g = functions.power_gradient(u, exo[k]) if gradient else None
        return functions.power(u, exo[k]), g

    return _HorizonProblem(temps, forecast, model, transition, power)


def _linear_problem(plan, temps, forecast, model, functions):
    """Returns the horizon problem with the dynamics and power linearized
    along the trajectory of ``plan``."""
    exo = forecast.exogenous
    T = np.asarray(temps, dtype=float)
    maps, powers = [], []
    for k, u in enumerate(plan):
        A, B = functions.jacobians(T, u, exo[k])
        T_next = functions.step(T, u, exo[k])
        maps.append(LinearizedDynamics(A, B, T_next - A.dot(T) - B.dot(u)))
        powers.append((functions.power(u, exo[k]),
                       functions.power_gradient(u, exo[k]), u.copy()))
        T = T_next

    def transition(k, T, u, jacobians):
        m = maps[k]
        return m.predict(T, u), m.A, m.B

    def power(k, u, gradient):
        p, g, u0 = powers[k]
        return p + g.dot(u - u0), g

    return _HorizonProblem(temps, forecast, model, transition, power)


class _Scaling(object):
    """Maps plans to [0, 1] coordinates and back."""

    def __init__(self, model, horizon):
        self.lower = np.tile(model.command_lower, (horizon, 1))
        self.upper = np.tile(model.command_upper, (horizon, 1))
        self.span = self.upper - self.lower

    def to_unit(self, plan):
        return np.clip((plan - self.lower) / self.span, 0.0, 1.0)

    def to_plan(self, z):
        return np.clip(self.lower + z * self.span, self.lower, self.upper)

    def objective(self, problem):
        def f(z, gradient=False):
            if gradient:
                cost, grad = problem(self.to_plan(z), True)
                return cost, grad * self.span
            return problem(self.to_plan(z))
        return f


def _projected_gradient(objective, z, config):
    """Minimizes ``objective`` over the unit box by projected gradient
    descent with an Armijo backtracking line search. Returns the final
    point, its cost, the iteration count, whether it converged and the cost
    after every accepted step, which never increases."""
    z = np.clip(z, 0.0, 1.0)
    f, g = objective(z, True)
    history = [f]
    step = 1.0
    for iteration in range(1, config.max_iterations + 1):
        for _ in range(config.max_backtracks):
            z_new = np.clip(z - step * g, 0.0, 1.0)
            f_new = objective(z_new)
            if f_new <= f + config.armijo * np.sum(g * (z_new - z)):
                break
            step *= config.backtracking
        else:
            # no descent along the projection arc
            return z, f, iteration, True, history
        change = np.max(np.abs(z_new - z))
        z, f = z_new, f_new
        history.append(f)
        if change < config.tolerance:
            return z, f, iteration, True, history
        f, g = objective(z, True)
        step = min(step / config.backtracking, MAX_STEP)
    return z, f, config.max_iterations, False, history


class MpcSolution(object):
    """A horizon plan.

    Attributes
    ==========
    plan : ndarray, shape(H, N + 1)
        Rows of (mdot_1, ..., mdot_N, t_da).
    predicted_cost : float
        Horizon cost of the plan under the nonlinear model.
    iterations : integer
        Projected gradient iterations used.
    converged : boolean
        False when the iteration cap stopped the solver.
    cost_history : list of float
        Solver objective after each accepted step.

    """

    def __init__(self, plan, predicted_cost, iterations, converged,
                 cost_history, variant):
        self.plan = plan
        self.predicted_cost = predicted_cost
        self.iterations = iterations
        self.converged = converged
        self.cost_history = cost_history
        self.variant = variant

    @property
    def commands(self):
        return [HvacCommand.from_vector(u) for u in self.plan]

    @property
    def first_command(self):
        return HvacCommand.from_vector(self.plan[0])


def solve_horizon(temps, forecast, model, config=None, functions=None,
                  initial_plan=None):
    """Returns the MpcSolution minimizing the horizon cost from ``temps``.

    The stage cost of step k is the weighted sum of the discomfort of the
    temperatures after the step, the metered energy and the limit
    violation, the same cost the environment charges.

    Parameters
    ==========
    temps : array_like, shape(N,)
    forecast : gridhvac.env.ForecastWindow
        At least ``config.horizon`` steps.
    model : gridhvac.rom.BuildingModel
        First order.
    config : MpcConfig, optional
    functions : gridhvac.codegen.BuildingFunctions, optional
    initial_plan : ndarray, shape(H, N + 1), optional
        Nominal plan; defaults to the middle of the command bounds.

    """
    config = config if config is not None else MpcConfig()
    H = config.horizon
    if len(forecast) < H:
        msg = 'The forecast covers {} steps, fewer than the horizon {}.'
        raise ValueError(msg.format(len(forecast), H))
    if functions is None:
        functions = generate_building_functions(model)
    forecast = forecast.head(H)
    scaling = _Scaling(model, H)
    if initial_plan is None:
        plan = 0.5 * (scaling.lower + scaling.upper)
    else:
        plan = scaling.to_plan(scaling.to_unit(np.asarray(initial_plan,
                                                          dtype=float)))
    z = scaling.to_unit(plan)
    true_cost = scaling.objective(_true_problem(temps, forecast, model,
                                                functions))

    def linear_solve(z):
        problem = _linear_problem(scaling.to_plan(z), temps, forecast, model,
                                  functions)
        return _projected_gradient(scaling.objective(problem), z, config)

    z, _, iterations, converged, history = linear_solve(z)
    if config.variant == 'rom':
        for _ in range(config.sqp_iterations):
            z_lin, _, n, _, _ = linear_solve(z)
            iterations += n
            direction = z_lin - z
            current = true_cost(z)
            alpha = 1.0
            while alpha > 1e-4 and true_cost(z + alpha * direction) > current:
                alpha *= 0.5
            if alpha <= 1e-4:
                break
            z = z + alpha * direction
            if alpha * np.max(np.abs(direction)) < config.tolerance:
                break
        z, _, n, converged, history = _projected_gradient(true_cost, z,
                                                          config)
        iterations += n

    plan = scaling.to_plan(z)
    cost = true_cost(scaling.to_unit(plan))
    if not converged:
        msg = ('The {} horizon solve stopped at the iteration cap of {} with '
               'cost {}.')
        warnings.warn(msg.format(config.variant, config.max_iterations, cost),
                      GridHvacConvergenceWarning)
    logger.debug('MPC %s solve: cost %.6f, %d iterations, converged %s',
                 config.variant, cost, iterations, converged)
    return MpcSolution(plan, cost, iterations, converged, history,
                       config.variant)


class MpcController(object):
    """A receding horizon controller. Each ``step`` solves the horizon
    warm started from the previous plan shifted by one step and returns the
    first command.

    Parameters
    ==========
    model : gridhvac.rom.BuildingModel
        First order.
    config : MpcConfig, optional
    functions : gridhvac.codegen.BuildingFunctions, optional

    """

    def __init__(self, model, config=None, functions=None):
        self.model = model
        self.config = config if config is not None else MpcConfig()
        if functions is None:
            functions = generate_building_functions(model)
        self.functions = functions
        self.reset()

    def reset(self):
        self.plan = None
        self.last_solution = None

    def step(self, temps, forecast):
        """Returns the HvacCommand to apply now."""
        if len(forecast) < self.config.horizon:
            msg = 'The forecast covers {} steps, fewer than the horizon {}.'
            raise ValueError(msg.format(len(forecast), self.config.horizon))
        initial = None
        if self.plan is not None:
            initial = np.vstack((self.plan[1:], self.plan[-1:]))
        solution = solve_horizon(temps, forecast, self.model, self.config,
                                 self.functions, initial)
        self.plan = solution.plan
        self.last_solution = solution
        return solution.first_command


def mpc_controller_step(controller, temps, forecast):
    """Returns the next command of an MpcController."""
    return controller.step(temps, forecast)
