"""
This is a script to compare the time taken by one control step of the
building model evaluated directly in numpy against the functions generated
with sympy in gridhvac.codegen.

The script outputs the average time taken by the next temperature, the
jacobians and the metered power for the five zone reference building, the
time taken by one environment step and one whole episode with random actions
and the time taken by one receding horizon solve of each MPC variant.

"""

import timeit

import numpy as np

from gridhvac.codegen import generate_building_functions
from gridhvac.env import (BuildingEnv, ScenarioConfig, evaluation_dr_event,
                          metered_power)
from gridhvac.models import five_zone_office
from gridhvac.mpc import MpcConfig, solve_horizon
from gridhvac.rom import (ExogenousGeneratorConfig, HvacCommand,
                          generate_synthetic_exogenous, step_temperature)

model = five_zone_office()
functions = generate_building_functions(model)

day = generate_synthetic_exogenous(ExogenousGeneratorConfig(), 1, 0)
exo = day[150]
w = exo.vector()

temps = np.array([24.0, 25.0, 23.5, 24.5, 24.0])
cmd = HvacCommand([1.0, 1.2, 0.8, 1.1, 1.5], 13.0)
u = cmd.as_vector()

itr = 1000
print('The time taken by one model step in {} iterations'.format(itr))

time = timeit.repeat("step_temperature(model, temps, cmd, exo)",
                     "from __main__ import step_temperature, model, temps, "
                     "cmd, exo", number=itr)
print('numpy next temperature:')
print(sum(time) / 3)

time = timeit.repeat("metered_power(cmd, exo.t_out, model)",
                     "from __main__ import metered_power, model, cmd, exo",
                     number=itr)
print('numpy metered power:')
print(sum(time) / 3)

for name in ('step', 'jacobians'):
    time = timeit.repeat("functions.{}(temps, u, w)".format(name),
                         "from __main__ import functions, temps, u, w",
                         number=itr)
    print('generated {}:'.format(name))
    print(sum(time) / 3)

env = BuildingEnv(model, ScenarioConfig())
env.reset(day, dr_event=evaluation_dr_event(env.config))
for _ in range(150):
    env.step_command(cmd)
forecast = env.forecast(12)

itr = 5
print('The time taken by one horizon solve in {} iterations'.format(itr))

for variant in ('lin', 'rom'):
    config = MpcConfig(variant=variant)
    time = timeit.repeat("solve_horizon(env.temps, forecast, model, config, "
                         "functions)",
                         "from __main__ import solve_horizon, env, forecast, "
                         "model, config, functions", number=itr)
    print('MPC variant "{}":'.format(variant))
    print(sum(time) / 3)

rng = np.random.default_rng(0)
actions = rng.uniform(-1.0, 1.0, (288, 6))


def rollout():
    env = BuildingEnv(model, ScenarioConfig())
    env.reset(day, dr_event=evaluation_dr_event(env.config))
    for action in actions:
        env.step(action)
    return env.episode_cost


def single_step():
    env.reset(day, dr_event=None)
    env.step(actions[0])

itr = 200
print('The time taken by one environment step in {} iterations'.format(itr))
time = timeit.repeat("single_step()", "from __main__ import single_step",
                     number=itr)
print(sum(time) / 3)

itr = 5
print('The time taken by one 288 step episode in {} iterations'.format(itr))
time = timeit.repeat("rollout()", "from __main__ import rollout",
                     number=itr)
print(sum(time) / 3)
