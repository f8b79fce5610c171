#!/usr/bin/env python

import numpy as np
import pytest

from ... import models
from ...rom import (BuildingModel, ExogenousSeries, HvacCommand, ZoneArxModel,
                    hvac_power, step_temperature)
from ..jacobian_generators import (BuildingFunctionGenerator,
                                   LambdifyBuildingFunctionGenerator,
                                   generate_building_functions)


def central_difference(f, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    columns = []
    for j in range(len(x)):
        dx = np.zeros_like(x)
        dx[j] = eps
        columns.append((np.atleast_1d(f(x + dx)) -
                        np.atleast_1d(f(x - dx))) / (2.0 * eps))
    return np.column_stack(columns)


def random_point(model, rng):
    n = model.n_zones
    x = rng.uniform(20.0, 28.0, n)
    u = rng.uniform(model.command_lower, model.command_upper)
    w = np.hstack((rng.uniform(20.0, 35.0), rng.uniform(0.0, 6.0, n),
                   rng.uniform(0.0, 4.0, n)))
    return x, u, w


def record(w, n):
    return ExogenousSeries([0], [w[0]], [w[1:n + 1]], [w[n + 1:]],
                           [True])[0]


class TestLambdifyGenerator():

    def setup_method(self):
        self.model = models.five_zone_office()
        self.functions = generate_building_functions(self.model)
        self.rng = np.random.default_rng(4)

    def test_step_matches_the_model(self):
        n = self.model.n_zones
        for _ in range(20):
            x, u, w = random_point(self.model, self.rng)
            expected = step_temperature(self.model, x,
                                        HvacCommand.from_vector(u),
                                        record(w, n))
            np.testing.assert_allclose(self.functions.step(x, u, w),
                                       expected, rtol=1e-12)

    def test_power_matches_the_model(self):
        for _ in range(20):
            x, u, w = random_point(self.model, self.rng)
            expected = hvac_power(HvacCommand.from_vector(u), w[0],
                                  self.model)
            np.testing.assert_allclose(self.functions.power(u, w), expected,
                                       rtol=1e-12)

    def test_jacobians(self):
        for _ in range(20):
            x, u, w = random_point(self.model, self.rng)
            A, B = self.functions.jacobians(x, u, w)
            assert A.shape == (5, 5)
            assert B.shape == (5, 6)
            np.testing.assert_allclose(
                A, central_difference(lambda v: self.functions.step(v, u, w),
                                      x), rtol=1e-6, atol=1e-8)
            np.testing.assert_allclose(
                B, central_difference(lambda v: self.functions.step(x, v, w),
                                      u), rtol=1e-6, atol=1e-8)

    def test_power_gradient(self):
        for _ in range(20):
            x, u, w = random_point(self.model, self.rng)
            gradient = self.functions.power_gradient(u, w)
            assert gradient.shape == (6,)
            np.testing.assert_allclose(
                gradient,
                central_difference(lambda v: self.functions.power(v, w),
                                   u).reshape(-1), rtol=1e-6, atol=1e-6)

    def test_cooling_enters_through_the_own_zone(self):
        x, u, w = random_point(self.model, self.rng)
        _, B = self.functions.jacobians(x, u, w)
        flows = B[:, :5]
        np.testing.assert_array_equal(flows - np.diag(np.diag(flows)), 0.0)
        assert np.all(np.diag(flows) < 0.0)
        assert np.all(B[:, 5] > 0.0)


def test_single_zone_constants():
    model = models.single_zone_room(power_a=2.0, power_c=1.0)
    functions = generate_building_functions(model)
    np.testing.assert_allclose(functions.constants, [2.0, 0.0076, 1.0, 1.0])
    # 2 * (30 - 12) * 1 + 0.0076 + 1
    np.testing.assert_allclose(functions.power([1.0, 12.0], [30.0, 0.0, 0.0]),
                               37.0076)


def test_higher_order_models_are_rejected():
    zone = ZoneArxModel(0, [0.6, 0.3], [[0.1]], ['t_out'])
    with pytest.raises(ValueError):
        generate_building_functions(BuildingModel([zone]))


def test_generator_choice():
    model = models.single_zone_room()
    with pytest.raises(NotImplementedError):
        generate_building_functions(model, generator='cython')
    with pytest.raises(NotImplementedError):
        BuildingFunctionGenerator(model).generate()
    functions = generate_building_functions(
        model, generator=LambdifyBuildingFunctionGenerator)
    np.testing.assert_allclose(
        functions.step([24.0], [1.0, 13.0], [30.0, 2.0, 1.0]), [23.965])
