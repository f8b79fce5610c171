#!/usr/bin/env python

import pytest

from ..parallel import WorkerPool
from ..utils import (MalformedFileError, MissingArtifactError,
                     WorkerFailureError)


def power(base, exponent):
    return base ** exponent


class Flaky(object):
    """Raises ``error`` on the first ``failures`` calls in the calling
    process."""

    def __init__(self, failures, error=BrokenPipeError('lost worker')):
        self.failures = failures
        self.error = error
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        if self.calls <= self.failures:
            raise self.error
        return 2 * x


class TestWorkerPool():

    def setup_method(self):
        self.arguments = [(b, e) for b in range(5) for e in range(3)]
        self.expected = [b ** e for b, e in self.arguments]

    def test_serial_map_keeps_order(self):
        with WorkerPool(power) as pool:
            assert pool.map(self.arguments) == self.expected

    def test_parallel_map_matches_serial(self):
        with WorkerPool(power, worker_count=2) as pool:
            assert pool.map(self.arguments) == self.expected
            # the pool is reused between batches
            assert pool.map(self.arguments[::-1]) == self.expected[::-1]

    def test_failed_batch_is_retried(self):
        function = Flaky(1)
        with WorkerPool(function) as pool:
            assert pool.map([(1,), (2,)]) == [2, 4]

    def test_repeated_failure(self):
        with WorkerPool(Flaky(10), retries=1) as pool:
            with pytest.raises(WorkerFailureError) as info:
                pool.map([(1,)])
        assert 'BrokenPipeError' in str(info.value)
        assert '2 times' in str(info.value)

    def test_function_errors_are_not_retried(self):
        for error in (ValueError('bad input'),
                      MalformedFileError('data.csv', 3, 'not a number'),
                      MissingArtifactError('model.json'),
                      RuntimeError('diverged')):
            function = Flaky(1, error)
            with WorkerPool(function) as pool:
                with pytest.raises(type(error)):
                    pool.map([(1,), (2,)])
            assert function.calls == 1

    def test_invalid_worker_count(self):
        with pytest.raises(ValueError):
            WorkerPool(power, worker_count=0)
