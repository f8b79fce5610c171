#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Order preserving parallel map over worker processes."""

import logging
import multiprocessing

# local
from .utils import MissingArtifactError, WorkerFailureError, check_int

logger = logging.getLogger(__name__)

# failures of the pool itself; errors raised by the function are not retried
RETRIED_ERRORS = (OSError, EOFError, multiprocessing.ProcessError)

_worker_function = None


def _initialize(function):
    global _worker_function
    _worker_function = function


def _call(args):
    return _worker_function(*args)


def _is_retried(error):
    return isinstance(error, RETRIED_ERRORS) and not isinstance(
        error, (MissingArtifactError, FileNotFoundError, PermissionError))


class WorkerPool(object):
    """Evaluates one function on many argument tuples.

    The function is sent to each worker process once, when the pool starts.
    Results come back in argument order whatever the worker count, so a run
    gives identical results with 1 or many workers. A batch lost to a
    process or pipe failure is run again on a fresh pool; a second failure
    raises WorkerFailureError. Any other exception of the function, e.g. a
    ValueError of invalid input, propagates unchanged on the first attempt.

    Parameters
    ==========
    function : callable
        Must be picklable, e.g. a module level function or an instance of a
        module level class.
    worker_count : integer
        1 evaluates in the calling process.
    retries : integer

    """

    def __init__(self, function, worker_count=1, retries=1):
        self.function = function
        self.worker_count = check_int('worker_count', worker_count, lower=1)
        self.retries = check_int('retries', retries, lower=0)
        self._pool = None

    def _start(self):
        if self._pool is None and self.worker_count > 1:
            self._pool = multiprocessing.Pool(self.worker_count,
                                              initializer=_initialize,
                                              initargs=(self.function,))
        return self._pool

    def _map(self, arguments):
        pool = self._start()
        if pool is None:
            return [self.function(*args) for args in arguments]
        return pool.map(_call, arguments)

    def map(self, arguments):
        """Returns ``[function(*args) for args in arguments]``."""
        arguments = [tuple(args) for args in arguments]
        for attempt in range(self.retries + 1):
            try:
                return self._map(arguments)
            except Exception as e:
                if not _is_retried(e):
                    self.close()
                    raise
                error = e
                logger.warning('Worker batch of %d tasks failed on attempt '
                               '%d: %s: %s', len(arguments), attempt + 1,
                               type(e).__name__, e)
                self.close()
        msg = 'Worker batch failed {} times, last error {}: {}'
        raise WorkerFailureError(msg.format(self.retries + 1,
                                            type(error).__name__, error))

    def close(self):
        if self._pool is not None:
            self._pool.terminate()
            self._pool.join()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
