import threading

import numpy as np

from tundra.dataframe import DType, Schema


class CallCounter:
    """Thread-safe invocation counter for instrumenting user functions."""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def hit(self, n=1):
        with self._lock:
            self.count += n


INT_SCHEMA = Schema.of(("x", DType.INT64))
PAIR_SCHEMA = Schema.of(("k", DType.STRING), ("v", DType.INT64))


def int_rows(n):
    return [(i,) for i in range(n)]


def fvec(*vals):
    return np.asarray(vals, dtype=np.float32)
