from typing import Iterable

import numpy as np


class CompensatedSum:
    """Neumaier-compensated running sum.

    The result depends only on the values and their order, so shell-by-shell
    accumulation in canonical order is bit-reproducible.
    """

    __slots__ = ("_total", "_compensation")

    def __init__(self, start: float = 0.0):
        self._total = float(start)
        self._compensation = 0.0

    def add(self, value: float) -> "CompensatedSum":
        value = float(value)
        t = self._total + value
        if abs(self._total) >= abs(value):
            self._compensation += (self._total - t) + value
        else:
            self._compensation += (value - t) + self._total
        self._total = t
        return self

    def extend(self, values: Iterable[float]) -> "CompensatedSum":
        if not isinstance(values, np.ndarray):
            values = list(values)
        for value in np.ravel(np.asarray(values, dtype=float)):
            self.add(value)
        return self

    @property
    def value(self) -> float:
        return self._total + self._compensation


def compensated_sum(values: Iterable[float]) -> float:
    """Compensated sum of an iterable in its given order"""
    return CompensatedSum().extend(values).value
