# -*- coding: utf-8 -*-
"""
Truncated derivative jets

A Jet holds f(x), f'(x), ..., f^(n)(x) at one point. Arithmetic follows the
Leibniz rule, so composite expressions such as (V_x^2 / V_xx)_x come out
exact from a derivative stack instead of nested finite differences.
"""

import math
from typing import Sequence, Union

import numpy as np


Number = Union[int, float]


class Jet:
    """Derivatives of a scalar function at a point, orders 0..n"""

    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence[float]):
        self.c = np.asarray(coeffs, dtype=float)
        if self.c.ndim != 1 or self.c.size == 0:
            raise ValueError("a jet needs at least the function value")

    @property
    def order(self) -> int:
        return self.c.size - 1

    @property
    def value(self) -> float:
        return float(self.c[0])

    def __getitem__(self, k: int) -> float:
        return float(self.c[k])

    def __repr__(self) -> str:
        return f"Jet({self.c.tolist()})"

    def derivative(self) -> "Jet":
        if self.order == 0:
            raise ValueError("jet has no derivative information left")
        return Jet(self.c[1:])

    # ============ Arithmetic ============

    @staticmethod
    def _align(a: "Jet", b: "Jet"):
        n = min(a.order, b.order) + 1
        return a.c[:n], b.c[:n], n

    def __neg__(self) -> "Jet":
        return Jet(-self.c)

    def __add__(self, other: Union["Jet", Number]) -> "Jet":
        if isinstance(other, Jet):
            a, b, _ = self._align(self, other)
            return Jet(a + b)
        out = self.c.copy()
        out[0] += other
        return Jet(out)

    __radd__ = __add__

    def __sub__(self, other: Union["Jet", Number]) -> "Jet":
        return self + (-other)

    def __rsub__(self, other: Number) -> "Jet":
        return (-self) + other

    def __mul__(self, other: Union["Jet", Number]) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.c * other)
        a, b, n = self._align(self, other)
        out = np.empty(n)
        for k in range(n):
            out[k] = math.fsum(math.comb(k, j) * a[j] * b[k - j] for j in range(k + 1))
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other: Union["Jet", Number]) -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.c / other)
        a, b, n = self._align(self, other)
        if b[0] == 0.0:
            raise ZeroDivisionError("jet division by a function vanishing at the point")
        out = np.empty(n)
        for k in range(n):
            acc = a[k] - math.fsum(math.comb(k, j) * b[j] * out[k - j] for j in range(1, k + 1))
            out[k] = acc / b[0]
        return Jet(out)

    def __rtruediv__(self, other: Number) -> "Jet":
        unit = np.zeros_like(self.c)
        unit[0] = other
        return Jet(unit) / self

    def exp(self) -> "Jet":
        out = np.empty_like(self.c)
        out[0] = math.exp(self.c[0])
        for k in range(self.order):
            out[k + 1] = math.fsum(math.comb(k, j) * self.c[j + 1] * out[k - j] for j in range(k + 1))
        return Jet(out)
