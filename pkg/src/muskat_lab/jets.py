"""Truncated Taylor series ("jets") in one variable.

A jet of order ``p`` stores the coefficients ``a_0, ..., a_p`` of
``a(eps) = sum_k a_k eps**k`` for many base points at once; the first axis
indexes the power of ``eps`` and the remaining axes are broadcast.  The
``k``-th derivative of the represented function at the base point is
``k! * a_k``.

The arithmetic is used to differentiate compositions such as
``K(F(z + eps) - F(w + eps))`` exactly to a fixed order without
symbolic expansion.
"""
from __future__ import annotations

from math import factorial

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @classmethod
    def variable(cls, x0, order: int) -> "Jet":
        """The jet of ``x0 + eps``."""
        x0 = np.asarray(x0)
        c = np.zeros((order + 1,) + x0.shape, dtype=np.result_type(x0, float))
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs) -> "Jet":
        """Build from ``[f, f', f'', ...]`` evaluated at the base points."""
        derivs = np.asarray(derivs)
        scale = np.array([1.0 / factorial(k) for k in range(derivs.shape[0])])
        scale = scale.reshape((-1,) + (1,) * (derivs.ndim - 1))
        return cls(derivs * scale)

    def derivative(self, k: int):
        return factorial(k) * self.c[k]

    def derivatives(self):
        scale = np.array([factorial(k) for k in range(self.order + 1)], dtype=float)
        return self.c * scale.reshape((-1,) + (1,) * (self.c.ndim - 1))

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other.c
        other = np.asarray(other)
        c = np.zeros((self.order + 1,) + np.broadcast_shapes(other.shape, self.c.shape[1:]),
                     dtype=np.result_type(other, self.c))
        c[0] = other
        return c

    def __add__(self, other):
        return Jet(self.c + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.c - self._coerce(other))

    def __rsub__(self, other):
        return Jet(self._coerce(other) - self.c)

    def __neg__(self):
        return Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            # plain arrays act as constants, broadcast over the trailing axes
            return Jet(self.c * np.asarray(other))
        a, b = self.c, other.c
        p = self.order
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((p + 1,) + shape, dtype=np.result_type(a, b))
        for k in range(p + 1):
            acc = a[0] * b[k]
            for i in range(1, k + 1):
                acc = acc + a[i] * b[k - i]
            out[k] = acc
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        p = self.order
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        inv0 = 1.0 / a[0]
        out[0] = inv0
        for k in range(1, p + 1):
            acc = a[1] * out[k - 1]
            for i in range(2, k + 1):
                acc = acc + a[i] * out[k - i]
            out[k] = -inv0 * acc
        return Jet(out)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return Jet(self.c / np.asarray(other))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    # elementary functions -------------------------------------------------
    def exp(self) -> "Jet":
        a = self.c
        out = np.zeros_like(a, dtype=np.result_type(a, float))
        out[0] = np.exp(a[0])
        for k in range(1, self.order + 1):
            acc = 1 * a[1] * out[k - 1]
            for i in range(2, k + 1):
                acc = acc + i * a[i] * out[k - i]
            out[k] = acc / k
        return Jet(out)

    def _trig_pair(self, s0, c0, sign):
        # s' = c a', c' = sign * s a'
        a = self.c
        s = np.zeros_like(a, dtype=np.result_type(a, float))
        c = np.zeros_like(s)
        s[0], c[0] = s0, c0
        for k in range(1, self.order + 1):
            acc_s = 1 * a[1] * c[k - 1]
            acc_c = 1 * a[1] * s[k - 1]
            for i in range(2, k + 1):
                acc_s = acc_s + i * a[i] * c[k - i]
                acc_c = acc_c + i * a[i] * s[k - i]
            s[k] = acc_s / k
            c[k] = sign * acc_c / k
        return Jet(s), Jet(c)

    def sincos(self):
        return self._trig_pair(np.sin(self.c[0]), np.cos(self.c[0]), -1.0)

    def sinhcosh(self):
        return self._trig_pair(np.sinh(self.c[0]), np.cosh(self.c[0]), 1.0)

    def sin(self) -> "Jet":
        return self.sincos()[0]

    def cos(self) -> "Jet":
        return self.sincos()[1]

    def sinh(self) -> "Jet":
        return self.sinhcosh()[0]

    def cosh(self) -> "Jet":
        return self.sinhcosh()[1]

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.c.shape[1:]})"
