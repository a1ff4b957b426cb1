"""Third-order forward-mode jets in k seeded directions.

A :class:`Jet3` carries a value together with its first, second and third
derivatives along k directions t_0 .. t_{k-1}.  Derivative tensors are kept
fully symmetric.  Arithmetic is truncated Taylor arithmetic, so derivatives
of composite expressions are exact up to floating point rounding.

:func:`metric_derivatives` is the entry point used by the curvature code: it
evaluates a metric function on jets and assembles the partial derivative
arrays of the metric up to order 2 or 3.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

SINGULAR_TOL = 1e-12


def _sym3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a_ij b_k + a_ik b_j + a_jk b_i for symmetric a."""
    t = np.einsum("ij,k->ijk", a, b)
    return t + np.transpose(t, (0, 2, 1)) + np.transpose(t, (2, 1, 0))


class Jet3:
    __slots__ = ("value", "d1", "d2", "d3")

    def __init__(self, value: float, d1: np.ndarray, d2: np.ndarray, d3: np.ndarray):
        self.value = float(value)
        self.d1 = d1
        self.d2 = d2
        self.d3 = d3

    @property
    def k(self) -> int:
        return self.d1.shape[0]

    @classmethod
    def constant(cls, value: float, k: int) -> "Jet3":
        return cls(value, np.zeros(k), np.zeros((k, k)), np.zeros((k, k, k)))

    @classmethod
    def variable(cls, value: float, seed: Sequence[float]) -> "Jet3":
        """Coordinate function with directional derivatives ``seed``."""
        d1 = np.asarray(seed, dtype=float)
        k = d1.shape[0]
        return cls(value, d1.copy(), np.zeros((k, k)), np.zeros((k, k, k)))

    def _lift(self, other) -> "Jet3":
        if isinstance(other, Jet3):
            return other
        return Jet3.constant(float(other), self.k)

    def __add__(self, other) -> "Jet3":
        if not isinstance(other, Jet3):
            return Jet3(self.value + other, self.d1, self.d2, self.d3)
        return Jet3(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2, self.d3 + other.d3)

    __radd__ = __add__

    def __neg__(self) -> "Jet3":
        return Jet3(-self.value, -self.d1, -self.d2, -self.d3)

    def __sub__(self, other) -> "Jet3":
        return self + (-other)

    def __rsub__(self, other) -> "Jet3":
        return (-self) + other

    def __mul__(self, other) -> "Jet3":
        if not isinstance(other, Jet3):
            c = float(other)
            return Jet3(self.value * c, self.d1 * c, self.d2 * c, self.d3 * c)
        f, g = self, other
        d1 = f.value * g.d1 + g.value * f.d1
        cross = np.outer(f.d1, g.d1)
        d2 = f.value * g.d2 + g.value * f.d2 + cross + cross.T
        d3 = f.value * g.d3 + g.value * f.d3 + _sym3(f.d2, g.d1) + _sym3(g.d2, f.d1)
        return Jet3(f.value * g.value, d1, d2, d3)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet3":
        if not isinstance(other, Jet3):
            return self * (1.0 / float(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Jet3":
        return self.reciprocal() * other

    def apply(self, f0: float, f1: float, f2: float, f3: float) -> "Jet3":
        """Compose a scalar function with derivatives f0..f3 at self.value."""
        a = self
        d1 = f1 * a.d1
        d2 = f2 * np.outer(a.d1, a.d1) + f1 * a.d2
        d3 = (
            f3 * np.einsum("i,j,k->ijk", a.d1, a.d1, a.d1)
            + f2 * _sym3(a.d2, a.d1)
            + f1 * a.d3
        )
        return Jet3(f0, d1, d2, d3)

    def reciprocal(self) -> "Jet3":
        v = self.value
        if abs(v) <= SINGULAR_TOL:
            raise ZeroDivisionError("jet division by a value too close to zero")
        return self.apply(1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4)

    def sqrt(self) -> "Jet3":
        v = self.value
        if v <= SINGULAR_TOL:
            raise ValueError("jet sqrt of a value too close to zero or negative")
        r = math.sqrt(v)
        return self.apply(r, 0.5 / r, -0.25 / (r * v), 0.375 / (r * v * v))

    def __pow__(self, n: float) -> "Jet3":
        v = self.value
        if isinstance(n, int) and n >= 0:
            out = Jet3.constant(1.0, self.k)
            for _ in range(n):
                out = out * self
            return out
        if v <= SINGULAR_TOL:
            raise ValueError("non-integer jet power needs a positive value")
        return self.apply(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2), n * (n - 1) * (n - 2) * v ** (n - 3))

    def exp(self) -> "Jet3":
        e = math.exp(self.value)
        return self.apply(e, e, e, e)

    def sin(self) -> "Jet3":
        s, c = math.sin(self.value), math.cos(self.value)
        return self.apply(s, c, -s, -c)

    def cos(self) -> "Jet3":
        s, c = math.sin(self.value), math.cos(self.value)
        return self.apply(c, -s, -c, s)

    def __repr__(self) -> str:
        return f"Jet3(value={self.value!r}, d1={self.d1.tolist()!r})"


def jsqrt(x):
    return x.sqrt() if isinstance(x, Jet3) else math.sqrt(x)


def seed_point(point: Sequence[float], directions: Sequence[int]) -> list[Jet3]:
    """Coordinates as jets, slot s differentiating along coordinate directions[s]."""
    k = len(directions)
    out = []
    for m, value in enumerate(point):
        seed = [1.0 if d == m else 0.0 for d in directions]
        out.append(Jet3.variable(value, seed) if k else Jet3.constant(value, 0))
    return out


MetricFn = Callable[[Sequence], list]


def metric_derivatives(metric_fn: MetricFn, point: Sequence[float], order: int) -> list[np.ndarray]:
    """Partial derivatives of a metric at ``point``.

    ``metric_fn`` maps a list of coordinate scalars (floats or jets) to a
    square nested list of scalars.  Returns ``[g, dg, d2g]`` for order 2 and
    additionally ``d3g`` for order 3, with derivative indices leading:
    ``dg[a, m, n] = d_a g_mn`` and so on.
    """
    if order not in (2, 3):
        raise ValueError("order must be 2 or 3")
    dim = len(point)
    g = None
    dg = None
    d2 = None
    d3 = np.zeros((dim,) * 3 + (0, 0))
    combos = itertools.combinations_with_replacement(range(dim), order)
    for combo in combos:
        jets = seed_point(point, combo)
        k = len(combo)
        rows = [[e if isinstance(e, Jet3) else Jet3.constant(e, k) for e in row] for row in metric_fn(jets)]
        n = len(rows)
        if g is None:
            g = np.array([[rows[i][j].value for j in range(n)] for i in range(n)])
            dg = np.zeros((dim, n, n))
            d2 = np.zeros((dim, dim, n, n))
            if order == 3:
                d3 = np.zeros((dim, dim, dim, n, n))
        for i in range(n):
            for j in range(n):
                jet = rows[i][j]
                for s, a in enumerate(combo):
                    dg[a, i, j] = jet.d1[s]
                for s, t in itertools.combinations(range(order), 2):
                    a, b = combo[s], combo[t]
                    d2[a, b, i, j] = d2[b, a, i, j] = jet.d2[s, t]
                if order == 3:
                    val = jet.d3[0, 1, 2]
                    for perm in set(itertools.permutations(combo)):
                        d3[perm + (i, j)] = val
    out = [g, dg, d2]
    if order == 3:
        out.append(d3)
    return out
