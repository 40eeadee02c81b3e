"""Truncated multivariate Taylor arithmetic.

A :class:`Series` stores the Taylor coefficients ``c_a = d^a f / a!`` of a
(possibly tensor-valued) function of ``nvars`` variables, for every
multi-index ``a`` of total degree at most ``order``.  Coefficients live on
the last axis of ``data``; leading axes are tensor slots.

Monomials are ordered by degree first, so the basis of a lower order is a
prefix of the basis of a higher one and truncation is a slice.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "Basis",
    "Series",
    "basis",
    "einsum",
    "exp",
    "log",
    "sin",
    "cos",
    "tan",
    "sinh",
    "cosh",
    "sqrt",
    "atan",
    "power",
    "reciprocal",
    "inv",
    "partials",
    "from_partials",
    "stack",
]


class Basis:
    """Monomial bookkeeping for ``nvars`` variables up to ``order``."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        exps = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                e = [0] * nvars
                for v in combo:
                    e[v] += 1
                exps.append(tuple(e))
        self.exps = exps
        self.size = len(exps)
        self.index = {e: i for i, e in enumerate(exps)}
        self.degree = np.array([sum(e) for e in exps])
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in e) for e in exps], dtype=float
        )

        ia, ib, ic = [], [], []
        for a, ea in enumerate(exps):
            for b, eb in enumerate(exps):
                if sum(ea) + sum(eb) > order:
                    continue
                ia.append(a)
                ib.append(b)
                ic.append(self.index[tuple(x + y for x, y in zip(ea, eb))])
        self.mul_a = np.array(ia, dtype=np.intp)
        self.mul_b = np.array(ib, dtype=np.intp)
        scatter = np.zeros((len(ic), self.size))
        scatter[np.arange(len(ic)), ic] = 1.0
        self.scatter = scatter

    @property
    def lower(self) -> "Basis":
        return basis(self.nvars, self.order - 1)

    def derivative_map(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Source indices and factors mapping coefficients to those of d/dx_v."""
        return _derivative_map(self.nvars, self.order, v)

    def __repr__(self):
        return f"Basis(nvars={self.nvars}, order={self.order})"


@lru_cache(maxsize=None)
def basis(nvars: int, order: int) -> Basis:
    return Basis(nvars, order)


@lru_cache(maxsize=None)
def _derivative_map(nvars: int, order: int, v: int):
    hi = basis(nvars, order)
    lo = basis(nvars, order - 1)
    src = np.empty(lo.size, dtype=np.intp)
    fac = np.empty(lo.size)
    for i, e in enumerate(lo.exps):
        up = list(e)
        up[v] += 1
        src[i] = hi.index[tuple(up)]
        fac[i] = up[v]
    return src, fac


class Series:
    """Tensor-valued truncated Taylor series."""

    __slots__ = ("data", "basis")
    __array_priority__ = 100

    def __init__(self, data, b: Basis):
        data = np.asarray(data, dtype=float)
        if data.shape[-1:] != (b.size,):
            raise ValueError(f"coefficient axis must have length {b.size}")
        self.data = data
        self.basis = b

    @classmethod
    def constant(cls, value, b: Basis) -> "Series":
        value = np.asarray(value, dtype=float)
        data = np.zeros(value.shape + (b.size,))
        data[..., 0] = value
        return cls(data, b)

    @classmethod
    def variable(cls, v: int, value: float, b: Basis) -> "Series":
        s = cls.constant(value, b)
        if b.order >= 1:
            e = [0] * b.nvars
            e[v] = 1
            s.data[b.index[tuple(e)]] = 1.0
        return s

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape[:-1]

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def value(self) -> np.ndarray:
        return self.data[..., 0]

    def is_constant(self) -> bool:
        return not np.any(self.data[..., 1:])

    def truncate(self, order: int) -> "Series":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError("cannot raise the order of a truncated series")
        b = basis(self.basis.nvars, order)
        return Series(self.data[..., : b.size], b)

    def nilpotent(self) -> "Series":
        data = self.data.copy()
        data[..., 0] = 0.0
        return Series(data, self.basis)

    def deriv(self, v: int) -> "Series":
        if self.order == 0:
            raise ValueError("derivative of an order-0 series is undefined")
        src, fac = self.basis.derivative_map(v)
        return Series(self.data[..., src] * fac, self.basis.lower)

    def gradient(self) -> "Series":
        """Stack of partial derivatives on a new trailing tensor slot."""
        return stack([self.deriv(v) for v in range(self.basis.nvars)], axis=-1)

    def __getitem__(self, key) -> "Series":
        # leading (tensor) axes only; the coefficient axis is never indexed
        return Series(self.data[key], self.basis)

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Series):
            if other.basis.nvars != self.basis.nvars:
                raise ValueError("series over different variable sets")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, other

    def __add__(self, other):
        a, b = self._coerce(other)
        if isinstance(b, Series):
            return Series(a.data + b.data, a.basis)
        b = np.asarray(b, dtype=float)
        shape = np.broadcast_shapes(a.shape, b.shape) + (a.basis.size,)
        out = np.broadcast_to(a.data, shape).copy()
        out[..., 0] += b
        return Series(out, a.basis)

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.data, self.basis)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if isinstance(b, Series):
            bs = a.basis
            prod = a.data[..., bs.mul_a] * b.data[..., bs.mul_b]
            return Series(prod @ bs.scatter, bs)
        return Series(a.data * np.asarray(b, dtype=float)[..., None], a.basis)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Series):
            return self * reciprocal(other)
        return Series(self.data / np.asarray(other, dtype=float)[..., None], self.basis)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, a):
        if isinstance(a, Series):
            if a.is_constant():
                return power(self, float(a.value))
            return exp(a * log(self))
        return power(self, float(a))

    def __repr__(self):
        return f"Series(shape={self.shape}, nvars={self.basis.nvars}, order={self.order})"


def stack(items, axis=0) -> Series:
    order = min(s.order for s in items)
    items = [s.truncate(order) for s in items]
    if axis < 0:
        axis = items[0].data.ndim - 1 + axis + 1
    return Series(np.stack([s.data for s in items], axis=axis), items[0].basis)


def einsum(spec: str, a, b) -> Series:
    """Tensor contraction of two operands with series multiplication.

    Either operand may be a plain array, treated as a constant.  The index
    letter ``z`` is reserved.
    """
    if "z" in spec:
        raise ValueError("index letter 'z' is reserved")
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    if isinstance(a, Series) and isinstance(b, Series):
        a, b = a._coerce(b)
        bs = a.basis
        prod = np.einsum(
            f"{sa}z,{sb}z->{out}z", a.data[..., bs.mul_a], b.data[..., bs.mul_b]
        )
        return Series(prod @ bs.scatter, bs)
    if isinstance(a, Series):
        return Series(np.einsum(f"{sa}z,{sb}->{out}z", a.data, b), a.basis)
    if isinstance(b, Series):
        return Series(np.einsum(f"{sa},{sb}z->{out}z", a, b.data), b.basis)
    raise TypeError("einsum needs at least one Series operand")


# elementary functions ---------------------------------------------------


def _compose(u: Series, coeffs) -> Series:
    """Evaluate ``sum_m coeffs[m] * h**m`` with ``h = u - u(0)`` (Horner)."""
    h = u.nilpotent()
    acc = Series.constant(coeffs[-1], u.basis)
    for c in reversed(coeffs[:-1]):
        acc = acc * h + c
    return acc


def _taylor_coeffs(derivs):
    return [d / math.factorial(m) for m, d in enumerate(derivs)]


def _scalar_value(u: Series) -> float:
    if u.shape != ():
        raise ValueError("elementary functions act on scalar series")
    return float(u.value)


def exp(u: Series) -> Series:
    e = math.exp(_scalar_value(u))
    return _compose(u, _taylor_coeffs([e] * (u.order + 1)))


def log(u: Series) -> Series:
    x = _scalar_value(u)
    if not x > 0.0:
        raise DomainError(f"log of nonpositive value {x!r}")
    d = [math.log(x)] + [
        (-1) ** (m - 1) * math.factorial(m - 1) / x**m for m in range(1, u.order + 1)
    ]
    return _compose(u, _taylor_coeffs(d))


def sin(u: Series) -> Series:
    x = _scalar_value(u)
    cyc = [math.sin(x), math.cos(x), -math.sin(x), -math.cos(x)]
    return _compose(u, _taylor_coeffs([cyc[m % 4] for m in range(u.order + 1)]))


def cos(u: Series) -> Series:
    x = _scalar_value(u)
    cyc = [math.cos(x), -math.sin(x), -math.cos(x), math.sin(x)]
    return _compose(u, _taylor_coeffs([cyc[m % 4] for m in range(u.order + 1)]))


def sinh(u: Series) -> Series:
    x = _scalar_value(u)
    cyc = [math.sinh(x), math.cosh(x)]
    return _compose(u, _taylor_coeffs([cyc[m % 2] for m in range(u.order + 1)]))


def cosh(u: Series) -> Series:
    x = _scalar_value(u)
    cyc = [math.cosh(x), math.sinh(x)]
    return _compose(u, _taylor_coeffs([cyc[m % 2] for m in range(u.order + 1)]))


def tan(u: Series) -> Series:
    c = cos(u)
    if abs(float(c.value)) < 1e-15:
        raise DomainError("tan at a pole")
    return sin(u) * reciprocal(c)


def atan(u: Series) -> Series:
    x = _scalar_value(u)
    # d^m/dx^m atan(x) = Im[(-1)^(m-1) (m-1)! i^m (1 + i x)^-m]
    d = [math.atan(x)]
    for m in range(1, u.order + 1):
        z = (-1) ** (m - 1) * math.factorial(m - 1) * (1j**m) / (1 + 1j * x) ** m
        d.append(z.imag)
    return _compose(u, _taylor_coeffs(d))


def power(u: Series, a: float) -> Series:
    """``u**a`` for a constant exponent."""
    x = _scalar_value(u)
    integer = float(a).is_integer()
    if not integer and x < 0.0:
        raise DomainError(f"non-integer power {a!r} of negative value {x!r}")
    d = []
    falling = 1.0
    for m in range(u.order + 1):
        if falling == 0.0:
            d.append(0.0)
        else:
            try:
                d.append(falling * x ** (a - m))
            except ZeroDivisionError:
                raise DomainError(f"power {a!r} singular at zero") from None
        falling *= a - m
    if not all(math.isfinite(v) for v in d):
        raise DomainError(f"power {a!r} singular at {x!r}")
    return _compose(u, _taylor_coeffs(d))


def sqrt(u: Series) -> Series:
    x = _scalar_value(u)
    if x < 0.0 or (x == 0.0 and u.order > 0):
        raise DomainError(f"sqrt of value {x!r}")
    return power(u, 0.5)


def reciprocal(u: Series, floor: float = 1e-300) -> Series:
    x = _scalar_value(u)
    if abs(x) <= floor:
        raise DomainError("division by zero")
    return power(u, -1.0)


def inv(m: Series) -> Series:
    """Inverse of a square-matrix-valued series (Neumann expansion)."""
    a0 = np.linalg.inv(m.value)
    b = einsum("ij,jk->ik", a0, m.nilpotent())
    acc = Series.constant(a0, m.basis)
    for _ in range(m.order):
        acc = Series.constant(a0, m.basis) - einsum("ij,jk->ik", b, acc)
    return acc


# conversion to and from partial-derivative arrays ------------------------


@lru_cache(maxsize=None)
def _partial_index(nvars: int, k: int):
    b = basis(nvars, k)
    shape = (nvars,) * k
    idx = np.empty(shape, dtype=np.intp)
    fac = np.empty(shape)
    for multi in itertools.product(range(nvars), repeat=k):
        e = [0] * nvars
        for v in multi:
            e[v] += 1
        i = b.index[tuple(e)]
        idx[multi] = i
        fac[multi] = b.factorial[i]
    return idx, fac


def partials(s: Series, k: int) -> np.ndarray:
    """All order-``k`` partial derivatives at the expansion point.

    Derivative slots are appended after the tensor slots.
    """
    if k > s.order:
        raise ValueError(f"series of order {s.order} has no order-{k} partials")
    idx, fac = _partial_index(s.basis.nvars, k)
    return s.data[..., idx] * fac


def from_partials(blocks, nvars: int) -> Series:
    """Build a series from ``[f, df, d2f, ...]`` (derivative slots last)."""
    order = len(blocks) - 1
    b = basis(nvars, order)
    shape = np.shape(blocks[0])
    data = np.zeros(shape + (b.size,))
    data[..., 0] = blocks[0]
    for k in range(1, order + 1):
        block = np.asarray(blocks[k])
        for multi in itertools.combinations_with_replacement(range(nvars), k):
            e = [0] * nvars
            for v in multi:
                e[v] += 1
            i = b.index[tuple(e)]
            data[..., i] = block[(Ellipsis,) + multi] / b.factorial[i]
    return Series(data, b)
