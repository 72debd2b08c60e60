"""
Forward-mode automatic differentiation with dual numbers.

A DualPoint carries a value and a derivative seed vector. Arithmetic on
DualPoints propagates exact first derivatives, so evaluating a function on
points seeded with the unit vectors yields its full gradient in one pass.

The elementary functions below (exp, log, tanh, ...) accept floats, numpy
arrays or DualPoints, so densities and transforms written with them can be
evaluated for values and for derivatives alike.
"""

import logging
import math

import numpy as np
from scipy import special

from hierpool.errors import EvaluationError

logger = logging.getLogger(__name__)

LOG_2 = math.log(2.0)


class DualPoint:
    """Value with a vector of partial derivatives

    Binary operations with numpy arrays are left to numpy, which applies them
    elementwise through object arrays.
    """

    __slots__ = ('value', 'deriv')

    def __init__(self, value, deriv):
        self.value = float(value)
        self.deriv = np.asarray(deriv, dtype=float)

    def __repr__(self):
        return f"DualPoint({self.value!r}, {self.deriv!r})"

    def _chain(self, value, slope):
        if np.isfinite(slope):
            return DualPoint(value, slope * self.deriv)
        # zero seed entries stay zero, so only the offending coordinate turns non-finite
        with np.errstate(invalid='ignore'):
            return DualPoint(value, np.where(self.deriv == 0.0, 0.0, slope * self.deriv))

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, DualPoint):
            return DualPoint(self.value + other.value, self.deriv + other.deriv)
        return DualPoint(self.value + other, self.deriv)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, DualPoint):
            return DualPoint(self.value - other.value, self.deriv - other.deriv)
        return DualPoint(self.value - other, self.deriv)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return DualPoint(other - self.value, -self.deriv)

    def __neg__(self):
        return DualPoint(-self.value, -self.deriv)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, DualPoint):
            return DualPoint(self.value * other.value, self.value * other.deriv + other.value * self.deriv)
        return DualPoint(self.value * other, self.deriv * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, DualPoint):
            value = self.value / other.value
            return DualPoint(value, (self.deriv - value * other.deriv) / other.value)
        return DualPoint(self.value / other, self.deriv / other)

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        value = other / self.value
        return DualPoint(value, -value / self.value * self.deriv)

    def __pow__(self, power):
        if isinstance(power, DualPoint):
            return exp(power * log(self))
        return self._chain(self.value ** power, power * self.value ** (power - 1))

    def __rpow__(self, base):
        return exp(self * math.log(base))

    def __abs__(self):
        return self._chain(abs(self.value), math.copysign(1.0, self.value))

    def __lt__(self, other):
        return self.value < value_of(other)

    def __le__(self, other):
        return self.value <= value_of(other)

    def __gt__(self, other):
        return self.value > value_of(other)

    def __ge__(self, other):
        return self.value >= value_of(other)

    def __float__(self):
        return self.value


def value_of(x):
    """Strip derivative information from a float, array or DualPoint (or an object array of them)"""
    if isinstance(x, DualPoint):
        return x.value
    if isinstance(x, np.ndarray) and x.dtype == object:
        return np.array([value_of(v) for v in x.flat], dtype=float).reshape(x.shape)
    return x


def _unary(func, slope):
    """Build an elementwise function that also differentiates DualPoints"""

    def wrapper(x):
        if isinstance(x, DualPoint):
            return x._chain(func(x.value), slope(x.value))
        if isinstance(x, np.ndarray) and x.dtype == object:
            return np.array([wrapper(v) for v in x.flat], dtype=object).reshape(x.shape)
        return func(x)

    wrapper.__name__ = func.__name__
    return wrapper


exp = _unary(np.exp, np.exp)
log = _unary(np.log, lambda v: 1.0 / v)
log1p = _unary(np.log1p, lambda v: 1.0 / (1.0 + v))
sqrt = _unary(np.sqrt, lambda v: 0.5 / np.sqrt(v))
tan = _unary(np.tan, lambda v: 1.0 / np.cos(v) ** 2)
tanh = _unary(np.tanh, lambda v: 1.0 - np.tanh(v) ** 2)
arctanh = _unary(np.arctanh, lambda v: 1.0 / (1.0 - v * v))
expit = _unary(special.expit, lambda v: special.expit(v) * special.expit(-v))
log_expit = _unary(special.log_expit, lambda v: special.expit(-v))


def _log1m_tanh_sq(x):
    # log(1 - tanh(x)^2) without cancellation for large |x|
    ax = np.abs(x)
    return 2.0 * (LOG_2 - ax - np.log1p(np.exp(-2.0 * ax)))


log1m_tanh_sq = _unary(_log1m_tanh_sq, lambda v: -2.0 * np.tanh(v))


def seed(z):
    """Turn a point into an object array of DualPoints seeded with the unit vectors

    Args:
        z (array-like): point of dimension d

    Returns:
        np.ndarray: object array of d DualPoints
    """
    z = np.asarray(z, dtype=float)
    eye = np.eye(z.size)
    return np.array([DualPoint(v, eye[i]) for i, v in enumerate(z.flat)], dtype=object).reshape(z.shape)


def jacobian_of(values, size):
    """Collect derivative vectors from an object array of DualPoints (constants give zero rows)

    Returns:
        np.ndarray: array of shape values.shape + (size,)
    """
    values = np.asarray(values, dtype=object)
    out = np.zeros(values.shape + (size,))
    for index, v in np.ndenumerate(values):
        if isinstance(v, DualPoint):
            out[index] = v.deriv
    return out


def gradient(f, z):
    """Exact gradient of a scalar function by forward-mode evaluation

    Args:
        f (callable): function of a point (array of DualPoints) written with dual-aware operations
        z (array-like): evaluation point

    Raises:
        EvaluationError: f or its gradient is not finite at z

    Returns:
        np.ndarray: gradient of f at z
    """
    z = np.asarray(z, dtype=float)
    out = f(seed(z))
    if isinstance(out, np.ndarray) and out.size == 1:
        out = out.reshape(-1)[0]
    if not isinstance(out, DualPoint):
        if not np.isfinite(out):
            raise EvaluationError(f"function is not finite at {z.tolist()}")
        return np.zeros(z.shape)

    bad = np.flatnonzero(~np.isfinite(out.deriv))
    coordinate = int(bad[0]) if bad.size else None
    if not np.isfinite(out.value) or coordinate is not None:
        raise EvaluationError(f"function or gradient is not finite at {z.tolist()}", coordinate=coordinate)
    return out.deriv.reshape(z.shape)


def finite_difference_gradient(f, z, relative_step=1e-5):
    """Central finite-difference gradient, step relative_step * max(1, |z_i|) per coordinate

    Args:
        f (callable): scalar function of a float array
        z (array-like): evaluation point
        relative_step (float, optional): Defaults to 1e-5.

    Returns:
        np.ndarray: approximate gradient
    """
    z = np.asarray(z, dtype=float)
    grad = np.empty(z.size)
    flat = z.ravel()
    for i in range(flat.size):
        step = relative_step * max(1.0, abs(flat[i]))
        up, down = flat.copy(), flat.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (float(f(up.reshape(z.shape))) - float(f(down.reshape(z.shape)))) / (2.0 * step)
    return grad.reshape(z.shape)
