"""
Constraint transforms between unconstrained reals and constrained parameters.

constrain maps z to (x, log_jacobian) where log_jacobian is log |dx/dz|;
elementwise transforms return it elementwise (same shape as z), the
Cholesky-correlation transform returns a scalar.
"""

import logging
import math

import numpy as np
from scipy import special

from hierpool.errors import DomainError, ShapeError
from hierpool.mathcore import dual

logger = logging.getLogger(__name__)


class ConstraintTransform:
    """Base class: subclasses define kind, size and the constrain/unconstrain pair"""

    kind = None

    def __init__(self, shape=()):
        self.shape = (int(shape),) if isinstance(shape, int) else tuple(shape)

    @property
    def size(self):
        """Number of unconstrained reals consumed by this transform"""
        return int(np.prod(self.shape)) if self.shape else 1

    def constrain(self, z):
        raise NotImplementedError

    def unconstrain(self, x):
        raise NotImplementedError

    def constrain_with_derivative(self, z):
        """Constrained value, log-Jacobian and their derivatives with respect to z (elementwise)

        Returns:
            tuple: (x, log_jacobian, dx_dz, dlog_jacobian_dz)
        """
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape})"


class IdentityTransform(ConstraintTransform):
    """Unconstrained reals"""

    kind = 'identity'

    def constrain(self, z):
        return z, np.zeros(np.shape(z)) if np.ndim(z) else 0.0

    def unconstrain(self, x):
        return x

    def constrain_with_derivative(self, z):
        z = np.asarray(z, dtype=float)
        return z, np.zeros(z.shape), np.ones(z.shape), np.zeros(z.shape)


class PositiveLogTransform(ConstraintTransform):
    """Positive reals through x = exp(z)"""

    kind = 'positive-log'

    def constrain(self, z):
        return dual.exp(z), z

    def unconstrain(self, x):
        if np.any(dual.value_of(x) <= 0):
            raise DomainError("positive-log transform: value must be strictly positive")
        return dual.log(x)

    def constrain_with_derivative(self, z):
        x = np.exp(z)
        return x, z, x, np.ones(np.shape(z))


class IntervalTransform(ConstraintTransform):
    """Open interval (lower, upper) through a scaled logistic"""

    kind = 'interval-scaled-logistic'

    def __init__(self, lower, upper, shape=()):
        if not lower < upper:
            raise DomainError("interval transform: lower must be below upper")
        super().__init__(shape)
        self.lower = float(lower)
        self.upper = float(upper)
        self.log_width = math.log(self.upper - self.lower)

    def constrain(self, z):
        x = self.lower + (self.upper - self.lower) * dual.expit(z)
        return x, self.log_width + dual.log_expit(z) + dual.log_expit(-z)

    def unconstrain(self, x):
        value = dual.value_of(x)
        if np.any(value <= self.lower) or np.any(value >= self.upper):
            raise DomainError(f"interval transform: value outside ({self.lower}, {self.upper})")
        return special.logit((np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower))

    def constrain_with_derivative(self, z):
        s = special.expit(z)
        x = self.lower + (self.upper - self.lower) * s
        log_jacobian = self.log_width + special.log_expit(z) + special.log_expit(-z)
        return x, log_jacobian, (self.upper - self.lower) * s * (1.0 - s), 1.0 - 2.0 * s

    def __repr__(self):
        return f"IntervalTransform({self.lower}, {self.upper}, shape={self.shape})"


class CholeskyCorrelationTransform(ConstraintTransform):
    """K(K-1)/2 unconstrained reals to the Cholesky factor of a K x K correlation matrix

    Uses canonical partial correlations: each free entry goes through tanh, and
    row i is filled left to right so that its Euclidean norm is one by
    construction.
    """

    kind = 'cholesky-correlation'

    def __init__(self, dimension):
        if dimension < 1:
            raise DomainError("cholesky-correlation transform needs dimension >= 1")
        self.dimension = int(dimension)
        super().__init__((self.dimension * (self.dimension - 1) // 2,))

    @property
    def size(self):
        return self.shape[0]

    def constrain(self, z):
        z = np.asarray(z, dtype=object if _is_dual(z) else float).ravel()
        if z.size != self.size:
            raise ShapeError(f"cholesky-correlation transform expects {self.size} values, got {z.size}")

        K = self.dimension
        L = np.zeros((K, K), dtype=z.dtype)
        L[0, 0] = 1.0
        log_jacobian = 0.0
        position = 0
        for i in range(1, K):
            sum_sq = 0.0
            for j in range(i):
                partial = dual.tanh(z[position])
                log_jacobian = log_jacobian + dual.log1m_tanh_sq(z[position])
                if j == 0:
                    L[i, j] = partial
                else:
                    log_jacobian = log_jacobian + 0.5 * dual.log(1.0 - sum_sq)
                    L[i, j] = partial * dual.sqrt(1.0 - sum_sq)
                sum_sq = sum_sq + L[i, j] * L[i, j]
                position += 1
            L[i, i] = dual.sqrt(1.0 - sum_sq)
        return L, log_jacobian

    def unconstrain(self, x):
        L = np.asarray(x, dtype=float)
        K = self.dimension
        if L.shape != (K, K):
            raise ShapeError(f"cholesky-correlation transform expects a {K}x{K} matrix")
        if np.any(np.diag(L) <= 0) or np.any(np.abs(np.sum(np.tril(L) ** 2, axis=1) - 1.0) > 1e-8):
            raise DomainError("not a correlation Cholesky factor (positive diagonal, unit-norm rows)")

        z = np.empty(self.size)
        position = 0
        for i in range(1, K):
            sum_sq = 0.0
            for j in range(i):
                z[position] = np.arctanh(L[i, j] / math.sqrt(1.0 - sum_sq))
                sum_sq += L[i, j] ** 2
                position += 1
        return z

    def constrain_with_derivative(self, z):
        """Factor, log-Jacobian, dL/dz of shape (K, K, m) and dlogJ/dz of shape (m,)"""
        z = np.asarray(z, dtype=float).ravel()
        if self.size == 0:
            return np.ones((1, 1)), 0.0, np.zeros((1, 1, 0)), np.zeros(0)
        L, log_jacobian = self.constrain(dual.seed(z))
        values = dual.value_of(L)
        jacobian = dual.jacobian_of(L, self.size)
        return values, log_jacobian.value, jacobian, log_jacobian.deriv

    def __repr__(self):
        return f"CholeskyCorrelationTransform({self.dimension})"


def _is_dual(z):
    if isinstance(z, dual.DualPoint):
        return True
    return isinstance(z, np.ndarray) and z.dtype == object


def constrain(transform, z):
    """Map unconstrained reals to the constrained space

    Args:
        transform (ConstraintTransform): transform to apply
        z (float | np.ndarray): unconstrained value(s), finite

    Returns:
        tuple: (constrained value, log_jacobian)
    """
    return transform.constrain(z)


def unconstrain(transform, x):
    """Inverse of constrain"""
    return transform.unconstrain(x)
