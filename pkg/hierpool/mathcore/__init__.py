# pylint: disable=missing-module-docstring
from .densities import (DensityKernel, normal_lpdf, half_cauchy_lpdf, uniform_lpdf, lkj_cholesky_lpdf,
                        cauchy_inv_cdf)
from .dual import DualPoint, gradient, finite_difference_gradient
from .transforms import (ConstraintTransform, IdentityTransform, PositiveLogTransform, IntervalTransform,
                         CholeskyCorrelationTransform, constrain, unconstrain)
