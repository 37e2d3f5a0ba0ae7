"""Standard normal CDF, density and quantile.

Scalar functions go through :func:`math.erfc`, whose relative accuracy is a
few ulps over the whole real line, so the lower tail is resolved down to the
subnormal range instead of collapsing to ``1 - 1``.  The ``*_nb`` variants are
the same formulas compiled with numba for use inside the recursion loops.
"""

import math
from statistics import NormalDist

import numba as nb
import numpy as np
from scipy import special

from .errors import DomainError

SQRT1_2 = 0.7071067811865476
INV_SQRT_2PI = 0.3989422804014327

_STD = NormalDist()


def normal_cdf(x):
    """Standard normal CDF at a finite ``x``."""
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"normal_cdf requires a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x * SQRT1_2)


def normal_pdf(x):
    x = float(x)
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def normal_quantile(p):
    """Inverse of :func:`normal_cdf` on the open unit interval."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"normal_quantile requires 0 < p < 1, got {p!r}")
    return _STD.inv_cdf(p)


def normal_cdf_array(x):
    """Vectorised CDF (``scipy.special.ndtr``)."""
    return special.ndtr(np.asarray(x, dtype=float))


@nb.njit(cache=True, nogil=True)
def cdf_nb(x):
    return 0.5 * math.erfc(-x * SQRT1_2)


@nb.njit(cache=True, nogil=True)
def pdf_nb(x):
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)
