"""Positive root of the implicit step ``g = d + a/g`` shared by the integrators."""
import math

from numba import njit


@njit(cache=True, nogil=True, error_model="numpy")
def one_sided_root(d, a):
    """Positive root ``g`` of ``g = d + a/g`` for ``a > 0``, stable for either sign of ``d``."""
    root = math.sqrt(d * d + 4.0 * a)
    return 2.0 * a / (root - d) if d < 0 else 0.5 * (d + root)
