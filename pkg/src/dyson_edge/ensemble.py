"""Exact fixed-time samplers for the Hermite beta corners process.

The top level is drawn from the beta-Hermite ensemble

    p(x) ~ prod_{i<j} (x_j - x_i)**beta * prod_i exp(-x_i**2 / (2 t))

through its symmetric tridiagonal matrix model.  Lower levels follow one at a
time from the Dixon-Anderson conditional law: given level ``k`` at positions
``x``, level ``k-1`` consists of the ``k-1`` roots of

    sum_i w_i / (y - x_i) = 0,     w ~ Dirichlet(beta/2, ..., beta/2),

one in each gap of ``x``.  Its density is proportional to
``prod_{i<j} (y_j - y_i) * prod_{a,b} |y_a - x_b|**(beta/2 - 1)``.

For beta in {1, 2, 4} the dense Gaussian matrix samplers give the same law and
serve as an independent check.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.linalg import LinAlgError, eigvalsh_tridiagonal

from .core import GtArray, LevelSpectrum, check_interlacing
from .errors import DomainError, NumericalError, StructuralError

__all__ = [
    "tridiagonal_model",
    "sample_beta_hermite",
    "sample_beta_hermite_batch",
    "sample_corner_level",
    "sample_corner_level_batch",
    "sample_corners_process",
    "sample_top_levels_batch",
    "sample_dense_matrix",
    "sample_dense_corners",
    "sample_dense_top_levels_batch",
    "dense_diagonal_variance",
]

_RTOL = 1e-12  # root located to this fraction of its gap
_SHRINK = 1e-14


def tridiagonal_model(n: int, beta: float, variance_t: float, rng: np.random.Generator):
    """Diagonal and off-diagonal of a random Jacobi matrix whose spectrum is beta-Hermite at variance ``t``.

    Diagonal entries are N(0, t); the i-th off-diagonal entry is
    ``sqrt(t/2) * chi_{beta (n - i)}``, the chi variate drawn as the square root of a
    gamma variate so that non-integer ``beta`` works.
    """
    scale = math.sqrt(variance_t)
    diag = rng.standard_normal(n) * scale
    dof = beta * np.arange(n - 1, 0, -1, dtype=float)
    off = np.sqrt(rng.gamma(dof / 2.0, 2.0)) * (scale / math.sqrt(2.0))
    return diag, off


def _tridiagonal_eigenvalues(diag, off) -> np.ndarray:
    if diag.size == 1:
        return diag.copy()
    try:
        vals = eigvalsh_tridiagonal(diag, off, check_finite=False)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(
            f"tridiagonal eigensolver failed for n={diag.size}: {exc}; "
            f"diag range [{diag.min():.3g}, {diag.max():.3g}], min |off| {np.abs(off).min():.3g}"
        ) from exc
    return np.sort(vals)


def _check_params(n, beta, variance_t, min_beta=0.0):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not beta > min_beta:
        raise DomainError(f"beta must exceed {min_beta}, got {beta}")
    if not variance_t > 0:
        raise DomainError(f"variance must be positive, got {variance_t}")


def sample_beta_hermite_batch(n: int, beta: float, variance_t: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent ordered beta-Hermite spectra as rows of an array of shape ``(size, n)``."""
    _check_params(n, beta, variance_t)
    out = np.empty((size, n))
    for m in range(size):
        out[m] = _tridiagonal_eigenvalues(*tridiagonal_model(n, beta, variance_t, rng))
    return out


def sample_beta_hermite(n: int, beta: float, variance_t: float, rng: np.random.Generator) -> LevelSpectrum:
    """One ordered spectrum with density ``prod (x_j - x_i)**beta * prod exp(-x_i**2 / (2 t))``."""
    return LevelSpectrum(sample_beta_hermite_batch(n, beta, variance_t, rng, 1)[0])


@njit(cache=True, nogil=True)
def _secular_roots(x, w):
    """Roots of ``sum_j w_j / (y - x_j)`` in every gap of each row of ``x`` (shape ``(M, k)``).

    The function decreases from +inf to -inf across each gap, so the root is
    unique; Newton steps are accepted only inside the current sign bracket,
    otherwise the bracket is bisected.
    """
    m, k = x.shape
    out = np.empty((m, k - 1))
    for r in range(m):
        for i in range(k - 1):
            gap = x[r, i + 1] - x[r, i]
            lo = x[r, i] + _SHRINK * gap
            hi = x[r, i + 1] - _SHRINK * gap
            tol = _RTOL * gap
            y = 0.5 * (lo + hi)
            for _ in range(200):
                f = 0.0
                df = 0.0
                for j in range(k):
                    inv = 1.0 / (y - x[r, j])
                    f += w[r, j] * inv
                    df -= w[r, j] * inv * inv
                if f > 0.0:
                    lo = y
                elif f < 0.0:
                    hi = y
                else:
                    lo = y
                    hi = y
                    break
                if hi - lo <= tol:
                    break
                step = f / df
                y_new = y - step
                if not (lo < y_new < hi):
                    y_new = 0.5 * (lo + hi)
                elif abs(step) <= 0.25 * tol:
                    # converged Newton iterate; close the bracket around it
                    y = y_new
                    f = 0.0
                    for j in range(k):
                        f += w[r, j] / (y - x[r, j])
                    if f > 0.0:
                        lo = y
                        hi = min(hi, y + tol)
                    else:
                        hi = y
                        lo = max(lo, y - tol)
                    break
                y = y_new
            out[r, i] = 0.5 * (lo + hi)
    return out


def sample_corner_level_batch(upper: np.ndarray, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Draw the next level down for every row of ``upper`` (shape ``(M, k)``, rows strictly increasing)."""
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    if not beta >= 1:
        raise DomainError(f"corner sampler needs beta >= 1, got {beta}")
    m, k = upper.shape
    if k < 2:
        return np.empty((m, 0))
    if not np.all(np.diff(upper, axis=1) > 0):
        raise StructuralError("corner sampler needs a strictly increasing upper level")
    w = rng.gamma(beta / 2.0, 1.0, size=(m, k))
    w /= w.sum(axis=1, keepdims=True)
    roots = _secular_roots(np.ascontiguousarray(upper), w)
    if not (np.all(roots > upper[:, :-1]) and np.all(roots < upper[:, 1:])):
        raise NumericalError("internal invariant failure: corner roots do not strictly interlace")
    return roots


def sample_corner_level(upper, beta: float, rng: np.random.Generator) -> LevelSpectrum:
    """Level ``k-1`` given level ``k`` under the beta corners process."""
    values = upper.values if isinstance(upper, LevelSpectrum) else np.asarray(upper, dtype=float)
    if values.size < 2:
        raise DomainError("need at least two points on the upper level")
    return LevelSpectrum(sample_corner_level_batch(values[None, :], beta, rng)[0])


def sample_top_levels_batch(
    n: int, beta: float, variance_t: float, rng: np.random.Generator, size: int, depth: int | None = None
) -> list[np.ndarray]:
    """Top ``depth + 1`` levels for ``size`` draws; element ``j`` has shape ``(size, n - j)``.

    ``depth`` defaults to ``n - 1`` (the whole array).
    """
    _check_params(n, beta, variance_t, min_beta=1.0 - 1e-12)
    depth = n - 1 if depth is None else int(depth)
    if not 0 <= depth <= n - 1:
        raise DomainError(f"depth must lie in 0..{n - 1}, got {depth}")
    levels = [sample_beta_hermite_batch(n, beta, variance_t, rng, size)]
    for _ in range(depth):
        levels.append(sample_corner_level_batch(levels[-1], beta, rng))
    return levels


def sample_corners_process(n: int, beta: float, variance_t: float, rng: np.random.Generator) -> GtArray:
    """One Hermite beta corners array of variance ``t`` with ``n`` levels."""
    levels = sample_top_levels_batch(n, beta, variance_t, rng, 1)
    array = GtArray(tuple(lv[0] for lv in reversed(levels)))
    check_interlacing(array, strict=n > 1)
    return array


# --- dense Gaussian ensembles ---------------------------------------------------------


def dense_diagonal_variance(n: int, beta: int) -> float:
    """Diagonal variance ``2N, N, N/2`` for GOE, GUE, GSE; all correspond to variance ``t = 2N/beta``."""
    if beta not in (1, 2, 4):
        raise DomainError(f"dense matrices exist only for beta in {{1, 2, 4}}, got {beta}")
    return 2.0 * n / beta


def sample_dense_matrix(n: int, beta: int, rng: np.random.Generator) -> np.ndarray:
    """Self-adjoint Gaussian matrix; quaternion entries (beta=4) as a ``2n x 2n`` complex matrix.

    Off-diagonal real components have variance ``N/beta``; the diagonal has ``2N/beta``.
    """
    var_diag = dense_diagonal_variance(n, beta)
    sd_off = math.sqrt(n / beta)
    if beta == 1:
        g = rng.standard_normal((n, n)) * sd_off
        h = np.triu(g, 1)
        h = h + h.T
        h[np.diag_indices(n)] = rng.standard_normal(n) * math.sqrt(var_diag)
        return h
    if beta == 2:
        g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * sd_off
        h = np.triu(g, 1)
        h = h + h.conj().T
        h[np.diag_indices(n)] = rng.standard_normal(n) * math.sqrt(var_diag)
        return h
    # quaternion a + b i + c j + d k  ->  [[a + b i, c + d i], [-c + d i, a - b i]]
    comps = rng.standard_normal((4, n, n)) * sd_off
    iu = np.triu_indices(n, 1)
    a, b, c, d = (np.zeros((n, n)) for _ in range(4))
    for target, src in zip((a, b, c, d), comps):
        target[iu] = src[iu]
    # quaternion conjugate transpose: real part symmetric, imaginary parts antisymmetric
    a = a + a.T
    b, c, d = b - b.T, c - c.T, d - d.T
    a[np.diag_indices(n)] = rng.standard_normal(n) * math.sqrt(var_diag)
    h = np.empty((2 * n, 2 * n), dtype=complex)
    h[0::2, 0::2] = a + 1j * b
    h[0::2, 1::2] = c + 1j * d
    h[1::2, 0::2] = -c + 1j * d
    h[1::2, 1::2] = a - 1j * b
    return h


def _corner_eigenvalues(h: np.ndarray, size: int, beta: int) -> np.ndarray:
    if beta == 4:
        vals = np.linalg.eigvalsh(h[: 2 * size, : 2 * size])
        return vals[0::2]  # Kramers degeneracy: every eigenvalue appears twice
    return np.linalg.eigvalsh(h[:size, :size])


def sample_dense_top_levels_batch(
    n: int, beta: int, rng: np.random.Generator, size: int, depth: int | None = None
) -> list[np.ndarray]:
    """Eigenvalues of the top-left ``(n-j) x (n-j)`` corners, ``j = 0..depth``, for ``size`` matrices."""
    dense_diagonal_variance(n, beta)
    depth = n - 1 if depth is None else int(depth)
    levels = [np.empty((size, n - j)) for j in range(depth + 1)]
    for m in range(size):
        h = sample_dense_matrix(n, beta, rng)
        for j in range(depth + 1):
            levels[j][m] = _corner_eigenvalues(h, n - j, beta)
    return levels


def sample_dense_corners(n: int, beta: int, rng: np.random.Generator) -> GtArray:
    """Eigenvalues of every top-left corner of one dense GOE/GUE/GSE matrix."""
    levels = sample_dense_top_levels_batch(n, beta, rng, 1)
    return GtArray(tuple(lv[0] for lv in reversed(levels)))
