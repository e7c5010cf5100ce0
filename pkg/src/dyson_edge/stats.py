"""Empirical distributions, Kolmogorov-Smirnov distances and small moment helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "EmpiricalDistribution",
    "ks_distance",
    "ks_two_sample",
    "ks_two_sample_2d",
    "dkw_band",
    "mean_and_se",
    "pearson_matrix",
    "max_abs_correlation",
    "histogram_l1",
]


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted sample; its ECDF is the right-continuous step function with jumps ``1/M``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).reshape(-1))
        if v.size == 0:
            raise DomainError("empirical distribution of an empty sample")
        if not np.all(np.isfinite(v)):
            raise DomainError("sample contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size

    def cdf(self, x):
        """ECDF evaluated at ``x`` (fraction of the sample ``<= x``)."""
        return np.searchsorted(self.values, x, side="right") / self.size

    def __len__(self):
        return self.size


def _as_empirical(sample) -> EmpiricalDistribution:
    return sample if isinstance(sample, EmpiricalDistribution) else EmpiricalDistribution(sample)


def _evaluate_cdf(cdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(cdf(x), dtype=float)
        if vals.shape == x.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(v)) for v in x])


def ks_distance(sample, cdf: Callable) -> float:
    """``sup_x |ECDF(x) - cdf(x)|`` for a continuous reference ``cdf``.

    The supremum is attained at a jump; both the left limit ``(i-1)/M`` and the
    value ``i/M`` are compared there.
    """
    emp = _as_empirical(sample)
    f = _evaluate_cdf(cdf, emp.values)
    m = emp.size
    i = np.arange(1, m + 1)
    d_plus = np.max(i / m - f)
    d_minus = np.max(f - (i - 1) / m)
    return float(min(1.0, max(d_plus, d_minus, 0.0)))


def ks_two_sample(a, b) -> float:
    """Sup-norm distance between two ECDFs, evaluated at every jump of either."""
    ea, eb = _as_empirical(a), _as_empirical(b)
    grid = np.concatenate([ea.values, eb.values])
    return float(np.max(np.abs(ea.cdf(grid) - eb.cdf(grid))))


def ks_two_sample_2d(a: np.ndarray, b: np.ndarray) -> float:
    """Fasano-Franceschini two-sample statistic for bivariate samples of shape ``(M, 2)``.

    For every point of either sample the four closed quadrants around it are
    counted in both samples; the statistic averages the two largest quadrant
    discrepancies (one per centring sample).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != 2 or b.shape[1] != 2:
        raise DomainError("bivariate samples must have shape (M, 2)")
    if len(a) == 0 or len(b) == 0:
        raise DomainError("empty bivariate sample")

    def quadrant_gap(centres):
        worst = 0.0
        for block in np.array_split(centres, max(1, len(centres) // 512)):
            fa = _quadrant_fractions(block, a)
            fb = _quadrant_fractions(block, b)
            worst = max(worst, float(np.max(np.abs(fa - fb))))
        return worst

    return 0.5 * (quadrant_gap(a) + quadrant_gap(b))


def _quadrant_fractions(centres, pts):
    right = pts[None, :, 0] > centres[:, None, 0]
    up = pts[None, :, 1] > centres[:, None, 1]
    n = pts.shape[0]
    ru = np.sum(right & up, axis=1)
    rd = np.sum(right & ~up, axis=1)
    lu = np.sum(~right & up, axis=1)
    ld = n - ru - rd - lu
    return np.stack([ru, rd, lu, ld], axis=1) / n


def dkw_band(m: int, alpha: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz radius: ``P(KS > band) <= alpha`` for ``m`` i.i.d. draws."""
    if m < 1:
        raise DomainError("DKW band needs m >= 1")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * m))


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size < 2:
        raise DomainError("need at least two values for a standard error")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def pearson_matrix(samples) -> np.ndarray:
    """Correlation matrix of the columns of ``samples`` (shape ``(M, k)``)."""
    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[0] < 2:
        raise DomainError("need a 2-d sample with at least two rows")
    c = s - s.mean(axis=0)
    cov = c.T @ c
    d = np.sqrt(np.diag(cov))
    return cov / np.outer(d, d)


def max_abs_correlation(samples) -> float:
    """Largest ``|rho_ij|`` over distinct column pairs; 0 for a single column."""
    rho = pearson_matrix(samples)
    k = rho.shape[0]
    if k < 2:
        return 0.0
    return float(np.max(np.abs(rho[np.triu_indices(k, 1)])))


def histogram_l1(sample, cdf: Callable, lo: float, hi: float, bins: int) -> float:
    """``sum_b |p_hat_b - p_b|`` over ``bins`` equal bins of ``[lo, hi]``.

    ``p_b`` is the reference mass of bin ``b`` from ``cdf``; points outside
    ``[lo, hi]`` count toward the distance through the missing mass.
    """
    x = np.asarray(sample, dtype=float).reshape(-1)
    if x.size == 0:
        raise DomainError("empty sample")
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    p_hat = counts / x.size
    ref = np.diff(_evaluate_cdf(cdf, edges))
    outside = 1.0 - p_hat.sum()
    ref_outside = 1.0 - ref.sum()
    return float(np.sum(np.abs(p_hat - ref)) + abs(outside - ref_outside))
