"""Domain types and elementary operations on interlacing arrays.

A Gelfand-Tsetlin array with ``N`` levels stores level ``k`` (1-based) as a
nondecreasing vector of ``k`` positions, and consecutive levels interlace::

    x[k+1][i] <= x[k][i] <= x[k+1][i+1]

The edge spacings are the gaps between the rightmost particles of adjacent
levels, counted from the top level downward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InterlacingError, StructuralError

__all__ = [
    "GtArray",
    "LevelSpectrum",
    "SpacingVector",
    "GammaLaw",
    "SimConfig",
    "validate_interlacing",
    "check_interlacing",
    "edge_spacings",
    "rescale_time",
    "semicircle_density",
    "semicircle_cdf",
    "semicircle_quantiles",
    "regularized_lower_gamma",
    "gamma_cdf",
    "gamma_pdf",
]


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GtArray:
    """Interlacing triangular array; ``levels[k-1]`` holds the ``k`` positions of level ``k``.

    Row lengths are checked on construction, the interlacing inequalities are not
    (use :func:`validate_interlacing`), so that callers can represent and report
    invalid arrays.
    """

    levels: tuple

    def __post_init__(self):
        rows = tuple(_frozen(row) for row in self.levels)
        if not rows:
            raise StructuralError("a GtArray needs at least one level")
        for k, row in enumerate(rows, start=1):
            if row.shape[0] != k:
                raise StructuralError(f"level {k} has {row.shape[0]} entries, expected {k}")
        object.__setattr__(self, "levels", rows)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> np.ndarray:
        """Positions on level ``k`` (1-based)."""
        return self.levels[k - 1]

    def top_particles(self) -> np.ndarray:
        """Rightmost particle of every level, ``x[k][k]`` for ``k = 1..N``."""
        return np.array([row[-1] for row in self.levels])

    def flat(self) -> np.ndarray:
        """All positions, level 1 first, as one vector of length ``N(N+1)/2``."""
        return np.concatenate(self.levels)

    @classmethod
    def from_flat(cls, values, n_levels: int | None = None) -> "GtArray":
        values = np.asarray(values, dtype=float).reshape(-1)
        if n_levels is None:
            n_levels = int(round((math.sqrt(8 * values.size + 1) - 1) / 2))
        if n_levels * (n_levels + 1) // 2 != values.size:
            raise StructuralError(f"{values.size} values do not form a triangular array")
        rows, start = [], 0
        for k in range(1, n_levels + 1):
            rows.append(values[start:start + k])
            start += k
        return cls(tuple(rows))

    def __eq__(self, other):
        if not isinstance(other, GtArray) or other.n_levels != self.n_levels:
            return NotImplemented if not isinstance(other, GtArray) else False
        return all(np.array_equal(a, b) for a, b in zip(self.levels, other.levels))

    def __hash__(self):
        return hash(self.flat().tobytes())

    def __repr__(self):
        return f"GtArray(n_levels={self.n_levels})"


@dataclass(frozen=True, eq=False)
class LevelSpectrum:
    """Ordered coordinates of a single level."""

    values: np.ndarray
    level: int = 0

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.size == 0:
            raise StructuralError("empty spectrum")
        if np.any(np.diff(vals) < 0):
            raise StructuralError("spectrum values must be nondecreasing")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "level", int(self.level) or vals.size)
        if self.level != vals.size:
            raise StructuralError(f"level {self.level} needs {self.level} values, got {vals.size}")

    def is_strict(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, LevelSpectrum):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True, eq=False)
class SpacingVector:
    """Edge spacings ``r_1..r_k``; ``r_i`` is the gap between the tops of levels ``N+1-i`` and ``N-i``."""

    r: np.ndarray

    def __post_init__(self):
        r = _frozen(self.r)
        if np.any(r < 0):
            raise DomainError("spacings must be nonnegative")
        object.__setattr__(self, "r", r)

    @property
    def k(self) -> int:
        return self.r.size

    def __eq__(self, other):
        if not isinstance(other, SpacingVector):
            return NotImplemented
        return np.array_equal(self.r, other.r)

    def __hash__(self):
        return hash(self.r.tobytes())


@dataclass(frozen=True)
class GammaLaw:
    """Gamma distribution with density ``rate**shape / Gamma(shape) * x**(shape-1) * exp(-rate*x)``."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise DomainError(f"GammaLaw needs positive shape and rate, got {self.shape}, {self.rate}")

    @classmethod
    def for_spacings(cls, beta: float, t0: float | None = None) -> "GammaLaw":
        """Limit law of the edge spacings: shape ``beta/2``, rate ``sqrt(beta/(2 t0))``.

        ``t0`` defaults to ``2/beta``, where the rate equals ``beta/2`` and the mean is 1.
        """
        if t0 is None:
            t0 = 2.0 / beta
        if t0 <= 0:
            raise DomainError("t0 must be positive")
        return cls(beta / 2.0, math.sqrt(beta / (2.0 * t0)))

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2

    def cdf(self, x):
        return gamma_cdf(self, x)

    def pdf(self, x):
        return gamma_pdf(self, x)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size=size)


@dataclass(frozen=True)
class SimConfig:
    """Parameters shared by every sampler and integrator."""

    beta: float
    t0: float
    n: int
    k: int = 1
    dt: float = 1e-4
    horizon: float = 1.0
    n_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.beta >= 1:
            raise DomainError(f"beta must be >= 1, got {self.beta}")
        if not self.t0 > 0:
            raise DomainError(f"t0 must be positive, got {self.t0}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        if self.n > 1 and self.k > self.n - 1:
            raise DomainError(f"k={self.k} exceeds n-1={self.n - 1}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        if self.horizon < 0:
            raise DomainError(f"horizon must be nonnegative, got {self.horizon}")
        if self.horizon > 0 and self.dt > self.horizon:
            raise DomainError(f"dt={self.dt} exceeds horizon={self.horizon}")
        if int(self.n_samples) != self.n_samples or self.n_samples < 0:
            raise DomainError(f"n_samples must be a nonnegative integer, got {self.n_samples}")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")

    @property
    def gamma_law(self) -> GammaLaw:
        return GammaLaw.for_spacings(self.beta, self.t0)

    def require_dynamics(self) -> None:
        """Raise unless beta is in the range where the SDE description holds."""
        if self.beta < 4:
            raise DomainError(f"dynamics require beta >= 4 (no collisions), got beta={self.beta}")


# --- interlacing -----------------------------------------------------------------


def _rows(a) -> tuple:
    if isinstance(a, GtArray):
        return a.levels
    rows = tuple(np.asarray(r, dtype=float).reshape(-1) for r in a)
    for k, row in enumerate(rows, start=1):
        if row.shape[0] != k:
            raise StructuralError(f"level {k} has {row.shape[0]} entries, expected {k}")
    if not rows:
        raise StructuralError("empty array")
    return rows


def _first_violation(rows, strict: bool):
    less = np.less if strict else np.less_equal
    for k, row in enumerate(rows, start=1):
        if k > 1:
            bad = ~less(row[:-1], row[1:])
            if np.any(bad):
                i = int(np.argmax(bad))
                return k, i + 1, f"level {k} not increasing at index {i + 1}"
        if k < len(rows):
            upper = rows[k]
            left = ~less(upper[:-1], row)
            right = ~less(row, upper[1:])
            if np.any(left):
                i = int(np.argmax(left))
                return k, i + 1, f"x[{k + 1}][{i + 1}] > x[{k}][{i + 1}]"
            if np.any(right):
                i = int(np.argmax(right))
                return k, i + 1, f"x[{k}][{i + 1}] > x[{k + 1}][{i + 2}]"
    return None


def validate_interlacing(a, strict: bool = False) -> bool:
    """True iff every interlacing inequality holds (non-strict by default).

    ``a`` is a :class:`GtArray` or a sequence of rows; malformed row lengths
    raise :class:`StructuralError`.
    """
    return _first_violation(_rows(a), strict) is None


def check_interlacing(a, strict: bool = False) -> None:
    """Like :func:`validate_interlacing` but raises :class:`InterlacingError` naming the offending entry."""
    bad = _first_violation(_rows(a), strict)
    if bad is not None:
        level, index, msg = bad
        raise InterlacingError(f"interlacing violated at level {level}, index {index}: {msg}")


def edge_spacings(a, k: int) -> SpacingVector:
    """Spacings ``r_i = x[N+1-i][N+1-i] - x[N-i][N-i]`` for ``i = 1..k``."""
    rows = _rows(a)
    n = len(rows)
    if k < 1 or k > n - 1:
        raise DomainError(f"k must lie in 1..{n - 1}, got {k}")
    tops = np.array([rows[n - 1 - i][-1] for i in range(k + 1)])
    return SpacingVector(tops[:-1] - tops[1:])


def rescale_time(obj, from_time: float, to_time: float):
    """Map a fixed-time sample at variance ``from_time`` to variance ``to_time``.

    The corners process is invariant under diffusive scaling, so every coordinate
    is multiplied by ``sqrt(to_time / from_time)``.
    """
    if not (from_time > 0 and to_time > 0):
        raise DomainError(f"times must be positive, got {from_time}, {to_time}")
    factor = math.sqrt(to_time / from_time)
    if isinstance(obj, GtArray):
        return GtArray(tuple(row * factor for row in obj.levels))
    if isinstance(obj, LevelSpectrum):
        return LevelSpectrum(obj.values * factor, obj.level)
    return np.asarray(obj, dtype=float) * factor


# --- semicircle --------------------------------------------------------------------


def semicircle_density(s):
    s = np.asarray(s, dtype=float)
    return np.sqrt(np.clip(4.0 - s * s, 0.0, None)) / (2.0 * np.pi)


def semicircle_cdf(s):
    """Distribution function of the semicircle law on ``[-2, 2]``."""
    s = np.clip(np.asarray(s, dtype=float), -2.0, 2.0)
    return 0.5 + s * np.sqrt(4.0 - s * s) / (4.0 * np.pi) + np.arcsin(s / 2.0) / np.pi


def semicircle_quantiles(n: int) -> np.ndarray:
    """Classical locations ``gamma_1 < ... < gamma_n`` with ``semicircle_cdf(gamma_i / n) = i / n``.

    Solved by vectorized bisection to absolute tolerance ``1e-10 * n`` in ``gamma``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    target = np.arange(1, n + 1) / n
    lo = np.full(n, -2.0)
    hi = np.full(n, 2.0)
    while np.max(hi - lo) > 1e-10:
        mid = 0.5 * (lo + hi)
        below = semicircle_cdf(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    s = 0.5 * (lo + hi)
    s[-1] = 2.0
    if n % 2 == 0:
        s[n // 2 - 1] = 0.0  # exact by symmetry
    return n * s


# --- incomplete gamma --------------------------------------------------------------

_EPS = 1e-16
_MAX_ITER = 10_000


def _gamma_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_continued_fraction(a: float, x: float) -> float:
    # modified Lentz for the upper tail Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_lower_gamma(a: float, x: float) -> float:
    """``P(a, x) = gamma(a, x) / Gamma(a)``; series below ``a + 1``, continued fraction above."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_continued_fraction(a, x))


def gamma_cdf(law: GammaLaw, x):
    """Distribution function of ``law``; zero for ``x <= 0``. Accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return regularized_lower_gamma(law.shape, law.rate * float(x))
    xs = np.asarray(x, dtype=float)
    out = np.fromiter(
        (regularized_lower_gamma(law.shape, law.rate * v) for v in xs.ravel()), float, xs.size
    )
    return out.reshape(xs.shape)


def gamma_pdf(law: GammaLaw, x):
    x = np.asarray(x, dtype=float)
    a, lam = law.shape, law.rate
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = a * math.log(lam) - math.lgamma(a) + (a - 1) * np.log(x) - lam * x
        out = np.where(x > 0, np.exp(logp), 0.0)
    return out if out.ndim else float(out)
