"""Edge-limit diffusions: the spacing system ``R``, its position form ``Z`` and a Bessel majorant.

With ``c = beta/2 - 1`` and ``rate = sqrt(beta / (2 t0))`` the spacings solve

    dR_i = c (1/R_i - 1/R_{i+1}) dt + dB_i - dB_{i+1}     (i < k)
    dR_k = (c/R_k - rate) dt + dB_k - dB_{k+1}

and ``R_i = Z_i - Z_{i+1}`` for the positions

    dZ_i = c / (Z_i - Z_{i+1}) dt + dB_i,     dZ_{k+1} = rate dt + dB_{k+1}.

Both are discretized by a split step: the bounded drift and the noise are
applied explicitly, then the singular ``c/R`` term is resolved implicitly by
the positive root of ``R' = S + c dt / R'``.  Positivity holds by construction.

The R scheme evaluates the bounded term ``c/R_{i+1}`` at the old state; the Z
scheme updates from the bottom coordinate upward and so sees the new gap below.
The two schemes agree only in the limit ``dt -> 0``, which makes them a
genuine cross-check of each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._resolvent import one_sided_root
from .core import GammaLaw, SpacingVector
from .errors import DomainError
from .rng import stream

__all__ = [
    "LimitStateR",
    "LimitStateZ",
    "noise_block",
    "gamma_product_init",
    "step_limit_r",
    "step_limit_z",
    "z_from_spacings",
    "bessel_coupled_pair",
    "limit_r_from_increments",
    "run_limit_r",
    "run_limit_z",
    "observation_steps",
]


def _check_dynamics(beta, t0):
    if not beta >= 4:
        raise DomainError(f"limit dynamics need beta >= 4, got {beta}")
    if not t0 > 0:
        raise DomainError(f"t0 must be positive, got {t0}")


@dataclass(frozen=True)
class LimitStateR:
    r: SpacingVector
    time: float
    beta: float
    t0: float

    def __post_init__(self):
        _check_dynamics(self.beta, self.t0)
        if not isinstance(self.r, SpacingVector):
            object.__setattr__(self, "r", SpacingVector(self.r))
        if self.r.k < 1 or np.any(self.r.r <= 0):
            raise DomainError("limit spacings must be strictly positive")

    @property
    def k(self) -> int:
        return self.r.k


@dataclass(frozen=True)
class LimitStateZ:
    z: np.ndarray
    time: float
    beta: float
    t0: float

    def __post_init__(self):
        _check_dynamics(self.beta, self.t0)
        z = np.array(self.z, dtype=float).reshape(-1)
        if z.size < 1:
            raise DomainError("Z needs at least one coordinate")
        if np.any(np.diff(z) >= 0):
            raise DomainError("Z coordinates must be strictly decreasing")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def k(self) -> int:
        return self.z.size - 1

    def spacings(self) -> np.ndarray:
        return self.z[:-1] - self.z[1:]


def noise_block(k: int, dt: float, rng: np.random.Generator):
    """``k + 1`` independent N(0, dt) increments and their ``k`` consecutive differences.

    The differences have covariance ``2 a_ij dt`` with ``a_ii = 1`` and
    ``a_{i,i+1} = -1/2``.
    """
    b = rng.standard_normal(k + 1) * math.sqrt(dt)
    return b, b[:-1] - b[1:]


def gamma_product_init(k: int, beta: float, t0: float, rng: np.random.Generator) -> LimitStateR:
    """``k`` i.i.d. stationary spacings drawn from Gamma(beta/2, sqrt(beta/(2 t0)))."""
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    law = GammaLaw.for_spacings(beta, t0)
    return LimitStateR(SpacingVector(law.sample(rng, size=int(k))), 0.0, beta, t0)


def _rate(beta, t0):
    return math.sqrt(beta / (2.0 * t0))


# --- kernels -----------------------------------------------------------------------


@njit(cache=True, nogil=True, error_model="numpy")
def _r_step(r, b, c, rate, dt):
    """In-place R update from the increment vector ``b`` (length k + 1)."""
    k = r.shape[0]
    cdt = c * dt
    old_next = 0.0
    for i in range(k - 1, -1, -1):
        bounded = rate * dt if i == k - 1 else cdt / old_next
        old_next = r[i]
        s = r[i] - bounded + b[i] - b[i + 1]
        r[i] = one_sided_root(s, cdt)


@njit(cache=True, nogil=True, error_model="numpy")
def _z_step(z, b, c, rate, dt):
    k = z.shape[0] - 1
    cdt = c * dt
    z[k] = z[k] + rate * dt + b[k]
    for i in range(k - 1, -1, -1):
        z[i] = z[i + 1] + one_sided_root(z[i] + b[i] - z[i + 1], cdt)


@njit(cache=True, nogil=True)
def _run_r(r, c, rate, dt, n_steps, rng, obs, out):
    """Advance one path, recording ``r`` at the step counts in ``obs``; returns the minimum coordinate seen."""
    k = r.shape[0]
    b = np.empty(k + 1)
    sq = math.sqrt(dt)
    lowest = r.min()
    j = 0
    while j < obs.shape[0] and obs[j] == 0:
        out[j] = r
        j += 1
    for s in range(1, n_steps + 1):
        for i in range(k + 1):
            b[i] = sq * rng.standard_normal()
        _r_step(r, b, c, rate, dt)
        m = r.min()
        if m < lowest:
            lowest = m
        while j < obs.shape[0] and obs[j] == s:
            out[j] = r
            j += 1
    return lowest


@njit(cache=True, nogil=True)
def _run_z(z, c, rate, dt, n_steps, rng, obs, out):
    """Z analogue of ``_run_r``; returns the smallest gap ``Z_i - Z_{i+1}`` seen (inf when k = 0)."""
    k = z.shape[0] - 1
    b = np.empty(k + 1)
    sq = math.sqrt(dt)
    lowest = np.inf
    for i in range(k):
        lowest = min(lowest, z[i] - z[i + 1])
    j = 0
    while j < obs.shape[0] and obs[j] == 0:
        out[j] = z
        j += 1
    for s in range(1, n_steps + 1):
        for i in range(k + 1):
            b[i] = sq * rng.standard_normal()
        _z_step(z, b, c, rate, dt)
        for i in range(k):
            g = z[i] - z[i + 1]
            if g < lowest:
                lowest = g
        while j < obs.shape[0] and obs[j] == s:
            out[j] = z
            j += 1
    return lowest


@njit(cache=True, nogil=True)
def _bessel_path(r0, a, dt, n_steps, rng, path, incr):
    sq = math.sqrt(dt)
    path[0] = r0
    x = r0
    for s in range(n_steps):
        b1 = sq * rng.standard_normal()
        b2 = sq * rng.standard_normal()
        incr[s, 0] = b1
        incr[s, 1] = b2
        x = one_sided_root(x + b1 - b2, a * dt)
        path[s + 1] = x


# --- single steps -------------------------------------------------------------------


def step_limit_r(state: LimitStateR, dt: float, rng: np.random.Generator | None = None, increments=None) -> LimitStateR:
    """One split step of the spacing system.

    ``increments`` (``k + 1`` Brownian increments of variance ``dt``) may be
    supplied to couple this path with another; otherwise they are drawn from ``rng``.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    k = state.k
    if increments is None:
        b = rng.standard_normal(k + 1) * math.sqrt(dt)
    else:
        b = np.asarray(increments, dtype=float).reshape(-1)
        if b.size != k + 1:
            raise DomainError(f"need {k + 1} increments, got {b.size}")
    r = np.array(state.r.r)
    _r_step(r, b, state.beta / 2.0 - 1.0, _rate(state.beta, state.t0), float(dt))
    return LimitStateR(SpacingVector(r), state.time + dt, state.beta, state.t0)


def step_limit_z(state: LimitStateZ, dt: float, rng: np.random.Generator | None = None, increments=None) -> LimitStateZ:
    """One split step of the position system; the bottom coordinate drifts at ``sqrt(beta/(2 t0))``."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    k = state.k
    if increments is None:
        b = rng.standard_normal(k + 1) * math.sqrt(dt)
    else:
        b = np.asarray(increments, dtype=float).reshape(-1)
        if b.size != k + 1:
            raise DomainError(f"need {k + 1} increments, got {b.size}")
    z = np.array(state.z)
    _z_step(z, b, state.beta / 2.0 - 1.0, _rate(state.beta, state.t0), float(dt))
    return LimitStateZ(z, state.time + dt, state.beta, state.t0)


def z_from_spacings(state: LimitStateR, bottom: float = 0.0) -> LimitStateZ:
    """Positions with ``Z_{k+1} = bottom`` and consecutive differences ``state.r``."""
    z = bottom + np.concatenate([np.cumsum(state.r.r[::-1])[::-1], [0.0]])
    return LimitStateZ(z, state.time, state.beta, state.t0)


# --- coupling -------------------------------------------------------------------------


def bessel_coupled_pair(r0: float, d: float, dt: float, horizon: float, rng: np.random.Generator, beta: float | None = None):
    """Path of ``dR = (d - 1)/R dt + sqrt(2) dB`` and the increments that drove it.

    The noise ``sqrt(2) dB`` is realized as ``b1 - b2`` from two independent
    N(0, dt) increments; the returned array of shape ``(n_steps, 2)`` can be
    fed to :func:`limit_r_from_increments` (k = 1) for a coupled run.  Pass
    ``beta`` to enforce the domination condition ``d >= beta/2``.
    """
    if not r0 > 0:
        raise DomainError(f"r0 must be positive, got {r0}")
    if not d > 1:
        raise DomainError(f"dimension d must exceed 1, got {d}")
    if beta is not None and d < beta / 2.0:
        raise DomainError(f"domination needs d >= beta/2 = {beta / 2.0}, got {d}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    n_steps = int(round(horizon / dt))
    path = np.empty(n_steps + 1)
    incr = np.empty((n_steps, 2))
    _bessel_path(float(r0), d - 1.0, float(dt), n_steps, rng, path, incr)
    return path, incr


def limit_r_from_increments(state: LimitStateR, increments, dt: float) -> np.ndarray:
    """Path of the spacing system driven by given increments, shape ``(n_steps + 1, k)``."""
    incr = np.asarray(increments, dtype=float)
    if incr.ndim != 2 or incr.shape[1] != state.k + 1:
        raise DomainError(f"increments must have shape (n_steps, {state.k + 1})")
    r = np.array(state.r.r)
    out = np.empty((incr.shape[0] + 1, state.k))
    out[0] = r
    c, rate = state.beta / 2.0 - 1.0, _rate(state.beta, state.t0)
    for s in range(incr.shape[0]):
        _r_step(r, incr[s], c, rate, float(dt))
        out[s + 1] = r
    return out


# --- batch runners ----------------------------------------------------------------------


def observation_steps(times, dt: float) -> np.ndarray:
    """Step counts at which the given times are reached; times must be multiples of ``dt``."""
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise DomainError("observation times must be nonnegative and nondecreasing")
    steps = np.rint(times / dt).astype(np.int64)
    if np.any(np.abs(steps * dt - times) > 1e-9 * np.maximum(1.0, times)):
        raise DomainError(f"observation times {times.tolist()} are not multiples of dt={dt}")
    return steps


def run_limit_r(
    k: int, beta: float, t0: float, dt: float, times, n_paths: int, seed: int, offset: int = 0
):
    """Stationary-start spacing paths; returns ``(samples, lowest)``.

    ``samples`` has shape ``(n_paths, len(times), k)``; ``lowest[p]`` is the
    smallest coordinate path ``p`` ever took.  Path ``p`` draws its initial
    Gamma vector and then its noise from stream ``(seed, offset + p)``.
    """
    _check_dynamics(beta, t0)
    obs = observation_steps(times, dt)
    n_steps = int(obs[-1]) if obs.size else 0
    out = np.empty((n_paths, obs.size, k))
    lowest = np.empty(n_paths)
    c, rate = beta / 2.0 - 1.0, _rate(beta, t0)
    for p in range(n_paths):
        rng = stream(seed, offset + p)
        r = np.array(gamma_product_init(k, beta, t0, rng).r.r)
        lowest[p] = _run_r(r, c, rate, float(dt), n_steps, rng, obs, out[p])
    return out, lowest


def run_limit_z(
    k: int, beta: float, t0: float, dt: float, times, n_paths: int, seed: int, offset: int = 0
):
    """Position paths started from Gamma spacings with ``Z_{k+1} = 0``; returns ``(samples, smallest_gap)``.

    ``samples`` has shape ``(n_paths, len(times), k + 1)``.
    """
    _check_dynamics(beta, t0)
    obs = observation_steps(times, dt)
    n_steps = int(obs[-1]) if obs.size else 0
    out = np.empty((n_paths, obs.size, k + 1))
    lowest = np.empty(n_paths)
    c, rate = beta / 2.0 - 1.0, _rate(beta, t0)
    for p in range(n_paths):
        rng = stream(seed, offset + p)
        if k > 0:
            z = np.array(z_from_spacings(gamma_product_init(k, beta, t0, rng)).z)
        else:
            z = np.zeros(1)
        lowest[p] = _run_z(z, c, rate, float(dt), n_steps, rng, obs, out[p])
    return out, lowest
