"""Multilevel Dyson Brownian motion on the Gelfand-Tsetlin cone (beta >= 4).

Particle ``i`` of level ``k`` moves by

    dx = (beta/2 - 1) * [sum_j 1/(x - y_j) - sum_{j != i} 1/(x - x_j)] dt + dW

where ``y`` runs over level ``k-1`` and ``x_j`` over the other particles of level
``k``.  Paths start from the exact corners law at absolute time ``N * t0``.

Two schemes are available.  ``"implicit"`` (the default) applies the noise and
the smooth part of the drift explicitly, then sweeps the levels bottom-up and
solves for each particle between its two already-updated lower neighbours, so
interlacing holds by construction.  ``"euler"`` is Euler-Maruyama with a
cone-preserving guard: a proposal is accepted only if the array stays strictly
interlaced and no particle moves more than half of its smallest adjacent gap,
and a rejected step is split in two with a Brownian bridge, so the driving path
is unchanged by the refinement.  At beta = 4 the gap between a particle and its
lower neighbour is a critical Bessel process that comes arbitrarily close to
zero, so the guarded scheme eventually reaches its step-size floor there.

Internally an array with ``N`` levels is a flat vector, level ``k`` starting
at offset ``k(k-1)/2``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._resolvent import one_sided_root
from .core import GtArray, SimConfig, SpacingVector, check_interlacing
from .ensemble import sample_corners_process, sample_top_levels_batch
from .errors import DomainError, NumericalError
from .rng import stream

__all__ = [
    "MAX_HALVINGS",
    "SCHEMES",
    "DEFAULT_SCHEME",
    "MdbmState",
    "mdbm_drift",
    "warm_start",
    "step_mdbm",
    "advance_mdbm",
    "run_spacing_trajectory",
    "run_spacing_trajectories",
    "remainder_drifts",
    "remainder_drifts_levels",
    "sample_remainder_drifts",
]

MAX_HALVINGS = 20  # floor dt_min = dt * 2**-MAX_HALVINGS
SCHEMES = ("implicit", "euler")
DEFAULT_SCHEME = "implicit"

_RESOLVENT_RTOL = 1e-13
_NEWTON_STOP = 1e-7
_OK = 0
_FLOOR = 1


@dataclass(frozen=True)
class MdbmState:
    array: GtArray
    time: float
    beta: float

    def __post_init__(self):
        if not self.beta >= 4:
            raise DomainError(f"mdbm dynamics need beta >= 4, got {self.beta}")
        if self.time < 0:
            raise DomainError(f"time must be nonnegative, got {self.time}")

    @property
    def n(self) -> int:
        return self.array.n_levels


# --- kernels -----------------------------------------------------------------------


@njit(cache=True, nogil=True, error_model="numpy", fastmath=True)
def _drift_into(x, n, coef, out):
    out[:] = 0.0
    for k in range(2, n + 1):
        o = k * (k - 1) // 2
        ol = (k - 1) * (k - 2) // 2
        for i in range(k):
            xi = x[o + i]
            s = 0.0
            for j in range(k - 1):
                s += 1.0 / (xi - x[ol + j])
            # same-level pairs once each, using antisymmetry
            for j in range(i + 1, k):
                v = 1.0 / (xi - x[o + j])
                s -= v
                out[o + j] += v
            out[o + i] += s
    for p in range(out.shape[0]):
        out[p] *= coef


@njit(cache=True, nogil=True)
def _gaps_into(x, n, out):
    """Smallest distance from each particle to a neighbour it must not cross."""
    for k in range(1, n + 1):
        o = k * (k - 1) // 2
        for i in range(k):
            xi = x[o + i]
            g = np.inf
            if i > 0:
                g = min(g, xi - x[o + i - 1])
            if i < k - 1:
                g = min(g, x[o + i + 1] - xi)
            if k > 1:
                ol = (k - 1) * (k - 2) // 2
                if i > 0:
                    g = min(g, xi - x[ol + i - 1])
                if i < k - 1:
                    g = min(g, x[ol + i] - xi)
            if k < n:
                ou = (k + 1) * k // 2
                g = min(g, xi - x[ou + i])
                g = min(g, x[ou + i + 1] - xi)
            out[o + i] = g


@njit(cache=True, nogil=True)
def _strictly_interlaced(y, n):
    for k in range(2, n + 1):
        o = k * (k - 1) // 2
        ol = (k - 1) * (k - 2) // 2
        for j in range(k - 1):
            lo = y[o + j]
            mid = y[ol + j]
            hi = y[o + j + 1]
            if not (lo < mid < hi):
                return False
    return True


@njit(cache=True, nogil=True)
def _integrate(x, n, coef, dt, n_steps, rng, max_halvings, info):
    """Advance ``x`` in place by ``n_steps`` steps of size ``dt``.

    Returns ``_OK`` or ``_FLOOR``; ``info`` receives (rejections, smallest gap,
    particle index of that gap, time reached).
    """
    m = x.shape[0]
    drift = np.empty(m)
    gaps = np.empty(m)
    y = np.empty(m)
    depth_cap = max_halvings + 2
    stack_dw = np.empty((depth_cap, m))
    stack_d = np.empty(depth_cap, dtype=np.int64)
    rejections = 0
    elapsed = 0.0
    sq = math.sqrt(dt)
    for _ in range(n_steps):
        for p in range(m):
            stack_dw[0, p] = sq * rng.standard_normal()
        stack_d[0] = 0
        top = 0
        fresh = False
        while top >= 0:
            d = stack_d[top]
            h = dt * 0.5**d
            if not fresh:
                _drift_into(x, n, coef, drift)
                _gaps_into(x, n, gaps)
                fresh = True
            ok = True
            for p in range(m):
                step = drift[p] * h + stack_dw[top, p]
                y[p] = x[p] + step
                if abs(step) > 0.5 * gaps[p]:
                    ok = False
            if ok and n > 1:
                ok = _strictly_interlaced(y, n)
            if ok:
                x[:] = y
                fresh = False
                elapsed += h
                top -= 1
                continue
            rejections += 1
            if d + 1 > max_halvings:
                worst = 0
                for p in range(m):
                    if gaps[p] < gaps[worst]:
                        worst = p
                info[0] = rejections
                info[1] = gaps[worst]
                info[2] = worst
                info[3] = elapsed
                return _FLOOR
            # Brownian bridge midpoint: W(h/2) | W(h) = dw  ~  N(dw/2, h/4)
            sd = math.sqrt(h / 4.0)
            for p in range(m):
                first = 0.5 * stack_dw[top, p] + sd * rng.standard_normal()
                stack_dw[top + 1, p] = first
                stack_dw[top, p] = stack_dw[top, p] - first
            stack_d[top] = d + 1
            stack_d[top + 1] = d + 1
            top += 1
    info[0] = rejections
    info[3] = elapsed
    return _OK


@njit(cache=True, nogil=True, error_model="numpy", fastmath=True)
def _explicit_drift_into(x, n, coef, out):
    """Drift without the repulsion from the (at most two) adjacent lower-level particles."""
    out[:] = 0.0
    for k in range(2, n + 1):
        o = k * (k - 1) // 2
        ol = (k - 1) * (k - 2) // 2
        for i in range(k):
            xi = x[o + i]
            s = 0.0
            for j in range(k - 1):
                s += 1.0 / (xi - x[ol + j])
            if i > 0:
                s -= 1.0 / (xi - x[ol + i - 1])
            if i < k - 1:
                s -= 1.0 / (xi - x[ol + i])
            for j in range(i + 1, k):
                v = 1.0 / (xi - x[o + j])
                s -= v
                out[o + j] += v
            out[o + i] += s
    for p in range(out.shape[0]):
        out[p] *= coef


@njit(cache=True, nogil=True, error_model="numpy")
def _resolvent(a, ch, left, right, has_left, has_right):
    """Root in ``(left, right)`` of ``u = a + ch/(u - left) + ch/(u - right)`` (absent sides dropped)."""
    if not has_left and not has_right:
        return a
    if not has_right:
        return left + one_sided_root(a - left, ch)
    if not has_left:
        return right - one_sided_root(right - a, ch)
    lo = left
    hi = right
    tol = _RESOLVENT_RTOL * (right - left)
    # start from the root that ignores the farther neighbour
    if a - left < right - a:
        u = left + one_sided_root(a - left, ch)
    else:
        u = right - one_sided_root(right - a, ch)
    if not (lo < u < hi):
        u = 0.5 * (lo + hi)
    for _ in range(100):
        gl = u - left
        gr = u - right
        f = u - a - ch / gl - ch / gr
        if f > 0.0:
            hi = u
        elif f < 0.0:
            lo = u
        else:
            return u
        step = f / (1.0 + ch / (gl * gl) + ch / (gr * gr))
        un = u - step
        if not (lo < un < hi):
            un = 0.5 * (lo + hi)
        elif abs(step) <= _NEWTON_STOP * min(gl, -gr) or abs(step) <= tol:
            # quadratic convergence: the next correction is below 1e-14 of the wall distance
            return un
        u = un
        if hi - lo <= tol:
            break
    return u


@njit(cache=True, nogil=True)
def _integrate_implicit(x, n, coef, dt, n_steps, rng, info):
    """Split-step scheme: explicit smooth drift and noise, then an implicit solve per particle.

    Levels are updated bottom-up.  Each particle of level ``k`` is placed at the
    root of its resolvent between its two already-updated lower neighbours, so
    the new array is interlaced by construction.
    """
    m = x.shape[0]
    drift = np.empty(m)
    xn = np.empty(m)
    ch = coef * dt
    sq = math.sqrt(dt)
    for _ in range(n_steps):
        _explicit_drift_into(x, n, coef, drift)
        for p in range(m):
            xn[p] = x[p] + drift[p] * dt + sq * rng.standard_normal()
        for k in range(2, n + 1):
            o = k * (k - 1) // 2
            ol = (k - 1) * (k - 2) // 2
            for i in range(k):
                left = xn[ol + i - 1] if i > 0 else 0.0
                right = xn[ol + i] if i < k - 1 else 0.0
                xn[o + i] = _resolvent(xn[o + i], ch, left, right, i > 0, i < k - 1)
        if n > 1 and not _strictly_interlaced(xn, n):
            info[1] = 1.0
            return _FLOOR
        x[:] = xn
        info[3] += dt
    return _OK


def mdbm_drift(array, beta: float) -> np.ndarray:
    """Drift of every particle, in flat level order, at the state ``array``."""
    x = np.ascontiguousarray(array.flat() if isinstance(array, GtArray) else np.asarray(array, dtype=float))
    n = int(round((math.sqrt(8 * x.size + 1) - 1) / 2))
    out = np.empty_like(x)
    _drift_into(x, n, beta / 2.0 - 1.0, out)
    return out


def _particle_label(n: int, p: int) -> str:
    k = int((math.sqrt(8 * p + 1) + 1) // 2)
    while k * (k - 1) // 2 > p:
        k -= 1
    while (k + 1) * k // 2 <= p:
        k += 1
    return f"x[{k}][{p - k * (k - 1) // 2 + 1}]"


def advance_mdbm(
    x: np.ndarray, n: int, beta: float, dt: float, n_steps: int, rng: np.random.Generator, scheme: str = DEFAULT_SCHEME
) -> int:
    """Advance the flat state ``x`` in place; returns the number of rejected proposals.

    ``scheme="euler"`` is guarded Euler-Maruyama with bridge refinement and raises
    :class:`NumericalError` when a step would have to shrink below
    ``dt * 2**-MAX_HALVINGS``.  ``scheme="implicit"`` never rejects.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if scheme not in SCHEMES:
        raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    info = np.zeros(4)
    coef = beta / 2.0 - 1.0
    if scheme == "implicit":
        if _integrate_implicit(x, n, coef, float(dt), int(n_steps), rng, info) != _OK:
            raise NumericalError(f"implicit step lost strict interlacing after {info[3]:.6g} time units (n={n}, beta={beta})")
        return 0
    status = _integrate(x, n, coef, float(dt), int(n_steps), rng, MAX_HALVINGS, info)
    if status != _OK:
        raise NumericalError(
            f"step-size floor dt*2^-{MAX_HALVINGS} reached after {info[3]:.6g} time units: "
            f"smallest gap {info[1]:.3e} at {_particle_label(n, int(info[2]))}; "
            f"dt={dt} is too coarse for n={n}, beta={beta}"
        )
    return int(info[0])


# --- public operations ----------------------------------------------------------------


def warm_start(config: SimConfig, rng: np.random.Generator) -> MdbmState:
    """Exact state at absolute time ``N * t0``, drawn from the corners process of that variance."""
    config.require_dynamics()
    variance = config.n * config.t0
    return MdbmState(sample_corners_process(config.n, config.beta, variance, rng), variance, config.beta)


def step_mdbm(
    state: MdbmState, dt: float, rng: np.random.Generator, check: bool = False, scheme: str = DEFAULT_SCHEME
) -> MdbmState:
    """One step of length ``dt``; the guarded Euler scheme may refine it internally.

    With ``check=True`` the result is re-validated by the generic interlacing checker.
    """
    x = np.array(state.array.flat())
    advance_mdbm(x, state.n, state.beta, dt, 1, rng, scheme)
    array = GtArray.from_flat(x, state.n)
    if check:
        check_interlacing(array, strict=state.n > 1)
    return MdbmState(array, state.time + dt, state.beta)


def _step_plan(observation_times, dt):
    times = np.asarray(observation_times, dtype=float).reshape(-1)
    if times.size and (times[0] < 0 or np.any(np.diff(times) < 0)):
        raise DomainError("observation times must be nonnegative and nondecreasing")
    plan, prev = [], 0.0
    for t in times:
        span = float(t) - prev
        if span <= 0:
            plan.append((0, 0.0))
        else:
            steps = max(1, int(round(span / dt)))
            plan.append((steps, span / steps))
        prev = float(t)
    return plan


def _spacing_path(config: SimConfig, plan, rng, scheme) -> np.ndarray:
    state = warm_start(config, rng)
    x = np.array(state.array.flat())
    n, k = config.n, config.k
    tops = (np.arange(n, n - k - 1, -1) * np.arange(n + 1, n - k, -1)) // 2 - 1  # flat index of x[m][m]
    out = np.empty((len(plan), k))
    for row, (steps, h) in enumerate(plan):
        if steps:
            advance_mdbm(x, n, config.beta, h, steps, rng, scheme)
        out[row] = x[tops[:-1]] - x[tops[1:]]
    return out


def run_spacing_trajectory(
    config: SimConfig, observation_times, rng: np.random.Generator | None = None, scheme: str = DEFAULT_SCHEME
) -> list:
    """Edge spacings ``r_1..r_k`` at each time (measured from the warm-start time ``N * t0``).

    Uses ``config.dt`` as the nominal step; each interval between observations is
    split into equal steps no longer than about ``dt``.
    """
    config.require_dynamics()
    if config.n < 2:
        raise DomainError("edge spacings need n >= 2")
    rng = stream(config.seed, 0) if rng is None else rng
    path = _spacing_path(config, _step_plan(observation_times, config.dt), rng, scheme)
    return [SpacingVector(row) for row in path]


def run_spacing_trajectories(
    config: SimConfig,
    observation_times,
    n_paths: int | None = None,
    parallelism: int = 1,
    offset: int = 0,
    scheme: str = DEFAULT_SCHEME,
) -> np.ndarray:
    """Spacing paths of shape ``(n_paths, len(times), k)``; path ``p`` uses stream ``(seed, offset + p)``."""
    config.require_dynamics()
    if config.n < 2:
        raise DomainError("edge spacings need n >= 2")
    n_paths = config.n_samples if n_paths is None else int(n_paths)
    plan = _step_plan(observation_times, config.dt)

    def one(p):
        return _spacing_path(config, plan, stream(config.seed, offset + p), scheme)

    out = np.empty((n_paths, len(plan), config.k))
    if parallelism <= 1:
        for p in range(n_paths):
            out[p] = one(p)
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for p, path in enumerate(pool.map(one, range(n_paths))):
                out[p] = path
    return out


# --- drift remainders ------------------------------------------------------------------


def _inv_sum(top, row, count):
    if count <= 0:
        return np.zeros(top.shape[0])
    return np.sum(1.0 / (top[:, None] - row[:, :count]), axis=1)


def remainder_drifts_levels(levels, beta: float, k: int):
    """Remainders for a batch: ``levels[j]`` holds level ``N - j`` for every draw (shape ``(M, N - j)``).

    Returns ``(S, S_hat)`` with ``S`` of shape ``(M, k - 1)`` and ``S_hat`` of shape ``(M,)``.

    ``S_a`` is what remains of the drift of ``r_{a+1}`` after removing
    ``c (1/r_{a+1} - 1/r_{a+2})``; ``S_hat`` is the remainder of the drift of
    ``r_k`` after removing ``c / r_k``, where ``c = beta/2 - 1``.  For
    ``S_hat`` the lower particle is taken as the top of a Dyson Brownian motion
    on its own level, which is a Markov process by itself.
    """
    n = levels[0].shape[1]
    if not 1 <= k <= n - 1:
        raise DomainError(f"k must lie in 1..{n - 1}, got {k}")
    if len(levels) < k + 1:
        raise DomainError(f"need the top {k + 1} levels, got {len(levels)}")
    c = beta / 2.0 - 1.0

    def lv(m):
        return levels[n - m]

    def top(m):
        return levels[n - m][:, -1]

    m_rows = levels[0].shape[0]
    s = np.empty((m_rows, max(k - 1, 0)))
    for a in range(k - 1):
        hi, lo = n - a, n - a - 1
        s[:, a] = c * (
            _inv_sum(top(hi), lv(hi - 1), hi - 2)
            - _inv_sum(top(hi), lv(hi), hi - 1)
            - (_inv_sum(top(lo), lv(lo - 1), lo - 2) if lo >= 2 else 0.0)
            + _inv_sum(top(lo), lv(lo), lo - 1)
        )
    hi, lo = n - k + 1, n - k
    s_hat = (
        -c * _inv_sum(top(hi), lv(hi), hi - 1)
        + c * _inv_sum(top(hi), lv(lo), lo - 1)
        - (beta / 2.0) * _inv_sum(top(lo), lv(lo), lo - 1)
    )
    return s, s_hat


def remainder_drifts(state: MdbmState, k: int):
    """Drift remainders ``(S_0, ..., S_{k-2})`` and ``S_hat_k`` at a single state."""
    n = state.n
    levels = [state.array.level(m)[None, :] for m in range(n, max(n - k - 1, 0), -1)]
    s, s_hat = remainder_drifts_levels(levels, state.beta, k)
    return tuple(float(v) for v in s[0]), float(s_hat[0])


def sample_remainder_drifts(config: SimConfig, n_draws: int, rng: np.random.Generator):
    """Remainders on ``n_draws`` exact fixed-time states at variance ``N * t0`` (beta >= 1 allowed)."""
    levels = sample_top_levels_batch(config.n, config.beta, config.n * config.t0, rng, n_draws, depth=config.k)
    return remainder_drifts_levels(levels, config.beta, config.k)
