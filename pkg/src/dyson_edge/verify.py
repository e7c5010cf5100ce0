"""Verification checks and the acceptance suite.

Every check returns a :class:`TestReport` whose ``passed`` flag is exactly
``statistic <= threshold``.  Composite checks report the number of failing
sub-checks against a threshold of 0 and list the sub-checks in ``details``.
Thresholds on Monte Carlo statistics are engineering choices: the known
limits carry no finite-size rates.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .core import GammaLaw, SimConfig, semicircle_cdf, semicircle_quantiles
from .ensemble import (
    sample_beta_hermite_batch,
    sample_corner_level_batch,
    sample_dense_top_levels_batch,
    sample_top_levels_batch,
)
from .errors import ConfigError, DomainError
from .limit import bessel_coupled_pair, gamma_product_init, limit_r_from_increments, run_limit_r, run_limit_z
from .mdbm import run_spacing_trajectories, sample_remainder_drifts
from .rng import mix64, stream
from .stats import (
    histogram_l1,
    ks_distance,
    ks_two_sample,
    ks_two_sample_2d,
    max_abs_correlation,
    mean_and_se,
)

__all__ = [
    "TestReport",
    "check_integral_2pi",
    "check_inverse_gap_identity",
    "check_inverse_gap_limits",
    "check_fixed_time_spacings",
    "check_sampler_cross_validation",
    "check_semicircle_rigidity",
    "check_stationarity",
    "check_restriction_consistency",
    "check_positivity_and_z_equivalence",
    "check_bessel_domination",
    "check_adjoint_annihilation",
    "check_dynamic_limit",
    "check_remainder_limits",
    "check_adjoint_suite",
    "adjoint_residual",
    "SUITE_ITEMS",
    "default_suite",
    "run_suite",
    "run_acceptance_suite",
    "reports_to_json",
    "reports_to_csv",
]


@dataclass(frozen=True)
class TestReport:
    """Outcome of one check; ``passed`` is derived, never supplied."""

    __test__ = False  # not a pytest class

    name: str
    statistic: float
    threshold: float
    sample_sizes: dict = field(default_factory=dict)
    seed: int | None = None
    reference: str = ""
    details: dict = field(default_factory=dict)
    criterion: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        stat = float(self.statistic)
        object.__setattr__(self, "statistic", stat)
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "passed", bool(stat <= self.threshold))

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "passed": self.passed,
            "sample_sizes": self.sample_sizes,
            "seed": self.seed,
            "reference": self.reference,
            "details": self.details,
        }

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        label = f"[{self.criterion}] " if self.criterion else ""
        return f"{flag} {label}{self.name}: statistic={self.statistic:.6g} threshold={self.threshold:.6g}"


def _sub(name, statistic, threshold, **extra) -> dict:
    stat = float(statistic)
    return {"name": name, "statistic": stat, "threshold": float(threshold), "passed": bool(stat <= threshold), **extra}


def _composite(name, subs, sample_sizes, seed, reference, **details) -> TestReport:
    failures = sum(not s["passed"] for s in subs)
    return TestReport(name, failures, 0, sample_sizes, seed, reference, {"checks": subs, **details})


def _interval_excess(value, lo, hi) -> float:
    return max(lo - value, value - hi, 0.0)


# --- 1. quadrature ----------------------------------------------------------------------


def check_integral_2pi(tol: float = 1e-8, tol_companion: float = 1e-10) -> TestReport:
    """``int_{-2}^{2} sqrt(4 - s^2)/(2 - s) ds = 2 pi`` by two quadrature routes, plus semicircle moments.

    Route one substitutes ``s = 2 cos u`` (integrand ``2 (1 + cos u)`` on ``[0, pi]``);
    route two integrates ``sqrt(2 + s)`` against the algebraic weight ``(2 - s)**-1/2``.
    """
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    cos_route, _ = integrate.quad(lambda u: 2.0 * (1.0 + math.cos(u)), 0.0, math.pi, **opts)
    alg_route, _ = integrate.quad(lambda s: math.sqrt(2.0 + s), -2.0, 2.0, weight="alg", wvar=(0.0, -0.5), **opts)
    # semicircle with s = 2 cos u: density * ds = (2/pi) sin(u)**2 du
    norm, _ = integrate.quad(lambda u: (2.0 / math.pi) * math.sin(u) ** 2, 0.0, math.pi, **opts)
    first, _ = integrate.quad(lambda u: 2.0 * math.cos(u) * (2.0 / math.pi) * math.sin(u) ** 2, 0.0, math.pi, **opts)
    subs = [
        _sub("integral, cosine substitution", abs(cos_route - 2.0 * math.pi), tol, value=cos_route),
        _sub("integral, algebraic weight", abs(alg_route - 2.0 * math.pi), tol, value=alg_route),
        _sub("semicircle normalization", abs(norm - 1.0), tol_companion, value=norm),
        _sub("semicircle first moment", abs(first), tol_companion, value=first),
    ]
    return _composite("integral_2pi", subs, {}, None, "deterministic quadrature; exact values 2*pi, 1 and 0")


# --- 2, 3. inverse-gap sums ---------------------------------------------------------------


def _same_level_sum(top_level: np.ndarray) -> np.ndarray:
    return np.sum(1.0 / (top_level[:, -1:] - top_level[:, :-1]), axis=1)


def _cross_level_sum(top_level: np.ndarray, lower: np.ndarray) -> np.ndarray:
    # the lower level's own top particle is left out; its gap is the one that blows up
    return np.sum(1.0 / (top_level[:, -1:] - lower[:, :-1]), axis=1)


def check_inverse_gap_identity(n: int, beta: float, n_samples: int, rng: np.random.Generator, n_se: float = 3.0) -> TestReport:
    """Two Monte Carlo estimators of one exact expectation at variance ``t = 2n/beta``.

    Integration by parts in the largest coordinate gives
    ``E[sum_i 1/(X_n - X_i)] = E[X_n]/(beta t) = E[X_n]/(2n)``.
    """
    if not beta >= 1:
        raise DomainError(f"beta must be >= 1, got {beta}")
    x = sample_beta_hermite_batch(n, beta, 2.0 * n / beta, rng, n_samples)
    lhs, se_l = mean_and_se(_same_level_sum(x))
    rhs, se_r = mean_and_se(x[:, -1] / (2.0 * n))
    z = abs(lhs - rhs) / math.hypot(se_l, se_r)
    return TestReport(
        "inverse_gap_identity",
        z,
        n_se,
        {"n": n, "draws": n_samples},
        None,
        "exact identity from integration by parts; statistic in combined standard errors",
        {
            "beta": beta,
            "inverse_gap_mean": lhs,
            "inverse_gap_se": se_l,
            "top_over_2n_mean": rhs,
            "top_over_2n_se": se_r,
            "distance_from_limit": [abs(lhs - 1.0), abs(rhs - 1.0)],
        },
    )


def check_inverse_gap_limits(
    n: int, betas, n_samples: int, rng: np.random.Generator, tol: float = 0.1, bracket_beta: float = 4.0
) -> TestReport:
    """Same-level and cross-level inverse-gap sums at the edge tend to 1 (``t0 = 2/beta``).

    At ``bracket_beta`` the second moment of the same-level sum must lie in
    ``[0.9, beta/(beta - 1) + 0.1]``.
    """
    subs = []
    for beta in betas:
        top, lower = sample_top_levels_batch(n, beta, 2.0 * n / beta, rng, n_samples, depth=1)
        same = _same_level_sum(top)
        cross = _cross_level_sum(top, lower)
        subs.append(_sub(f"same-level sum, beta={beta:g}", abs(same.mean() - 1.0), tol, mean=float(same.mean())))
        subs.append(_sub(f"cross-level sum, beta={beta:g}", abs(cross.mean() - 1.0), tol, mean=float(cross.mean())))
        if beta == bracket_beta:
            m2 = float(np.mean(same**2))
            hi = beta / (beta - 1.0) + 0.1
            subs.append(_sub(f"second moment in [0.9, {hi:.6g}], beta={beta:g}", _interval_excess(m2, 0.9, hi), 0.0, value=m2))
    return _composite(
        "inverse_gap_limits",
        subs,
        {"n": n, "draws_per_beta": n_samples},
        None,
        "edge inverse-gap sums converge to 1; second moment bracket; tolerances are engineering choices",
    )


# --- 4. fixed-time spacings -------------------------------------------------------------


def _top_level_spacings(levels, k):
    tops = np.stack([lv[:, -1] for lv in levels[: k + 1]], axis=1)
    return tops[:, :-1] - tops[:, 1:]


def check_fixed_time_spacings(
    config: SimConfig,
    rng: np.random.Generator,
    source: str = "corners",
    ks_threshold: float = 0.05,
    corr_threshold: float = 0.05,
) -> TestReport:
    """Edge spacings of the corners process at variance ``N t0`` against the i.i.d. Gamma limit.

    ``source="dense"`` uses Gaussian matrices (beta in {1, 2, 4}), which fixes ``t0 = 2/beta``.
    """
    n, k, beta, m = config.n, config.k, config.beta, config.n_samples
    if source == "dense":
        if not math.isclose(config.t0, 2.0 / beta):
            raise DomainError("dense matrices correspond to t0 = 2/beta")
        levels = sample_dense_top_levels_batch(n, int(beta), rng, m, depth=k)
    elif source == "corners":
        levels = sample_top_levels_batch(n, beta, n * config.t0, rng, m, depth=k)
    else:
        raise DomainError(f"unknown source {source!r}")
    r = _top_level_spacings(levels, k)
    law = config.gamma_law
    subs = [_sub(f"KS r_{i + 1}", ks_distance(r[:, i], law.cdf), ks_threshold) for i in range(k)]
    details = {"source": source, "beta": beta, "law": [law.shape, law.rate], "means": r.mean(axis=0).tolist()}
    if k > 1:
        subs.append(_sub("max pairwise |correlation|", max_abs_correlation(r), corr_threshold))
        ref = np.stack([law.sample(rng, size=m), law.sample(rng, size=m)], axis=1)
        details["ks2d_r1_r2_vs_independent"] = ks_two_sample_2d(r[:, :2], ref)
    return _composite(
        f"fixed_time_spacings[{source}, beta={beta:g}, n={n}, k={k}]",
        subs,
        {"n": n, "draws": m},
        None,
        "fixed-time edge spacings are asymptotically i.i.d. Gamma(beta/2, sqrt(beta/(2 t0)))",
        **details,
    )


# --- 5. sampler cross-validation --------------------------------------------------------


def check_sampler_cross_validation(
    rng: np.random.Generator,
    n_top: int = 50,
    m_top: int = 5000,
    n_corner: int = 8,
    m_corner: int = 5000,
    betas=(1, 2, 4),
    tol: float = 0.04,
) -> TestReport:
    """Tridiagonal and Dixon-Anderson samplers against dense Gaussian matrices.

    Corner checks per beta: the top and bottom of level ``n-1`` obtained by
    applying the corner sampler to dense level-``n`` spectra, and ``x[1][1]``
    from the full tridiagonal recursion.
    """
    subs = []
    t = 2.0 * n_top / 2
    tri = sample_beta_hermite_batch(n_top, 2, t, rng, m_top)[:, -1]
    dense = sample_dense_top_levels_batch(n_top, 2, rng, m_top, depth=0)[0][:, -1]
    subs.append(_sub(f"largest eigenvalue, tridiagonal vs dense, beta=2, n={n_top}", ks_two_sample(tri, dense), tol))
    for beta in betas:
        d_levels = sample_dense_top_levels_batch(n_corner, beta, rng, m_corner, depth=n_corner - 1)
        d_src = sample_dense_top_levels_batch(n_corner, beta, rng, m_corner, depth=0)[0]
        below = sample_corner_level_batch(d_src, beta, rng)
        subs.append(_sub(f"level {n_corner - 1} top, beta={beta}", ks_two_sample(below[:, -1], d_levels[1][:, -1]), tol))
        subs.append(_sub(f"level {n_corner - 1} bottom, beta={beta}", ks_two_sample(below[:, 0], d_levels[1][:, 0]), tol))
        full = sample_top_levels_batch(n_corner, beta, 2.0 * n_corner / beta, rng, m_corner)
        subs.append(_sub(f"x[1][1] via recursion, beta={beta}", ks_two_sample(full[-1][:, 0], d_levels[-1][:, 0]), tol))
    return _composite(
        "sampler_cross_validation",
        subs,
        {"top_draws": m_top, "corner_draws": m_corner},
        None,
        "independent samplers of the same law; two-sample KS",
    )


# --- 6. semicircle and rigidity ----------------------------------------------------------


def check_semicircle_rigidity(
    rng: np.random.Generator,
    n: int = 500,
    betas=(1, 2, 4),
    bins: int = 50,
    l1_tol: float = 0.05,
    draws: int = 20,
    exponent: float = 0.4,
    bulk: float = 0.2,
    fraction: float = 0.99,
) -> TestReport:
    """Scaled spectrum ``X/n`` at ``t = 2n/beta`` against the semicircle; rigidity around classical locations.

    The L1 distance uses the empirical measure pooled over all ``draws``: a single
    draw cannot get below about 0.04 on 50 bins because bin counts are integers
    (the classical locations themselves score 0.042 at n = 500).  Single-draw
    values are kept in the details.  Bulk indices are ``bulk*n < i <= (1 - bulk)*n``;
    the rigidity statistic is the shortfall of the fraction of (draw, index) pairs
    with ``|X_i - gamma_i| <= n**exponent``.
    """
    gamma = semicircle_quantiles(n)
    lo, hi = int(math.floor(bulk * n)), int(math.ceil((1.0 - bulk) * n))
    subs = []
    for beta in betas:
        x = sample_beta_hermite_batch(n, beta, 2.0 * n / beta, rng, draws)
        l1 = histogram_l1(x.reshape(-1) / n, semicircle_cdf, -2.0, 2.0, bins)
        single = [histogram_l1(row / n, semicircle_cdf, -2.0, 2.0, bins) for row in x]
        subs.append(_sub(f"{bins}-bin L1 distance, beta={beta:g}", l1, l1_tol, single_draw_median=float(np.median(single))))
        dev = np.abs(x[:, lo:hi] - gamma[lo:hi])
        frac = float(np.mean(dev <= n**exponent))
        subs.append(
            _sub(f"bulk rigidity fraction >= {fraction}, beta={beta:g}", max(fraction - frac, 0.0), 0.0, fraction=frac, max_dev=float(dev.max()))
        )
    return _composite(
        "semicircle_rigidity",
        subs,
        {"n": n, "rigidity_draws": draws},
        None,
        "semicircle law and rigidity of eigenvalues around classical locations",
    )


# --- 7-10. limit diffusions --------------------------------------------------------------


def check_stationarity(
    seed: int, k: int = 3, beta: float = 4.0, t0: float | None = None, dt: float = 1e-4, times=(1.0, 5.0), n_paths: int = 4000, tol: float = 0.05
) -> TestReport:
    t0 = 2.0 / beta if t0 is None else t0
    law = GammaLaw.for_spacings(beta, t0)
    samples, lowest = run_limit_r(k, beta, t0, dt, times, n_paths, seed)
    subs = [
        _sub(f"KS r_{i + 1} at t={t:g}", ks_distance(samples[:, j, i], law.cdf), tol)
        for j, t in enumerate(times)
        for i in range(k)
    ]
    return _composite(
        "stationarity",
        subs,
        {"paths": n_paths},
        seed,
        "product Gamma law is invariant for the spacing diffusion",
        dt=dt,
        lowest=float(lowest.min()),
    )


def check_restriction_consistency(
    seed: int, k: int = 3, beta: float = 4.0, t0: float | None = None, dt: float = 1e-4, t: float = 1.0, n_paths: int = 4000, tol: float = 0.05
) -> TestReport:
    """First coordinate of a k-dimensional stationary run against a direct one-dimensional run."""
    t0 = 2.0 / beta if t0 is None else t0
    big, _ = run_limit_r(k, beta, t0, dt, [t], n_paths, seed, offset=0)
    small, _ = run_limit_r(1, beta, t0, dt, [t], n_paths, seed, offset=n_paths)
    stat = ks_two_sample(big[:, 0, 0], small[:, 0, 0])
    return TestReport(
        "restriction_consistency",
        stat,
        tol,
        {"paths_each": n_paths},
        seed,
        "the first coordinates of the spacing system form a closed system",
        {"k": k, "t": t, "dt": dt},
    )


def check_positivity_and_z_equivalence(
    seed: int,
    k: int = 3,
    beta: float = 4.0,
    t0: float | None = None,
    dt: float = 1e-4,
    horizon: float = 1.0,
    positivity_paths: int = 1000,
    ks_paths: int = 4000,
    tol: float = 0.05,
) -> TestReport:
    t0 = 2.0 / beta if t0 is None else t0
    _, lowest = run_limit_r(k, beta, t0, dt, [horizon], positivity_paths, seed, offset=0)
    r_samples, _ = run_limit_r(k, beta, t0, dt, [horizon], ks_paths, seed, offset=positivity_paths)
    z_samples, z_gap = run_limit_z(k, beta, t0, dt, [horizon], ks_paths, seed, offset=positivity_paths + ks_paths)
    z_diff = z_samples[:, 0, 0] - z_samples[:, 0, 1]
    subs = [
        _sub("spacing paths touching zero", int(np.sum(lowest <= 0)), 0, smallest=float(lowest.min())),
        _sub("Z paths losing strict order", int(np.sum(z_gap <= 0)), 0, smallest=float(z_gap.min())),
        _sub(f"KS Z_1 - Z_2 vs r_1 at t={horizon:g}", ks_two_sample(z_diff, r_samples[:, 0, 0]), tol),
    ]
    return _composite(
        "positivity_and_z_equivalence",
        subs,
        {"positivity_paths": positivity_paths, "ks_paths_each": ks_paths},
        seed,
        "spacings never hit zero; differences of the position system equal the spacing system in law",
    )


def check_bessel_domination(
    seed: int, beta: float = 4.0, t0: float | None = None, d: float | None = None, dt: float = 1e-4, horizon: float = 1.0, n_paths: int = 100
) -> TestReport:
    """Spacing system (k = 1) and a Bessel-type majorant driven by identical increments from identical starts."""
    t0 = 2.0 / beta if t0 is None else t0
    d = beta / 2.0 if d is None else d
    violations, worst = 0, math.inf
    for p in range(n_paths):
        rng = stream(seed, p)
        start = gamma_product_init(1, beta, t0, rng)
        upper, incr = bessel_coupled_pair(float(start.r.r[0]), d, dt, horizon, rng, beta=beta)
        lower = limit_r_from_increments(start, incr, dt)[:, 0]
        gap = upper - lower
        violations += int(np.sum(gap < 0))
        worst = min(worst, float(gap.min()))
    return TestReport(
        "bessel_domination",
        violations,
        0,
        {"paths": n_paths, "steps_per_path": int(round(horizon / dt))},
        seed,
        "a Bessel-type process with dimension >= beta/2 dominates the spacing under a shared-noise coupling",
        {"smallest_gap": worst, "d": d},
    )


# --- 11. adjoint ---------------------------------------------------------------------------


def _log_density_grad(x, beta, t0):
    """``d/dx_i log g`` for ``g = prod x_i**(beta/2 - 1) exp(-rate x_i)``."""
    c = beta / 2.0 - 1.0
    rate = math.sqrt(beta / (2.0 * t0))
    return c / x - rate


def product_gamma_density(x, beta, t0):
    c = beta / 2.0 - 1.0
    rate = math.sqrt(beta / (2.0 * t0))
    x = np.asarray(x, dtype=float)
    return np.prod(x**c * np.exp(-rate * x), axis=-1)


def _drift(x, beta, t0):
    c = beta / 2.0 - 1.0
    b = c / x
    b[..., :-1] -= c / x[..., 1:]
    b[..., -1] -= math.sqrt(beta / (2.0 * t0))
    return b


def density_partials(x, beta, t0):
    """Closed-form ``(g, dg/dx_i, d2g/dx_i2, d2g/dx_i dx_{i+1})`` of the product Gamma density."""
    x = np.asarray(x, dtype=float)
    c = beta / 2.0 - 1.0
    g = product_gamma_density(x, beta, t0)
    u = _log_density_grad(x, beta, t0)
    first = g[..., None] * u
    second = g[..., None] * (u * u - c / x**2)
    mixed = g[..., None] * u[..., :-1] * u[..., 1:]
    return g, first, second, mixed


def adjoint_residual(x, beta: float, t0: float) -> np.ndarray:
    """``A* g`` at points ``x`` (shape ``(..., k)``) from the closed-form partials.

    ``A* g = sum_i d2g/dx_i2 - sum_i d2g/dx_i dx_{i+1} - sum_i b_i dg/dx_i - g sum_i db_i/dx_i``
    with ``db_i/dx_i = -(beta/2 - 1)/x_i**2``.
    """
    x = np.asarray(x, dtype=float)
    c = beta / 2.0 - 1.0
    g, first, second, mixed = density_partials(x, beta, t0)
    b = _drift(x, beta, t0)
    return second.sum(-1) - mixed.sum(-1) - np.sum(b * first, -1) + g * np.sum(c / x**2, -1)


def adjoint_residual_generic(x, beta: float, t0: float, h: float = 1e-4) -> float:
    """``-sum_i d(b_i g)/dx_i + sum_ij a_ij d2g/dx_i dx_j`` by central differences of ``g`` and ``b g``."""
    x = np.asarray(x, dtype=float)
    k = x.size

    def g(y):
        return float(product_gamma_density(y, beta, t0))

    def bg(y, i):
        return float(_drift(y.copy(), beta, t0)[i]) * g(y)

    e = np.eye(k) * h
    total = 0.0
    for i in range(k):
        total -= (bg(x + e[i], i) - bg(x - e[i], i)) / (2 * h)
        total += (g(x + e[i]) - 2 * g(x) + g(x - e[i])) / h**2
        if i + 1 < k:
            ei, ej = e[i], e[i + 1]
            mixed = (g(x + ei + ej) - g(x + ei - ej) - g(x - ei + ej) + g(x - ei - ej)) / (4 * h * h)
            total -= mixed  # a_{i,i+1} = a_{i+1,i} = -1/2
    return total


def check_adjoint_annihilation(
    k: int, beta: float, n_points: int, rng: np.random.Generator, t0: float | None = None, tol: float = 1e-6, box=(0.2, 5.0)
) -> TestReport:
    """Max of ``|A* g| / g`` over random interior points; ``g`` is the product Gamma density.

    ``t0`` defaults to ``beta/2`` (unit rate); any ``t0`` works when ``g`` uses
    the matching rate ``sqrt(beta/(2 t0))``.
    """
    t0 = beta / 2.0 if t0 is None else t0
    x = rng.uniform(box[0], box[1], size=(n_points, k))
    res = adjoint_residual(x, beta, t0)
    g = product_gamma_density(x, beta, t0)
    rel = float(np.max(np.abs(res) / g))
    return TestReport(
        f"adjoint_annihilation[k={k}, beta={beta:g}, t0={t0:g}]",
        rel,
        tol,
        {"points": n_points},
        None,
        "the product Gamma density is annihilated by the adjoint generator",
        {"k": k, "beta": beta, "t0": t0},
    )


def check_adjoint_suite(
    rng: np.random.Generator, ks=(1, 2, 3), betas=(4.0, 5.0), n_points: int = 100, tol: float = 1e-6, fd_points: int = 10, fd_tol: float = 1e-6
) -> TestReport:
    """Adjoint annihilation at both time normalizations plus derivative and operator cross-checks."""
    subs = []
    for k in ks:
        for beta in betas:
            for t0 in (beta / 2.0, 2.0 / beta):
                rep = check_adjoint_annihilation(k, beta, n_points, rng, t0=t0, tol=tol)
                subs.append(_sub(rep.name, rep.statistic, tol))
    # closed-form partials against central differences
    worst = 0.0
    h1, h2 = 1e-5, 1e-4
    for k in ks:
        for beta in betas:
            t0 = beta / 2.0
            for x in rng.uniform(0.2, 5.0, size=(fd_points, k)):
                g, first, second, mixed = density_partials(x, beta, t0)
                for i in range(k):
                    e = np.zeros(k)
                    e[i] = 1.0
                    gp = product_gamma_density(x + h1 * e, beta, t0)
                    gm = product_gamma_density(x - h1 * e, beta, t0)
                    worst = max(worst, abs((gp - gm) / (2 * h1) - first[i]) / g)
                    gp2 = product_gamma_density(x + h2 * e, beta, t0)
                    gm2 = product_gamma_density(x - h2 * e, beta, t0)
                    worst = max(worst, abs((gp2 - 2 * g + gm2) / h2**2 - second[i]) / g)
                    if i + 1 < k:
                        f = np.zeros(k)
                        f[i + 1] = 1.0
                        num = (
                            product_gamma_density(x + h2 * (e + f), beta, t0)
                            - product_gamma_density(x + h2 * (e - f), beta, t0)
                            - product_gamma_density(x - h2 * (e - f), beta, t0)
                            + product_gamma_density(x - h2 * (e + f), beta, t0)
                        ) / (4 * h2 * h2)
                        worst = max(worst, abs(num - mixed[i]) / g)
    subs.append(_sub("closed-form partials vs central differences (relative)", worst, fd_tol))
    generic = 0.0
    for k in ks:
        for beta in betas:
            for x in rng.uniform(0.5, 3.0, size=(3, k)):
                generic = max(generic, abs(adjoint_residual_generic(x, beta, beta / 2.0)) / float(product_gamma_density(x, beta, beta / 2.0)))
    subs.append(_sub("generic divergence-form adjoint by differences (relative)", generic, 1e-4))
    return _composite(
        "adjoint_annihilation",
        subs,
        {"points_per_case": n_points},
        None,
        "the product Gamma density is annihilated by the adjoint generator",
    )


# --- 12. dynamics and remainders --------------------------------------------------------------


def check_remainder_limits(config: SimConfig, rng: np.random.Generator, tol: float = 0.1, s_hat_target: float | None = None) -> TestReport:
    """Monte Carlo means of the drift remainders on exact fixed-time states.

    ``S_a`` tends to 0 and ``S_hat_k`` to ``-sqrt(beta/(2 t0))``, the constant
    drift of the last spacing; pass ``s_hat_target`` to test another value.
    """
    target = -math.sqrt(config.beta / (2.0 * config.t0)) if s_hat_target is None else float(s_hat_target)
    s, s_hat = sample_remainder_drifts(config, config.n_samples, rng)
    subs = [_sub(f"|mean S_{a}|", abs(float(s[:, a].mean())), tol, mean=float(s[:, a].mean())) for a in range(s.shape[1])]
    subs.append(_sub(f"|mean S_hat_{config.k} - ({target:.6g})|", abs(float(s_hat.mean()) - target), tol, mean=float(s_hat.mean())))
    return _composite(
        "remainder_limits",
        subs,
        {"n": config.n, "draws": config.n_samples},
        None,
        "nonlocal drift remainders of the edge spacings vanish or tend to the constant drift",
        beta=config.beta,
        t0=config.t0,
        k=config.k,
        s_hat_target=target,
    )


def check_dynamic_limit(
    seed: int,
    n: int = 60,
    k: int = 2,
    beta: float = 4.0,
    t0: float | None = None,
    dt: float = 1e-4,
    times=(0.0, 0.5),
    n_paths: int = 1000,
    ks_tol: float = 0.08,
    remainder_n: int = 200,
    remainder_draws: int = 500,
    remainder_tol: float = 0.1,
    s_hat_target: float = 1.0,
    parallelism: int = 1,
) -> TestReport:
    """Finite-N proxy for the process limit: mdbm spacings stay Gamma-distributed; remainders at large N.

    ``s_hat_target`` is the value ``S_hat_k`` is compared against.
    """
    t0 = 2.0 / beta if t0 is None else t0
    config = SimConfig(beta=beta, t0=t0, n=n, k=k, dt=dt, horizon=max(times), n_samples=n_paths, seed=seed)
    paths = run_spacing_trajectories(config, list(times), parallelism=parallelism)
    law = config.gamma_law
    subs = [
        _sub(f"KS r_{i + 1} at t={t:g}", ks_distance(paths[:, j, i], law.cdf), ks_tol, mean=float(paths[:, j, i].mean()))
        for j, t in enumerate(times)
        for i in range(k)
    ]
    subs.append(_sub("spacings positive", int(np.sum(paths <= 0)), 0))
    rem_cfg = SimConfig(beta=beta, t0=t0, n=remainder_n, k=k, n_samples=remainder_draws, seed=seed)
    s, s_hat = sample_remainder_drifts(rem_cfg, remainder_draws, stream(seed, n_paths))
    subs.append(_sub("|mean S_0|", abs(float(s[:, 0].mean())), remainder_tol, mean=float(s[:, 0].mean())))
    subs.append(_sub(f"|mean S_hat_{k} - {s_hat_target:g}|", abs(float(s_hat.mean()) - s_hat_target), remainder_tol, mean=float(s_hat.mean())))
    return _composite(
        "dynamic_limit",
        subs,
        {"paths": n_paths, "remainder_draws": remainder_draws},
        seed,
        "finite-N proxy for convergence of the edge spacings to the limit diffusion",
        n=n,
        dt=dt,
        s_hat_target=s_hat_target,
        s_hat_derived_limit=-math.sqrt(beta / (2.0 * t0)),
    )


# --- suite ------------------------------------------------------------------------------------


def _item_integral(params, seed, parallelism):
    return check_integral_2pi(**params)


def _item_identity(params, seed, parallelism):
    p = {"n": 100, "beta": 3.0, "n_samples": 2000, **params}
    return check_inverse_gap_identity(p.pop("n"), p.pop("beta"), p.pop("n_samples"), stream(seed), **p)


def _item_limits(params, seed, parallelism):
    p = {"n": 200, "betas": [2.0, 4.0], "n_samples": 500, **params}
    return check_inverse_gap_limits(p.pop("n"), p.pop("betas"), p.pop("n_samples"), stream(seed), **p)


def _item_fixed_time(params, seed, parallelism):
    p = {
        "runs": [
            {"source": "corners", "beta": 2.0, "n": 150, "k": 3, "n_samples": 4000, "ks_threshold": 0.05},
            {"source": "dense", "beta": 1.0, "n": 100, "k": 2, "n_samples": 4000, "ks_threshold": 0.06},
            {"source": "dense", "beta": 4.0, "n": 100, "k": 2, "n_samples": 4000, "ks_threshold": 0.06},
        ],
        "corr_threshold": 0.05,
        **params,
    }
    subs = []
    for j, run in enumerate(p["runs"]):
        run = dict(run)
        source = run.pop("source", "corners")
        ks_thr = run.pop("ks_threshold", 0.05)
        beta = run.pop("beta")
        cfg = SimConfig(beta=beta, t0=run.pop("t0", 2.0 / beta), seed=seed, **run)
        rep = check_fixed_time_spacings(cfg, stream(seed, j), source, ks_thr, p["corr_threshold"])
        for s in rep.details["checks"]:
            subs.append({**s, "name": f"{rep.name}: {s['name']}"})
    return _composite(
        "fixed_time_spacings",
        subs,
        {"runs": len(p["runs"])},
        seed,
        "fixed-time edge spacings are asymptotically i.i.d. Gamma(beta/2, sqrt(beta/(2 t0)))",
    )


def _item_cross(params, seed, parallelism):
    return check_sampler_cross_validation(stream(seed), **params)


def _item_semicircle(params, seed, parallelism):
    return check_semicircle_rigidity(stream(seed), **params)


def _item_stationarity(params, seed, parallelism):
    return check_stationarity(seed, **params)


def _item_restriction(params, seed, parallelism):
    return check_restriction_consistency(seed, **params)


def _item_positivity(params, seed, parallelism):
    return check_positivity_and_z_equivalence(seed, **params)


def _item_bessel(params, seed, parallelism):
    return check_bessel_domination(seed, **params)


def _item_adjoint(params, seed, parallelism):
    return check_adjoint_suite(stream(seed), **params)


def _item_dynamic(params, seed, parallelism):
    return check_dynamic_limit(seed, parallelism=parallelism, **params)


def _item_remainder(params, seed, parallelism):
    p = {"n": 200, "k": 2, "beta": 4.0, "n_samples": 500, "tol": 0.1, **params}
    tol = p.pop("tol")
    beta = p.pop("beta")
    cfg = SimConfig(beta=beta, t0=p.pop("t0", 2.0 / beta), seed=seed, **p)
    return check_remainder_limits(cfg, stream(seed), tol=tol)


# name -> (criterion label, runner, runtime budget in seconds or None)
SUITE_ITEMS = {
    "integral_2pi": ("1", _item_integral, 1.0),
    "inverse_gap_identity": ("2", _item_identity, 60.0),
    "inverse_gap_limits": ("3", _item_limits, 120.0),
    "fixed_time_spacings": ("4", _item_fixed_time, 600.0),
    "sampler_cross_validation": ("5", _item_cross, 300.0),
    "semicircle_rigidity": ("6", _item_semicircle, 120.0),
    "stationarity": ("7", _item_stationarity, 600.0),
    "restriction_consistency": ("8", _item_restriction, 600.0),
    "positivity_and_z_equivalence": ("9", _item_positivity, 300.0),
    "bessel_domination": ("10", _item_bessel, 60.0),
    "adjoint_annihilation": ("11", _item_adjoint, 1.0),
    "dynamic_limit": ("12", _item_dynamic, 1800.0),
    "remainder_limits": ("12*", _item_remainder, None),
    "determinism": ("13", None, None),
}


def default_suite(seed: int = 42) -> dict:
    return {"seed": seed, "tests": [{"name": name} for name in SUITE_ITEMS]}


def _validate_suite(suite: dict) -> list:
    if not isinstance(suite, dict):
        raise ConfigError("suite configuration must be a JSON object")
    unknown = set(suite) - {"seed", "tests", "parallelism"}
    if unknown:
        raise ConfigError(f"unknown suite keys: {sorted(unknown)}")
    tests = suite.get("tests", [])
    if not isinstance(tests, list):
        raise ConfigError("'tests' must be a list")
    out = []
    for j, entry in enumerate(tests):
        if isinstance(entry, str):
            entry = {"name": entry}
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"tests[{j}] needs a 'name'")
        name = entry["name"]
        if name not in SUITE_ITEMS:
            raise ConfigError(f"tests[{j}]: unknown test {name!r}; known: {sorted(SUITE_ITEMS)}")
        params = entry.get("params", {})
        extra = set(entry) - {"name", "params"}
        if extra:
            raise ConfigError(f"tests[{j}]: unknown keys {sorted(extra)}")
        if not isinstance(params, dict):
            raise ConfigError(f"tests[{j}].params must be an object")
        out.append((name, params))
    return out


def _run_item(name, params, seed, parallelism):
    label, runner, _ = SUITE_ITEMS[name]
    try:
        rep = runner(dict(params), seed, parallelism)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from exc
    return TestReport(
        rep.name, rep.statistic, rep.threshold, rep.sample_sizes, seed, rep.reference, rep.details, criterion=label
    )


def run_suite(suite: dict, parallelism: int | None = None, timings: dict | None = None) -> list:
    """Execute a parsed suite; reports come back in declared order.

    Item ``j`` runs with seed ``mix64(seed, j)``.  A ``determinism`` item re-runs
    every other item with its own ``parallelism`` (default 8) and counts the
    reports whose serialized bytes differ from the first run.
    """
    items = _validate_suite(suite)
    seed = int(suite.get("seed", 42))
    parallelism = int(suite.get("parallelism", 1) if parallelism is None else parallelism)
    timings = {} if timings is None else timings
    work = [(j, n, p) for j, (n, p) in enumerate(items) if n != "determinism"]
    det = [(j, p) for j, (n, p) in enumerate(items) if n == "determinism"]
    item_times = {}
    reports = _execute_indexed(work, seed, parallelism, item_times)
    timings.update({items[j][0]: item_times[j] for j, _, _ in work})
    out = dict(zip([j for j, _, _ in work], reports))
    for j, params in det:
        unknown = set(params) - {"parallelism"}
        if unknown:
            raise ConfigError(f"determinism: unknown params {sorted(unknown)}")
        start = time.perf_counter()
        rerun = _execute_indexed(work, seed, int(params.get("parallelism", 8)), {})
        first = [_canonical(r) for r in reports]
        second = [_canonical(r) for r in rerun]
        differing = [reports[i].name for i in range(len(first)) if first[i] != second[i]]
        out[j] = TestReport(
            "determinism",
            len(differing),
            0,
            {"items": len(work)},
            seed,
            "identical suite configuration and seed give byte-identical reports",
            {"rerun_parallelism": int(params.get("parallelism", 8)), "differing": differing},
            criterion=SUITE_ITEMS["determinism"][0],
        )
        timings["determinism"] = time.perf_counter() - start
    return [out[j] for j in range(len(items))]


def _execute_indexed(work, suite_seed, parallelism, timings):
    def one(entry):
        j, name, params = entry
        start = time.perf_counter()
        rep = _run_item(name, params, mix64(suite_seed, j), parallelism)
        timings[j] = time.perf_counter() - start
        return rep

    if parallelism <= 1:
        return [one(e) for e in work]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, work))


def _canonical(report: TestReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True)


def reports_to_json(reports) -> str:
    """Canonical JSON text: sorted keys, shortest round-trip floats, LF line ends."""
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def reports_to_csv(reports) -> str:
    lines = ["criterion,name,statistic,threshold,passed"]
    for r in reports:
        name = r.name.replace('"', "'")
        lines.append(f'{r.criterion},"{name}",{r.statistic!r},{r.threshold!r},{str(r.passed).lower()}')
    return "\n".join(lines) + "\n"


def run_acceptance_suite(config_path, out_dir=None, parallelism: int | None = None):
    """Parse a suite file, run it, and optionally write ``report.json``, ``summary.csv`` and ``timings.json``.

    Returns the list of reports; overall success is ``all(r.passed for r in reports)``.
    """
    from pathlib import Path

    path = Path(config_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read suite configuration {path}: {exc}") from exc
    from .io import loads_strict

    suite = loads_strict(text, str(path))
    timings: dict = {}
    reports = run_suite(suite, parallelism, timings)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(reports_to_json(reports), encoding="utf-8", newline="\n")
        (out / "summary.csv").write_text(reports_to_csv(reports), encoding="utf-8", newline="\n")
        (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    return reports
