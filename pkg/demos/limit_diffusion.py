"""The limiting edge diffusion (Brownian TASEP-like spacings).

The k top spacings converge to a diffusion with drift c/r_i - c/r_{i+1} (last
one: c/r_k - rate) and correlated noise.  Three facts are visible numerically:
i.i.d. Gamma is stationary, spacings never hit zero, and a Bessel process
driven by the same noise stays above the first spacing.
"""
import numpy as np

from dyson_edge.core import GammaLaw
from dyson_edge.limit import bessel_coupled_pair, gamma_product_init, limit_r_from_increments, run_limit_r, run_limit_z
from dyson_edge.rng import stream
from dyson_edge.stats import ks_distance, ks_two_sample

beta, t0, dt = 4.0, 0.5, 1e-3
law = GammaLaw.for_spacings(beta, t0)

samples, lowest = run_limit_r(3, beta, t0, dt, [0.0, 1.0, 3.0], 2000, seed=1)
for j, t in enumerate([0.0, 1.0, 3.0]):
    ks = [ks_distance(samples[:, j, i], law.cdf) for i in range(3)]
    print(f"t={t:g}: KS against Gamma per coordinate {np.round(ks, 3)}")
print(f"smallest spacing over all paths: {lowest.min():.2e}")

# positions instead of differences: Z_1 > Z_2 > ... with a drifting bottom particle
z, gap = run_limit_z(3, beta, t0, dt, [1.0], 2000, seed=2)
print(f"Z_1 - Z_2 vs r_1 at t=1, two-sample KS: {ks_two_sample(z[:, 0, 0] - z[:, 0, 1], samples[:, 1, 0]):.3f}")

# Bessel comparison: same noise, dimension beta/2
worst = np.inf
for p in range(50):
    rng = stream(3, p)
    start = gamma_product_init(1, beta, t0, rng)
    upper, incr = bessel_coupled_pair(float(start.r.r[0]), beta / 2, dt, 1.0, rng, beta=beta)
    lower = limit_r_from_increments(start, incr, dt)[:, 0]
    worst = min(worst, float(np.min(upper - lower)))
print(f"min over 50 coupled paths of (Bessel - r_1): {worst:.3e}  (never negative)")

# without noise every spacing relaxes to c / rate
c = beta / 2 - 1
start = gamma_product_init(3, beta, t0, stream(4))
path = limit_r_from_increments(start, np.zeros((8000, 4)), dt)
print(f"noise-free end state {np.round(path[-1], 6)}, fixed point {c / law.rate:g}")
