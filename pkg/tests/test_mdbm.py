import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dyson_edge.core import GtArray, SimConfig, validate_interlacing
from dyson_edge.ensemble import sample_beta_hermite_batch, sample_corners_process
from dyson_edge.errors import DomainError, NumericalError
from dyson_edge.mdbm import (
    MdbmState,
    advance_mdbm,
    mdbm_drift,
    remainder_drifts,
    run_spacing_trajectories,
    run_spacing_trajectory,
    sample_remainder_drifts,
    step_mdbm,
    warm_start,
)
from dyson_edge.rng import stream
from dyson_edge.stats import ks_distance, ks_two_sample


def naive_drift(array, beta):
    c = beta / 2 - 1
    out = []
    for k, row in enumerate(array.levels, start=1):
        below = array.levels[k - 2] if k > 1 else []
        for i, x in enumerate(row):
            s = sum(1 / (x - y) for y in below) - sum(1 / (x - row[j]) for j in range(k) if j != i)
            out.append(c * s)
    return np.array(out)


def test_drift_by_hand():
    a = GtArray(([0.0], [-1.0, 1.0]))
    np.testing.assert_allclose(mdbm_drift(a, 6.0), [0.0, -1.0, 1.0])


@given(n=st.integers(1, 9), beta=st.floats(4.0, 12.0), seed=st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_drift_matches_naive_sum(n, beta, seed):
    a = sample_corners_process(n, beta, float(n), stream(seed))
    np.testing.assert_allclose(mdbm_drift(a, beta), naive_drift(a, beta), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("scheme", ["implicit", "euler"])
def test_single_particle_is_brownian(scheme):
    finals = []
    for p in range(2000):
        x = np.zeros(1)
        advance_mdbm(x, 1, 4.0, 0.05, 20, stream(3, p), scheme)
        finals.append(x[0])
    assert ks_distance(finals, stats.norm(0, 1).cdf) < 0.04


def near_collision():
    # level-2 particle 1e-9 right of the level-1 particle; the gap is a critical Bessel process at beta = 4
    return np.array([0.0, 1e-9, 1.0])


def test_euler_floor_raises_with_location():
    with pytest.raises(NumericalError, match=r"smallest gap .* at x\[\d\]\[\d\]"):
        advance_mdbm(near_collision(), 2, 4.0, 1e-2, 5, stream(0), "euler")


def test_implicit_survives_near_collision():
    x = near_collision()
    advance_mdbm(x, 2, 4.0, 1e-2, 200, stream(0), "implicit")
    assert validate_interlacing(GtArray.from_flat(x), strict=True)


def test_euler_refinement_counts_rejections():
    x = np.array([0.0, -1e-3, 1.0])
    rejected = advance_mdbm(x, 2, 8.0, 1e-3, 10, stream(1), "euler")
    assert rejected > 0
    assert validate_interlacing(GtArray.from_flat(x), strict=True)


def test_schemes_agree_on_a_benign_state():
    # Far-apart particles: no rejections, so both schemes consume the same noise.
    x0 = np.array([0.0, -5.0, 5.0, -10.0, 0.5, 10.0])
    a, b = x0.copy(), x0.copy()
    assert advance_mdbm(a, 3, 8.0, 1e-5, 200, stream(2), "euler") == 0
    advance_mdbm(b, 3, 8.0, 1e-5, 200, stream(2), "implicit")
    np.testing.assert_allclose(a, b, atol=1e-6)


@given(n=st.integers(2, 8), beta=st.floats(4.0, 10.0), seed=st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_implicit_steps_keep_strict_interlacing(n, beta, seed):
    rng = stream(seed)
    state = warm_start(SimConfig(beta=beta, t0=2.0 / beta, n=n), rng)
    for _ in range(20):
        state = step_mdbm(state, 1e-2, rng, check=True)
    assert state.time == pytest.approx(n * 2.0 / beta + 0.2)


def test_state_requires_beta_4():
    a = GtArray(([0.0],))
    with pytest.raises(DomainError):
        MdbmState(a, 0.0, 3.0)
    with pytest.raises(DomainError):
        advance_mdbm(np.zeros(1), 1, 4.0, 0.1, 1, stream(0), "rk4")


def test_warm_start_matches_fixed_time_law():
    cfg = SimConfig(beta=4.0, t0=0.5, n=6)
    tops = [warm_start(cfg, stream(1, p)).array.level(6)[-1] for p in range(2000)]
    direct = sample_beta_hermite_batch(6, 4.0, 3.0, stream(2), 2000)[:, -1]
    assert ks_two_sample(tops, direct) <= 0.05


def test_trajectories_independent_of_parallelism():
    cfg = SimConfig(beta=4.0, t0=0.5, n=8, k=2, dt=1e-3, seed=5)
    one = run_spacing_trajectories(cfg, [0.0, 0.02, 0.05], n_paths=6, parallelism=1)
    four = run_spacing_trajectories(cfg, [0.0, 0.02, 0.05], n_paths=6, parallelism=4)
    assert one.shape == (6, 3, 2)
    assert np.array_equal(one, four)
    single = run_spacing_trajectory(cfg, [0.0, 0.02, 0.05], stream(5, 3))
    np.testing.assert_array_equal(np.array([s.r for s in single]), one[3])


def test_remainders_by_drift_difference():
    beta, n, k = 6.0, 7, 3
    c = beta / 2 - 1
    a = sample_corners_process(n, beta, float(n), stream(8))
    drift = mdbm_drift(a, beta)
    top_idx = [m * (m + 1) // 2 - 1 for m in range(1, n + 1)]
    tops = a.top_particles()
    top_drift = drift[top_idx]
    r = tops[::-1][:-1] - tops[::-1][1:]  # r[i] = top(n-i) - top(n-i-1)
    s, s_hat = remainder_drifts(MdbmState(a, 1.0, beta), k)
    for idx in range(k - 1):
        dr = top_drift[n - 1 - idx] - top_drift[n - 2 - idx]
        assert s[idx] == pytest.approx(dr - c * (1 / r[idx] - 1 / r[idx + 1]), rel=1e-9, abs=1e-9)
    # lower top moves as the top of a Dyson BM on its own level
    low = a.level(n - k)
    dyson = (beta / 2) * np.sum(1 / (low[-1] - low[:-1]))
    dr = top_drift[n - k] - dyson
    assert s_hat == pytest.approx(dr - c / r[k - 1], rel=1e-9, abs=1e-9)


def test_sample_remainder_drift_shapes():
    s, s_hat = sample_remainder_drifts(SimConfig(beta=4.0, t0=0.5, n=10, k=3), 5, stream(0))
    assert s.shape == (5, 2) and s_hat.shape == (5,)
