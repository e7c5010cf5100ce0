import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dyson_edge.core import validate_interlacing
from dyson_edge.ensemble import (
    dense_diagonal_variance,
    sample_beta_hermite_batch,
    sample_corner_level_batch,
    sample_corners_process,
    sample_dense_corners,
    sample_dense_top_levels_batch,
    sample_top_levels_batch,
    tridiagonal_model,
)
from dyson_edge.errors import DomainError, StructuralError
from dyson_edge.rng import mix64, stream
from dyson_edge.stats import ks_distance


def second_moment_oracle(n, beta, t):
    # Homogeneity of exp(-|x|^2/(2t)) * |Vandermonde|^beta: E|x|^2 = t (n + beta n(n-1)/2).
    return t * (n + beta * n * (n - 1) / 2.0)


@pytest.mark.parametrize("n,beta,t", [(1, 2.0, 1.0), (5, 3.0, 1.3), (8, 1.0, 0.7), (6, 6.5, 2.0)])
def test_tridiagonal_second_moment(n, beta, t):
    x = sample_beta_hermite_batch(n, beta, t, stream(11, n), 20000)
    sq = np.sum(x * x, axis=1)
    se = sq.std(ddof=1) / np.sqrt(sq.size)
    assert abs(sq.mean() - second_moment_oracle(n, beta, t)) < 4 * se


def test_tridiagonal_eigenvalues_match_dense_eig():
    diag, off = tridiagonal_model(7, 2.5, 1.0, stream(3))
    h = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    x = sample_beta_hermite_batch(7, 2.5, 1.0, stream(3), 1)[0]
    np.testing.assert_allclose(x, np.linalg.eigvalsh(h), atol=1e-10)


@pytest.mark.parametrize("beta", [1.0, 2.0, 4.0, 7.0])
def test_corner_level_two_points_is_beta_law(beta):
    # One point below (a, b): density proportional to ((y-a)(b-y))^(beta/2 - 1).
    upper = np.tile([-1.0, 3.0], (4000, 1))
    y = sample_corner_level_batch(upper, beta, stream(5, int(beta)))[:, 0]
    u = (y + 1.0) / 4.0
    assert ks_distance(u, stats.beta(beta / 2, beta / 2).cdf) < 0.03


def test_corner_level_rejects_ties():
    with pytest.raises(StructuralError):
        sample_corner_level_batch(np.array([[0.0, 0.0, 1.0]]), 2.0, stream(0))


@given(n=st.integers(1, 12), beta=st.floats(1.0, 9.0), seed=st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_corners_process_strictly_interlaces(n, beta, seed):
    a = sample_corners_process(n, beta, float(n), stream(seed))
    assert a.n_levels == n
    assert validate_interlacing(a, strict=n > 1)


def test_top_levels_batch_shapes():
    levels = sample_top_levels_batch(6, 2.0, 6.0, stream(1), 5, depth=2)
    assert [lv.shape for lv in levels] == [(5, 6), (5, 5), (5, 4)]
    with pytest.raises(DomainError):
        sample_top_levels_batch(6, 2.0, 6.0, stream(1), 5, depth=6)


@pytest.mark.parametrize("beta", [1, 2, 4])
def test_dense_second_moment(beta):
    # Dense matrices correspond to variance t = 2n/beta.
    n = 4
    x = sample_dense_top_levels_batch(n, beta, stream(7, beta), 6000, depth=0)[0]
    sq = np.sum(x * x, axis=1)
    se = sq.std(ddof=1) / np.sqrt(sq.size)
    assert abs(sq.mean() - second_moment_oracle(n, beta, 2.0 * n / beta)) < 4 * se


def test_dense_corners_interlace():
    for beta in (1, 2, 4):
        assert validate_interlacing(sample_dense_corners(6, beta, stream(beta)), strict=True)
    with pytest.raises(DomainError):
        dense_diagonal_variance(3, 3)


def test_streams_are_reproducible():
    assert mix64(42, 0) != mix64(42, 1)
    a = sample_beta_hermite_batch(4, 2.0, 1.0, stream(9, 2), 3)
    b = sample_beta_hermite_batch(4, 2.0, 1.0, stream(9, 2), 3)
    assert np.array_equal(a, b)
