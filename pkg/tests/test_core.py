import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from dyson_edge.core import (
    GammaLaw,
    GtArray,
    SimConfig,
    SpacingVector,
    check_interlacing,
    edge_spacings,
    gamma_cdf,
    gamma_pdf,
    regularized_lower_gamma,
    rescale_time,
    semicircle_cdf,
    semicircle_density,
    semicircle_quantiles,
    validate_interlacing,
)
from dyson_edge.errors import DomainError, InterlacingError, StructuralError


def small_array():
    return GtArray(([0.0], [-1.0, 1.0], [-2.0, 0.5, 3.0]))


def test_levels_and_flat_roundtrip():
    a = small_array()
    assert a.n_levels == 3
    assert a.level(2).tolist() == [-1.0, 1.0]
    assert a.top_particles().tolist() == [0.0, 1.0, 3.0]
    assert GtArray.from_flat(a.flat()) == a


def test_bad_row_length():
    with pytest.raises(StructuralError):
        GtArray(([0.0], [1.0]))
    with pytest.raises(StructuralError):
        GtArray.from_flat(np.zeros(4))


def test_interlacing_violation_names_entry():
    bad = GtArray(([2.0], [-1.0, 1.0]))
    assert not validate_interlacing(bad)
    with pytest.raises(InterlacingError, match="level 1, index 1"):
        check_interlacing(bad)


def test_strict_vs_weak_interlacing():
    tied = GtArray(([1.0], [-1.0, 1.0]))
    assert validate_interlacing(tied)
    assert not validate_interlacing(tied, strict=True)


def test_edge_spacings_by_hand():
    r = edge_spacings(small_array(), 2)
    assert r.r.tolist() == [2.0, 1.0]
    with pytest.raises(DomainError):
        edge_spacings(small_array(), 3)


def test_spacing_vector_rejects_negative():
    with pytest.raises(DomainError):
        SpacingVector([1.0, -0.1])


def test_rescale_time_is_diffusive():
    a = rescale_time(small_array(), 1.0, 4.0)
    assert a.flat().tolist() == (2 * small_array().flat()).tolist()


def test_gamma_law_defaults():
    law = GammaLaw.for_spacings(4.0)
    assert law.shape == 2.0 and law.rate == 2.0
    assert law.mean == pytest.approx(1.0)
    law = GammaLaw.for_spacings(4.0, 0.5)
    assert law.rate == pytest.approx(math.sqrt(4.0))


@given(
    a=st.floats(0.05, 30.0),
    x=st.floats(0.0, 80.0),
)
def test_regularized_gamma_matches_scipy(a, x):
    assert regularized_lower_gamma(a, x) == pytest.approx(special.gammainc(a, x), abs=1e-12)


@pytest.mark.parametrize("beta,t0", [(1.0, 2.0), (2.0, 1.0), (4.0, 0.5), (5.0, 1.3)])
def test_gamma_cdf_matches_scipy(beta, t0):
    law = GammaLaw.for_spacings(beta, t0)
    x = np.linspace(0.0, 8.0, 161)
    ref = stats.gamma(law.shape, scale=1.0 / law.rate)
    assert np.max(np.abs(gamma_cdf(law, x) - ref.cdf(x))) < 1e-12
    assert np.max(np.abs(gamma_pdf(law, x[1:]) - ref.pdf(x[1:]))) < 1e-12


@given(shape=st.floats(0.5, 10.0), rate=st.floats(0.2, 5.0), x=st.floats(0.05, 20.0))
def test_gamma_cdf_derivative_is_pdf(shape, rate, x):
    law = GammaLaw(shape, rate)
    h = 1e-5 * max(1.0, x)
    fd = (gamma_cdf(law, x + h) - gamma_cdf(law, x - h)) / (2 * h)
    assert fd == pytest.approx(float(gamma_pdf(law, x)), rel=1e-5, abs=1e-8)


def test_semicircle_cdf_is_integral_of_density():
    s = np.linspace(-2, 2, 4001)
    dens = semicircle_density(s)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    assert np.max(np.abs(cum - semicircle_cdf(s))) < 1e-4
    assert semicircle_cdf(-3.0) == 0.0 and semicircle_cdf(2.5) == 1.0


@given(n=st.integers(1, 400))
@settings(max_examples=30)
def test_semicircle_quantiles(n):
    g = semicircle_quantiles(n)
    assert g.shape == (n,)
    assert np.all(np.diff(g) > 0) or n == 1
    np.testing.assert_allclose(semicircle_cdf(g / n), np.arange(1, n + 1) / n, atol=1e-8)


def test_sim_config_validation():
    SimConfig(beta=4, t0=0.5, n=10, k=3)
    with pytest.raises(DomainError):
        SimConfig(beta=4, t0=0.5, n=3, k=3)
    with pytest.raises(DomainError):
        SimConfig(beta=0.5, t0=0.5, n=3)
    with pytest.raises(DomainError):
        SimConfig(beta=4, t0=0.5, n=3, dt=2.0, horizon=1.0)
    with pytest.raises(DomainError):
        SimConfig(beta=2, t0=1, n=3).require_dynamics()
