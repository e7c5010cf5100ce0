import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyson_edge.core import SimConfig
from dyson_edge.errors import ConfigError
from dyson_edge.rng import stream
from dyson_edge.verify import (
    SUITE_ITEMS,
    TestReport,
    adjoint_residual,
    adjoint_residual_generic,
    check_adjoint_annihilation,
    check_integral_2pi,
    check_remainder_limits,
    default_suite,
    product_gamma_density,
    reports_to_csv,
    reports_to_json,
    run_suite,
)


def test_report_passed_is_derived():
    assert TestReport("a", 0.01, 0.05).passed
    assert not TestReport("a", 0.06, 0.05).passed
    assert "passed" in TestReport("a", 0.0, 0.0).to_dict()


def test_integral_check_passes():
    rep = check_integral_2pi()
    assert rep.passed
    values = [c["value"] for c in rep.details["checks"]]
    assert values[0] == pytest.approx(2 * np.pi, abs=1e-12)


@given(
    x=st.lists(st.floats(0.3, 4.0), min_size=1, max_size=3),
    beta=st.floats(4.0, 9.0),
    t0=st.floats(0.2, 3.0),
)
@settings(max_examples=40, deadline=None)
def test_adjoint_closed_form_vanishes(x, beta, t0):
    x = np.array(x)
    assert abs(adjoint_residual(x, beta, t0)) <= 1e-9 * product_gamma_density(x, beta, t0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_adjoint_generic_route_agrees(k):
    x = stream(k).uniform(0.5, 3.0, size=k)
    g = product_gamma_density(x, 4.5, 2.25)
    assert abs(adjoint_residual_generic(x, 4.5, 2.25)) / g < 1e-4


def test_adjoint_detects_wrong_density():
    # Gamma with the wrong rate is not stationary: the residual must be large.
    x = stream(0).uniform(0.5, 3.0, size=(20, 2))
    res = adjoint_residual(x, 4.0, 2.0)
    assert np.max(np.abs(res) / product_gamma_density(x, 4.0, 2.0)) < 1e-9
    from dyson_edge.verify import _drift, density_partials

    g, first, second, mixed = density_partials(x, 4.0, 0.5)
    b = _drift(x, 4.0, 2.0)
    wrong = second.sum(-1) - mixed.sum(-1) - np.sum(b * first, -1) + g * np.sum(1.0 / x**2, -1)
    assert np.max(np.abs(wrong) / g) > 1e-2


def test_adjoint_report():
    rep = check_adjoint_annihilation(2, 5.0, 50, stream(1))
    assert rep.passed and rep.statistic < 1e-6


def test_remainder_target_is_negative_rate():
    cfg = SimConfig(beta=4.0, t0=0.5, n=120, k=2, n_samples=200)
    rep = check_remainder_limits(cfg, stream(2))
    assert rep.details["s_hat_target"] == pytest.approx(-2.0)
    assert rep.passed


def test_suite_validation_errors():
    with pytest.raises(ConfigError, match="unknown test"):
        run_suite({"seed": 1, "tests": ["nope"]})
    with pytest.raises(ConfigError, match="unknown suite keys"):
        run_suite({"seed": 1, "tests": [], "extra": 1})
    with pytest.raises(ConfigError, match="bad parameters"):
        run_suite({"seed": 1, "tests": [{"name": "integral_2pi", "params": {"bogus": 1}}]})


def test_default_suite_lists_every_criterion():
    names = [t["name"] for t in default_suite()["tests"]]
    assert names == list(SUITE_ITEMS)
    labels = {SUITE_ITEMS[n][0].rstrip("*") for n in names}
    assert labels == {str(i) for i in range(1, 14)}


def test_small_suite_deterministic_across_parallelism():
    suite = {"seed": 42, "tests": ["integral_2pi", "adjoint_annihilation", "determinism"]}
    a = run_suite(suite, parallelism=1)
    b = run_suite(suite, parallelism=3)
    assert reports_to_json(a) == reports_to_json(b)
    assert a[-1].name == "determinism" and a[-1].passed
    rows = json.loads(reports_to_json(a))
    assert [r["criterion"] for r in rows] == ["1", "11", "13"]
    assert reports_to_csv(a).splitlines()[0] == "criterion,name,statistic,threshold,passed"
