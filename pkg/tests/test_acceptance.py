"""Acceptance suite: every criterion on seed 42, one PASS/FAIL line each.

The whole default suite runs once at parallelism 1; its ``determinism`` item
re-runs every other item at parallelism 8 and compares the report bytes.
Thresholds below are pinned here so that a change in a library default cannot
silently loosen a criterion.  Runtime budgets are checked against the first run.

Expect criterion 12 to fail: its literal target for the last drift remainder is
+1, while the remainder tends to -sqrt(beta/(2 t0)) = -2 at beta = 4.  The
supplementary line 12* checks the same remainders against -2.
"""
import json
import time

import pytest

from dyson_edge.verify import SUITE_ITEMS, default_suite, reports_to_csv, reports_to_json, run_suite

SEED = 42

# criterion -> {sub-check name fragment: threshold}
PINNED = {
    "1": {"integral, cosine substitution": 1e-8, "integral, algebraic weight": 1e-8, "semicircle normalization": 1e-10},
    "2": {None: 3.0},
    "3": {"same-level sum, beta=2": 0.1, "cross-level sum, beta=2": 0.1, "same-level sum, beta=4": 0.1, "cross-level sum, beta=4": 0.1},
    "4": {
        "corners, beta=2, n=150, k=3]: KS": 0.05,
        "dense, beta=1, n=100, k=2]: KS": 0.06,
        "dense, beta=4, n=100, k=2]: KS": 0.06,
        "max pairwise |correlation|": 0.05,
    },
    "5": {"largest eigenvalue": 0.04, "level 7": 0.04, "x[1][1]": 0.04},
    "6": {"50-bin L1 distance": 0.05},
    "7": {"KS r_1 at t=1": 0.05, "KS r_3 at t=5": 0.05},
    "8": {None: 0.05},
    "9": {"KS Z_1 - Z_2 vs r_1 at t=1": 0.05, "spacing paths touching zero": 0},
    "10": {None: 0},
    "11": {"adjoint_annihilation[k=3, beta=5, t0=2.5]": 1e-6},
    "12": {"KS r_1 at t=0.5": 0.08, "KS r_2 at t=0": 0.08, "|mean S_0|": 0.1, "|mean S_hat_2 - 1|": 0.1},
    "12*": {"|mean S_0|": 0.1, "S_hat_2": 0.1},
    "13": {None: 0},
}

RUNTIME_BUDGET = {label: budget for label, _, budget in SUITE_ITEMS.values() if budget is not None}


@pytest.fixture(scope="module")
def suite_run(tmp_path_factory):
    timings: dict = {}
    start = time.perf_counter()
    reports = run_suite(default_suite(SEED), parallelism=1, timings=timings)
    elapsed = time.perf_counter() - start
    out = tmp_path_factory.mktemp("acceptance")
    (out / "report.json").write_text(reports_to_json(reports))
    (out / "summary.csv").write_text(reports_to_csv(reports))
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True))
    by_label = {r.criterion: r for r in reports}
    seconds = {SUITE_ITEMS[name][0]: t for name, t in timings.items()}
    return by_label, seconds, elapsed, out


def _subchecks(report):
    return report.details.get("checks", [])


def _check_pins(report, pins):
    """Every pinned threshold must appear with exactly that value."""
    for fragment, threshold in pins.items():
        if fragment is None:
            assert report.threshold == threshold, f"{report.name}: threshold {report.threshold} != pinned {threshold}"
            continue
        matches = [s for s in _subchecks(report) if fragment in s["name"]]
        assert matches, f"{report.name}: no sub-check matching {fragment!r}"
        for s in matches:
            assert s["threshold"] == threshold, f"{s['name']}: threshold {s['threshold']} != pinned {threshold}"


@pytest.mark.parametrize("label", list(PINNED))
def test_criterion(label, suite_run, acceptance_lines):
    by_label, seconds, _, _ = suite_run
    report = by_label[label]
    _check_pins(report, PINNED[label])
    failed = [s["name"] for s in _subchecks(report) if not s["passed"]]
    budget = RUNTIME_BUDGET.get(label)
    took = seconds.get(label)
    in_budget = budget is None or took is None or took <= budget
    timing = "" if took is None else f" time={took:.1f}s" + ("" if budget is None else f"/{budget:g}s")
    status = "PASS" if report.passed and in_budget else "FAIL"
    extra = f" failing: {failed}" if failed else ""
    acceptance_lines.append(f"{status} criterion {label:>3} {report.name}: statistic={report.statistic:.6g} threshold={report.threshold:.6g}{timing}{extra}")
    assert report.passed, f"criterion {label} failed: {failed or report.statistic}"
    assert in_budget, f"criterion {label} took {took:.1f}s, budget {budget:g}s"


def test_determinism_details(suite_run):
    by_label, _, _, _ = suite_run
    det = by_label["13"]
    assert det.details["rerun_parallelism"] == 8
    assert det.details["differing"] == []
