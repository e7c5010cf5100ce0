"""Seeded batch execution behind the command-line tool.

Unit ``i`` of a run draws from ``stream(master_seed, i)``; results are
buffered per unit and written in index order, so output bytes do not depend
on the number of worker threads.
"""
from __future__ import annotations

import datetime as _dt
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .core import GammaLaw
from .ensemble import sample_beta_hermite_batch, sample_corners_process, sample_dense_top_levels_batch
from .errors import ConfigError, DysonEdgeError, NumericalError
from .io import (
    COMMANDS,
    ParsedConfig,
    RunManifest,
    array_to_csv,
    format_float,
    loads_strict,
    sha256_file,
    trajectory_to_csv,
)
from .limit import gamma_product_init, observation_steps, _run_r
from .mdbm import _spacing_path, _step_plan
from .rng import mix64, stream

__all__ = ["batch_run", "EXIT_OK", "EXIT_TEST_FAILURE", "EXIT_USAGE", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_TEST_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _map_units(fn, count, parallelism):
    """Run ``fn(i)`` for every unit; returns ``(results, failures)`` in index order."""

    def guarded(i):
        try:
            return fn(i), None
        except DysonEdgeError as exc:
            return None, {"unit": i, "error": type(exc).__name__, "message": str(exc)}

    if parallelism <= 1 or count <= 1:
        pairs = [guarded(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            pairs = list(pool.map(guarded, range(count)))
    return [p[0] for p in pairs], [p[1] for p in pairs if p[1] is not None]


# --- unit bodies -------------------------------------------------------------------------


def _unit_spectrum(cfg: ParsedConfig, seed):
    sim = cfg.sim

    def run(i):
        rng = stream(seed, i)
        if cfg.options["source"] == "dense":
            return sample_dense_top_levels_batch(sim.n, int(sim.beta), rng, 1, depth=0)[0][0]
        return sample_beta_hermite_batch(sim.n, sim.beta, sim.n * sim.t0, rng, 1)[0]

    return run


def _unit_corners(cfg: ParsedConfig, seed):
    sim = cfg.sim

    def run(i):
        return array_to_csv(sample_corners_process(sim.n, sim.beta, sim.n * sim.t0, stream(seed, i)))

    return run


def _unit_mdbm(cfg: ParsedConfig, seed):
    sim = cfg.sim
    plan = _step_plan(cfg.options["observation_times"], sim.dt)

    def run(i):
        path = _spacing_path(sim, plan, stream(seed, i), cfg.options["scheme"])
        return trajectory_to_csv(cfg.options["observation_times"], path)

    return run


def _unit_limit(cfg: ParsedConfig, seed):
    sim = cfg.sim
    times = cfg.options["observation_times"]
    obs = observation_steps(times, sim.dt)
    n_steps = int(obs[-1]) if obs.size else 0
    c, rate = sim.beta / 2.0 - 1.0, GammaLaw.for_spacings(sim.beta, sim.t0).rate

    def run(i):
        rng = stream(seed, i)
        r = np.array(gamma_product_init(sim.k, sim.beta, sim.t0, rng).r.r)
        out = np.empty((obs.size, sim.k))
        lowest = _run_r(r, c, rate, float(sim.dt), n_steps, rng, obs, out)
        if not lowest > 0:
            raise NumericalError(f"spacing reached {lowest} (positivity lost)")
        return trajectory_to_csv(times, out)

    return run


# --- commands ----------------------------------------------------------------------------


def _write(out: Path, rel: str, text: str, manifest: RunManifest):
    target = out / rel
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8", newline="\n")
    manifest.outputs[rel] = sha256_file(target)


def _sample_units(cfg: ParsedConfig, parallelism: int, out: Path, manifest: RunManifest, command: str):
    sim = cfg.sim
    count = sim.n_samples
    seed = sim.seed
    manifest.unit_seeds = [mix64(seed, i) for i in range(count)]
    if command == "sample-ensemble":
        rows, failures = _map_units(_unit_spectrum(cfg, seed), count, parallelism)
        header = ",".join(f"x_{j + 1}" for j in range(sim.n))
        body = "".join(",".join(format_float(v) for v in row) + "\n" for row in rows if row is not None)
        _write(out, "spectra.csv", header + "\n" + body, manifest)
        return failures
    maker, folder, stem = {
        "sample-corners": (_unit_corners, "corners", "array"),
        "simulate-mdbm": (_unit_mdbm, "trajectories", "path"),
        "simulate-limit": (_unit_limit, "trajectories", "path"),
    }[command]
    texts, failures = _map_units(maker(cfg, seed), count, parallelism)
    width = max(6, len(str(max(count - 1, 0))))
    for i, text in enumerate(texts):
        if text is not None:
            _write(out, f"{folder}/{stem}_{i:0{width}d}.csv", text, manifest)
    return failures


def _verify(cfg: ParsedConfig, parallelism: int, out: Path, manifest: RunManifest):
    from .verify import reports_to_csv, reports_to_json, run_suite

    timings: dict = {}
    reports = run_suite(cfg.suite, parallelism, timings)
    manifest.unit_seeds = [mix64(cfg.suite["seed"], j) for j in range(len(reports))]
    _write(out, "report.json", reports_to_json(reports), manifest)
    _write(out, "summary.csv", reports_to_csv(reports), manifest)
    _write(out, "timings.json", json.dumps({k: round(v, 3) for k, v in timings.items()}, indent=2, sort_keys=True) + "\n", manifest)
    return reports


def _report(manifest_path: Path):
    """Re-check the hashes recorded in a manifest and collect any report it lists."""
    previous = RunManifest.read(manifest_path)
    root = manifest_path.parent
    bad = previous.verify_outputs(root)
    rows = []
    if "report.json" in previous.outputs and (root / "report.json").is_file():
        rows = loads_strict((root / "report.json").read_text(encoding="utf-8"), "report.json")
    return previous, bad, rows


def batch_run(command: str, config, parallelism: int = 1, out_dir="dyson_edge_output", manifest_path=None):
    """Execute ``command`` and write its outputs plus ``manifest.json`` into ``out_dir``.

    ``config`` is a :class:`ParsedConfig` (for ``report``: the path of an existing
    manifest).  Returns ``(manifest, extra)``; ``extra`` holds the suite reports
    for ``verify`` and ``(bad_files, rows)`` for ``report``.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if parallelism < 1:
        raise ConfigError(f"parallelism must be >= 1, got {parallelism}")
    if command == "report":
        previous, bad, rows = _report(Path(config))
        previous.exit_code = EXIT_TEST_FAILURE if bad or not all(r.get("passed", False) for r in rows) else EXIT_OK
        return previous, (bad, rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg_seed(config)
    manifest = RunManifest(command, dict(config.resolved), seed, [], _now(), parallelism=parallelism)
    extra = None
    if command == "verify":
        extra = _verify(config, parallelism, out, manifest)
        manifest.exit_code = EXIT_OK if all(r.passed for r in extra) else EXIT_TEST_FAILURE
    else:
        failures = _sample_units(config, parallelism, out, manifest, command)
        manifest.failures = failures
        if any(f["error"] == "NumericalError" for f in failures):
            manifest.exit_code = EXIT_NUMERICAL
        elif failures:
            manifest.exit_code = EXIT_TEST_FAILURE
    manifest.finished = _now()
    manifest.write(Path(manifest_path) if manifest_path else out / "manifest.json")
    return manifest, extra


def cfg_seed(config: ParsedConfig) -> int:
    return int(config.sim.seed if config.sim is not None else config.suite["seed"])
