"""Configuration parsing and deterministic serialization.

Numbers are written with Python's shortest round-trip ``repr`` so that files
are byte-identical across runs and platforms.  CSV files are UTF-8 with LF
line endings, ``.`` as decimal separator and no thousands separators.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import GtArray, SimConfig, check_interlacing
from .errors import ConfigError, DomainError, StructuralError

__all__ = [
    "COMMANDS",
    "DYNAMICS_COMMANDS",
    "SIM_DEFAULTS",
    "ParsedConfig",
    "RunManifest",
    "loads_strict",
    "parse_config",
    "parse_config_text",
    "format_float",
    "write_array_csv",
    "read_array_csv",
    "array_to_csv",
    "array_from_csv",
    "trajectory_to_csv",
    "matrix_to_csv",
    "sha256_file",
]

COMMANDS = ("sample-ensemble", "sample-corners", "simulate-mdbm", "simulate-limit", "verify", "report")
DYNAMICS_COMMANDS = ("simulate-mdbm", "simulate-limit")
SUITE_COMMANDS = ("verify",)

SIM_DEFAULTS = {"k": 1, "dt": 1e-4, "horizon": 1.0, "n_samples": 1000, "seed": 0}
_SIM_REQUIRED = ("beta", "t0", "n")
_SIM_OPTIONS = {
    "observation_times": None,
    "scheme": "implicit",
    "source": "tridiagonal",
}
_SOURCES = ("tridiagonal", "dense")


def _no_duplicates(pairs):
    seen = {}
    for key, value in pairs:
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}")
        seen[key] = value
    return seen


def _reject_constant(token):
    raise ConfigError(f"non-finite number {token} is not allowed")


def loads_strict(text: str, source: str = "<config>"):
    """``json.loads`` that rejects duplicate keys and NaN/Infinity."""
    try:
        return json.loads(text, object_pairs_hook=_no_duplicates, parse_constant=_reject_constant)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc}") from None


@dataclass(frozen=True)
class ParsedConfig:
    """A validated configuration: simulation parameters, or a suite for ``verify``.

    ``resolved`` is the full document with every default filled in.
    """

    command: str | None
    sim: SimConfig | None = None
    suite: dict | None = None
    options: dict = field(default_factory=dict)
    resolved: dict = field(default_factory=dict)

    def with_seed(self, seed: int) -> "ParsedConfig":
        resolved = dict(self.resolved, seed=int(seed))
        if self.sim is not None:
            sim = SimConfig(**{**_sim_fields(self.sim), "seed": int(seed)})
            return ParsedConfig(self.command, sim, None, self.options, resolved)
        return ParsedConfig(self.command, None, dict(self.suite, seed=int(seed)), self.options, resolved)


def _sim_fields(sim: SimConfig) -> dict:
    return {k: getattr(sim, k) for k in ("beta", "t0", "n", "k", "dt", "horizon", "n_samples", "seed")}


def _number(doc, key, kind):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {key!r}: expected a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"field {key!r}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _parse_suite(doc) -> ParsedConfig:
    from .verify import _validate_suite

    if not isinstance(doc, dict):
        raise ConfigError("suite configuration must be a JSON object")
    _validate_suite(doc)
    resolved = {"seed": 42, "parallelism": 1, "tests": [], **doc}
    for key in ("seed", "parallelism"):
        value = _number(resolved, key, int)
        if value < 0 or (key == "parallelism" and value < 1):
            raise ConfigError(f"field {key!r}: out of range: {value}")
        resolved[key] = value
    return ParsedConfig("verify", None, resolved, {}, resolved)


def parse_config_text(text: str, command: str | None = None, source: str = "<config>") -> ParsedConfig:
    """Validate a JSON configuration for ``command`` (``None`` accepts any simulation command)."""
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    doc = loads_strict(text, source)
    if command in SUITE_COMMANDS:
        return _parse_suite(doc)
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: configuration must be a JSON object")
    allowed = set(_SIM_REQUIRED) | set(SIM_DEFAULTS) | set(_SIM_OPTIONS)
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"{source}: unknown field(s) {unknown}; allowed: {sorted(allowed)}")
    missing = [key for key in _SIM_REQUIRED if key not in doc]
    if missing:
        raise ConfigError(f"{source}: missing required field(s) {missing}")
    resolved = {**SIM_DEFAULTS, **{k: v for k, v in _SIM_OPTIONS.items()}, **doc}
    values = {}
    for key, kind in (("beta", float), ("t0", float), ("n", int), ("k", int), ("dt", float), ("horizon", float), ("n_samples", int), ("seed", int)):
        values[key] = _number(resolved, key, kind)
        resolved[key] = values[key]
    try:
        sim = SimConfig(**values)
    except DomainError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if command in DYNAMICS_COMMANDS and sim.beta < 4:
        raise ConfigError(f"{source}: field 'beta': {command} requires beta >= 4 (the dynamics are defined without collisions only there), got {sim.beta:g}")
    if resolved["scheme"] not in ("implicit", "euler"):
        raise ConfigError(f"{source}: field 'scheme': expected 'implicit' or 'euler', got {resolved['scheme']!r}")
    if resolved["source"] not in _SOURCES:
        raise ConfigError(f"{source}: field 'source': expected one of {_SOURCES}, got {resolved['source']!r}")
    if resolved["source"] == "dense" and (sim.beta not in (1, 2, 4) or not math.isclose(sim.t0, 2.0 / sim.beta)):
        raise ConfigError(f"{source}: field 'source': dense matrices need beta in (1, 2, 4) and t0 = 2/beta")
    times = resolved["observation_times"]
    if times is None:
        times = [0.0, sim.horizon]
    if not isinstance(times, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in times):
        raise ConfigError(f"{source}: field 'observation_times': expected a list of numbers")
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ConfigError(f"{source}: field 'observation_times': must be nonnegative and nondecreasing")
    if times and times[-1] > sim.horizon:
        raise ConfigError(f"{source}: field 'observation_times': {times[-1]} exceeds horizon {sim.horizon}")
    resolved["observation_times"] = times
    options = {"observation_times": times, "scheme": resolved["scheme"], "source": resolved["source"]}
    return ParsedConfig(command, sim, None, options, resolved)


def parse_config(path, command: str | None = None) -> ParsedConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"configuration file not found: {p}")
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from None
    return parse_config_text(text, command, str(p))


# --- CSV ---------------------------------------------------------------------------------


def format_float(value) -> str:
    """Shortest decimal string that round-trips to the same double."""
    v = float(value)
    if not math.isfinite(v):
        raise DomainError(f"cannot serialize non-finite value {v}")
    return repr(v)


def array_to_csv(a: GtArray) -> str:
    """One line per level, level 1 first."""
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in a.levels)


def array_from_csv(text: str, source: str = "<csv>") -> GtArray:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise StructuralError(f"{source}: empty file")
    rows = []
    for k, line in enumerate(lines, start=1):
        fields = line.split(",")
        if len(fields) != k:
            raise StructuralError(f"{source}: row {k} has {len(fields)} values, expected {k}")
        try:
            rows.append(np.array([float(f) for f in fields]))
        except ValueError as exc:
            raise StructuralError(f"{source}: row {k}: {exc}") from None
    array = GtArray(tuple(rows))
    check_interlacing(array)
    return array


def write_array_csv(a: GtArray, path) -> None:
    Path(path).write_text(array_to_csv(a), encoding="utf-8", newline="\n")


def read_array_csv(path) -> GtArray:
    """Read an array written by :func:`write_array_csv`; interlacing is validated."""
    p = Path(path)
    return array_from_csv(p.read_text(encoding="utf-8"), str(p))


def matrix_to_csv(header, rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(format_float(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def trajectory_to_csv(times, spacings) -> str:
    """Header ``time,r_1..r_k`` then one row per observation time."""
    spacings = np.asarray(spacings, dtype=float)
    k = spacings.shape[1]
    header = ["time"] + [f"r_{i + 1}" for i in range(k)]
    return matrix_to_csv(header, np.column_stack([np.asarray(times, dtype=float), spacings]))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --- manifest ----------------------------------------------------------------------------


@dataclass
class RunManifest:
    """Everything needed to reproduce and audit a batch run."""

    command: str
    config: dict
    master_seed: int
    unit_seeds: list
    started: str
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    tool_version: str = __version__
    parallelism: int = 1
    exit_code: int = 0

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "master_seed": self.master_seed,
            "unit_seeds": self.unit_seeds,
            "parallelism": self.parallelism,
            "started": self.started,
            "finished": self.finished,
            "outputs": self.outputs,
            "failures": self.failures,
            "exit_code": self.exit_code,
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        doc = loads_strict(Path(path).read_text(encoding="utf-8"), str(path))
        try:
            return cls(
                command=doc["command"],
                config=doc["config"],
                master_seed=doc["master_seed"],
                unit_seeds=doc["unit_seeds"],
                started=doc["started"],
                finished=doc.get("finished", ""),
                outputs=doc.get("outputs", {}),
                failures=doc.get("failures", []),
                tool_version=doc.get("tool_version", ""),
                parallelism=doc.get("parallelism", 1),
                exit_code=doc.get("exit_code", 0),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: manifest lacks field {exc}") from None

    def verify_outputs(self, root) -> list:
        """Names of recorded outputs whose current hash differs (or that are missing)."""
        bad = []
        for name, digest in sorted(self.outputs.items()):
            p = Path(root) / name
            if not p.is_file() or sha256_file(p) != digest:
                bad.append(name)
        return bad
