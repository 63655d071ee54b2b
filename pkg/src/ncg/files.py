"""Profile files, DOT export, and run manifests.

Profiles travel as JSON with 1-based player labels; indices are converted at
this boundary and nowhere else.  alpha arrives as an exact string ("3/2",
"0.5", "1"); floats are rejected because equilibrium verdicts at boundary
prices must not depend on rounding.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .core import GameParams, StrategyProfile


class SchemaError(ValueError):
    def __init__(self, fieldname: str, message: str):
        super().__init__(f"{fieldname}: {message}")
        self.fieldname = fieldname


class AlphaParseError(SchemaError):
    def __init__(self, message: str):
        super().__init__("alpha", message)


class IoError(OSError):
    pass


def parse_alpha(value) -> Fraction:
    """Exact conversion of "p/q", decimal strings, or ints; floats rejected."""
    if isinstance(value, bool):
        raise AlphaParseError("alpha must be a number string or integer")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise AlphaParseError(
            "floating-point alpha is inexact; pass a string like \"3/2\" or \"0.5\""
        )
    if isinstance(value, str):
        text = value.strip()
        if "…" in text or "..." in text:
            raise AlphaParseError(
                f"{text!r} marks a non-terminating decimal; give the exact "
                "value as p/q instead"
            )
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise AlphaParseError(f"cannot parse {text!r} exactly: {exc}") from exc
    raise AlphaParseError(f"unsupported alpha value {value!r}")


def profile_from_json_dict(data: dict) -> tuple[StrategyProfile, GameParams]:
    if not isinstance(data, dict):
        raise SchemaError("$", "profile file must hold a JSON object")
    n = data.get("n")
    if not isinstance(n, int) or n < 3:
        raise SchemaError("n", f"need an integer >= 3, got {n!r}")
    alpha = parse_alpha(data.get("alpha", 0))
    if alpha < 0:
        raise AlphaParseError("alpha must be >= 0")
    raw = data.get("strategies")
    if not isinstance(raw, list) or len(raw) != n:
        raise SchemaError("strategies", f"need a list of exactly {n} lists")
    strategies = []
    for i, entry in enumerate(raw, start=1):
        if not isinstance(entry, list):
            raise SchemaError(f"strategies[{i}]", "must be a list of player labels")
        out = set()
        for j in entry:
            if not isinstance(j, int) or not 1 <= j <= n:
                raise SchemaError(
                    f"strategies[{i}]", f"label {j!r} outside 1..{n}"
                )
            if j == i:
                raise SchemaError(f"strategies[{i}]", f"player {i} buys a self-edge")
            out.add(j - 1)
        strategies.append(frozenset(out))
    return StrategyProfile(tuple(strategies)), GameParams(n, alpha)


def profile_to_json_dict(profile: StrategyProfile, params: GameParams) -> dict:
    return {
        "n": params.n,
        "alpha": str(params.alpha),
        "strategies": [sorted(j + 1 for j in s) for s in profile.strategies],
    }


def parse_profile_file(path) -> tuple[StrategyProfile, GameParams]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON in {path}: {exc}") from exc
    return profile_from_json_dict(data)


def write_profile_file(path, profile: StrategyProfile, params: GameParams) -> None:
    Path(path).write_text(
        json.dumps(profile_to_json_dict(profile, params), indent=2) + "\n"
    )


def export_dot(profile: StrategyProfile, path=None) -> str:
    """Directed DOT with the buyer at the tail of each arc, 1-based labels,
    stable ordering; a doubly-bought edge renders as two arcs."""
    lines = ["digraph purchases {"]
    for i in range(profile.n):
        lines.append(f"  {i + 1};")
    for i in range(profile.n):
        for j in sorted(profile.strategies[i]):
            lines.append(f"  {i + 1} -> {j + 1};")
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    return text


@dataclass
class RunManifest:
    """Provenance of one CLI run.  Identical inputs must produce
    byte-identical result payloads; the manifest itself carries the only
    timing information."""

    command: str
    parameters: dict
    input_hashes: dict = field(default_factory=dict)
    output_paths: list = field(default_factory=list)
    wall_time_s: float = 0.0
    worker_count: int = 1

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "input_hashes": self.input_hashes,
            "output_paths": [str(p) for p in self.output_paths],
            "wall_time_s": self.wall_time_s,
            "worker_count": self.worker_count,
        }


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class ManifestTimer:
    def __init__(self, command: str, parameters: dict, worker_count: int = 1):
        self.manifest = RunManifest(command, parameters, worker_count=worker_count)
        self._start = time.monotonic()

    def add_input(self, path) -> None:
        self.manifest.input_hashes[str(path)] = sha256_of(path)

    def add_output(self, path) -> None:
        self.manifest.output_paths.append(str(path))

    def write(self, path) -> None:
        self.manifest.wall_time_s = round(time.monotonic() - self._start, 6)
        Path(path).write_text(
            json.dumps(self.manifest.to_json_dict(), indent=2) + "\n"
        )
