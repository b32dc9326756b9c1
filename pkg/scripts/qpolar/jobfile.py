"""Simulation job files.

A job file is a YAML (or JSON) mapping:

    n: 6
    K: 2                      # or Kx / Kz
    construction: {kind: pw, beta: "2^(1/4)"}
    decoders: [SCL_E, SCL_C]
    L: 4
    p_grid: [0.05, 0.1]
    trials: 100000            # optional; omitted means escalate
    seed: 7                   # required unless given on the command line
    out: results.csv          # optional
    error_type: X             # X | Z | both
    channel_mode: syndrome    # syndrome | codeword
    early_stop_errors: 200    # optional

Everything is checked before any decoding starts.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from qpolar.polar_core import ConstructionError, ConstructionKind, ConstructionSpec
from qpolar.quantum_css import (
    QuantumPolarCode,
    build_qpc,
    q1_dimensions,
    symmetric_dimensions,
)
from qpolar.sim_harness import ChannelMode, DecoderKind, ErrorType, SimJob

log = logging.getLogger("qpolar.jobfile")

REQUIRED_KEYS = frozenset({"n", "construction", "decoders", "L", "p_grid"})
OPTIONAL_KEYS = frozenset(
    {
        "K",
        "Kx",
        "Kz",
        "trials",
        "seed",
        "out",
        "error_type",
        "channel_mode",
        "early_stop_errors",
    }
)


class JobFileError(ValueError):
    """Malformed or inconsistent job file."""


@dataclass(frozen=True)
class JobFile:
    n: int
    k_x: int
    k_z: int
    construction: ConstructionSpec
    decoders: tuple[DecoderKind, ...]
    list_size: int
    p_grid: tuple[float, ...]
    trials: int | None
    seed: int | None
    out: Path | None
    error_type: ErrorType
    channel_mode: ChannelMode
    early_stop_errors: int | None

    def build_code(self) -> QuantumPolarCode:
        return build_qpc(self.n, self.k_x, self.k_z, self.construction)

    def to_job(self, *, seed: int | None = None, threads: int = 1) -> SimJob:
        """SimJob with an optional seed override; a seed must come from somewhere."""
        master_seed = seed if seed is not None else self.seed
        if master_seed is None:
            raise JobFileError("job has no seed: set `seed` or pass --seed")
        return SimJob(
            qpc=self.build_code(),
            decoders=self.decoders,
            list_size=self.list_size,
            p_grid=self.p_grid,
            trials=self.trials,
            master_seed=master_seed,
            error_type=self.error_type,
            threads=threads,
            early_stop_errors=self.early_stop_errors,
            channel_mode=self.channel_mode,
        )


def _int(data: Mapping[str, Any], key: str, *, minimum: int = 1) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise JobFileError(f"{key}: expected an integer >= {minimum}, got {value!r}")
    return value


def _optional_int(data: Mapping[str, Any], key: str, *, minimum: int = 1) -> int | None:
    return _int(data, key, minimum=minimum) if data.get(key) is not None else None


def _probability(raw: Any) -> float:
    value = raw
    # YAML 1.1 reads 1e-3 (no dot) as a string
    if isinstance(raw, str):
        try:
            value = float(raw)
        except ValueError:
            pass
    numeric = isinstance(value, int | float) and not isinstance(value, bool)
    if not numeric or not 0.0 < value < 0.5:
        raise JobFileError(f"p_grid: {raw!r} is not a flip probability in (0, 0.5)")
    return float(value)


def _enum[E: (DecoderKind, ErrorType, ChannelMode)](
    cls: type[E], key: str, value: Any
) -> E:
    try:
        return cls(value)
    except ValueError as exc:
        choices = ", ".join(m.value for m in cls)
        raise JobFileError(f"{key}: {value!r} is not one of {choices}") from exc


def resolve_dimensions(
    n: int,
    spec: ConstructionSpec,
    k: int | None = None,
    k_x: int | None = None,
    k_z: int | None = None,
) -> tuple[int, int]:
    """(K_X, K_Z) from a symmetric K, an explicit split, or a Q1 index."""
    has_split = k_x is not None or k_z is not None
    if spec.kind is ConstructionKind.Q1:
        if k is not None or has_split:
            raise JobFileError(
                "Q1 codes take their dimensions from the info index; drop K/Kx/Kz"
            )
        assert spec.q1_info_index is not None
        return q1_dimensions(n, spec.q1_info_index)
    if (k is not None) == has_split:
        raise JobFileError("give either K or both Kx and Kz")
    if k is not None:
        return symmetric_dimensions(n, k)
    if k_x is None or k_z is None:
        raise JobFileError("give either K or both Kx and Kz, not just one of them")
    return k_x, k_z


def parse_job(data: Any) -> JobFile:
    """Validate a decoded job mapping."""
    if not isinstance(data, Mapping):
        raise JobFileError(f"job must be a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - REQUIRED_KEYS - OPTIONAL_KEYS)
    if unknown:
        raise JobFileError(f"unknown key(s): {', '.join(unknown)}")
    missing = sorted(REQUIRED_KEYS - set(data))
    if missing:
        raise JobFileError(f"missing key(s): {', '.join(missing)}")

    n = _int(data, "n")
    raw_spec = data["construction"]
    if isinstance(raw_spec, str):
        raw_spec = {"kind": raw_spec}
    if not isinstance(raw_spec, Mapping):
        raise JobFileError(f"construction: expected a mapping, got {raw_spec!r}")
    try:
        spec = ConstructionSpec.from_dict(dict(raw_spec))
        k_x, k_z = resolve_dimensions(
            n,
            spec,
            _optional_int(data, "K"),
            _optional_int(data, "Kx"),
            _optional_int(data, "Kz"),
        )
    except ConstructionError as exc:
        raise JobFileError(str(exc)) from exc

    decoders = data["decoders"]
    if isinstance(decoders, str):
        decoders = [decoders]
    if not isinstance(decoders, list) or not decoders:
        raise JobFileError(f"decoders: expected a non-empty list, got {decoders!r}")

    p_grid = data["p_grid"]
    if not isinstance(p_grid, list) or not p_grid:
        raise JobFileError(f"p_grid: expected a non-empty list, got {p_grid!r}")
    probabilities = [_probability(p) for p in p_grid]

    seed = _optional_int(data, "seed", minimum=0)
    if seed is not None and seed >= 2**64:
        raise JobFileError(f"seed: must fit in 64 bits, got {seed!r}")
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise JobFileError(f"out: expected a path string, got {out!r}")

    return JobFile(
        n=n,
        k_x=k_x,
        k_z=k_z,
        construction=spec,
        decoders=tuple(_enum(DecoderKind, "decoders", d) for d in decoders),
        list_size=_int(data, "L"),
        p_grid=tuple(probabilities),
        trials=_optional_int(data, "trials"),
        seed=seed,
        out=Path(out) if out is not None else None,
        error_type=_enum(ErrorType, "error_type", data.get("error_type", "X")),
        channel_mode=_enum(
            ChannelMode, "channel_mode", data.get("channel_mode", "syndrome")
        ),
        early_stop_errors=_optional_int(data, "early_stop_errors"),
    )


def load_job(path: Path) -> JobFile:
    """Read and validate a job file; JSON is accepted as YAML."""
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise JobFileError(f"{path}: cannot read job file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise JobFileError(f"{path}: invalid YAML: {exc}") from exc
    try:
        job = parse_job(data)
    except JobFileError as exc:
        raise JobFileError(f"{path}: {exc}") from exc
    log.debug("loaded job %s: n=%d decoders=%s", path, job.n, list(job.decoders))
    return job
