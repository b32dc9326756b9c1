"""Settings for decoding, analysis and simulation.

`defaults.yaml` next to this module holds every tunable. `load_settings`
reads it with `yaml.safe_load`, layers an optional user overlay on top via
`mergedeep.merge` (overlay-side wins) and freezes the result into a tree of
dataclasses. Unknown sections and keys are a `ConfigError`, so a typo in an
overlay never silently falls back to a default.
"""

from __future__ import annotations

import functools
import logging
import os
from collections.abc import Mapping
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import mergedeep
import yaml

log = logging.getLogger("qpolar.config")

DEFAULTS_PATH: Path = Path(__file__).resolve().with_name("defaults.yaml")


class ConfigError(ValueError):
    """Malformed defaults or overlay file."""


@dataclass(frozen=True)
class DecoderSettings:
    llr_saturation: float = 1.0e6
    min_sum: bool = False


@dataclass(frozen=True)
class AnalysisSettings:
    spectrum_p: float = 0.05
    distance_list_size: int = 4096
    exhaustive_max_n: int = 32


@dataclass(frozen=True)
class SimulationSettings:
    chunk_size: int = 500
    trials: int = 100_000
    trials_low_rate: int = 1_000_000
    low_rate_threshold: float = 1.0e-3
    threads_env: str = "QPOLAR_THREADS"


@dataclass(frozen=True)
class Settings:
    decoder: DecoderSettings
    analysis: AnalysisSettings
    simulation: SimulationSettings

    def default_threads(self) -> int:
        """Thread count from the configured environment variable, else 1."""
        raw = os.environ.get(self.simulation.threads_env, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError as exc:
            raise ConfigError(
                f"{self.simulation.threads_env}={raw!r} is not an integer"
            ) from exc
        if threads < 1:
            raise ConfigError(f"{self.simulation.threads_env}={raw!r} must be >= 1")
        return threads


_SECTIONS: dict[str, type] = {
    "decoder": DecoderSettings,
    "analysis": AnalysisSettings,
    "simulation": SimulationSettings,
}


def _read_yaml(path: Path) -> dict[str, Any]:
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top-level must be a mapping")
    return dict(data)


def _number(where: str, value: Any) -> float:
    # YAML 1.1 reads an unsigned exponent such as 1.0e6 as a string
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    elif isinstance(value, int | float) and not isinstance(value, bool):
        return float(value)
    raise ConfigError(f"{where}: expected a number, got {value!r}")


def _build_section(name: str, cls: type, raw: Any) -> Any:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"section {name!r} must be a mapping, got {raw!r}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"section {name!r}: unknown key(s) {', '.join(unknown)}")
    values: dict[str, Any] = {}
    for key, value in raw.items():
        default = getattr(cls(), key)
        # bool before int: bool is an int subclass
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{name}.{key}: expected a boolean, got {value!r}")
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(
                    f"{name}.{key}: expected a positive integer, got {value!r}"
                )
        elif isinstance(default, float):
            value = _number(f"{name}.{key}", value)
        elif isinstance(default, str) and not (isinstance(value, str) and value):
            raise ConfigError(
                f"{name}.{key}: expected a non-empty string, got {value!r}"
            )
        values[key] = value
    return cls(**values)


def load_settings(overlay_path: Path | None = None) -> Settings:
    """Read defaults, merge an optional overlay, and validate."""
    merged = _read_yaml(DEFAULTS_PATH)
    if overlay_path is not None:
        overlay = _read_yaml(overlay_path)
        log.debug("merging config overlay %s", overlay_path)
        merged = mergedeep.merge({}, merged, overlay)
    unknown = sorted(set(merged) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(unknown)}")
    sections = {
        name: _build_section(name, cls, merged.get(name, {}))
        for name, cls in _SECTIONS.items()
    }
    settings = Settings(**sections)
    if settings.decoder.min_sum:
        log.warning("min-sum check node enabled; path metrics are approximate")
    saturation = settings.decoder.llr_saturation
    if saturation <= 0.0:
        raise ConfigError(
            f"decoder.llr_saturation must be positive, got {saturation!r}"
        )
    spectrum_p = settings.analysis.spectrum_p
    if not 0.0 < spectrum_p < 0.5:
        raise ConfigError(
            f"analysis.spectrum_p must lie in (0, 0.5), got {spectrum_p!r}"
        )
    if not 0.0 < settings.simulation.low_rate_threshold < 1.0:
        raise ConfigError(
            "simulation.low_rate_threshold must lie in (0, 1), "
            f"got {settings.simulation.low_rate_threshold!r}"
        )
    return settings


@functools.cache
def default_settings() -> Settings:
    """Defaults with no overlay; cached for library callers."""
    return load_settings()
