"""Run configuration: physics overrides, fit tolerances, config files
and the manifest hash.

Config files are flat `key = value` text with `#` comments; keys match
the long CLI flags with dashes replaced by underscores.
"""

import hashlib
import os
from dataclasses import asdict, dataclass

from .errors import ConfigError
from .fitting import Tolerances

__all__ = ["PhysicsOverrides", "RunConfig", "load_config_file", "config_hash"]

WORKFLOWS = ("design", "simulate", "fit", "sweep", "area-fit", "report")


@dataclass(frozen=True)
class PhysicsOverrides:
    """User-adjustable physics inputs, validated against sanity windows.

    kinetic_fraction defaults to zero so predictions match fit constants
    extracted with the bare geometric inductance; gap_ev is the
    superconducting gap used in leakage checks.
    """

    kinetic_fraction: float = 0.0
    gap_ev: float = 180e-6

    def __post_init__(self):
        if not 0.0 <= self.kinetic_fraction < 1.0:
            raise ConfigError("kinetic_fraction must lie in [0, 1)")
        if not 0.0 < self.gap_ev < 1e-2:
            raise ConfigError("gap_ev outside the (0, 1e-2) eV sanity window")


@dataclass(frozen=True)
class RunConfig:
    """One CLI workflow invocation."""

    workflow: str
    inputs: tuple[str, ...] = ()
    out_dir: str | None = None
    seed: int = 0
    file_format: str = "csv"
    physics: PhysicsOverrides = PhysicsOverrides()
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if self.workflow not in WORKFLOWS:
            raise ConfigError(f"unknown workflow {self.workflow!r}")
        if self.file_format not in ("csv", "s2p"):
            raise ConfigError(f"unknown file format {self.file_format!r}")
        for path in self.inputs:
            if not os.path.exists(path):
                raise ConfigError(f"input path does not exist: {path}")


def load_config_file(path: str) -> dict[str, str]:
    """Parse a flat key = value config file into a string dict."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = text.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            out[key] = value
    return out


def config_hash(physics: PhysicsOverrides, tolerances: Tolerances) -> str:
    """Digest of everything that can change numeric results.

    Depends on the physics overrides and fit tolerances only, so the
    manifest hash moves exactly when one of them does.
    """
    fields: dict[str, object] = {}
    fields.update({f"physics.{k}": v for k, v in asdict(physics).items()})
    fields.update({f"tolerances.{k}": v for k, v in asdict(tolerances).items()})
    canonical = "\n".join(f"{k} = {fields[k]!r}" for k in sorted(fields))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
