"""
Run configuration: YAML files with flat dotted keys, validated by pydantic.

Keys look like ``problem.p``, ``problem.f.a2`` or ``run.seed``. Nested
mappings are accepted too and flattened before validation, so

    problem:
      f: {kind: quadratic, a2: 0.01}

and ``problem.f.kind: quadratic`` / ``problem.f.a2: 0.01`` are the same file.
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..models.schemas import ConeSpec, ProblemSpec

# Config files say problem.f, the model field is problem.nonlinearity
_ALIASES = {("problem", "f"): "nonlinearity"}
_REVERSE_ALIASES = {("problem", "nonlinearity"): "f"}


class Command(str, Enum):
    PROFILE = "profile"
    SOLVE = "solve"
    VERIFY = "verify"
    SCAN = "scan"


class RunSettings(BaseModel):
    """Command, sampling and output settings of one run."""
    model_config = ConfigDict(extra="forbid")

    command: Command = Field(Command.SOLVE, description="What to run")
    seed: int = Field(0, ge=0, description="Seed of every sampled quantity")
    directions: int = Field(50, ge=1, description="Cone directions sampled by profile and verify")
    samples: int = Field(200, ge=1, description="Scalar samples per monotonicity check")
    workers: int = Field(1, ge=1, description="Worker processes for per-direction work")
    damping: float = Field(0.5, gt=0, le=1, description="Initial damping of the Nehari iteration")
    max_iters: int = Field(500, ge=1, description="Iteration cap of the Nehari iteration")
    profile_samples: int = Field(256, ge=1, description="Radii per energy profile")
    profile_t: Optional[List[float]] = Field(None, description="Explicit radii for profiles (overrides profile_samples)")
    annuli: Optional[List[List[float]]] = Field(None, description="Ordered annuli [r, R] for scan")
    reversed_H2: bool = Field(False, description="Check the reversed form of (H2)")
    H1_box: List[float] = Field(default_factory=lambda: [10.0, 10.0], description="Sampling box [x_max, y_max] of (H1)")
    out: str = Field("out", description="Output directory")

    @field_validator("annuli")
    @classmethod
    def validate_annuli(cls, v: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
        """Every annulus is a pair r < R."""
        if v is None:
            return v
        for pair in v:
            if len(pair) != 2 or not pair[0] < pair[1]:
                raise ValueError(f"each annulus must be a pair [r, R] with r < R, got {pair}")
        return v

    @field_validator("H1_box")
    @classmethod
    def validate_box(cls, v: List[float]) -> List[float]:
        if len(v) != 2 or min(v) <= 0:
            raise ValueError(f"H1_box must be two positive numbers, got {v}")
        return v


class RunConfig(BaseModel):
    """A validated run: the problem, its cone and the run settings."""
    model_config = ConfigDict(extra="forbid")

    problem: ProblemSpec
    cone: Optional[ConeSpec] = Field(None, description="Cone override; defaults to the problem's own cone")
    run: RunSettings = Field(default_factory=RunSettings)

    @model_validator(mode="after")
    def validate_command(self) -> "RunConfig":
        """Scan runs need their annuli."""
        if self.run.command == Command.SCAN and not self.run.annuli:
            raise ValueError("scan requires run.annuli")
        return self

    @property
    def cone_spec(self) -> ConeSpec:
        return self.cone if self.cone is not None else self.problem.cone_spec()


def _flatten(data: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        if not isinstance(key, str):
            raise ConfigError(f"keys must be strings, got {key!r}", prefix.rstrip(".") or None)
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            if not value:
                raise ConfigError("empty section", path)
            for sub_path, sub_value in _flatten(value, f"{path}.").items():
                if sub_path in flat:
                    raise ConfigError("duplicate key", sub_path)
                flat[sub_path] = sub_value
        else:
            if path in flat:
                raise ConfigError("duplicate key", path)
            flat[path] = value
    return flat


def _nest(flat: Dict[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for path in sorted(flat):
        parts = path.split(".")
        if len(parts) >= 2 and (parts[0], parts[1]) in _ALIASES:
            parts[1] = _ALIASES[(parts[0], parts[1])]
        node = nested
        for depth, part in enumerate(parts[:-1]):
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError("key is both a value and a section", ".".join(parts[: depth + 1]))
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError("key is both a value and a section", path)
        node[parts[-1]] = flat[path]
    return nested


def _key_path(loc) -> str:
    parts = [str(part) for part in loc]
    if len(parts) >= 2 and (parts[0], parts[1]) in _REVERSE_ALIASES:
        parts[1] = _REVERSE_ALIASES[(parts[0], parts[1])]
    return ".".join(parts)


def _validate(flat: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(_nest(flat))
    except ValidationError as exc:
        error = exc.errors()[0]
        key_path = _key_path(error["loc"]) or None
        if error["type"] == "extra_forbidden":
            raise ConfigError("unknown key", key_path) from exc
        if error["type"] == "missing":
            raise ConfigError("required key is missing", key_path) from exc
        raise ConfigError(error["msg"], key_path) from exc


def parse_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Read and validate a run configuration.

    ``overrides`` maps dotted keys to values applied after reading, the way
    command-line flags replace file settings.

    Raises:
        ConfigError: On a missing file, malformed YAML, an unknown key or a
            constraint violation; the message starts with the key path.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a mapping of keys to values, got {type(data).__name__}")

    flat = _flatten(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key] = value
    return _validate(flat)


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def flat_config(config: RunConfig) -> Dict[str, Any]:
    """Every setting of ``config`` under its dotted config-file key."""
    flat = {}
    for path, value in _flatten(config.model_dump(exclude_none=False)).items():
        parts = path.split(".")
        if len(parts) >= 2 and (parts[0], parts[1]) in _REVERSE_ALIASES:
            parts[1] = _REVERSE_ALIASES[(parts[0], parts[1])]
        flat[".".join(parts)] = _plain(value)
    return flat


def dump_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """Write the normalized flat form with sorted keys; parse_config reads it back equal."""
    path = Path(path)
    flat = {key: value for key, value in flat_config(config).items() if value is not None}
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(flat, handle, sort_keys=True, default_flow_style=None)
    return path
