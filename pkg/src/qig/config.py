"""JSON run configuration.

Layout (every key optional except that ``simulate`` needs ``system`` or
``scenario``)::

    {
      "scenario": {"epsilon": 5, "temperature": 10, "gamma": 1,
                   "r_ref": [-0.4176, -0.60647, 0.47879]},
      "system": {
        "hamiltonian": [[1, 0], [0, -1]],
        "jump_pairs": [{"op": M, "partner": M, "phi": 0.5}],
        "initial_state": M,
        "temperature": 2.0
      },
      "metrics": ["sld", "wy", "hm"],
      "grid": {"t_final": 12.0, "dt": 0.001},
      "output": "qig-output",
      "emit_svg": false
    }

Matrices are lists of rows.  An entry is either a real number or a
``[re, im]`` pair.  A pair with ``"partner": null`` is a self-dual
(Hermitian) jump and needs ``phi = 0``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import jsonschema
import numpy as np

from .errors import ValidationError
from .geometry import MetricKind
from .gksl import JumpPair, Lindbladian
from .mpemba import MpembaScenario
from .states import as_density

OUTPUT_ENV = "QIG_OUTPUT_DIR"
DEFAULT_OUTPUT = "qig-output"

_ENTRY = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _ENTRY}}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": _POSITIVE,
                "temperature": _POSITIVE,
                "gamma": _POSITIVE,
                "r_ref": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3},
            },
        },
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["hamiltonian", "initial_state"],
            "properties": {
                "hamiltonian": _MATRIX,
                "jump_pairs": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["op"],
                        "properties": {
                            "op": _MATRIX,
                            "partner": {"oneOf": [_MATRIX, {"type": "null"}]},
                            "phi": {"type": "number"},
                        },
                    },
                },
                "initial_state": _MATRIX,
                "temperature": _POSITIVE,
            },
        },
        "metrics": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "enum": [m.value for m in MetricKind]},
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t_final": _POSITIVE, "dt": _POSITIVE},
        },
        "output": {"type": "string", "minLength": 1},
        "emit_svg": {"type": "boolean"},
    },
}


class ConfigError(ValidationError):
    """Malformed configuration; ``line`` is 1-based when known."""

    def __init__(self, message: str, source: str = "<config>", line: Optional[int] = None):
        self.source = source
        self.line = line
        loc = f"{source}:{line}" if line is not None else source
        super().__init__(f"{loc}: {message}")


@dataclass(frozen=True, eq=False)
class SystemSpec:
    lindbladian: Lindbladian
    initial_state: np.ndarray
    temperature: Optional[float] = None

    @property
    def beta(self) -> Optional[float]:
        return None if self.temperature is None else 1.0 / self.temperature


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: Optional[MpembaScenario] = None
    system: Optional[SystemSpec] = None
    metrics: Tuple[MetricKind, ...] = tuple(MetricKind)
    t_final: Optional[float] = None
    dt: Optional[float] = None
    output: Path = field(default_factory=lambda: Path(DEFAULT_OUTPUT))
    emit_svg: bool = False

    def mpemba_scenario(self) -> MpembaScenario:
        """Scenario with the grid section applied; built-in defaults when none is configured."""
        base = self.scenario or MpembaScenario()
        return MpembaScenario(
            epsilon=base.epsilon,
            temperature=base.temperature,
            gamma=base.gamma,
            r_ref=base.r_ref,
            horizon=self.t_final if self.t_final is not None else base.horizon,
            dt=self.dt if self.dt is not None else base.dt,
        )

    def grid(self, default_t_final: float = 10.0, default_dt: float = 1e-3) -> np.ndarray:
        t_final = self.t_final if self.t_final is not None else default_t_final
        dt = self.dt if self.dt is not None else default_dt
        if dt >= t_final:
            raise ValidationError("grid needs dt < t_final")
        n = int(round(t_final / dt))
        return np.linspace(0.0, n * dt, n + 1)


def _line_of(text: str, path: Sequence) -> Optional[int]:
    """Best-effort line of the JSON node at ``path`` (object keys are located textually)."""
    pos = 0
    found = False
    for key in path:
        if isinstance(key, str):
            hit = text.find(f'"{key}"', pos)
            if hit < 0:
                break
            pos, found = hit, True
    return text.count("\n", 0, pos) + 1 if found else 1


def _matrix(raw) -> np.ndarray:
    rows = [[complex(e[0], e[1]) if isinstance(e, list) else complex(e) for e in row] for row in raw]
    if len({len(r) for r in rows}) != 1:
        raise ValidationError("matrix rows have different lengths")
    return np.array(rows, dtype=complex)


def _build_system(raw: dict, text: str, source: str) -> SystemSpec:
    def fail(exc: Exception, *path):
        raise ConfigError(str(exc), source, _line_of(text, ("system",) + path)) from exc

    try:
        h = _matrix(raw["hamiltonian"])
    except ValidationError as exc:
        fail(exc, "hamiltonian")
    pairs = []
    for i, pr in enumerate(raw.get("jump_pairs", [])):
        try:
            partner = pr.get("partner")
            pairs.append(JumpPair(
                op=_matrix(pr["op"]),
                partner=None if partner is None else _matrix(partner),
                phi=float(pr.get("phi", 0.0)),
            ))
        except ValidationError as exc:
            fail(ValidationError(f"jump pair {i}: {exc}"), "jump_pairs", i)
    try:
        lind = Lindbladian(h, pairs, allow_unitary=not pairs)
    except ValidationError as exc:
        fail(exc, "hamiltonian")
    try:
        rho0 = as_density(_matrix(raw["initial_state"]))
    except ValidationError as exc:
        fail(exc, "initial_state")
    if rho0.shape != h.shape:
        fail(ValidationError("initial_state and hamiltonian dimensions differ"), "initial_state")
    return SystemSpec(lind, rho0, raw.get("temperature"))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", source, exc.lineno) from exc

    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = "/".join(map(str, err.absolute_path)) or "<root>"
        raise ConfigError(f"{where}: {err.message}", source, _line_of(text, list(err.absolute_path)))

    scenario = None
    if "scenario" in raw:
        try:
            scenario = MpembaScenario(**raw["scenario"])
        except ValidationError as exc:
            raise ConfigError(str(exc), source, _line_of(text, ["scenario"])) from exc
    system = _build_system(raw["system"], text, source) if "system" in raw else None
    grid = raw.get("grid", {})
    if "t_final" in grid and "dt" in grid and grid["dt"] >= grid["t_final"]:
        raise ConfigError("grid needs dt < t_final", source, _line_of(text, ["grid"]))
    metrics = tuple(dict.fromkeys(MetricKind.parse(m) for m in raw.get("metrics", [m.value for m in MetricKind])))
    return RunConfig(
        scenario=scenario,
        system=system,
        metrics=metrics,
        t_final=grid.get("t_final"),
        dt=grid.get("dt"),
        output=Path(raw.get("output", DEFAULT_OUTPUT)),
        emit_svg=bool(raw.get("emit_svg", False)),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from exc
    return parse_config(text, str(path))


def output_dir(config: Optional[RunConfig]) -> Path:
    """``QIG_OUTPUT_DIR`` when set, otherwise the configured (or default) directory."""
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return config.output if config is not None else Path(DEFAULT_OUTPUT)
