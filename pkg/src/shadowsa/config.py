"""Declarative run configuration: YAML files resolved into library objects.

A configuration is a nested mapping with blocks ``model``, ``window``,
``prior``, ``observed``, ``simulate``, ``shadow``, ``schedule``, ``stats``
plus top level ``seed`` and ``output_dir``.  Paths inside the file are
resolved relative to the file's directory.  A run metadata JSON written by
the command line front end can be loaded in place of a YAML file, which
replays the run it describes.

Model parameters may be given as a ``theta`` list in log form, as the
individual log form names (``log_beta`` and so on), or for the two planar
point models as raw ``beta`` and ``gamma`` values that are converted by
taking logs.  Observed statistics are written in the reporting sign
convention and converted to the internal one here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from .core import ConfigError, PriorBox, Window
from .io import read_metadata, read_pattern, read_spines
from .models import (
    AreaInteractionModel,
    CandyModel,
    GalaxyModel,
    StraussModel,
    sufficient_statistics,
)
from .shadow import Schedule, ShadowConfig

__all__ = ["RunConfig", "load_config", "SimulateOptions"]

_TOP_KEYS = {
    "model", "window", "prior", "observed", "simulate",
    "shadow", "schedule", "stats", "seed", "output_dir",
}

_MODEL_OPTION_KEYS = {
    "strauss": {"r"},
    "area_interaction": {"r", "resolution", "clip_to_window"},
    "candy": {"length", "r_c", "tau_c", "tau_r", "r_r"},
    "galaxy": {"r", "spines", "resolution", "clip_to_window"},
}

_RAW_PARAM_KEYS = {
    "strauss": ("beta", "gamma"),
    "area_interaction": ("beta", "gamma"),
}

_SCHEDULE_DEFAULTS = {"kind": "geometric", "t0": 1.0e4, "k_t": 0.9999, "k_delta": 0.99999}
_SHADOW_DEFAULTS = {"n_outer": 1_000_000, "keep_every": 1_000}
_SIMULATE_DEFAULTS = {"n_samples": 1_000, "steps_between": 100, "burn_in": 10_000}


def _require_mapping(value, field: str) -> dict:
    if value is None:
        raise ConfigError(f"{field} block is required")
    if not isinstance(value, dict):
        raise ConfigError(f"{field} must be a mapping, got {type(value).__name__}")
    return value


def _as_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{field} must be a number, got {value!r}")
    return float(value)


def _as_int(value, field: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{field} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ConfigError(f"{field} must be an integer, got {value!r}")


def _as_vector(value, field: str) -> list[float]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{field} must be a list of numbers, got {value!r}")
    return [_as_float(v, f"{field}[{i}]") for i, v in enumerate(value)]


def _check_keys(block: dict, allowed: set, field: str) -> None:
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {field}: {', '.join(unknown)}")


@dataclass(frozen=True)
class SimulateOptions:
    n_samples: int
    steps_between: int
    burn_in: int


class RunConfig:
    """Validated view over a configuration mapping.

    Blocks are resolved lazily so that a command only validates the parts
    it needs; every resolver raises ConfigError naming the failing field.
    """

    def __init__(self, mapping: dict, base_dir=None):
        if not isinstance(mapping, dict):
            raise ConfigError("configuration root must be a mapping")
        _check_keys(mapping, _TOP_KEYS, "the configuration root")
        self.mapping = mapping
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.seed = _as_int(mapping.get("seed", 0), "seed")
        out = mapping.get("output_dir")
        if out is not None and not isinstance(out, str):
            raise ConfigError(f"output_dir must be a string path, got {out!r}")
        self.output_dir = out

    def _resolve_path(self, value, field: str) -> Path:
        if not isinstance(value, str):
            raise ConfigError(f"{field} must be a file path string, got {value!r}")
        path = Path(value)
        if not path.is_absolute():
            path = self.base_dir / path
        if not path.exists():
            raise ConfigError(f"{field}: file not found: {path}")
        return path

    @cached_property
    def window(self) -> Window:
        block = _require_mapping(self.mapping.get("window"), "window")
        _check_keys(block, {"lower", "upper"}, "window")
        if "lower" not in block or "upper" not in block:
            raise ConfigError("window requires lower and upper bounds")
        try:
            return Window(
                _as_vector(block["lower"], "window.lower"),
                _as_vector(block["upper"], "window.upper"),
            )
        except ConfigError as exc:
            raise ConfigError(f"window: {exc}") from None

    @cached_property
    def model(self):
        block = _require_mapping(self.mapping.get("model"), "model")
        kind = block.get("kind")
        if kind is None:
            raise ConfigError("model.kind is required")
        if kind not in _MODEL_OPTION_KEYS:
            raise ConfigError(
                f"model.kind must be one of {sorted(_MODEL_OPTION_KEYS)}, got {kind!r}"
            )
        param_keys = self._param_keys(kind)
        _check_keys(block, {"kind"} | _MODEL_OPTION_KEYS[kind] | param_keys, "model")
        try:
            if kind == "strauss":
                return StraussModel(r=_as_float(self._need(block, "r", "model.r"), "model.r"))
            if kind == "area_interaction":
                return AreaInteractionModel(
                    r=_as_float(self._need(block, "r", "model.r"), "model.r"),
                    resolution=self._opt_float(block, "resolution", "model.resolution"),
                    clip_to_window=bool(block.get("clip_to_window", False)),
                )
            if kind == "candy":
                return CandyModel(
                    length=_as_float(self._need(block, "length", "model.length"), "model.length"),
                    r_c=_as_float(self._need(block, "r_c", "model.r_c"), "model.r_c"),
                    tau_c=_as_float(self._need(block, "tau_c", "model.tau_c"), "model.tau_c"),
                    tau_r=_as_float(self._need(block, "tau_r", "model.tau_r"), "model.tau_r"),
                    r_r=self._opt_float(block, "r_r", "model.r_r"),
                )
            spines_value = block.get("spines")
            if spines_value is None:
                raise ConfigError("model.spines is required for the galaxy model")
            spines = read_spines(self._resolve_path(spines_value, "model.spines"))
            return GalaxyModel(
                r=_as_float(self._need(block, "r", "model.r"), "model.r"),
                spines=spines,
                resolution=self._opt_float(block, "resolution", "model.resolution"),
                clip_to_window=bool(block.get("clip_to_window", False)),
            )
        except ConfigError as exc:
            text = str(exc)
            raise ConfigError(text if text.startswith("model.") else f"model: {text}") from None

    @staticmethod
    def _need(block: dict, key: str, field: str):
        if key not in block:
            raise ConfigError(f"{field} is required")
        return block[key]

    @staticmethod
    def _opt_float(block: dict, key: str, field: str):
        value = block.get(key)
        return None if value is None else _as_float(value, field)

    def _param_keys(self, kind: str) -> set:
        keys = {"theta"}
        model_cls = {
            "strauss": StraussModel,
            "area_interaction": AreaInteractionModel,
            "candy": CandyModel,
            "galaxy": GalaxyModel,
        }[kind]
        keys.update(model_cls.param_names)
        keys.update(_RAW_PARAM_KEYS.get(kind, ()))
        return keys

    def theta(self, required: bool = True) -> np.ndarray | None:
        """Generating parameter from the model block, in log form."""
        model = self.model
        block = self.mapping["model"]
        names = model.param_names
        kind = block["kind"]
        styles = []
        if "theta" in block:
            styles.append("theta")
        if any(n in block for n in names):
            styles.append("named")
        raw_names = _RAW_PARAM_KEYS.get(kind, ())
        if raw_names and any(n in block for n in raw_names):
            styles.append("raw")
        if len(styles) > 1:
            raise ConfigError(
                f"model: parameters given in more than one style ({', '.join(styles)})"
            )
        if not styles:
            if required:
                raise ConfigError(
                    f"model: parameters required; give theta or {', '.join(names)}"
                )
            return None
        if styles[0] == "theta":
            theta = _as_vector(block["theta"], "model.theta")
            if len(theta) != len(names):
                raise ConfigError(
                    f"model.theta needs {len(names)} components ({', '.join(names)}), "
                    f"got {len(theta)}"
                )
            return np.array(theta)
        if styles[0] == "named":
            missing = [n for n in names if n not in block]
            if missing:
                raise ConfigError(f"model: missing parameter(s) {', '.join(missing)}")
            return np.array([_as_float(block[n], f"model.{n}") for n in names])
        values = []
        for raw, name in zip(raw_names, names):
            if raw not in block:
                raise ConfigError(f"model.{raw} is required in the raw style")
            v = _as_float(block[raw], f"model.{raw}")
            if v <= 0.0:
                raise ConfigError(f"model.{raw} must be positive to take its log")
            values.append(math.log(v))
        return np.array(values)

    @cached_property
    def prior(self) -> PriorBox:
        block = _require_mapping(self.mapping.get("prior"), "prior")
        _check_keys(block, {"lower", "upper"}, "prior")
        if "lower" not in block or "upper" not in block:
            raise ConfigError("prior requires lower and upper bounds")
        try:
            prior = PriorBox(
                _as_vector(block["lower"], "prior.lower"),
                _as_vector(block["upper"], "prior.upper"),
            )
        except ConfigError as exc:
            raise ConfigError(f"prior: {exc}") from None
        if prior.dim != len(self.model.param_names):
            raise ConfigError(
                f"prior has dimension {prior.dim}, model "
                f"{self.mapping['model']['kind']!r} has {len(self.model.param_names)} parameters"
            )
        return prior

    def observed_statistics(self) -> np.ndarray:
        """Observed t(y) in the internal sign convention.

        Either an explicit ``observed.stats`` list (reporting convention)
        or an ``observed.pattern`` CSV evaluated under the model.
        """
        block = _require_mapping(self.mapping.get("observed"), "observed")
        _check_keys(block, {"stats", "pattern"}, "observed")
        model = self.model
        k = len(model.stat_names)
        if ("stats" in block) == ("pattern" in block):
            raise ConfigError("observed requires exactly one of stats or pattern")
        if "stats" in block:
            values = _as_vector(block["stats"], "observed.stats")
            if len(values) != k:
                raise ConfigError(
                    f"observed.stats needs {k} components ({', '.join(model.report_names)}), "
                    f"got {len(values)}"
                )
            # The reporting map only flips signs, so it is an involution:
            # applying it to reported values recovers the internal ones.
            return model.report_statistics(np.array(values))
        pattern = read_pattern(
            self._resolve_path(block["pattern"], "observed.pattern"), self.window
        )
        return sufficient_statistics(model, pattern)

    def shadow(self) -> ShadowConfig:
        block = _require_mapping(self.mapping.get("shadow"), "shadow")
        _check_keys(
            block, {"delta", "m", "aux_steps", "n_outer", "keep_every", "theta0"}, "shadow"
        )
        k = len(self.model.param_names)
        delta_value = self._need(block, "delta", "shadow.delta")
        if isinstance(delta_value, (int, float)) and not isinstance(delta_value, bool):
            delta = [float(delta_value)] * k
        else:
            delta = _as_vector(delta_value, "shadow.delta")
            if len(delta) != k:
                raise ConfigError(f"shadow.delta needs {k} components, got {len(delta)}")
        try:
            return ShadowConfig(
                delta=tuple(delta),
                m=_as_int(self._need(block, "m", "shadow.m"), "shadow.m"),
                aux_steps=_as_int(
                    self._need(block, "aux_steps", "shadow.aux_steps"), "shadow.aux_steps"
                ),
                n_outer=_as_int(
                    block.get("n_outer", _SHADOW_DEFAULTS["n_outer"]), "shadow.n_outer"
                ),
                keep_every=_as_int(
                    block.get("keep_every", _SHADOW_DEFAULTS["keep_every"]),
                    "shadow.keep_every",
                ),
            )
        except ConfigError as exc:
            text = str(exc)
            raise ConfigError(text if text.startswith("shadow.") else f"shadow: {text}") from None

    def theta0(self) -> np.ndarray | None:
        block = self.mapping.get("shadow") or {}
        if "theta0" not in block:
            return None
        theta0 = _as_vector(block["theta0"], "shadow.theta0")
        k = len(self.model.param_names)
        if len(theta0) != k:
            raise ConfigError(f"shadow.theta0 needs {k} components, got {len(theta0)}")
        return np.array(theta0)

    def schedule(self) -> Schedule:
        block = dict(_SCHEDULE_DEFAULTS)
        given = self.mapping.get("schedule")
        if given is not None:
            given = _require_mapping(given, "schedule")
            _check_keys(given, {"kind", "t0", "k_t", "k_delta", "scale"}, "schedule")
            block.update(given)
        kind = block["kind"]
        try:
            if kind == "constant":
                return Schedule.constant(
                    t0=_as_float(block.get("t0", 1.0), "schedule.t0"),
                    k_delta=_as_float(block["k_delta"], "schedule.k_delta"),
                )
            if kind == "geometric":
                return Schedule.geometric(
                    t0=_as_float(block["t0"], "schedule.t0"),
                    k_t=_as_float(block["k_t"], "schedule.k_t"),
                    k_delta=_as_float(block["k_delta"], "schedule.k_delta"),
                )
            if kind == "logarithmic":
                if "scale" not in block:
                    raise ConfigError("schedule.scale is required for the logarithmic kind")
                return Schedule.logarithmic(
                    scale=_as_float(block["scale"], "schedule.scale"),
                    k_delta=_as_float(block["k_delta"], "schedule.k_delta"),
                )
            raise ConfigError(
                f"schedule.kind must be constant, geometric or logarithmic, got {kind!r}"
            )
        except ConfigError as exc:
            text = str(exc)
            raise ConfigError(
                text if text.startswith("schedule") else f"schedule: {text}"
            ) from None

    def simulate_options(self) -> SimulateOptions:
        block = dict(_SIMULATE_DEFAULTS)
        given = self.mapping.get("simulate")
        if given is not None:
            given = _require_mapping(given, "simulate")
            _check_keys(given, set(_SIMULATE_DEFAULTS), "simulate")
            block.update(given)
        opts = SimulateOptions(
            n_samples=_as_int(block["n_samples"], "simulate.n_samples"),
            steps_between=_as_int(block["steps_between"], "simulate.steps_between"),
            burn_in=_as_int(block["burn_in"], "simulate.burn_in"),
        )
        if opts.n_samples < 1:
            raise ConfigError("simulate.n_samples must be at least 1")
        if opts.steps_between < 1:
            raise ConfigError("simulate.steps_between must be at least 1")
        if opts.burn_in < 0:
            raise ConfigError("simulate.burn_in must be nonnegative")
        return opts

    def stats_radii(self) -> list[float]:
        """Radius sweep for the statistics table; defaults to the model radius."""
        block = self.mapping.get("stats")
        model = self.model
        default = model.r_c if isinstance(model, CandyModel) else model.r
        if block is None:
            return [float(default)]
        block = _require_mapping(block, "stats")
        _check_keys(block, {"radii"}, "stats")
        radii = _as_vector(self._need(block, "radii", "stats.radii"), "stats.radii")
        if not radii:
            raise ConfigError("stats.radii must not be empty")
        for i, r in enumerate(radii):
            if r <= 0.0:
                raise ConfigError(f"stats.radii[{i}] must be positive")
        return radii

    def model_at_radius(self, r: float):
        """Copy of the configured model with its interaction radius replaced."""
        model = self.model
        if isinstance(model, StraussModel):
            return StraussModel(r=r)
        if isinstance(model, AreaInteractionModel):
            return AreaInteractionModel(
                r=r, clip_to_window=model.clip_to_window
            )
        if isinstance(model, GalaxyModel):
            return GalaxyModel(
                r=r, spines=model.spines, clip_to_window=model.clip_to_window
            )
        raise ConfigError("the candy model has no single interaction radius to sweep")

    def resolved(self) -> dict:
        """Plain mapping of the configuration for run metadata.

        File paths are made absolute so that a metadata JSON written into
        an output directory can replay the run from anywhere.
        """
        out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in self.mapping.items()}
        model_block = out.get("model")
        if isinstance(model_block, dict) and isinstance(model_block.get("spines"), str):
            model_block["spines"] = str(self._resolve_path(model_block["spines"], "model.spines"))
        observed = out.get("observed")
        if isinstance(observed, dict) and isinstance(observed.get("pattern"), str):
            observed["pattern"] = str(
                self._resolve_path(observed["pattern"], "observed.pattern")
            )
        out["seed"] = self.seed
        return out


def load_config(path) -> RunConfig:
    """RunConfig from a YAML file or from a run metadata JSON."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    if path.suffix.lower() == ".json":
        data = read_metadata(path)
        mapping = data.get("config", data)
        return RunConfig(mapping, base_dir=path.parent)
    try:
        with path.open() as handle:
            mapping = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if mapping is None:
        raise ConfigError(f"{path}: configuration file is empty")
    return RunConfig(mapping, base_dir=path.parent)
