"""JSON run configuration: parsing, validation, defaults and overrides.

A config is a JSON object with the sections ``grid``, ``model``,
``params``, ``stepper``, ``data``, ``output`` and ``options`` plus the
top-level ``experiment`` name.  Every section is optional; missing keys take
the experiment's defaults.  :func:`parse_config` collects every validation
error before reporting, each tagged with its key path.
"""

from __future__ import annotations

import copy
import inspect
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

from .gas import CoefficientSet, MaterialLaw, coefficients_from_config
from .integrate import SCHEMES, StepperConfig
from .models import STIFF_KINDS

EXPERIMENTS = (
    "simulate",
    "sweep",
    "verify-operators",
    "example42",
    "limit-convergence",
    "acoustic-decay",
    "validate-model",
    "linearized-probe",
)
FORMATS = ("csv", "json", "svg")

_BASE: dict[str, Any] = {
    "grid": {"d": 2, "n": 32, "L": 2.0 * math.pi},
    "model": {
        "preset": "perfect-gas",
        "R": 1.0,
        "C_V": 1.5,
        "alpha": 1.0,
        "k": {"law": "constant", "coef": 1.0, "exponent": 0.0},
        "zeta": {"law": "constant", "coef": 1.0, "exponent": 0.0},
        "eta": {"law": "constant", "coef": 0.0, "exponent": 0.0},
    },
    "params": {"eps": [0.1], "mu": [1.0], "kappa": [1.0]},
    "stepper": asdict(StepperConfig()),
    "data": {
        "seed": 1,
        "band": 2.0,
        "target_norm": 1.0,
        "order_s": 4.0,
        "t_end": 0.25,
        "well_prepared": False,
    },
    "output": {"directory": "results", "formats": list(FORMATS)},
    "options": {},
}

# Per-experiment overrides of the base defaults; they mirror the drivers'
# keyword defaults so that a bare ``{"experiment": name}`` reproduces them.
EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "simulate": {"stepper": {"adaptive": True}},
    "sweep": {
        "grid": {"n": 64},
        "params": {"eps": [0.5, 0.25, 0.125, 0.0625], "mu": [0.0, 1.0], "kappa": [0.0, 1.0]},
        "stepper": {"adaptive": True},
    },
    "verify-operators": {"grid": {"n": 64}},
    "example42": {"params": {"eps": [0.1, 0.01]}, "data": {"band": 3.0, "t_end": 1.0}, "options": {"beta": 2.0}},
    "limit-convergence": {
        "grid": {"n": 64},
        "params": {"eps": [0.2, 0.1, 0.05, 0.025]},
        "data": {"seed": 3, "t_end": 0.5},
    },
    "acoustic-decay": {"grid": {"L": 8.0}, "params": {"eps": [0.2, 0.1, 0.05]}, "data": {"t_end": 0.2}},
    "validate-model": {},
    "linearized-probe": {
        "params": {"eps": [0.5, 0.2, 0.1, 0.05], "mu": [0.5], "kappa": [0.5]},
        "data": {"seed": 4, "band": 3.0, "t_end": 0.5},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class GridBlock:
    d: int
    n: int
    L: float


@dataclass(frozen=True)
class ParamsBlock:
    eps: tuple[float, ...]
    mu: tuple[float, ...]
    kappa: tuple[float, ...]


@dataclass(frozen=True)
class DataBlock:
    seed: int
    band: float
    target_norm: float
    order_s: float
    t_end: float
    well_prepared: bool


@dataclass(frozen=True)
class OutputBlock:
    directory: str
    formats: tuple[str, ...]


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration.  :meth:`to_dict` is the reproducible echo."""

    experiment: str
    grid: GridBlock
    model: dict[str, Any]
    params: ParamsBlock
    stepper: StepperConfig
    data: DataBlock
    output: OutputBlock
    options: dict[str, Any] = field(default_factory=dict)

    def coefficients(self) -> CoefficientSet:
        return coefficients_from_config(self.model)

    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "grid": asdict(self.grid),
            "model": copy.deepcopy(self.model),
            "params": {k: list(v) for k, v in asdict(self.params).items()},
            "stepper": asdict(self.stepper),
            "data": asdict(self.data),
            "output": {"directory": self.output.directory, "formats": list(self.output.formats)},
            "options": copy.deepcopy(self.options),
        }


def _merge(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def defaults_for(experiment: str) -> dict[str, Any]:
    """Fully populated default config dict for ``experiment``."""
    merged = _merge(_BASE, EXPERIMENT_DEFAULTS.get(experiment, {}))
    merged["experiment"] = experiment
    return merged


class _Collector:
    def __init__(self) -> None:
        self.errors: list[str] = []

    def add(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def number(self, block: dict, section: str, key: str, check: Callable[[float], bool], rule: str,
               integer: bool = False) -> Any:
        value = block.get(key)
        path = f"{section}.{key}"
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.add(path, f"expected a number, got {value!r}")
            return None
        if integer and not float(value).is_integer():
            self.add(path, f"expected an integer, got {value!r}")
            return None
        if not math.isfinite(float(value)) or not check(float(value)):
            self.add(path, f"{value!r} violates {rule}")
            return None
        return int(value) if integer else float(value)

    def number_list(self, block: dict, section: str, key: str, check: Callable[[float], bool], rule: str) -> tuple:
        values = block.get(key)
        path = f"{section}.{key}"
        if not isinstance(values, list) or not values:
            self.add(path, f"expected a nonempty list of numbers, got {values!r}")
            return ()
        out = []
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                self.add(f"{path}[{i}]", f"expected a number, got {v!r}")
            elif not check(float(v)):
                self.add(f"{path}[{i}]", f"{v!r} violates {rule}")
            else:
                out.append(float(v))
        return tuple(out)


def _unknown_keys(col: _Collector, block: dict, section: str, allowed: dict) -> None:
    for key in block:
        if key not in allowed:
            col.add(f"{section}.{key}", f"unknown key; expected one of {sorted(allowed)}")


def _driver_parameters(experiment: str) -> dict[str, inspect.Parameter] | None:
    from .cli import DRIVER_OPTIONS

    fn = DRIVER_OPTIONS.get(experiment)
    if fn is None:
        return None
    return dict(inspect.signature(fn).parameters)


def validate(raw: Any) -> RunConfig:
    """Validate a decoded JSON object and fill in defaults.

    Raises:
        ConfigError: Listing every invalid or unknown key with its path.
    """
    col = _Collector()
    if not isinstance(raw, dict):
        raise ConfigError([f"<root>: expected a JSON object, got {type(raw).__name__}"])
    experiment = raw.get("experiment", "simulate")
    if experiment not in EXPERIMENTS:
        raise ConfigError([f"experiment: unknown name {experiment!r}; available: {', '.join(EXPERIMENTS)}"])
    defaults = defaults_for(experiment)
    for key in raw:
        if key not in defaults:
            col.add(key, f"unknown section; expected one of {sorted(defaults)}")
    for key, value in raw.items():
        if key in defaults and isinstance(defaults[key], dict) and not isinstance(value, dict):
            col.add(key, f"expected an object, got {value!r}")
    if col.errors:
        raise ConfigError(col.errors)
    merged = _merge(defaults, raw)

    g = merged["grid"]
    _unknown_keys(col, g, "grid", defaults["grid"])
    d = col.number(g, "grid", "d", lambda x: x in (1, 2, 3), "d in {1, 2, 3}", integer=True)
    n = col.number(g, "grid", "n", lambda x: x >= 4 and x % 2 == 0, "an even n >= 4", integer=True)
    L = col.number(g, "grid", "L", lambda x: x > 0, "L > 0")

    m = merged["model"]
    _unknown_keys(col, m, "model", defaults["model"])
    if m.get("preset") != "perfect-gas":
        col.add("model.preset", f"unknown coefficient preset {m.get('preset')!r}; available: perfect-gas")
    col.number(m, "model", "R", lambda x: x > 0, "R > 0")
    col.number(m, "model", "C_V", lambda x: x > 0, "C_V > 0")
    col.number(m, "model", "alpha", lambda x: x >= 0, "alpha >= 0")
    for law in ("k", "zeta", "eta"):
        try:
            MaterialLaw.from_config(m[law])
        except (ValueError, TypeError, AttributeError) as err:
            col.add(f"model.{law}", str(err))
    if not col.errors:
        try:
            coefficients_from_config(m)
        except ValueError as err:
            col.add("model", str(err))

    p = merged["params"]
    _unknown_keys(col, p, "params", defaults["params"])
    eps = col.number_list(p, "params", "eps", lambda x: 0 < x <= 1, "eps in (0, 1]")
    mu = col.number_list(p, "params", "mu", lambda x: 0 <= x <= 1, "mu in [0, 1]")
    kappa = col.number_list(p, "params", "kappa", lambda x: 0 <= x <= 1, "kappa in [0, 1]")

    s = merged["stepper"]
    _unknown_keys(col, s, "stepper", defaults["stepper"])
    if s.get("scheme") not in SCHEMES:
        col.add("stepper.scheme", f"unknown scheme {s.get('scheme')!r}; expected one of {list(SCHEMES)}")
    if s.get("stiff") not in STIFF_KINDS:
        col.add("stepper.stiff", f"unknown split {s.get('stiff')!r}; expected one of {list(STIFF_KINDS)}")
    for key, rule in (("dt", "dt > 0"), ("safety", "safety > 0"), ("blowup_threshold", "blowup_threshold > 0")):
        col.number(s, "stepper", key, lambda x: x > 0, rule)
    col.number(s, "stepper", "t_end", lambda x: x >= 0, "t_end >= 0")
    col.number(s, "stepper", "max_steps", lambda x: x >= 1, "max_steps >= 1", integer=True)
    if not isinstance(s.get("adaptive"), bool):
        col.add("stepper.adaptive", f"expected true or false, got {s.get('adaptive')!r}")

    dat = merged["data"]
    _unknown_keys(col, dat, "data", defaults["data"])
    seed = col.number(dat, "data", "seed", lambda x: 0 <= x < 2**63, "0 <= seed < 2^63", integer=True)
    band = col.number(dat, "data", "band", lambda x: x >= 0, "band >= 0")
    if band is not None and n is not None and 3 * band > n:
        col.add("data.band", f"{band!r} exceeds the dealiased band n/3 = {n / 3:.6g}")
    target = col.number(dat, "data", "target_norm", lambda x: x >= 0, "target_norm >= 0")
    order_s = col.number(dat, "data", "order_s", lambda x: x >= 0, "order_s >= 0")
    t_end = col.number(dat, "data", "t_end", lambda x: x >= 0, "t_end >= 0")
    if not isinstance(dat.get("well_prepared"), bool):
        col.add("data.well_prepared", f"expected true or false, got {dat.get('well_prepared')!r}")

    o = merged["output"]
    _unknown_keys(col, o, "output", defaults["output"])
    if not isinstance(o.get("directory"), str) or not o.get("directory"):
        col.add("output.directory", f"expected a nonempty string, got {o.get('directory')!r}")
    formats = o.get("formats")
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        col.add("output.formats", f"expected a list drawn from {list(FORMATS)}, got {formats!r}")

    options = merged["options"]
    params_sig = _driver_parameters(experiment)
    if params_sig is not None:
        for key in options:
            if key not in params_sig:
                col.add(f"options.{key}", f"unknown option for {experiment}; expected one of {sorted(params_sig)}")
    elif options:
        col.add("options", f"{experiment} takes no options")

    if col.errors:
        raise ConfigError(col.errors)
    stepper_kwargs = {k: s[k] for k in defaults["stepper"]}
    stepper_kwargs["dt"] = float(stepper_kwargs["dt"])
    stepper_kwargs["max_steps"] = int(stepper_kwargs["max_steps"])
    return RunConfig(
        experiment=experiment,
        grid=GridBlock(d, n, L),
        model=copy.deepcopy(m),
        params=ParamsBlock(eps, mu, kappa),
        stepper=StepperConfig(**stepper_kwargs),
        data=DataBlock(seed, band, target, order_s, t_end, dat["well_prepared"]),
        output=OutputBlock(o["directory"], tuple(formats)),
        options=copy.deepcopy(options),
    )


def parse_config(text: str) -> RunConfig:
    """Parse JSON text into a validated :class:`RunConfig`.

    Raises:
        ConfigError: On a syntax error (with line and column) or on any
            semantic error (all of them, with key paths).
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError([f"syntax error at line {err.lineno}, column {err.colno}: {err.msg}"]) from None
    return validate(raw)


def parse_override_value(text: str) -> Any:
    """JSON literal if the text parses as one, else the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict[str, Any], overrides: list[tuple[str, str]]) -> dict[str, Any]:
    """Set ``section.key`` paths from ``--section.key value`` flags.

    A comma-separated value for a list-valued key becomes a list of numbers.

    Raises:
        ConfigError: For a path without a section or a non-object section.
    """
    out = copy.deepcopy(raw)
    errors = []
    for path, text in overrides:
        parts = path.split(".")
        if len(parts) < 2 or not all(parts):
            errors.append(f"{path}: override must have the form section.key")
            continue
        experiment = out.get("experiment", "simulate")
        default = defaults_for(experiment if experiment in EXPERIMENTS else "simulate")
        node = out
        for part in parts[:-1]:
            if not isinstance(node.setdefault(part, {}), dict):
                errors.append(f"{path}: {part} is not an object")
                break
            node = node[part]
        else:
            value = parse_override_value(text)
            template = default.get(parts[0], {}).get(parts[-1]) if len(parts) == 2 else None
            if isinstance(template, list) and not isinstance(value, list):
                value = [parse_override_value(v) for v in text.split(",")]
            node[parts[-1]] = value
    if errors:
        raise ConfigError(errors)
    return out
