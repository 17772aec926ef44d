"""Run configuration: INI-style sections with a fixed schema.

Example::

    [run]
    name = stability
    seed = 0

    [grid]
    half_length = 20
    n_points = 1024

    [time]
    dt = 1e-3
    t_end = 0.5

    [besov]
    p = 2

    [initial_data]
    kind = gaussian
    amplitude = 1.0
    width = 1.0
    norm_target = 0.25

    [experiment]
    deltas = 1e-2, 1e-3, 1e-4

Unknown sections or keys are rejected. ``s`` is always ``1/p`` and ``r = 1``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from ..core import InitialDataSpec
from ..euler import TimeControls
from ..spectral import GridSpec


class ConfigError(ValueError):
    """Malformed or invalid configuration; message names the line and field."""


def _floats(text: str) -> list:
    return [float(v) for v in re.split(r"[,\s]+", text.strip()) if v]


def _ints(text: str) -> list:
    return [int(v) for v in re.split(r"[,\s]+", text.strip()) if v]


def _opt_float(text: str):
    return None if text.strip().lower() in ("none", "") else float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (parser, default); default None marks optional
SCHEMA: dict = {
    "run": {
        "name": (str, "run"),
        "seed": (int, 0),
        "output_dir": (str, "out"),
    },
    "grid": {
        "half_length": (float, 20.0),
        "n_points": (int, 1024),
    },
    "time": {
        "dt": (float, 1e-3),
        "t_end": (float, 0.5),
        "cfl_cap": (float, 0.3),
        "safety": (float, 1e3),
        "jacobian_floor": (_opt_float, 0.5),
        "output_dt": (_opt_float, None),
        "theta": (float, 0.5),
    },
    "besov": {
        "p": (float, 2.0),
    },
    "initial_data": {
        "kind": (str, "gaussian"),
        "amplitude": (float, 1.0),
        "width": (float, 1.0),
        "center": (float, 0.0),
        "smoothing": (_opt_float, None),
        "max_block": (int, 4),
        "norm_target": (_opt_float, None),
    },
    "experiment": {
        "form": (str, "m"),
        "deltas": (_floats, [1e-2, 1e-3, 1e-4]),
        "p_values": (_floats, [1.0, 2.0, 4.0]),
        "levels": (_ints, [2, 3, 4, 5, 6, 7]),
        "seeds": (_ints, None),
        "n_max": (int, 12),
        "amplitude_factors": (_floats, [1.0, 0.5, 0.25]),
        "refinements": (_ints, None),
        "trials": (int, 100),
        "steep_amplitude": (float, 3.0),
        "steep_t_end": (float, 2.0),
        "n_particles": (int, None),
        "perturbation_width": (float, 0.7),
        "perturbation_center": (float, 1.0),
        "order_dt": (float, 0.1),
        "order_t_end": (float, 0.8),
        "parallel": (_bool, False),
    },
}


@dataclass(frozen=True)
class RunConfig:
    name: str
    seed: int
    output_dir: str
    grid: GridSpec
    controls: TimeControls
    p: float
    initial: InitialDataSpec
    params: dict = field(default_factory=dict)
    echo: dict = field(default_factory=dict)  # section -> key -> raw string
    source_text: str = ""

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.echo, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_seed(self, seed: int) -> "RunConfig":
        echo = {s: dict(v) for s, v in self.echo.items()}
        echo.setdefault("run", {})["seed"] = str(seed)
        return replace(self, seed=seed, initial=replace(self.initial, seed=seed), echo=echo)

    def with_output_dir(self, out: str) -> "RunConfig":
        return replace(self, output_dir=out)


def _line_of(text: str, section: str, key: Optional[str]) -> int:
    current = None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            k = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            if k == key:
                return i
    return 0


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None

    values: dict = {}
    echo: dict = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"line {_line_of(text, section, None)}: unknown section [{section}]")
        echo[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"line {_line_of(text, section, key)}: unknown key {section}.{key}")
            conv = SCHEMA[section][key][0]
            try:
                values[(section, key)] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"line {_line_of(text, section, key)}: bad value for {section}.{key}: {exc}") from None
            echo[section][key] = raw

    def get(section, key):
        return values.get((section, key), SCHEMA[section][key][1])

    def build(section, fn):
        try:
            return fn()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"line {_line_of(text, section, None)}: invalid [{section}]: {exc}") from None

    grid = build("grid", lambda: GridSpec(get("grid", "half_length"), get("grid", "n_points")))
    controls = build("time", lambda: TimeControls(
        dt=get("time", "dt"),
        t_end=get("time", "t_end"),
        cfl_cap=get("time", "cfl_cap"),
        safety=get("time", "safety"),
        jacobian_floor=get("time", "jacobian_floor"),
        output_dt=get("time", "output_dt"),
        theta=get("time", "theta"),
    ))
    p = get("besov", "p")
    if not p >= 1 or p == float("inf"):
        raise ConfigError(f"line {_line_of(text, 'besov', 'p')}: besov.p must lie in [1, inf)")
    seed = get("run", "seed")
    initial = build("initial_data", lambda: InitialDataSpec(
        kind=get("initial_data", "kind"),
        amplitude=get("initial_data", "amplitude"),
        width=get("initial_data", "width"),
        center=get("initial_data", "center"),
        smoothing=get("initial_data", "smoothing"),
        seed=seed,
        max_block=get("initial_data", "max_block"),
        norm_target=get("initial_data", "norm_target"),
        p=p,
    ))
    params = {k: get("experiment", k) for k in SCHEMA["experiment"]}
    if params["form"] not in ("m", "u"):
        raise ConfigError(f"line {_line_of(text, 'experiment', 'form')}: experiment.form must be 'm' or 'u'")
    return RunConfig(
        name=get("run", "name"),
        seed=seed,
        output_dir=get("run", "output_dir"),
        grid=grid,
        controls=controls,
        p=p,
        initial=initial,
        params=params,
        echo=echo,
        source_text=text,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def schema_reference() -> str:
    """Human-readable listing of every section, key and default."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (conv, default) in keys.items():
            lines.append(f"  {key} = {default!r}  ({getattr(conv, '__name__', 'value').lstrip('_')})")
    return "\n".join(lines)


def echo_dict(cfg: RunConfig) -> dict[str, Any]:
    return {s: dict(v) for s, v in cfg.echo.items()}
