"""Run configuration: a sectioned key-value text format with strict parsing.

The format is line oriented: '[section]' headers, 'key = value' assignments,
'#' starts a comment.  Unknown sections or keys are errors that cite the
line number, as are type mismatches and missing required keys.  Parsed
settings land in a RunConfig; every effective value (defaults included) is
echoed into run summaries for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grids import Grid, operators


class ConfigError(ValueError):
    pass


def _parse_bool(s):
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s):
    return tuple(float(tok) for tok in s.replace(",", " ").split())


# section -> key -> (converter, default).  Required keys use the REQUIRED marker.
REQUIRED = object()

SCHEMA = {
    "run": {
        "command": (str, None),
        "seed": (int, 0),
        "out": (str, "."),
    },
    "domain": {
        "lx": (float, 1.0),
        "ly": (float, 1.0),
    },
    "grid": {
        "nx": (int, 64),
        "ny": (int, 64),
        "bc": (str, "periodic"),
    },
    "material": {
        "kind": (str, "isotropic"),
        "mu": (float, 1.0),
        "lambda": (float, 0.0),
        "path": (str, None),
    },
    "force": {
        "preset": (str, "sincos"),
        "amplitude": (float, 1.0),
        "file": (str, None),
        "r33": (float, 1.0),
    },
    "solver": {
        "max_outer": (int, 500),
        "tol_grad": (float, 1e-9),
        "tol_el": (float, 1e-8),
        "cg_tol": (float, 1e-12),
        "cg_max": (int, 50000),
        "beta": (float, 0.5),
        "c1": (float, 1e-4),
    },
    "fixedpoint": {
        "tol": (float, 1e-10),
        "max_iter": (int, 400),
        "damping": (float, 0.7),
    },
    "limit": {
        "nu_list": (_parse_floats, (0.3, 0.4, 0.45, 0.49, 0.499)),
    },
    "verify": {
        "trials": (int, 1000),
        "bruteforce_levels": (int, 18),
    },
}

COMMANDS = ("solve", "airy", "limit-study", "verify", "q2in")


@dataclass
class RunConfig:
    command: str | None = None
    seed: int = 0
    out: str = "."
    lx: float = 1.0
    ly: float = 1.0
    nx: int = 64
    ny: int = 64
    bc: str = "periodic"
    material_kind: str = "isotropic"
    mu: float = 1.0
    lam: float = 0.0
    material_path: str | None = None
    force_preset: str = "sincos"
    force_amplitude: float = 1.0
    force_file: str | None = None
    r33: float = 1.0
    solver: dict = dc_field(default_factory=dict)
    fixedpoint: dict = dc_field(default_factory=dict)
    nu_list: tuple = (0.3, 0.4, 0.45, 0.49, 0.499)
    verify_trials: int = 1000
    bruteforce_levels: int = 18
    echo: list = dc_field(default_factory=list)

    def grid(self):
        if self.bc not in ("periodic", "free"):
            raise ConfigError(
                f"grid bc must be 'periodic' or 'free', got {self.bc!r}"
            )
        return Grid(self.lx, self.ly, self.nx, self.ny, periodic=self.bc == "periodic")


def parse_config(text) -> RunConfig:
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {body!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: assignment before any [section] header")
        key, _, val = body.partition("=")
        key = key.strip().lower()
        val = val.strip()
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in section [{section}]")
        if (section, key) in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in section [{section}]")
        conv, _default = SCHEMA[section][key]
        try:
            values[(section, key)] = conv(val)
        except (ValueError, TypeError) as exc:
            raise ConfigError(
                f"line {lineno}: bad value for [{section}] {key}: {exc}"
            ) from None

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        return SCHEMA[section][key][1]

    cfg = RunConfig(
        command=get("run", "command"),
        seed=get("run", "seed"),
        out=get("run", "out"),
        lx=get("domain", "lx"),
        ly=get("domain", "ly"),
        nx=get("grid", "nx"),
        ny=get("grid", "ny"),
        bc=get("grid", "bc"),
        material_kind=get("material", "kind"),
        mu=get("material", "mu"),
        lam=get("material", "lambda"),
        material_path=get("material", "path"),
        force_preset=get("force", "preset"),
        force_amplitude=get("force", "amplitude"),
        force_file=get("force", "file"),
        r33=get("force", "r33"),
        solver={k: get("solver", k) for k in SCHEMA["solver"]},
        fixedpoint={k: get("fixedpoint", k) for k in SCHEMA["fixedpoint"]},
        nu_list=tuple(get("limit", "nu_list")),
        verify_trials=get("verify", "trials"),
        bruteforce_levels=get("verify", "bruteforce_levels"),
    )
    if cfg.command is not None and cfg.command not in COMMANDS:
        raise ConfigError(
            f"unknown command {cfg.command!r}; expected one of {', '.join(COMMANDS)}"
        )
    if cfg.material_kind not in ("isotropic", "matrix-file"):
        raise ConfigError(
            f"material kind must be 'isotropic' or 'matrix-file', got {cfg.material_kind!r}"
        )
    if cfg.material_kind == "matrix-file" and not cfg.material_path:
        raise ConfigError("material kind 'matrix-file' requires [material] path")
    if not abs(cfg.r33) <= 1.0:
        raise ConfigError(f"|r33| must not exceed 1, got {cfg.r33}")
    cfg.echo = _echo_table(cfg)
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _echo_table(cfg: RunConfig):
    rows = [
        ("run.command", cfg.command),
        ("run.seed", cfg.seed),
        ("run.out", cfg.out),
        ("domain.lx", cfg.lx),
        ("domain.ly", cfg.ly),
        ("grid.nx", cfg.nx),
        ("grid.ny", cfg.ny),
        ("grid.bc", cfg.bc),
        ("material.kind", cfg.material_kind),
        ("material.mu", cfg.mu),
        ("material.lambda", cfg.lam),
        ("material.path", cfg.material_path),
        ("force.preset", cfg.force_preset),
        ("force.amplitude", cfg.force_amplitude),
        ("force.file", cfg.force_file),
        ("force.r33", cfg.r33),
    ]
    rows += [(f"solver.{k}", v) for k, v in sorted(cfg.solver.items())]
    rows += [(f"fixedpoint.{k}", v) for k, v in sorted(cfg.fixedpoint.items())]
    rows.append(("limit.nu_list", " ".join(repr(x) for x in cfg.nu_list)))
    rows.append(("verify.trials", cfg.verify_trials))
    rows.append(("verify.bruteforce_levels", cfg.bruteforce_levels))
    return rows


def preset_force(name, grid, amplitude=1.0):
    """Built-in zero-mean load presets on the given grid."""
    xg, yg = grid.meshgrid()
    if name == "sincos":
        f = np.sin(2.0 * np.pi * xg / grid.lx) * np.sin(2.0 * np.pi * yg / grid.ly)
    elif name == "bump-dipole":
        sig = min(grid.lx, grid.ly) / 8.0

        def bump(cx, cy):
            return np.exp(-(((xg - cx) ** 2 + (yg - cy) ** 2) / (2.0 * sig * sig)))

        f = bump(grid.lx / 3.0, grid.ly / 2.0) - bump(2.0 * grid.lx / 3.0, grid.ly / 2.0)
    else:
        raise ConfigError(f"unknown force preset {name!r}")
    ops = operators(grid)
    f = amplitude * f
    return f - float(np.sum(ops.w2d * f) / ops.wsum)
