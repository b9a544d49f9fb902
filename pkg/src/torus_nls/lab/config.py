"""Config ingestion: flat key-value text with one section per concern.

Files are INI-style; values are Python literals (lists, dicts, numbers,
quoted strings) with bare words accepted as strings:

    [run]
    scenario = evolve
    seed = 7

    [geometry]
    lambda = [1.0, 1.0, 1.0, 1.0]
    grid = [16, 16, 16, 16]

Unknown sections or keys are rejected by name; defaults are filled and the
fully resolved config is echoed into every report.
"""

from __future__ import annotations

import ast
import configparser
from dataclasses import dataclass, field as dc_field

from ..geometry import GeometryError, TorusGeometry

SCENARIOS = (
    "evolve",
    "trapping",
    "strichartz",
    "bilinear",
    "extinction",
    "profile_suite",
    "stability",
    "blowup_probe",
    "ground_state",
    "norms",
)


class ConfigError(ValueError):
    """Bad config file: parse failure or schema violation (names the key)."""


_REQUIRED = object()

# section -> key -> (default, validator). Validators raise ConfigError.
_SCHEMA: dict[str, dict] = {
    "run": {
        "scenario": (_REQUIRED, None),
        "seed": (0, int),
        "out": ("out", str),
        "figures": (True, bool),
        "threads": (1, int),
    },
    "geometry": {
        "lambda": ((1.0, 1.0, 1.0, 1.0), None),
        "grid": ((16, 16, 16, 16), None),
    },
    "constants": {
        "c_star": ("auto", None),  # 'auto' = f=1 lower bound times safety
        "safety": (1.05, float),
        "quad_tol": (1e-12, float),
    },
    "evolution": {
        "mu": (1, int),
        "dt": (1e-3, float),
        "t_end": (0.5, float),
        "snapshot_stride": (50, int),
        "dealias": ("pad3_2", str),
        "blowup_threshold": (None, None),
    },
    "initial_data": {
        "kind": ("random_h1", str),
        "value": (1.0, None),            # constant
        "n": ((1, 0, 0, 0), None),       # single_mode
        "amplitude": (1.0, None),
        "profile": ("w_bubble", str),    # torus_bubble
        "scale_n": (16.0, float),
        "center": ((0.0, 0.0, 0.0, 0.0), None),
        "normalize": ("none", str),      # none | h1 | hdot1 | h1_star | l2
        "target": (None, None),          # absolute norm target
        "fraction_of_threshold": (None, None),
        "bubbles": (None, None),         # sum_of_bubbles: list of dicts
        "weight_power": (3.0, float),    # random_h1 spectral decay <n>^-p
    },
    "evolve": {
        "drift_tolerance": (None, None),
        "save_trajectory": (True, bool),
    },
    "strichartz": {
        "p_values": ((4.0, 6.0), None),
        "shells": ((2, 4, 8, 16), None),
        "seeds": ((1, 2), None),
        "n_time_samples": (96, int),
        "slope_bands": (None, None),       # {p: [lo, hi]}
        "refined_check": (True, bool),
        "refined_n_times": (17, int),
        "consistency_factor": (3.0, float),
    },
    "bilinear": {
        "pairs": (((8, 2), (64, 4), (512, 8)), None),
        "modes_per_shell": (48, int),
        "seeds": ((1, 2, 3), None),
        "interval": (1.0, float),
        "residual_tolerance": (0.2, float),
    },
    "extinction": {
        "profile": ("w_bubble", str),
        "n_values": ((64, 128), None),
        "t_values": ((4.0, 16.0, 64.0), None),
        "n_time_samples": (12, int),
        "main_n": (64.0, float),
        "stability_pair": ((64.0, 128.0), None),
        "stability_t": (16.0, float),
        "stability_factor": (2.0, float),
    },
    "trapping": {
        "variant": ("both", str),  # star | star_star | both
        "delta0": (0.1, float),
        "fraction": (0.7, float),
        "check_overscaled_fraction": (0.9, float),
        "t_end": (0.2, float),
    },
    "blowup_probe": {
        "factor": (1.2, float),
        "t_end": (0.5, float),
    },
    "stability": {
        "epsilon": (1e-3, float),
        "t_end": (0.1, float),
        "coarse_factor": (8, int),
        "perturbation_seed": (99, int),
        "distance_factor": (10.0, float),
    },
    "profile_suite": {
        "profile": ("w_bubble", str),
        "prefix_len": (5, int),
        "frame1": ({"N0": 2.0, "ratio": 2.0, "time_rule": "zero"}, None),
        "frame2": ({"N0": 2.0, "ratio": 2.0, "time_rule": "k_over_n2", "t0": 1.0}, None),
        "expect": ("orthogonal", str),
        "divergence_threshold": (10.0, float),
        "nonlinear_t_end": (0.01, float),
        "nonlinear_k": (5, int),
    },
    "ground_state": {
        "tolerance": (1e-12, float),
        "relation_tolerance": (1e-8, float),
        "residual_r_max": (50.0, float),
        "residual_points": (2001, int),
        "residual_tolerance": (1e-10, float),
    },
    "norms": {
        "trajectory_dir": (None, None),
        "window": (None, None),          # [t0, t1]; default full sampled range
    },
    "profile_make": {
        "profile": ("w_bubble", str),
        "scale_n": (16.0, float),
        "center": ((0.0, 0.0, 0.0, 0.0), None),
        "amplitude": (1.0, float),
    },
    "kernel": {
        "m_values": ((4, 8, 16), None),
        "s_rule": ("equal_m", str),  # equal_m | explicit
        "s_values": (None, None),
        "n_times": (64, int),
        "refine": (True, bool),
        "agreement_factor": (4.0, float),
    },
    "extract": {
        "input": (None, None),           # field snapshot path; None = build from initial_data
        "max_profiles": (4, int),
        "z_tolerance": (0.05, float),
        "search_times": ((0.0, 0.1, 0.25, 0.5), None),
    },
}


@dataclass
class ExperimentConfig:
    """Validated, default-filled experiment description."""

    scenario: str
    sections: dict = dc_field(default_factory=dict)
    source_path: str | None = None

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def seed(self) -> int:
        return self.sections["run"]["seed"]

    @property
    def out_dir(self) -> str:
        return self.sections["run"]["out"]

    def geometry(self) -> TorusGeometry:
        g = self.sections["geometry"]
        try:
            return TorusGeometry(lam=tuple(g["lambda"]), grid=tuple(g["grid"]))
        except GeometryError as exc:
            raise ConfigError(f"invalid [geometry]: {exc}") from exc

    def echo(self) -> dict:
        """Full effective config for report embedding."""
        return {"scenario": self.scenario, **{s: dict(v) for s, v in self.sections.items()}}


def _literal(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text  # bare word = string


def _coerce(section: str, key: str, value, validator):
    if validator is None:
        return value
    try:
        if validator is bool:
            if isinstance(value, bool):
                return value
            if isinstance(value, str):
                low = value.strip().lower()
                if low in ("true", "yes", "on", "1"):
                    return True
                if low in ("false", "no", "off", "0"):
                    return False
            raise ValueError(value)
        return validator(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(
            f"bad value for [{section}] {key}: {value!r} ({exc})"
        ) from exc


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a config file; unknown keys are rejected by name.

    overrides maps 'section.key' to replacement values (CLI flags).
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    sections: dict[str, dict] = {}
    for name in parser.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown config section [{name}]")
        schema = _SCHEMA[name]
        out = {}
        for key, raw in parser.items(name):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{name}]")
            default, validator = schema[key]
            out[key] = _coerce(name, key, _literal(raw), validator)
        sections[name] = out

    # fill defaults for every known section
    for name, schema in _SCHEMA.items():
        out = sections.setdefault(name, {})
        for key, (default, validator) in schema.items():
            if key not in out:
                if default is _REQUIRED:
                    raise ConfigError(f"missing required key {key!r} in section [{name}]")
                out[key] = default

    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override {dotted!r}")
        sections[section][key] = value

    scenario = sections["run"]["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}"
        )

    cfg = ExperimentConfig(scenario=scenario, sections=sections, source_path=str(path))
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    cfg.geometry()  # raises ConfigError on bad lambda/grid
    ev = cfg.sections["evolution"]
    if ev["mu"] not in (-1, 0, 1):
        raise ConfigError(f"bad value for [evolution] mu: {ev['mu']}")
    if not ev["dt"] > 0:
        raise ConfigError(f"bad value for [evolution] dt: {ev['dt']}")
    if ev["dealias"] not in ("pad3_2", "none"):
        raise ConfigError(f"bad value for [evolution] dealias: {ev['dealias']!r}")
    data = cfg.sections["initial_data"]
    kinds = ("constant", "single_mode", "random_h1", "torus_bubble", "sum_of_bubbles", "shell_focus")
    if data["kind"] not in kinds:
        raise ConfigError(f"unknown initial data kind {data['kind']!r}")
    if data["kind"] in ("random_h1", "shell_focus") and "seed" not in cfg.sections["run"]:
        raise ConfigError("random initial data requires a seed")  # pragma: no cover
    tr = cfg.sections["trapping"]
    if tr["variant"] not in ("star", "star_star", "both"):
        raise ConfigError(f"bad value for [trapping] variant: {tr['variant']!r}")
