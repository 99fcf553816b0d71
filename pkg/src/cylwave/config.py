"""Strict flat-text experiment configuration.

Grammar: ``[section]`` headers, ``key = value`` entries, ``#`` comments.
Unknown sections/keys, duplicate keys (both lines reported), and malformed
lines are position-annotated errors.  Validation needs the instantiated
model/grid (the time-step cap depends on both).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .evolve import dt_max
from .grids import CylinderGrid, GridConfig, GridError, build_grid
from .reactions import ReactionError, ReactionModel, make_model

SCENARIOS = ("wave", "converge", "gap", "secondary_speed", "comparison", "hypotheses")
INITIAL_FAMILIES = ("shifted_tanh", "plateau_noise", "sandwich")

# section -> key -> (type, default); None default means required
_SCHEMA = {
    "grid": {
        "n_y": (int, 1),
        "n_z": (int, None),
        "y_min": (float, 0.0),
        "y_max": (float, 1.0),
        "z_min": (float, None),
        "z_max": (float, None),
        "bc_left": (str, "neumann"),
        "bc_right": (str, "neumann"),
        "bc_axial_left": (str, "neumann"),
        "bc_axial_right": (str, "dirichlet"),
    },
    "model": {
        "name": (str, None),
        "a": (float, None),
        "a0": (float, None),
        "a1": (float, None),
        "a2": (float, None),
        "a3": (float, None),
        "scale": (float, None),
        "mu": (float, None),
    },
    "run": {
        "scenario": (str, None),
        "dt": (float, None),
        "horizon": (float, 60.0),
        "seed": (int, 0),
        "c_seed": (float, 0.2),
        "c_trial": (float, 0.2),
        "plateau_seed": (float, 0.9),
        "alpha": (float, 0.1),
        "delta": (float, 0.05),
        "sample_every": (int, 1),
    },
    "initial": {
        "family": (str, "shifted_tanh"),
        "amplitude": (float, 1.0),
        "steepness": (float, 1.0),
        "offset": (float, 0.0),
        "noise": (float, 0.0),
        "separation": (float, 5.0),
    },
}

_MODEL_PARAM_KEYS = ("a", "a0", "a1", "a2", "a3", "scale", "mu")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    grid_config: GridConfig
    model_name: str
    model_params: dict
    scenario: str
    dt: float
    horizon: float
    seed: int
    c_seed: float
    c_trial: float
    plateau_seed: float
    alpha: float
    delta: float
    sample_every: int
    initial_family: str
    initial_params: dict
    raw: dict = dc_field(default_factory=dict)

    def make_model(self) -> ReactionModel:
        try:
            return make_model(self.model_name, self.model_params)
        except ReactionError as exc:
            raise ConfigError(str(exc))

    def make_grid(self) -> CylinderGrid:
        try:
            return build_grid(self.grid_config)
        except GridError as exc:
            raise ConfigError(str(exc))


def _parse_sections(text: str) -> dict:
    """Raw parse into {section: {key: (value, line)}} with strict errors."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SCHEMA:
                raise ConfigError("line %d: unknown section [%s] (known: %s)"
                                  % (lineno, name, ", ".join(_SCHEMA)))
            current = sections.setdefault(name, {})
            current_name = name
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected 'key = value', got %r" % (lineno, raw.strip()))
        if current is None:
            raise ConfigError("line %d: entry before any [section] header" % lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA[current_name]:
            raise ConfigError("line %d: unknown key %r in section [%s]"
                              % (lineno, key, current_name))
        if key in current:
            raise ConfigError("duplicate key %r in section [%s]: lines %d and %d"
                              % (key, current_name, current[key][1], lineno))
        current[key] = (value, lineno)
    return sections


def _typed(section: str, key: str, entry, want):
    value, lineno = entry
    try:
        if want is int:
            return int(value)
        if want is float:
            return float(value)
        return value
    except ValueError:
        raise ConfigError("line %d: key %r expects %s, got %r"
                          % (lineno, key, want.__name__, value))


def parse_config(text: str) -> ExperimentConfig:
    """Parse and cross-validate an experiment configuration."""
    sections = _parse_sections(text)
    values: dict[str, dict] = {}
    for sec, schema in _SCHEMA.items():
        got = sections.get(sec, {})
        out = {}
        for key, (want, default) in schema.items():
            if key in got:
                out[key] = _typed(sec, key, got[key], want)
            elif default is not None or (sec == "model" and key in _MODEL_PARAM_KEYS):
                if default is not None:
                    out[key] = default
            else:
                raise ConfigError("missing required key %r in section [%s]" % (key, sec))
        values[sec] = out

    g = values["grid"]
    grid_config = GridConfig(
        n_y=g["n_y"], n_z=g["n_z"], y_min=g["y_min"], y_max=g["y_max"],
        z_min=g["z_min"], z_max=g["z_max"], bc_left=g["bc_left"],
        bc_right=g["bc_right"], bc_axial_left=g["bc_axial_left"],
        bc_axial_right=g["bc_axial_right"])

    r = values["run"]
    if r["scenario"] not in SCENARIOS:
        raise ConfigError("unknown scenario %r (known: %s)"
                          % (r["scenario"], ", ".join(SCENARIOS)))
    ini = values["initial"]
    if ini["family"] not in INITIAL_FAMILIES:
        raise ConfigError("unknown initial family %r (known: %s)"
                          % (ini["family"], ", ".join(INITIAL_FAMILIES)))

    model_params = {k: v for k, v in values["model"].items() if k in _MODEL_PARAM_KEYS}
    cfg = ExperimentConfig(
        grid_config=grid_config,
        model_name=values["model"]["name"],
        model_params=model_params,
        scenario=r["scenario"],
        dt=r["dt"],
        horizon=r["horizon"],
        seed=r["seed"],
        c_seed=r["c_seed"],
        c_trial=r["c_trial"],
        plateau_seed=r["plateau_seed"],
        alpha=r["alpha"],
        delta=r["delta"],
        sample_every=r["sample_every"],
        initial_family=ini["family"],
        initial_params={k: ini[k] for k in ("amplitude", "steepness", "offset",
                                            "noise", "separation")},
        raw={s: {k: v for k, v in d.items()} for s, d in values.items()},
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    grid = cfg.make_grid()
    model = cfg.make_model()
    if cfg.horizon <= 0:
        raise ConfigError("horizon must be positive, got %g" % cfg.horizon)
    cap = dt_max(model, grid)
    if not 0 < cfg.dt <= cap * (1 + 1e-12):
        raise ConfigError("dt = %g violates the stability bound dt_max = %g "
                          "(0.5 / sup|f_u|)" % (cfg.dt, cap))
    if cfg.sample_every < 1:
        raise ConfigError("sample_every must be >= 1")


def parse_config_file(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def config_defaults_text() -> str:
    """Documented defaults for --help."""
    lines = []
    for sec, schema in _SCHEMA.items():
        lines.append("[%s]" % sec)
        for key, (want, default) in schema.items():
            if default is None:
                req = "(required)" if not (sec == "model" and key in _MODEL_PARAM_KEYS) \
                    else "(model-dependent)"
                lines.append("  %s: %s %s" % (key, want.__name__, req))
            else:
                lines.append("  %s: %s = %r" % (key, want.__name__, default))
    return "\n".join(lines)
