"""Experiment configuration: a YAML (or JSON) document with unit-suffixed values.

Every quantity may be given either as a bare number in the field's native unit
or as a string like ``"16.5 us"`` / ``"3700 G"``; units are validated against
the field's dimension and normalized at parse time.
"""

import math
import re
from dataclasses import asdict, dataclass, field

import yaml

from .errors import ConfigError, DomainError
from .noise import ElectronCoherenceModel, NuclearT1Model
from .params import PhysicalConstants, SensorEnsembleParams
from .sequences import ACSignal

SCENARIOS = (
    "odmr_swap",
    "nuclear_t1_field_sweep",
    "nuclear_t1_laser_sweep",
    "qle_snr_vs_n",
    "correlation_threetone",
    "sensitivity_vs_duration",
    "eta_map",
    "density_projection",
)

FORMATS = ("csv", "json")

# unit tables per dimension; lookups are case-insensitive
_UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9},
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "tesla": {"t": 1.0, "mt": 1e-3, "ut": 1e-6, "µt": 1e-6, "nt": 1e-9,
              "g": 1e-4, "gauss": 1e-4},
    "gauss": {"g": 1.0, "gauss": 1.0, "t": 1e4, "mt": 10.0, "ut": 1e-2},
    "milliwatt": {"mw": 1.0, "w": 1e3, "uw": 1e-3},
    "volt": {"v": 1.0, "mv": 1e-3},
}

_QUANTITY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zA-Zµ]+)\s*$")


def parse_quantity(value, dimension, field_name):
    """Normalize a number or unit-suffixed string to the dimension's base unit."""
    if isinstance(value, bool):
        raise ConfigError(f"{field_name}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            # covers scientific notation YAML 1.1 leaves as a string (1.0e6)
            return float(value)
        except ValueError:
            pass
        match = _QUANTITY_RE.match(value)
        if not match:
            raise ConfigError(f"{field_name}: cannot parse quantity {value!r}")
        magnitude, unit = float(match.group(1)), match.group(2)
        if dimension is None:
            raise ConfigError(f"{field_name} is dimensionless; drop the unit {unit!r}")
        factors = _UNITS[dimension]
        factor = factors.get(unit.lower())
        if factor is None:
            expected = ", ".join(sorted(factors))
            raise ConfigError(f"{field_name}: unit {unit!r} is not a {dimension} "
                              f"unit (expected one of: {expected})")
        return magnitude * factor
    raise ConfigError(f"{field_name}: expected a number or quantity string, "
                      f"got {type(value).__name__}")


def _parse_int(value, field_name):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(f"{field_name}: expected an integer, got {value!r}")
    return value


def _parse_bool(value, field_name):
    if not isinstance(value, bool):
        raise ConfigError(f"{field_name}: expected true/false, got {value!r}")
    return value


_SENSOR_FIELDS = {
    "bias_field": "gauss",
    "laser_power": "milliwatt",
    "contrast_c0": None,
    "photons_per_readout": None,
    "swap_fidelity": None,
    "repolarization_fraction": None,
    "t_op": "time",
    "t_swap": "time",
    "t_qlr": "time",
    "t2_star": "time",
    "t2_hahn": "time",
    "t2_xy8_sat": "time",
    "nv_density_ppm": None,
    "n_density_ppm": None,
    "hyperfine_splitting": "frequency",
}

_CONSTANTS_FIELDS = {"g": None, "mu_b": None, "hbar": None}

_NUCLEAR_T1_FIELDS = {
    "t1_ref": "time",
    "field_ref": "gauss",
    "field_exponent": None,
    "laser_a": None,
    "laser_b": None,
    "laser_c": None,
    "stretch_beta": None,
}

_ELECTRON_T2_FIELDS = {
    "scaling_exponent": None,
    "droid_unbounded": "bool",
    "decay_stretch": None,
}

# per-scenario options: name -> (kind, default); kind is a dimension name,
# "int", "float", "bool", or "list:<kind>"
OPTION_SCHEMAS = {
    "odmr_swap": {
        "freq_span": ("frequency", 8.0e6),
        "n_freq": ("int", 401),
        "averages": ("int", 200),
    },
    "nuclear_t1_field_sweep": {
        "fields": ("list:gauss", [500.0, 666.0, 886.0, 1179.0, 1569.0, 2088.0, 2779.0, 3700.0]),
        "n_durations": ("int", 20),
        "duration_span_t1": ("float", 3.0),
        "averages": ("int", 300),
    },
    "nuclear_t1_laser_sweep": {
        "powers": ("list:milliwatt", [20.0, 27.0, 36.5, 49.3, 66.6, 90.0, 121.6, 164.3, 222.0, 300.0]),
        "n_durations": ("int", 20),
        "duration_span_t1": ("float", 3.0),
        "averages": ("int", 300),
    },
    "qle_snr_vs_n": {
        "n_readouts": ("int", 2000),
        "amplitude_scale": ("float", 1.0),
    },
    "correlation_threetone": {
        "repetitions": ("int", 6),
        "tau": ("time", 0.5e-6),
        "t_corr_max": ("time", 1.5e-3),
        "n_points": ("int", 3072),
        "n_readouts": ("int", 500),
    },
    "sensitivity_vs_duration": {
        "tau": ("time", 0.5e-6),
        "max_repetitions": ("int", 12),
        "families": ("list:str", ["XY8", "DROID60"]),
    },
    "eta_map": {
        "n_min": ("int", 1),
        "n_max": ("int", 2000),
        "n_points": ("int", 50),
        "t_sense_min": ("time", 10e-6),
        "t_sense_max": ("time", 1.0e-3),
        "t_points": ("int", 50),
        "base_ratio": ("float", 1.0),
    },
    "density_projection": {
        "densities_ppm": ("list:float", [14.0, 7.0, 3.5, 2.0, 1.0, 0.8, 0.5]),
        "xy8_optimal_ref": ("time", 24e-6),
    },
}


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    out_dir: str | None = None
    file_format: str = "csv"
    sensor: SensorEnsembleParams = field(default_factory=SensorEnsembleParams)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    nuclear_t1: NuclearT1Model = field(default_factory=NuclearT1Model.anchored)
    electron_t2: ElectronCoherenceModel = field(default_factory=ElectronCoherenceModel)
    signal: ACSignal | None = None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "format": self.file_format,
            "sensor": asdict(self.sensor),
            "constants": asdict(self.constants),
            "nuclear_t1": asdict(self.nuclear_t1),
            "electron_t2": asdict(self.electron_t2),
            "signal": None if self.signal is None else
                      {"tones": [list(t) for t in self.signal.tones]},
            "options": dict(self.options),
        }


def _parse_section(raw, schema, section):
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{section}' must be a mapping")
    parsed = {}
    for key, value in raw.items():
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ConfigError(f"unknown key '{section}.{key}' (known keys: {known})")
        dimension = schema[key]
        if dimension == "bool":
            parsed[key] = _parse_bool(value, f"{section}.{key}")
        else:
            parsed[key] = parse_quantity(value, dimension, f"{section}.{key}")
    return parsed


def _parse_option(value, kind, field_name):
    if kind == "int":
        return _parse_int(value, field_name)
    if kind == "float":
        return float(parse_quantity(value, None, field_name))
    if kind == "bool":
        return _parse_bool(value, field_name)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{field_name}: expected a string, got {value!r}")
        return value
    if kind.startswith("list:"):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{field_name}: expected a list, got {value!r}")
        inner = kind.split(":", 1)[1]
        return [_parse_option(v, inner, f"{field_name}[{i}]") for i, v in enumerate(value)]
    return parse_quantity(value, kind, field_name)


def _parse_options(raw, scenario):
    schema = OPTION_SCHEMAS[scenario]
    options = {name: (list(default) if isinstance(default, list) else default)
               for name, (_, default) in schema.items()}
    if raw is None:
        return options
    if not isinstance(raw, dict):
        raise ConfigError("section 'options' must be a mapping")
    for key, value in raw.items():
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ConfigError(f"unknown option '{key}' for scenario '{scenario}' "
                              f"(known options: {known})")
        options[key] = _parse_option(value, schema[key][0], f"options.{key}")
    return options


def _parse_signal(raw):
    if raw is None:
        return None
    if not isinstance(raw, dict) or set(raw) != {"tones"}:
        raise ConfigError("section 'signal' must be a mapping with a 'tones' list")
    tones = []
    for i, tone in enumerate(raw["tones"]):
        if not isinstance(tone, dict):
            raise ConfigError(f"signal.tones[{i}] must be a mapping")
        unknown = set(tone) - {"amplitude", "frequency", "phase"}
        if unknown:
            raise ConfigError(f"signal.tones[{i}]: unknown keys {sorted(unknown)}")
        if "amplitude" not in tone or "frequency" not in tone:
            raise ConfigError(f"signal.tones[{i}] needs 'amplitude' and 'frequency'")
        tones.append((
            parse_quantity(tone["amplitude"], "tesla", f"signal.tones[{i}].amplitude"),
            parse_quantity(tone["frequency"], "frequency", f"signal.tones[{i}].frequency"),
            parse_quantity(tone.get("phase", 0.0), None, f"signal.tones[{i}].phase"),
        ))
    try:
        return ACSignal(tuple(tones))
    except DomainError as exc:
        raise ConfigError(f"signal: {exc}") from exc


_TOP_KEYS = {"scenario", "seed", "out_dir", "format", "sensor", "constants",
             "nuclear_t1", "electron_t2", "signal", "options"}


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    scenario = raw.get("scenario")
    if scenario is None:
        raise ConfigError("config needs a 'scenario' key")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; valid scenarios: "
                          + ", ".join(SCENARIOS))
    seed = _parse_int(raw.get("seed", 0), "seed")
    file_format = raw.get("format", "csv")
    if file_format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {file_format!r}")
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a string path")

    sensor_kw = _parse_section(raw.get("sensor"), _SENSOR_FIELDS, "sensor")
    try:
        sensor = SensorEnsembleParams(**sensor_kw)
    except DomainError as exc:
        raise ConfigError(f"sensor: {exc}") from exc

    constants_kw = _parse_section(raw.get("constants"), _CONSTANTS_FIELDS, "constants")
    try:
        constants = PhysicalConstants(**constants_kw)
    except DomainError as exc:
        raise ConfigError(f"constants: {exc}") from exc

    nuclear_kw = _parse_section(raw.get("nuclear_t1"), _NUCLEAR_T1_FIELDS, "nuclear_t1")
    anchor = {k: nuclear_kw.pop(k) for k in ("t1_ref", "field_ref", "field_exponent")
              if k in nuclear_kw}
    try:
        nuclear = NuclearT1Model.anchored(**anchor, **nuclear_kw)
    except DomainError as exc:
        raise ConfigError(f"nuclear_t1: {exc}") from exc

    electron_kw = _parse_section(raw.get("electron_t2"), _ELECTRON_T2_FIELDS, "electron_t2")
    try:
        electron = ElectronCoherenceModel(
            t2_hahn=sensor.t2_hahn, t2_xy8_sat=sensor.t2_xy8_sat,
            n_density_ppm=sensor.n_density_ppm, **electron_kw)
    except DomainError as exc:
        raise ConfigError(f"electron_t2: {exc}") from exc

    return ExperimentConfig(
        scenario=scenario,
        seed=seed,
        out_dir=out_dir,
        file_format=file_format,
        sensor=sensor,
        constants=constants,
        nuclear_t1=nuclear,
        electron_t2=electron,
        signal=_parse_signal(raw.get("signal")),
        options=_parse_options(raw.get("options"), scenario),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse a YAML/JSON config document into a validated ExperimentConfig."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return config_from_dict(raw)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())


def default_config(scenario: str, seed: int = 0, **overrides) -> ExperimentConfig:
    """Config with all defaults for a scenario; ``overrides`` patch options."""
    config = config_from_dict({"scenario": scenario, "seed": seed})
    for key, value in overrides.items():
        if key not in config.options:
            raise ConfigError(f"unknown option '{key}' for scenario '{scenario}'")
        config.options[key] = value
    return config
