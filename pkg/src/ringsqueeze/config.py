"""Run configuration: flat sectioned ``key = value`` files.

Configs use INI-style sections with ``#`` comments. All physical values are
SI; frequencies and rates are given in Hz (keys carry the ``_hz`` suffix)
and converted to angular units internally. Unknown sections or keys are
rejected so typos fail loudly, and every value passes the domain-type
validation on load.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .photon_stats import SchmidtSpectrum
from .ring import DETUNING_MODES, PumpDrive, RingParams
from .tes import PulseTemplate, default_pulse_shape

TWO_PI = 2.0 * np.pi

ALLOWED_KEYS: dict[str, set[str]] = {
    "run": {"seed", "threads", "out"},
    "ring": {"loaded_q", "resonance_frequency_hz", "escape_efficiency_signal",
             "escape_efficiency_idler", "downstream_efficiency",
             "group_velocity", "nonlinear_parameter", "round_trip_length",
             "dissipation_signal_hz", "dissipation_idler_hz"},
    "drive": {"gain", "pump_photon_number", "nonlinear_coupling_hz",
              "detuning_mode", "detuning_hz"},
    "spectrum": {"min_sideband_hz", "max_sideband_hz", "points", "spacing"},
    "schmidt": {"squeezing_parameters", "eta_signal", "eta_idler",
                "noise_mean_signal", "noise_mean_idler"},
    "counts": {"num_pulses", "subsets", "include_saturated", "pump_scales"},
    "template": {"num_samples", "per_photon_gain", "noise_sigma",
                 "nonlinearity_factor", "rise_fraction", "fall_fraction"},
    "traces": {"input", "input_format", "max_components", "bins",
               "sample_period_s"},
    "fit": {"mode", "data", "model_mode", "tolerance", "max_iterations",
            "initial_gain", "initial_eta", "initial_gamma_hz", "initial_k"},
}

COMMAND_SECTIONS: dict[str, dict[str, bool]] = {
    # section -> required?
    "spectrum": {"run": False, "ring": True, "drive": True, "spectrum": True},
    "counts": {"run": False, "schmidt": True, "counts": True},
    "traces": {"run": False, "traces": False, "template": False,
               "schmidt": False, "counts": False},
    "fit": {"run": False, "fit": True},
}


class RunConfig:
    """Parsed configuration file with typed accessors."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.is_file():
            raise ConfigError(f"config file not found: {self.path}")
        raw = self.path.read_bytes()
        self.config_hash = hashlib.sha256(raw).hexdigest()[:16]
        parser = configparser.ConfigParser(
            comment_prefixes=("#",), inline_comment_prefixes=("#",),
            interpolation=None)
        try:
            parser.read_string(raw.decode("utf-8"), source=str(self.path))
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"{self.path}: {exc}") from exc
        self.sections: dict[str, dict[str, str]] = {
            name: dict(parser.items(name)) for name in parser.sections()}

    def validate(self, command: str) -> None:
        allowed = COMMAND_SECTIONS[command]
        unknown = sorted(set(self.sections) - set(allowed))
        if unknown:
            raise ConfigError(
                f"{self.path}: unknown sections for '{command}': {unknown}")
        missing = sorted(name for name, required in allowed.items()
                         if required and name not in self.sections)
        if missing:
            raise ConfigError(
                f"{self.path}: missing required sections: {missing}")
        for name, keys in self.sections.items():
            bad = sorted(set(keys) - ALLOWED_KEYS[name])
            if bad:
                raise ConfigError(
                    f"{self.path}: unknown keys in [{name}]: {bad}")

    def section(self, name: str) -> dict[str, str]:
        return self.sections.get(name, {})

    def has_section(self, name: str) -> bool:
        return name in self.sections

    # -- typed value accessors -------------------------------------------
    def _get(self, sect: str, key: str, default=None, required: bool = False):
        section = self.section(sect)
        if key not in section:
            if required:
                raise ConfigError(f"{self.path}: [{sect}] requires '{key}'")
            return default
        return section[key]

    def get_float(self, sect, key, default=None, required=False):
        value = self._get(sect, key, default, required)
        if value is None or isinstance(value, float):
            return value
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(
                f"{self.path}: [{sect}] {key} must be a number, "
                f"got {value!r}") from exc

    def get_int(self, sect, key, default=None, required=False):
        value = self._get(sect, key, default, required)
        if value is None or isinstance(value, int):
            return value
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigError(
                f"{self.path}: [{sect}] {key} must be an integer, "
                f"got {value!r}") from exc

    def get_bool(self, sect, key, default=False):
        value = self._get(sect, key, None)
        if value is None:
            return default
        lowered = str(value).strip().lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigError(
            f"{self.path}: [{sect}] {key} must be a boolean, got {value!r}")

    def get_floats(self, sect, key, required=False):
        value = self._get(sect, key, None, required)
        if value is None:
            return None
        try:
            return [float(v) for v in str(value).split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(
                f"{self.path}: [{sect}] {key} must be a comma-separated "
                f"list of numbers, got {value!r}") from exc

    def get_str(self, sect, key, default=None, required=False):
        return self._get(sect, key, default, required)

    # -- domain object builders ------------------------------------------
    def ring_params(self) -> RingParams:
        hz = lambda v: None if v is None else TWO_PI * v
        try:
            return RingParams(
                loaded_q=self.get_float("ring", "loaded_q", required=True),
                omega=TWO_PI * self.get_float("ring", "resonance_frequency_hz",
                                              required=True),
                eta_escape_signal=self.get_float(
                    "ring", "escape_efficiency_signal", 1.0),
                eta_escape_idler=self.get_float(
                    "ring", "escape_efficiency_idler", 1.0),
                eta_downstream=self.get_float(
                    "ring", "downstream_efficiency", 1.0),
                group_velocity=self.get_float("ring", "group_velocity", 1.0),
                nonlinear_parameter=self.get_float(
                    "ring", "nonlinear_parameter", 0.0),
                round_trip_length=self.get_float(
                    "ring", "round_trip_length", 1.0),
                dissipation_signal=hz(self.get_float(
                    "ring", "dissipation_signal_hz")),
                dissipation_idler=hz(self.get_float(
                    "ring", "dissipation_idler_hz")),
            )
        except ValueError as exc:
            raise ConfigError(f"{self.path}: [ring] {exc}") from exc

    def pump_drive(self, params: RingParams) -> PumpDrive:
        mode = self.get_str("drive", "detuning_mode", "locked_shifted")
        if mode not in DETUNING_MODES:
            raise ConfigError(
                f"{self.path}: [drive] detuning_mode must be one of "
                f"{DETUNING_MODES}, got {mode!r}")
        detuning = TWO_PI * self.get_float("drive", "detuning_hz", 0.0)
        gain_value = self.get_float("drive", "gain")
        photons = self.get_float("drive", "pump_photon_number")
        coupling_hz = self.get_float("drive", "nonlinear_coupling_hz")
        try:
            if gain_value is not None:
                if photons is not None or coupling_hz is not None:
                    raise ConfigError(
                        f"{self.path}: [drive] give either 'gain' or the "
                        "pump_photon_number/nonlinear_coupling_hz pair, "
                        "not both")
                return PumpDrive.from_gain(params, gain_value,
                                           detuning_mode=mode,
                                           detuning=detuning)
            if photons is None or coupling_hz is None:
                raise ConfigError(
                    f"{self.path}: [drive] requires 'gain' or both "
                    "'pump_photon_number' and 'nonlinear_coupling_hz'")
            return PumpDrive(pump_photon_number=photons,
                             nonlinear_coupling=TWO_PI * coupling_hz,
                             detuning_mode=mode, detuning=detuning)
        except ValueError as exc:
            raise ConfigError(f"{self.path}: [drive] {exc}") from exc

    def sideband_grid(self) -> np.ndarray:
        lo = self.get_float("spectrum", "min_sideband_hz", required=True)
        hi = self.get_float("spectrum", "max_sideband_hz", required=True)
        points = self.get_int("spectrum", "points", 50)
        spacing = self.get_str("spectrum", "spacing", "log")
        if points < 1:
            raise ConfigError(f"{self.path}: [spectrum] points must be >= 1")
        if lo <= 0 or hi < lo:
            raise ConfigError(
                f"{self.path}: [spectrum] needs 0 < min_sideband_hz <= "
                "max_sideband_hz")
        if spacing == "log":
            grid_hz = np.geomspace(lo, hi, points)
        elif spacing == "linear":
            grid_hz = np.linspace(lo, hi, points)
        else:
            raise ConfigError(
                f"{self.path}: [spectrum] spacing must be 'log' or 'linear', "
                f"got {spacing!r}")
        return TWO_PI * grid_hz

    def schmidt_spectrum(self) -> SchmidtSpectrum:
        values = self.get_floats("schmidt", "squeezing_parameters",
                                 required=True)
        try:
            return SchmidtSpectrum(
                squeezing_parameters=tuple(values),
                eta_signal=self.get_float("schmidt", "eta_signal", 1.0),
                eta_idler=self.get_float("schmidt", "eta_idler", 1.0),
                noise_mean_signal=self.get_float(
                    "schmidt", "noise_mean_signal", 0.0),
                noise_mean_idler=self.get_float(
                    "schmidt", "noise_mean_idler", 0.0),
            )
        except ValueError as exc:
            raise ConfigError(f"{self.path}: [schmidt] {exc}") from exc

    def pulse_template(self) -> PulseTemplate:
        try:
            shape = default_pulse_shape(
                num_samples=self.get_int("template", "num_samples", 32),
                rise_fraction=self.get_float("template", "rise_fraction", 0.08),
                fall_fraction=self.get_float("template", "fall_fraction", 0.35),
            )
            return PulseTemplate(
                shape=shape,
                per_photon_gain=self.get_float(
                    "template", "per_photon_gain", required=True),
                noise_sigma=self.get_float(
                    "template", "noise_sigma", required=True),
                nonlinearity_factor=self.get_float(
                    "template", "nonlinearity_factor", 1.0),
            )
        except ValueError as exc:
            raise ConfigError(f"{self.path}: [template] {exc}") from exc

    def seed(self, override: int | None = None) -> int:
        if override is not None:
            return override
        return self.get_int("run", "seed", 0)

    def threads(self, override: int | None = None) -> int:
        value = override if override is not None \
            else self.get_int("run", "threads", 0)
        if value < 0:
            raise ConfigError(f"{self.path}: threads must be >= 0")
        if value == 0:
            import os
            return min(4, os.cpu_count() or 1)
        return value
