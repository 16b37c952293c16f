"""Experiment configuration."""

import copy
import logging
import os
from pathlib import Path
from typing import Any

import yaml

from analog_matching.core import spectrum
from analog_matching.core.channel import isi_to_colored
from analog_matching.core.factorization import FirFilter
from analog_matching.core.lattice import Lattice, LatticeKind
from analog_matching.core.waterfill import SystemSpec
from analog_matching.exceptions import ConfigError, DomainError
from analog_matching.services.codec import FailureMode, ModInput
from analog_matching.services.design import (
    DEFAULT_MARGIN,
    DEFAULT_PREDICTOR_TAPS,
    DEFAULT_PREFILTER_TAPS,
    DesignMode,
)
from analog_matching.services.simulator import DEFAULT_BLOCKS, DEFAULT_COLUMNS, SimulationConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "config/config.yaml"
DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
THREADS_ENV = "AM_THREADS"

MODES = ("matching", "zero_forcing", "bw_expansion", "bw_compression", "robustness")
SPECTRUM_KINDS = ("flat", "two_level", "ar1", "ma", "csv", "isi")

_NUMBER = (int, float)

_SPECTRUM_SCHEMA = {
    "kind": str,
    "level": _NUMBER,
    "high": _NUMBER,
    "low": _NUMBER,
    "split": _NUMBER,
    "a": _NUMBER,
    "innovation_var": _NUMBER,
    "taps": list,
    "path": str,
    "band_limit": _NUMBER,
}

SCHEMA = {
    "system": {
        "grid_size": int,
        "rho": _NUMBER,
        "source": _SPECTRUM_SCHEMA,
        "noise": _SPECTRUM_SCHEMA,
        "power": _NUMBER,
        "snr_db": _NUMBER,
    },
    "mode": str,
    "lattice": {"kind": str, "dimension": int},
    "stream": {
        "K": int,
        "N": int,
        "L": int,
        "prefilter_taps": int,
        "margin": _NUMBER,
        "seed": int,
        "blocks": int,
        "init_repeats": (int, str),
        "failure_mode": str,
        "mod_input": str,
        "filterset": str,
    },
    "sweep": {"snr_db": list},
    "robustness": {
        "snr0_db": _NUMBER,
        "snr_db": list,
        "rho": _NUMBER,
        "points_per_decade": int,
    },
    "output": {"dir": str},
    "threads": int,
    "logging": {"level": str, "format": str},
}


def _validate(data: Any, schema: dict, prefix: str = "") -> None:
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", prefix or "<root>")
    for key, value in data.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in schema:
            raise ConfigError("unknown key", path)
        expected = schema[key]
        if isinstance(expected, dict):
            _validate(value, expected, path)
            continue
        # bool is an int subclass but never a valid number here
        if isinstance(value, bool) or not isinstance(value, expected):
            types = expected if isinstance(expected, tuple) else (expected,)
            names = "/".join(t.__name__ for t in types)
            raise ConfigError(f"expected {names}, got {type(value).__name__}", path)


def _choice(value: str, allowed, path: str) -> str:
    if value not in allowed:
        raise ConfigError(f"must be one of {', '.join(allowed)}, got {value!r}", path)
    return value


class ExperimentConfig:
    """Configuration manager for Analog Matching experiments."""

    def __init__(self, config_path: str | None = DEFAULT_CONFIG_PATH, data: dict | None = None):
        """Initialize configuration from a YAML (or JSON) file or a ready mapping.

        Args:
            config_path: Path to the configuration file
            data: Configuration mapping used instead of reading a file
        """
        self.config_path = Path(config_path) if config_path else None
        self.config: dict[str, Any] = {}
        if data is not None:
            self.config = copy.deepcopy(data)
            _validate(self.config, SCHEMA)
            self._check_values()
        else:
            self.load()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return cls(None, data)

    @property
    def base_dir(self) -> Path:
        return self.config_path.parent if self.config_path else Path.cwd()

    def load(self):
        """Load and validate the configuration file."""
        if self.config_path is None or not self.config_path.exists():
            raise ConfigError(
                f"configuration file not found\nPlease create one from {DEFAULT_CONFIG_PATH}.",
                str(self.config_path),
            )
        try:
            with open(self.config_path) as f:
                self.config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed configuration: {e}", str(self.config_path)) from e

        _validate(self.config, SCHEMA)
        self._check_values()
        logger.info(f"Configuration loaded from {self.config_path}")

    def _check_values(self):
        _choice(self.mode, MODES, "mode")
        _choice(self.get("lattice.kind", "scalar"), [k.value for k in LatticeKind], "lattice.kind")
        _choice(self.failure_mode, [m.value for m in FailureMode], "stream.failure_mode")
        _choice(self.mod_input, [m.value for m in ModInput], "stream.mod_input")
        grid = self.grid_size
        if grid < 16 or grid & (grid - 1):
            raise ConfigError(f"must be a power of two >= 16, got {grid}", "system.grid_size")
        repeats = self.init_repeats
        if isinstance(repeats, str) and repeats != "auto":
            raise ConfigError(
                f"must be an integer or 'auto', got {repeats!r}", "stream.init_repeats"
            )
        for name in ("source", "noise"):
            section = self.get(f"system.{name}")
            if section is not None:
                allowed = SPECTRUM_KINDS if name == "noise" else SPECTRUM_KINDS[:-1]
                _choice(section.get("kind"), allowed, f"system.{name}.kind")
        if self.get("system.power") is not None and self.get("system.snr_db") is not None:
            raise ConfigError("give either power or snr_db, not both", "system")
        for key in ("sweep.snr_db", "robustness.snr_db"):
            values = self.get(key, [])
            if any(isinstance(v, bool) or not isinstance(v, _NUMBER) for v in values):
                raise ConfigError("expected a list of numbers", key)
        kind = self.lattice_kind
        dimension = self.get("lattice.dimension")
        k = self.get("stream.K")
        if dimension is not None and kind is not LatticeKind.CUBIC:
            raise ConfigError("only cubic lattices take a dimension", "lattice.dimension")
        if k is not None and dimension is not None and k != dimension:
            raise ConfigError(f"K = {k} differs from lattice.dimension = {dimension}", "stream.K")
        if k is not None and kind is not LatticeKind.CUBIC and k != Lattice.create(kind).dimension:
            raise ConfigError(f"{kind.value} has a fixed dimension, got K = {k}", "stream.K")

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key.

        Args:
            key: Configuration key (supports dot notation, e.g., 'stream.margin')
            default: Default value if key not found

        Returns:
            Configuration value
        """
        value = self.config
        for k in key.split("."):
            if isinstance(value, dict):
                value = value.get(k)
                if value is None:
                    return default
            else:
                return default
        return value

    @property
    def mode(self) -> str:
        return self.get("mode", "matching")

    @property
    def design_mode(self) -> DesignMode:
        return DesignMode.ZERO_FORCING if self.mode == "zero_forcing" else DesignMode.MATCHING

    @property
    def grid_size(self) -> int:
        return self.get("system.grid_size", spectrum.DEFAULT_GRID_SIZE)

    @property
    def rho(self) -> float:
        return float(self.get("system.rho", 1.0))

    @property
    def snr_db(self) -> float:
        return float(self.get("system.snr_db", 20.0))

    @property
    def lattice_kind(self) -> LatticeKind:
        return LatticeKind(self.get("lattice.kind", "scalar"))

    @property
    def lattice_dimension(self) -> int | None:
        """Only cubic lattices have a free dimension; it comes from lattice.dimension or K."""
        if self.lattice_kind is not LatticeKind.CUBIC:
            return None
        return self.get("lattice.dimension", self.get("stream.K"))

    @property
    def columns(self) -> int:
        return self.get("stream.N", DEFAULT_COLUMNS)

    @property
    def predictor_length(self) -> int:
        return self.get("stream.L", DEFAULT_PREDICTOR_TAPS)

    @property
    def prefilter_taps(self) -> int:
        return self.get("stream.prefilter_taps", DEFAULT_PREFILTER_TAPS)

    @property
    def margin(self) -> float:
        return float(self.get("stream.margin", DEFAULT_MARGIN))

    @property
    def seed(self) -> int:
        return self.get("stream.seed", 0)

    @property
    def blocks(self) -> int:
        return self.get("stream.blocks", DEFAULT_BLOCKS)

    @property
    def init_repeats(self) -> int | str:
        return self.get("stream.init_repeats", "auto")

    @property
    def failure_mode(self) -> str:
        return self.get("stream.failure_mode", FailureMode.CONTINUE.value)

    @property
    def mod_input(self) -> str:
        return self.get("stream.mod_input", ModInput.PREDICTED.value)

    @property
    def filterset_path(self) -> Path | None:
        path = self.get("stream.filterset")
        return self._resolve(path) if path else None

    @property
    def sweep_snr_db(self) -> list[float]:
        return [float(v) for v in self.get("sweep.snr_db", [])]

    @property
    def robustness_snr0_db(self) -> float:
        return float(self.get("robustness.snr0_db", 10.0))

    @property
    def robustness_snr_db(self) -> list[float]:
        return [float(v) for v in self.get("robustness.snr_db", [])]

    @property
    def robustness_rho(self) -> float:
        return float(self.get("robustness.rho", self.rho))

    @property
    def points_per_decade(self) -> int:
        return self.get("robustness.points_per_decade", 10)

    @property
    def output_dir(self) -> Path:
        return Path(self.get("output.dir", "results"))

    @property
    def logging_level(self) -> str:
        """Get logging level."""
        return self.get("logging.level", "INFO")

    @property
    def logging_format(self) -> str:
        """Get logging format."""
        return self.get("logging.format", DEFAULT_LOG_FORMAT)

    def threads(self, override: int | None = None) -> int:
        """Thread count: CLI flag, then config file, then AM_THREADS, then 1."""
        if override is not None:
            return override
        value = self.get("threads")
        if value is not None:
            return value
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                return int(env)
            except ValueError as e:
                raise ConfigError(f"must be an integer, got {env!r}", THREADS_ENV) from e
        return 1

    def _resolve(self, path: str) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def _spectrum(self, name: str, default: dict) -> spectrum.Spectrum:
        section = self.get(f"system.{name}", default)
        path = f"system.{name}"
        size = self.grid_size
        band_limit = section.get("band_limit")
        kind = section["kind"]
        try:
            if kind == "flat":
                return spectrum.flat(section.get("level", 1.0), size, band_limit)
            if kind == "two_level":
                return spectrum.two_level(
                    section.get("high", 1.0),
                    section.get("low", 1.0),
                    section.get("split", 0.25),
                    size,
                    band_limit,
                )
            if kind == "ar1":
                return spectrum.ar1(
                    section.get("a", 0.9), section.get("innovation_var", 1.0), size, band_limit
                )
            if kind == "ma":
                return spectrum.moving_average(
                    section.get("taps", [1.0]), section.get("innovation_var", 1.0), size, band_limit
                )
            if kind == "csv":
                if "path" not in section:
                    raise ConfigError("csv spectra need a path", path)
                return spectrum.from_csv(self._resolve(section["path"]), size, band_limit)
            taps = FirFilter(section.get("taps", [1.0]))
            return isi_to_colored(taps, section.get("innovation_var", 1.0), size, band_limit)
        except DomainError as e:
            raise ConfigError(str(e), path) from e

    def system_spec(self, snr_db: float | None = None) -> SystemSpec:
        """Source, noise and power described by the ``system`` section.

        The bandwidth-change presets use white spectra with the configured rho.
        """
        if snr_db is None and self.get("system.power") is None:
            snr_db = self.snr_db
        try:
            if self.mode in ("bw_expansion", "bw_compression"):
                rho = self.rho
                if (self.mode == "bw_expansion") != (rho > 1) or rho == 1:
                    raise ConfigError(f"{self.mode} does not match rho = {rho}", "system.rho")
                return SystemSpec.white(10 ** (snr_db / 10), rho, size=self.grid_size)
            flat = {"kind": "flat", "level": 1.0}
            source = self._spectrum("source", flat)
            noise = self._spectrum("noise", flat)
            if snr_db is None:
                return SystemSpec(source, noise, float(self.get("system.power")))
            return SystemSpec(source, noise, 10 ** (snr_db / 10) * noise.variance)
        except DomainError as e:
            raise ConfigError(str(e), "system") from e

    def simulation_config(self, seed: int | None = None, threads: int | None = None):
        return SimulationConfig(
            lattice=self.lattice_kind,
            dimension=self.lattice_dimension,
            columns=self.columns,
            length=self.predictor_length,
            prefilter_taps=self.prefilter_taps,
            margin=self.margin,
            mode=self.design_mode,
            init_repeats=self.init_repeats,
            failure_mode=self.failure_mode,
            mod_input=self.mod_input,
            blocks=self.blocks,
            seed=self.seed if seed is None else seed,
            threads=self.threads(threads),
        )

    def resolved(self, seed: int | None = None, threads: int | None = None) -> dict:
        """The effective configuration, defaults filled in, for provenance records."""
        resolved = copy.deepcopy(self.config)
        resolved["mode"] = self.mode
        resolved.setdefault("system", {})["grid_size"] = self.grid_size
        resolved["lattice"] = {"kind": self.lattice_kind.value}
        if self.lattice_dimension is not None:
            resolved["lattice"]["dimension"] = self.lattice_dimension
        stream = resolved.setdefault("stream", {})
        stream.update(
            N=self.columns,
            L=self.predictor_length,
            prefilter_taps=self.prefilter_taps,
            margin=self.margin,
            seed=self.seed if seed is None else seed,
            blocks=self.blocks,
            init_repeats=self.init_repeats,
            failure_mode=self.failure_mode,
            mod_input=self.mod_input,
        )
        resolved["threads"] = self.threads(threads)
        resolved["output"] = {"dir": str(self.output_dir)}
        return resolved


def load_config(config_path: str = DEFAULT_CONFIG_PATH) -> ExperimentConfig:
    """Load configuration from file.

    Args:
        config_path: Path to configuration file

    Returns:
        ExperimentConfig instance
    """
    return ExperimentConfig(config_path)
