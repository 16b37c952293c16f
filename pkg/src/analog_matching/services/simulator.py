"""End-to-end Monte Carlo simulation of the Analog Matching scheme."""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from analog_matching import __version__
from analog_matching.core.channel import ChannelInstance
from analog_matching.core.lattice import Lattice, LatticeKind
from analog_matching.core.spectrum import Spectrum
from analog_matching.core.waterfill import SystemSpec, opta
from analog_matching.exceptions import ConfigError, DomainError
from analog_matching.services.codec import (
    Decoder,
    DecoderFilters,
    Encoder,
    FailureMode,
    ModInput,
    StreamConfig,
    initialize,
)
from analog_matching.services.design import (
    DEFAULT_MARGIN,
    DEFAULT_PREDICTOR_TAPS,
    DEFAULT_PREFILTER_TAPS,
    DesignMode,
    MatchingFilterSet,
    design,
    predicted_distortion,
)
from analog_matching.services.records import table_lines, write_provenance
from analog_matching.services.robustness import mismatched_distortion_spectrum

logger = logging.getLogger(__name__)

DEFAULT_BLOCKS = 200
DEFAULT_COLUMNS = 2048
WHITENESS_LAGS = 20


@dataclass(frozen=True)
class SimulationConfig:
    """Everything a run needs besides the system itself."""

    lattice: LatticeKind = LatticeKind.SCALAR
    dimension: int | None = None
    columns: int = DEFAULT_COLUMNS
    length: int = DEFAULT_PREDICTOR_TAPS
    prefilter_taps: int = DEFAULT_PREFILTER_TAPS
    margin: float = DEFAULT_MARGIN
    mode: DesignMode = DesignMode.MATCHING
    init_repeats: int | str = "auto"
    failure_mode: FailureMode = FailureMode.CONTINUE
    mod_input: ModInput = ModInput.PREDICTED
    blocks: int = DEFAULT_BLOCKS
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lattice", LatticeKind(self.lattice))
        object.__setattr__(self, "mode", DesignMode(self.mode))
        object.__setattr__(self, "failure_mode", FailureMode(self.failure_mode))
        object.__setattr__(self, "mod_input", ModInput(self.mod_input))
        if self.blocks < 1:
            raise DomainError(f"blocks must be positive, got {self.blocks}")
        if self.threads < 1:
            raise DomainError(f"threads must be positive, got {self.threads}")


@dataclass(frozen=True)
class SimReport:
    """Aggregated measurements of one simulated system.

    Empirical quantities cover the data columns only; initialization and
    flush columns are excluded. ``distortion`` splits into
    ``conditioned_distortion * (1 - column_failure_rate)`` plus
    ``failure_distortion``. ``failure_rate`` is normalized per
    dimension: failed columns divided by the K x N data samples.
    """

    snr: float
    rho: float
    lattice: str
    dimension: int
    margin: float
    blocks: int
    columns: int
    seed: int
    empirical_sdr: float
    distortion: float
    distortion_stderr: float
    conditioned_distortion: float
    failure_distortion: float
    empirical_power: float
    power_stderr: float
    target_power: float
    failures: int
    failure_rate: float
    column_failure_rate: float
    t_variance: float
    theta_c: float
    z_eq_variance: float
    z_prime_variance: float
    whiteness_max: float
    whiteness_threshold: float
    source_correlation: float
    theory_sdr: float
    design_sdr: float
    gap_db: float
    design_gap_db: float
    runtime_s: float

    @property
    def snr_db(self) -> float:
        return 10 * np.log10(self.snr)

    @property
    def empirical_sdr_db(self) -> float:
        return 10 * np.log10(self.empirical_sdr)

    @property
    def theory_sdr_db(self) -> float:
        return 10 * np.log10(self.theory_sdr)

    def to_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class _BlockStats:
    squared_error: float
    correct_squared_error: float
    samples: int
    correct_samples: int
    power_sum: float
    power_samples: int
    failures: int
    columns: int
    t_energy: float
    z_eq_energy: float
    z_prime_energy: float
    tap_samples: int
    autocorrelation: np.ndarray
    source_cross: float
    source_energy: float


def _block_seeds(seed: int, block: int) -> tuple[int, int, int]:
    """Independent source, channel and dither seeds of one block."""
    source, channel, dither = np.random.SeedSequence([seed, block]).generate_state(3)
    return int(source), int(channel), int(dither)


class _BlockRunner:
    """Runs single blocks; safe to share between worker threads."""

    def __init__(
        self,
        spec: SystemSpec,
        filterset: MatchingFilterSet,
        lattice: Lattice,
        stream: StreamConfig,
        seed: int,
        noise: Spectrum,
        decoder_filters: DecoderFilters | None,
    ):
        self.spec = spec
        self.filterset = filterset
        self.lattice = lattice
        self.stream = stream
        self.seed = seed
        self.noise = noise
        self.decoder_filters = decoder_filters or DecoderFilters.from_design(filterset)
        self.context = filterset.f1.half_length
        self.guard = self.decoder_filters.f2.half_length

    def __call__(self, block: int) -> _BlockStats:
        source_seed, channel_seed, dither_seed = _block_seeds(self.seed, block)
        stream = replace(self.stream, dither_seed=dither_seed)
        rows, columns, length = stream.rows, stream.columns, stream.length

        # Each row is a contiguous stretch of the source process with F1 context.
        width = length + columns + 2 * self.context
        source = ChannelInstance(self.spec.source, source_seed).generate_noise(rows * width)
        source = source.reshape(rows, width)
        start = self.context
        u = self.filterset.f1.apply(source, axis=1)[:, start : start + length + columns]
        s = source[:, start + length : start + length + columns]

        encoder = Encoder(self.filterset, self.lattice, stream)
        decoder = Decoder(self.filterset, self.lattice, stream, self.decoder_filters)
        initialize(encoder, decoder, u[:, :length])
        block_in, genie = encoder.encode_block(u[:, length:])
        channel = ChannelInstance(self.noise, channel_seed)
        received = replace(block_in, samples=channel.apply(block_in.samples))
        decoded = decoder.decode_block(received, genie)
        taps = decoded.taps

        interior = slice(self.guard, columns - self.guard)
        error = (decoded.s_hat - s)[:, interior] ** 2
        correct = taps.correct[interior]
        x = block_in.data_samples
        z_prime = taps.z_prime
        lags = np.arange(WHITENESS_LAGS + 1)
        autocorrelation = np.array(
            [np.sum(z_prime[:, : columns - k] * z_prime[:, k:]) for k in lags]
        )
        return _BlockStats(
            squared_error=float(error.sum()),
            correct_squared_error=float(error[:, correct].sum()),
            samples=int(error.size),
            correct_samples=int(rows * np.count_nonzero(correct)),
            power_sum=float(np.sum(x**2)),
            power_samples=int(x.size),
            failures=int(np.count_nonzero(~taps.correct)),
            columns=columns,
            t_energy=float(np.sum(taps.t**2)),
            z_eq_energy=float(np.sum(taps.z_eq**2)),
            z_prime_energy=float(np.sum(z_prime**2)),
            tap_samples=int(z_prime.size),
            autocorrelation=autocorrelation,
            source_cross=float(np.sum(z_prime * genie.u)),
            source_energy=float(np.sum(genie.u**2)),
        )


def _standard_error(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def _to_db(ratio: float) -> float:
    return float(10 * np.log10(ratio))


def run_end_to_end(
    spec: SystemSpec,
    config: SimulationConfig = SimulationConfig(),
    filterset: MatchingFilterSet | None = None,
    actual_noise: Spectrum | None = None,
    decoder_filters: DecoderFilters | None = None,
) -> SimReport:
    """Design (unless a filter set is given), run ``config.blocks`` blocks and aggregate.

    Args:
        spec: Design system; its noise is also the channel noise unless
            ``actual_noise`` is given
        config: Lattice, stream, seed and thread settings
        filterset: Reuse a stored design instead of designing from ``spec``
        actual_noise: Channel noise spectrum that differs from the design
        decoder_filters: Decoder filter replacements for a mismatched channel

    Returns:
        SimReport; blocks are aggregated in block order, so results do not
        depend on the thread count
    """
    start = time.perf_counter()
    if filterset is None:
        kwargs = {"length": config.length, "margin": config.margin}
        if config.mode is DesignMode.MATCHING:
            kwargs["prefilter_taps"] = config.prefilter_taps
        filterset = design(spec, config.mode, **kwargs)
    lattice = Lattice.with_second_moment(config.lattice, filterset.theta_c, config.dimension)
    stream = StreamConfig.from_design(
        filterset,
        lattice,
        config.columns,
        init_repeats=config.init_repeats,
        failure_mode=config.failure_mode,
        mod_input=config.mod_input,
    )
    noise = spec.noise if actual_noise is None else actual_noise
    runner = _BlockRunner(spec, filterset, lattice, stream, config.seed, noise, decoder_filters)
    logger.info(
        f"Simulating {config.blocks} blocks: {lattice.kind.value} (K={lattice.dimension}), "
        f"N={stream.columns}, L={stream.length}, repeats={stream.init_repeats}, "
        f"threads={config.threads}"
    )

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        stats = list(pool.map(runner, range(config.blocks)))

    def total(name: str) -> float:
        return float(np.sum([getattr(s, name) for s in stats]))

    samples = total("samples")
    distortion = total("squared_error") / samples
    correct_samples = total("correct_samples")
    conditioned = total("correct_squared_error") / correct_samples if correct_samples else np.nan
    failure_distortion = (total("squared_error") - total("correct_squared_error")) / samples
    block_distortion = np.array([s.squared_error / s.samples for s in stats])
    block_power = np.array([s.power_sum / s.power_samples for s in stats])
    power = total("power_sum") / total("power_samples")

    tap_samples = total("tap_samples")
    z_prime_energy = total("z_prime_energy")
    autocorrelation = np.sum([s.autocorrelation for s in stats], axis=0)
    whiteness = np.abs(autocorrelation[1:] / autocorrelation[0])
    source_correlation = total("source_cross") / np.sqrt(z_prime_energy * total("source_energy"))

    variance = spec.source.variance
    failures = int(total("failures"))
    columns = int(total("columns"))
    theory_sdr = opta(spec).sdr_opt
    if actual_noise is None:
        design_distortion = predicted_distortion(filterset, spec)
    else:
        _, design_distortion = mismatched_distortion_spectrum(
            spec.source, spec.noise, actual_noise, filterset
        )
    design_sdr = variance / design_distortion
    empirical_sdr = variance / distortion

    report = SimReport(
        snr=spec.snr,
        rho=spec.rho,
        lattice=lattice.kind.value,
        dimension=lattice.dimension,
        margin=filterset.margin,
        blocks=config.blocks,
        columns=stream.columns,
        seed=config.seed,
        empirical_sdr=float(empirical_sdr),
        distortion=float(distortion),
        distortion_stderr=_standard_error(block_distortion),
        conditioned_distortion=float(conditioned),
        failure_distortion=float(failure_distortion),
        empirical_power=float(power),
        power_stderr=_standard_error(block_power),
        target_power=spec.power,
        failures=failures,
        failure_rate=failures / columns / lattice.dimension,
        column_failure_rate=failures / columns,
        t_variance=total("t_energy") / tap_samples,
        theta_c=filterset.theta_c,
        z_eq_variance=total("z_eq_energy") / tap_samples,
        z_prime_variance=z_prime_energy / tap_samples,
        whiteness_max=float(whiteness.max()),
        whiteness_threshold=float(4 / np.sqrt(tap_samples)),
        source_correlation=float(source_correlation),
        theory_sdr=float(theory_sdr),
        design_sdr=float(design_sdr),
        gap_db=_to_db(theory_sdr / empirical_sdr),
        design_gap_db=_to_db(design_sdr / empirical_sdr),
        runtime_s=time.perf_counter() - start,
    )
    logger.info(
        f"SDR {report.empirical_sdr_db:.3f} dB (OPTA {_to_db(theory_sdr):.3f} dB, "
        f"gap {report.gap_db:.3f} dB), failure rate {report.failure_rate:.3g}"
    )
    if report.empirical_power > spec.power + 3 * report.power_stderr:
        logger.warning(
            f"Transmit power {report.empirical_power:.6g} exceeds P = {spec.power:.6g} "
            f"by more than three standard errors"
        )
    return report


def sweep(
    spec: SystemSpec,
    snr_db: list[float],
    config: SimulationConfig = SimulationConfig(),
) -> list[SimReport]:
    """One report per SNR, in the given order; each point is designed afresh."""
    reports = []
    for value in snr_db:
        logger.info(f"Sweep point SNR = {value} dB")
        reports.append(run_end_to_end(spec.with_snr(10 ** (value / 10)), config))
    return reports


# Wall-clock runtime is not written to the CSV.
REPORT_FIELDS = [f.name for f in fields(SimReport) if f.name != "runtime_s"]


def write_report_csv(reports: list[SimReport], path: str | Path, config: dict) -> Path:
    """One row per report below the version and resolved configuration."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        write_provenance(f, config)
        writer = csv.DictWriter(f, fieldnames=REPORT_FIELDS)
        writer.writeheader()
        for report in reports:
            writer.writerow({name: getattr(report, name) for name in REPORT_FIELDS})
    logger.info(f"Wrote {len(reports)} report rows to {path}")
    return path


def read_report_csv(path: str | Path) -> list[SimReport]:
    path = Path(path)
    if not path.exists():
        raise ConfigError("report file not found", str(path))
    parsers = {f.name: f.type for f in fields(SimReport)}
    reports = []
    with open(path, newline="") as f:
        reader = csv.DictReader(table_lines(f))
        if reader.fieldnames != REPORT_FIELDS:
            raise ConfigError("unexpected report header", str(path))
        for row in reader:
            values = {name: parsers[name](raw) for name, raw in row.items()}
            reports.append(SimReport(**values, runtime_s=float("nan")))
    return reports


def summary(
    reports: list[SimReport], config: SimulationConfig, resolved: dict | None = None
) -> dict:
    """JSON summary of a sweep with the version and resolved configuration."""
    return {
        "version": __version__,
        "config": resolved if resolved is not None else _config_dict(config),
        "reports": [r.to_row() for r in reports],
    }


def _config_dict(config: SimulationConfig) -> dict:
    data = asdict(config)
    for key, value in data.items():
        if hasattr(value, "value"):
            data[key] = value.value
    return data
