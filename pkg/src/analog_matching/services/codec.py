"""Analog Matching encoder and decoder.

K parallel source streams are written row-wise into a K x N table: the
linear filters run along the rows and the modulo-lattice operations act
on the K-dimensional columns. Every block is self-contained: its table
starts with L zero columns that clear the channel predictor memory,
followed by the L source samples preceding each row, each sent
``init_repeats`` times at a reduced gain, then the N data columns and a
few zero columns that flush the zero-phase channel filters.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import signal

from analog_matching.core.factorization import FirFilter
from analog_matching.core.lattice import DitherStream, Lattice
from analog_matching.exceptions import ContractError, DomainError
from analog_matching.services.design import MatchingFilterSet

logger = logging.getLogger(__name__)

# N >= MIN_COLUMNS_PER_TAP * L keeps the initialization overhead small.
MIN_COLUMNS_PER_TAP = 8


class FailureMode(Enum):
    CONTINUE = "continue"  # decoding errors propagate through the predictor memory
    RESET = "reset"  # failed columns are replaced by their genie-correct value


class ModInput(Enum):
    PREDICTED = "predicted"  # Y' - beta J - D
    LITERAL = "literal"  # Y~ - beta J - D


@dataclass(frozen=True)
class StreamConfig:
    """Interleaver and codec parameters.

    ``rows`` is the lattice dimension K, ``columns`` the block length N and
    ``length`` the predictor length L.
    """

    rows: int
    columns: int
    length: int
    beta: float
    dither_seed: int = 0
    init_repeats: int = 1
    failure_mode: FailureMode = FailureMode.CONTINUE
    mod_input: ModInput = ModInput.PREDICTED
    record_taps: bool = True

    def __post_init__(self):
        if self.rows < 1:
            raise DomainError(f"rows must be positive, got {self.rows}")
        if self.length < 0:
            raise DomainError(f"predictor length must be nonnegative, got {self.length}")
        if self.columns < max(1, MIN_COLUMNS_PER_TAP * self.length):
            raise DomainError(
                f"block length {self.columns} must be at least "
                f"{MIN_COLUMNS_PER_TAP} x predictor length ({self.length})"
            )
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.init_repeats < 1:
            raise DomainError(f"init_repeats must be at least 1, got {self.init_repeats}")

    @property
    def beta_init(self) -> float:
        return self.beta / math.sqrt(self.init_repeats)

    @property
    def overhead(self) -> int:
        """Extra channel uses per row spent on initialization."""
        return self.length * (1 + self.init_repeats)

    @classmethod
    def from_design(
        cls,
        fs: MatchingFilterSet,
        lattice: Lattice,
        columns: int,
        init_repeats: int | str = "auto",
        **kwargs,
    ) -> "StreamConfig":
        if init_repeats == "auto":
            init_repeats = auto_init_repeats(fs)
        return cls(
            lattice.dimension, columns, fs.length, fs.beta, init_repeats=init_repeats, **kwargs
        )


def auto_init_repeats(fs: MatchingFilterSet) -> int:
    """Repeats that keep the unpredicted mod input below theta_C.

    Without the source predictor the mod input is beta_init U + Z_eq, so
    beta^2 Var{U} (1 + margin)^2 / repeats must stay below theta_C - Var{Z_eq}.
    """
    headroom = fs.theta_c - fs.noise_floor
    if headroom <= 0:
        raise DomainError("equivalent noise fills the whole lattice cell; no room to initialize")
    needed = fs.beta**2 * fs.s_u.variance * (1 + max(fs.margin, 0.0)) ** 2 / headroom
    # Tolerate round-off when the requirement is an exact integer.
    return max(1, math.ceil(needed * (1 - 1e-9)))


@dataclass(frozen=True)
class BlockLayout:
    """Column layout of one interleaving table."""

    zero: int
    init: int
    data: int
    flush: int

    @property
    def total(self) -> int:
        return self.zero + self.init + self.data + self.flush

    @property
    def init_slice(self) -> slice:
        return slice(self.zero, self.zero + self.init)

    @property
    def data_slice(self) -> slice:
        start = self.zero + self.init
        return slice(start, start + self.data)

    @property
    def overhead(self) -> int:
        return self.zero + self.init + self.flush


def _layout(config: StreamConfig, fs: MatchingFilterSet) -> BlockLayout:
    flush = fs.g1.half_length + fs.g2.half_length
    return BlockLayout(config.length, config.length * config.init_repeats, config.columns, flush)


@dataclass(frozen=True, eq=False)
class ChannelBlock:
    """Channel input of one table plus the dither position it was encoded with."""

    samples: np.ndarray
    seed: int
    counter: int
    layout: BlockLayout

    @property
    def data_samples(self) -> np.ndarray:
        return self.samples[:, self.layout.data_slice]


@dataclass(frozen=True, eq=False)
class EncoderTaps:
    """Encoder-side signals kept for genie checks (K x columns of the table)."""

    u: np.ndarray
    xtilde: np.ndarray
    interference: np.ndarray


@dataclass(frozen=True, eq=False)
class TestTaps:
    """Decoder-side recordings over the data columns."""

    t: np.ndarray | None
    z_eq: np.ndarray | None
    z_prime: np.ndarray | None
    correct: np.ndarray | None
    mod_input: np.ndarray
    mod_input_literal: np.ndarray


@dataclass(frozen=True, eq=False)
class DecodedBlock:
    v: np.ndarray
    s_hat: np.ndarray
    taps: TestTaps | None


@dataclass(frozen=True, eq=False)
class DecoderFilters:
    """Decoder filters that may differ from the design (mismatched channel)."""

    g2: FirFilter
    p_c: FirFilter
    f2: FirFilter

    @classmethod
    def from_design(cls, fs: MatchingFilterSet) -> "DecoderFilters":
        return cls(fs.g2, fs.p_c, fs.f2)


@dataclass(frozen=True)
class GenieReport:
    """Modulo-failure counts of one decoded block.

    ``failures`` counts K-dimensional columns; ``failure_rate`` divides them by
    the number of samples, a per-dimension rate comparable across K.
    """

    failures: int
    columns: int
    dimension: int
    t_variance: float
    theta_c: float

    @property
    def column_failure_rate(self) -> float:
        return self.failures / self.columns if self.columns else 0.0

    @property
    def failure_rate(self) -> float:
        return self.column_failure_rate / self.dimension


def _check_design(fs: MatchingFilterSet, lattice: Lattice, config: StreamConfig) -> None:
    if lattice.dimension != config.rows:
        raise DomainError(f"lattice dimension {lattice.dimension} != rows {config.rows}")
    if fs.length != config.length or fs.p_c.length != config.length:
        raise DomainError(f"predictor length {fs.length} != stream length {config.length}")
    if not np.isclose(lattice.second_moment, fs.theta_c, rtol=1e-9):
        raise DomainError("lattice second moment must equal theta_C")


class Encoder:
    """Analog Matching encoder: X~ = [beta U - I + D] mod Lambda, X = G1 X~.

    I is minus the channel predictor applied to past X~, so the decoder's
    predicted channel output carries X~ + I.
    """

    def __init__(self, filterset: MatchingFilterSet, lattice: Lattice, config: StreamConfig):
        _check_design(filterset, lattice, config)
        self.filterset = filterset
        self.lattice = lattice
        self.config = config
        self.layout = _layout(config, filterset)
        self.dither = DitherStream(lattice, config.dither_seed)
        self.initialized = False
        self._init_u: np.ndarray | None = None
        logger.debug(
            f"Encoder initialized: K={config.rows}, N={config.columns}, L={config.length}, "
            f"repeats={config.init_repeats}, lattice={lattice.kind.value}"
        )

    def prefilter(self, source: np.ndarray) -> np.ndarray:
        """U = F1 S along the last axis."""
        return self.filterset.f1.apply(source, axis=-1)

    def initialize(self, first_samples: np.ndarray) -> int:
        """Queue the initialization columns for the next block.

        Args:
            first_samples: K x L pre-filtered source samples preceding each row

        Returns:
            Extra channel uses per row, L (1 + init_repeats)
        """
        first_samples = np.asarray(first_samples, dtype=float)
        expected = (self.config.rows, self.config.length)
        if first_samples.shape != expected:
            raise DomainError(f"initialization samples must have shape {expected}")
        self._init_u = first_samples
        self.initialized = True
        return self.config.overhead

    def encode_block(self, u: np.ndarray) -> tuple[ChannelBlock, EncoderTaps]:
        """Encode a K x N table of pre-filtered source samples."""
        if not self.initialized:
            raise ContractError("encoder used before initialize()")
        u = np.asarray(u, dtype=float)
        config, layout = self.config, self.layout
        if u.shape != (config.rows, config.columns):
            raise DomainError(f"expected a {config.rows} x {config.columns} table, got {u.shape}")

        seed, counter = self.dither.position
        dither = self.dither.draw(layout.total).T
        targets = np.zeros((config.rows, layout.total))
        gains = np.zeros(layout.total)
        targets[:, layout.init_slice] = np.repeat(self._init_u, config.init_repeats, axis=1)
        gains[layout.init_slice] = config.beta_init
        targets[:, layout.data_slice] = u
        gains[layout.data_slice] = config.beta
        active = gains > 0

        xtilde = np.zeros_like(targets)
        interference = np.zeros_like(targets)
        p_c = self.filterset.p_c
        if p_c.is_zero:
            mod_in = gains[active] * targets[:, active] + dither[:, active]
            xtilde[:, active] = self.lattice.mod(mod_in.T).T
        else:
            reversed_taps = p_c.taps[::-1]
            length = config.length
            for n in np.flatnonzero(active):
                i_n = -(xtilde[:, n - length : n] @ reversed_taps)
                interference[:, n] = i_n
                xtilde[:, n] = self.lattice.mod(gains[n] * targets[:, n] - i_n + dither[:, n])

        samples = self.filterset.g1.apply(xtilde, axis=1)
        self.initialized = False
        self._init_u = None
        block = ChannelBlock(samples, seed, counter, layout)
        return block, EncoderTaps(u, xtilde, interference)


class Decoder:
    """Analog Matching decoder.

    Y~ = G2 Y; Y' = Y~ - P_C Y~ (past); V = [Y' - beta J - D] mod Lambda / beta + J
    with J the source predictor applied to past V; S^ = F2 V.
    """

    def __init__(
        self,
        filterset: MatchingFilterSet,
        lattice: Lattice,
        config: StreamConfig,
        filters: DecoderFilters | None = None,
    ):
        _check_design(filterset, lattice, config)
        self.filterset = filterset
        self.lattice = lattice
        self.config = config
        self.filters = filters or DecoderFilters.from_design(filterset)
        self.layout = _layout(config, filterset)
        self.dither = DitherStream(lattice, config.dither_seed)
        self.initialized = False

    def initialize(self) -> None:
        self.initialized = True

    def postfilter(self, v: np.ndarray) -> np.ndarray:
        return self.filters.f2.apply(v, axis=-1)

    def decode_block(self, block: ChannelBlock, genie: EncoderTaps | None = None) -> DecodedBlock:
        """Decode one table.

        With ``genie`` (the encoder taps of the same block) the decoder also
        records T, Z_eq and Z' and can run in reset-on-failure mode.
        """
        if not self.initialized:
            raise ContractError("decoder used before initialize()")
        if (block.seed, block.counter) != self.dither.position:
            raise ContractError(
                f"dither desynchronized: block encoded at {(block.seed, block.counter)}, "
                f"decoder at {self.dither.position}"
            )
        if block.layout != self.layout:
            raise ContractError(f"block layout {block.layout} does not match {self.layout}")
        config, layout = self.config, self.layout
        reset = config.failure_mode is FailureMode.RESET
        if reset and genie is None:
            raise ContractError("reset-on-failure decoding needs the encoder taps")

        dither = self.dither.draw(layout.total).T
        y_tilde = self.filters.g2.apply(block.samples, axis=1)
        whitening = np.concatenate([[1.0], -self.filters.p_c.taps])
        y_prime = signal.lfilter(whitening, [1.0], y_tilde, axis=1)
        base = y_prime if config.mod_input is ModInput.PREDICTED else y_tilde

        # Initialization: J = 0, repeats averaged.
        length, repeats = config.length, config.init_repeats
        init = layout.init_slice
        estimates = self.lattice.mod((base[:, init] - dither[:, init]).T).T / config.beta_init
        v = np.zeros((config.rows, length + config.columns))
        v[:, :length] = estimates.reshape(config.rows, length, repeats).mean(axis=2)

        data = layout.data_slice
        residual = base[:, data] - dither[:, data]
        literal_residual = y_tilde[:, data] - dither[:, data]
        z_eq = u = None
        if genie is not None:
            u = genie.u
            z_eq = y_prime[:, data] - genie.interference[:, data] - genie.xtilde[:, data]

        beta = config.beta
        j = np.zeros((config.rows, config.columns))
        p_s = self.filterset.p_s
        if p_s.is_zero:
            v_data = self.lattice.mod(residual.T).T / beta
            if reset:
                t = beta * u + z_eq
                failed = ~self.lattice.in_cell(t.T)
                v_data[:, failed] = u[:, failed] + z_eq[:, failed] / beta
            v[:, length:] = v_data
        else:
            reversed_taps = p_s.taps[::-1]
            for n in range(config.columns):
                j_n = v[:, n : n + length] @ reversed_taps
                v_n = self.lattice.mod(residual[:, n] - beta * j_n) / beta + j_n
                if reset:
                    t_n = beta * (u[:, n] - j_n) + z_eq[:, n]
                    if not self.lattice.in_cell(t_n):
                        v_n = u[:, n] + z_eq[:, n] / beta
                j[:, n] = j_n
                v[:, length + n] = v_n

        v_data = v[:, length:]
        taps = None
        if config.record_taps:
            taps = self._record(genie, y_prime, residual, literal_residual, j, z_eq)
        self.initialized = False
        return DecodedBlock(v_data, self.postfilter(v_data), taps)

    def _record(self, genie, y_prime, residual, literal_residual, j, z_eq) -> TestTaps:
        beta = self.config.beta
        t = z_prime = correct = None
        if genie is not None:
            data = self.layout.data_slice
            t = beta * (genie.u - j) + z_eq
            received = y_prime[:, data] - genie.interference[:, data]
            z_prime = received / self.filterset.alpha - genie.xtilde[:, data]
            correct = self.lattice.in_cell(t.T)
        return TestTaps(t, z_eq, z_prime, correct, residual - beta * j, literal_residual - beta * j)


def initialize(encoder: Encoder, decoder: Decoder, first_samples: np.ndarray) -> int:
    """Prepare both ends for the next block; returns the extra channel uses per row."""
    decoder.initialize()
    return encoder.initialize(first_samples)


def genie_check(taps: TestTaps, lattice: Lattice, theta_c: float | None = None) -> GenieReport:
    """Count columns whose decoder mod input T left the Voronoi cell."""
    if taps.t is None:
        raise ContractError("taps were recorded without genie access to T")
    correct = lattice.in_cell(taps.t.T)
    if theta_c is None:
        theta_c = lattice.second_moment
    return GenieReport(
        failures=int(np.count_nonzero(~correct)),
        columns=int(correct.size),
        dimension=lattice.dimension,
        t_variance=float(np.mean(taps.t**2)),
        theta_c=float(theta_c),
    )
