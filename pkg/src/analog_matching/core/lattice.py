"""Lattice quantizers, modulo-lattice reduction and dither streams.

Supported lattices are the scaled integers, the cubic lattice and the
low-dimensional dense packings A2, D4 and E8. Each nearest-point search
works on the unscaled lattice and multiplies back by the scale, so the
Voronoi cell of a scaled lattice is the scaled cell.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from analog_matching.exceptions import DomainError

logger = logging.getLogger(__name__)

DEFAULT_PROBE_BATCH = 100_000


class LatticeKind(Enum):
    SCALAR = "scalar"
    CUBIC = "cubic"
    A2 = "a2"
    D4 = "d4"
    E8 = "e8"


def _e8_generator() -> np.ndarray:
    rows = [np.array([2.0] + [0.0] * 7)]
    for i in range(6):
        row = np.zeros(8)
        row[i], row[i + 1] = -1.0, 1.0
        rows.append(row)
    rows.append(np.full(8, 0.5))
    return np.array(rows)


_GENERATORS = {
    LatticeKind.A2: np.array([[1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]]),
    LatticeKind.D4: np.array(
        [
            [-1.0, -1.0, 0.0, 0.0],
            [1.0, -1.0, 0.0, 0.0],
            [0.0, 1.0, -1.0, 0.0],
            [0.0, 0.0, 1.0, -1.0],
        ]
    ),
    LatticeKind.E8: _e8_generator(),
}

# Dimensionless second moments G(L) = sigma^2 / V^(2/K).
NORMALIZED_SECOND_MOMENTS = {
    LatticeKind.SCALAR: 1.0 / 12.0,
    LatticeKind.CUBIC: 1.0 / 12.0,
    LatticeKind.A2: 5.0 / (36.0 * np.sqrt(3.0)),
    LatticeKind.D4: 0.0766032,
    LatticeKind.E8: 929.0 / 12960.0,
}

_DIMENSIONS = {LatticeKind.SCALAR: 1, LatticeKind.A2: 2, LatticeKind.D4: 4, LatticeKind.E8: 8}

# Coefficient offsets around floor() that cover the A2 Voronoi neighborhood.
_A2_OFFSETS = np.array(list(itertools.product(range(-1, 3), repeat=2)), dtype=float)


def _round_half_up(x: np.ndarray) -> np.ndarray:
    # Ties go up so the residual cell is [-1/2, 1/2).
    return np.floor(x + 0.5)


def _nearest_dn(x: np.ndarray) -> np.ndarray:
    """Nearest point of D_n = {integer vectors with even sum}."""
    f = _round_half_up(x)
    odd = np.mod(f.sum(axis=-1), 2) != 0
    if not np.any(odd):
        return f
    diff = x - f
    worst = np.argmax(np.abs(diff), axis=-1)
    step = np.where(np.take_along_axis(diff, worst[..., None], axis=-1) >= 0, 1.0, -1.0)
    flipped = f.copy()
    np.put_along_axis(
        flipped, worst[..., None], np.take_along_axis(f, worst[..., None], axis=-1) + step, axis=-1
    )
    return np.where(odd[..., None], flipped, f)


def _nearest_e8(x: np.ndarray) -> np.ndarray:
    """E8 = D8 union (D8 + 1/2): keep the closer coset candidate."""
    even = _nearest_dn(x)
    shifted = _nearest_dn(x - 0.5) + 0.5
    closer = np.sum((x - shifted) ** 2, axis=-1) < np.sum((x - even) ** 2, axis=-1)
    return np.where(closer[..., None], shifted, even)


def _nearest_by_enumeration(x: np.ndarray, generator: np.ndarray) -> np.ndarray:
    coefficients = x @ np.linalg.inv(generator)
    base = np.floor(coefficients)
    candidates = (base[..., None, :] + _A2_OFFSETS) @ generator
    distances = np.sum((x[..., None, :] - candidates) ** 2, axis=-1)
    best = np.argmin(distances, axis=-1)
    return np.take_along_axis(candidates, best[..., None, None], axis=-2)[..., 0, :]


@dataclass(frozen=True, eq=False)
class Lattice:
    """A K-dimensional lattice scaled by ``scale``; generator rows are basis vectors."""

    kind: LatticeKind
    dimension: int
    scale: float = 1.0
    generator: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        expected = _DIMENSIONS.get(self.kind)
        if expected is not None and self.dimension != expected:
            raise DomainError(f"{self.kind.value} lattice has dimension {expected}")
        if self.dimension < 1:
            raise DomainError(f"lattice dimension must be positive, got {self.dimension}")
        if not self.scale > 0:
            raise DomainError(f"lattice scale must be positive, got {self.scale}")
        base = _GENERATORS.get(self.kind, np.eye(self.dimension))
        object.__setattr__(self, "generator", self.scale * base)

    @classmethod
    def create(cls, kind: LatticeKind | str, dimension: int | None = None, scale: float = 1.0):
        kind = LatticeKind(kind)
        if dimension is None:
            dimension = _DIMENSIONS.get(kind, 1)
        return cls(kind, dimension, scale)

    @classmethod
    def with_second_moment(
        cls, kind: LatticeKind | str, second_moment: float, dimension: int | None = None
    ) -> "Lattice":
        """Scale a lattice so that its per-dimension second moment equals ``second_moment``."""
        if second_moment <= 0:
            raise DomainError(f"second moment must be positive, got {second_moment}")
        unit = cls.create(kind, dimension)
        lattice = cls.create(kind, dimension, np.sqrt(second_moment / unit.second_moment))
        logger.debug(
            f"Lattice {lattice.kind.value} (K={lattice.dimension}) scaled by {lattice.scale:.6g}"
        )
        return lattice

    @property
    def unit_determinant(self) -> float:
        base = _GENERATORS.get(self.kind)
        return 1.0 if base is None else float(abs(np.linalg.det(base)))

    @property
    def cell_volume(self) -> float:
        return self.unit_determinant * self.scale**self.dimension

    @property
    def normalized_second_moment(self) -> float:
        return float(NORMALIZED_SECOND_MOMENTS[self.kind])

    @property
    def second_moment(self) -> float:
        """Per-dimension second moment of the Voronoi cell."""
        volume_term = self.unit_determinant ** (2.0 / self.dimension)
        return self.normalized_second_moment * self.scale**2 * volume_term

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dimension,):
            raise DomainError(f"expected vectors of dimension {self.dimension}, got {x.shape}")
        return x

    def nearest_point(self, x: np.ndarray) -> np.ndarray:
        """Closest lattice point to each K-vector along the last axis."""
        y = self._check(x) / self.scale
        if self.kind in (LatticeKind.SCALAR, LatticeKind.CUBIC):
            q = _round_half_up(y)
        elif self.kind is LatticeKind.D4:
            q = _nearest_dn(y)
        elif self.kind is LatticeKind.E8:
            q = _nearest_e8(y)
        else:
            q = _nearest_by_enumeration(y, _GENERATORS[self.kind])
        return self.scale * q

    def mod(self, x: np.ndarray) -> np.ndarray:
        """x mod the lattice: the residual in the fundamental Voronoi cell."""
        x = self._check(x)
        return x - self.nearest_point(x)

    def in_cell(self, x: np.ndarray) -> np.ndarray:
        """True where x already lies in the fundamental cell (mod leaves it unchanged)."""
        return np.all(self.nearest_point(x) == 0, axis=-1)


def mod_lattice(lat: Lattice, x: np.ndarray) -> np.ndarray:
    return lat.mod(x)


def nearest_point(lat: Lattice, x: np.ndarray) -> np.ndarray:
    return lat.nearest_point(x)


@dataclass(eq=False)
class DitherStream:
    """Reproducible dither uniform over the Voronoi cell.

    Each call draws from ``numpy.random.default_rng([seed, counter])`` and
    then advances the counter, so two streams with the same seed and
    counter produce identical dither.
    """

    lattice: Lattice
    seed: int
    counter: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"dither seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def position(self) -> tuple[int, int]:
        return self.seed, self.counter

    def draw(self, n: int) -> np.ndarray:
        """n dither vectors, shape (n, K).

        A uniform point of the fundamental parallelepiped reduced modulo the
        lattice is uniform over the Voronoi cell.
        """
        rng = np.random.default_rng([self.seed, self.counter])
        self.counter += 1
        u = rng.random((n, self.lattice.dimension))
        return self.lattice.mod(u @ self.lattice.generator)


def dither_draw(stream: DitherStream, n: int) -> np.ndarray:
    return stream.draw(n)


def estimate_second_moment(lat: Lattice, samples: int = 200_000, seed: int = 0) -> float:
    """Monte Carlo per-dimension second moment of the Voronoi cell."""
    points = DitherStream(lat, seed).draw(samples)
    return float(np.mean(points**2))


def goodness_probe(
    lat: Lattice,
    composition,
    trials: int,
    seed: int = 0,
    batch: int = DEFAULT_PROBE_BATCH,
) -> float:
    """Empirical probability that a combination noise leaves the Voronoi cell.

    The noise is ``alpha_0 Z_0 + sum_l alpha_l Z_l`` with Z_0 Gaussian of
    per-dimension variance sigma^2(L) and Z_l independent uniform over the
    cell.

    Args:
        lat: Lattice under test
        composition: Nonnegative weights (alpha_0, ..., alpha_L); the self-noise weights
            alpha_1..alpha_L have sum of squares <= 1, alpha_0 is unrestricted
        trials: Number of K-dimensional noise vectors
        seed: Seed of the probe's random generator
        batch: Vectors per evaluation batch

    Returns:
        Failure rate in [0, 1]
    """
    alphas = np.atleast_1d(np.asarray(composition, dtype=float))
    if alphas.size == 0 or np.any(alphas < 0):
        raise DomainError("composition weights must be nonnegative")
    self_noise = float(np.sum(alphas[1:] ** 2))
    if self_noise > 1.0 + 1e-12:
        raise DomainError(f"self-noise power {self_noise:.6g} exceeds one")
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")

    rng = np.random.default_rng(seed)
    uniform = DitherStream(lat, seed)
    sigma = np.sqrt(lat.second_moment)
    failures = 0
    remaining = trials
    while remaining > 0:
        n = min(batch, remaining)
        z = alphas[0] * sigma * rng.standard_normal((n, lat.dimension))
        for alpha in alphas[1:]:
            if alpha > 0:
                z += alpha * uniform.draw(n)
        failures += int(np.count_nonzero(~lat.in_cell(z)))
        remaining -= n
    rate = failures / trials
    logger.debug(f"Goodness probe {lat.kind.value}: {failures}/{trials} failures")
    return rate
