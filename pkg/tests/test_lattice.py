import itertools

import numpy as np
import pytest
from scipy import stats

from analog_matching.core.lattice import (
    NORMALIZED_SECOND_MOMENTS,
    DitherStream,
    Lattice,
    LatticeKind,
    dither_draw,
    estimate_second_moment,
    goodness_probe,
    mod_lattice,
)
from analog_matching.exceptions import DomainError

NAMED = [LatticeKind.SCALAR, LatticeKind.A2, LatticeKind.D4, LatticeKind.E8]


def _minimal_vectors(kind: LatticeKind) -> np.ndarray:
    """Voronoi-relevant vectors of D4 (24) and E8 (240)."""
    n = 4 if kind is LatticeKind.D4 else 8
    vectors = []
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in itertools.product((-1.0, 1.0), repeat=2):
            v = np.zeros(n)
            v[i], v[j] = si, sj
            vectors.append(v)
    if kind is LatticeKind.E8:
        for signs in itertools.product((-0.5, 0.5), repeat=8):
            if sum(s < 0 for s in signs) % 2 == 0:
                vectors.append(np.array(signs))
    return np.array(vectors)


def test_scalar_quantizer():
    lat = Lattice.create("scalar")
    assert lat.nearest_point(np.array([2.7]))[0] == 3.0
    assert lat.mod(np.array([2.7]))[0] == pytest.approx(-0.3)
    assert lat.mod(np.array([0.5]))[0] == -0.5
    assert lat.mod(np.array([-0.5]))[0] == -0.5
    assert lat.mod(np.array([0.2]))[0] == 0.2


def test_scalar_second_moment():
    assert Lattice.create("scalar", scale=2.0).second_moment == pytest.approx(4.0 / 12.0)
    lat = Lattice.with_second_moment("e8", 3.0)
    assert lat.second_moment == pytest.approx(3.0)


def test_a2_matches_brute_force(rng):
    lat = Lattice.create("a2")
    x = rng.uniform(-5, 5, size=(500, 2))
    q = lat.nearest_point(x)
    coefficients = np.round(x @ np.linalg.inv(lat.generator))
    offsets = np.array(list(itertools.product(range(-2, 3), repeat=2)))
    candidates = (coefficients[:, None, :] + offsets) @ lat.generator
    best = np.min(np.sum((x[:, None, :] - candidates) ** 2, axis=-1), axis=1)
    np.testing.assert_allclose(np.sum((x - q) ** 2, axis=1), best, atol=1e-12)


@pytest.mark.parametrize("kind", [LatticeKind.D4, LatticeKind.E8])
def test_nearest_point_beats_every_neighbor(kind, rng):
    lat = Lattice.create(kind)
    x = rng.normal(scale=3.0, size=(300, lat.dimension))
    q = lat.nearest_point(x)
    distance = np.sum((x - q) ** 2, axis=1)
    for v in _minimal_vectors(kind):
        assert np.all(distance <= np.sum((x - q - v) ** 2, axis=1) + 1e-12)


@pytest.mark.parametrize("kind", NAMED)
def test_mod_is_idempotent_and_periodic(kind, rng):
    lat = Lattice.create(kind, scale=0.7)
    x = rng.normal(scale=4.0, size=(200, lat.dimension))
    r = lat.mod(x)
    np.testing.assert_allclose(lat.mod(r), r, atol=1e-12)
    assert np.all(lat.in_cell(r))
    shifts = rng.integers(-5, 6, size=(200, lat.dimension)) @ lat.generator
    np.testing.assert_allclose(lat.mod(x + shifts), r, atol=1e-9)


def test_lattice_points_map_to_zero():
    lat = Lattice.create("e8")
    point = np.array([1, 2, -1, 0, 3, 1, 0, 0]) @ lat.generator
    np.testing.assert_allclose(lat.nearest_point(point), point)
    np.testing.assert_allclose(lat.mod(point), 0.0, atol=1e-12)


@pytest.mark.parametrize("kind", [LatticeKind.A2, LatticeKind.D4, LatticeKind.E8])
def test_second_moment_matches_monte_carlo(kind):
    lat = Lattice.create(kind, scale=1.3)
    assert estimate_second_moment(lat, samples=200_000, seed=5) == pytest.approx(
        lat.second_moment, rel=0.01
    )
    assert lat.normalized_second_moment == NORMALIZED_SECOND_MOMENTS[kind]


@pytest.mark.parametrize("kind", [LatticeKind.SCALAR, LatticeKind.E8])
def test_dither_is_uniform_over_cell(kind):
    lat = Lattice.create(kind)
    draws = DitherStream(lat, seed=11).draw(100_000)
    sigma = np.sqrt(lat.second_moment)
    assert np.all(np.abs(draws.mean(axis=0)) < 3 * sigma / np.sqrt(100_000) * 1.5)
    np.testing.assert_allclose(draws.var(axis=0), lat.second_moment, rtol=0.02)
    assert np.all(lat.in_cell(draws))


def test_dither_streams_are_reproducible():
    lat = Lattice.create("d4")
    a, b = DitherStream(lat, seed=7), DitherStream(lat, seed=7)
    np.testing.assert_array_equal(a.draw(10), b.draw(10))
    assert a.position == (7, 1)
    assert not np.array_equal(a.draw(10), DitherStream(lat, seed=7).draw(10))


def test_function_forms_match_methods():
    lat = Lattice.create("e8")
    x = np.linspace(-3.0, 3.0, 16).reshape(2, 8)
    np.testing.assert_array_equal(mod_lattice(lat, x), lat.mod(x))
    np.testing.assert_array_equal(
        dither_draw(DitherStream(lat, seed=2), 5), DitherStream(lat, seed=2).draw(5)
    )


def test_dither_decouples_input():
    lat = Lattice.create("cubic", dimension=2)
    dither = DitherStream(lat, seed=3).draw(40_000)
    out = lat.mod(np.array([0.3, -0.2]) + dither)
    quadrant = (out[:, 0] >= 0).astype(int) * 2 + (out[:, 1] >= 0).astype(int)
    counts = np.bincount(quadrant, minlength=4)
    assert stats.chisquare(counts).pvalue > 0.01


def test_goodness_probe_scalar_gaussian():
    rate = goodness_probe(Lattice.create("scalar"), [1.0], trials=1_000_000, seed=2)
    assert rate == pytest.approx(2 * stats.norm.sf(np.sqrt(3.0)), abs=0.005)


def test_goodness_probe_pure_self_noise_never_fails():
    assert goodness_probe(Lattice.create("e8"), [0.0, 1.0], trials=20_000) == 0.0


def test_goodness_probe_decreases_with_power():
    lat = Lattice.create("scalar")
    rates = [goodness_probe(lat, [a], trials=200_000, seed=4) for a in (0.9, 0.8, 0.7)]
    assert rates[0] > rates[1] > rates[2]


def test_goodness_probe_orderings():
    e8 = Lattice.create("e8")
    assert goodness_probe(e8, [0.8, 0.5], 50_000, seed=1) < goodness_probe(e8, [1.0], 50_000)
    cubic = Lattice.create("cubic", dimension=8)
    assert goodness_probe(e8, [0.6], 100_000, seed=1) < goodness_probe(cubic, [0.6], 100_000)


def test_goodness_probe_admits_gaussian_weight_above_one():
    # Only the self-noise weights are bounded; total power here is 1.17.
    e8 = Lattice.create("e8")
    cubic = Lattice.create("cubic", dimension=8)
    heavy = goodness_probe(e8, [0.9, 0.6], 50_000, seed=5)
    assert heavy > goodness_probe(e8, [0.6], 50_000, seed=5)
    assert heavy < goodness_probe(cubic, [0.9, 0.6], 50_000, seed=5)
    scalar = Lattice.create("scalar")
    assert goodness_probe(scalar, [0.9, 0.9], 50_000, seed=5) > goodness_probe(
        scalar, [0.9], 50_000, seed=5
    )


def test_goodness_probe_rejects_bad_composition():
    lat = Lattice.create("scalar")
    with pytest.raises(DomainError):
        goodness_probe(lat, [0.5, 0.9, 0.9], 10)
    with pytest.raises(DomainError):
        goodness_probe(lat, [0.0, 1.1], 10)
    with pytest.raises(DomainError):
        goodness_probe(lat, [-0.5], 10)


def test_named_lattice_dimension_is_fixed():
    with pytest.raises(DomainError):
        Lattice(LatticeKind.E8, 4)
