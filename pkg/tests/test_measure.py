import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirichlet_spaces.measure import (
    CircleMeasure,
    Density,
    combine,
    dirac,
    from_density_function,
    lebesgue,
    poisson_extension,
    poisson_truncated,
    total_mass,
    zero_measure,
)

disk_pt = st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.95), st.floats(0, 2 * np.pi))


def test_total_mass_examples():
    assert total_mass(lebesgue()) == 1.0
    assert total_mass(dirac(0.0)) == 1.0
    assert total_mass(zero_measure()) == 0.0


def test_poisson_examples():
    assert poisson_extension(dirac(0.0), 0.0) == pytest.approx(1.0, abs=1e-15)
    assert poisson_extension(dirac(0.0), 0.5) == pytest.approx(3.0, rel=1e-14)
    z = np.array([0.3j, -0.7, 0.1 + 0.8j])
    assert np.allclose(poisson_extension(lebesgue(), z), 1.0, atol=1e-14)


def test_poisson_rejects_boundary():
    with pytest.raises(ValueError):
        poisson_extension(lebesgue(), 1.0)


def test_truncated_examples():
    assert poisson_truncated(dirac(0.0), 0.0, 0.5) == pytest.approx(0.25)
    assert poisson_truncated(zero_measure(), 0.4j, 0.7) == 0.0
    with pytest.raises(ValueError):
        poisson_truncated(lebesgue(), 0.1, 1.0)


def test_truncation_converges_monotonically():
    mu = combine([0.5, 0.5], [lebesgue(), dirac(1.0)])
    z = 0.6 * np.exp(0.4j)
    target = poisson_extension(mu, z)
    errs = [abs(poisson_truncated(mu, z, r) - target) for r in (0.9, 0.99, 0.999, 0.99999)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-4
    zs = 0.9 * np.exp(1j * np.linspace(0, 6, 7))
    tail = np.abs(poisson_truncated(mu, zs, 1 - 1e-9) - poisson_extension(mu, zs))
    assert tail.max() < 1e-6


def test_sampled_density_matches_quadrature():
    # oracle: brute-force Poisson integral of the sampled trigonometric density
    dens = lambda t: 1.0 + 0.5 * np.cos(t) + 0.25 * np.sin(3 * t)
    mu = from_density_function(dens, n=64)
    z = 0.4 + 0.3j
    t = 2 * np.pi * np.arange(4096) / 4096
    brute = np.mean((1 - abs(z) ** 2) / np.abs(np.exp(1j * t) - z) ** 2 * dens(t))
    assert poisson_extension(mu, z) == pytest.approx(brute, rel=1e-12)


def test_fourier_of_dirac():
    c = dirac(np.pi / 2).fourier(3)
    assert np.allclose(c, [1, -1j, -1, 1j])


def test_measure_validation():
    with pytest.raises(ValueError):
        CircleMeasure([0.0], [-1.0])
    with pytest.raises(ValueError):
        Density("constant", value=-1.0)


@given(disk_pt)
def test_positivity(z):
    mu = combine([0.3, 0.7], [lebesgue(), dirac(2.0)])
    assert poisson_extension(mu, z) > 0


@given(disk_pt, st.floats(0, 2 * np.pi), st.floats(0.1, 3.0))
def test_linearity(z, angle, w):
    a, b = lebesgue(), dirac(angle, w)
    both = combine([1.0, 1.0], [a, b])
    assert poisson_extension(both, z) == pytest.approx(poisson_extension(a, z) + poisson_extension(b, z), rel=1e-12)


@given(st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.8), st.floats(0, 2 * np.pi)))
def test_mean_value_residual_is_second_order(z):
    mu = combine([0.5, 0.5], [dirac(0.3), from_density_function(lambda t: 1 + np.cos(2 * t), 32)])
    t = 2 * np.pi * np.arange(64) / 64
    res = []
    for h in (0.02, 0.01):
        avg = np.mean(poisson_extension(mu, z + h * np.exp(1j * t)))
        res.append(abs(avg - poisson_extension(mu, z)))
    # harmonic: the circle mean is exact, so residuals sit at round-off
    assert max(res) < 1e-10
