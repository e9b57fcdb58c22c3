import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirichlet_spaces.quadrature import (
    QuadratureError,
    ball_area,
    ball_transplant,
    build_circle_rule,
    build_disk_rule,
    hyperbolic_ring_rule,
    integrate,
)


def test_disk_rule_examples():
    assert integrate(build_disk_rule(0.0), lambda z: np.ones(z.shape)) == pytest.approx(1.0, rel=1e-13)
    assert integrate(build_disk_rule(0.0), lambda z: np.abs(z) ** 2) == pytest.approx(0.5, rel=1e-13)
    assert integrate(build_disk_rule(1.0), lambda z: np.ones(z.shape)) == pytest.approx(0.5, rel=1e-13)
    with pytest.raises(ValueError):
        build_disk_rule(-1.0)


@given(st.floats(-0.95, 6.0))
def test_total_weight(sigma):
    r = build_disk_rule(sigma, 16, 8)
    assert np.sum(r.weights) == pytest.approx(1.0 / (sigma + 1.0), rel=1e-12)
    assert np.all(np.abs(r.nodes) < 1)


def test_integrate_examples():
    r = build_disk_rule(0.0, 8, 16)
    assert integrate(r, lambda z: 2.5 * np.ones(z.shape)) == pytest.approx(2.5)
    assert abs(integrate(r, lambda z: z)) < 1e-15
    c = build_circle_rule(32)
    assert integrate(c, lambda z: np.abs(z ** 7) ** 2) == pytest.approx(1.0)


def test_integrate_names_bad_node():
    r = build_disk_rule(0.0, 4, 8)
    vals = np.ones(r.size)
    vals[5] = np.nan
    with pytest.raises(QuadratureError, match="node 5"):
        integrate(r, vals)


def test_circle_rule_exactness():
    c = build_circle_rule(16)
    for k in range(1, 8):
        assert abs(integrate(c, lambda z: z ** k)) < 1e-14


def test_ball_transplant_examples():
    base = build_disk_rule(0.0, 32, 64)
    b = ball_transplant(base, 0.0, np.log(3.0))
    assert np.sum(b.weights) == pytest.approx(0.25, rel=1e-12)
    b = ball_transplant(base, 0.8, 1.0)
    s = np.tanh(0.5)
    closed = s * s * 0.36 ** 2 / (1 - s * s * 0.64) ** 2
    assert np.sum(b.weights) == pytest.approx(closed, rel=1e-10)
    assert closed == pytest.approx(0.03714, abs=1e-5)
    assert ball_area(0.8, 1.0) == pytest.approx(closed, rel=1e-14)
    # independent oracle: indicator of the ball on a fine plain rule
    fine = build_disk_rule(0.0, 400, 800)
    phi = np.abs((0.8 - fine.nodes) / (1 - 0.8 * fine.nodes))
    assert np.sum(fine.weights[phi < s]) == pytest.approx(closed, rel=2e-2)
    with pytest.raises(ValueError):
        ball_transplant(base, 1.0, 1.0)


def test_transplant_matches_restricted_rule():
    g = lambda z: np.exp(z) * np.conj(z) + np.abs(z) ** 4
    R = 1.0
    s = np.tanh(R / 2)
    b = ball_transplant(build_disk_rule(0.0, 24, 48), 0.0, R)
    # a plain rule on the disk of radius s: scale nodes by s, weights by s^2
    ref = build_disk_rule(0.0, 24, 48)
    direct = np.sum(ref.weights * s * s * g(s * ref.nodes))
    assert integrate(b, g) == pytest.approx(direct, rel=1e-12)


def test_ball_area_comparable_to_square_weight():
    R = 0.8
    r = 1 - np.logspace(-1, -8, 8)
    q = ball_area(r, R) / (1 - r ** 2) ** 2
    s = np.tanh(R / 2)
    assert np.all(q >= s * s * (1 - 1e-12))
    assert np.all(q <= s * s / (1 - s * s) ** 2 * (1 + 1e-12))


def test_spectral_convergence():
    g = lambda z: np.abs(np.exp(2 * z) + z ** 3) ** 2
    a = integrate(build_disk_rule(0.0, 32, 64), g)
    b = integrate(build_disk_rule(0.0, 64, 128), g)
    assert abs(a - b) < 1e-10


def test_ring_rule_area():
    r = hyperbolic_ring_rule(0.9, 0.2)
    assert np.sum(r.weights) == pytest.approx(0.81, rel=1e-12)
    assert np.all(np.abs(r.nodes) <= 0.9)
