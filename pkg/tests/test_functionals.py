import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirichlet_spaces import analytic as an
from dirichlet_spaces import functionals as fn
from dirichlet_spaces.measure import combine, dirac, lebesgue, zero_measure

m = lebesgue()
d0 = dirac(0.0)
coef = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)


def mo_z_exact(z):
    # f = z: MO^2 = (1-|z|^2)^2 sum_k |z|^(2k)/(k+2)
    r2 = abs(z) ** 2
    k = np.arange(4000)
    return np.sqrt((1 - r2) ** 2 * np.sum(r2 ** k / (k + 2)))


def test_seminorm_examples():
    for n in (1, 4, 8):
        assert fn.dirichlet_seminorm_sq(an.monomial(n), m) == pytest.approx(n, rel=1e-12)
    assert fn.dirichlet_seminorm_sq(an.constant(3.0), d0) == 0.0
    assert fn.dirichlet_seminorm_sq(an.monomial(1), zero_measure()) == 0.0


def test_full_norm_examples():
    assert fn.full_norm_sq(an.monomial(1), zero_measure()) == pytest.approx(1.0)
    assert fn.full_norm_sq(an.constant(1.0), m) == pytest.approx(1.0)
    assert fn.full_norm_sq(an.monomial(1), m) == pytest.approx(2.0)
    assert fn.full_norm_sq(an.polynomial([2, 1]), m, equivalent=True) == pytest.approx(5.0)


def test_local_dirichlet_examples():
    for n in (1, 3, 6):
        for lam in np.exp(1j * np.array([0.0, 1.3, 4.0])):
            assert fn.local_dirichlet(an.monomial(n), lam) == pytest.approx(n, rel=1e-12)
    assert fn.local_dirichlet(an.constant(2.0), 1j) == 0.0
    assert fn.local_dirichlet(an.monomial(2), 1.0) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        fn.local_dirichlet(an.monomial(1), 0.5)


def test_local_dirichlet_taylor_agrees_with_quadrature():
    f = an.atoms([0.5 + 0.2j], 2.0, 1.0, poly=[0, 1, 0.3j])
    lam = np.exp(0.7j)
    K = an.required_degree(f)
    assert fn.local_dirichlet_taylor(an.taylor_coefficients(f, K), lam)[0] == pytest.approx(fn.local_dirichlet(f, lam), rel=1e-10)


def test_richter_sundberg_examples():
    assert fn.richter_sundberg_residual(an.monomial(3), m) < 1e-8
    assert fn.richter_sundberg_residual(an.monomial(1), d0) < 1e-6
    assert fn.richter_sundberg_residual(an.constant(1.0), d0) == 0.0


@given(st.lists(coef, min_size=2, max_size=8), st.floats(0, 2 * np.pi), st.floats(0.1, 2.0))
def test_richter_sundberg_property(cs, angle, w):
    f = an.polynomial(cs)
    mu = combine([1.0, w], [m, dirac(angle)])
    assert fn.richter_sundberg_residual(f, mu) < 1e-6


@given(st.lists(coef, min_size=2, max_size=6), st.floats(0, 2 * np.pi))
def test_seminorm_linear_in_measure(cs, angle):
    f = an.polynomial(cs)
    a, b = m, dirac(angle)
    both = combine([2.0, 0.5], [a, b])
    lhs = fn.dirichlet_seminorm_sq(f, both)
    rhs = 2.0 * fn.dirichlet_seminorm_sq(f, a) + 0.5 * fn.dirichlet_seminorm_sq(f, b)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_double_integral_examples():
    assert fn.double_integral(an.constant(2.0), d0, 0.5, 1.0) == 0.0
    # exact value 1 for f = z, mu = m, sigma = tau = 0
    base = fn.double_integral(an.monomial(1), m, 0.0, 0.0)
    fine = fn.double_integral(an.monomial(1), m, 0.0, 0.0, outer=fn.cached_disk_rule(0.0, 64, 256))
    assert abs(base - 1.0) < 2e-3
    assert abs(fine - 1.0) < abs(base - 1.0)
    assert abs(fine / base - 1.0) < 0.05
    mixed = fn.double_integral(an.monomial(1), m, 1.0, 0.0, outer=fn.cached_disk_rule(1.0, *fn.OUTER_DBL))
    top = fn.double_integral(an.monomial(1), m, 1.0, 1.0, outer=fn.cached_disk_rule(1.0, *fn.OUTER_DBL))
    assert min(base, top) <= mixed <= max(base, top)


@pytest.mark.parametrize("sigma,tau", [(0.5, 0.5), (1.0, 0.0), (0.0, 1.0)])
def test_double_integral_tensor_matches_spectral(sigma, tau):
    # away from the boundary, where the tensor inner rule resolves f o phi_z
    f = an.polynomial([0, 1, 0.5j, -0.2])
    outer = fn.cached_disk_rule(sigma, 12, 24).restrict(0.6)
    spec = fn.double_integral_profile(f, sigma, tau, outer)
    tens = fn.double_integral_profile(f, sigma, tau, outer, fn.cached_disk_rule(tau, 48, 96), method="tensor")
    assert np.allclose(tens, spec, rtol=1e-8)


def test_cost_guard():
    with pytest.raises(fn.CostGuardError):
        fn.pullback_energy(an.monomial(1), np.zeros(10), budget=10)


def test_mean_oscillation_examples():
    assert fn.mean_oscillation(an.constant(1.0), 0.3) == 0.0
    assert fn.mean_oscillation(an.monomial(1), 0.0) == pytest.approx(np.sqrt(0.5), rel=1e-12)
    for z in (0.5, 0.3 - 0.6j, 0.95j):
        assert fn.mean_oscillation(an.monomial(1), z) == pytest.approx(mo_z_exact(z), rel=1e-10)
    # the quadrature path agrees with the spectral one
    z = 0.4 + 0.1j
    f = an.polynomial([0, 1, 0.3, 0.2j])
    assert fn.mean_oscillation(f, z, fn.cached_disk_rule(0.0, 32, 64)) == pytest.approx(fn.mean_oscillation(f, z), rel=1e-10)
    assert fn.mo_kernel_form(f, z, fn.cached_disk_rule(0.0, 128, 256)) == pytest.approx(fn.mean_oscillation(f, z) ** 2, rel=1e-6)


def test_mo_dominates_gradient():
    # g = f o phi_z - f(z) has |g'(0)| = (1-|z|^2)|f'(z)| and int |g|^2 dA >= |g'(0)|^2 / 2
    zs = 0.8 * np.exp(1j * np.linspace(0, 6, 13)) * np.linspace(0.1, 1, 13)
    for f in (an.monomial(3), an.atoms([0.5], 1.0, 1.0), an.monomial(1)):
        grad = (1 - np.abs(zs) ** 2) * np.abs(an.evaluate(an.derivative(f, 1), zs))
        assert np.all(fn.mean_oscillation_many(f, zs) >= grad / np.sqrt(2) * (1 - 1e-12))


def test_unit_constant_gradient_bound_fails_in_normalized_area():
    # without the 1/sqrt(2) the bound fails: z^3 at |z| = 0.6
    z = 0.6
    f = an.monomial(3)
    grad = (1 - z * z) * 3 * z * z
    assert fn.mean_oscillation(f, z) < grad


def test_local_oscillation_examples():
    c = an.constant(2.0 - 1j)
    assert fn.ball_average(c, 0.3, 1.0) == pytest.approx(2.0 - 1j)
    assert fn.mean_oscillation_r(c, 0.3, 1.0) == pytest.approx(0.0, abs=1e-12)
    f = an.monomial(2)
    v = fn.mean_oscillation_r(f, 0.3, 1.0, fn.cached_disk_rule(0.0, 16, 32))
    p = fn.mean_oscillation_r(f, 0.3, 1.0, fn.cached_disk_rule(0.0, 16, 32), method="pairs")
    assert abs(v - p) < 1e-9
    zs = np.array([0.3, -0.5j, 0.7 + 0.1j])
    many = fn.mean_oscillation_r_many(f, zs, 1.0)
    assert np.allclose(many, [fn.mean_oscillation_r(f, z, 1.0) for z in zs], rtol=1e-12)
    assert np.all(many <= fn.mean_oscillation_many(f, zs))


def test_mo_seminorm_examples():
    assert fn.mo_seminorm_sq(an.constant(1.0), m) == 0.0
    z = an.monomial(1)
    mo = fn.mo_seminorm_sq(z, m, "MO")
    mo_r = fn.mo_seminorm_sq(z, m, "MO_r", 1.0)
    assert 0 < mo_r <= mo
    fine = fn.mo_seminorm_sq(z, m, "MO", outer=fn.cached_disk_rule(0.0, 64, 256))
    assert abs(fine / mo - 1) < 0.05
    # f = z: int MO^2 dA/(1-|z|^2)^2 = sum 1/((k+1)(k+2)) = 1
    assert fine == pytest.approx(1.0, abs=1e-3)


def test_higher_order_examples():
    f = an.atoms([0.5j], 2.0, 1.0, poly=[0, 1, 0.5])
    assert fn.higher_order_seminorm_sq(f, d0, 0) == fn.dirichlet_seminorm_sq(f, d0)
    assert fn.higher_order_seminorm_sq(an.monomial(2), m, 1) == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert fn.higher_order_seminorm_sq(an.constant(5.0), d0, 2) == 0.0
    with pytest.raises(ValueError):
        fn.higher_order_seminorm_sq(f, m, 1, fn.cached_disk_rule(0.0))


def test_monotone_blowup_toward_atom():
    rows = []
    for a in (0.3, 0.6, 0.8):
        f = an.atoms([a], 1.0, 1.0)
        rows.append(
            [
                fn.dirichlet_seminorm_sq(f, d0),
                fn.double_integral(f, d0, 0.0, 0.0),
                fn.mo_seminorm_sq(f, d0, "MO"),
                fn.higher_order_seminorm_sq(f, d0, 1),
            ]
        )
    rows = np.array(rows)
    assert np.all(np.diff(rows, axis=0) > 0)


def test_threads_do_not_change_results():
    f = an.polynomial([0, 1, 0.2, 0.1j])
    outer = fn.cached_disk_rule(0.0, 12, 24)
    inner = fn.cached_disk_rule(0.0, 8, 16)
    a = fn.double_integral(f, d0, 0.0, 0.0, outer, inner, threads=1, method="tensor")
    b = fn.double_integral(f, d0, 0.0, 0.0, outer, inner, threads=3, method="tensor")
    assert abs(a - b) <= 1e-13 * abs(a)


def test_norm_report_format():
    rep = fn.norm_report(an.monomial(1), m, "z", "m", include_double=False)
    d = rep.to_dict(timings=False)
    names = [r["functional"] for r in d["rows"]]
    assert "dirichlet_seminorm_sq" in names
    row = d["rows"][names.index("dirichlet_seminorm_sq")]
    assert abs(row["value"] - 1) < 1e-8
    assert all("ratio_to_seminorm" in r for r in d["rows"])
    assert json.loads(rep.to_json(timings=False)) == d
    csv_text = rep.to_csv(timings=False)
    assert csv_text.splitlines()[0] == "functional,value,resolution,ratio_to_seminorm"
    const = fn.norm_report(an.constant(1.0), m, include_double=False).to_dict(False)
    for r in const["rows"]:
        if r["functional"] not in ("hardy_norm_sq", "full_norm_sq"):
            assert r["value"] == 0.0
