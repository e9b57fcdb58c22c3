"""Norms, seminorms and identity probes for D(mu)."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional

import numpy as np
from scipy.special import gammaln

from .analytic import (
    AnalyticFunction,
    derivative,
    evaluate,
    hardy_norm_sq,
    required_degree,
    taylor_coefficients,
)
from .measure import CircleMeasure, poisson_band, poisson_extension
from .quadrature import (
    DEFAULT_NR,
    DEFAULT_NTHETA,
    CircleRule,
    DiskRule,
    ball_transplant,
    build_circle_rule,
    build_disk_rule,
    integrate,
)

DEFAULT_CAP = 5.0e8
OUTER_DBL = (32, 128)
INNER_DBL = (16, 32)


class CostGuardError(RuntimeError):
    pass


@lru_cache(maxsize=64)
def cached_disk_rule(sigma: float = 0.0, nr: int = DEFAULT_NR, ntheta: int = DEFAULT_NTHETA) -> DiskRule:
    return build_disk_rule(float(sigma), int(nr), int(ntheta))


def poisson_at_nodes(mu: CircleMeasure, rule: DiskRule, mode: str = "auto") -> np.ndarray:
    """P_mu at rule nodes.

    ``banded`` keeps the harmonic series of P_mu up to the angular Nyquist
    frequency of a tensor rule, so that products with low-frequency
    integrands are integrated exactly in angle; ``pointwise`` evaluates P_mu.
    """
    if mode == "auto":
        mode = "banded" if rule.kind == "tensor" else "pointwise"
    if mode == "pointwise":
        return poisson_extension(mu, rule.nodes)
    if mode != "banded":
        raise ValueError(f"unknown Poisson mode {mode!r}")
    ntheta = rule.resolution[1]
    return poisson_band(mu, rule.nodes, max(1, ntheta // 2))


# -- Dirichlet seminorm and friends --------------------------------------------


def dirichlet_seminorm_sq(f: AnalyticFunction, mu: CircleMeasure, rule: Optional[DiskRule] = None, poisson: str = "auto") -> float:
    """int |f'|^2 P_mu dA by quadrature."""
    rule = rule or cached_disk_rule(0.0)
    if rule.sigma != 0:
        raise ValueError("dirichlet_seminorm_sq needs a plain dA rule")
    return _weighted_derivative_integral(f, mu, 0, rule, poisson)


def _weighted_derivative_integral(f, mu, n, rule, poisson):
    df = derivative(f, n + 1)
    if df.is_zero() or mu.is_zero:
        return 0.0
    vals = np.abs(evaluate(df, rule.nodes)) ** 2 * poisson_at_nodes(mu, rule, poisson)
    return float(integrate(rule, vals).real)


def higher_order_seminorm_sq(f: AnalyticFunction, mu: CircleMeasure, n: int, rule: Optional[DiskRule] = None, poisson: str = "auto") -> float:
    """int |f^(n+1)|^2 (1-|z|^2)^(2n) P_mu dA, with the weight absorbed by the rule."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if rule is None:
        rule = cached_disk_rule(float(2 * n))
    if abs(rule.sigma - 2 * n) > 1e-14:
        raise ValueError(f"rule must carry sigma = 2n = {2 * n}")
    return _weighted_derivative_integral(f, mu, n, rule, poisson)


def full_norm_sq(f: AnalyticFunction, mu: CircleMeasure, rule: Optional[DiskRule] = None, equivalent: bool = False) -> float:
    """||f||_H2^2 + seminorm; with ``equivalent`` use |f(0)|^2 + seminorm."""
    semi = dirichlet_seminorm_sq(f, mu, rule)
    head = abs(f.value_at_zero()) ** 2 if equivalent else hardy_norm_sq(f)
    return float(head + semi)


# -- local Dirichlet integrals --------------------------------------------------


def _circle_size(f: AnalyticFunction, extra: int = 0) -> int:
    K = required_degree(f)
    return 1 << int(np.ceil(np.log2(max(64, 4 * K + extra + 2))))


def local_dirichlet(f: AnalyticFunction, lam: complex, rule: Optional[CircleRule] = None) -> float:
    """(1/2pi) int |(f(e^it) - f(lam))/(e^it - lam)|^2 dt by circle quadrature."""
    lam = complex(lam)
    if abs(abs(lam) - 1.0) > 1e-12:
        raise ValueError("lambda must be unimodular")
    rule = rule or build_circle_rule(_circle_size(f))
    zeta = rule.points
    diff = zeta - lam
    fl = evaluate(f, lam)
    df = derivative(f, 1)
    near = np.abs(diff) < 1e-6
    q = np.empty(zeta.shape, complex)
    far = ~near
    q[far] = (evaluate(f, zeta[far]) - fl) / diff[far]
    if np.any(near):
        # second-order Taylor expansion across the removable singularity
        q[near] = evaluate(df, lam) + 0.5 * evaluate(derivative(f, 2), lam) * diff[near]
    return float(integrate(rule, np.abs(q) ** 2).real)


def local_dirichlet_taylor(coeffs: np.ndarray, zetas) -> np.ndarray:
    """D_zeta(f) = sum_k |sum_{m>k} f_m zeta^m|^2 for unimodular zetas, from Taylor data."""
    c = np.asarray(coeffs, complex)
    zetas = np.atleast_1d(np.asarray(zetas, complex))
    K = c.size
    out = np.zeros(zetas.shape)
    if K < 2:
        return out
    pw = zetas ** (K - 1)
    cz = np.conj(zetas)
    S = np.zeros(zetas.shape, complex)
    for m in range(K - 1, 0, -1):
        S = S + c[m] * pw
        out += np.abs(S) ** 2
        pw = pw * cz
    return out


def boundary_seminorm_sq(f: AnalyticFunction, mu: CircleMeasure, K: Optional[int] = None) -> float:
    """int D_zeta(f) dmu(zeta): atoms exactly, density by circle quadrature."""
    K = K or required_degree(f)
    c = taylor_coefficients(f, K)
    return boundary_seminorm_sq_coeffs(c, mu)


def boundary_seminorm_sq_coeffs(c: np.ndarray, mu: CircleMeasure) -> float:
    K = c.size
    total = 0.0
    if mu.masses.size:
        total += float(local_dirichlet_taylor(c, np.exp(1j * mu.angles)) @ mu.masses)
    d = mu.density
    if d is not None:
        if d.kind == "constant":
            total += d.value * float(np.sum(np.arange(K) * np.abs(c) ** 2))
        else:
            n = 1 << int(np.ceil(np.log2(2 * K + d.samples.size + 2)))
            rule = build_circle_rule(n)
            dens = d(rule.angles)
            total += float(np.mean(local_dirichlet_taylor(c, rule.points) * dens))
    return total


def richter_sundberg_residual(f: AnalyticFunction, mu: CircleMeasure, rule: Optional[DiskRule] = None) -> float:
    """Relative gap between int D_zeta(f) dmu and int |f'|^2 P_mu dA (0 if both vanish)."""
    lhs = boundary_seminorm_sq(f, mu)
    rhs = dirichlet_seminorm_sq(f, mu, rule)
    scale = max(abs(lhs), abs(rhs))
    if scale < 1e-300:
        return 0.0
    return abs(lhs - rhs) / scale


# -- double integral ------------------------------------------------------------


def _convergence_radius(f: AnalyticFunction, z: complex) -> float:
    """Radius of analyticity in u of f(phi_z(u)) (and of (1 - conj(z)u)^p)."""
    rz = abs(z)
    rho = np.inf if rz == 0 else 1.0 / rz
    for a in f.a[f.gamma != 0]:
        if a == 0:
            continue
        pole = 1.0 / np.conj(a)  # singular point of (1 - conj(a) w)^-b
        u = (z - pole) / (1.0 - np.conj(z) * pole)
        rho = min(rho, abs(u))
    return rho


def _fft_size(rho: float, tol_log: float = 24.0, nmin: int = 64, nmax: int = 1 << 18) -> int:
    if not np.isfinite(rho):
        return nmin
    if rho <= 1.0:
        raise ValueError("pulled-back function is not analytic on the closed disk")
    n = tol_log / np.log(rho)
    return int(min(nmax, max(nmin, 1 << int(np.ceil(np.log2(n + 1))))))


def pullback_energy(
    f: AnalyticFunction,
    zs,
    tau: float = 0.0,
    power: float = 0.0,
    budget: float = DEFAULT_CAP,
) -> np.ndarray:
    """int |f(phi_z(u)) - f(z)|^2 |1 - conj(z)u|^(2 power) dA_tau(u) for each z, spectrally.

    With h(u) = (f(phi_z(u)) - f(z)) (1 - conj(z)u)^power analytic on the closed
    disk, the integral is sum_k |h_k|^2 B(k+1, tau+1).  The Taylor data come from
    an FFT on |u| = 1 whose length is set by the nearest singularity of h.
    """
    zs = np.atleast_1d(np.asarray(zs, complex))
    out = np.empty(zs.size)
    nsz = np.array([_fft_size(_convergence_radius(f, z)) for z in zs], dtype=np.int64)
    total = float(nsz.sum())
    if total > budget:
        raise CostGuardError(f"{total:.3g} spectral evaluations exceed the cap {budget:.3g}")
    sizes = {int(n): np.flatnonzero(nsz == n) for n in np.unique(nsz)}
    fz = evaluate(f, zs)
    for n, sel in sizes.items():
        u = np.exp(2j * np.pi * np.arange(n) / n)
        k = np.arange(n, dtype=float)
        beta = np.exp(gammaln(k + 1.0) + gammaln(tau + 1.0) - gammaln(k + tau + 2.0))
        step = max(1, int(2 ** 22 // n))
        for a in range(0, sel.size, step):
            idx = sel[a : a + step]
            zz = zs[idx, None]
            den = 1.0 - np.conj(zz) * u[None, :]
            w = (zz - u[None, :]) / den
            w = w / np.maximum(1.0, np.abs(w))  # |w| = 1 up to rounding
            h = evaluate(f, w) - fz[idx, None]
            if power != 0:
                h = h * np.power(den, power)
            c = np.fft.fft(h, axis=1) / n
            out[idx] = (np.abs(c) ** 2) @ beta
    return out




def _chunks(n: int, size: int):
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def _run_chunks(fn, chunks, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, chunks))
    return [fn(c) for c in chunks]


def double_integral_profile(
    f: AnalyticFunction,
    sigma: float,
    tau: float,
    outer: DiskRule,
    inner: Optional[DiskRule] = None,
    cap: float = DEFAULT_CAP,
    threads: int = 1,
    method: str = "spectral",
) -> np.ndarray:
    """Inner integral J(z) = int |f(z)-f(w)|^2 |1-conj(z)w|^-(4+sigma+tau) dA_tau(w) at outer nodes.

    The substitution w = phi_z(u) turns J into
    (1-|z|^2)^(-2-sigma) int |f(z) - f(phi_z(u))|^2 |1-conj(z)u|^(sigma-tau) dA_tau(u).
    ``spectral`` evaluates the u-integral from Taylor data; ``tensor`` uses
    the inner disk rule.
    """
    if abs(outer.sigma - sigma) > 1e-14:
        raise ValueError("outer rule must carry sigma")
    z = outer.nodes
    scale = (1.0 - np.abs(z) ** 2) ** (-2.0 - sigma)
    if method == "spectral":
        return pullback_energy(f, z, tau, 0.5 * (sigma - tau), cap) * scale
    if method != "tensor":
        raise ValueError(f"unknown method {method!r}")
    if inner is None or abs(inner.sigma - tau) > 1e-14:
        raise ValueError("tensor method needs an inner rule carrying tau")
    n_pairs = float(outer.size) * float(inner.size)
    if n_pairs > cap:
        raise CostGuardError(f"{n_pairs:.3g} kernel evaluations exceed the cap {cap:.3g}")
    fz = evaluate(f, z)
    u = inner.nodes
    wu = inner.weights
    step = max(1, int(2 ** 21 // max(1, u.size)))

    def work(rng):
        s, e = rng
        zz = z[s:e, None]
        den = 1.0 - np.conj(zz) * u[None, :]
        w = (zz - u[None, :]) / den
        g = np.abs(fz[s:e, None] - evaluate(f, w)) ** 2
        if sigma != tau:
            g = g * np.abs(den) ** (sigma - tau)
        return g @ wu

    parts = _run_chunks(work, _chunks(z.size, step), threads)
    return np.concatenate(parts) * scale


def double_integral(
    f: AnalyticFunction,
    mu: CircleMeasure,
    sigma: float,
    tau: float,
    outer: Optional[DiskRule] = None,
    inner: Optional[DiskRule] = None,
    cap: float = DEFAULT_CAP,
    threads: int = 1,
    profile: Optional[np.ndarray] = None,
    poisson: str = "auto",
    method: str = "spectral",
) -> float:
    """int int |f(z)-f(w)|^2 / |1-conj(z)w|^(4+sigma+tau) P_mu(z) dA_sigma(z) dA_tau(w)."""
    if sigma <= -1 or tau <= -1:
        raise ValueError("sigma and tau must be > -1")
    outer = outer or cached_disk_rule(float(sigma), *OUTER_DBL)
    if method == "tensor":
        inner = inner or cached_disk_rule(float(tau), *INNER_DBL)
    if derivative(f, 1).is_zero() or mu.is_zero:
        return 0.0
    if profile is None:
        profile = double_integral_profile(f, sigma, tau, outer, inner, cap, threads, method)
    vals = profile * poisson_at_nodes(mu, outer, poisson)
    return float(integrate(outer, vals).real)


# -- mean oscillation -----------------------------------------------------------


def mean_oscillation_many(f: AnalyticFunction, zs, rule: Optional[DiskRule] = None, threads: int = 1, cap: float = DEFAULT_CAP) -> np.ndarray:
    """MO f(z) = (int |f(phi_z(w)) - f(z)|^2 dA(w))^(1/2) for an array of z.

    Without a rule the integral is done spectrally (see pullback_energy);
    with one, by tensor quadrature in w.
    """
    zs = np.atleast_1d(np.asarray(zs, complex))
    if np.any(np.abs(zs) >= 1):
        raise ValueError("mean oscillation needs |z| < 1")
    if rule is None:
        return np.sqrt(pullback_energy(f, zs, 0.0, 0.0, cap))
    fz = evaluate(f, zs)
    w = rule.nodes
    step = max(1, int(2 ** 21 // max(1, w.size)))

    def work(rng):
        s, e = rng
        zz = zs[s:e, None]
        pts = (zz - w[None, :]) / (1.0 - np.conj(zz) * w[None, :])
        return (np.abs(evaluate(f, pts) - fz[s:e, None]) ** 2) @ rule.weights

    parts = _run_chunks(work, _chunks(zs.size, step), threads)
    return np.sqrt(np.concatenate(parts))


def mean_oscillation(f: AnalyticFunction, z: complex, rule: Optional[DiskRule] = None) -> float:
    return float(mean_oscillation_many(f, [z], rule)[0])


def _ball_values(f, z, r, rule):
    br = ball_transplant(rule, z, r)
    return evaluate(f, br.nodes), br.weights


def ball_average(f: AnalyticFunction, z: complex, r: float, rule: Optional[DiskRule] = None) -> complex:
    """Average of f over the Bergman ball B(z, r)."""
    rule = rule or cached_disk_rule(0.0, 32, 64)
    v, w = _ball_values(f, z, r, rule)
    return complex(np.sum(w * v) / np.sum(w))


def mean_oscillation_r(f: AnalyticFunction, z: complex, r: float, rule: Optional[DiskRule] = None, method: str = "variance") -> float:
    """Local mean oscillation on B(z, r).

    ``variance`` uses the two-pass variance of f over the ball; ``pairs``
    uses (1/(2|B|^2)) int_B int_B |f(u)-f(v)|^2 dA dA, which equals the
    variance.
    """
    rule = rule or cached_disk_rule(0.0, 32, 64)
    v, w = _ball_values(f, z, r, rule)
    area = np.sum(w)
    if method == "variance":
        mean = np.sum(w * v) / area
        return float(np.sqrt(max(0.0, np.sum(w * np.abs(v - mean) ** 2) / area)))
    if method == "pairs":
        d = np.abs(v[:, None] - v[None, :]) ** 2
        return float(np.sqrt(max(0.0, (w @ d @ w) / (2.0 * area * area))))
    raise ValueError(f"unknown method {method!r}")


def mean_oscillation_r_many(f: AnalyticFunction, zs, r: float, rule: Optional[DiskRule] = None) -> np.ndarray:
    rule = rule or cached_disk_rule(0.0, 32, 64)
    zs = np.atleast_1d(np.asarray(zs, complex))
    s = np.tanh(r / 2.0)
    u = s * rule.nodes
    out = np.empty(zs.size)
    step = max(1, int(2 ** 21 // max(1, u.size)))
    for a, b in _chunks(zs.size, step):
        zz = zs[a:b, None]
        den = 1.0 - np.conj(zz) * u[None, :]
        pts = (zz - u[None, :]) / den
        wts = rule.weights[None, :] / np.abs(den) ** 4
        v = evaluate(f, pts)
        area = wts.sum(axis=1, keepdims=True)
        mean = np.sum(wts * v, axis=1, keepdims=True) / area
        out[a:b] = np.sqrt(np.sum(wts * np.abs(v - mean) ** 2, axis=1) / area[:, 0])
    return out


def mo_seminorm_sq(
    f: AnalyticFunction,
    mu: CircleMeasure,
    variant: str = "MO",
    r: float = 1.0,
    outer: Optional[DiskRule] = None,
    inner: Optional[DiskRule] = None,
    poisson: str = "auto",
    threads: int = 1,
) -> float:
    """int (MO f)^2 P_mu dtau with dtau = dA/(1-|z|^2)^2 (or MO_r)."""
    outer = outer or cached_disk_rule(0.0, *OUTER_DBL)
    if derivative(f, 1).is_zero() or mu.is_zero:
        return 0.0
    if variant == "MO":
        mo = mean_oscillation_many(f, outer.nodes, inner, threads)
    elif variant == "MO_r":
        inner = inner or cached_disk_rule(0.0, 16, 32)
        mo = mean_oscillation_r_many(f, outer.nodes, r, inner)
    else:
        raise ValueError("variant must be 'MO' or 'MO_r'")
    vals = mo ** 2 * poisson_at_nodes(mu, outer, poisson) / (1.0 - np.abs(outer.nodes) ** 2) ** 2
    return float(integrate(outer, vals).real)


def mo_kernel_form(f: AnalyticFunction, z: complex, rule: Optional[DiskRule] = None) -> float:
    """int |f(w)-f(z)|^2 (1-|z|^2)^2/|1-conj(z)w|^4 dA(w), the kernel form of MO^2.

    Under normalized area this equals MO f(z)^2 exactly (no 2 pi)."""
    rule = rule or cached_disk_rule(0.0)
    w = rule.nodes
    z = complex(z)
    k = (1.0 - abs(z) ** 2) ** 2 / np.abs(1.0 - np.conj(z) * w) ** 4
    return float(integrate(rule, np.abs(evaluate(f, w) - evaluate(f, z)) ** 2 * k).real)


def pointwise_chain(f: AnalyticFunction, zs, r: float = 1.0, mo_rule=None, ball_rule=None) -> Dict[str, np.ndarray]:
    """(1-|z|^2)|f'(z)|, MO_r f(z) and MO f(z) at sample points."""
    zs = np.atleast_1d(np.asarray(zs, complex))
    grad = (1.0 - np.abs(zs) ** 2) * np.abs(evaluate(derivative(f, 1), zs))
    return {
        "grad": grad,
        "mo_r": mean_oscillation_r_many(f, zs, r, ball_rule),
        "mo": mean_oscillation_many(f, zs, mo_rule),
    }


# -- reports --------------------------------------------------------------------


@dataclass
class NormReport:
    function_id: str
    measure_id: str
    entries: Dict[str, dict] = field(default_factory=dict)

    def add(self, name: str, value: float, resolution, runtime: float):
        if not np.isfinite(value) or value < -1e-12:
            raise ValueError(f"functional {name} produced an invalid value {value}")
        self.entries[name] = {"value": float(max(value, 0.0)), "resolution": resolution, "runtime": float(runtime)}

    def ratios(self, base: str = "dirichlet_seminorm_sq") -> Dict[str, Optional[float]]:
        b = self.entries.get(base, {}).get("value")
        out = {}
        for k, e in self.entries.items():
            out[k] = (e["value"] / b) if b else None
        return out

    def to_dict(self, timings: bool = True) -> dict:
        ratios = self.ratios()
        rows = []
        for k, e in self.entries.items():
            row = {"functional": k, "value": e["value"], "resolution": e["resolution"], "ratio_to_seminorm": ratios[k]}
            if timings:
                row["runtime"] = e["runtime"]
            rows.append(row)
        return {"function": self.function_id, "measure": self.measure_id, "rows": rows}

    def to_json(self, timings: bool = True) -> str:
        return json.dumps(self.to_dict(timings), indent=2, sort_keys=True)

    def to_csv(self, timings: bool = True) -> str:
        buf = io.StringIO()
        cols = ["functional", "value", "resolution", "ratio_to_seminorm"] + (["runtime"] if timings else [])
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in self.to_dict(timings)["rows"]:
            row = dict(row)
            row["resolution"] = "x".join(str(x) for x in np.ravel(row["resolution"]))
            row["ratio_to_seminorm"] = "" if row["ratio_to_seminorm"] is None else repr(row["ratio_to_seminorm"])
            row["value"] = repr(row["value"])
            w.writerow(row)
        return buf.getvalue()


def norm_report(
    f: AnalyticFunction,
    mu: CircleMeasure,
    function_id: str = "f",
    measure_id: str = "mu",
    nr: int = DEFAULT_NR,
    ntheta: int = DEFAULT_NTHETA,
    include_double: bool = True,
    threads: int = 1,
) -> NormReport:
    rep = NormReport(function_id, measure_id)
    rule = cached_disk_rule(0.0, nr, ntheta)

    def timed(name, fn, res):
        t0 = time.perf_counter()
        v = fn()
        rep.add(name, v, res, time.perf_counter() - t0)

    timed("dirichlet_seminorm_sq", lambda: dirichlet_seminorm_sq(f, mu, rule), [nr, ntheta])
    timed("hardy_norm_sq", lambda: hardy_norm_sq(f), ["exact"])
    timed("full_norm_sq", lambda: full_norm_sq(f, mu, rule), [nr, ntheta])
    timed("boundary_local_dirichlet", lambda: boundary_seminorm_sq(f, mu), ["taylor"])
    if include_double:
        for s in (0.0, 0.5, 1.0):
            timed(f"double_integral_s{s:g}_t{s:g}", lambda s=s: double_integral(f, mu, s, s, threads=threads), [list(OUTER_DBL), "spectral"])
        timed("mo_seminorm_sq", lambda: mo_seminorm_sq(f, mu, "MO", threads=threads), [list(OUTER_DBL), "spectral"])
        timed("mo_r_seminorm_sq", lambda: mo_seminorm_sq(f, mu, "MO_r", 1.0), [list(OUTER_DBL), [16, 32]])
    for n in (1, 2, 3):
        timed(f"higher_order_n{n}", lambda n=n: higher_order_seminorm_sq(f, mu, n, cached_disk_rule(float(2 * n), nr, ntheta)), [nr, ntheta])
    return rep
