"""Polynomials plus binomial-kernel atoms gamma*(1 - conj(a) z)^(-b).

The class is closed under differentiation and under finite linear
combinations, which is all the decomposition machinery needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, poch

MAX_ATOM_RADIUS = 1.0 - 1e-12
MERGE_TOL = 1e-14
_BLOCK = 1 << 22


def _as_complex_1d(x) -> np.ndarray:
    out = np.atleast_1d(np.asarray(x, dtype=complex)).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class AnalyticFunction:
    """f(z) = sum_k poly[k] z^k + sum_j gamma_j ((1 - conj(a_j) z)^(-b_j) - offset_j)."""

    poly: np.ndarray
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        poly = _as_complex_1d(self.poly) if np.size(self.poly) else _as_complex_1d([0.0])
        a = _as_complex_1d(self.a) if np.size(self.a) else np.zeros(0, complex)
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).copy() if np.size(self.b) else np.zeros(0)
        g = _as_complex_1d(self.gamma) if np.size(self.gamma) else np.zeros(0, complex)
        off = np.atleast_1d(np.asarray(self.offset, dtype=bool)).copy() if np.size(self.offset) else np.zeros(0, bool)
        if not (a.shape == b.shape == g.shape == off.shape):
            raise ValueError("atom field arrays must have equal length")
        if np.any(np.abs(a) >= MAX_ATOM_RADIUS):
            raise ValueError("atom centers must satisfy |a| < 1 - 1e-12")
        if np.any(b <= 0) or not np.all(np.isfinite(b)):
            raise ValueError("atom powers must be finite and > 0")
        if not (np.all(np.isfinite(poly)) and np.all(np.isfinite(g))):
            raise ValueError("coefficients must be finite")
        for arr in (a, b, g, off):
            arr.setflags(write=False)
        object.__setattr__(self, "poly", poly)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "offset", off)

    # -- basic queries --------------------------------------------------

    @property
    def n_atoms(self) -> int:
        return int(self.a.size)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.poly)
        return int(nz[-1]) if nz.size else 0

    def is_zero(self) -> bool:
        return not np.any(self.poly) and not np.any(self.gamma)

    def value_at_zero(self) -> complex:
        return complex(self.poly[0] + np.sum(self.gamma[~self.offset]))

    def __call__(self, z):
        return evaluate(self, z)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, AnalyticFunction):
            other = constant(other)
        return linear_combine([1.0, 1.0], [self, other])

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, AnalyticFunction):
            other = constant(other)
        return linear_combine([1.0, -1.0], [self, other])

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__


# -- constructors -----------------------------------------------------------


def polynomial(coeffs: Sequence[complex]) -> AnalyticFunction:
    return AnalyticFunction(np.asarray(coeffs, complex), [], [], [], [])


def constant(c: complex) -> AnalyticFunction:
    return polynomial([c])


def zero() -> AnalyticFunction:
    return polynomial([0.0])


def monomial(n: int, c: complex = 1.0) -> AnalyticFunction:
    p = np.zeros(n + 1, complex)
    p[n] = c
    return polynomial(p)


def atoms(a, b, gamma, offset=False, poly=(0.0,)) -> AnalyticFunction:
    a = np.atleast_1d(np.asarray(a, complex))
    b = np.broadcast_to(np.asarray(b, float), a.shape)
    gamma = np.broadcast_to(np.asarray(gamma, complex), a.shape)
    offset = np.broadcast_to(np.asarray(offset, bool), a.shape)
    return AnalyticFunction(np.asarray(poly, complex), a, b, gamma, offset)


# -- evaluation ---------------------------------------------------------------


def _horner(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.zeros(z.shape, complex)
    for ck in c[::-1]:
        acc = acc * z + ck
    return acc


def _neg_power(base: np.ndarray, b: float) -> np.ndarray:
    """base^(-b) on the principal branch; integer and half-integer b avoid pow()."""
    twice = 2.0 * b
    if twice == round(twice) and twice <= 64:
        n = int(round(twice))
        out = 1.0 / np.sqrt(base) if n % 2 else np.ones_like(base)
        inv = 1.0 / base
        k = n // 2
        while k:  # square-and-multiply
            if k & 1:
                out = out * inv
            inv = inv * inv
            k >>= 1
        return out
    return np.power(base, -b)


def _atom_sum(a, b, g, z) -> np.ndarray:
    """sum_j g_j (1 - conj(a_j) z)^(-b_j) at the points z (1-d)."""
    out = np.zeros(z.shape, complex)
    ca = np.conj(a)
    for bv in np.unique(b):
        sel = b == bv
        cs, gs = ca[sel], g[sel]
        step = max(1, _BLOCK // max(1, cs.size))
        for s in range(0, z.size, step):
            blk = z[s : s + step]
            base = 1.0 - blk[:, None] * cs[None, :]
            out[s : s + blk.size] += _neg_power(base, bv) @ gs
    return out


def evaluate(f: AnalyticFunction, z):
    """Pointwise value of f on the closed disk."""
    z = np.asarray(z, complex)
    if np.any(~np.isfinite(z)) or np.any(np.abs(z) > 1.0 + 1e-14):
        raise ValueError("evaluation requires |z| <= 1")
    scalar = z.ndim == 0
    flat = np.atleast_1d(z).reshape(-1)
    out = _horner(f.poly, flat)
    if f.n_atoms:
        out = out + _atom_sum(f.a, f.b, f.gamma, flat) - np.sum(f.gamma[f.offset])
    out = out.reshape(np.atleast_1d(z).shape)
    return complex(out[0]) if scalar else out


# -- structural operations -----------------------------------------------------


def derivative(f: AnalyticFunction, n: int = 1) -> AnalyticFunction:
    """n-th derivative, in closed form within the representation."""
    if n < 0:
        raise ValueError("derivative order must be >= 0")
    if n == 0:
        return f
    p = f.poly
    if p.size > n:
        k = np.arange(n, p.size)
        dp = p[n:] * poch(k - n + 1.0, n)
    else:
        dp = np.zeros(1, complex)
    if f.n_atoms:
        g = f.gamma * poch(f.b, n) * np.conj(f.a) ** n
        keep = g != 0
        return AnalyticFunction(dp, f.a[keep], f.b[keep] + n, g[keep], np.zeros(int(keep.sum()), bool))
    return AnalyticFunction(dp, [], [], [], [])


def subtract_value_at_zero(f: AnalyticFunction) -> AnalyticFunction:
    """f - f(0): atoms become offset atoms and the constant term is dropped."""
    p = f.poly.copy()
    p[0] = 0.0
    return AnalyticFunction(p, f.a, f.b, f.gamma, np.ones(f.n_atoms, bool))


def scale(f: AnalyticFunction, c: complex) -> AnalyticFunction:
    return AnalyticFunction(f.poly * c, f.a, f.b, f.gamma * c, f.offset)


def _merge(a, b, g, off):
    if a.size == 0:
        return a, b, g, off
    q = MERGE_TOL
    keys = np.stack([np.round(a.real / q), np.round(a.imag / q), np.round(b / q), off.astype(float)], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    first = np.full(uniq.shape[0], a.size)
    np.minimum.at(first, inv, np.arange(a.size))
    gs = np.zeros(uniq.shape[0], complex)
    np.add.at(gs, inv, g)
    order = np.argsort(first)
    a, b, off, gs = a[first[order]], b[first[order]], off[first[order]], gs[order]
    keep = gs != 0
    return a[keep], b[keep], gs[keep], off[keep]


def linear_combine(coeffs: Sequence[complex], fs: Sequence[AnalyticFunction], merge: bool = True) -> AnalyticFunction:
    """sum_i c_i f_i, merging atoms with identical (a, b, offset)."""
    if len(coeffs) != len(fs):
        raise ValueError("coefficient and function lists differ in length")
    if not fs:
        return zero()
    n = max(f.poly.size for f in fs)
    p = np.zeros(n, complex)
    for c, f in zip(coeffs, fs):
        p[: f.poly.size] += c * f.poly
    a = np.concatenate([f.a for f in fs])
    b = np.concatenate([f.b for f in fs])
    g = np.concatenate([c * f.gamma for c, f in zip(coeffs, fs)])
    off = np.concatenate([f.offset for f in fs])
    if merge:
        a, b, g, off = _merge(a, b, g, off)
    nz = np.flatnonzero(p)
    p = p[: nz[-1] + 1] if nz.size else p[:1]
    return AnalyticFunction(p, a, b, g, off)


# -- Taylor coefficients -------------------------------------------------------


def _log_binom(b, k):
    """log((b)_k / k!), broadcasting."""
    return gammaln(b + k) - gammaln(b) - gammaln(k + 1.0)


def required_degree(f: AnalyticFunction, tol: float = 1e-17, cap: int = 1 << 17) -> int:
    """Number of Taylor terms after which every atom's tail is below tol * |gamma|."""
    n = f.poly.size
    if not f.n_atoms:
        return n
    r = np.abs(f.a)
    r = r[f.gamma != 0] if np.any(f.gamma != 0) else r
    bb = f.b[f.gamma != 0] if np.any(f.gamma != 0) else f.b
    if r.size == 0 or r.max() == 0:
        return max(n, 1)
    worst = 0
    for rv, bv in {(float(x), float(y)) for x, y in zip(r, bb)}:
        if rv == 0:
            continue
        k = np.arange(1, cap + 1, dtype=float)
        peak = max(1.0, (bv - 1.0) * rv / (1.0 - rv))
        tail = _log_binom(bv, k) + k * np.log(rv) - np.log1p(-rv)
        ok = np.flatnonzero((tail < np.log(tol)) & (k > peak))
        if ok.size == 0:
            raise ValueError("atom too close to the unit circle for the Taylor cap")
        worst = max(worst, int(k[ok[0]]) + 1)
    return max(n, worst)


def taylor_coefficients(f: AnalyticFunction, K: int, rows: int = 256) -> np.ndarray:
    """First K Taylor coefficients of f at the origin."""
    out = np.zeros(K, complex)
    m = min(K, f.poly.size)
    out[:m] = f.poly[:m]
    if f.n_atoms:
        out += atom_taylor_matrix_apply(f.a, f.b, f.gamma, K, rows)
        out[0] -= np.sum(f.gamma[f.offset])
    return out


def atom_taylor_matrix_apply(a, b, g, K, rows=256) -> np.ndarray:
    """Taylor coefficients of sum_j g_j (1 - conj(a_j) z)^(-b_j), k < K."""
    out = np.zeros(K, complex)
    ca = np.conj(a)
    with np.errstate(divide="ignore"):
        loga = np.log(ca)
    zero_centre = ca == 0
    for s in range(0, K, rows):
        k = np.arange(s, min(K, s + rows), dtype=float)[:, None]
        expo = _log_binom(b[None, :], k) + np.where(zero_centre[None, :], 0.0, k * loga[None, :])
        M = np.exp(expo)
        if np.any(zero_centre):
            M[:, zero_centre] = (k == 0).astype(float)
        out[s : s + k.shape[0]] = M @ g
    return out


def from_taylor(c: np.ndarray) -> AnalyticFunction:
    return polynomial(c)


def hardy_norm_sq(f: AnalyticFunction) -> float:
    """||f||^2 in H^2; exact for polynomials, circle quadrature otherwise."""
    if not f.n_atoms:
        return float(np.sum(np.abs(f.poly) ** 2))
    from .quadrature import build_circle_rule, integrate

    K = required_degree(f)
    n = 1 << int(np.ceil(np.log2(max(16, 2 * K + 2))))
    rule = build_circle_rule(n)
    vals = np.abs(evaluate(f, rule.points)) ** 2
    return float(integrate(rule, vals).real)
