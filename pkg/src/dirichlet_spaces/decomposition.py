"""Atomic decomposition over a Bergman lattice.

Everything lives in normalized area.  With |D_j| the normalized cell area,
the discretized reproducing formula for g' integrates to

    A g(z) = sum_j g'(z_j) |D_j| (1-|z_j|^2)^(b-1) / conj(z_j) * (1 - conj(z_j) z)^(-b)

and the projected operator replaces the last factor by (1 - conj(z_j) z)^(-b) - 1.
Neumann iterates are held as Taylor polynomials, so no lattice-by-lattice
matrix is ever formed.  Cells only tile |z| <= R (the lattice's support
radius); the part of the reproducing integral over R < |w| < 1 is applied
exactly on Taylor data ("tail").  Synthesis uses the lattice atoms alone, so
the tail shows up in the reported residual.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import betainc

from . import analytic as an
from .analytic import AnalyticFunction, derivative, evaluate, required_degree, taylor_coefficients
from .functionals import boundary_seminorm_sq_coeffs, cached_disk_rule, dirichlet_seminorm_sq
from .hyperbolic import BergmanLattice, build_lattice
from .measure import CircleMeasure, poisson_extension
from .quadrature import ball_area, build_disk_rule

DEFAULT_B = 3.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_TERMS = 60


class NeumannDivergenceError(RuntimeError):
    """Term norms stopped decreasing; carries the norms seen so far."""

    def __init__(self, message: str, term_norms: Sequence[float]):
        super().__init__(message)
        self.term_norms = list(term_norms)


def _check_b(b: float) -> float:
    b = float(b)
    if not b > 2:
        raise ValueError(f"b must be > 2 (got {b})")
    return b


def _check_lattice(lattice: BergmanLattice):
    if not lattice.certified:
        raise ValueError("lattice is not certified")


# -- atoms ----------------------------------------------------------------------


def atom_function(lattice: BergmanLattice, j: int, b: float = DEFAULT_B) -> AnalyticFunction:
    """(1-|z_j|^2)^b ((1 - conj(z_j) z)^(-b) - 1) as an offset atom."""
    b = _check_b(b)
    zj = complex(lattice.points[j])
    return an.atoms([zj], b, (1.0 - abs(zj) ** 2) ** b, offset=True)


def atom(lattice: BergmanLattice, j: int, b: float, z):
    return evaluate(atom_function(lattice, j, b), z)


# -- Taylor-space machinery ----------------------------------------------------


def _atom_taylor(ca: np.ndarray, b: float, g: np.ndarray, K: int) -> np.ndarray:
    """Coefficients of sum_j g_j (1 - ca_j z)^(-b) for k < K, by the ratio recurrence."""
    out = np.empty(K, complex)
    term = g.astype(complex).copy()
    out[0] = term.sum()
    for k in range(1, K):
        term *= ca * ((b + k - 1.0) / k)
        out[k] = term.sum()
    return out


def _derivative_at(c: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """p'(pts) for the polynomial with coefficients c, by Horner."""
    K = c.size
    acc = np.zeros(pts.shape, complex)
    for k in range(K - 1, 0, -1):
        acc = acc * pts + k * c[k]
    return acc


@dataclass(frozen=True, eq=False)
class _Workspace:
    lattice: BergmanLattice
    b: float
    K: int
    tail: bool
    weight: np.ndarray  # |D_j| (1-|z_j|^2)^(b-1) / conj(z_j)
    tail_factor: np.ndarray  # multiplier on g_m, m >= 1

    @staticmethod
    def build(lattice: BergmanLattice, b: float, K_min: int = 0, tail: bool = True) -> "_Workspace":
        pts = lattice.points
        rmax = float(np.abs(pts).max())
        K = max(K_min, required_degree(an.atoms([rmax], b, 1.0)), 16)
        weight = lattice.cell_weights * (1.0 - np.abs(pts) ** 2) ** (b - 1.0) / np.conj(pts)
        R = float(lattice.stats.get("support_radius", 1.0))
        tf = np.zeros(K)
        if tail and R < 1.0:
            # int_{R<|w|<1} of the reproducing kernel against w^(m-1)
            tf[1:] = betainc(b, np.arange(K - 1) + 1.0, 1.0 - R * R)
        return _Workspace(lattice, b, K, tail, weight, tf)

    def apply(self, c: np.ndarray):
        """Projected operator on Taylor data c (c[0] ignored).  Returns (coeffs, atom gammas)."""
        gam = self.weight * _derivative_at(c, self.lattice.points)
        out = _atom_taylor(np.conj(self.lattice.points), self.b, gam, self.K)
        out[0] = 0.0
        if self.tail:
            out = out + self.tail_factor * c
        return out, gam


def _seminorm_coeffs(c: np.ndarray, mu: CircleMeasure) -> float:
    return float(np.sqrt(max(0.0, boundary_seminorm_sq_coeffs(c, mu))))


def _coeffs(f: AnalyticFunction, K: int) -> np.ndarray:
    c = taylor_coefficients(f, K)
    c[0] = 0.0
    return c


# -- public operators -------------------------------------------------------------


def approx_operator(f: AnalyticFunction, lattice: BergmanLattice, b: float = DEFAULT_B, project: bool = False) -> AnalyticFunction:
    """The lattice operator A (or its value-at-zero projection) as an atom sum."""
    b = _check_b(b)
    _check_lattice(lattice)
    scale = max(1.0, float(np.max(np.abs(f.poly))), float(np.max(np.abs(f.gamma), initial=0.0)))
    if abs(f.value_at_zero()) > 1e-12 * scale:
        raise ValueError("approx_operator needs f(0) = 0; apply subtract_value_at_zero first")
    pts = lattice.points
    gam = lattice.cell_weights * (1.0 - np.abs(pts) ** 2) ** (b - 1.0) / np.conj(pts)
    gam = gam * evaluate(derivative(f, 1), pts)
    return an.atoms(pts, b, gam, offset=project)


def contraction(f: AnalyticFunction, lattice: BergmanLattice, mu: CircleMeasure, b: float = DEFAULT_B, tail: bool = True) -> float:
    """rho = ||g - Ag||_{D0(mu)} / ||g||_{D0(mu)} with g = f - f(0)."""
    b = _check_b(b)
    _check_lattice(lattice)
    ws = _Workspace.build(lattice, b, required_degree(f), tail)
    c = _coeffs(f, ws.K)
    base = _seminorm_coeffs(c, mu)
    if base == 0:
        return 0.0
    Ac, _ = ws.apply(c)
    return _seminorm_coeffs(c - Ac, mu) / base


@dataclass(frozen=True, eq=False)
class NeumannResult:
    coeffs: np.ndarray  # Taylor data of g* = sum_n (I - A)^n g
    gammas: np.ndarray  # atom weights of A g*
    term_norms: List[float]  # relative D0(mu) norms of the terms, term 0 = 1
    converged: bool
    K: int

    @property
    def function(self) -> AnalyticFunction:
        return an.from_taylor(self.coeffs)

    @property
    def ratios(self) -> List[float]:
        t = self.term_norms
        return [t[i + 1] / t[i] for i in range(len(t) - 1) if t[i] > 0]


def neumann_invert(
    f: AnalyticFunction,
    lattice: BergmanLattice,
    mu: CircleMeasure,
    b: float = DEFAULT_B,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    tail: bool = True,
    terms: Optional[int] = None,
    _ws: Optional[_Workspace] = None,
) -> NeumannResult:
    """g* ~ A^{-1}(f - f(0)) by the Neumann series.

    Stops when the next term's D0(mu) norm drops below tol * ||f - f(0)||
    (that term is not added), or after exactly ``terms`` terms when given,
    which keeps the map linear.  Raises NeumannDivergenceError after three
    consecutive non-decreasing terms.  term_norms[n] is the relative norm of
    (I - A)^n g.
    """
    b = _check_b(b)
    _check_lattice(lattice)
    if mu.is_zero:
        raise ValueError("mu = 0 gives no D0(mu) norm")
    ws = _ws or _Workspace.build(lattice, b, required_degree(f), tail)
    t = _coeffs(f, ws.K)
    n_pts = lattice.size
    base = _seminorm_coeffs(t, mu)
    if base == 0 or not np.any(t):
        return NeumannResult(np.zeros(ws.K, complex), np.zeros(n_pts, complex), [], True, ws.K)
    acc = np.zeros(ws.K, complex)
    gam_acc = np.zeros(n_pts, complex)
    norms = [1.0]
    stalls = 0
    converged = False
    done = 0
    while True:
        acc += t
        At, gam = ws.apply(t)
        gam_acc += gam
        done += 1
        if terms is not None and done >= terms:
            converged = True
            break
        t = t - At
        norms.append(_seminorm_coeffs(t, mu) / base)
        if terms is not None:
            continue
        if norms[-1] < tol:
            converged = True
            break
        stalls = stalls + 1 if norms[-1] >= norms[-2] else 0
        if stalls >= 3:
            raise NeumannDivergenceError(
                f"Neumann terms did not decrease for 3 consecutive terms (eta = {lattice.eta:g}, b = {b:g}): "
                + ", ".join(f"{x:.3g}" for x in norms),
                norms,
            )
        if done >= max_terms:
            break
    return NeumannResult(acc, gam_acc, norms, converged, ws.K)


# -- decomposition ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AtomicDecomposition:
    constant: complex
    lambdas: np.ndarray
    b: float
    lattice_id: str
    diagnostics: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lattice_id": self.lattice_id,
            "b": self.b,
            "constant": [self.constant.real, self.constant.imag],
            "lambdas": [[float(x.real), float(x.imag)] for x in self.lambdas],
            "diagnostics": self.diagnostics,
        }


def _dmu_norm_sq_coeffs(c: np.ndarray, mu: CircleMeasure) -> float:
    return float(np.sum(np.abs(c) ** 2) + boundary_seminorm_sq_coeffs(c, mu))


def analyze(
    f: AnalyticFunction,
    mu: CircleMeasure,
    lattice: BergmanLattice,
    b: float = DEFAULT_B,
    tol: float = DEFAULT_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    tail: bool = True,
    terms: Optional[int] = None,
) -> AtomicDecomposition:
    """Coefficients lambda_j = (g*)'(z_j) |D_j| / (conj(z_j)(1-|z_j|^2))."""
    b = _check_b(b)
    _check_lattice(lattice)
    t0 = time.perf_counter()
    ws = _Workspace.build(lattice, b, required_degree(f), tail)
    res = neumann_invert(f, lattice, mu, b, tol, max_terms, tail, terms, _ws=ws)
    pts = lattice.points
    lam = res.gammas / (1.0 - np.abs(pts) ** 2) ** b
    c0 = complex(f.value_at_zero())
    dec = AtomicDecomposition(c0, lam, b, lattice.lattice_id, {})

    # residual of the lattice-only synthesis in D(mu), on Taylor data
    fc = taylor_coefficients(f, ws.K)
    sc = _atom_taylor(np.conj(pts), b, res.gammas, ws.K)
    sc[0] = c0
    fnorm2 = _dmu_norm_sq_coeffs(fc, mu)
    resid = np.sqrt(_dmu_norm_sq_coeffs(sc - fc, mu) / fnorm2) if fnorm2 > 0 else 0.0
    energy = coefficient_energy(dec, mu, lattice)
    ratios = res.ratios
    dec.diagnostics.update(
        {
            "rho": ratios[0] if ratios else 0.0,
            "term_norms": res.term_norms,
            "term_ratios": ratios,
            "n_terms": len(res.term_norms),
            "converged": bool(res.converged),
            "taylor_length": int(ws.K),
            "tail": bool(tail),
            "residual": float(resid),
            "energy": energy,
            "norm_sq": fnorm2,
            "energy_constant": energy / fnorm2 if fnorm2 > 0 else 0.0,
            "eta": lattice.eta,
            "n_points": lattice.size,
            "seconds": time.perf_counter() - t0,
        }
    )
    return dec


def synthesize(dec: AtomicDecomposition, lattice: BergmanLattice) -> AnalyticFunction:
    lam = np.asarray(dec.lambdas, complex)
    if lam.size != lattice.size:
        raise ValueError(f"{lam.size} coefficients for a lattice of {lattice.size} points")
    if dec.lattice_id != lattice.lattice_id:
        raise ValueError("decomposition was computed on a different lattice")
    pts = lattice.points
    keep = lam != 0
    gam = lam[keep] * (1.0 - np.abs(pts[keep]) ** 2) ** dec.b
    return an.atoms(pts[keep], dec.b, gam, offset=True, poly=[dec.constant])


def reconstruction_residual(f: AnalyticFunction, g: AnalyticFunction, mu: CircleMeasure) -> float:
    """||g - f||_{D(mu)} / ||f||_{D(mu)} with the H^2 + seminorm convention."""
    K = max(required_degree(f), required_degree(g))
    fc = taylor_coefficients(f, K)
    d = taylor_coefficients(g, K) - fc
    base = _dmu_norm_sq_coeffs(fc, mu)
    return float(np.sqrt(_dmu_norm_sq_coeffs(d, mu) / base)) if base > 0 else float(np.sqrt(_dmu_norm_sq_coeffs(d, mu)))


def coefficient_energy(dec: AtomicDecomposition, mu: CircleMeasure, lattice: BergmanLattice) -> float:
    lam = np.asarray(dec.lambdas)
    if not np.any(lam):
        return 0.0
    return float(np.sum(np.abs(lam) ** 2 * poisson_extension(mu, lattice.points)))


def carleson_quotient(dec: AtomicDecomposition, mu: CircleMeasure, lattice: BergmanLattice, corpus: Sequence[AnalyticFunction]) -> float:
    """max over g of sum_j |lambda_j|^2 P_mu(z_j) |g(z_j)|^2 / ||g||^2_{D(mu)}."""
    lam = np.asarray(dec.lambdas)
    if not np.any(lam):
        return 0.0
    w = np.abs(lam) ** 2 * poisson_extension(mu, lattice.points)
    best = 0.0
    for g in corpus:
        K = required_degree(g)
        den = _dmu_norm_sq_coeffs(taylor_coefficients(g, K), mu)
        if den <= 0:
            continue
        best = max(best, float(np.sum(w * np.abs(evaluate(g, lattice.points)) ** 2)) / den)
    return best


# -- cell estimates -----------------------------------------------------------------


def _ball_nodes(centres: np.ndarray, R: float, rule):
    """Transplanted nodes and weights for B(c, R), one row per centre."""
    s = np.tanh(R / 2.0)
    u = s * rule.nodes
    c = centres[:, None]
    den = 1.0 - np.conj(c) * u[None, :]
    nodes = (c - u[None, :]) / den
    w = rule.weights[None, :] * s * s * (1.0 - np.abs(c) ** 2) ** 2 / np.abs(den) ** 4
    return nodes, w


def verify_cell_estimates(
    lattice: BergmanLattice,
    mu: CircleMeasure,
    corpus: Dict[str, AnalyticFunction],
    ball_rule=None,
    seminorm_rule=None,
) -> dict:
    """Cell oscillation, Poisson comparability and lattice sampling ratios.

    oscillation: max_j int_{D_j}|f'-f'(z_j)| dA / (eta^3 int_{B(z_j,eta/4)}|f'| dA).
    poisson_bracket: min and max of P_mu(z)/P_mu(z_j) over z in B(z_j, eta).
    sampling: sum_j (1-|z_j|)^2 |f'(z_j)|^2 P_mu(z_j) / int |f'|^2 P_mu dA.
    The oscillation and sampling ratios grow like eta^-2 on a maximal lattice,
    so their eta^2-scaled values are reported alongside.
    """
    eta = lattice.eta
    pts = lattice.points
    ball_rule = ball_rule or cached_disk_rule(0.0, 8, 16)
    rule = lattice.rule
    nodes_cell = rule.nodes
    out: Dict = {"eta": eta, "n_points": lattice.size, "oscillation": {}, "sampling": {}}
    P_pts = poisson_extension(mu, pts)
    chunk = max(1, (1 << 20) // ball_rule.size)
    for name, f in corpus.items():
        df = derivative(f, 1)
        if df.is_zero():
            out["oscillation"][name] = {"max": 0.0, "scaled": 0.0}
            out["sampling"][name] = {"ratio": 0.0, "scaled": 0.0}
            continue
        dpts = evaluate(df, pts)
        diff = np.abs(evaluate(df, nodes_cell) - dpts[lattice.assignment])
        num = np.bincount(lattice.assignment, weights=rule.weights * diff, minlength=lattice.size)
        den = np.empty(lattice.size)
        for s in range(0, lattice.size, chunk):
            bn, bw = _ball_nodes(pts[s : s + chunk], eta / 4.0, ball_rule)
            den[s : s + chunk] = np.sum(bw * np.abs(evaluate(df, bn)), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(den > 0, num / (eta ** 3 * den), 0.0)
        out["oscillation"][name] = {"max": float(r.max()), "scaled": float(r.max() * eta ** 2)}
        lhs = float(np.sum((1.0 - np.abs(pts)) ** 2 * np.abs(dpts) ** 2 * P_pts))
        rhs = dirichlet_seminorm_sq(f, mu, seminorm_rule)
        ratio = lhs / rhs if rhs > 0 else 0.0
        out["sampling"][name] = {"ratio": ratio, "scaled": ratio * eta ** 2}
    lo = np.empty(lattice.size)
    hi = np.empty(lattice.size)
    for s in range(0, lattice.size, chunk):
        bn, _ = _ball_nodes(pts[s : s + chunk], eta, ball_rule)
        # add the ball's boundary circle, where the extremes of P_mu sit
        t = np.tanh(eta / 2.0) * np.exp(2j * np.pi * np.arange(32) / 32)
        c = pts[s : s + chunk, None]
        edge = (c - t[None, :]) / (1.0 - np.conj(c) * t[None, :])
        allp = np.concatenate([bn, edge], axis=1)
        q = poisson_extension(mu, allp.reshape(-1)).reshape(allp.shape) / P_pts[s : s + chunk, None]
        lo[s : s + chunk] = q.min(axis=1)
        hi[s : s + chunk] = q.max(axis=1)
    out["poisson_bracket"] = {
        "C1": float(lo.min()),
        "C2": float(hi.max()),
        "max_ratio_per_cell": float((hi / lo).max()),
    }
    return out


def cj_constants(lattice: BergmanLattice, b: float = DEFAULT_B, w: complex = 0.0, ball_rule=None) -> np.ndarray:
    """C_j from the ball identity at the point w (complex for w != 0).

    C_j(w) = |B_j| k_j(w) / int_{B_j} (1-|z|^2)^(b-1) (1-conj(z) w)^(-b-1) dA(z),
    with B_j = B(z_j, eta/4) and k_j(w) = (1-|z_j|^2)^(b-1) (1-conj(z_j) w)^(-b-1).
    """
    b = _check_b(b)
    ball_rule = ball_rule or cached_disk_rule(0.0, 32, 64)
    pts = lattice.points
    R = lattice.eta / 4.0
    out = np.empty(pts.size, complex)
    chunk = max(1, (1 << 20) // ball_rule.size)
    for s in range(0, pts.size, chunk):
        c = pts[s : s + chunk]
        bn, bw = _ball_nodes(c, R, ball_rule)
        integ = np.sum(bw * (1.0 - np.abs(bn) ** 2) ** (b - 1.0) * (1.0 - np.conj(bn) * w) ** (-b - 1.0), axis=1)
        kj = (1.0 - np.abs(c) ** 2) ** (b - 1.0) * (1.0 - np.conj(c) * w) ** (-b - 1.0)
        out[s : s + chunk] = ball_area(c, R) * kj / integ
    return out


def cj_closed_form(lattice: BergmanLattice, b: float = DEFAULT_B) -> np.ndarray:
    """pi t^2/(1 - t^2|z_j|^2) * 2b/(1 - (1-t^2)^b) with t = tanh(eta/2), i.e. radius eta rather than eta/4."""
    t = np.tanh(lattice.eta / 2.0)
    r2 = np.abs(lattice.points) ** 2
    return np.pi * t * t / (1.0 - t * t * r2) * 2.0 * b / (1.0 - (1.0 - t * t) ** b)


def cj_constant(j: int, b: float, lattice: BergmanLattice, rule=None) -> dict:
    """C_j at w = 0 and w = 0.3 from the identity, plus the closed form."""
    sub = _SinglePoint(lattice, j)
    c0 = complex(cj_constants(sub, b, 0.0, rule)[0])
    c3 = complex(cj_constants(sub, b, 0.3, rule)[0])
    return {
        "j": int(j),
        "identity_w0": c0.real,
        "identity_w03": [c3.real, c3.imag],
        "relative_gap_w03": abs(c3 - c0) / abs(c0),
        "closed_form": float(cj_closed_form(sub, b)[0]),
    }


class _SinglePoint:
    """Minimal lattice view holding one point."""

    def __init__(self, lattice: BergmanLattice, j: int):
        self.points = np.asarray([lattice.points[j]])
        self.eta = lattice.eta


# -- empirical eta_0 ---------------------------------------------------------------


def converges(f: AnalyticFunction, mu: CircleMeasure, eta: float, b: float = DEFAULT_B, tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS) -> bool:
    lat = build_lattice(eta)
    try:
        res = neumann_invert(f, lat, mu, b, tol, max_terms)
    except NeumannDivergenceError:
        return False
    return bool(res.converged)


def eta0_bisection(
    f: AnalyticFunction,
    mu: CircleMeasure,
    b: float = DEFAULT_B,
    lo: float = 0.3,
    hi: float = 0.95,
    steps: int = 4,
) -> dict:
    """Largest eta in [lo, hi] found convergent; reports when hi itself converges."""
    if converges(f, mu, hi, b):
        return {"eta0": None, "note": f"Neumann series converges on the whole range up to eta = {hi:g}", "lo": lo, "hi": hi}
    if not converges(f, mu, lo, b):
        return {"eta0": None, "note": f"Neumann series fails already at eta = {lo:g}", "lo": lo, "hi": hi}
    a, c = lo, hi
    for _ in range(steps):
        m = 0.5 * (a + c)
        if converges(f, mu, m, b):
            a = m
        else:
            c = m
    return {"eta0": a, "bracket": [a, c], "lo": lo, "hi": hi}
