"""Integral kernels, operator application, Schur certificates and estimate probes.

Operators act on L^2(dnu) with dnu = P_mu dA.  The weighted integrals in the
probes are evaluated from Taylor data: any |1 - conj(a) z|^(-p) is the squared
modulus of a binomial series, so angular integration collapses the double
series and radial integration against (1-|z|^2)^s gives Beta functions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, hyp2f1

from .analytic import _log_binom
from .functionals import CostGuardError, DEFAULT_CAP, cached_disk_rule
from .measure import CircleMeasure, poisson_extension
from .quadrature import DiskRule

SAMPLE_CUTOFF = 0.98
OPERATOR_CAP = 4.0e8
GROWTH_THRESHOLD = 0.15


# -- kernel specs -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KernelSpec:
    kind: str
    params: Dict = field(default_factory=dict)
    mu: Optional[CircleMeasure] = None
    func: Optional[Callable] = None

    @property
    def kernel_id(self) -> str:
        p = ",".join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}={v}" for k, v in sorted(self.params.items()))
        m = "" if self.mu is None else f";mu={self.mu.name or 'custom'}"
        return f"{self.kind}({p}){m}"


def _require_mu(mu: Optional[CircleMeasure]):
    if mu is None or mu.is_zero:
        raise ValueError("a nonzero measure mu is required (dnu = P_mu dA)")


def reproducing_kernel(b: float) -> KernelSpec:
    if not b > 0:
        raise ValueError("k_w needs b > 0")
    return KernelSpec("k_w", {"b": float(b)})


def h_sigma_interval(n: float, alpha: float):
    """Open interval of sigma with sigma < n, alpha > sigma + 1, alpha + sigma > -1."""
    return (-1.0 - alpha, min(float(n), alpha - 1.0))


def kernel_H(n: int, alpha: float, mu: CircleMeasure) -> KernelSpec:
    lo, hi = h_sigma_interval(n, alpha)
    if not lo < hi:
        raise ValueError(f"no sigma satisfies sigma < n, alpha > sigma+1, alpha+sigma > -1 (n={n}, alpha={alpha})")
    _require_mu(mu)
    return KernelSpec("H", {"n": int(n), "alpha": float(alpha)}, mu)


def kernel_L(alpha: float, mu: CircleMeasure) -> KernelSpec:
    # some eps in (0,1) with alpha > 1 - eps exists iff alpha > 0
    if not alpha > 0:
        raise ValueError(f"no eps in (0,1) satisfies alpha > 1 - eps (alpha={alpha})")
    _require_mu(mu)
    return KernelSpec("L", {"alpha": float(alpha)}, mu)


def custom_kernel(func: Callable, name: str = "custom", mu: Optional[CircleMeasure] = None) -> KernelSpec:
    return KernelSpec("custom", {"name": name}, mu, func)


def _kernel_times_p(spec: KernelSpec, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """kernel(z, w) * P_mu(w) for H and L, where P_mu cancels."""
    den = np.abs(1.0 - z * np.conj(w))
    a = spec.params["alpha"]
    if spec.kind == "H":
        n = spec.params["n"]
        return (1.0 - np.abs(z) ** 2) ** n * (1.0 - np.abs(w) ** 2) ** a / den ** (2.0 + n + a)
    return (1.0 - np.abs(w) ** 2) ** a / den ** (2.0 + a)


def kernel_eval(spec: KernelSpec, z, w):
    """Pointwise kernel value; for k_w this is k_w(z) = (1-|z|^2)^(b-1)/(1-conj(z) w)^(b+1)."""
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    if np.any(np.abs(z) >= 1) or np.any(np.abs(w) > 1):
        raise ValueError("kernel_eval needs |z| < 1 and |w| <= 1")
    if spec.kind == "k_w":
        b = spec.params["b"]
        out = (1.0 - np.abs(z) ** 2) ** (b - 1.0) / (1.0 - np.conj(z) * w) ** (b + 1.0)
    elif spec.kind in ("H", "L"):
        _require_mu(spec.mu)
        if np.any(np.abs(w) >= 1):
            raise ValueError("H and L need |w| < 1")
        p = poisson_extension(spec.mu, w)
        if np.any(p <= 0):
            raise ZeroDivisionError("P_mu(w) = 0")
        out = _kernel_times_p(spec, z, w) / p
    elif spec.kind == "custom":
        out = np.asarray(spec.func(z, w))
    else:
        raise ValueError(f"unknown kernel kind {spec.kind!r}")
    return out[()] if np.ndim(out) == 0 else out


# -- operator application -----------------------------------------------------------------


def _nu_weights(rule: DiskRule, mu: CircleMeasure) -> np.ndarray:
    _require_mu(mu)
    p = poisson_extension(mu, rule.nodes)
    if np.any(p <= 0):
        raise ZeroDivisionError("P_mu vanishes at a rule node")
    return rule.weights * p, p


def _matvec(kfun, nodes_out, nodes_in, vec, threads=1, block=1 << 22):
    out = np.empty((nodes_out.size,) + np.shape(vec)[1:], np.result_type(vec, float))
    step = max(1, block // max(1, nodes_in.size))
    ranges = [(s, min(nodes_out.size, s + step)) for s in range(0, nodes_out.size, step)]

    def work(rng):
        s, e = rng
        return kfun(nodes_out[s:e, None], nodes_in[None, :]) @ vec

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, ranges))
    else:
        parts = [work(r) for r in ranges]
    for (s, e), part in zip(ranges, parts):
        out[s:e] = part
    return out


def apply_operator(spec: KernelSpec, g, rule: DiskRule, mu: Optional[CircleMeasure] = None, threads: int = 1, cap: float = OPERATOR_CAP) -> np.ndarray:
    """(Kg)(z_i) = sum_j kernel(z_i, z_j) g(z_j) w_j P_mu(z_j) at the rule nodes.

    ``spec.kind`` is H (the operator T) or L (the operator S); ``g`` is a
    callable or node values, either one vector or a (nodes, m) stack.
    """
    mu = mu or spec.mu
    if spec.kind not in ("H", "L", "custom"):
        raise ValueError("apply_operator needs an H, L or custom kernel")
    if float(rule.size) ** 2 > cap:
        raise CostGuardError(f"{float(rule.size) ** 2:.3g} kernel evaluations exceed the cap {cap:.3g}")
    vals = g(rule.nodes) if callable(g) else np.asarray(g)
    if vals.shape[:1] != (rule.size,) or vals.ndim > 2 or not np.all(np.isfinite(vals)):
        raise ValueError("g must be finite at every node")
    wnu, p = _nu_weights(rule, mu)
    wcol = (lambda w: w[:, None]) if vals.ndim == 2 else (lambda w: w)
    if spec.kind == "custom":
        return _matvec(lambda z, w: np.asarray(spec.func(z, w)), rule.nodes, rule.nodes, vals * wcol(wnu), threads)
    # kernel * P_mu(w) is free of mu, so fold P_mu into the plain dA weight
    return _matvec(lambda z, w: _kernel_times_p(spec, z, w), rule.nodes, rule.nodes, vals * wcol(rule.weights), threads)


def l2_nu_norm(vals: np.ndarray, rule: DiskRule, mu: CircleMeasure) -> float:
    wnu, _ = _nu_weights(rule, mu)
    return float(np.sqrt(np.sum(wnu * np.abs(vals) ** 2)))


# -- Schur test --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SchurCertificate:
    kernel_id: str
    exponent_name: str
    exponent: Optional[float]
    C1: float
    C2: float
    grid: Dict
    candidates: List[Dict]
    certified: bool
    witness: Optional[Dict] = None

    @property
    def C(self) -> float:
        return max(self.C1, self.C2)

    def to_dict(self) -> dict:
        return {
            "kernel_id": self.kernel_id,
            "exponent_name": self.exponent_name,
            "exponent": self.exponent,
            "C1": self.C1,
            "C2": self.C2,
            "C": self.C if self.certified else None,
            "certified": self.certified,
            "grid": self.grid,
            "candidates": self.candidates,
            "witness": self.witness,
        }


def default_sample_rule(nr: int = 48, ntheta: int = 192, cutoff: float = SAMPLE_CUTOFF) -> DiskRule:
    return cached_disk_rule(0.0, nr, ntheta).restrict(cutoff)


def _schur_ratios(spec: KernelSpec, e: float, rho: float, angles: np.ndarray):
    """Exact Schur ratios R1 (row family) and R2 (column family) at rho e^{i angles}."""
    pts = rho * np.exp(1j * angles)
    x = 1.0 - rho * rho
    a = spec.params["alpha"]
    P = poisson_extension(spec.mu, pts)
    if spec.kind == "H":
        n = spec.params["n"]
        r1 = x ** (n - e) * power_kernel_integral(rho, a + e, n - e)
        r2 = x ** (a - e) * poisson_weighted_integral(spec.mu, pts, n + e, 2.0 + n + a) / P
    else:
        r1 = x ** e * power_kernel_integral(rho, a - e, e)
        r2 = x ** (a + e) * poisson_weighted_integral(spec.mu, pts, -e, 2.0 + a) / P
    return np.full(angles.shape, float(r1)), r2, pts


def _ray_angles(mu: CircleMeasure, n: int) -> np.ndarray:
    base = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    return np.unique(np.concatenate([base, mu.angles]))


def schur_certify(
    spec: KernelSpec,
    exponents: Optional[Sequence[float]] = None,
    rule: Optional[DiskRule] = None,
    threads: int = 1,
    threshold: float = GROWTH_THRESHOLD,
    density: int = 4,
    octaves: Sequence[int] = (9, 10, 11, 12),
    cap: float = OPERATOR_CAP,
) -> SchurCertificate:
    """Schur test with h = (1-|z|^2)^sigma (H) or h = (1-|z|^2)^(-eps) (L).

    R1(z) = int K(z,w) h(w) dnu(w) / h(z) and R2(w) = int K(z,w) h(z) dnu(z) / h(w)
    are evaluated exactly (closed form and Taylor-Beta series) on |z| <= 0.98
    and along rays out to 1 - 2^-12.  A candidate is unbounded when log R grows
    against log 1/(1-|z|) with slope above ``threshold`` over the last
    ``octaves``.  The discrete row and column sums on the sample rule are taken
    too, so C = max of all four sups also bounds the discrete operator, whose
    norm is at most sqrt(C1 C2).
    """
    if spec.kind not in ("H", "L"):
        raise ValueError("schur_certify handles the H and L kernels")
    _require_mu(spec.mu)
    rule = rule or default_sample_rule()
    if float(rule.size) ** 2 > cap:
        raise CostGuardError(f"{float(rule.size) ** 2:.3g} kernel evaluations exceed the cap {cap:.3g}")
    z = rule.nodes
    r = np.abs(z)
    v, _ = _nu_weights(rule, spec.mu)
    if spec.kind == "H":
        name = "sigma"
        lo, hi = h_sigma_interval(spec.params["n"], spec.params["alpha"])
        if exponents is None:
            exponents = [x for x in (-0.5, 0.0, 0.5) if lo < x < hi]
        hfun = lambda e: (1.0 - r * r) ** e
        valid = lambda e: lo < e < hi
        domain = lambda e: spec.params["n"] + e > -1 and spec.params["alpha"] + e > -1
    else:
        name = "eps"
        if exponents is None:
            exponents = (0.25, 0.5, 0.75)
        hfun = lambda e: (1.0 - r * r) ** (-e)
        valid = lambda e: 0 < e < 1 and spec.params["alpha"] > 1 - e
        domain = lambda e: 0 < e < 1 and spec.params["alpha"] - e > -1
    kp = lambda a, b: _kernel_times_p(spec, a, b)
    angles = _ray_angles(spec.mu, 64)
    radii = _sample_radii(SAMPLE_CUTOFF, density)
    cands = []
    for e in exponents:
        e = float(e)
        if not domain(e):
            raise ValueError(f"{name} = {e:g} puts a Schur integral outside its convergence range")
        best = {1: (0.0, None), 2: (0.0, None)}
        for rho in radii:
            r1, r2, pts = _schur_ratios(spec, e, rho, angles)
            for fam, vals in ((1, r1), (2, r2)):
                i = int(np.argmax(vals))
                if vals[i] > best[fam][0]:
                    best[fam] = (float(vals[i]), [float(pts[i].real), float(pts[i].imag)])
        # growth toward the boundary along the rays
        logs = {1: [], 2: []}
        for k in octaves:
            r1, r2, _ = _schur_ratios(spec, e, 1.0 - 2.0 ** (-k), angles)
            logs[1].append(np.log(r1.max()))
            logs[2].append(np.log(r2.max()))
        xs = np.asarray(octaves, float) * np.log(2.0)
        g1 = float(np.polyfit(xs, logs[1], 1)[0])
        g2 = float(np.polyfit(xs, logs[2], 1)[0])
        h = hfun(e)
        row = _matvec(kp, z, z, h * rule.weights, threads) / h
        col = _matvec(lambda a, b: kp(b, a), z, z, h * v, threads) / h
        c1 = max(best[1][0], float(row.max()))
        c2 = max(best[2][0], float(col.max()))
        cands.append(
            {
                name: e,
                "parameter_constraints_hold": bool(valid(e)),
                "C1": c1,
                "C2": c2,
                "C1_exact": best[1][0],
                "C2_exact": best[2][0],
                "C1_discrete": float(row.max()),
                "C2_discrete": float(col.max()),
                "growth1": g1,
                "growth2": g2,
                "bounded": bool(g1 <= threshold and g2 <= threshold),
                "argmax1": best[1][1],
                "argmax2": best[2][1],
                "ray_sup_outer": [float(np.exp(logs[1][-1])), float(np.exp(logs[2][-1]))],
            }
        )
    grid = {
        "sample_rule": {"kind": rule.kind, "resolution": list(rule.resolution), "size": rule.size, "cutoff": float(r.max())},
        "exact_radii": len(radii),
        "rays": int(angles.size),
        "growth_octaves": list(octaves),
        "threshold": threshold,
    }
    ok = [c for c in cands if c["bounded"]]
    if ok:
        best_c = min(ok, key=lambda c: max(c["C1"], c["C2"]))
        return SchurCertificate(spec.kernel_id, name, best_c[name], best_c["C1"], best_c["C2"], grid, cands, True)
    worst = max(cands, key=lambda c: max(c["growth1"], c["growth2"]))
    side = 1 if worst["growth1"] >= worst["growth2"] else 2
    wit = {
        "exponent": worst[name],
        "family": side,
        "point_sampled_sup": worst[f"argmax{side}"],
        "ratio_at_outer_ray": worst["ray_sup_outer"][side - 1],
        "growth": worst[f"growth{side}"],
    }
    return SchurCertificate(spec.kernel_id, name, None, float("inf"), float("inf"), grid, cands, False, wit)


def operator_test_corpus(seed: int = 20240517, n: int = 20) -> Dict[str, Callable]:
    """Pointwise test functions for empirical operator norms."""
    from .analytic import derivative, evaluate
    from .corpus import function_corpus

    out: Dict[str, Callable] = {}
    for name, f in function_corpus(seed).items():
        df = derivative(f, 1)
        out[f"|{name}'|"] = lambda z, df=df: np.abs(evaluate(df, z))
    rng = np.random.default_rng(seed)
    extra = [
        ("1", lambda z: np.ones(z.shape)),
        ("(1-|z|^2)^-0.25", lambda z: (1.0 - np.abs(z) ** 2) ** -0.25),
        ("Re z", lambda z: z.real),
    ]
    k = 0
    while len(out) + len(extra) < n:
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        extra.append((f"rand_trig_{k}", lambda z, c=c: np.real(np.polyval(c, z))))
        k += 1
    for name, fn in extra[: max(0, n - len(out))]:
        out[name] = fn
    return dict(list(out.items())[:n])


def empirical_norms(spec: KernelSpec, rule: Optional[DiskRule] = None, corpus: Optional[Dict[str, Callable]] = None, threads: int = 1) -> Dict[str, float]:
    """||Kg||_{L^2(nu)} / ||g||_{L^2(nu)} on the discrete sample space."""
    rule = rule or default_sample_rule()
    corpus = corpus or operator_test_corpus()
    names = list(corpus)
    vals = np.stack([np.asarray(corpus[k](rule.nodes), float) for k in names], axis=1)
    wnu, _ = _nu_weights(rule, spec.mu)
    den = np.sqrt(wnu @ vals ** 2)
    img = apply_operator(spec, vals, rule, threads=threads)
    num = np.sqrt(wnu @ np.abs(img) ** 2)
    return {k: float(n / d) for k, n, d in zip(names, num, den) if d > 0}


# -- probes ------------------------------------------------------------------------------------


def _beta(m: np.ndarray, s: float) -> np.ndarray:
    """int |z|^(2m) (1-|z|^2)^s dA = B(m+1, s+1)."""
    return np.exp(gammaln(m + 1.0) + gammaln(s + 1.0) - gammaln(m + s + 2.0))


def _binom(c: float, K: int) -> np.ndarray:
    """(c)_k/k! for k < K (exactly 0 beyond k = 0 when c = 0)."""
    if c == 0:
        out = np.zeros(K)
        out[0] = 1.0
        return out
    k = np.arange(K, dtype=float)
    return np.exp(_log_binom(c, k))


def _series_length(rho: float, p: float, floor: int = 64) -> int:
    if rho <= 0:
        return floor
    n = (45.0 + max(p, 1.0) * 8.0) / (-np.log(rho))
    return int(min(1 << 20, max(floor, 1 << int(np.ceil(np.log2(n + 1))))))


def weighted_kernel_integral(s: float, pairs: Sequence[tuple]) -> float:
    """int prod_i |1 - conj(a_i) z|^(-p_i) (1-|z|^2)^s dA(z) from Taylor data.

    ``pairs`` lists (a_i, p_i); the product is |F|^2 with
    F(z) = prod (1 - conj(a_i) z)^(-p_i/2), so the integral is sum |F_k|^2 B(k+1, s+1).
    """
    if s <= -1:
        raise ValueError("needs s > -1")
    rho = max(abs(a) for a, _ in pairs)
    K = _series_length(rho, sum(p for _, p in pairs))
    F = np.zeros(2 * K, complex)
    F[0] = 1.0
    F = np.fft.fft(F)
    k = np.arange(K)
    for a, p in pairs:
        a = complex(a)
        c = _binom(p / 2.0, K) * (np.conj(a) ** k if a != 0 else (k == 0))
        F = F * np.fft.fft(np.concatenate([c, np.zeros(K)]))
    coef = np.fft.ifft(F)[:K]
    return float(np.sum(np.abs(coef) ** 2 * _beta(k.astype(float), s)))


def poisson_weighted_integral(mu: CircleMeasure, w: np.ndarray, s: float, p: float) -> np.ndarray:
    """int (1-|z|^2)^s P_mu(z) |1 - conj(w) z|^(-p) dA(z) for points w sharing one modulus."""
    if s <= -1:
        raise ValueError("needs s > -1 (the integral diverges for mu = m when s <= -1)")
    w = np.atleast_1d(np.asarray(w, complex))
    rho = float(np.abs(w).max())
    K = _series_length(rho, p)
    j = np.arange(K, dtype=float)
    c = _binom(p / 2.0, K)
    a = c * rho ** (2.0 * j)
    bb = c * _beta(j, s)
    # S_k = sum_j a_j bb_{j+k}, by FFT correlation
    n = 2 * K
    S = np.fft.ifft(np.conj(np.fft.fft(a, n)) * np.fft.fft(bb, n))[:K].real
    mh = mu.fourier(K - 1)
    acc = np.zeros(w.shape, complex)
    coeffs = mh * S
    for ck in coeffs[:0:-1]:
        acc = (acc + ck) * w
    return mh[0].real * S[0] + 2.0 * acc.real


LEMMAS = ("3.1", "3.2", "4.2", "5.3")


def _polar(radii, nang, shift=0.0):
    th = 2.0 * np.pi * (np.arange(nang) + shift) / nang
    return (np.asarray(radii)[:, None] * np.exp(1j * th)[None, :]).reshape(-1)


def _sample_radii(cutoff: float, density: int) -> np.ndarray:
    """Radii 1 - 2^(-x) on a grid of ``density`` points per octave, up to cutoff."""
    top = -np.log2(1.0 - cutoff)
    x = np.linspace(0.0, top, int(np.ceil(top * density)) + 1)
    return np.unique(np.concatenate([[0.0], 1.0 - 2.0 ** (-x)]))[:-1].tolist() + [cutoff]


def estimate_probe(lemma: str, params: Dict, density: int = 4, cutoff: Optional[float] = None) -> Dict:
    """Estimate an inequality's constant as the sampled sup of LHS / RHS-without-C.

    ``density`` scales every sample set; doubling it is one refinement.
    """
    lemma = str(lemma)
    if lemma not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma!r}; expected one of {LEMMAS}")
    fn = {"3.1": _probe_31, "3.2": _probe_32, "4.2": _probe_42, "5.3": _probe_53}[lemma]
    rep = fn(dict(params), int(density), cutoff)
    rep.update({"lemma": lemma, "params": {k: (v if not isinstance(v, CircleMeasure) else (v.name or "mu")) for k, v in params.items()}, "density": int(density)})
    return rep


def _probe_31(p, density, cutoff):
    s, r, t = float(p["s"]), float(p["r"]), float(p["t"])
    if not s > -1:
        raise ValueError("probe 3.1 needs s > -1")
    if not (r > 0 and t > 0):
        raise ValueError("probe 3.1 needs r, t > 0")
    if not t < s + 2 < r:
        raise ValueError("probe 3.1 needs t < s + 2 < r")
    cutoff = cutoff or 0.95
    radii = _sample_radii(cutoff, density)
    zs = _polar(radii, 1)  # rotation invariance: z on the positive axis
    zetas = _polar(radii, 4 * density, 0.5)
    best, arg = 0.0, None
    for z in zs:
        for zeta in zetas:
            lhs = weighted_kernel_integral(s, [(z, r), (zeta, t)])
            rhs = (1.0 - abs(z) ** 2) ** (-(r - s - 2.0)) * abs(1.0 - np.conj(zeta) * z) ** (-t)
            q = lhs / rhs
            if q > best:
                best, arg = q, [[z.real, z.imag], [zeta.real, zeta.imag]]
    return {"constant": best, "argmax": arg, "cutoff": cutoff, "n_samples": int(zs.size * zetas.size), "method": "taylor-beta series"}


def _probe_32(p, density, cutoff):
    s, pp, mu = float(p["s"]), float(p["p"]), p["mu"]
    if not s > -2:
        raise ValueError("probe 3.2 needs s > -2")
    if not pp > s + 3:
        raise ValueError("probe 3.2 needs p > s + 3")
    if not s > -1:
        raise ValueError("s in (-2, -1] is admitted in principle but the left side diverges for mu = m; this probe needs s > -1")
    _require_mu(mu)
    cutoff = cutoff or SAMPLE_CUTOFF
    radii = _sample_radii(cutoff, density)
    best, arg = 0.0, None
    nang = 16 * density
    for rho in radii:
        w = _polar([rho], nang) if rho > 0 else np.zeros(1, complex)
        lhs = poisson_weighted_integral(mu, w, s, pp) * (1.0 - rho * rho) ** (pp - s - 2.0)
        q = lhs / poisson_extension(mu, w)
        i = int(np.argmax(q))
        if q[i] > best:
            best, arg = float(q[i]), [float(w[i].real), float(w[i].imag)]
    return {"constant": best, "argmax": arg, "cutoff": cutoff, "n_samples": int(len(radii) * nang), "method": "taylor-beta series"}


def power_kernel_integral(z, t: float, s: float):
    """int (1-|w|^2)^t / |1 - z conj(w)|^(2+s+t) dA(w) = 2F1(c, c; t+2; |z|^2)/(t+1), c = (2+s+t)/2."""
    c = (2.0 + s + t) / 2.0
    return hyp2f1(c, c, t + 2.0, np.abs(np.asarray(z)) ** 2) / (t + 1.0)


def _probe_42(p, density, cutoff):
    t, s = float(p["t"]), float(p["s"])
    if not t > -1:
        raise ValueError("probe 4.2 needs t > -1")
    if s == 0:
        raise ValueError("probe 4.2 needs s > 0 or s < 0")
    cutoff = cutoff or 0.95
    r = np.asarray(_sample_radii(cutoff, density))
    lhs = power_kernel_integral(r, t, s)
    rhs = (1.0 - r * r) ** (-s) if s > 0 else np.ones_like(r)
    q = lhs / rhs
    i = int(np.argmax(q))
    # quadrature cross-check on the same samples
    rule = cached_disk_rule(float(t), 64, 256)
    quad = np.array([np.sum(rule.weights / np.abs(1.0 - x * np.conj(rule.nodes)) ** (2.0 + s + t)) for x in r])
    return {
        "constant": float(q[i]),
        "argmax": [float(r[i]), 0.0],
        "cutoff": cutoff,
        "n_samples": int(r.size),
        "method": "hypergeometric closed form",
        "quadrature_max_rel_gap": float(np.max(np.abs(quad - lhs) / lhs)),
    }


def _probe_53(p, density, cutoff):
    b, eta = float(p["b"]), float(p["eta"])
    if not b > 0:
        raise ValueError("probe 5.3 needs b > 0")
    if not 0 < eta <= 1:
        raise ValueError("probe 5.3 needs 0 < eta <= 1")
    cutoff = cutoff or 0.99
    z0s = _polar([0.0, 0.5, 0.9, cutoff], 2 * density, 0.25)
    z0s = np.unique(np.round(z0s, 15))
    wr = np.concatenate([_sample_radii(0.999, density), [1.0]])
    ws = _polar(wr, 32 * density)
    ws = ws / np.maximum(1.0, np.abs(ws))
    # z on circles of Bergman radius f*eta around z0: z = phi_z0(u), |u| = tanh(f eta / 2)
    fr = np.arange(1, 2 * density + 1) / (2.0 * density)
    us = _polar(np.tanh(fr * eta / 2.0), 8 * density, 0.5)
    best, arg = 0.0, None
    spec = reproducing_kernel(b)
    for z0 in z0s:
        zs = (z0 - us) / (1.0 - np.conj(z0) * us)
        kz = kernel_eval(spec, zs[:, None], ws[None, :])
        k0 = kernel_eval(spec, np.full(1, z0)[:, None], ws[None, :])
        q = np.abs(kz - k0) / (eta * np.abs(kz))
        i = np.unravel_index(int(np.argmax(q)), q.shape)
        if q[i] > best:
            best = float(q[i])
            arg = {"z0": [z0.real, z0.imag], "z": [zs[i[0]].real, zs[i[0]].imag], "w": [ws[i[1]].real, ws[i[1]].imag]}
    return {"constant": best, "argmax": arg, "cutoff": cutoff, "n_samples": int(z0s.size * us.size * ws.size), "method": "sampling"}
