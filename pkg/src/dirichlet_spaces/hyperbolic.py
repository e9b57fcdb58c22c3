"""Bergman-metric geometry and certified eta-lattices.

Distances follow d(z,w) = log((1+p)/(1-p)) = 2 artanh(p) with p = |phi_z(w)|
the pseudo-hyperbolic distance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .quadrature import DiskRule, hyperbolic_ring_rule

DEFAULT_RMAX = 0.97
RULE_SPACING_FACTOR = 1.0 / 8.0


class LatticeCertificationError(RuntimeError):
    pass


def mobius(z, w):
    """phi_z(w) = (z - w)/(1 - conj(z) w)."""
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    return (z - w) / (1.0 - np.conj(z) * w)


def pseudo_distance(z, w):
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    return np.abs(z - w) / np.abs(1.0 - np.conj(z) * w)


def bergman_distance(z, w):
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    if np.any(np.abs(z) >= 1) or np.any(np.abs(w) >= 1):
        raise ValueError("Bergman distance needs points inside the open disk")
    p = pseudo_distance(z, w)
    return 2.0 * np.arctanh(np.minimum(p, 1.0 - 1e-16))


def _bdist(z, w):
    p = np.abs(z - w) / np.abs(1.0 - np.conj(z) * w)
    return 2.0 * np.arctanh(np.minimum(p, 1.0 - 1e-16))


def _pdist(z, w):
    return np.abs(z - w) / np.abs(1.0 - np.conj(z) * w)


def euclidean_reach(z, R):
    """Radius of a Euclidean disk around z that contains B(z,R)."""
    t = np.tanh(np.asarray(R) / 2.0)
    r = np.abs(z)
    return t * (1.0 - r * r) / (1.0 - t * r)


def _xy(z):
    z = np.asarray(z, complex)
    return np.column_stack([z.real, z.imag])


@dataclass(frozen=True, eq=False)
class BergmanLattice:
    eta: float
    points: np.ndarray
    cell_weights: np.ndarray
    rule: DiskRule
    assignment: np.ndarray
    node_distance: np.ndarray
    stats: dict = field(default_factory=dict)
    certified: bool = False

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def lattice_id(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.eta).tobytes())
        h.update(np.ascontiguousarray(self.points).tobytes())
        h.update(np.ascontiguousarray(self.cell_weights).tobytes())
        return h.hexdigest()[:16]

    def cell_nodes(self, j: int):
        sel = self.assignment == j
        return self.rule.nodes[sel], self.rule.weights[sel]


def _same_radius_threshold(r: float, sep: float) -> float:
    """Smallest angle t with d(r, r e^{it}) >= sep (inf if none up to pi)."""
    if r == 0:
        return np.inf
    rho2 = np.tanh(sep / 2.0) ** 2
    r2 = r * r
    c = (2.0 * r2 - rho2 * (1.0 + r2 * r2)) / (2.0 * r2 * (1.0 - rho2))
    if c <= -1.0:
        return np.inf
    return float(np.arccos(min(1.0, c)))


def greedy_packing(candidates: np.ndarray, sep: float, rmin: float) -> np.ndarray:
    """Exact sequential greedy in the order (|z|, arg z).

    A candidate is accepted when its Bergman distance to every previously
    accepted point is >= sep and |z| >= rmin.  Candidates sharing a radius are
    handled by an angular sweep, which is equivalent to the sequential scan.
    """
    c = np.asarray(candidates, complex)
    r = np.abs(c)
    ang = np.mod(np.angle(c), 2.0 * np.pi)
    rk = np.round(r, 12)
    order = np.lexsort((ang, rk))
    c, r, ang, rk = c[order], r[order], ang[order], rk[order]
    keep = r >= rmin
    c, r, ang, rk = c[keep], r[keep], ang[keep], rk[keep]
    if c.size == 0:
        return c
    bounds = np.flatnonzero(np.diff(rk)) + 1
    starts = np.r_[0, bounds]
    ends = np.r_[bounds, c.size]
    psep = np.tanh(sep / 2.0)
    accepted = []
    tree = None
    n_tree = 0
    acc_arr = np.zeros(0, complex)
    for s, e in zip(starts, ends):
        grp = c[s:e]
        blocked = np.zeros(grp.size, bool)
        if acc_arr.size:
            if tree is None or n_tree != acc_arr.size:
                tree = cKDTree(_xy(acc_arr))
                n_tree = acc_arr.size
            reach = euclidean_reach(grp, sep) * (1 + 1e-9) + 1e-15
            near = tree.query_ball_point(_xy(grp), reach, return_sorted=False)
            lens = np.fromiter((len(x) for x in near), np.int64, grp.size)
            if lens.sum():
                flat = np.fromiter((i for x in near for i in x), np.int64, int(lens.sum()))
                owner = np.repeat(np.arange(grp.size), lens)
                hit = _pdist(acc_arr[flat], grp[owner]) < psep
                blocked = np.bincount(owner[hit], minlength=grp.size) > 0
        tmin = _same_radius_threshold(float(r[s]), sep)
        ga = ang[s:e]
        new = []
        for i in range(grp.size):
            if blocked[i]:
                continue
            if new:
                d_last = ga[i] - ga[new[-1]]
                d_first = ga[new[0]] + 2.0 * np.pi - ga[i]
                if min(d_last, 2 * np.pi - d_last) < tmin or min(d_first, 2 * np.pi - d_first) < tmin:
                    continue
            new.append(i)
        if new:
            accepted.append(grp[new])
            acc_arr = np.concatenate(accepted)
    return acc_arr


def nearest_points(points: np.ndarray, queries: np.ndarray, k: int = 16):
    """Exact Bergman-nearest lattice point for each query.

    Euclidean k-nearest candidates are filtered exactly; a query is accepted
    only if the Euclidean hull of its Bergman ball of the found radius lies
    inside the k-th neighbour distance, otherwise it is redone by brute force.
    """
    k = min(k, points.size)
    tree = cKDTree(_xy(points))
    out_idx = np.empty(queries.size, np.int64)
    out_d = np.empty(queries.size)
    step = 1 << 16
    for s in range(0, queries.size, step):
        q = queries[s : s + step]
        de, ie = tree.query(_xy(q), k=k, workers=-1)
        if k == 1:
            de, ie = de[:, None], ie[:, None]
        bd = _bdist(points[ie], q[:, None])
        arg = np.argmin(bd, axis=1)
        rows = np.arange(q.size)
        best = bd[rows, arg]
        idx = ie[rows, arg]
        safe = (euclidean_reach(q, best) < de[:, -1]) | (k == points.size)
        for i in np.flatnonzero(~safe):
            d_all = _bdist(points, q[i])
            j = int(np.argmin(d_all))
            idx[i], best[i] = j, d_all[j]
        out_idx[s : s + q.size] = idx
        out_d[s : s + q.size] = best
    return out_idx, out_d


def min_separation(points: np.ndarray) -> float:
    if points.size < 2:
        return np.inf
    _, d = _nearest_other(points)
    return float(d.min())


def _nearest_other(points, k=12):
    k = min(k + 1, points.size)
    tree = cKDTree(_xy(points))
    de, ie = tree.query(_xy(points), k=k)
    bd = _bdist(points[ie[:, 1:]], points[:, None])
    arg = np.argmin(bd, axis=1)
    rows = np.arange(points.size)
    best = bd[rows, arg]
    idx = ie[rows, 1 + arg]
    safe = (euclidean_reach(points, best) < de[:, -1]) | (k == points.size)
    for i in np.flatnonzero(~safe):
        d_all = _bdist(points, points[i])
        d_all[i] = np.inf
        j = int(np.argmin(d_all))
        idx[i], best[i] = j, d_all[j]
    return idx, best


def count_within(points: np.ndarray, queries: np.ndarray, radius: float, k0: int = 8) -> np.ndarray:
    """#{j : d(query, z_j) < radius} for each query, exact."""
    if points.size == 0:
        return np.zeros(queries.size, np.int64)
    tree = cKDTree(_xy(points))
    counts = np.empty(queries.size, np.int64)
    reach_all = euclidean_reach(queries, radius)
    prad = np.tanh(radius / 2.0)
    order = np.argsort(reach_all, kind="stable")
    step = 1 << 15
    for s in range(0, queries.size, step):
        pending = order[s : s + step]
        k = min(k0, points.size)
        while pending.size:
            q = queries[pending]
            bound = float(reach_all[pending].max()) * 1.000001
            de, ie = tree.query(_xy(q), k=k, distance_upper_bound=bound, workers=-1)
            if k == 1:
                de, ie = de[:, None], ie[:, None]
            valid = np.isfinite(de)
            ie = np.where(valid, ie, 0)
            cnt = np.sum(valid & (_pdist(points[ie], q[:, None]) < prad), axis=1)
            done = ~valid[:, -1] | (de[:, -1] > reach_all[pending]) | (k >= points.size)
            counts[pending[done]] = cnt[done]
            pending = pending[~done]
            k0 = max(k0, k)
            k = min(2 * k, points.size)
    return counts


def default_rule(eta: float, rmax: float = DEFAULT_RMAX) -> DiskRule:
    return hyperbolic_ring_rule(rmax, eta * RULE_SPACING_FACTOR)


def build_lattice(
    eta: float,
    rule: Optional[DiskRule] = None,
    candidates: Optional[np.ndarray] = None,
    rmax: float = DEFAULT_RMAX,
    certify: bool = True,
) -> BergmanLattice:
    """Greedy eta/2-separated packing with Bergman-Voronoi cells on ``rule``.

    Without an explicit rule the hyperbolic ring rule of spacing eta/8 on
    |z| <= rmax is used; candidates default to the rule nodes.
    """
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must lie in (0, 1)")
    if rule is None:
        rule = default_rule(eta, rmax)
    cand = rule.nodes if candidates is None else np.concatenate([rule.nodes, np.asarray(candidates, complex)])
    pts = greedy_packing(cand, eta / 2.0, np.tanh(eta / 8.0))
    if pts.size == 0:
        raise LatticeCertificationError("greedy packing accepted no points")
    idx, dist = nearest_points(pts, rule.nodes)
    cw = np.bincount(idx, weights=rule.weights, minlength=pts.size)
    sep = min_separation(pts)
    worst = int(np.argmax(dist))
    stats = {
        "n_points": int(pts.size),
        "n_nodes": int(rule.size),
        "min_separation": float(sep),
        "covering_radius": float(dist[worst]),
        "worst_node": [float(rule.nodes[worst].real), float(rule.nodes[worst].imag)],
        "min_abs_point": float(np.abs(pts).min()),
        "empty_cells": int(np.sum(cw == 0)),
        "max_abs_point": float(np.abs(pts).max()),
        # cells tile the disk |z| <= support_radius (normalized area = r^2)
        "support_radius": float(min(1.0, np.sqrt(np.sum(rule.weights)))),
        "rule": {"kind": rule.kind, "resolution": list(rule.resolution), "size": int(rule.size)},
    }
    lat = BergmanLattice(float(eta), pts, cw, rule, idx, dist, stats, False)
    if certify:
        lat = certify_lattice(lat)
    return lat


def certify_lattice(lat: BergmanLattice) -> BergmanLattice:
    eta = lat.eta
    s = dict(lat.stats)
    problems = []
    if s["min_separation"] < eta / 2.0 * (1 - 1e-12):
        problems.append(f"separation {s['min_separation']:.6g} < eta/2")
    if s["covering_radius"] > eta:
        problems.append(f"covering radius {s['covering_radius']:.6g} > eta at node {s['worst_node']}")
    if s["min_abs_point"] < np.tanh(eta / 8.0) * (1 - 1e-12):
        problems.append("origin exclusion violated")
    if np.any(lat.node_distance > eta):
        problems.append("a cell contains a node farther than eta from its point")
    if problems:
        raise LatticeCertificationError("; ".join(problems))
    s["overlap_quarter"] = overlap_count(lat, 0.25)
    if s["overlap_quarter"] != 1:
        raise LatticeCertificationError("balls B(z_j, eta/4) are not disjoint")
    s["overlap_two"] = overlap_count(lat, 2.0)
    return BergmanLattice(lat.eta, lat.points, lat.cell_weights, lat.rule, lat.assignment, lat.node_distance, s, True)


def overlap_count(lat: BergmanLattice, kappa: float) -> int:
    """max over rule nodes of #{j : d(node, z_j) < kappa * eta}."""
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    if lat.points.size == 0:
        return 0
    return int(count_within(lat.points, lat.rule.nodes, kappa * lat.eta).max())
