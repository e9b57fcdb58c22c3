"""Quadrature rules on the unit disk and circle.

Area is normalized so that the disk has measure 1, and the weighted measure
is dA_sigma = (1-|z|^2)^sigma dA with total mass 1/(sigma+1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import roots_jacobi

DEFAULT_NR = 64
DEFAULT_NTHETA = 256


class QuadratureError(ValueError):
    """Raised when an integrand is not finite at some node."""


@dataclass(frozen=True, eq=False)
class DiskRule:
    nodes: np.ndarray
    weights: np.ndarray
    sigma: float = 0.0
    resolution: Tuple[int, int] = (0, 0)
    kind: str = "tensor"

    def __post_init__(self):
        for name in ("nodes", "weights"):
            arr = np.asarray(getattr(self, name)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.nodes)

    def restrict(self, rmax: float) -> "DiskRule":
        keep = np.abs(self.nodes) <= rmax
        return DiskRule(self.nodes[keep], self.weights[keep], self.sigma, self.resolution, self.kind + "-restricted")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "sigma": self.sigma,
            "resolution": list(self.resolution),
            "nodes": [[float(z.real), float(z.imag)] for z in self.nodes],
            "weights": [float(w) for w in self.weights],
        }


@dataclass(frozen=True, eq=False)
class CircleRule:
    """N equispaced angles (optionally shifted by half a step), weight 1/N."""

    n: int
    shift: float = 0.0

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * (np.arange(self.n) + self.shift) / self.n

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)

    @property
    def nodes(self) -> np.ndarray:
        return self.points


def build_circle_rule(n: int, shift: float = 0.0) -> CircleRule:
    if n < 1:
        raise ValueError("circle rule needs at least one node")
    return CircleRule(int(n), float(shift))


def radial_rule(sigma: float, nr: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi nodes s in (0,1) and weights for int_0^1 g(s)(1-s)^sigma ds."""
    if sigma <= -1:
        raise ValueError("sigma must be > -1")
    x, w = roots_jacobi(nr, sigma, 0.0)
    s = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-sigma - 1.0)
    return s, w


def build_disk_rule(sigma: float = 0.0, nr: int = DEFAULT_NR, ntheta: int = DEFAULT_NTHETA) -> DiskRule:
    """Tensor rule for dA_sigma: Gauss-Jacobi in s = |z|^2 times uniform angles.

    The angles sit at half steps, so no node lies on the real axis.
    """
    if sigma <= -1:
        raise ValueError("sigma must be > -1")
    if nr < 4 or ntheta < 8:
        raise ValueError("need nr >= 4 and ntheta >= 8")
    s, ws = radial_rule(sigma, nr)
    theta = 2.0 * np.pi * (np.arange(ntheta) + 0.5) / ntheta
    nodes = (np.sqrt(s)[:, None] * np.exp(1j * theta)[None, :]).reshape(-1)
    weights = np.repeat(ws / ntheta, ntheta)
    return DiskRule(nodes, weights, float(sigma), (int(nr), int(ntheta)), "tensor")


def integrate(rule, g: Union[Callable, np.ndarray]):
    """sum_i w_i g(z_i); g is a callable on node arrays or precomputed values."""
    vals = g(rule.nodes) if callable(g) else np.asarray(g)
    vals = np.asarray(vals)
    if vals.shape[0] != rule.weights.size:
        raise ValueError("integrand values do not match the rule size")
    bad = ~np.isfinite(vals)
    if bad.ndim > 1:
        bad = bad.reshape(bad.shape[0], -1).any(axis=1)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise QuadratureError(f"integrand not finite at node {i}: z = {rule.nodes[i]!r}")
    # numpy's sum is a pairwise reduction with a fixed order
    out = np.tensordot(rule.weights, vals, axes=(0, 0)) if vals.ndim > 1 else np.sum(rule.weights * vals)
    return complex(out) if np.ndim(out) == 0 else out


def ball_transplant(rule: DiskRule, z: complex, R: float) -> DiskRule:
    """Rule for int_{B(z,R)} g dA built from a plain dA rule on the disk."""
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("ball centre must satisfy |z| < 1")
    if R <= 0:
        raise ValueError("ball radius must be > 0")
    if rule.sigma != 0:
        raise ValueError("ball_transplant expects a plain dA rule (sigma = 0)")
    s = np.tanh(R / 2.0)
    u = s * rule.nodes
    denom = 1.0 - np.conj(z) * u
    nodes = (z - u) / denom
    jac = s * s * (1.0 - abs(z) ** 2) ** 2 / np.abs(denom) ** 4
    return DiskRule(nodes, rule.weights * jac, 0.0, rule.resolution, "ball")


def ball_area(z, R: float):
    """Normalized area of B(z,R) in closed form."""
    s = np.tanh(R / 2.0)
    r2 = np.abs(z) ** 2
    return s * s * (1.0 - r2) ** 2 / (1.0 - s * s * r2) ** 2


def hyperbolic_ring_rule(rmax: float, spacing: float, min_per_ring: int = 6) -> DiskRule:
    """Midpoint rule on rings equally spaced in the Bergman metric.

    Rings sit at hyperbolic radii (i+1/2)h covering d(0,z) <= 2 artanh(rmax);
    ring i carries about 2 pi sinh(R_i)/h nodes, odd rings rotated half a step.
    Each node gets an equal share of its annulus' exact area, so the rule has
    roughly uniform hyperbolic density, unlike the tensor rule.
    """
    if not (0 < rmax < 1):
        raise ValueError("rmax must be in (0,1)")
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    Rmax = 2.0 * np.arctanh(rmax)
    m = int(np.ceil(Rmax / spacing))
    h = Rmax / m
    centres = (np.arange(m) + 0.5) * h
    nodes, weights = [], []
    for i, R in enumerate(centres):
        n = max(min_per_ring, int(round(2.0 * np.pi * np.sinh(R) / h)))
        theta = 2.0 * np.pi * (np.arange(n) + 0.5 * (i % 2)) / n
        outer = np.tanh((R + h / 2) / 2) ** 2
        inner = np.tanh(max(R - h / 2, 0.0) / 2) ** 2
        nodes.append(np.tanh(R / 2) * np.exp(1j * theta))
        weights.append(np.full(n, (outer - inner) / n))
    return DiskRule(np.concatenate(nodes), np.concatenate(weights), 0.0, (m, 0), "hyperbolic")
