"""Finite positive measures on the unit circle and their Poisson extensions.

Normalization: the Poisson kernel is (1-|z|^2)/|zeta-z|^2 with no 1/2pi, and a
density is integrated against normalized arclength dtheta/2pi.  Under this
pairing the normalized Lebesgue measure m has unit mass and P_m == 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class Density:
    """Smooth nonnegative density on the circle.

    ``kind`` is ``"constant"`` (``value`` used) or ``"samples"``: values at the
    equispaced angles 2*pi*k/N, k = 0..N-1, extended by trigonometric
    interpolation.
    """

    kind: str
    value: float = 0.0
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "constant":
            if not np.isfinite(self.value) or self.value < 0:
                raise ValueError("constant density must be finite and >= 0")
        elif self.kind == "samples":
            s = np.asarray(self.samples, dtype=float)
            if s.ndim != 1 or s.size < 1:
                raise ValueError("density samples must be a nonempty 1-d array")
            if not np.all(np.isfinite(s)) or np.any(s < 0):
                raise ValueError("density samples must be finite and >= 0")
            s = s.copy()
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)
        else:
            raise ValueError(f"unknown density kind {self.kind!r}")

    def fourier(self, kmax: int) -> np.ndarray:
        """Coefficients d_k = int density * e^{-ik theta} dtheta/2pi for k = 0..kmax."""
        out = np.zeros(kmax + 1, dtype=complex)
        if self.kind == "constant":
            out[0] = self.value
            return out
        s = self.samples
        n = s.size
        c = np.fft.fft(s) / n
        half = n // 2
        top = min(kmax, half)
        out[: top + 1] = c[: top + 1]
        if n % 2 == 0 and half <= kmax and half > 0:
            # split the Nyquist term evenly between +-N/2
            out[half] = 0.5 * c[half]
        return out

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if self.kind == "constant":
            return np.full(theta.shape, self.value)
        n = self.samples.size
        d = self.fourier(n // 2)
        k = np.arange(1, d.size)
        vals = d[0].real + 2.0 * np.real(np.exp(1j * np.multiply.outer(theta, k)) @ d[1:])
        return vals

    @property
    def mass(self) -> float:
        if self.kind == "constant":
            return float(self.value)
        return float(np.mean(self.samples))


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Atoms plus an optional smooth density on the unit circle."""

    angles: np.ndarray = field(default_factory=lambda: np.zeros(0))
    masses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    density: Optional[Density] = None
    name: Optional[str] = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.angles, dtype=float)).copy()
        m = np.atleast_1d(np.asarray(self.masses, dtype=float)).copy()
        if a.shape != m.shape or a.ndim != 1:
            raise ValueError("angles and masses must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(m))):
            raise ValueError("atom angles and masses must be finite")
        if np.any(m <= 0):
            raise ValueError("atom masses must be > 0")
        a = np.mod(a, TWO_PI)
        a.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "masses", m)

    @property
    def is_zero(self) -> bool:
        return self.masses.size == 0 and (self.density is None or self.density.mass == 0.0)

    def fourier(self, kmax: int) -> np.ndarray:
        """mu_hat(k) = int conj(zeta)^k dmu(zeta) for k = 0..kmax."""
        k = np.arange(kmax + 1)
        out = np.zeros(kmax + 1, dtype=complex)
        if self.masses.size:
            out += np.exp(-1j * np.multiply.outer(k, self.angles)) @ self.masses
        if self.density is not None:
            out += self.density.fourier(kmax)
        return out

    def __add__(self, other: "CircleMeasure") -> "CircleMeasure":
        return combine([1.0, 1.0], [self, other])


def total_mass(mu: CircleMeasure) -> float:
    mass = float(np.sum(mu.masses))
    if mu.density is not None:
        mass += mu.density.mass
    return mass


def _check_inside(z):
    z = np.asarray(z, dtype=complex)
    if np.any(~np.isfinite(z)) or np.any(np.abs(z) >= 1.0):
        raise ValueError("evaluation points must satisfy |z| < 1")
    return z


def _harmonic_density(d: Density, z: np.ndarray) -> np.ndarray:
    if d.kind == "constant":
        return np.full(z.shape, float(d.value))
    # P[density](z) = Re(d_0 + 2 sum_{k>=1} d_k z^k), exact for the interpolant
    c = d.fourier(d.samples.size // 2)
    acc = np.zeros(z.shape, dtype=complex)
    for ck in c[:0:-1]:
        acc = (acc + ck) * z
    return c[0].real + 2.0 * acc.real


def poisson_extension(mu: CircleMeasure, z):
    """P_mu(z); accepts scalars or arrays with |z| < 1."""
    z = _check_inside(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    one_minus = 1.0 - np.abs(z) ** 2
    out = np.zeros(z.shape)
    if mu.masses.size:
        zeta = np.exp(1j * mu.angles)
        flat = z.reshape(-1)
        acc = np.zeros(flat.shape)
        for s in range(0, flat.size, 1 << 16):
            blk = flat[s : s + (1 << 16)]
            acc[s : s + blk.size] = (np.abs(zeta[None, :] - blk[:, None]) ** -2) @ mu.masses
        out += one_minus * acc.reshape(z.shape)
    if mu.density is not None:
        out += _harmonic_density(mu.density, z)
    return float(out[0]) if scalar else out


def poisson_truncated(mu: CircleMeasure, z, r: float):
    """P_{mu_r}(z) = int r^2(1-|z|^2)/|zeta - r z|^2 dmu(zeta)."""
    if not (0.0 < r < 1.0):
        raise ValueError("truncation radius r must lie in (0, 1)")
    z = _check_inside(z)
    rz = r * z
    fac = r * r * (1.0 - np.abs(z) ** 2) / (1.0 - np.abs(rz) ** 2)
    return fac * poisson_extension(mu, rz)


def poisson_band(mu: CircleMeasure, z, band: int) -> np.ndarray:
    """Harmonic series of P_mu truncated to frequencies |k| <= band.

    The k = +-band terms carry half weight, matching trigonometric
    interpolation on 2*band equispaced angles.
    """
    if band < 1:
        raise ValueError("band must be >= 1")
    z = np.asarray(z, dtype=complex)
    c = mu.fourier(band)
    # P = c_0 + 2 Re sum_{k>=1} c_k z^k   (c_k = int conj(zeta)^k dmu)
    c[band] *= 0.5
    acc = np.zeros(z.shape, dtype=complex)
    for ck in c[:0:-1]:
        acc = (acc + ck) * z
    return c[0].real + 2.0 * acc.real


# Standard measures -------------------------------------------------------


def lebesgue(mass: float = 1.0) -> CircleMeasure:
    return CircleMeasure(density=Density("constant", value=float(mass)), name="m")


def dirac(angle: float = 0.0, mass: float = 1.0) -> CircleMeasure:
    return CircleMeasure(angles=[angle], masses=[mass], name=f"delta_{angle:g}")


def zero_measure() -> CircleMeasure:
    return CircleMeasure(name="zero")


def from_density_function(fn: Callable, n: int = 256, name: Optional[str] = None) -> CircleMeasure:
    theta = TWO_PI * np.arange(n) / n
    return CircleMeasure(density=Density("samples", samples=np.asarray(fn(theta), float)), name=name)


def combine(weights: Sequence[float], measures: Sequence[CircleMeasure], name=None) -> CircleMeasure:
    """Nonnegative combination sum w_i mu_i."""
    if len(weights) != len(measures):
        raise ValueError("weights and measures differ in length")
    angles, masses = [], []
    const = 0.0
    sampled = None
    for w, mu in zip(weights, measures):
        if w < 0:
            raise ValueError("combination weights must be >= 0")
        if w == 0:
            continue
        angles.append(mu.angles)
        masses.append(w * mu.masses)
        d = mu.density
        if d is None:
            continue
        if d.kind == "constant":
            const += w * d.value
        else:
            s = w * d.samples
            if sampled is None:
                sampled = s
            elif sampled.size == s.size:
                sampled = sampled + s
            else:
                raise ValueError("cannot combine sampled densities of different sizes")
    angles = np.concatenate(angles) if angles else np.zeros(0)
    masses = np.concatenate(masses) if masses else np.zeros(0)
    keep = masses > 0
    density = None
    if sampled is not None:
        density = Density("samples", samples=sampled + const)
    elif const > 0:
        density = Density("constant", value=const)
    return CircleMeasure(angles=angles[keep], masses=masses[keep], density=density, name=name)
