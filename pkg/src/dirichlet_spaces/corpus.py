"""Fixed test corpora of functions and measures."""

from __future__ import annotations

from typing import Dict

import numpy as np

from . import analytic as an
from .measure import CircleMeasure, combine, dirac, lebesgue

CORPUS_SEED = 20240517


def random_polynomial(seed: int, degree: int = 8) -> an.AnalyticFunction:
    rng = np.random.default_rng(seed)
    c = (rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)) / np.sqrt(2.0)
    return an.polynomial(c / np.sqrt(degree + 1))


def function_corpus(seed: int = CORPUS_SEED, n_random: int = 7) -> Dict[str, an.AnalyticFunction]:
    out: Dict[str, an.AnalyticFunction] = {}
    for n in range(1, 7):
        out[f"z^{n}"] = an.monomial(n)
    out["1/(1-0.5z)"] = an.atoms([0.5], 1.0, 1.0)
    out["(1-0.9z)^-1.5-1"] = an.atoms([0.9], 1.5, 1.0, offset=True)
    for i in range(n_random):
        out[f"rand8_{i}"] = random_polynomial(seed + i)
    return out


def measure_corpus() -> Dict[str, CircleMeasure]:
    return {
        "m": lebesgue(),
        "delta0": dirac(0.0),
        "mix": combine([0.5, 0.5], [lebesgue(), dirac(np.pi / 2)], name="0.5m+0.5delta_pi/2"),
    }


def decomposition_corpus() -> Dict[str, an.AnalyticFunction]:
    return {
        "z": an.monomial(1),
        "z^3": an.monomial(3),
        "1/(1-0.5z)-1": an.atoms([0.5], 1.0, 1.0, offset=True),
    }
