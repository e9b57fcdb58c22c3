"""JSON formats for measures, functions, lattices and decompositions.

Every writer goes through :func:`dumps`, which sorts keys and prints floats
with ``repr`` so that equal inputs give byte-identical files.
"""

from __future__ import annotations

import json
from typing import Any, Dict

import numpy as np

from .analytic import AnalyticFunction
from .decomposition import AtomicDecomposition
from .hyperbolic import BergmanLattice
from .measure import CircleMeasure, Density


class FormatError(ValueError):
    """Input file does not follow the expected layout."""


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return x
    if isinstance(obj, (complex, np.complexfloating)):
        return cplx(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def cplx(z) -> Dict[str, float]:
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def read_complex(x) -> complex:
    if isinstance(x, dict):
        try:
            return complex(float(x.get("re", 0.0)), float(x.get("im", 0.0)))
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad complex number {x!r}") from exc
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    raise FormatError(f"bad complex number {x!r}")


def _require(d, key, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise FormatError(f"missing field {key!r}")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise FormatError(f"field {key!r} has the wrong type")
    return v


# -- measures -------------------------------------------------------------------


def measure_to_dict(mu: CircleMeasure) -> dict:
    dens = None
    if mu.density is not None:
        if mu.density.kind == "constant":
            dens = {"kind": "constant", "value": float(mu.density.value)}
        else:
            dens = {"kind": "samples", "values": [float(v) for v in mu.density.samples]}
    return {
        "atoms": [{"angle": float(a), "mass": float(m)} for a, m in zip(mu.angles, mu.masses)],
        "density": dens,
        "name": mu.name,
    }


def measure_from_dict(d: dict) -> CircleMeasure:
    if not isinstance(d, dict):
        raise FormatError("a measure must be a JSON object")
    atoms = d.get("atoms", [])
    if not isinstance(atoms, list):
        raise FormatError("'atoms' must be a list")
    try:
        angles = [float(_require(a, "angle")) for a in atoms]
        masses = [float(_require(a, "mass")) for a in atoms]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad atom entry: {exc}") from exc
    dens = d.get("density")
    density = None
    if dens is not None:
        kind = _require(dens, "kind", str)
        try:
            if kind == "constant":
                density = Density("constant", value=float(_require(dens, "value")))
            elif kind == "samples":
                density = Density("samples", samples=np.asarray(_require(dens, "values", list), float))
            else:
                raise FormatError(f"unknown density kind {kind!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad density: {exc}") from exc
    try:
        return CircleMeasure(np.asarray(angles, float), np.asarray(masses, float), density, d.get("name"))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


# -- functions ------------------------------------------------------------------


def function_to_dict(f: AnalyticFunction) -> dict:
    return {
        "poly": [cplx(c) for c in f.poly],
        "atoms": [
            {"a": cplx(a), "b": float(b), "gamma": cplx(g), "offset": bool(o)}
            for a, b, g, o in zip(f.a, f.b, f.gamma, f.offset)
        ],
    }


def function_from_dict(d: dict) -> AnalyticFunction:
    if not isinstance(d, dict):
        raise FormatError("a function must be a JSON object")
    poly = d.get("poly", [0.0])
    if not isinstance(poly, list):
        raise FormatError("'poly' must be a list")
    atoms = d.get("atoms", [])
    if not isinstance(atoms, list):
        raise FormatError("'atoms' must be a list")
    a = [read_complex(_require(t, "a")) for t in atoms]
    try:
        b = [float(_require(t, "b")) for t in atoms]
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad atom power: {exc}") from exc
    g = [read_complex(t.get("gamma", 1.0)) for t in atoms]
    off = [bool(t.get("offset", False)) for t in atoms]
    try:
        return AnalyticFunction([read_complex(c) for c in poly] or [0.0], a, b, g, off)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


# -- lattices -------------------------------------------------------------------


def lattice_to_dict(lat: BergmanLattice) -> dict:
    return {
        "lattice_id": lat.lattice_id,
        "eta": float(lat.eta),
        "points": [[float(p.real), float(p.imag)] for p in lat.points],
        "cell_weights": [float(w) for w in lat.cell_weights],
        "stats": lat.stats,
        "certified": bool(lat.certified),
    }


def lattice_from_dict(d: dict) -> BergmanLattice:
    """Points and cell weights only; the cell quadrature rule is not stored.

    Enough for synthesis and for coefficient energies, not for a new analysis.
    """
    try:
        eta = float(_require(d, "eta"))
        pts = np.array([complex(x, y) for x, y in _require(d, "points", list)], complex)
        cw = np.asarray(_require(d, "cell_weights", list), float)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"bad lattice: {exc}") from exc
    if cw.shape != pts.shape:
        raise FormatError("points and cell_weights differ in length")
    lat = BergmanLattice(eta, pts, cw, None, np.zeros(0, int), np.zeros(0), dict(d.get("stats", {})), bool(d.get("certified", False)))
    want = d.get("lattice_id")
    if want is not None and want != lat.lattice_id:
        raise FormatError("lattice_id does not match the stored points")
    return lat


# -- decompositions -----------------------------------------------------------------


def decomposition_to_dict(dec: AtomicDecomposition) -> dict:
    return dec.to_dict()


def decomposition_from_dict(d: dict) -> AtomicDecomposition:
    try:
        lam = np.array([complex(x, y) for x, y in _require(d, "lambdas", list)], complex)
        c = _require(d, "constant")
        c0 = read_complex(c)
        return AtomicDecomposition(c0, lam, float(_require(d, "b")), str(_require(d, "lattice_id")), dict(d.get("diagnostics", {})))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"bad decomposition: {exc}") from exc


def load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc
