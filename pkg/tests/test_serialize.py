import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dirichlet_spaces import analytic as an
from dirichlet_spaces import serialize as sz
from dirichlet_spaces.corpus import function_corpus, measure_corpus
from dirichlet_spaces.decomposition import AtomicDecomposition
from dirichlet_spaces.hyperbolic import build_lattice
from dirichlet_spaces.measure import Density, CircleMeasure, poisson_extension

finite = st.floats(-5, 5, allow_nan=False)


def test_dumps_sorted_and_plain():
    text = sz.dumps({"b": np.float64(1.5), "a": [np.int64(2), 1 + 2j], "c": float("inf"), "d": np.array([True])})
    assert text.endswith("\n")
    d = json.loads(text)
    assert list(d) == ["a", "b", "c", "d"]
    assert d["a"] == [2, {"re": 1.0, "im": 2.0}] and d["c"] == "inf" and d["d"] == [True]


@given(finite, finite)
def test_complex_forms(x, y):
    z = complex(x, y)
    assert sz.read_complex(sz.cplx(z)) == z
    assert sz.read_complex([x, y]) == z
    assert sz.read_complex(x) == complex(x)


def test_bad_complex():
    for bad in ("1+2j", [1, 2, 3], None, True, {"re": "x"}):
        with pytest.raises(sz.FormatError):
            sz.read_complex(bad)


def test_measure_round_trip():
    pts = 0.7 * np.exp(1j * np.linspace(0, 6, 9))
    mus = list(measure_corpus().values())
    mus.append(CircleMeasure(np.zeros(0), np.zeros(0), Density("samples", samples=np.linspace(0.5, 1.5, 16)), "ramp"))
    for mu in mus:
        back = sz.measure_from_dict(json.loads(sz.dumps(sz.measure_to_dict(mu))))
        assert np.allclose(poisson_extension(back, pts), poisson_extension(mu, pts), rtol=1e-14)


@pytest.mark.parametrize(
    "bad",
    [[1, 2], {"atoms": {}}, {"atoms": [{"angle": 0.0}]}, {"density": {"kind": "weird"}}, {"atoms": [{"angle": 0.0, "mass": -1.0}]}],
)
def test_measure_rejects(bad):
    with pytest.raises(sz.FormatError):
        sz.measure_from_dict(bad)


def test_function_round_trip():
    z = np.array([0.0, 0.3 - 0.5j, 0.8])
    for f in function_corpus().values():
        back = sz.function_from_dict(json.loads(sz.dumps(sz.function_to_dict(f))))
        assert np.array_equal(an.evaluate(back, z), an.evaluate(f, z))


def test_function_rejects():
    with pytest.raises(sz.FormatError):
        sz.function_from_dict({"poly": 3})
    with pytest.raises(sz.FormatError):
        sz.function_from_dict({"atoms": [{"a": [0.5, 0.0]}]})


def test_lattice_and_decomposition_round_trip():
    lat = build_lattice(0.8)
    back = sz.lattice_from_dict(json.loads(sz.dumps(sz.lattice_to_dict(lat))))
    assert back.lattice_id == lat.lattice_id and np.array_equal(back.points, lat.points)
    d = sz.lattice_to_dict(lat)
    d["points"][0][0] += 1e-3
    with pytest.raises(sz.FormatError, match="lattice_id"):
        sz.lattice_from_dict(d)
    dec = AtomicDecomposition(0.5 - 1j, np.arange(lat.size) * (1 + 1j), 3.0, lat.lattice_id, {"rho": 0.1})
    dd = sz.decomposition_from_dict(json.loads(sz.dumps(sz.decomposition_to_dict(dec))))
    assert dd.constant == dec.constant and np.array_equal(dd.lambdas, dec.lambdas) and dd.b == 3.0


def test_load_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(sz.FormatError, match="not valid JSON"):
        sz.load_json(str(p))
    with pytest.raises(sz.FormatError, match="cannot read"):
        sz.load_json(str(tmp_path / "missing.json"))
