import json

import numpy as np
import pytest

from channelscope.errors import BadParams, CurveOutOfRange, SpecError
from channelscope.spec_io import FAMILY_FIELDS, Grid, load_spec, parse_spec
from channelscope.zoo import FAMILIES

MINIMAL = {
    "identity": {"params": {"d": 3}},
    "qubit_gad": {"curves": {"lam": {"kind": "exp_saturation", "rate": 1.0}, "p": 0.2}},
    "qudit_gad": {"params": {"probs": [0.2, 0.3, 0.5]}, "curves": {"lam": {"kind": "tanh"}}},
    "quasi_enm_gad": {"params": {"m": 3, "n": 2, "nu": 1}},
    "pauli_enm": {"params": {"c": 1.0}},
    "nonunital_enm": {"curves": {"gamma": 0.5}},
    "phase_covariant": {},
    "ququart_enm": {"params": {"c": 1.0}},
}


def test_families_agree():
    assert set(FAMILY_FIELDS) == set(FAMILIES) == set(MINIMAL)


@pytest.mark.parametrize("family", sorted(MINIMAL))
def test_every_family_builds(family):
    spec = parse_spec({"family": family, **MINIMAL[family], "grid": {"t_max": 1.0, "points": 5}})
    dyn = spec.build()
    F = dyn(0.5)
    assert F.dim == dyn.dim
    assert np.isfinite(F.matrix).all()


def test_json_and_yaml_load_the_same(tmp_path):
    doc = {"family": "quasi_enm_gad", "params": {"m": 3, "n": 2, "nu": 1},
           "grid": {"t_min": 0, "t_max": 5, "points": 500}}
    (tmp_path / "a.json").write_text(json.dumps(doc))
    (tmp_path / "a.yaml").write_text(
        "family: quasi_enm_gad\nparams: {m: 3, n: 2, nu: 1}\ngrid: {t_min: 0, t_max: 5, points: 500}\n"
    )
    a, b = load_spec(tmp_path / "a.json"), load_spec(tmp_path / "a.yaml")
    assert a.to_dict() == b.to_dict()
    assert a.digest() == b.digest()
    assert a.grid.times.size == 500


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"family": "nope"},
        {"family": "pauli_enm", "extra": 1},
        {"family": "pauli_enm", "params": {"m": 1}},
        {"family": "pauli_enm", "params": {"c": "one"}},
        {"family": "pauli_enm", "curves": {"lam": 0.1}},
        {"family": "pauli_enm", "grid": {"t_min": 2, "t_max": 1}},
        {"family": "pauli_enm", "grid": {"steps": 3}},
        {"family": "qudit_gad", "params": {"probs": 0.5}},
        {"family": "qubit_gad", "curves": {"lam": {"kind": "wiggle"}}},
    ],
)
def test_bad_documents(doc):
    with pytest.raises(SpecError):
        parse_spec(doc)


def test_unreadable_files(tmp_path):
    with pytest.raises(SpecError):
        load_spec(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(SpecError):
        load_spec(tmp_path / "bad.json")


def test_parameter_errors_surface_unchanged():
    with pytest.raises(BadParams):
        parse_spec({"family": "quasi_enm_gad", "params": {"m": 1, "nu": 2}}).build()
    spec = parse_spec({"family": "qubit_gad",
                       "curves": {"lam": {"kind": "linear", "slope": 0.05, "offset": 0.1}}})
    with pytest.raises(CurveOutOfRange):
        spec.build()
    with pytest.raises(SpecError):
        parse_spec({"family": "qubit_gad"}).build()


def test_grid_parse():
    g = Grid.parse("0:5:11")
    assert (g.t_min, g.t_max, g.points) == (0.0, 5.0, 11)
    for bad in ("0:5", "a:b:c", "1:0:3", "0:1:1"):
        with pytest.raises(SpecError):
            Grid.parse(bad)
