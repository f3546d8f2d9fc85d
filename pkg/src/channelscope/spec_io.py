"""Channel-specification documents.

A document is a mapping with the fields ``family``, ``params`` (named
reals), ``curves`` (name -> curve description) and ``grid`` (``t_min``,
``t_max``, ``points``). Files ending in ``.yaml``/``.yml`` are read as YAML,
everything else as JSON. Example::

    {"family": "quasi_enm_gad",
     "params": {"m": 3, "n": 2, "nu": 1},
     "grid": {"t_min": 0, "t_max": 5, "points": 500}}

A curve is either a bare number (constant) or a mapping with ``kind`` and
that kind's parameters; ``{"kind": "tabulated", "t": [...], "values": [...]}``
gives a sampled curve.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import zoo
from .curves import ParamCurve, admit_damping_curve, constant
from .errors import ParameterError, SpecError

DEFAULT_GRID = {"t_min": 0.0, "t_max": 5.0, "points": 500}

# family -> (allowed params, allowed curves)
FAMILY_FIELDS = {
    "identity": ({"d"}, set()),
    "qubit_gad": (set(), {"p", "lam"}),
    "qudit_gad": ({"probs"}, {"lam"}),
    "quasi_enm_gad": ({"m", "n", "nu"}, set()),
    "pauli_enm": ({"c"}, set()),
    "nonunital_enm": (set(), {"gamma"}),
    "phase_covariant": (set(), {"gamma_z", "gamma"}),
    "ququart_enm": ({"c", "p"}, {"lam"}),
}


@dataclass(frozen=True)
class Grid:
    t_min: float
    t_max: float
    points: int

    def __post_init__(self):
        if not (np.isfinite(self.t_min) and np.isfinite(self.t_max)):
            raise SpecError("grid bounds must be finite")
        if self.t_min < 0 or not self.t_max > self.t_min or self.points < 2:
            raise SpecError(f"bad grid {self.t_min}:{self.t_max}:{self.points}")

    @property
    def times(self):
        return np.linspace(self.t_min, self.t_max, self.points)

    @classmethod
    def parse(cls, text):
        """Parse ``tmin:tmax:points``."""
        parts = str(text).split(":")
        if len(parts) != 3:
            raise SpecError(f"grid must look like tmin:tmax:points, got {text!r}")
        try:
            return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise SpecError(f"bad grid {text!r}: {exc}") from None


@dataclass(frozen=True)
class ChannelSpec:
    family: str
    params: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    grid: Grid = field(default_factory=lambda: Grid(**DEFAULT_GRID))

    def to_dict(self):
        params = {
            k: (list(map(float, v)) if isinstance(v, (list, tuple, np.ndarray)) else v)
            for k, v in self.params.items()
        }
        return {
            "family": self.family,
            "params": params,
            "curves": {k: c.to_dict() for k, c in self.curves.items()},
            "grid": {"t_min": self.grid.t_min, "t_max": self.grid.t_max,
                     "points": self.grid.points},
        }

    def digest(self):
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_grid(self, grid):
        return ChannelSpec(self.family, self.params, self.curves, grid)

    def build(self):
        """Construct the :class:`~channelscope.zoo.Dynamics` this spec describes."""
        try:
            return _BUILDERS[self.family](self)
        except ParameterError:
            raise
        except (TypeError, ValueError) as exc:
            raise SpecError(f"cannot build '{self.family}': {exc}") from None


def _number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"param '{name}' must be a number, got {value!r}")
    return float(value)


def parse_spec(doc):
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a mapping")
    unknown = set(doc) - {"family", "params", "curves", "grid"}
    if unknown:
        raise SpecError(f"unknown top-level fields {sorted(unknown)}")
    family = doc.get("family")
    if family not in FAMILY_FIELDS:
        raise SpecError(f"unknown family {family!r}; choose from {sorted(FAMILY_FIELDS)}")
    allowed_params, allowed_curves = FAMILY_FIELDS[family]
    raw_params = doc.get("params") or {}
    raw_curves = doc.get("curves") or {}
    if not isinstance(raw_params, dict) or not isinstance(raw_curves, dict):
        raise SpecError("'params' and 'curves' must be mappings")
    bad = set(raw_params) - allowed_params
    if bad:
        raise SpecError(f"family '{family}' does not take params {sorted(bad)}")
    bad = set(raw_curves) - allowed_curves
    if bad:
        raise SpecError(f"family '{family}' does not take curves {sorted(bad)}")
    params = {}
    for k, v in raw_params.items():
        if k == "probs":
            if not isinstance(v, list) or not v:
                raise SpecError("'probs' must be a non-empty list of numbers")
            params[k] = [_number(k, x) for x in v]
        else:
            params[k] = _number(k, v)
    curves = {k: ParamCurve.from_dict(v) for k, v in raw_curves.items()}
    grid_doc = doc.get("grid") or DEFAULT_GRID
    if not isinstance(grid_doc, dict) or set(grid_doc) - {"t_min", "t_max", "points"}:
        raise SpecError("grid must be a mapping with t_min, t_max, points")
    g = {**DEFAULT_GRID, **grid_doc}
    try:
        grid = Grid(float(g["t_min"]), float(g["t_max"]), int(g["points"]))
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad grid: {exc}") from None
    return ChannelSpec(family, params, curves, grid)


def load_spec(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from None
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot parse {path}: {exc}") from None
    return parse_spec(doc)


def _curve(spec, name, default):
    return spec.curves.get(name, default)


def _build_identity(spec):
    d = spec.params.get("d", 2.0)
    if d != int(d) or d < 2:
        raise SpecError(f"identity needs an integer d >= 2, got {d}")
    return zoo.IdentityDynamics(int(d))


def _build_qubit_gad(spec):
    if "lam" not in spec.curves:
        raise SpecError("qubit_gad needs a 'lam' curve")
    p = _curve(spec, "p", constant(0.5))
    params = zoo.QubitGadParams(p, spec.curves["lam"]).validate(spec.grid.t_max)
    return zoo.qubit_gad_dynamics(params)


def _build_qudit_gad(spec):
    if "lam" not in spec.curves or "probs" not in spec.params:
        raise SpecError("qudit_gad needs 'probs' and a 'lam' curve")
    params = zoo.QuditGadParams(np.array(spec.params["probs"]), spec.curves["lam"])
    admit_damping_curve(params.lam, spec.grid.t_max)
    dyn = zoo.qudit_gad_dynamics(params)
    dyn.fixed_point = zoo.gad_fixed_point(params)
    return dyn


def _build_quasi_enm(spec):
    return zoo.quasi_enm_dynamics(zoo.QuasiEnmParams(**spec.params))


def _build_pauli_enm(spec):
    return zoo.pauli_enm_dynamics(spec.params.get("c", 1.0))


def _build_nonunital_enm(spec):
    gamma = _curve(spec, "gamma", constant(1.0))
    return zoo.nonunital_enm_dynamics(gamma, t_max=spec.grid.t_max)


def _build_phase_covariant(spec):
    gz, g = zoo.default_phase_covariant_curves()
    return zoo.phase_covariant_dynamics(
        _curve(spec, "gamma_z", gz), _curve(spec, "gamma", g), t_max=spec.grid.t_max
    )


def _build_ququart(spec):
    lam = spec.curves.get("lam")
    if lam is not None:
        admit_damping_curve(lam, spec.grid.t_max)
    return zoo.ququart_enm_dynamics(spec.params.get("c", 1.0), lam, spec.params.get("p", 0.0))


_BUILDERS = {
    "identity": _build_identity,
    "qubit_gad": _build_qubit_gad,
    "qudit_gad": _build_qudit_gad,
    "quasi_enm_gad": _build_quasi_enm,
    "pauli_enm": _build_pauli_enm,
    "nonunital_enm": _build_nonunital_enm,
    "phase_covariant": _build_phase_covariant,
    "ququart_enm": _build_ququart,
}
