"""Scalar time curves: damping parameters, mixing probabilities, rates."""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CurveOutOfRange, SpecError


def _kind_table():
    # kind -> (required params, defaults, value, derivative)
    exp, tanh, sin, cos = np.exp, np.tanh, np.sin, np.cos
    return {
        "constant": (
            ("value",),
            {},
            lambda t, value: np.full_like(t, value),
            lambda t, value: np.zeros_like(t),
        ),
        "linear": (
            ("slope",),
            {"offset": 0.0},
            lambda t, slope, offset: offset + slope * t,
            lambda t, slope, offset: np.full_like(t, slope),
        ),
        "exp_decay": (
            ("rate",),
            {"amplitude": 1.0},
            lambda t, rate, amplitude: amplitude * exp(-rate * t),
            lambda t, rate, amplitude: -rate * amplitude * exp(-rate * t),
        ),
        "exp_saturation": (
            ("rate",),
            {"amplitude": 1.0},
            lambda t, rate, amplitude: amplitude * -np.expm1(-rate * t),
            lambda t, rate, amplitude: rate * amplitude * exp(-rate * t),
        ),
        "tanh": (
            (),
            {"amplitude": 1.0, "rate": 1.0},
            lambda t, amplitude, rate: amplitude * tanh(rate * t),
            lambda t, amplitude, rate: amplitude * rate / np.cosh(rate * t) ** 2,
        ),
        "sin_squared": (
            ("omega",),
            {"amplitude": 1.0},
            lambda t, omega, amplitude: amplitude * sin(omega * t) ** 2,
            lambda t, omega, amplitude: amplitude * omega * sin(2 * omega * t),
        ),
        "damped_oscillation": (
            ("rate", "omega"),
            {"amplitude": 1.0, "depth": 0.5},
            lambda t, rate, omega, amplitude, depth: amplitude
            * -np.expm1(-rate * t)
            * (1 - depth * sin(omega * t) ** 2),
            lambda t, rate, omega, amplitude, depth: amplitude
            * (
                rate * exp(-rate * t) * (1 - depth * sin(omega * t) ** 2)
                - -np.expm1(-rate * t) * depth * omega * sin(2 * omega * t)
            ),
        ),
    }


KINDS = _kind_table()


@dataclass(frozen=True, eq=False)
class ParamCurve:
    """A real function of time with an analytic or interpolated derivative.

    Analytic kinds (see ``KINDS``) are parametrized by keyword params. The
    ``tabulated`` kind interpolates samples with a monotone cubic (PCHIP).
    """

    kind: str
    params: dict = field(default_factory=dict)
    t_max: float = np.inf

    def __post_init__(self):
        params = dict(self.params)
        if self.kind == "tabulated":
            t = np.asarray(params.get("t", ()), dtype=float)
            v = np.asarray(params.get("values", ()), dtype=float)
            if t.ndim != 1 or t.shape != v.shape or t.size < 2:
                raise SpecError("tabulated curve needs equal-length 't' and 'values'")
            if np.any(np.diff(t) <= 0):
                raise SpecError("tabulated curve times must be strictly increasing")
            interp = PchipInterpolator(t, v, extrapolate=False)
            object.__setattr__(self, "_interp", interp)
            object.__setattr__(self, "_deriv", interp.derivative())
            object.__setattr__(self, "t_max", float(min(self.t_max, t[-1])))
        elif self.kind in KINDS:
            required, defaults, _, _ = KINDS[self.kind]
            missing = [p for p in required if p not in params]
            unknown = set(params) - set(required) - set(defaults)
            if missing or unknown:
                raise SpecError(
                    f"curve '{self.kind}': missing {missing}, unknown {sorted(unknown)}"
                )
            params = {**defaults, **{k: float(v) for k, v in params.items()}}
        else:
            raise SpecError(f"unknown curve kind '{self.kind}'")
        object.__setattr__(self, "params", params)

    def _eval(self, t, which):
        t_arr = np.asarray(t, dtype=float)
        if self.kind == "tabulated":
            out = (self._interp if which == 2 else self._deriv)(t_arr)
            if np.any(np.isnan(out)):
                raise CurveOutOfRange(f"time outside tabulated domain [.., {self.t_max}]")
        else:
            fn = KINDS[self.kind][which]
            out = fn(t_arr, **self.params)
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, t):
        return self._eval(t, 2)

    def derivative(self, t):
        return self._eval(t, 3)

    def to_dict(self):
        if self.kind == "tabulated":
            return {
                "kind": "tabulated",
                "t": [float(x) for x in self.params["t"]],
                "values": [float(x) for x in self.params["values"]],
            }
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, doc):
        if isinstance(doc, (int, float)):
            return cls("constant", {"value": float(doc)})
        if not isinstance(doc, dict) or "kind" not in doc:
            raise SpecError(f"curve must be a number or a mapping with 'kind': {doc!r}")
        params = {k: v for k, v in doc.items() if k != "kind"}
        return cls(doc["kind"], params)


def constant(value):
    return ParamCurve("constant", {"value": value})


def admit_damping_curve(curve, t_max=10.0, points=2001, h=1e-6):
    """Check the preconditions a damping curve must meet.

    ``lambda(0) = 0``, ``0 <= lambda <= 1`` on a grid over ``[0, t_max]``, and
    a forward-difference slope at zero that is not negative. Returns the
    estimated ``lambda'(0)``; raises :class:`CurveOutOfRange` otherwise.
    """
    t_max = min(t_max, curve.t_max)
    lam0 = curve(0.0)
    if abs(lam0) > 1e-12:
        raise CurveOutOfRange(f"damping curve must start at 0, got lambda(0) = {lam0:.3g}")
    values = curve(np.linspace(0.0, t_max, points))
    if values.min() < -1e-12 or values.max() > 1 + 1e-12:
        raise CurveOutOfRange(
            f"damping curve leaves [0, 1]: range [{values.min():.3g}, {values.max():.3g}]"
        )
    slope = (curve(h) - lam0) / h
    if slope < -1e-9:
        raise CurveOutOfRange(f"damping curve decreases at t=0 (slope {slope:.3g})")
    return slope


def check_probability_curve(curve, t_max=10.0, points=2001):
    t_max = min(t_max, curve.t_max)
    values = curve(np.linspace(0.0, t_max, points))
    if values.min() < -1e-12 or values.max() > 1 + 1e-12:
        raise CurveOutOfRange(
            f"probability curve leaves [0, 1]: range [{values.min():.3g}, {values.max():.3g}]"
        )
