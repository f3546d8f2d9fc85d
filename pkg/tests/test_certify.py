import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channelscope.certify import (
    PropertyResult,
    affine_reconstruction,
    damping_curve_admission,
    random_damping_curve,
    random_probability_curve,
    fixed_point_contraction,
)
from channelscope.curves import ParamCurve, admit_damping_curve, check_probability_curve
from channelscope.zoo import pauli_enm_dynamics


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_random_curves_are_admissible(seed):
    rng = np.random.default_rng(seed)
    admit_damping_curve(random_damping_curve(rng))
    check_probability_curve(random_probability_curve(rng))


def test_property_result_sign_convention():
    assert PropertyResult("a", 1, 0.0, 1e-9).passed
    assert not PropertyResult("a", 1, -1e-12, 1e-9).passed
    assert not PropertyResult("a", 1, float("nan"), 1e-9).passed
    assert PropertyResult("a", 1, float("nan"), 1e-9).to_dict()["worst_margin"] is None


def test_admission_flags_bad_curve():
    good = ("good", ParamCurve("exp_saturation", {"rate": 1.0}))
    bad = ("bad", ParamCurve("linear", {"slope": 0.0, "offset": 0.1}))
    assert damping_curve_admission([good]).passed
    res = damping_curve_admission([good, bad])
    assert not res.passed
    assert res.detail["failures"][0].startswith("bad:")


def test_fixed_point_contraction_small_sample(rng):
    res = fixed_point_contraction(3, rng, n_simplex=5, n_states=10, n_curves=3)
    assert res.samples == 150
    assert res.passed
    assert res.detail["max_slope"] <= 1e-7


def test_fixed_point_contraction_slope_is_a_contraction_oracle(rng):
    # the forward slope of the distance to a fixed point of a CPTP family is never positive
    res = fixed_point_contraction(2, rng, n_simplex=3, n_states=5, n_curves=2, h=1e-3)
    assert res.detail["max_slope"] <= 1e-9


def test_affine_reconstruction_pauli(rng):
    res = affine_reconstruction(pauli_enm_dynamics(), "pauli", rng, points=20)
    assert res.passed and res.samples == 39
