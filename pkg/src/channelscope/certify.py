"""Property suites behind ``channelscope certify``.

Each suite returns :class:`PropertyResult` records carrying the number of
samples checked and the worst-case margin (tolerance minus the worst
observed violation measure; negative means failure).
"""

from dataclasses import dataclass, field

import numpy as np

from . import zoo
from .canon import canonical_rates, damping_form, rates_qubit_gad
from .config import DEFAULT_TOLERANCES
from .curves import ParamCurve, admit_damping_curve, check_probability_curve
from .errors import ChannelError
from .linalg import random_density_matrix, trace_norm_hermitian
from .representations import compose, intermediate_map, transfer_to_choi
from .witness import (
    cp_divisibility_scan,
    damping_criteria,
    hcla_measure,
    make_grid,
    onset_detector,
)

SCHEMA_VERSION = 1
TOL = DEFAULT_TOLERANCES


@dataclass
class PropertyResult:
    name: str
    samples: int
    worst_margin: float
    tolerance: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(np.isfinite(self.worst_margin) and self.worst_margin >= 0.0)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "samples": int(self.samples),
            "worst_margin": _json_float(self.worst_margin),
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def _json_float(x):
    x = float(x)
    return x if np.isfinite(x) else None


# ---------------------------------------------------------------- random inputs


def random_damping_curve(rng):
    """A random curve with ``lambda(0) = 0`` that stays inside ``[0, 1]``."""
    amp = rng.uniform(0.2, 1.0)
    kind = rng.integers(4)
    if kind == 0:
        return ParamCurve("exp_saturation", {"rate": rng.uniform(0.1, 5.0), "amplitude": amp})
    if kind == 1:
        return ParamCurve("tanh", {"rate": rng.uniform(0.1, 5.0), "amplitude": amp})
    if kind == 2:
        return ParamCurve("sin_squared", {"omega": rng.uniform(0.1, 3.0), "amplitude": amp})
    return ParamCurve(
        "damped_oscillation",
        {"rate": rng.uniform(0.1, 5.0), "omega": rng.uniform(0.1, 3.0), "amplitude": amp,
         "depth": rng.uniform(0.0, 1.0)},
    )


def random_probability_curve(rng):
    u = rng.uniform(0.0, 1.0)
    kind = rng.integers(4)
    if kind == 0:
        return ParamCurve("constant", {"value": u})
    if kind == 1:
        return ParamCurve("exp_decay", {"rate": rng.uniform(0.1, 5.0), "amplitude": u})
    if kind == 2:
        return ParamCurve("exp_saturation", {"rate": rng.uniform(0.1, 5.0), "amplitude": u})
    return ParamCurve("sin_squared", {"omega": rng.uniform(0.1, 3.0), "amplitude": u})


# ---------------------------------------------------------------- suites


def damping_curve_admission(curves, name="damping_curve_admission"):
    """Every curve must pass the damping-curve preconditions."""
    failures = []
    for label, curve in curves:
        try:
            admit_damping_curve(curve)
        except ChannelError as exc:
            failures.append(f"{label}: {exc}")
    margin = 0.0 if not failures else -1.0
    return PropertyResult(name, len(curves), margin, 0.0, {"failures": failures})


def fixed_point_contraction(d, rng, n_simplex=50, n_states=50, n_curves=10,
                            h=1e-6, tol=1e-7):
    """Forward-difference slope at ``t = 0`` of ``||E(rho) - fixed point||_1``.

    ``E`` is the qudit GAD channel; the slope must not exceed ``tol``.
    """
    states = np.array([random_density_matrix(d, rng, rank=int(rng.integers(1, d + 1)))
                       for _ in range(n_states)])
    curves = [random_damping_curve(rng) for _ in range(n_curves)]
    worst = -np.inf
    for _ in range(n_simplex):
        probs = rng.dirichlet(np.ones(d))
        fp = np.diag(probs).astype(complex)
        base = trace_norm_hermitian(states - fp)
        for curve in curves:
            K = zoo.qudit_gad_kraus(probs, curve(h))
            slope = (trace_norm_hermitian(K.apply(states) - fp) - base) / h
            worst = max(worst, float(slope.max()))
    return PropertyResult(
        f"fixed_point_contraction_d{d}", n_simplex * n_states * n_curves, tol - worst, tol,
        {"max_slope": worst, "h": h},
    )


def small_time_limits(rng, n_pairs=50, tol=1e-9):
    """Small-time limits for qubit GAD: rates non-negative, ``h_max(D + D^T) <= 0``."""
    pairs = [(random_probability_curve(rng), random_damping_curve(rng)) for _ in range(n_pairs)]
    worst_rate, worst_h, worst_rate_num = np.inf, -np.inf, np.inf
    for p, lam in pairs:
        check_probability_curve(p)
        admit_damping_curve(lam)
        worst_rate = min(worst_rate, float(np.min(rates_qubit_gad(p, lam, 0.0))))
        dyn = zoo.qubit_gad_dynamics(zoo.QubitGadParams(p, lam))
        worst_h = max(worst_h, damping_criteria(damping_form(dyn, 0.0, h=1e-5))[1])
        worst_rate_num = min(worst_rate_num, float(np.min(dyn.rates(0.0))))
    return [
        PropertyResult("gad_rate_limit", n_pairs, worst_rate + tol, tol,
                       {"min_rate": worst_rate}),
        PropertyResult("gad_rate_limit_extracted", n_pairs, worst_rate_num + 1e-6, 1e-6,
                       {"min_rate": worst_rate_num}),
        PropertyResult("hmax_limit", n_pairs, tol - worst_h, tol,
                       {"max_hmax": worst_h}),
    ]


def quasi_enm_damping(params, points=100, tol=1e-9):
    """``Tr D = -2 nu`` and ``h_max(D + D^T) = -nu`` along the trajectory."""
    dyn = zoo.quasi_enm_dynamics(params)
    grid = make_grid(0.0, 5.0, points)
    worst = 0.0
    for t in grid:
        trD, hm = damping_criteria(damping_form(dyn, t))
        worst = max(worst, abs(trD + 2 * params.nu), abs(hm + params.nu))
    return PropertyResult("quasi_enm_damping", points, tol - worst, tol,
                          {"max_deviation": worst})


def affine_reconstruction(dynamics, name, rng, points=100, tol=1e-8):
    """``F(t) = F(t,s) F(s)`` and ``tau(t) = tau(t,s) + M(t,s) tau(s)``."""
    grid = make_grid(0.0, 5.0, points)
    maps = [dynamics(t) for t in grid]
    pairs = [(i, i + 1) for i in range(points - 1)]
    pairs += [tuple(sorted(rng.choice(points, 2, replace=False))) for _ in range(points)]
    worst = 0.0
    for i, j in pairs:
        Fs, Ft = maps[i], maps[j]
        inter = intermediate_map(Ft, Fs)
        res_f = np.max(np.abs(compose(inter, Fs).matrix - Ft.matrix))
        res_tau = np.max(np.abs(Ft.tau - inter.tau - inter.M @ Fs.tau))
        worst = max(worst, res_f, res_tau)
    return PropertyResult(name, len(pairs), tol - worst, tol, {"max_residual": worst})


def _identity_image_norm(dyn, t):
    G = dyn.generator(t)
    return float(np.max(np.abs(G.apply(np.eye(dyn.dim, dtype=complex)))))


def enm_constructions(points=100):
    """Eternal non-Markovianity of the non-unital constructions."""
    grid = make_grid(0.01, 5.0, points)[1:]
    out = []

    nu = zoo.nonunital_enm_dynamics(ParamCurve("constant", {"value": 1.0}))
    dev, li = 0.0, np.inf
    for t in grid:
        rates = canonical_rates(nu.generator(t)).rates
        dev = max(dev, abs(rates.min() + np.tanh(t)))
        li = min(li, _identity_image_norm(nu, t))
    out.append(PropertyResult("nonunital_enm_min_rate", grid.size, 1e-6 - dev, 1e-6,
                              {"max_deviation": dev}))
    out.append(PropertyResult("nonunital_enm_nonunital", grid.size, li - 1e-9, 1e-9,
                              {"min_abs_L_of_identity": li}))

    qq = zoo.ququart_enm_dynamics()
    worst_neg, li = -np.inf, np.inf
    for t in grid:
        worst_neg = max(worst_neg, float(qq.rates(t).min()))
        li = min(li, _identity_image_norm(qq, t))
    out.append(PropertyResult("ququart_enm_negative_rate", grid.size, -worst_neg, 0.0,
                              {"largest_min_rate": worst_neg}))
    out.append(PropertyResult("ququart_enm_nonunital", grid.size, li - 1e-9, 1e-9,
                              {"min_abs_L_of_identity": li}))

    gz, g = zoo.default_phase_covariant_curves()
    pc = zoo.phase_covariant_dynamics(gz, g)
    worst_gz = float(np.max(gz(grid)))
    worst_choi = min(transfer_to_choi(pc(t)).min_eig() for t in grid)
    out.append(PropertyResult("phase_covariant_negative_dephasing", grid.size, -worst_gz, 0.0,
                              {"largest_gamma_z": worst_gz}))
    out.append(PropertyResult("phase_covariant_cp", grid.size, worst_choi + TOL.cp, TOL.cp,
                              {"min_choi_eig": worst_choi}))

    pe = zoo.pauli_enm_dynamics()
    flags = cp_divisibility_scan(pe, grid).cp_flags
    out.append(PropertyResult("pauli_enm_eternal_cp_indivisible", grid.size,
                              0.0 if flags.all() else -1.0, 0.0,
                              {"unflagged": int((~flags).sum())}))
    return out


# ---------------------------------------------------------------- spec analysis


def spec_curves(spec):
    """Damping curves a spec carries, labelled for the admission report."""
    curves = [("spec.curves.lam", spec.curves["lam"])] if "lam" in spec.curves else []
    if spec.family == "quasi_enm_gad":
        try:
            curves.append(("spec.quasi_enm.lam", zoo.QuasiEnmParams(**spec.params).curves.lam))
        except ChannelError:
            pass
    return curves


def analyse_spec(spec, tol=TOL):
    """CP onset and HCLA measure of the channel a spec describes."""
    dyn = spec.build()
    grid = spec.grid.times

    def rates(t):
        exact = dyn.exact_rates(t)
        return np.asarray(exact if exact is not None else dyn.rates(t), dtype=float)

    series = cp_divisibility_scan(dyn, grid, tol=tol)
    onset = onset_detector(series, rate_fn=lambda t: float(np.min(rates(t))))
    upper = spec.grid.t_max
    params = zoo.QuasiEnmParams(**spec.params) if spec.family == "quasi_enm_gad" else None
    if params is not None:
        # the rates have a closed form, so integrate out to the tail bound
        upper = max(upper, zoo.hcla_cutoff(params))
    hcla = hcla_measure(rates, upper, t_min=spec.grid.t_min, tol=tol)
    out = {"family": spec.family, "onset": onset, "hcla": hcla,
           "hcla_window": [spec.grid.t_min, upper],
           "cp_flagged_points": int(series.cp_flags.sum()), "grid_points": int(grid.size)}
    if params is not None:
        out["t_star_closed_form"] = zoo.t_star(params)
        out["hcla_closed_form"] = zoo.hcla_closed_form(params)
    return out


def run_certification(seed=0, spec=None, tol=TOL):
    """Run every suite; returns the JSON-ready report."""
    rng = np.random.default_rng(seed)
    results = []
    curves = [(f"random[{i}]", random_damping_curve(rng)) for i in range(50)]
    if spec is not None:
        curves += spec_curves(spec)
    results.append(damping_curve_admission(curves))
    for d in (2, 3, 4):
        results.append(fixed_point_contraction(d, rng))
    results.extend(small_time_limits(rng))
    results.append(quasi_enm_damping(zoo.QuasiEnmParams()))
    results.append(affine_reconstruction(zoo.quasi_enm_dynamics(zoo.QuasiEnmParams()),
                                         "affine_reconstruction_quasi_enm", rng))
    results.extend(enm_constructions())

    report = {
        "schema": SCHEMA_VERSION,
        "seed": int(seed),
        "tolerances": tol.as_dict(),
        "properties": [r.to_dict() for r in results],
    }
    if spec is not None:
        report["spec"] = spec.to_dict()
        report["spec_digest"] = spec.digest()
        try:
            report["analysis"] = _clean(analyse_spec(spec, tol))
        except ChannelError as exc:
            report["analysis"] = {"error": f"{type(exc).__name__}: {exc}"}
    report["failed"] = [r.name for r in results if not r.passed]
    report["passed"] = not report["failed"]
    return report


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return _json_float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
