"""Channel families: constructors and family-specific closed forms.

Each family is available in two flavours: a pointwise constructor
(``qubit_gad(params, t) -> KrausSet`` etc.) and a :class:`Dynamics` object
that bundles the time dependence for the scanners.
"""

from dataclasses import dataclass

import numpy as np

from .canon import (
    canonical_rates,
    from_dissipators,
    generator_from_trajectory,
    integrate_generator,
    projected_rates,
    rates_qubit_gad,
)
from .config import DEFAULT_TOLERANCES
from .curves import ParamCurve, admit_damping_curve, check_probability_curve, constant
from .errors import BadParams, BadRate, BadSimplex, CurveOutOfRange
from .representations import KrausSet, TransferMatrix, kraus_to_transfer

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|
PAULIS = (I2, SX, SY, SZ)
STEP_AGREEMENT = DEFAULT_TOLERANCES.step_agreement


# ---------------------------------------------------------------- dynamics


class Dynamics:
    """A time-parametrized channel ``t -> E(t)`` with ``E(0) = id``.

    ``rate_jumps`` names the jump operators whose rates label the output
    columns of a scan; when absent, canonical rates (eigenvalues of the
    decoherence matrix, ascending) are reported.
    """

    name = "dynamics"
    rate_jumps = None
    rate_normalization = "pauli"
    fixed_point = None

    def __init__(self, dim):
        self.dim = dim

    def transfer(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.transfer(t)

    def kraus(self, t):
        return None

    def generator(self, t, h=1e-5, tol=STEP_AGREEMENT):
        return generator_from_trajectory(self.transfer, t, h=h, tol=tol)

    def rates(self, t, h=1e-5, tol=STEP_AGREEMENT):
        G = self.generator(t, h=h, tol=tol)
        if self.rate_jumps is not None:
            return projected_rates(G, self.rate_jumps)
        return canonical_rates(G, self.rate_normalization).rates

    def exact_rates(self, t):
        """Closed-form rates where a family has them, else ``None``."""
        return None


class KrausDynamics(Dynamics):
    def __init__(self, dim, kraus_fn, name="kraus", rate_jumps=None, exact_rates=None):
        super().__init__(dim)
        self._kraus_fn = kraus_fn
        self.name = name
        self.rate_jumps = rate_jumps
        self._exact_rates = exact_rates

    def kraus(self, t):
        return self._kraus_fn(t)

    def transfer(self, t):
        return kraus_to_transfer(self._kraus_fn(t))

    def exact_rates(self, t):
        return None if self._exact_rates is None else np.asarray(self._exact_rates(t))


class GeneratorDynamics(Dynamics):
    """Dynamics defined by a generator; maps come from Magnus integration."""

    def __init__(self, dim, generator_fn, t_max, steps=2000, name="generator", rate_jumps=None):
        super().__init__(dim)
        self._generator_fn = generator_fn
        self.t_max = float(t_max)
        self.steps = int(steps)
        self.name = name
        self.rate_jumps = rate_jumps
        self._trajectory = None

    @property
    def trajectory(self):
        if self._trajectory is None:
            # small margin so finite differences at t_max stay in range
            self._trajectory = integrate_generator(
                self._generator_fn, self.t_max + 1e-2, steps=self.steps
            )
        return self._trajectory

    def transfer(self, t):
        return self.trajectory(t)

    def generator(self, t, h=1e-5, tol=STEP_AGREEMENT):
        return self._generator_fn(t)


class IdentityDynamics(Dynamics):
    name = "identity"

    def transfer(self, t):
        return TransferMatrix.identity(self.dim)

    def kraus(self, t):
        return KrausSet(np.eye(self.dim))


# ---------------------------------------------------------------- GAD


@dataclass(frozen=True)
class QubitGadParams:
    p: ParamCurve
    lam: ParamCurve

    def validate(self, t_max=10.0):
        admit_damping_curve(self.lam, t_max)
        check_probability_curve(self.p, t_max)
        return self


def _unit(x, what):
    if not -1e-12 <= x <= 1 + 1e-12 or not np.isfinite(x):
        raise CurveOutOfRange(f"{what} = {x} outside [0, 1]")
    return min(max(float(x), 0.0), 1.0)


def qubit_gad_kraus(p, lam):
    """Four Kraus operators of the qubit GAD channel at fixed ``(p, lam)``."""
    p, lam = _unit(p, "p"), _unit(lam, "lambda")
    a, b = np.sqrt(1 - p), np.sqrt(p)
    s, c = np.sqrt(lam), np.sqrt(1 - lam)
    ops = [
        a * np.array([[1, 0], [0, c]]),
        a * np.array([[0, s], [0, 0]]),
        b * np.array([[c, 0], [0, 1]]),
        b * np.array([[0, 0], [s, 0]]),
    ]
    return KrausSet(np.array(ops, dtype=complex))


def qubit_gad(params, t):
    return qubit_gad_kraus(params.p(t), params.lam(t))


def qubit_gad_dynamics(params, name="qubit_gad"):
    return KrausDynamics(
        2,
        lambda t: qubit_gad(params, t),
        name=name,
        rate_jumps=(SIGMA_PLUS, SIGMA_MINUS),
        exact_rates=lambda t: rates_qubit_gad(params.p, params.lam, t),
    )


@dataclass(frozen=True, eq=False)
class QuditGadParams:
    probs: np.ndarray
    lam: ParamCurve

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise BadSimplex("need a probability vector of length d >= 2")
        if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-12:
            raise BadSimplex(f"not a probability vector: {p}")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))

    @property
    def dim(self):
        return self.probs.size


def qudit_gad_kraus(probs, lam):
    """``sqrt(p_l) E_{l,j}`` for all ``l, j``; ``E_{l,l}`` keeps level ``l``."""
    probs = np.asarray(probs, dtype=float)
    lam = _unit(lam, "lambda")
    d = probs.size
    ops = []
    for l in range(d):
        w = np.sqrt(probs[l])
        for j in range(d):
            E = np.zeros((d, d), dtype=complex)
            if j == l:
                E += np.sqrt(1 - lam) * np.eye(d)
                E[l, l] = 1.0
            else:
                E[l, j] = np.sqrt(lam)
            ops.append(w * E)
    return KrausSet(np.array(ops))


def qudit_gad(params, t):
    return qudit_gad_kraus(params.probs, params.lam(t))


def qudit_gad_dynamics(params):
    return KrausDynamics(params.dim, lambda t: qudit_gad(params, t), name="qudit_gad")


def gad_fixed_point(params, check_times=None):
    """Diagonal fixed point ``sum_l p_l |l><l|``, verified at sampled times."""
    if not isinstance(params, QuditGadParams):
        raise BadSimplex("fixed point needs QuditGadParams")
    fp = np.diag(params.probs).astype(complex)
    times = np.linspace(0.0, 5.0, 10) if check_times is None else check_times
    for t in times:
        out = qudit_gad(params, t).apply(fp)
        if np.max(np.abs(out - fp)) > 1e-9:
            raise BadSimplex(f"fixed point not invariant at t={t}")
    return fp


# ---------------------------------------------------------------- Pauli ENM


def pauli_enm_eigenvalues(c, t):
    """Pauli-map eigenvalues ``(l_x, l_y, l_z)`` from the integrated rates.

    Rates ``(c/2, c/2, -(c/2) tanh t)`` integrate to
    ``l_i = exp(-2 (G_j + G_k))``.
    """
    if not c > 0:
        raise BadRate(f"rate constant must be positive, got {c}")
    lxy = np.exp(c * np.log1p(np.exp(-2.0 * t)) - c * np.log(2.0))
    lz = np.exp(-2.0 * c * t)
    return np.array([lxy, lxy, lz])


def pauli_weights(eigs):
    lx, ly, lz = eigs
    return 0.25 * np.array(
        [1 + lx + ly + lz, 1 + lx - ly - lz, 1 - lx + ly - lz, 1 - lx - ly + lz]
    )


def pauli_enm_weights(c, t):
    w = pauli_weights(pauli_enm_eigenvalues(c, t))
    if np.any(w < -1e-12):
        raise BadRate(f"c={c} gives a non-CP Pauli map at t={t} (weights {w})")
    return np.clip(w, 0.0, None)


def pauli_enm(c=1.0, t=0.0):
    w = pauli_enm_weights(c, t)
    return KrausSet(np.array([np.sqrt(wi) * P for wi, P in zip(w, PAULIS)]))


def pauli_enm_generator(c=1.0, t=0.0):
    rates = (c / 2.0, c / 2.0, -(c / 2.0) * np.tanh(t))
    return from_dissipators(t, 2, list(zip(rates, (SX, SY, SZ))))


def pauli_enm_dynamics(c=1.0):
    return KrausDynamics(
        2,
        lambda t: pauli_enm(c, t),
        name="pauli_enm",
        rate_jumps=(SX, SY, SZ),
        exact_rates=lambda t: (c / 2.0, c / 2.0, -(c / 2.0) * np.tanh(t)),
    )


# ---------------------------------------------------------------- quasi-ENM GAD


@dataclass(frozen=True)
class QuasiEnmParams:
    m: float = 3.0
    n: float = 2.0
    nu: float = 1.0

    def __post_init__(self):
        m, n, nu = float(self.m), float(self.n), float(self.nu)
        if not (nu > 0 and m > nu):
            raise BadParams(f"need m > nu > 0, got m={m}, nu={nu}")
        if not n >= 1:
            raise BadParams(f"need n >= 1 so that p(0) <= 1, got n={n}")

    @property
    def curves(self):
        p = ParamCurve("exp_decay", {"rate": self.m, "amplitude": 1.0 / self.n})
        lam = ParamCurve("exp_saturation", {"rate": self.nu})
        return QubitGadParams(p, lam)


def quasi_enm_gad(params, t):
    return qubit_gad(params.curves, t)


def quasi_enm_rates(params, t):
    """``gamma_1 = e^{-mt}(m(e^{-nu t} - 1) + nu)/n`` and ``gamma_2 = nu - gamma_1``."""
    m, n, nu = params.m, params.n, params.nu
    t = np.asarray(t, dtype=float)
    g1 = np.exp(-m * t) * (m * np.expm1(-nu * t) + nu) / n
    return g1, nu - g1


def quasi_enm_dynamics(params):
    dyn = qubit_gad_dynamics(params.curves, name="quasi_enm_gad")
    dyn._exact_rates = lambda t: quasi_enm_rates(params, t)
    return dyn


def t_star(params):
    """Time after which ``gamma_1`` stays negative."""
    return float(np.log(params.m / (params.m - params.nu)) / params.nu)


def hcla_cutoff(params, bound=1e-12):
    """Upper integration limit for the HCLA quadrature.

    Beyond it ``|gamma_1| <= (m + nu) e^{-mT} / n`` is below ``bound``.
    """
    T = np.log((params.m + params.nu) / (params.n * bound)) / params.m
    return float(max(T, 2.0 * t_star(params)))


def hcla_closed_form(params):
    m, n, nu = params.m, params.n, params.nu
    return float(nu / ((nu + m) * n) * (m / (m - nu)) ** (-(nu + m) / nu))


# ---------------------------------------------------------------- non-unital ENM


def nonunital_enm_generator(gamma, t):
    """Pauli ENM part with unit x/y rates plus amplitude damping at ``gamma(t)``."""
    g = float(gamma(t))
    if g < 0:
        raise BadRate(f"amplitude-damping rate must be >= 0, got {g} at t={t}")
    terms = [(1.0, SX), (1.0, SY), (-np.tanh(t), SZ), (g, SIGMA_MINUS)]
    return from_dissipators(t, 2, terms)


def nonunital_enm_dynamics(gamma, t_max=5.0, steps=2000):
    return GeneratorDynamics(
        2, lambda t: nonunital_enm_generator(gamma, t), t_max, steps, name="nonunital_enm"
    )


def phase_covariant_generator(gamma_z, gamma, t):
    """``g_z (sz . sz - .) + g D[s_+] + g D[s_-]``."""
    terms = [(float(gamma_z(t)), SZ), (float(gamma(t)), SIGMA_PLUS), (float(gamma(t)), SIGMA_MINUS)]
    return from_dissipators(t, 2, terms)


def default_phase_covariant_curves():
    """Illustrative rates with ``gamma_z < 0`` for all ``t > 0`` and a CP map."""
    return ParamCurve("tanh", {"amplitude": -0.5}), constant(1.0)


def phase_covariant_dynamics(gamma_z, gamma, t_max=5.0, steps=2000):
    return GeneratorDynamics(
        2,
        lambda t: phase_covariant_generator(gamma_z, gamma, t),
        t_max,
        steps,
        name="phase_covariant",
        rate_jumps=(SZ, SIGMA_PLUS, SIGMA_MINUS),
    )


# ---------------------------------------------------------------- ququart


def _direct_sum(A, B):
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = A
    out[2:, 2:] = B
    return out


def ququart_kraus(c, lam_value, t, p=0.0):
    """Kraus families ``M_j`` (Pauli ENM on |0>,|1>) and ``N_l`` (damping on |2>,|3>).

    Padding blocks are weighted so that each family is complete on its own:
    ``M_j = sqrt(w_j) (sigma_j + I_2)`` and the identity padding of ``N_l``
    rides on the diagonal damping operators. ``p`` is the probability of
    damping towards ``|3>``; ``p = 0`` damps towards ``|2>``.
    """
    w = pauli_enm_weights(c, t)
    M = [np.sqrt(wj) * _direct_sum(P, I2) for wj, P in zip(w, PAULIS)]
    K = qubit_gad_kraus(p, lam_value).operators
    pad = (np.sqrt(1 - p), 0.0, np.sqrt(p), 0.0)
    N = [_direct_sum(a * I2, Kl) for a, Kl in zip(pad, K)]
    return M, N


def ququart_enm(c=1.0, lam=None, t=0.0, p=0.0):
    """Ququart channel ``sum_jl M_j N_l . N_l^dag M_j^dag``."""
    lam = ParamCurve("exp_saturation", {"rate": 1.0}) if lam is None else lam
    M, N = ququart_kraus(c, lam(t), t, p)
    ops = [Mj @ Nl for Mj in M for Nl in N]
    return KrausSet(np.array(ops))


def ququart_enm_dynamics(c=1.0, lam=None, p=0.0):
    return KrausDynamics(4, lambda t: ququart_enm(c, lam, t, p), name="ququart_enm")


FAMILIES = (
    "identity",
    "qubit_gad",
    "qudit_gad",
    "quasi_enm_gad",
    "pauli_enm",
    "nonunital_enm",
    "phase_covariant",
    "ququart_enm",
)
