"""Generators in canonical GKSL form.

Decoherence matrices are expressed in the *unnormalized* traceless
Gell-Mann basis ``B_i = sqrt(2) G_i`` (``Tr(B_i B_j) = 2 delta_ij``), which
for qubits is the Pauli basis. A generator snapshot then reads::

    L(rho) = -i[H, rho] + sum_jk d_jk (B_j rho B_k - {B_k B_j, rho} / 2)

so a Pauli channel generator ``sum_j g_j (s_j rho s_j - rho)`` has
``d = diag(g)``.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import (
    DampingSaturated,
    NotConverged,
    SingularIntermediate,
    StepTooCoarse,
)
from .linalg import dagger, expm, gell_mann_basis, herm_eig, hermiticity_defect
from .representations import TransferMatrix

TOL = DEFAULT_TOLERANCES

NORMALIZATIONS = {"pauli": 2.0, "orthonormal": 1.0}


def jump_basis(d):
    """Traceless basis ``B_i = sqrt(2) G_i``, shape ``(d**2 - 1, d, d)``."""
    return np.sqrt(2.0) * gell_mann_basis(d).traceless


def _lindblad_action(H, dmat, B, rho):
    """Apply the GKSL form to a stack of matrices ``rho``."""
    out = -1j * (H @ rho - rho @ H)
    sandwich = np.einsum("jk,jab,...bc,kcd->...ad", dmat, B, rho, B)
    K = np.einsum("jk,kab,jbc->ac", dmat, B, B)
    return out + sandwich - 0.5 * (K @ rho + rho @ K)


@dataclass(frozen=True, eq=False)
class GeneratorSnapshot:
    t: float
    hamiltonian: np.ndarray
    decoherence: np.ndarray

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    def apply(self, rho):
        B = jump_basis(self.dim)
        return _lindblad_action(self.hamiltonian, self.decoherence, B, np.asarray(rho))

    def superoperator(self):
        """Real matrix of the generator in transfer-matrix coordinates."""
        basis = gell_mann_basis(self.dim)
        images = self.apply(basis.elements)
        return np.einsum("iab,jba->ij", basis.elements, images).real

    def hermiticity_defect(self):
        return hermiticity_defect(self.decoherence)


@dataclass(frozen=True, eq=False)
class CanonicalRates:
    t: float
    rates: np.ndarray
    jump_ops: np.ndarray
    normalization: float = 2.0

    def __len__(self):
        return len(self.rates)


@dataclass(frozen=True, eq=False)
class DampingForm:
    t: float
    D: np.ndarray
    mu: np.ndarray


def generator_from_superoperator(L, t=0.0):
    """Split a transfer-coordinate generator into Hamiltonian and decoherence parts.

    Works through the Choi matrix of ``L`` in the orthonormal basis
    ``{G_i}``; its traceless block is the decoherence matrix and its mixed
    column fixes the Hamiltonian.
    """
    L = np.asarray(L, dtype=float)
    d = int(round(np.sqrt(L.shape[0])))
    basis = gell_mann_basis(d)
    G = basis.elements
    # L(|a><b|) for every matrix unit
    units = np.zeros((d, d, d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            units[a, b, a, b] = 1.0
    images = basis.matrix(np.einsum("ij,abj->abi", L, basis.coords(units)))
    choi = np.einsum("abij->iajb", images).reshape(d * d, d * d)
    U = G.reshape(d * d, d * d).T
    c = U.conj().T @ choi @ U
    c = 0.5 * (c + c.conj().T)
    F = np.einsum("i,iab->ab", c[1:, 0], G[1:]) / np.sqrt(d)
    H = (dagger(F) - F) / 2j
    H = 0.5 * (H + dagger(H))
    return GeneratorSnapshot(float(t), H, 0.5 * c[1:, 1:])


def from_dissipators(t, d, terms, hamiltonian=None):
    """Snapshot of ``-i[H, .] + sum_k g_k (A_k . A_k^dag - {A_k^dag A_k, .}/2)``.

    ``terms`` is an iterable of ``(rate, jump_operator)`` pairs.
    """
    H = np.zeros((d, d), dtype=complex) if hamiltonian is None else np.asarray(hamiltonian)
    basis = gell_mann_basis(d)
    G = basis.elements

    def action(rho):
        out = -1j * (H @ rho - rho @ H)
        for rate, A in terms:
            A = np.asarray(A, dtype=complex)
            AdA = A.conj().T @ A
            out = out + rate * (A @ rho @ A.conj().T - 0.5 * (AdA @ rho + rho @ AdA))
        return out

    L = np.einsum("iab,jba->ij", G, action(G)).real
    return generator_from_superoperator(L, t)


def canonical_rates(G, normalization="pauli"):
    """Canonical decay rates and jump operators of a generator snapshot.

    Rates are the eigenvalues of the decoherence matrix (ascending). With
    ``normalization="pauli"`` the jump operators satisfy ``Tr(A^dag A) = 2``
    (Pauli matrices for qubits); ``"orthonormal"`` rescales them to unit
    Hilbert-Schmidt norm and doubles the rates accordingly.
    """
    norm = NORMALIZATIONS.get(normalization, normalization)
    norm = float(norm)
    w, V = herm_eig(G.decoherence, tol=1e-8)
    B = jump_basis(G.dim)
    jumps = np.einsum("ja,jxy->axy", V, B) * np.sqrt(norm / 2.0)
    rates = w * (2.0 / norm)
    residual = np.einsum("a,axy,azw->xyzw", rates, jumps, jumps.conj())
    target = np.einsum("jk,jxy,kzw->xyzw", G.decoherence, B, B.conj())
    if np.max(np.abs(residual - target), initial=0.0) > 1e-7:
        raise NotConverged("canonical reconstruction residual too large")
    return CanonicalRates(G.t, rates, jumps, norm)


def projected_rates(G, jumps):
    """Rates attached to prescribed, mutually orthogonal jump operators.

    For a decoherence matrix that is diagonal in the given jump basis this
    returns the exact rates; otherwise it returns the diagonal of the
    decoherence matrix in that basis.
    """
    B = jump_basis(G.dim)
    out = []
    for J in jumps:
        v = np.einsum("jab,ba->j", B, np.asarray(J)) / 2.0
        n2 = float(np.vdot(v, v).real)
        out.append(float(np.vdot(v, G.decoherence @ v).real) / n2**2)
    return np.array(out)


def _finite_difference(F, t, h):
    """Derivative of a matrix-valued function at ``t``.

    Central difference when ``t - h >= 0``; otherwise a second-order forward
    stencil so the trajectory is never evaluated at negative times.
    """
    if t - h >= 0.0:
        return (F(t + h) - F(t - h)) / (2.0 * h)
    return (-3.0 * F(t) + 4.0 * F(t + h) - F(t + 2.0 * h)) / (2.0 * h)


def _as_matrix_fn(F):
    def f(t):
        val = F(t)
        return val.matrix if isinstance(val, TransferMatrix) else np.asarray(val)

    return f


def _inverse(A, what="trajectory"):
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > TOL.condition:
        raise SingularIntermediate(f"{what} not invertible (cond {cond:.3e})", cond)
    return np.linalg.inv(A)


def _richardson(est_h, est_h2, t, tol):
    scale = max(np.max(np.abs(est_h2)), 1.0)
    diff = np.max(np.abs(est_h - est_h2))
    if diff > tol * scale:
        raise StepTooCoarse(f"finite-difference estimates disagree by {diff:.3e} at t={t}")
    return (4.0 * est_h2 - est_h) / 3.0


def generator_superoperator_from_trajectory(F, t, h=1e-5, tol=TOL.step_agreement):
    f = _as_matrix_fn(F)
    Finv = _inverse(f(t))
    L_h = _finite_difference(f, t, h) @ Finv
    L_h2 = _finite_difference(f, t, h / 2.0) @ Finv
    return _richardson(L_h, L_h2, t, tol)


def generator_from_trajectory(F, t, h=1e-5, tol=TOL.step_agreement):
    """Time-local generator ``L(t) = F'(t) F(t)^-1`` of a channel trajectory."""
    if not 1e-7 <= h <= 1e-3:
        raise ValueError("finite-difference step must lie in [1e-7, 1e-3]")
    L = generator_superoperator_from_trajectory(F, t, h, tol)
    return generator_from_superoperator(L, t)


def damping_form(F, t, h=1e-3, tol=TOL.step_agreement):
    """Damping matrix ``D = M' M^-1`` and drift ``mu = tau' - D tau``.

    The default step is larger than for generator extraction because ``M^-1``
    amplifies rounding in ``M'`` once the map has contracted; Richardson
    extrapolation keeps the truncation error small.
    """
    f = _as_matrix_fn(F)
    Ft = f(t)
    M, tau = Ft[1:, 1:], Ft[1:, 0]
    Minv = _inverse(M, "unital part")
    dF_h = _finite_difference(f, t, h)
    dF_h2 = _finite_difference(f, t, h / 2.0)
    dF = _richardson(dF_h, dF_h2, t, tol)
    D = dF[1:, 1:] @ Minv
    mu = dF[1:, 0] - D @ tau
    return DampingForm(float(t), D, mu)


def rates_qubit_gad(p, lam, t):
    """Closed-form canonical rates of a qubit GAD channel.

    ``gamma_1 = lam p' + lam' p / (1 - lam)`` is the rate of the jump
    ``|1><0|`` and ``gamma_2`` (same with ``p -> 1 - p``) that of ``|0><1|``.
    """
    lam_t = lam(t)
    if np.any(np.asarray(lam_t) >= 1.0 - 1e-12):
        raise DampingSaturated(f"damping parameter saturated at t={t}")
    p_t, dp, dlam = p(t), p.derivative(t), lam.derivative(t)
    g1 = lam_t * dp + dlam * p_t / (1.0 - lam_t)
    g2 = -lam_t * dp + dlam * (1.0 - p_t) / (1.0 - lam_t)
    return g1, g2


def _magnus_step(L, a, b):
    h = b - a
    if h == 0.0:
        return None
    r = np.sqrt(3.0) / 6.0
    A1 = L(a + (0.5 - r) * h).superoperator()
    A2 = L(a + (0.5 + r) * h).superoperator()
    omega = 0.5 * h * (A1 + A2) + (np.sqrt(3.0) / 12.0) * h * h * (A2 @ A1 - A1 @ A2)
    return expm(omega)


class IntegratedTrajectory:
    """Channel trajectory obtained by time-ordered integration of a generator.

    Stores the propagated maps on a uniform grid; values between grid points
    are reached with one extra fourth-order Magnus step from the grid point
    below.
    """

    def __init__(self, generator, t_max, steps, dim):
        self.generator = generator
        self.t_max = float(t_max)
        self.steps = int(steps)
        self.dim = dim
        self.times = np.linspace(0.0, self.t_max, self.steps + 1)
        n = dim * dim
        mats = np.empty((self.steps + 1, n, n))
        mats[0] = np.eye(n)
        for k in range(self.steps):
            mats[k + 1] = _magnus_step(generator, self.times[k], self.times[k + 1]) @ mats[k]
        self.matrices = mats

    def __call__(self, t):
        t = float(t)
        if t < 0.0 or t > self.t_max * (1 + 1e-12):
            raise ValueError(f"t={t} outside integrated range [0, {self.t_max}]")
        dt = self.t_max / self.steps
        k = min(int(np.floor(t / dt)), self.steps)
        step = _magnus_step(self.generator, self.times[k], t)
        F = self.matrices[k] if step is None else step @ self.matrices[k]
        return TransferMatrix(F)

    @property
    def endpoint(self):
        return TransferMatrix(self.matrices[-1])


def integrate_generator(L, t_max, steps=1000, tol=TOL.integration, check=True):
    """Time-ordered exponential of a generator ``t -> GeneratorSnapshot``.

    Uses fourth-order Magnus steps; with ``check`` the run is repeated at
    half the step and the endpoints must agree to ``tol``.
    """
    if steps < 100:
        raise ValueError("integrate_generator needs at least 100 steps")
    dim = L(0.0).dim
    traj = IntegratedTrajectory(L, t_max, steps, dim)
    if check:
        fine = IntegratedTrajectory(L, t_max, 2 * steps, dim)
        diff = np.max(np.abs(fine.matrices[-1] - traj.matrices[-1]))
        if diff > tol:
            raise NotConverged(f"step-doubling mismatch {diff:.3e} > {tol:.1e}")
        return fine
    return traj
