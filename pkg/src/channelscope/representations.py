"""Channel representations and conversions.

Three concrete carriers are used: :class:`KrausSet` (operator sum),
:class:`TransferMatrix` (real matrix in the Gell-Mann basis, block form
``[[1, 0], [tau, M]]``) and :class:`ChoiMatrix` (unit-trace Choi state with
the system factor first). Intermediate maps between two times only exist as
transfer matrices, so everything ends up funnelled through that form.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import (
    DimensionMismatch,
    IncompleteKraus,
    MalformedTransfer,
    SingularIntermediate,
)
from .linalg import gell_mann_basis, herm_eigvals, hermiticity_defect

TOL = DEFAULT_TOLERANCES


@dataclass(frozen=True, eq=False)
class KrausSet:
    operators: np.ndarray  # shape (k, d, d)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise IncompleteKraus(f"bad Kraus array shape {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise IncompleteKraus("Kraus operators contain non-finite entries")
        object.__setattr__(self, "operators", ops)
        defect = self.completeness_defect()
        if defect > TOL.completeness:
            raise IncompleteKraus(f"completeness defect {defect:.3e}")

    @property
    def dim(self):
        return self.operators.shape[1]

    def __len__(self):
        return self.operators.shape[0]

    def __iter__(self):
        return iter(self.operators)

    def completeness_defect(self):
        E = self.operators
        S = np.einsum("kba,kbc->ac", E.conj(), E)
        return float(np.max(np.abs(S - np.eye(E.shape[1]))))

    def apply(self, rho):
        """Apply to a state or a stack of states."""
        E = self.operators
        return np.einsum("kab,...bc,kdc->...ad", E, rho, E.conj())


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    matrix: np.ndarray  # real, shape (d**2, d**2)

    def __post_init__(self):
        F = np.asarray(self.matrix)
        if np.iscomplexobj(F):
            if np.max(np.abs(F.imag), initial=0.0) > 1e-8:
                raise MalformedTransfer("transfer matrix has imaginary part")
            F = F.real
        F = np.array(F, dtype=float)
        n = F.shape[0]
        d = int(round(np.sqrt(n)))
        if F.ndim != 2 or F.shape != (n, n) or d * d != n or d < 2:
            raise MalformedTransfer(f"bad transfer matrix shape {F.shape}")
        if not np.all(np.isfinite(F)):
            raise MalformedTransfer("transfer matrix has non-finite entries")
        row = np.zeros(n)
        row[0] = 1.0
        if np.max(np.abs(F[0] - row)) > 1e-8:
            raise MalformedTransfer("first row must be (1, 0, ..., 0)")
        F[0] = row
        F.setflags(write=False)
        object.__setattr__(self, "matrix", F)

    @property
    def dim(self):
        return int(round(np.sqrt(self.matrix.shape[0])))

    @property
    def M(self):
        return self.matrix[1:, 1:]

    @property
    def tau(self):
        return self.matrix[1:, 0]

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d * d))

    def apply(self, rho):
        basis = gell_mann_basis(self.dim)
        c = basis.coords(rho)
        return basis.matrix(np.einsum("ij,...j->...i", self.matrix, c))

    def __matmul__(self, other):
        return compose(self, other)


@dataclass(frozen=True, eq=False)
class AffineRep:
    """Bloch-vector action ``r -> M r + tau``.

    Bloch coordinates are ``r_i = sqrt(d) Tr(G_i rho)``; for qubits these are
    the usual ``Tr(sigma_i rho)``.
    """

    M: np.ndarray
    tau: np.ndarray

    def __call__(self, r):
        return np.einsum("ij,...j->...i", self.M, r) + self.tau

    @property
    def is_unital(self):
        return bool(np.max(np.abs(self.tau), initial=0.0) <= TOL.structural)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray  # shape (d**2, d**2), unit trace

    def __post_init__(self):
        C = np.asarray(self.matrix, dtype=complex)
        if hermiticity_defect(C) > 1e-8:
            raise MalformedTransfer("Choi matrix is not Hermitian")
        object.__setattr__(self, "matrix", 0.5 * (C + C.conj().T))

    @property
    def dim(self):
        return int(round(np.sqrt(self.matrix.shape[0])))

    def eigenvalues(self):
        return herm_eigvals(self.matrix, tol=1e-8)

    def min_eig(self):
        return float(self.eigenvalues()[0])

    def is_cp(self, tol=TOL.reconstruction):
        return self.min_eig() >= -tol


def kraus_to_transfer(K):
    """``F_ij = Tr(G_i sum_k E_k G_j E_k^dag)``."""
    basis = gell_mann_basis(K.dim)
    images = K.apply(basis.elements)
    F = np.einsum("iab,jba->ij", basis.elements, images)
    return TransferMatrix(F.real)


def transfer_to_affine(F):
    return AffineRep(F.M.copy(), F.tau.copy())


def affine_to_transfer(affine):
    M = np.asarray(affine.M, dtype=float)
    n = M.shape[0] + 1
    F = np.zeros((n, n))
    F[0, 0] = 1.0
    F[1:, 0] = affine.tau
    F[1:, 1:] = M
    return TransferMatrix(F)


def maximally_entangled(d):
    """Projector onto ``sum_i |ii> / sqrt(d)``."""
    psi = np.eye(d, dtype=complex).reshape(d * d) / np.sqrt(d)
    return np.outer(psi, psi.conj())


def kraus_to_choi(K):
    """``(E (x) I)|Psi><Psi|`` with ``|Psi> = sum_i |ii>/sqrt(d)``."""
    d = K.dim
    # (E_k (x) I)|Psi> is E_k reshaped row-major, scaled by 1/sqrt(d)
    vecs = K.operators.reshape(len(K), d * d) / np.sqrt(d)
    return ChoiMatrix(np.einsum("ka,kb->ab", vecs, vecs.conj()))


def matrix_units_images(F):
    """``E(|a><b|)`` for all ``a, b``, as an array ``[a, b, :, :]``."""
    d = F.dim
    basis = gell_mann_basis(d)
    units = np.zeros((d, d, d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            units[a, b, a, b] = 1.0
    return basis.matrix(np.einsum("ij,abj->abi", F.matrix, basis.coords(units)))


def transfer_to_choi(F):
    d = F.dim
    images = matrix_units_images(F)
    # chi[(i,a),(j,b)] = E(|a><b|)[i,j] / d
    chi = np.einsum("abij->iajb", images).reshape(d * d, d * d) / d
    return ChoiMatrix(chi)


def choi_to_transfer(chi):
    d = chi.dim
    T = np.asarray(chi.matrix).reshape(d, d, d, d) * d  # [i,a,j,b]
    basis = gell_mann_basis(d)
    G = basis.elements
    # E(G_j) = sum_ab (G_j)_ab E(|a><b|); F_ij = Tr(G_i E(G_j))
    images = np.einsum("iajb->abij", T)
    E_of_G = np.einsum("jab,abxy->jxy", G, images)
    F = np.einsum("ixy,jyx->ij", G, E_of_G)
    return TransferMatrix(F.real)


def compose(F2, F1):
    """Map ``F2 . F1`` (apply ``F1`` first)."""
    if F2.dim != F1.dim:
        raise DimensionMismatch(f"cannot compose dims {F2.dim} and {F1.dim}")
    return TransferMatrix(F2.matrix @ F1.matrix)


def condition_number(F):
    return float(np.linalg.cond(F.matrix))


def intermediate_map(F_t, F_s, max_condition=TOL.condition, return_condition=False):
    """Propagator ``F(t, s) = F(t) F(s)^-1`` between two times.

    An explicit inverse is used on purpose: a map that is not invertible has
    no intermediate map, and that must surface as :class:`SingularIntermediate`.
    """
    if F_t.dim != F_s.dim:
        raise DimensionMismatch(f"dims {F_t.dim} and {F_s.dim} differ")
    cond = condition_number(F_s)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularIntermediate(
            f"map is not invertible (condition number {cond:.3e})", condition=cond
        )
    out = TransferMatrix(np.linalg.solve(F_s.matrix.T, F_t.matrix.T).T)
    return (out, cond) if return_condition else out


def unital_nonunital_split(F_t, F_s, max_condition=TOL.condition):
    """Unital part ``M(t, s)`` and shift ``tau(t, s)`` of the intermediate map."""
    inter = intermediate_map(F_t, F_s, max_condition=max_condition)
    return inter.M.copy(), inter.tau.copy()
