"""Dense complex-matrix kernel.

Small, pure helpers used throughout the package: Hermitian eigensolver with
a tolerance gate, trace norm, partial trace, the orthonormal generalized
Gell-Mann basis and a few random-state generators for property tests.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES
from .errors import BadDimension, DimensionMismatch, NonSquare, NotHermitian


def _square(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    return A


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def hermiticity_defect(A):
    A = np.asarray(A)
    return float(np.max(np.abs(A - dagger(A)))) if A.size else 0.0


def herm_eig(A, tol=DEFAULT_TOLERANCES.structural):
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized as ``(A + A^dag)/2`` after the hermiticity gate,
    so finite-difference noise below ``tol`` does not leak into the spectrum.

    Returns
    -------
    w : ndarray
        Real eigenvalues in ascending order.
    V : ndarray
        Orthonormal eigenvectors as columns.
    """
    A = _square(A)
    defect = hermiticity_defect(A)
    if defect > tol:
        raise NotHermitian(f"hermiticity defect {defect:.3e} exceeds {tol:.1e}")
    H = 0.5 * (A + dagger(A))
    w, V = np.linalg.eigh(H)
    return w, V


def herm_eigvals(A, tol=DEFAULT_TOLERANCES.structural):
    return herm_eig(A, tol)[0]


def hmax(A, tol=DEFAULT_TOLERANCES.structural):
    """Largest eigenvalue of a Hermitian (or real symmetric) matrix."""
    return float(herm_eigvals(A, tol)[-1])


def trace_norm(A):
    """Sum of singular values, valid for non-Hermitian arguments too."""
    A = _square(A)
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def trace_norm_hermitian(batch):
    """Trace norms of a stack of Hermitian matrices, shape ``(..., n, n)``.

    Uses ``eigvalsh`` which is considerably cheaper than an SVD; callers are
    responsible for hermiticity.
    """
    batch = np.asarray(batch)
    return np.sum(np.abs(np.linalg.eigvalsh(batch)), axis=-1)


def partial_trace(A, dims, trace_out="B"):
    """Partial trace of an operator on a bipartite space ``d_A x d_B``.

    ``trace_out`` names the subsystem that is removed.
    """
    A = _square(A)
    dA, dB = (int(x) for x in dims)
    if dA * dB != A.shape[0]:
        raise DimensionMismatch(f"dims {dA}x{dB} do not factor size {A.shape[0]}")
    T = A.reshape(dA, dB, dA, dB)
    if trace_out == "B":
        return np.einsum("ajbj->ab", T)
    if trace_out == "A":
        return np.einsum("iaib->ab", T)
    raise ValueError("trace_out must be 'A' or 'B'")


def expm(A):
    return scipy.linalg.expm(A)


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Hilbert-Schmidt orthonormal Hermitian basis, element 0 = I/sqrt(d)."""

    dim: int
    elements: np.ndarray  # shape (d**2, d, d)

    def __len__(self):
        return self.elements.shape[0]

    def __getitem__(self, i):
        return self.elements[i]

    def coords(self, X):
        """Coefficients ``Tr(G_i X)`` for a matrix or a stack of matrices."""
        return np.einsum("iab,...ba->...i", self.elements, X)

    def matrix(self, c):
        """Inverse of :meth:`coords`."""
        return np.einsum("...i,iab->...ab", c, self.elements)

    @property
    def traceless(self):
        return self.elements[1:]


@lru_cache(maxsize=None)
def _gell_mann_elements(d):
    mats = [np.eye(d, dtype=complex) / np.sqrt(d)]
    s = 1.0 / np.sqrt(2.0)
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = s
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j * s
            anti[k, j] = 1j * s
            mats.extend([sym, anti])
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        mats.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    out = np.array(mats)
    out.setflags(write=False)
    return out


def gell_mann_basis(d):
    """Orthonormal generalized Gell-Mann basis of ``d x d`` Hermitian matrices.

    Ordering: identity, then a symmetric/antisymmetric pair for every
    ``j < k`` in lexicographic order, then the ``d - 1`` diagonal elements.
    For ``d = 2`` this is ``(I, sx, sy, sz) / sqrt(2)``.
    """
    d = int(d)
    if d < 2:
        raise BadDimension(f"dimension must be >= 2, got {d}")
    return OperatorBasis(d, _gell_mann_elements(d))


def random_unitary(d, rng):
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_pure_state(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density_matrix(d, rng, rank=None):
    """Random density matrix from a Ginibre ensemble of the given rank."""
    rank = d if rank is None else rank
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d, rng):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (A + A.conj().T)


def random_kraus(d, rng, n_ops=None):
    """Kraus operators of a random channel, sliced from a random isometry."""
    n_ops = d if n_ops is None else n_ops
    Z = rng.standard_normal((n_ops * d, d)) + 1j * rng.standard_normal((n_ops * d, d))
    Q, _ = np.linalg.qr(Z)
    return Q.reshape(n_ops, d, d)
