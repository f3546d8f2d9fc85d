import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channelscope.errors import BadDimension, DimensionMismatch, NonSquare, NotHermitian
from channelscope.linalg import (
    gell_mann_basis,
    herm_eig,
    hmax,
    partial_trace,
    random_density_matrix,
    random_hermitian,
    random_kraus,
    random_unitary,
    trace_norm,
    trace_norm_hermitian,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 5)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_gell_mann_orthonormal(d):
    G = gell_mann_basis(d).elements
    gram = np.einsum("iab,jba->ij", G.conj().transpose(0, 2, 1), G)
    np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-13)
    np.testing.assert_allclose(G[0], np.eye(d) / np.sqrt(d))
    for g in G:
        np.testing.assert_allclose(g, g.conj().T)
    np.testing.assert_allclose(np.einsum("iaa->i", G[1:]), 0, atol=1e-13)


def test_gell_mann_qubit_is_scaled_pauli():
    G = gell_mann_basis(2).elements * np.sqrt(2)
    paulis = [
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]]),
    ]
    for P in paulis:
        assert min(np.max(np.abs(g - P)) for g in G[1:]) < 1e-14


def test_gell_mann_rejects_small_dimension():
    with pytest.raises(BadDimension):
        gell_mann_basis(1)


def test_basis_is_read_only():
    with pytest.raises(ValueError):
        gell_mann_basis(2).elements[0, 0, 0] = 1


@settings(max_examples=50, deadline=None)
@given(d=dims, seed=seeds)
def test_coords_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    b = gell_mann_basis(d)
    np.testing.assert_allclose(b.matrix(b.coords(X)), X, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(d=dims, seed=seeds)
def test_herm_eig_reconstructs(d, seed):
    A = random_hermitian(d, np.random.default_rng(seed))
    w, V = herm_eig(A)
    assert np.all(np.diff(w) >= 0)
    np.testing.assert_allclose(V @ np.diag(w) @ V.conj().T, A, atol=1e-10)
    np.testing.assert_allclose(V.conj().T @ V, np.eye(d), atol=1e-12)
    assert hmax(A) == pytest.approx(w[-1])


def test_herm_eig_gates():
    with pytest.raises(NotHermitian):
        herm_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NonSquare):
        herm_eig(np.zeros((2, 3)))


@settings(max_examples=50, deadline=None)
@given(d=dims, seed=seeds)
def test_trace_norm_paths_agree(d, seed):
    A = random_hermitian(d, np.random.default_rng(seed))
    svd = np.sum(np.linalg.svd(A, compute_uv=False))
    assert trace_norm(A) == pytest.approx(svd)
    assert trace_norm_hermitian(A) == pytest.approx(svd)


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_trace_norm_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    A = random_hermitian(3, rng)
    U = random_unitary(3, rng)
    assert trace_norm(U @ A @ U.conj().T) == pytest.approx(trace_norm(A))


def test_partial_trace_of_product(rng):
    a, b = random_density_matrix(2, rng), random_density_matrix(3, rng)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), (2, 3), "B"), a, atol=1e-14)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), (2, 3), "A"), b, atol=1e-14)
    with pytest.raises(DimensionMismatch):
        partial_trace(np.eye(6), (2, 2))


@settings(max_examples=30, deadline=None)
@given(d=dims, seed=seeds, rank=st.integers(1, 5))
def test_random_density_matrix_is_state(d, seed, rank):
    rho = random_density_matrix(d, np.random.default_rng(seed), rank=min(rank, d))
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    assert np.linalg.matrix_rank(rho, tol=1e-10) == min(rank, d)


@settings(max_examples=30, deadline=None)
@given(d=dims, seed=seeds, n=st.integers(1, 6))
def test_random_kraus_complete(d, seed, n):
    K = random_kraus(d, np.random.default_rng(seed), n)
    np.testing.assert_allclose(np.einsum("kba,kbc->ac", K.conj(), K), np.eye(d), atol=1e-12)
