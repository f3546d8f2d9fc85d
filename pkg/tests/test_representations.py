import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channelscope.errors import (
    DimensionMismatch,
    IncompleteKraus,
    MalformedTransfer,
    SingularIntermediate,
)
from channelscope.linalg import gell_mann_basis, random_density_matrix, random_kraus
from channelscope.representations import (
    ChoiMatrix,
    KrausSet,
    TransferMatrix,
    affine_to_transfer,
    choi_to_transfer,
    compose,
    intermediate_map,
    kraus_to_choi,
    kraus_to_transfer,
    maximally_entangled,
    transfer_to_affine,
    transfer_to_choi,
    unital_nonunital_split,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 4)
PAULIS = [
    np.eye(2),
    np.array([[0, 1], [1, 0]]),
    np.array([[0, -1j], [1j, 0]]),
    np.array([[1, 0], [0, -1]]),
]


def random_channel(d, rng, n_ops=None):
    return KrausSet(random_kraus(d, rng, n_ops))


def choi_by_definition(K):
    # sum_ab E(|a><b|) (x) |a><b| / d
    d = K.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            unit = np.zeros((d, d))
            unit[a, b] = 1
            out += np.kron(K.apply(unit), unit)
    return out / d


def test_kraus_completeness_enforced():
    with pytest.raises(IncompleteKraus):
        KrausSet(np.array([np.eye(2), np.eye(2)]))
    with pytest.raises(IncompleteKraus):
        KrausSet(np.full((1, 2, 2), np.nan))


def test_transfer_first_row_enforced():
    F = np.eye(4)
    F[0, 1] = 0.1
    with pytest.raises(MalformedTransfer):
        TransferMatrix(F)
    with pytest.raises(MalformedTransfer):
        TransferMatrix(np.eye(5))


def test_transfer_matches_pauli_transfer_matrix(rng):
    K = random_channel(2, rng)
    R = np.array([[np.trace(P @ K.apply(Q)).real / 2 for Q in PAULIS] for P in PAULIS])
    # qubit Gell-Mann elements are (I, X, Y, Z) / sqrt(2)
    np.testing.assert_allclose(kraus_to_transfer(K).matrix, R, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(d=dims, seed=seeds)
def test_choi_matches_definition(d, seed):
    K = random_channel(d, np.random.default_rng(seed))
    np.testing.assert_allclose(kraus_to_choi(K).matrix, choi_by_definition(K), atol=1e-12)
    np.testing.assert_allclose(transfer_to_choi(kraus_to_transfer(K)).matrix,
                               choi_by_definition(K), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(d=dims, seed=seeds)
def test_round_trips(d, seed):
    rng = np.random.default_rng(seed)
    K = random_channel(d, rng)
    F = kraus_to_transfer(K)
    chi = kraus_to_choi(K)
    assert np.max(np.abs(choi_to_transfer(chi).matrix - F.matrix)) <= 1e-9
    assert np.max(np.abs(transfer_to_choi(F).matrix - chi.matrix)) <= 1e-9
    assert np.max(np.abs(affine_to_transfer(transfer_to_affine(F)).matrix - F.matrix)) <= 1e-15
    rho = random_density_matrix(d, rng)
    np.testing.assert_allclose(F.apply(rho), K.apply(rho), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(d=dims, seed=seeds)
def test_choi_trace_and_partial_trace(d, seed):
    chi = kraus_to_choi(random_channel(d, np.random.default_rng(seed))).matrix
    assert np.trace(chi).real == pytest.approx(1.0)
    # tracing the system factor leaves I/d: trace preservation
    reduced = np.einsum("iaib->ab", chi.reshape(d, d, d, d))
    np.testing.assert_allclose(reduced, np.eye(d) / d, atol=1e-12)


def test_identity_choi_is_maximally_entangled():
    chi = transfer_to_choi(TransferMatrix.identity(3))
    np.testing.assert_allclose(chi.matrix, maximally_entangled(3), atol=1e-14)


def test_cp_iff_choi_positive_on_random_channels(rng):
    for _ in range(200):
        d = int(rng.integers(2, 4))
        chi = kraus_to_choi(random_channel(d, rng, int(rng.integers(1, 5))))
        assert chi.is_cp()


@pytest.mark.parametrize("d", [2, 3])
def test_transpose_mixture_cp_threshold(d):
    # (1-q) full depolarizer + q transpose: Choi eigenvalues (1-q)/d^2 +- q/d
    depol = np.zeros((d * d, d * d))
    depol[0, 0] = 1.0
    G = gell_mann_basis(d).elements
    basis_T = np.einsum("iab,jab->ij", G, G).real  # Tr(G_i G_j^T)
    for q in np.linspace(0, 1, 21):
        chi = transfer_to_choi(TransferMatrix((1 - q) * depol + q * basis_T))
        expected = (1 - q) / d**2 - q / d
        assert chi.min_eig() == pytest.approx(expected, abs=1e-12)
        assert chi.is_cp() == (q <= 1 / (d + 1) + 1e-12)


def test_choi_rejects_non_hermitian():
    with pytest.raises(MalformedTransfer):
        ChoiMatrix(np.array([[0, 1], [0, 0]]))


@settings(max_examples=30, deadline=None)
@given(d=dims, seed=seeds)
def test_intermediate_map_reconstruction(d, seed):
    rng = np.random.default_rng(seed)
    Fs = kraus_to_transfer(random_channel(d, rng, d * d))
    step = kraus_to_transfer(random_channel(d, rng))
    Ft = compose(step, Fs)
    inter = intermediate_map(Ft, Fs)
    np.testing.assert_allclose(compose(inter, Fs).matrix, Ft.matrix, atol=1e-8)
    M, tau = unital_nonunital_split(Ft, Fs)
    np.testing.assert_allclose(Ft.tau, tau + M @ Fs.tau, atol=1e-8)
    np.testing.assert_allclose(Ft.M, M @ Fs.M, atol=1e-8)


def test_intermediate_map_singular():
    F = np.zeros((4, 4))
    F[0, 0] = 1.0
    with pytest.raises(SingularIntermediate) as info:
        intermediate_map(TransferMatrix.identity(2), TransferMatrix(F))
    assert info.value.condition is not None


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compose(TransferMatrix.identity(2), TransferMatrix.identity(3))


def test_transfer_is_immutable():
    F = TransferMatrix.identity(2)
    with pytest.raises(ValueError):
        F.matrix[1, 1] = 0.5


def test_affine_unitality(rng):
    K = KrausSet(np.array([np.eye(2) / np.sqrt(2), PAULIS[1] / np.sqrt(2)]))
    assert transfer_to_affine(kraus_to_transfer(K)).is_unital
    amp = KrausSet(np.array([[[1, 0], [0, np.sqrt(0.5)]], [[0, np.sqrt(0.5)], [0, 0]]]))
    affine = transfer_to_affine(kraus_to_transfer(amp))
    assert not affine.is_unital
    # Bloch vector of |1> maps to the mixture 0.5|0><0| + 0.5|1><1|, r = 0
    np.testing.assert_allclose(affine(np.array([0, 0, -1.0])), 0, atol=1e-12)
