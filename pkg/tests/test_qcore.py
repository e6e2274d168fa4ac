import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cavpass.qcore import (
    Basis,
    Operator,
    QCoreError,
    StateVector,
    build_basis,
    matrix_exponential_propagator,
    null_space,
)
from cavpass.model import build_h_cond_two_level, build_h_int


def test_basis_two_atoms_two_levels():
    b = build_basis(2, 2, 1)
    assert b.dimension == 8
    labels = {b.format_label(l) for l in b.labels}
    assert {"12;0", "21;0", "11;1"} <= labels


def test_basis_single_atom():
    b = build_basis(1, 2, 0)
    assert b.dimension == 2
    assert [b.format_label(l) for l in b.labels] == ["1;0", "2;0"]


def test_basis_three_lambda_atoms():
    assert build_basis(3, 3, 1).dimension == 54


def test_basis_ordering_is_lexicographic():
    b = build_basis(2, 2, 1)
    keys = [(l[0], l[1]) for l in b.labels]
    assert keys == sorted(keys)
    assert len(set(keys)) == b.dimension


def test_basis_rejects_bad_levels():
    with pytest.raises(QCoreError):
        build_basis(2, 4, 1)
    with pytest.raises(QCoreError):
        build_basis(0, 2, 1)


@given(st.integers(1, 3), st.integers(2, 3), st.integers(0, 2))
def test_basis_index_label_roundtrip(n, levels, cutoff):
    b = build_basis(n, levels, cutoff)
    assert b.dimension == levels**n * (cutoff + 1)
    for i in range(b.dimension):
        assert b.index(b.label(i)) == i


def test_state_vector_norm_guard():
    b = build_basis(1, 2, 0)
    with pytest.raises(QCoreError):
        StateVector(b, [1.5, 0.0])
    with pytest.raises(QCoreError):
        StateVector(b, [np.nan, 0.0])
    s = StateVector(b, [1.0, 0.0])
    assert s.norm_sq() == 1.0


# --- matrix exponential -----------------------------------------------------


def test_propagator_zero_hamiltonian_is_identity():
    b = build_basis(1, 2, 0)
    h = Operator(b, np.zeros((2, 2)))
    u = matrix_exponential_propagator(h, 1.7)
    assert np.allclose(u.matrix, np.eye(2), atol=1e-15)


def test_propagator_diagonal_case():
    b = build_basis(1, 2, 1)
    lam = np.array([0.3, -1.2, 2.5, 0.0])
    h = Operator(b, np.diag(lam))
    u = matrix_exponential_propagator(h, 0.8)
    assert np.allclose(np.diag(u.matrix), np.exp(-1j * lam * 0.8), atol=1e-14)


def _single_excitation_block(g1, g2, kappa):
    b = build_basis(2, 2, 1)
    idx = [b.index(l) for l in ("12;0", "21;0", "11;1")]
    return build_h_cond_two_level([g1, g2], kappa, b).matrix[np.ix_(idx, idx)]


def test_propagator_matches_eigendecomposition_oracle():
    # oracle: diagonalize the (non-Hermitian) single-excitation block and
    # exponentiate the eigenvalues
    blk = _single_excitation_block(1.0, 1.0, 0.2)
    w, v = np.linalg.eig(blk)
    expected = v @ np.diag(np.exp(-1j * w * 0.1)) @ np.linalg.inv(v)

    b = build_basis(2, 2, 1)
    full = np.zeros((8, 8), dtype=complex)
    idx = [b.index(l) for l in ("12;0", "21;0", "11;1")]
    full[np.ix_(idx, idx)] = blk
    u = matrix_exponential_propagator(Operator(b, full), 0.1)
    assert np.max(np.abs(u.matrix[np.ix_(idx, idx)] - expected)) < 1e-10


def test_propagator_rejects_nonfinite():
    b = build_basis(1, 2, 0)
    with pytest.raises(QCoreError):
        matrix_exponential_propagator(Operator(b, [[np.inf, 0], [0, 0]]), 0.1)
    with pytest.raises(QCoreError):
        matrix_exponential_propagator(Operator(b, np.zeros((2, 2))), np.nan)


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(0.0, 1.0),
       st.floats(0.1, 3.0), st.floats(0.1, 3.0))
@settings(max_examples=30, deadline=None)
def test_propagator_semigroup_property(g1, g2, kappa, dt1, dt2):
    b = build_basis(2, 2, 1)
    h = build_h_cond_two_level([g1, g2], kappa, b)
    u1 = matrix_exponential_propagator(h, dt1).matrix
    u2 = matrix_exponential_propagator(h, dt2).matrix
    u12 = matrix_exponential_propagator(h, dt1 + dt2).matrix
    assert np.max(np.abs(u1 @ u2 - u12)) < 1e-10


@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(0.1, 4.0))
@settings(max_examples=30, deadline=None)
def test_propagator_unitary_for_hermitian(g1, g2, dt):
    b = build_basis(2, 2, 1)
    u = matrix_exponential_propagator(build_h_int([g1, g2], b), dt).matrix
    assert np.linalg.norm(u.conj().T @ u - np.eye(8), 2) < 1e-10


# --- null space --------------------------------------------------------------


def test_null_space_zero_matrix():
    b = build_basis(1, 2, 1)
    vecs = null_space(Operator(b, np.zeros((4, 4))), 1e-10)
    assert len(vecs) == 4
    m = np.column_stack([v.amplitudes for v in vecs])
    assert np.allclose(m.conj().T @ m, np.eye(4), atol=1e-12)


def test_null_space_dark_state_of_interaction():
    b = build_basis(2, 2, 1)
    h = build_h_int([0.6, 0.8], b)
    idx = [b.index(l) for l in ("12;0", "21;0", "11;1")]
    blk = h.matrix[np.ix_(idx, idx)]
    kernel = null_space(blk, 1e-10)
    assert kernel.shape[1] == 1
    # span equals the dark state (g1 |12;0> - g2 |21;0>)/R up to phase
    expected = np.array([0.6, -0.8, 0.0])
    overlap = abs(np.vdot(expected, kernel[:, 0]))
    assert overlap == pytest.approx(1.0, abs=1e-12)


def test_null_space_three_atom_effective_coupling():
    # raman coupling with eliminated weights over the photonless +
    # single-excitation sectors; kernel dim 3 = ground + two dark combos
    from cavpass import model

    b = build_basis(3, 2, 1)
    g = np.array([0.7, 0.4, 0.9])
    omega = np.array([1.0, 0.8, 0.6])
    weights = omega * g / (2 * 20.0)
    coupling = model.build_h_int(weights, b).matrix
    keep = [j for j, (lv, n) in enumerate(b.labels)
            if n + sum(1 for l in lv if l > 1) <= 1]
    sub = coupling[np.ix_(keep, keep)]
    kernel = null_space(sub, 1e-10)
    # oracle: rank via singular values
    s = np.linalg.svd(sub, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    assert kernel.shape[1] == len(keep) - rank == 3


@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 3))
@settings(max_examples=25, deadline=None)
def test_null_space_dimension_and_residual(d, rows, seed):
    # matrices with known kernel dimension >= d - rows
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(rows, d)) + 1j * rng.normal(size=(rows, d))
    kernel = null_space(a, 1e-10)
    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    assert kernel.shape[1] == d - rank
    norm_a = np.linalg.norm(a, 2)
    for k in range(kernel.shape[1]):
        assert np.linalg.norm(a @ kernel[:, k]) <= 10 * 1e-10 * norm_a
    if kernel.shape[1]:
        gram = kernel.conj().T @ kernel
        assert np.max(np.abs(gram - np.eye(kernel.shape[1]))) < 1e-10


def test_null_space_agrees_with_scipy():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 6)) + 1j * rng.normal(size=(4, 6))
    ours = null_space(a, 1e-10)
    ref = scipy.linalg.null_space(a)
    assert ours.shape == ref.shape
    # same subspace: projectors agree
    p1 = ours @ ours.conj().T
    p2 = ref @ ref.conj().T
    assert np.max(np.abs(p1 - p2)) < 1e-10
