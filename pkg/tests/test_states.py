import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entbound.model import SpinModel, algebraic_couplings, ground_state
from entbound.states import (
    DensityOperator,
    StateError,
    StateVector,
    block_entropy,
    log_negativity,
    partial_transpose,
    product_state,
    pure_log_negativity,
    random_density,
    random_pure_state,
    reduced_state,
    schmidt_spectrum,
)
from entbound.witness import BellReference


def _independent_pt(m, n):
    # elementwise definition: <a b|rho^T_A|a' b'> = <a' b|rho|a b'>
    h = 1 << (n // 2)
    out = np.empty_like(m)
    for a in range(h):
        for b in range(h):
            for a2 in range(h):
                for b2 in range(h):
                    out[a * h + b, a2 * h + b2] = m[a2 * h + b, a * h + b2]
    return out


def _bell_pair():
    return StateVector.from_array([1, 0, 0, 1]).density()


def test_bell_pair_partial_transpose_spectrum():
    ev = np.linalg.eigvalsh(partial_transpose(_bell_pair()))
    assert np.allclose(ev, [-0.5, 0.5, 0.5, 0.5])


def test_partial_transpose_matches_definition(rng):
    rho = random_density(4, rng)
    assert np.allclose(partial_transpose(rho), _independent_pt(rho.matrix, 4))


def test_partial_transpose_of_product(rng):
    a, b = random_density(1, rng).matrix, random_density(1, rng).matrix
    rho = DensityOperator.from_matrix(np.kron(a, b))
    pt = partial_transpose(rho)
    assert np.allclose(pt, np.kron(a.T, b))
    assert np.linalg.eigvalsh(pt)[0] > -1e-12
    assert log_negativity(rho) == 0.0


@given(n=st.sampled_from([2, 4, 6]), seed=st.integers(0, 10**6))
def test_partial_transpose_involution_trace_hermiticity(n, seed):
    rho = random_density(n, np.random.default_rng(seed))
    pt = partial_transpose(rho)
    assert np.array_equal(partial_transpose(pt), rho.matrix)
    assert np.trace(pt) == np.trace(rho.matrix)
    assert np.array_equal(pt, pt.conj().T)


@given(n=st.sampled_from([2, 4]), seed=st.integers(0, 10**6))
def test_trace_norm_eigen_vs_singular(n, seed):
    rho = random_density(n, np.random.default_rng(seed), rank=2)
    pt = partial_transpose(rho)
    assert np.abs(np.linalg.eigvalsh(pt)).sum() == pytest.approx(np.linalg.svd(pt, compute_uv=False).sum(), abs=1e-10)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_log_negativity_of_reference(n):
    phi = BellReference(n).state()
    assert log_negativity(phi) == pytest.approx(n / 2, abs=1e-12)
    s = schmidt_spectrum(phi).coefficients
    assert np.allclose(s, 2.0 ** (-n / 4))
    assert block_entropy(phi.density()) == pytest.approx(n / 2, abs=1e-12)


def test_product_states_have_zero_entanglement(rng):
    psi = product_state([0.6, 0.8j], 4)
    assert log_negativity(psi) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(schmidt_spectrum(psi).coefficients[0], 1.0)
    assert block_entropy(psi.density()) == pytest.approx(0.0, abs=1e-12)


def test_maximally_mixed_cautionary_pair():
    rho = DensityOperator.maximally_mixed(6)
    assert block_entropy(rho) == pytest.approx(3.0, abs=1e-12)
    assert log_negativity(rho) == 0.0


def test_rank_three_state_against_dense_oracle(rng):
    rho = random_density(4, rng, rank=3)
    ev = np.linalg.eigvals(_independent_pt(rho.matrix, 4))
    assert log_negativity(rho) == pytest.approx(np.log2(np.abs(ev.real).sum()), abs=1e-10)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_pure_state_negativity_from_schmidt(n):
    rng = np.random.default_rng(n)
    for _ in range(67):  # about 200 states over the three sizes
        psi = random_pure_state(n, rng)
        lam = schmidt_spectrum(psi).coefficients
        assert np.sum(lam**2) == pytest.approx(1.0, abs=1e-10)
        assert np.all(np.diff(lam) <= 1e-15)
        assert log_negativity(psi) == pytest.approx(2 * np.log2(lam.sum()), abs=1e-9)


def test_ground_state_negativity_two_code_paths():
    gs = ground_state(SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0))
    assert pure_log_negativity(gs.state) == pytest.approx(log_negativity(gs.state), abs=1e-9)


def _random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@given(seed=st.integers(0, 10**6), n=st.sampled_from([2, 4, 6]))
def test_block_entropy_invariant_under_local_unitaries(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_density(n, rng, rank=3)
    U = np.ones((1, 1))
    for site in range(n):
        U = np.kron(U, _random_unitary(rng) if site < n // 2 else np.eye(2))
    rotated = DensityOperator.from_matrix(U @ rho.matrix @ U.conj().T)
    assert block_entropy(rotated) == pytest.approx(block_entropy(rho), abs=1e-9)
    assert log_negativity(rotated) == pytest.approx(log_negativity(rho), abs=1e-9)


def test_block_entropy_traces_out_first_half():
    # |0> on the first half, a Bell-free mixed second half: entropy from the second half only
    a = np.diag([1.0, 0.0])
    b = np.diag([0.5, 0.5])
    rho = DensityOperator.from_matrix(np.kron(a, b))
    assert np.allclose(reduced_state(rho, keep="B"), b)
    assert block_entropy(rho) == pytest.approx(1.0)


def test_container_invariants():
    with pytest.raises(StateError):
        StateVector(np.ones(4), 2)
    with pytest.raises(StateError):
        DensityOperator(np.eye(4), 2)
    with pytest.raises(StateError):
        DensityOperator(np.diag([1.5, -0.5, 0, 0]), 2)
    with pytest.raises(StateError):
        DensityOperator.from_matrix(np.array([[0.5, 0.1], [0.3, 0.5]]))
    with pytest.raises(StateError):
        partial_transpose(np.eye(8) / 8)
