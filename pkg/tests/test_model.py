import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entbound.model import (
    IonTrapSpec,
    ModelError,
    ResonanceError,
    SpinModel,
    algebraic_couplings,
    apply_hamiltonian,
    couplings_from_config,
    cross_block,
    d_matrix,
    default_ion_trap,
    dense_hamiltonian,
    equilibrium_positions,
    ground_state,
    ion_trap_couplings,
    is_reflection_symmetric,
    j0_normalization,
    model_from_config,
    normalized,
    transverse_modes,
    validate_appendix_positivity,
)


def test_algebraic_entries():
    J = algebraic_couplings(4, 1.0, -1.0)
    assert J[0, 2] == -0.5
    assert J[0, 3] == pytest.approx(-1 / 3, abs=1e-15)
    assert np.all(algebraic_couplings(4, 0.0, -1.0)[~np.eye(4, dtype=bool)] == -1.0)
    J = algebraic_couplings(8, 0.3, 1.0)
    assert J[0, 7] == pytest.approx(7 ** -0.3)


@pytest.mark.parametrize("n, p", [(3, 1.0), (4, -0.5), (4, np.inf), (0, 1.0)])
def test_algebraic_rejects_bad_input(n, p):
    with pytest.raises(ModelError):
        algebraic_couplings(n, p, -1.0)


@given(half=st.integers(1, 20), p=st.floats(0, 3), amp=st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3))
def test_algebraic_symmetry_and_reflection(half, p, amp):
    J = algebraic_couplings(2 * half, p, amp)
    assert np.array_equal(J, J.T)
    assert np.all(np.diag(J) == 0)
    assert np.array_equal(J, J[::-1, ::-1])
    assert j0_normalization(J) == pytest.approx(abs(amp), rel=1e-14)


def test_j0_examples():
    J = np.zeros((3, 3))
    J[0, 1] = J[1, 0] = -1
    J[1, 2] = J[2, 1] = -3
    assert j0_normalization(J) == 2.0
    assert j0_normalization(np.zeros((4, 4))) == 0.0
    with pytest.raises(ModelError):
        normalized(np.zeros((4, 4)))


def test_two_ion_equilibrium_and_modes():
    x = equilibrium_positions(2)
    assert np.allclose(x, [-(0.25 ** (1 / 3)), 0.25 ** (1 / 3)], atol=1e-12)
    wt, nu = 2 * np.pi * 4.8e6, 2 * np.pi * 0.5e6
    freqs, b = transverse_modes(x, wt, nu)
    assert np.allclose(sorted(freqs), sorted([wt, np.sqrt(wt**2 - nu**2)]), rtol=1e-12)
    assert np.allclose(b.T @ b, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("n", [3, 5, 9])
def test_equilibrium_gradient_vanishes(n):
    # force balance checked independently of the solver
    x = equilibrium_positions(n)
    d = x[:, None] - x[None, :]
    np.fill_diagonal(d, np.inf)
    grad = x - np.sum(np.sign(d) / d**2, axis=1)
    assert np.abs(grad).max() < 1e-10
    assert np.allclose(x, -x[::-1], atol=1e-12)


def _brute_force_ion_couplings(spec):
    x = equilibrium_positions(spec.n_ions)
    freqs, b = transverse_modes(x, spec.transverse_trap_freq, spec.axial_trap_freq)
    om = spec.rabi_vector()
    hbar = 1.054571817e-34
    pref = hbar * spec.wavevector_diff**2 / (4 * spec.ion_mass)
    n = spec.n_ions
    J = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                J[i, j] = om[i] * om[j] * pref * sum(
                    b[i, m] * b[j, m] / (spec.detuning**2 - freqs[m] ** 2) for m in range(n))
    return J


def test_ion_trap_sign_above_com_mode():
    spec = default_ion_trap(6)
    J = ion_trap_couplings(spec)
    off = J[~np.eye(6, dtype=bool)]
    assert np.all(off > 0) or np.all(off < 0)
    assert np.allclose(J, _brute_force_ion_couplings(spec), rtol=1e-10, atol=0)
    assert is_reflection_symmetric(J, rtol=1e-9)


def test_ion_trap_resonance_rejected():
    spec = default_ion_trap(4)
    x = equilibrium_positions(4)
    freqs, _ = transverse_modes(x, spec.transverse_trap_freq, spec.axial_trap_freq)
    bad = IonTrapSpec(**{**spec.__dict__, "detuning": float(freqs[1])})
    with pytest.raises(ResonanceError):
        ion_trap_couplings(bad)


def test_cross_block_examples():
    cb = cross_block(algebraic_couplings(4, 1.0, -1.0))
    assert np.allclose(cb.entries, [[-1 / 3, -1 / 2], [-1 / 2, -1]])
    assert cb.classification == "negative-semidefinite"
    assert cb.branch == "ferro"
    lo, hi = np.linalg.eigvalsh(np.array([[-1 / 3, -1 / 2], [-1 / 2, -1]]))
    assert cb.extremal_eigenvalues == pytest.approx((lo, hi))
    cb = cross_block(algebraic_couplings(4, 1.0, 1.0))
    assert cb.classification == "positive-semidefinite"
    assert cb.branch == "antiferro"


def test_cross_block_indefinite():
    # mirrored-half couplings with mixed signs: eigenvalues -3 and +1 of [[-1, 2], [2, -1]]
    J = np.zeros((4, 4))
    J[0, 3] = J[3, 0] = -1.0
    J[1, 2] = J[2, 1] = -1.0
    J[0, 2] = J[2, 0] = J[1, 3] = J[3, 1] = 2.0
    J[0, 1] = J[1, 0] = J[2, 3] = J[3, 2] = -1.0
    cb = cross_block(J)
    assert cb.classification == "indefinite"
    assert cb.branch is None
    assert cb.extremal_eigenvalues == pytest.approx((-3.0, 1.0))


def test_cross_block_names_violating_pair():
    J = algebraic_couplings(4, 1.0, -1.0)
    J[0, 1] = J[1, 0] = -2.0
    with pytest.raises(ModelError, match=r"J\[1,2\]"):
        cross_block(J)


def test_d_matrix_small():
    assert d_matrix(1) == [[1]]
    rep = validate_appendix_positivity(1, 1.0)
    assert rep.d_min_eigenvalue == pytest.approx(1.0)
    assert rep.ok


def test_d_matrix_positive_at_ten():
    rep = validate_appendix_positivity(10, 1.0)
    assert rep.d_pivots_positive and rep.d_min_eigenvalue > 0
    dense = np.array([[float(x) for x in row] for row in d_matrix(10)])
    assert rep.d_min_eigenvalue == pytest.approx(np.linalg.eigvalsh(dense)[0], rel=1e-3, abs=1e-15)


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.0])
def test_cross_block_psd_against_dense_eigensolver(p):
    for half in range(1, 21):
        J = algebraic_couplings(2 * half, p, -1.0)
        X = J[:half, ::-1][:, :half]
        ev = np.linalg.eigvalsh(-X)
        assert ev[0] >= -1e-10 * np.abs(ev).max()
        assert validate_appendix_positivity(half, p).cross_negative_semidefinite


def test_two_site_spectra():
    J = np.array([[0.0, -1.0], [-1.0, 0.0]])
    assert np.allclose(np.linalg.eigvalsh(SpinModel(J, 0.0).dense()), [-1, -1, 1, 1])
    assert np.allclose(np.linalg.eigvalsh(SpinModel(np.zeros((2, 2)), 1.0).dense()), [-2, 0, 0, 2])


def _matrix_of(model):
    d = model.dim
    return np.stack([apply_hamiltonian(model, np.eye(d)[:, k]) for k in range(d)], axis=1)


@given(half=st.integers(1, 4), p=st.floats(0, 3), b=st.floats(-3, 3), seed=st.integers(0, 1000))
def test_apply_matches_dense_on_basis(half, p, b, seed):
    n = 2 * half
    rng = np.random.default_rng(seed)
    J = algebraic_couplings(n, p, -1.0) * (1 + 0.1 * rng.uniform(-1, 1))
    model = SpinModel(J, b)
    assert np.allclose(_matrix_of(model), dense_hamiltonian(J, b), atol=1e-12)


def test_apply_rejects_wrong_dimension():
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0)
    with pytest.raises(ModelError):
        apply_hamiltonian(model, np.ones(8))


def test_ground_energy_matches_dense(backend):
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0)
    gs = ground_state(model)
    ev = np.linalg.eigvalsh(model.dense())
    assert gs.energy == pytest.approx(ev[0], abs=1e-10)
    assert gs.gap == pytest.approx(ev[1] - ev[0], abs=1e-8)
    assert not gs.degenerate


def test_ground_state_degenerate_at_zero_field():
    gs = ground_state(SpinModel(algebraic_couplings(6, 1.0, -1.0), 0.0))
    assert gs.degenerate


def test_spin_model_invariants():
    with pytest.raises(ModelError):
        SpinModel(np.array([[0.0, 1.0], [2.0, 0.0]]), 0.0)
    with pytest.raises(ModelError):
        SpinModel(np.eye(2), 0.0)
    with pytest.raises(ModelError):
        SpinModel(algebraic_couplings(4, 1, -1)[:3, :3], 0.0)


def test_model_from_config_kinds():
    m = model_from_config({"n_sites": 4, "coupling": {"kind": "algebraic", "p": 2.0, "amplitude": -3.0},
                           "field_b": 0.5})
    assert np.allclose(m.couplings, algebraic_couplings(4, 2.0, -1.0))
    assert m.field_b == 0.5
    J = algebraic_couplings(4, 1.0, -1.0)
    m = model_from_config({"n_sites": 4, "coupling": {"kind": "explicit", "matrix": J.tolist()},
                           "normalize": False})
    assert np.array_equal(m.couplings, J)
    with pytest.raises(ModelError):
        couplings_from_config({"kind": "explicit", "matrix": np.zeros((3, 3)).tolist()}, 4)
    with pytest.raises(ModelError):
        couplings_from_config({"kind": "lattice"}, 4)
    m = model_from_config({"n_sites": 4, "coupling": {"kind": "ion_trap"}})
    assert j0_normalization(m.couplings) == pytest.approx(1.0)
