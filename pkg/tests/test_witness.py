import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entbound.model import SpinModel, algebraic_couplings, ground_state, pauli_string
from entbound.states import (
    DensityOperator,
    StateVector,
    basis_state,
    log_negativity,
    partial_transpose,
    product_state,
    random_density,
    random_pure_state,
)
from entbound.witness import (
    BellReference,
    BranchWarning,
    all_zero_probability,
    bell_overlap,
    circuit_R,
    optimize_w1,
    reference_expectation,
    witness_bound,
    witness_inputs,
)


def _x_first_half(n):
    return pauli_string({i: "X" for i in range(n // 2)}, n)


def _reference_by_kron(n):
    # pairs (i, n-1-i) built from explicit Bell pairs and a site permutation
    pair = np.array([1.0, 0, 0, 1.0])
    t = np.ones(1)
    for _ in range(n // 2):
        t = np.kron(t, pair)
    t = t.reshape((2,) * n)
    # kron order is (0, n-1), (1, n-2), ...; move to site order
    order = [k for i in range(n // 2) for k in (i, n - 1 - i)]
    t = np.transpose(t, np.argsort(order))
    return t.reshape(-1)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_reference_vector_pairs_mirror_sites(n):
    ref = BellReference(n)
    v = ref.vector()
    assert np.allclose(v * ref.scale, _reference_by_kron(n))
    assert np.allclose(v[::-1], v)  # X on every site fixes it
    af = BellReference(n, "antiferro").vector()
    assert np.allclose(af, _x_first_half(n) @ v)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_reference_partial_transpose_spectrum(n):
    C = np.outer(_reference_by_kron(n), _reference_by_kron(n))
    ev = np.linalg.eigvalsh(partial_transpose(C))
    assert np.allclose(np.abs(ev), 1.0, atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_overlap_of_reference_itself(n):
    rep = bell_overlap(BellReference(n).state())
    assert rep.raw_value == pytest.approx(2 ** (n / 2))
    assert rep.bound_bits == pytest.approx(n / 2)


def test_overlap_of_paramagnet():
    rep = bell_overlap(product_state([1, 1], 6))
    assert rep.raw_value == pytest.approx(1.0, abs=1e-12)
    assert rep.bound_bits == pytest.approx(0.0, abs=1e-12)


def test_corollary_equality_small():
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0)
    gs = ground_state(model)
    rep = bell_overlap(gs.state, model=model, degenerate=gs.degenerate)
    assert rep.extra["corollary_equality"]
    assert rep.bound_bits == pytest.approx(log_negativity(gs.state), abs=1e-9)


def test_branch_mismatch_warns_but_bounds():
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0)
    gs = ground_state(model)
    with pytest.warns(BranchWarning):
        rep = bell_overlap(gs.state, branch="antiferro", model=model)
    assert rep.bound_bits <= log_negativity(gs.state) + 1e-10


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_circuit_prepares_reference(n):
    out = circuit_R(basis_state([0] * n))
    assert abs(np.vdot(BellReference(n).vector(), out.amplitudes)) ** 2 >= 1 - 1e-12
    af = circuit_R(basis_state([0] * n), branch="antiferro")
    assert abs(np.vdot(BellReference(n, "antiferro").vector(), af.amplitudes)) ** 2 >= 1 - 1e-12


@pytest.mark.parametrize("branch", ["ferro", "antiferro"])
def test_inverse_circuit_on_reference(branch):
    assert all_zero_probability(BellReference(6, branch).state(), branch) == pytest.approx(1.0, abs=1e-12)
    psi = random_pure_state(4, np.random.default_rng(3))
    back = circuit_R(circuit_R(psi, branch=branch), inverse=True, branch=branch)
    assert np.allclose(back.amplitudes, psi.amplitudes)


@given(seed=st.integers(0, 10**6), branch=st.sampled_from(["ferro", "antiferro"]))
def test_measurement_identity(seed, branch):
    rng = np.random.default_rng(seed)
    psi = random_pure_state(6, rng)
    direct = 8 * abs(np.vdot(BellReference(6, branch).vector(), psi.amplitudes)) ** 2
    assert 8 * all_zero_probability(psi, branch) == pytest.approx(direct, abs=1e-10)
    rho = random_density(4, rng, rank=2)
    phi = BellReference(4, branch).vector()
    assert 4 * all_zero_probability(rho, branch) == pytest.approx(4 * (phi @ rho.matrix @ phi).real, abs=1e-10)


def test_parity_witness_at_zero_w1():
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0)
    rep = witness_bound(model, {"H": 0.0, "PARITY_X": 0.0}, 0.0, include_parity=True)
    phi = _reference_by_kron(4)
    dense = np.outer(phi, phi) - pauli_string({i: "X" for i in range(4)}, 4)
    assert np.linalg.eigvalsh(dense)[0] == pytest.approx(-1.0)
    assert rep.certificate.w0 == pytest.approx(-1.0, abs=1e-9)
    assert rep.certificate.w0 <= -1.0


def test_witness_operator_below_reference_dense():
    # W = w0 + [X..X] + w1 H <= |Phi><Phi| as matrices
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 0.8)
    phi = _reference_by_kron(4)
    for w1, par in [(-0.7, True), (2.0, False), (-30.0, True)]:
        p = witness_bound(model, {"H": 0.0, "PARITY_X": 0.0}, w1, par).certificate
        W = p.w0 * np.eye(16) + w1 * model.dense()
        if par:
            W = W + pauli_string({i: "X" for i in range(4)}, 4)
        assert np.linalg.eigvalsh(np.outer(phi, phi) - W)[0] >= -1e-9


@pytest.mark.parametrize("n", [4, 6])
def test_witness_raw_value_below_trace_norm(n):
    rng = np.random.default_rng(n)
    model = SpinModel(algebraic_couplings(n, 1.0, -1.0), 0.9)
    phi = BellReference(n).state().density().matrix
    for _ in range(100):
        q = rng.random()
        rho = DensityOperator.from_matrix((1 - q) * random_density(n, rng).matrix + q * phi)
        meas = witness_inputs(rho, model)
        w1 = rng.uniform(-5, 5)
        rep = witness_bound(model, meas, w1, include_parity=bool(rng.integers(2)))
        pt = partial_transpose(rho)
        assert rep.raw_value <= np.abs(np.linalg.eigvalsh(pt)).sum() + 1e-10


def test_optimized_witness_near_tight_at_n8():
    model = SpinModel(algebraic_couplings(8, 1.0, -1.0), 1.0)
    gs = ground_state(model)
    exact = log_negativity(gs.state)
    _, rep = optimize_w1(model, witness_inputs(gs.state, model), True, interval=(-1000, 1000), budget=60)
    assert exact - 0.2 <= rep.bound_bits <= exact + 1e-8


def test_perturbed_couplings_stay_sound():
    rng = np.random.default_rng(2)
    nominal = SpinModel(algebraic_couplings(6, 1.0, -1.0), 0.8)
    J = nominal.couplings
    for _ in range(50):
        u = np.triu(rng.uniform(-0.02, 0.02, size=J.shape), 1)
        true = SpinModel(J * (1 + u + u.T), 0.8)
        gs = ground_state(true)
        _, rep = optimize_w1(nominal, witness_inputs(gs.state, nominal), True, interval=(-100, 100), budget=30)
        assert rep.bound_bits <= log_negativity(gs.state) + 1e-8


def test_optimize_examples():
    # on a single pair the reference is the weak-field ground state, so its data certify entanglement
    model = SpinModel(algebraic_couplings(2, 1.0, -1.0), 0.2)
    phi = BellReference(2).state()
    _, rep = optimize_w1(model, witness_inputs(phi, model), True)
    assert 0 < rep.bound_bits <= 1.0 + 1e-9
    # at zero field the pair witness reaches the full bit
    zero = model.with_field(0.0)
    _, rep = optimize_w1(zero, witness_inputs(phi, zero), True)
    assert rep.bound_bits == pytest.approx(1.0, abs=1e-6)
    # deep-paramagnet product data: nothing to certify
    para = SpinModel(algebraic_couplings(4, 1.0, -1.0), 10.0)
    _, rep = optimize_w1(para, witness_inputs(product_state([1, -1], 4), para), True)
    assert rep.bound_bits == 0.0
    # the B = 10 J0 ground state itself keeps ~0.1 bit; the bound stays below it
    gs = ground_state(para)
    _, rep = optimize_w1(para, witness_inputs(gs.state, para), True)
    assert 0.0 <= rep.bound_bits <= log_negativity(gs.state) + 1e-8


def test_optimize_reports_best_probe_and_budget_monotone():
    model = SpinModel(algebraic_couplings(6, 1.0, -1.0), 0.7)
    meas = witness_inputs(ground_state(model).state, model)
    prev = -np.inf
    for budget in (6, 12, 24, 48):
        w1, rep = optimize_w1(model, meas, True, interval=(-50, 50), budget=budget)
        assert rep.raw_value == max(v for _, v in rep.extra["probes"])
        assert rep.raw_value >= prev - 1e-12
        prev = rep.raw_value
    _, small = optimize_w1(model, meas, True, interval=(-50, 50), budget=6)
    assert small.extra["budget_exhausted"]


def test_optimize_rejects_bad_interval():
    model = SpinModel(algebraic_couplings(4, 1.0, -1.0), 1.0)
    with pytest.raises(ValueError):
        optimize_w1(model, {"H": -3.0, "PARITY_X": 0.5}, interval=(1.0, -1.0))


@given(seed=st.integers(0, 10**6))
def test_branch_covariance(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng, rank=2)
    X = _x_first_half(4)
    flipped = DensityOperator.from_matrix(X @ rho.matrix @ X)
    a = bell_overlap(rho, branch="antiferro")
    b = bell_overlap(flipped, branch="ferro")
    assert a.raw_value == pytest.approx(b.raw_value, abs=1e-14)
    assert reference_expectation(rho, "antiferro") == pytest.approx(reference_expectation(flipped), abs=1e-15)


def test_pure_and_mixed_paths_agree(rng):
    psi = random_pure_state(6, rng)
    assert bell_overlap(psi).raw_value == pytest.approx(bell_overlap(psi.density()).raw_value, abs=1e-12)
    model = SpinModel(algebraic_couplings(6, 1.0, -1.0), 0.5)
    a, b = witness_inputs(psi, model), witness_inputs(psi.density(), model)
    assert a["H"] == pytest.approx(b["H"], abs=1e-12)
    assert a["PARITY_X"] == pytest.approx(b["PARITY_X"], abs=1e-12)
