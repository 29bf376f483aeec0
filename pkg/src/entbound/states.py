"""State containers and exact bipartite entanglement functionals.

The bipartition is always first half of the chain (A) versus second half (B).
Logarithms are base 2 throughout.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
MAX_DENSE_SITES = 12
MAX_PURE_SITES = 24


class StateError(ValueError):
    pass


def _n_sites(dim):
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise StateError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if a.size != 1 << self.n_sites:
            raise StateError(f"{a.size} amplitudes for {self.n_sites} sites")
        if self.n_sites > MAX_PURE_SITES:
            raise StateError(f"pure states limited to {MAX_PURE_SITES} sites")
        if abs(np.linalg.norm(a) - 1) > NORM_TOL:
            raise StateError(f"state not normalized (norm {np.linalg.norm(a):.15g})")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_array(cls, a, normalize=True):
        a = np.asarray(a, dtype=complex).reshape(-1)
        if normalize:
            a = a / np.linalg.norm(a)
        return cls(a, _n_sites(a.size))

    @property
    def dim(self):
        return self.amplitudes.size

    def coefficient_matrix(self):
        h = 1 << (self.n_sites // 2)
        return self.amplitudes.reshape(h, self.dim // h)

    def density(self):
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.n_sites)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    n_sites: int
    check: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = 1 << self.n_sites
        if m.shape != (d, d):
            raise StateError(f"matrix shape {m.shape} does not match {self.n_sites} sites")
        if self.n_sites > MAX_DENSE_SITES:
            raise StateError(f"dense density operators limited to {MAX_DENSE_SITES} sites")
        if self.check:
            if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
                raise StateError("density operator not Hermitian")
            if abs(np.trace(m) - 1) > TRACE_TOL:
                raise StateError(f"trace {np.trace(m).real:.15g} != 1")
            lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
            if lo < -PSD_TOL:
                raise StateError(f"density operator not PSD (min eigenvalue {lo:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, m, check=True):
        m = np.asarray(m, dtype=complex)
        return cls(m, _n_sites(m.shape[0]), check)

    @classmethod
    def maximally_mixed(cls, n):
        return cls(np.eye(1 << n) / (1 << n), n)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SchmidtSpectrum:
    coefficients: np.ndarray

    def log_negativity(self):
        return float(max(0.0, 2 * np.log2(self.coefficients.sum())))


def as_density(state):
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, StateVector):
        return state.density()
    raise TypeError(f"expected StateVector or DensityOperator, got {type(state).__name__}")


def _half_dims(n):
    if n % 2:
        raise StateError(f"bipartition needs an even number of sites, got {n}")
    h = 1 << (n // 2)
    return h, (1 << n) // h


def partial_transpose(rho):
    """Transpose on the first half of the chain."""
    if isinstance(rho, DensityOperator):
        m, n = rho.matrix, rho.n_sites
    else:
        m = np.asarray(rho)
        n = _n_sites(m.shape[0])
    da, db = _half_dims(n)
    t = m.reshape(da, db, da, db).transpose(2, 1, 0, 3)
    return t.reshape(da * db, da * db)


def trace_norm_hermitian(m):
    return float(np.abs(np.linalg.eigvalsh(m)).sum())


def log_negativity(rho):
    """log2 of the trace norm of the partial transpose."""
    rho = as_density(rho)
    m = rho.matrix
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
        raise StateError("log_negativity needs a Hermitian operator")
    pt = partial_transpose(rho)
    val = np.log2(trace_norm_hermitian(0.5 * (pt + pt.conj().T)))
    if -1e-10 <= val < 0:
        val = 0.0
    return float(val)


def schmidt_spectrum(psi):
    s = np.linalg.svd(psi.coefficient_matrix(), compute_uv=False)
    return SchmidtSpectrum(s)


def pure_log_negativity(psi):
    """Pure-state negativity from the Schmidt spectrum, 2*log2(sum lambda)."""
    return schmidt_spectrum(psi).log_negativity()


def reduced_state(rho, keep="B"):
    rho = as_density(rho)
    da, db = _half_dims(rho.n_sites)
    t = rho.matrix.reshape(da, db, da, db)
    if keep == "B":
        return np.einsum("ajak->jk", t)
    return np.einsum("ajbj->ab", t)


def von_neumann_entropy(m, cutoff=1e-14):
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    ev = ev[ev > cutoff]
    return float(max(0.0, -np.sum(ev * np.log2(ev))))


def block_entropy(rho):
    """Entropy (bits) of the second half after tracing out the first half."""
    if isinstance(rho, StateVector):
        s = schmidt_spectrum(rho).coefficients ** 2
        s = s[s > 1e-14]
        return float(max(0.0, -np.sum(s * np.log2(s))))
    return von_neumann_entropy(reduced_state(rho, keep="B"))


def fidelity_pure(rho, psi):
    """<psi|rho|psi> for a density matrix and a state vector."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    a = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi)
    return float(np.vdot(a, m @ a).real)


def product_state(local, n):
    """Tensor power of a single-qubit vector."""
    v = np.ones(1)
    local = np.asarray(local, dtype=complex)
    for _ in range(n):
        v = np.kron(v, local)
    return StateVector.from_array(v)


def basis_state(bits):
    n = len(bits)
    v = np.zeros(1 << n, dtype=complex)
    v[int("".join(str(b) for b in bits), 2) if n else 0] = 1
    return StateVector(v, n)


def random_pure_state(n, rng):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector.from_array(v)


def random_density(n, rng, rank=None):
    """Random mixed state rho = G G^dag / tr with complex Gaussian G."""
    d = 1 << n
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return DensityOperator(0.5 * (m + m.conj().T), n)
