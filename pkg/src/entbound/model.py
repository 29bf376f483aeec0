"""Transverse-field Ising models: coupling matrices and the matrix-free Hamiltonian.

The Hamiltonian is

    H = sum_{i<j} J_ij Z_i Z_j + B sum_i X_i

on ``n_sites`` qubits. Site ``i`` (0-based) is the ``i``-th tensor factor, i.e.
the most significant bit of the basis index belongs to site 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import mpmath
import numpy as np

from . import kernels

# SI constants
HBAR = 1.054571817e-34
ELEMENTARY_CHARGE = 1.602176634e-19
EPSILON_0 = 8.8541878128e-12
AMU = 1.66053906660e-27


class ModelError(ValueError):
    pass


class ResonanceError(ModelError):
    """Laser detuning too close to a motional mode."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _check_couplings(J):
    J = np.array(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ModelError(f"coupling matrix must be square, got shape {J.shape}")
    if not np.array_equal(J, J.T):
        i, j = np.argwhere(J != J.T)[0]
        raise ModelError(f"coupling matrix not symmetric at ({i + 1}, {j + 1})")
    if np.any(np.diag(J) != 0):
        raise ModelError("coupling matrix must have zero diagonal")
    return J


@dataclass(frozen=True, eq=False)
class SpinModel:
    """Ising chain with couplings ``J`` and transverse field ``field_b``."""

    couplings: np.ndarray
    field_b: float
    n_sites: int = field(init=False)

    def __post_init__(self):
        J = _check_couplings(self.couplings)
        n = J.shape[0]
        if n < 2 or n % 2:
            raise ModelError(f"n_sites must be even and >= 2, got {n}")
        J.setflags(write=False)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "field_b", float(self.field_b))
        object.__setattr__(self, "n_sites", n)

    @property
    def dim(self):
        return 1 << self.n_sites

    @cached_property
    def zz_diagonal(self):
        d = kernels.zz_diagonal(np.ascontiguousarray(self.couplings), self.n_sites)
        d.setflags(write=False)
        return d

    def with_field(self, field_b):
        return SpinModel(self.couplings, field_b)

    def apply(self, v, out=None):
        return apply_hamiltonian(self, v, out)

    def dense(self):
        """Dense Hamiltonian matrix, built independently of the kernels (small n only)."""
        return dense_hamiltonian(self.couplings, self.field_b)

    def energy(self, psi):
        psi = np.asarray(psi)
        return float(np.vdot(psi, self.apply(psi)).real)


def apply_hamiltonian(model, v, out=None):
    """Matrix-free ``H @ v``; ``v`` may be real or complex."""
    v = np.ascontiguousarray(v)
    if v.shape != (model.dim,):
        raise ModelError(f"state has shape {v.shape}, expected ({model.dim},)")
    if not np.iscomplexobj(v):
        v = v.astype(np.float64, copy=False)
    if out is None:
        out = np.empty_like(v)
    return kernels.apply_tfim(model.zz_diagonal, model.field_b, model.n_sites, v, out)


_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}


def pauli_string(ops, n):
    """Dense operator for ``{site: 'X'|'Y'|'Z'}`` (0-based sites)."""
    out = np.ones((1, 1))
    for site in range(n):
        out = np.kron(out, _PAULI[ops.get(site, "I")])
    return out


def dense_hamiltonian(J, field_b):
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    H = np.zeros((1 << n, 1 << n))
    for i in range(n):
        for j in range(i + 1, n):
            if J[i, j] != 0:
                H += J[i, j] * pauli_string({i: "Z", j: "Z"}, n)
        if field_b != 0:
            H += field_b * pauli_string({i: "X"}, n)
    return H


# -- coupling constructions ------------------------------------------------


def algebraic_couplings(n, p, amplitude):
    """``J_ij = amplitude / |i-j|**p`` with zero diagonal."""
    if n < 2 or n % 2:
        raise ModelError(f"n must be even and >= 2, got {n}")
    if not np.isfinite(p) or p < 0:
        raise ModelError(f"decay exponent must be finite and >= 0, got {p}")
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    J = np.zeros((n, n))
    off = dist > 0
    J[off] = amplitude / dist[off] ** p
    return J


def j0_normalization(J):
    """Mean nearest-neighbour coupling magnitude, sum_i |J_{i,i+1}| / (N-1)."""
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    if n < 2:
        raise ModelError("need at least two sites")
    return float(np.abs(np.diagonal(J, 1)).sum() / (n - 1))


def normalized(J):
    """Couplings divided by J0; rejects J0 = 0."""
    j0 = j0_normalization(J)
    if j0 == 0:
        raise ModelError("J0 is zero; cannot normalize couplings")
    return np.asarray(J, dtype=float) / j0


@dataclass(frozen=True)
class IonTrapSpec:
    """Linear Paul trap driving transverse modes with a spin-dependent force.

    Frequencies are angular (rad/s), ``wavevector_diff`` in 1/m and
    ``ion_mass`` in kg. ``rabi_frequencies`` may be a scalar (uniform drive).
    """

    n_ions: int
    rabi_frequencies: object
    wavevector_diff: float
    ion_mass: float
    detuning: float
    transverse_trap_freq: float
    axial_trap_freq: float
    resonance_tol: float = 1e-6

    def rabi_vector(self):
        om = np.broadcast_to(np.asarray(self.rabi_frequencies, dtype=float), (self.n_ions,))
        return om.copy()

    def coulomb_length(self):
        return (ELEMENTARY_CHARGE**2 / (4 * np.pi * EPSILON_0 * self.ion_mass * self.axial_trap_freq**2)) ** (1 / 3)


def default_ion_trap(n_ions=16, detuning_offset=2 * np.pi * 117.6e3):
    """171Yb+ chain with the beatnote ``detuning_offset`` above the centre-of-mass mode."""
    wt = 2 * np.pi * 4.8e6
    return IonTrapSpec(
        n_ions=n_ions,
        rabi_frequencies=2 * np.pi * 1.0e6,
        wavevector_diff=np.sqrt(2) * 2 * np.pi / 355e-9,
        ion_mass=171 * AMU,
        detuning=wt + detuning_offset,
        transverse_trap_freq=wt,
        axial_trap_freq=2 * np.pi * 0.5e6,
    )


def equilibrium_positions(n, tol=1e-12, max_iter=200):
    """Axial equilibrium of ``n`` ions in Coulomb-length units.

    Minimizes sum x_i^2/2 + sum_{i<j} 1/|x_i - x_j| by damped Newton iteration
    starting from uniform spacing.
    """
    if n == 1:
        return np.zeros(1)
    x = np.linspace(-1, 1, n) * (n ** (2 / 3))

    def energy(x):
        d = np.abs(x[:, None] - x[None, :])
        iu = np.triu_indices(n, 1)
        return 0.5 * x @ x + np.sum(1 / d[iu])

    for _ in range(max_iter):
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        inv2 = np.sign(diff) / diff**2
        np.fill_diagonal(inv2, 0.0)
        grad = x - inv2.sum(axis=1)
        gnorm = np.linalg.norm(grad)
        if gnorm < tol:
            break
        inv3 = 1 / np.abs(diff) ** 3
        np.fill_diagonal(inv3, 0.0)
        hess = -2 * inv3
        np.fill_diagonal(hess, 1 + 2 * inv3.sum(axis=1))
        step = np.linalg.solve(hess, grad)
        e0, t = energy(x), 1.0
        while t > 1e-8:
            trial = x - t * step
            if np.all(np.diff(trial) > 0) and energy(trial) <= e0:
                break
            t *= 0.5
        x = trial
    else:
        raise ConvergenceError("equilibrium positions did not converge", gnorm)
    return 0.5 * (x - x[::-1])


def transverse_modes(positions, transverse_freq, axial_freq):
    """Transverse mode frequencies (ascending) and orthonormal mode matrix b[i, m]."""
    x = np.asarray(positions, dtype=float)
    n = x.size
    d = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(d, 1.0)
    inv3 = 1 / d**3
    np.fill_diagonal(inv3, 0.0)
    K = axial_freq**2 * inv3
    np.fill_diagonal(K, transverse_freq**2 - axial_freq**2 * inv3.sum(axis=1))
    w2, b = np.linalg.eigh(K)
    if np.any(w2 <= 0):
        raise ModelError("linear chain unstable in the transverse direction")
    return np.sqrt(w2), b


def ion_trap_couplings(spec):
    """Ising couplings (rad/s) from the transverse-mode spin-dependent force."""
    x = equilibrium_positions(spec.n_ions)
    freqs, b = transverse_modes(x, spec.transverse_trap_freq, spec.axial_trap_freq)
    gap = np.min(np.abs(spec.detuning - freqs))
    if gap <= spec.resonance_tol * freqs.max():
        m = int(np.argmin(np.abs(spec.detuning - freqs)))
        raise ResonanceError(f"detuning {spec.detuning:.6g} resonant with mode {m} at {freqs[m]:.6g}")
    om = spec.rabi_vector()
    recoil = HBAR * spec.wavevector_diff**2 / (4 * spec.ion_mass)
    J = np.outer(om, om) * recoil * ((b / (spec.detuning**2 - freqs**2)) @ b.T)
    J = 0.5 * (J + J.T)
    np.fill_diagonal(J, 0.0)
    return J


# -- reflection structure and the cross-block criterion --------------------


@dataclass(frozen=True)
class CrossBlockMatrix:
    entries: np.ndarray
    classification: str
    extremal_eigenvalues: tuple
    norm: float

    @property
    def branch(self):
        """Reference-state branch selected by the definiteness."""
        return {"negative-semidefinite": "ferro", "positive-semidefinite": "antiferro"}.get(self.classification)


def is_reflection_symmetric(J, rtol=1e-12):
    J = np.asarray(J, dtype=float)
    return bool(np.allclose(J, J[::-1, ::-1], rtol=0, atol=rtol * max(np.abs(J).max(), 1e-300)))


def cross_block(J, tol=1e-10):
    """Block of couplings between mirrored halves, ``X[i, j] = J[i, N-1-j]``."""
    J = np.asarray(J, dtype=float)
    n = J.shape[0]
    if n % 2:
        raise ModelError("cross block needs an even number of sites")
    if not is_reflection_symmetric(J):
        bad = np.argwhere(~np.isclose(J, J[::-1, ::-1], rtol=0, atol=1e-12 * np.abs(J).max()))[0]
        i, j = int(bad[0]), int(bad[1])
        raise ModelError(
            f"couplings not reflection symmetric: J[{i + 1},{j + 1}]={J[i, j]:.6g} "
            f"vs J[{n - i},{n - j}]={J[n - 1 - i, n - 1 - j]:.6g}"
        )
    h = n // 2
    X = J[:h, ::-1][:, :h].copy()
    X = 0.5 * (X + X.T)
    ev = np.linalg.eigvalsh(X)
    norm = float(np.max(np.abs(ev))) if ev.size else 0.0
    thr = tol * norm
    lo, hi = float(ev[0]), float(ev[-1])
    if hi <= thr:
        cls = "negative-semidefinite"
    elif lo >= -thr:
        cls = "positive-semidefinite"
    else:
        cls = "indefinite"
    return CrossBlockMatrix(X, cls, (lo, hi), norm)


@dataclass
class AppendixReport:
    n_half: int
    p: float
    d_min_eigenvalue: float
    d_pivots_positive: bool
    cross_max_eigenvalue: float
    cross_norm: float
    cross_negative_semidefinite: bool
    tau: float | None

    @property
    def ok(self):
        return self.d_pivots_positive and self.d_min_eigenvalue > 0 and self.cross_negative_semidefinite


def _zeta(n_half):
    n = 2 * n_half
    return [Fraction(n + 1, 2) - i for i in range(1, n_half + 1)]


def d_matrix(n_half):
    """Exact entries 1/(zeta_i + zeta_j) as Fractions."""
    z = _zeta(n_half)
    return [[1 / (zi + zj) for zj in z] for zi in z]


def _ldl_pivots(rows):
    # exact Gaussian elimination pivots of a symmetric rational matrix
    a = [list(r) for r in rows]
    n = len(a)
    pivots = []
    for k in range(n):
        p = a[k][k]
        pivots.append(p)
        if p == 0:
            break
        for i in range(k + 1, n):
            f = a[i][k] / p
            for j in range(k + 1, n):
                a[i][j] -= f * a[k][j]
    return pivots


@lru_cache(maxsize=None)
def _d_analysis(n_half, dps):
    # independent of the exponent p, so cached per size
    d = d_matrix(n_half)
    pivots = _ldl_pivots(d)
    pivots_ok = all(pv > 0 for pv in pivots)

    with mpmath.workdps(dps):
        dm = mpmath.matrix([[mpmath.mpf(x.numerator) / x.denominator for x in row] for row in d])
        try:
            d_min = float(min(mpmath.eigsy(dm, eigvals_only=True)))
        except Exception as exc:  # pragma: no cover - mpmath internal failure
            raise ArithmeticError(f"eigenvalue computation failed: {exc}") from exc
        logd = dm.apply(mpmath.log)
        ones = mpmath.ones(n_half, n_half)

        def min_eig(tau):
            return min(mpmath.eigsy(logd + tau * ones, eigvals_only=True))

        tau = None
        if min_eig(0) >= 0:
            tau = 0.0
        else:
            hi = mpmath.mpf(1)
            while hi <= 1e6 and min_eig(hi) < 0:
                hi *= 4
            if hi <= 1e6:
                lo = mpmath.mpf(0)
                for _ in range(60):
                    mid = (lo + hi) / 2
                    if min_eig(mid) >= 0:
                        hi = mid
                    else:
                        lo = mid
                tau = float(hi)
    return d_min, pivots_ok, tau


def validate_appendix_positivity(n_half, p, tol=1e-10, dps=60):
    """Check positivity facts behind the cross-block criterion for algebraic couplings.

    Returns the minimum eigenvalue of the Cauchy-type matrix d (extended precision,
    plus exact LDL pivots), the largest eigenvalue of the ferromagnetic cross block
    for exponent ``p``, and the smallest tau >= 0 with log[d] + tau*E PSD found by
    bisection (None if no tau up to 1e6 works).
    """
    if n_half < 1:
        raise ModelError("n_half must be >= 1")
    d_min, pivots_ok, tau = _d_analysis(n_half, dps)
    J = algebraic_couplings(2 * n_half, p, -1.0)
    cb = cross_block(J, tol)
    return AppendixReport(
        n_half=n_half,
        p=float(p),
        d_min_eigenvalue=d_min,
        d_pivots_positive=pivots_ok,
        cross_max_eigenvalue=cb.extremal_eigenvalues[1],
        cross_norm=cb.norm,
        cross_negative_semidefinite=cb.extremal_eigenvalues[1] <= tol * cb.norm,
        tau=tau,
    )


def couplings_from_config(cfg, n_sites):
    """Coupling matrix from the ``coupling`` block of a model config."""
    kind = cfg.get("kind", "algebraic")
    if kind == "algebraic":
        return algebraic_couplings(n_sites, float(cfg.get("p", 1.0)), float(cfg.get("amplitude", -1.0)))
    if kind == "explicit":
        J = np.asarray(cfg["matrix"], dtype=float)
        if J.shape != (n_sites, n_sites):
            raise ModelError(f"explicit coupling matrix has shape {J.shape}, expected ({n_sites}, {n_sites})")
        return _check_couplings(J)
    if kind == "ion_trap":
        base = default_ion_trap(n_sites)
        params = dict(cfg)
        params.pop("kind")
        offset = params.pop("detuning_offset", None)
        sign = float(params.pop("sign", 1.0))
        spec = IonTrapSpec(**{**base.__dict__, **params})
        if offset is not None:
            spec = IonTrapSpec(**{**spec.__dict__, "detuning": spec.transverse_trap_freq + float(offset)})
        return sign * ion_trap_couplings(spec)
    raise ModelError(f"unknown coupling kind {kind!r}")


def model_from_config(cfg):
    """Build a SpinModel from ``{n_sites, coupling: {...}, field_b, normalize}``.

    With ``normalize`` (default true) couplings are divided by J0 so that
    ``field_b`` is in units of J0.
    """
    n = int(cfg["n_sites"])
    J = couplings_from_config(cfg.get("coupling", {}), n)
    if cfg.get("normalize", True):
        J = normalized(J)
    return SpinModel(J, float(cfg.get("field_b", 1.0)))


@dataclass
class GroundState:
    energy: float
    state: object
    gap: float
    parity: int
    residual: float

    @property
    def degenerate(self):
        return self.gap < 1e-8 * max(1.0, abs(self.energy))


def ground_state(model, tol=1e-10, seed=None):
    """Lowest eigenstate via Lanczos in each X-parity sector.

    H commutes with X...X, so each sector is solved separately; this resolves
    exponentially small splittings in the ordered phase. ``gap`` is the distance
    to the next eigenvalue in either sector.
    """
    from .eig import DEFAULT_SEED, smallest_eigpair
    from .states import StateVector

    seed = DEFAULT_SEED if seed is None else seed
    krylov = 60 if model.n_sites <= 16 else 30
    found = {}
    for parity in (1, -1):
        def project(v, s=parity):
            return 0.5 * (v + s * v[::-1])

        found[parity] = smallest_eigpair(model.apply, model.dim, tol, project=project, seed=seed,
                                         krylov_dim=krylov, want_gap=True)
    low, high = sorted(found, key=lambda s: found[s].value)
    best = found[low]
    gap = min(found[high].value - best.value, best.degeneracy_gap)
    return GroundState(best.value, StateVector.from_array(best.vector), float(gap), low, best.residual_norm)
