"""Bell-pair reference states, the Bell-overlap circuit and Hamiltonian witnesses.

The reference |Phi> pairs site i with site N-1-i (0-based) in the state
(|00> + |11>)/sqrt(2). Its un-normalized version, with squared norm 2**(N/2),
is the quantitative witness: for any state rho,

    log2 <Phi|rho|Phi>  <=  log-negativity(rho).

The antiferromagnetic branch uses |Phi'> = X_1 ... X_{N/2} |Phi>.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .eig import smallest_eigpair
from .model import SpinModel, cross_block, j0_normalization
from .states import DensityOperator, StateError, StateVector

BRANCHES = ("ferro", "antiferro")


class BranchWarning(UserWarning):
    pass


def _check_branch(branch):
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")


def _bit_reverse(a, width):
    return int(format(a, f"0{width}b")[::-1], 2) if width else 0


@dataclass(frozen=True)
class BellReference:
    n_sites: int
    branch: str = "ferro"

    def __post_init__(self):
        if self.n_sites < 2 or self.n_sites % 2:
            raise StateError(f"n_sites must be even, got {self.n_sites}")
        _check_branch(self.branch)

    @property
    def scale(self):
        """Factor 2**(N/4) between the un-normalized reference and the stored vector."""
        return 2.0 ** (self.n_sites / 4)

    def support(self):
        """Basis indices carrying amplitude 2**(-N/4)."""
        half = self.n_sites // 2
        h = 1 << half
        a = np.arange(h)
        b = np.array([_bit_reverse(x, half) for x in range(h)], dtype=np.int64)
        if self.branch == "antiferro":
            a = a ^ (h - 1)
        return a * h + b

    def vector(self, dtype=float):
        v = np.zeros(1 << self.n_sites, dtype=dtype)
        v[self.support()] = 2.0 ** (-self.n_sites / 4)
        return v

    def state(self):
        return StateVector(self.vector(complex), self.n_sites)

    def overlap_amplitude(self, psi):
        """<phi|psi> with the normalized reference."""
        return np.asarray(psi)[self.support()].sum() * 2.0 ** (-self.n_sites / 4)


@dataclass
class WitnessParams:
    w0: float
    w1: float
    include_parity: bool
    couplings_used: np.ndarray = field(repr=False)
    field_used: float
    branch: str = "ferro"
    eig_residual: float = 0.0


@dataclass
class BoundReport:
    """A certified lower bound (bits) on the log-negativity with its certificate."""

    bound_bits: float
    method: str
    raw_value: float
    certificate: object = None
    provenance: str = "simulation"
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_raw(cls, raw, method, certificate=None, **kw):
        bits = math.log2(raw) if raw > 1.0 else 0.0
        return cls(bits, method, float(raw), certificate, **kw)


# -- circuit -----------------------------------------------------------------

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def _apply_1q(t, gate, axis):
    t = np.moveaxis(t, axis, 0)
    t = np.tensordot(gate, t, axes=(1, 0))
    return np.moveaxis(t, 0, axis)


def _apply_cnot(t, control, target):
    t = t.copy()
    idx = [slice(None)] * t.ndim
    idx[control] = 1
    sub = t[tuple(idx)]
    tgt = target - (target > control)
    t[tuple(idx)] = np.flip(sub, axis=tgt).copy()
    return t


def _gate_sequence(n, inverse, branch):
    half = n // 2
    seq = []
    if inverse:
        if branch == "antiferro":
            seq += [("X", i) for i in range(half)]
        for i in range(half):
            seq += [("CNOT", i, n - 1 - i), ("H", i)]
    else:
        for i in range(half):
            seq += [("H", i), ("CNOT", i, n - 1 - i)]
        if branch == "antiferro":
            seq += [("X", i) for i in range(half)]
    return seq


def _run(t, seq, offset=0):
    for g in seq:
        if g[0] == "H":
            t = _apply_1q(t, _HADAMARD, g[1] + offset)
        elif g[0] == "X":
            t = _apply_1q(t, _X, g[1] + offset)
        else:
            t = _apply_cnot(t, g[1] + offset, g[2] + offset)
    return t


def circuit_R(state, inverse=False, branch="ferro"):
    """Apply R = prod_i CNOT(i -> N-1-i) H_i (Hadamard first), or its inverse.

    ``R|0...0> = |Phi>``; with ``branch='antiferro'`` R is followed by X on the
    first half, so that it prepares |Phi'>.
    """
    _check_branch(branch)
    n = state.n_sites
    if n % 2:
        raise StateError("circuit needs an even number of sites")
    t = np.asarray(state.amplitudes).reshape((2,) * n)
    t = _run(t, _gate_sequence(n, inverse, branch))
    return StateVector(t.reshape(-1), n)


def all_zero_probability(state, branch="ferro"):
    """Probability of reading all zeros after the inverse circuit."""
    _check_branch(branch)
    n = state.n_sites
    seq = _gate_sequence(n, True, branch)
    if isinstance(state, StateVector):
        t = _run(np.asarray(state.amplitudes).reshape((2,) * n), seq)
        return float(abs(t.reshape(-1)[0]) ** 2)
    # U rho U^dag: gates are real, so the same sequence acts on the column axes
    t = np.asarray(state.matrix).reshape((2,) * (2 * n))
    t = _run(t, seq)
    t = _run(t, seq, offset=n)
    return float(t.reshape(1 << n, 1 << n)[0, 0].real)


# -- overlap bound -------------------------------------------------------------


def reference_expectation(state, branch="ferro"):
    """<phi|rho|phi> with the normalized reference vector."""
    ref = BellReference(state.n_sites, branch)
    idx = ref.support()
    if isinstance(state, StateVector):
        return float(abs(ref.overlap_amplitude(state.amplitudes)) ** 2)
    m = np.asarray(state.matrix)
    return float(m[np.ix_(idx, idx)].sum().real * 2.0 ** (-state.n_sites / 2))


def bell_overlap(state, branch=None, model=None, degenerate=None):
    """Lower bound log2 <Phi|rho|Phi> (un-normalized reference).

    With ``model`` the branch defaults to the one selected by the cross-block
    definiteness, and the report records whether the bound is expected to be
    tight (non-degenerate ground state of a qualifying model).
    """
    extra = {}
    cls_branch = None
    if model is not None:
        try:
            cb = cross_block(model.couplings)
            cls_branch = cb.branch
            extra["classification"] = cb.classification
        except ValueError as exc:
            extra["classification"] = f"unavailable: {exc}"
    if branch is None:
        branch = cls_branch or "ferro"
    _check_branch(branch)
    if cls_branch is not None and cls_branch != branch:
        warnings.warn(f"branch {branch} does not match coupling classification {cls_branch}; "
                      "bound remains valid but need not be tight", BranchWarning, stacklevel=2)
    raw = 2.0 ** (state.n_sites / 2) * reference_expectation(state, branch)
    if model is not None and degenerate is not None:
        extra["corollary_equality"] = bool(cls_branch == branch and not degenerate)
    extra["branch"] = branch
    return BoundReport.from_raw(raw, "overlap", certificate={"branch": branch}, extra=extra)


# -- Hamiltonian witness -------------------------------------------------------


def parity_apply(v):
    """X on every site maps basis index a to its complement."""
    return v[::-1].copy()


def witness_operator(model, w1, include_parity=True, branch="ferro"):
    """Matrix-free ``|Phi><Phi| - [X...X] - w1 H`` with the un-normalized reference."""
    ref = BellReference(model.n_sites, branch)
    idx = ref.support()  # the un-normalized reference has unit entries here

    def apply(v):
        out = -w1 * model.apply(v) if w1 != 0 else np.zeros_like(v)
        out[idx] += v[idx].sum()
        if include_parity:
            out -= v[::-1]
        return out

    return apply


def witness_inputs(state, model):
    """Expectations {'H': <H>, 'PARITY_X': <X...X>} of a simulated state."""
    if isinstance(state, StateVector):
        a = state.amplitudes
        return {"H": float(np.vdot(a, model.apply(a)).real), "PARITY_X": float(np.vdot(a, a[::-1]).real)}
    m = np.asarray(state.matrix)
    hm = np.empty_like(m)
    for k in range(m.shape[1]):
        hm[:, k] = model.apply(np.ascontiguousarray(m[:, k]))
    return {"H": float(np.trace(hm).real), "PARITY_X": float(np.trace(m[::-1, :]).real)}


def witness_bound(model_guess, measured, w1, include_parity=True, branch="ferro", tol=1e-10):
    """Bound from W = w0 + [X...X] + w1 H with w0 the lowest eigenvalue of Phi - [X..X] - w1 H.

    W <= |Phi><Phi| holds by construction, so the bound is valid for any state
    whose measured <H> and <X...X> are given. The Ritz value is lowered by its
    residual norm to keep the certificate conservative.
    """
    _check_branch(branch)
    apply = witness_operator(model_guess, w1, include_parity, branch)
    # tolerance relative to a norm bound of the operator
    J = np.asarray(model_guess.couplings)
    h_norm = float(np.abs(np.triu(J, 1)).sum() + model_guess.n_sites * abs(model_guess.field_b))
    scale = max(1.0, abs(w1) * h_norm + 1.0 + 2.0 ** (model_guess.n_sites / 2))
    res = smallest_eigpair(apply, model_guess.dim, tol=tol * scale, want_gap=False)
    w0 = res.value - res.residual_norm
    raw = w0 + w1 * float(measured["H"])
    if include_parity:
        raw += float(measured["PARITY_X"])
    params = WitnessParams(w0, float(w1), include_parity, model_guess.couplings, model_guess.field_b,
                           branch, res.residual_norm)
    return BoundReport.from_raw(raw, "witness", params, provenance=measured.get("provenance", "simulation"))


_INV_PHI = (math.sqrt(5) - 1) / 2


def optimize_w1(model_guess, measured, include_parity=True, interval=None, budget=40,
                branch="ferro", xtol=1e-6):
    """Maximize the witness bound over w1 (golden section, then a local grid).

    The raw witness value is concave in w1, so golden-section search over an
    interval spanning both signs finds the optimum. ``interval`` defaults to
    [-10/J0, 10/J0]. Returns ``(w1, report)``; ``report.extra['budget_exhausted']``
    is set when the bracket did not shrink below ``xtol`` within ``budget``
    evaluations.
    """
    if interval is None:
        j0 = j0_normalization(model_guess.couplings) or 1.0
        interval = (-10.0 / j0, 10.0 / j0)
    lo, hi = map(float, interval)
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"invalid interval {interval}")
    budget = max(int(budget), 3)
    n_grid = min(4, budget // 4)
    probes = {}

    def f(w):
        if w not in probes:
            probes[w] = witness_bound(model_guess, measured, w, include_parity, branch)
        return probes[w].raw_value

    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while evals < budget - n_grid and (b - a) > xtol:
        evals += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    converged = (b - a) <= xtol
    best = max(probes, key=lambda w: probes[w].raw_value)
    width = max(b - a, xtol)
    for k in range(1, n_grid + 1):
        step = width * k / (n_grid + 1)
        for w in (best - step, best + step):
            if lo <= w <= hi and len(probes) < budget:
                f(w)
    best = max(probes, key=lambda w: probes[w].raw_value)
    report = probes[best]
    report.extra.update(budget_exhausted=not converged, evaluations=len(probes),
                        probes=sorted((w, r.raw_value) for w, r in probes.items()))
    return best, report
