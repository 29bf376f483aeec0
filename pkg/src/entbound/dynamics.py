"""Quasi-adiabatic field ramps under a Lindblad master equation.

    d rho / dt = -i [H(t), rho] + sum_{i, k} ( L rho L^dag - 1/2 {L^dag L, rho} )

with H(t) = sum_{i<j} J_ij Z_i Z_j + B(t) sum_i X_i and per-site jump operators
sqrt(gamma_se) sigma_(-/+) and sqrt(gamma_dph) Z. Time is measured in units of
1/J0 when the couplings are normalized (J0 = 1).

The field follows B(t) = b_final * 2**(r (t0 - t) / t0) * J0 and the state is
propagated with fixed-step RK4 on the dense density matrix.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import SpinModel, cross_block, j0_normalization
from .mpo import mpo_error_curve
from .observables import ObservableSet, measure_expectations
from .sdp import SdpOptions, sdp_lower_bound
from .states import DensityOperator, block_entropy, log_negativity
from .witness import bell_overlap, optimize_w1, witness_inputs

# Fig. 3 scales: J0 = 2 pi * 3.3 kHz, ramp time 0.6 ms
FIG3_J0_HZ = 3.3e3
FIG3_T0_SECONDS = 0.6e-3
FIG3_T0 = 2 * math.pi * FIG3_J0_HZ * FIG3_T0_SECONDS
DEFAULT_RATE = 4.5
DEFAULT_B_FINAL = 1.1
MAX_SITES = 10
TRACE_ABORT = 1e-6
RK4_STABILITY = 2.6  # just inside the imaginary-axis limit 2*sqrt(2)


class DynamicsError(RuntimeError):
    pass


@dataclass(frozen=True)
class RampSchedule:
    """B(t) = b_final * 2**(rate (t0 - t) / t0), in units of J0."""

    b_final: float = DEFAULT_B_FINAL
    rate: float = DEFAULT_RATE
    t0: float = FIG3_T0
    samples: tuple = ()

    def __post_init__(self):
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        object.__setattr__(self, "samples", tuple(float(t) for t in self.samples))
        if any(t < 0 or t > self.t0 * (1 + 1e-12) for t in self.samples):
            raise ValueError("sample times must lie in [0, t0]")

    def field(self, t):
        return self.b_final * 2.0 ** (self.rate * (self.t0 - t) / self.t0)

    @classmethod
    def uniform(cls, n_samples, b_final=DEFAULT_B_FINAL, rate=DEFAULT_RATE, t0=FIG3_T0):
        return cls(b_final, rate, t0, tuple(np.linspace(0.0, t0, int(n_samples))))


@dataclass(frozen=True)
class NoiseRates:
    gamma_se: float = 0.0
    gamma_dph: float = 0.0
    jump: str = "minus"  # sigma_- = |1><0| (toward Z = -1); "plus" for sigma_+

    def __post_init__(self):
        if self.gamma_se < 0 or self.gamma_dph < 0:
            raise ValueError("noise rates must be non-negative")
        if self.jump not in ("minus", "plus"):
            raise ValueError("jump must be 'minus' or 'plus'")


@dataclass
class TrajectoryPoint:
    time: float
    field: float
    state: DensityOperator
    trace_drift: float
    diagnostics: dict = field(default_factory=dict)


class LindbladGenerator:
    """Right-hand side of the master equation for a model with variable field."""

    def __init__(self, model, rates):
        n = model.n_sites
        if n > MAX_SITES:
            raise DynamicsError(f"dense Lindblad dynamics limited to N <= {MAX_SITES}")
        self.n = n
        self.diag = np.ascontiguousarray(model.zz_diagonal)
        self.rates = rates
        self.jump_bit = 1 if rates.jump == "minus" else 0
        idx = np.arange(1 << n)
        bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
        # L^dag L = |source><source| on each site
        u = np.sum(bits == 1 - self.jump_bit, axis=0).astype(float)
        s = 1.0 - 2.0 * bits
        overlap = s.T @ s  # sum_i s_i(a) s_i(b)
        self.decay = np.ascontiguousarray(
            -0.5 * rates.gamma_se * (u[:, None] + u[None, :]) + rates.gamma_dph * (overlap - n))
        self._out = np.empty((1 << n, 1 << n), dtype=complex)

    def __call__(self, rho, field_b):
        out = np.empty_like(self._out)
        return kernels.lindblad_rhs(self.diag, float(field_b), self.n, np.ascontiguousarray(rho),
                                    self.decay, float(self.rates.gamma_se), self.jump_bit, out)


def lindblad_rhs(rho, t, model, schedule, rates):
    """d rho/dt at time t; the field comes from the schedule (scaled by J0)."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    if m.shape != (model.dim, model.dim):
        raise DynamicsError(f"state shape {m.shape} does not match the model dimension {model.dim}")
    j0 = j0_normalization(model.couplings)
    return LindbladGenerator(model, rates)(m, schedule.field(t) * j0)


def field_aligned_state(n, field_b):
    """Lowest-energy product state of B sum_i X_i: |-> per site for B > 0."""
    sign = -1.0 if field_b >= 0 else 1.0
    local = np.array([1.0, sign]) / math.sqrt(2)
    v = np.ones(1)
    for _ in range(n):
        v = np.kron(v, local)
    return np.outer(v, v).astype(complex)


def _stable_dt(model, field_b, rates):
    J = np.asarray(model.couplings)
    spread = 2.0 * (np.abs(np.triu(J, 1)).sum() + model.n_sites * abs(field_b))
    damp = model.n_sites * (rates.gamma_se + 2.0 * rates.gamma_dph)
    return RK4_STABILITY / max(math.hypot(spread, damp), 1e-300)


def rk4_step(gen, rho, t, dt, field_of_t):
    k1 = gen(rho, field_of_t(t))
    k2 = gen(rho + 0.5 * dt * k1, field_of_t(t + 0.5 * dt))
    k3 = gen(rho + 0.5 * dt * k2, field_of_t(t + 0.5 * dt))
    k4 = gen(rho + dt * k3, field_of_t(t + dt))
    new = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return 0.5 * (new + new.conj().T)


@dataclass
class DiagnosticOptions:
    """Which per-sample diagnostics to compute."""

    bond_dims: tuple = (1, 2, 3, 4)
    witness: bool = True
    witness_budget: int = 40
    witness_interval: tuple | None = None
    sdp: bool = True
    sdp_observables: tuple = ("I", "H", "PARITY_X")
    sdp_options: SdpOptions = field(default_factory=lambda: SdpOptions(max_iter=300))
    branch: str | None = None


def diagnose(rho, model, opts=None):
    """Entanglement diagnostics of one density matrix; ``model`` carries H(t)."""
    opts = opts or DiagnosticOptions()
    state = rho if isinstance(rho, DensityOperator) else DensityOperator.from_matrix(rho, check=False)
    branch = opts.branch
    if branch is None:
        try:
            branch = cross_block(model.couplings).branch or "ferro"
        except ValueError:
            branch = "ferro"
    out = {
        "log_negativity": log_negativity(state),
        "block_entropy": block_entropy(state),
        "overlap_bound": bell_overlap(state, branch=branch).bound_bits,
    }
    if opts.witness:
        _, rep = optimize_w1(model, witness_inputs(state, model), True, interval=opts.witness_interval,
                             budget=opts.witness_budget, branch=branch)
        out["witness_bound"] = rep.bound_bits
    if opts.sdp:
        obs = ObservableSet.from_names(list(opts.sdp_observables), model.n_sites, model)
        sopts = SdpOptions(**{**opts.sdp_options.__dict__, "branch": branch})
        out["sdp_bound"] = sdp_lower_bound(obs, measure_expectations(state, obs), sopts).bound_bits
    if opts.bond_dims:
        for b in mpo_error_curve(state, opts.bond_dims):
            out[f"eps_lower_{b.bond_dimension}"] = b.lower
            out[f"eps_upper_{b.bond_dimension}"] = b.upper
    return out


def integrate_ramp(model, schedule, rates, dt=None, *, diagnostics=None, start=None, threads=1,
                   on_sample=None, max_samples=None):
    """Propagate the ramp and return one TrajectoryPoint per sample time.

    Parameters
    ----------
    model : SpinModel
        Couplings of the ramp; its own field value is ignored.
    schedule : RampSchedule
        Field law and sample times (snapped to the step grid).
    rates : NoiseRates
    dt : float, optional
        Step size; default ``t0 / 4000``.
    diagnostics : DiagnosticOptions or None
        None computes the default diagnostics; ``False`` skips them.
    start : (int, ndarray), optional
        Resume from step index and density matrix (e.g. a snapshot).
    threads : int
        Worker threads for the per-sample diagnostics.
    on_sample : callable, optional
        Called as ``on_sample(step, rho)`` after each sample is reached.
    max_samples : int, optional
        Stop after this many samples (the run can be resumed from a snapshot).
    """
    if not isinstance(model, SpinModel):
        raise TypeError("model must be a SpinModel")
    dt = schedule.t0 / 4000 if dt is None else float(dt)
    if dt <= 0:
        raise DynamicsError("dt must be positive")
    n_steps = max(1, int(round(schedule.t0 / dt)))
    dt = schedule.t0 / n_steps
    j0 = j0_normalization(model.couplings)

    def field_of_t(t):
        return schedule.field(t) * j0

    limit = _stable_dt(model, field_of_t(0.0), rates)
    if dt > limit:
        raise DynamicsError(f"dt = {dt:.4g} exceeds the RK4 stability limit {limit:.4g} for B(0) = "
                            f"{field_of_t(0.0):.4g}; use at least {math.ceil(schedule.t0 / limit)} steps "
                            "or a smaller ramp rate")
    gen = LindbladGenerator(model, rates)
    sample_steps = sorted({int(round(t / dt)) for t in schedule.samples})
    if start is None:
        step, rho = 0, field_aligned_state(model.n_sites, field_of_t(0.0))
    else:
        step, rho = int(start[0]), np.array(start[1], dtype=complex)
    pending = [k for k in sample_steps if k >= step]
    if max_samples is not None:
        pending = pending[: int(max_samples)]
    snapshots = []

    def record(k, r):
        snapshots.append((k, r.copy()))
        if on_sample is not None:
            on_sample(k, r)

    if pending and pending[0] == step:
        record(step, rho)
        pending.pop(0)
    while pending:
        rho = rk4_step(gen, rho, step * dt, dt, field_of_t)
        step += 1
        drift = abs(np.trace(rho).real - 1.0)
        if drift > TRACE_ABORT:
            raise DynamicsError(f"trace drift {drift:.3e} at t = {step * dt:.6g}; reduce dt (currently {dt:.4g})")
        if step == pending[0]:
            record(step, rho)
            pending.pop(0)

    def point(item):
        k, r = item
        t = k * dt
        pt = TrajectoryPoint(t, field_of_t(t), DensityOperator.from_matrix(r, check=False),
                             abs(np.trace(r).real - 1.0))
        if diagnostics is not False:
            pt.diagnostics = diagnose(r, model.with_field(field_of_t(t)), diagnostics or None)
        return pt

    if threads > 1 and len(snapshots) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(point, snapshots))
    return [point(s) for s in snapshots]
