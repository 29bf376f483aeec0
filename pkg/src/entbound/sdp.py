"""Entanglement lower bound from arbitrary measured observables.

Solves

    maximize    sum_i w_i c_i
    subject to  sum_i w_i C_i <= |Phi><Phi|        (un-normalized reference)

by a cutting-plane method: the master LP over accumulated linear cuts proposes
weights, and an extremal-eigenvector oracle either certifies them or returns a
violated cut  sum_i w_i <v|C_i|v> <= |<v|Phi>|^2.  Only feasible weights are
ever reported; infeasible LP iterates are repaired by shifting the identity
weight by the violation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .eig import largest_eigpair
from .observables import ObservableError, ObservableSet, identity
from .simplex import DenseLP, LPError
from .witness import BellReference, BoundReport

CUT_RELAX = 1e-8

DENSE_LIMIT = 1 << 10


@dataclass
class SdpOptions:
    weight_bound: float = 1e3
    feas_tol: float = 1e-7
    gap_tol: float = 1e-6
    max_iter: int = 1000
    branch: str = "ferro"
    cuts_per_iter: int = 8
    trust_radius: float = 1.0
    max_active_cuts: int = 400
    stall_iter: int = 80  # stop after this many iterations without a serious step
    dense: bool | None = None  # dense eigen-oracle; default when dim <= 1024


@dataclass
class SdpCertificate:
    names: list
    weights: np.ndarray
    lambda_max_residual: float
    bound_bits: float
    iterations: int = 0
    upper_bound: float = math.inf
    converged: bool = False
    history: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "weights": {nm: float(w) for nm, w in zip(self.names, self.weights)},
            "lambda_max_residual": float(self.lambda_max_residual),
            "bound_bits": float(self.bound_bits),
        }


class _Constraint:
    """Evaluates M(w) = sum_i w_i C_i - |Phi><Phi| and its top eigenpairs."""

    def __init__(self, obs_set, branch, dense):
        self.obs = list(obs_set)
        self.n = obs_set.n_sites
        self.dim = 1 << self.n
        self.idx = BellReference(self.n, branch).support()
        self.dense = self.dim <= DENSE_LIMIT if dense is None else dense
        if self.dense:
            eye = np.eye(self.dim, dtype=complex)
            self.mats = [np.stack([o.apply(eye[:, k]) for k in range(self.dim)], axis=1) for o in self.obs]
            self.phi = np.zeros((self.dim, self.dim))
            self.phi[np.ix_(self.idx, self.idx)] = 1.0

    def matrix(self, w):
        M = -self.phi.astype(complex)
        for wi, C in zip(w, self.mats):
            if wi != 0:
                M += wi * C
        return 0.5 * (M + M.conj().T)

    def apply(self, w, v):
        out = np.zeros(v.shape, dtype=complex)
        for wi, o in zip(w, self.obs):
            if wi != 0:
                out += wi * o.apply(v)
        out[self.idx] -= v[self.idx].sum()
        return out

    def top(self, w, k=1):
        """Largest eigenvalue and up to ``k`` leading eigenvectors of M(w)."""
        if self.dense:
            ev, U = np.linalg.eigh(self.matrix(w))
            return float(ev[-1]), [U[:, -1 - i] for i in range(min(k, self.dim))], ev[::-1][:k]
        res = largest_eigpair(lambda v: self.apply(w, v), self.dim, tol=1e-10, dtype=complex, want_gap=False)
        # the Ritz value can sit below the true maximum by at most the residual
        lam = res.value + res.residual_norm
        return lam, [res.vector], np.array([lam])

    def cut(self, v):
        g = np.array([o.quadratic_form(v) for o in self.obs])
        h = float(abs(v[self.idx].sum()) ** 2)
        return g, h


def _values(obs_set, data):
    values = {}
    for rec in data:
        if rec.name not in obs_set:
            raise ObservableError(f"record {rec.name!r} matches no observable in the set")
        values[rec.name] = float(rec.value)
    c = []
    for o in obs_set:
        if o.name in values:
            c.append(values[o.name])
        elif o.name == "I":
            c.append(1.0)
        else:
            raise ObservableError(f"no measured value for observable {o.name!r}")
    return np.array(c)


def verify_certificate(obs_set, w, branch="ferro", dense=None):
    """Largest eigenvalue of sum_i w_i C_i - |Phi><Phi|; valid certificate iff <= 1e-7."""
    con = _Constraint(obs_set, branch, dense)
    return con.top(np.asarray(w, dtype=float))[0]


def _cut_relaxation(k, hh):
    # distinct tiny slacks keep cuts that are tight at the box centre from sharing a
    # zero right-hand side (primal degeneracy); relaxing cuts only raises the LP value
    return CUT_RELAX * (1.0 + abs(hh)) * (0.5 + 0.5 * ((k * 0.6180339887498949) % 1.0))


def _pivot_cap(m, k):
    # degenerate master LPs near the optimum can stall for many thousands of pivots
    return 20 * (2 * m + k) + 1000


def sdp_lower_bound(obs_set, data, opts=None):
    """Certified lower bound (bits) on the log-negativity from expectation values.

    The master LP is restricted to a box of radius ``trust_radius`` around the
    best certified weights (box-step stabilization). Moves that improve the
    certified value recentre the box; other iterates only contribute cuts.
    An identity observable (value 1) is appended when the set lacks one, so
    every LP iterate can be repaired into a feasible point.
    """
    opts = opts or SdpOptions()
    if not isinstance(obs_set, ObservableSet):
        obs_set = ObservableSet(obs_set)
    if "I" not in obs_set:
        obs_set = ObservableSet([*obs_set, identity(obs_set.n_sites)])
    c = _values(obs_set, data)
    m = len(c)
    con = _Constraint(obs_set, opts.branch, opts.dense)
    id_pos = obs_set.index("I")
    W = opts.weight_bound

    center = np.zeros(m)  # w = 0 is always feasible
    best_val = 0.0
    best_lam = con.top(center)[0]
    radius = opts.trust_radius
    G, h, relax = [], [], []  # append-only cut pool
    active = []  # pool indices currently held by the LP
    upper = math.inf
    history = []
    converged = False
    lp = None
    nulls = 0
    last_serious = 0
    it = 0

    def rhs():
        hi = np.minimum(radius, W - center).clip(0.0)
        lo = np.minimum(radius, W + center).clip(0.0)
        if active:
            Ga = np.array([G[k] for k in active])
            r = (np.array([h[k] for k in active]) - Ga @ center).clip(0.0) + np.array([relax[k] for k in active])
        else:
            Ga, r = None, np.zeros(0)
        return hi, lo, Ga, r

    for it in range(1, opts.max_iter + 1):
        hi, lo, Ga, r = rhs()
        if lp is None:
            lp = DenseLP(c, hi, lo, Ga, r, max_pivots=_pivot_cap(m, len(active)))
        else:
            lp.set_rhs(hi, lo, r)
            lp.max_pivots = _pivot_cap(m, len(active))
        try:
            d, pred = lp.solve()
        except LPError:
            # a stalled master LP: drop to the newest cuts and shrink the box
            active = active[-max(len(active) // 2, 1):]
            lp = None
            radius = max(0.5 * radius, 1e-9)
            continue
        w = center + d
        inside = bool(np.all((d < hi - 1e-9) & (d > -lo + 1e-9)))
        if inside:
            upper = min(upper, best_val + pred)
        if not inside and (pred < opts.gap_tol or it % 25 == 0):
            # a short step inside the box says nothing about the global model:
            # solve over the full weight box for a valid upper bound
            full = DenseLP(c, (W - center).clip(0.0), (W + center).clip(0.0), Ga, r,
                           max_pivots=_pivot_cap(m, len(active)))
            try:
                _, pred_full = full.solve()
                upper = min(upper, best_val + pred_full)
            except LPError:
                pass
            if pred < opts.gap_tol:
                radius = min(4.0 * radius, 2.0 * W)
        if upper - best_val < opts.gap_tol or upper <= 1.0:
            converged = True
            break
        if it - last_serious > opts.stall_iter:
            break
        lam, vecs, vals = con.top(w, opts.cuts_per_iter)
        history.append((best_val + pred, lam))
        cand = w.copy()
        if lam > 0:
            cand[id_pos] -= lam
        cand_val = float(c @ cand)
        gain = cand_val - best_val
        if gain > 0.1 * pred and np.all(np.abs(cand) <= W):
            center, best_val, best_lam = cand, cand_val, lam - max(lam, 0.0)
            nulls = 0
            last_serious = it
            if not inside:
                radius = min(2.0 * radius, 2.0 * W)
        else:
            nulls += 1
            if nulls >= 3:
                radius = max(0.5 * radius, 1e-9)
                nulls = 0
        for v, val in zip(vecs, vals):
            if val <= opts.feas_tol:
                break
            g, hh = con.cut(v)
            G.append(g)
            h.append(hh)
            relax.append(_cut_relaxation(len(G) - 1, hh))
            active.append(len(G) - 1)
            lp.add_cut(g, max(hh - float(g @ center), 0.0) + relax[-1])
        if len(active) > opts.max_active_cuts:
            # keep the cuts that are tight at the current LP point, then the newest
            Ga = np.array([G[k] for k in active])
            slack = np.array([h[k] for k in active]) - Ga @ w
            tight = [k for k, s_ in zip(active, slack) if s_ < 1e-7 * (1 + abs(h[k]))]
            keep = set(tight) | set(active[-opts.max_active_cuts // 2:])
            active = [k for k in active if k in keep]
            lp = None

    if con.dense or best_lam is None:
        best_lam = con.top(center)[0]
    raw = best_val
    bits = math.log2(raw) if raw > 1.0 else 0.0
    cert = SdpCertificate(obs_set.names, center, best_lam, bits, it, upper, converged, history)
    report = BoundReport(bits, "sdp", float(raw), cert)
    report.extra.update(converged=converged, iterations=it, upper_bound=upper)
    return report
