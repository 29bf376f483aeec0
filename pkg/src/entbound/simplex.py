"""Small dense linear programs for the cutting-plane master problem.

    maximize    c . w
    subject to  G w <= h          (h >= 0, rows added incrementally)
                -W <= w_i <= W

Free weights are split as w = u - v with 0 <= u, v <= W, so the all-slack basis
is feasible from the start. Rows added later are absorbed with dual simplex
pivots from the previous optimal tableau.
"""
from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
COST_PERTURBATION = 1e-7


class LPError(RuntimeError):
    pass


class DenseLP:
    """Maximize ``c . w`` over ``-lower <= w <= upper`` intersected with added cuts.

    ``bound`` is a scalar or per-variable upper limit; ``lower`` defaults to
    the same values (symmetric box). Both must be non-negative. Initial rows
    ``G w <= h`` (``h >= 0``) may be passed at construction.
    """

    def __init__(self, c, bound, lower=None, G=None, h=None, max_pivots=50000):
        c = np.asarray(c, dtype=float)
        m = c.size
        self.m = m
        upper = np.broadcast_to(np.asarray(bound, dtype=float), (m,))
        lower = upper if lower is None else np.broadcast_to(np.asarray(lower, dtype=float), (m,))
        if np.any(upper < 0) or np.any(lower < 0):
            raise LPError("box must contain w = 0")
        self.max_pivots = max_pivots
        self.n_struct = 2 * m
        G = np.zeros((0, m)) if G is None else np.atleast_2d(np.asarray(G, dtype=float))
        h = np.zeros(0) if h is None else np.asarray(h, dtype=float).reshape(-1)
        if np.any(h < 0):
            raise LPError("cut right-hand sides must be non-negative (w = 0 stays feasible)")
        k = G.shape[0]
        # rows: u_i <= upper_i, v_i <= lower_i, then the cuts
        rows = 2 * m + k
        self._A0 = np.zeros((rows, self.n_struct + rows))
        self._A0[: 2 * m, : self.n_struct] = np.eye(2 * m)
        self._A0[2 * m:, :m] = G
        self._A0[2 * m:, m: self.n_struct] = -G
        self._A0[:, self.n_struct:] = np.eye(rows)
        self._b0 = np.concatenate([upper, lower, h])
        self._true_cost = np.concatenate([c, -c, np.zeros(rows)])
        # small deterministic cost shifts break dual degeneracy; removed before reporting
        self._rng = np.random.default_rng(0)
        self._pert_scale = COST_PERTURBATION * (1.0 + np.abs(c).max(initial=0.0))
        self._cost = self._true_cost + self._pert_scale * self._rng.uniform(0.5, 1.0, self._true_cost.size)
        self._perturbed = self._cost.copy()
        self.basis = list(range(self.n_struct, self.n_struct + rows))
        self.T = np.column_stack([self._A0, self._b0])
        self.z = -self._cost.copy()
        self.obj = 0.0
        self._since_refactor = 0
        self.pivots = 0
        self.n_cuts = k

    # -- tableau bookkeeping -------------------------------------------------

    def _cold_start(self):
        # every right-hand side is >= 0, so the all-slack basis is always feasible
        rows, cols = self._A0.shape
        self.basis = list(range(cols - rows, cols))
        self.T = np.column_stack([self._A0, self._b0])
        self.z = -self._cost.copy()
        self.obj = 0.0
        self._since_refactor = 0

    def _refactor(self):
        B = self._A0[:, self.basis]
        T = np.linalg.solve(B, np.column_stack([self._A0, self._b0]))
        if not np.all(np.isfinite(T)) or np.abs(T[:, self.basis] - np.eye(len(self.basis))).max() > 1e-6:
            raise np.linalg.LinAlgError("ill-conditioned basis")
        self.T = T
        cb = self._cost[self.basis]
        self.z = cb @ T[:, :-1] - self._cost
        self.obj = float(cb @ T[:, -1])
        self._since_refactor = 0

    def _pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        T[nz] -= np.outer(col[nz], T[r])
        zj = self.z[j]
        self.z -= zj * T[r, :-1]
        self.obj -= zj * T[r, -1]
        self.basis[r] = j
        self.pivots += 1
        self._since_refactor += 1
        if self._since_refactor >= 200:
            self._refactor()

    # -- algorithms ----------------------------------------------------------

    def _primal(self):
        bland = False
        degenerate_run = 0
        while True:
            z = self.z
            if bland:
                cand = np.flatnonzero(z < -FEAS_TOL)
                if cand.size == 0:
                    return
                j = int(cand[0])
            else:
                j = int(np.argmin(z))
                if z[j] >= -FEAS_TOL:
                    return
            col = self.T[:, j]
            rhs = self.T[:, -1]
            ok = col > PIVOT_TOL
            if not ok.any():
                raise LPError("LP unbounded")
            ratios = np.full(col.shape, np.inf)
            ratios[ok] = rhs[ok] / col[ok]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            r = int(min(ties, key=lambda i: self.basis[i])) if bland else int(ties[np.argmax(col[ties])])
            degenerate_run = degenerate_run + 1 if best <= FEAS_TOL else 0
            bland = bland or degenerate_run > 50
            self._pivot(r, j)
            if self.pivots > self._limit:
                raise LPError("pivot limit reached")

    def _dual(self):
        bland = False
        degenerate_run = 0
        while True:
            rhs = self.T[:, -1]
            if bland:
                bad = np.flatnonzero(rhs < -FEAS_TOL)
                if bad.size == 0:
                    return
                r = int(min(bad, key=lambda i: self.basis[i]))
            else:
                r = int(np.argmin(rhs))
                if rhs[r] >= -FEAS_TOL:
                    return
            row = self.T[r, :-1]
            ok = row < -max(PIVOT_TOL, 1e-9 * np.abs(row).max())
            if not ok.any():
                raise LPError("LP infeasible")
            zpos = np.maximum(self.z[ok], 0.0)
            ratios = np.full(row.shape, np.inf)
            ratios[ok] = zpos / -row[ok]
            best = ratios.min()
            if bland:
                j = int(np.flatnonzero(ratios <= best + 1e-12)[0])
            else:
                # two-pass Harris test: bound the step with a small dual tolerance,
                # then take the largest pivot below that bound
                cap = np.min((zpos + FEAS_TOL) / -row[ok])
                cand = np.flatnonzero(ok)[ratios[ok] <= cap]
                j = int(cand[np.argmin(row[cand])])
            # dual-degenerate steps leave the objective unchanged and can cycle
            degenerate_run = degenerate_run + 1 if best <= FEAS_TOL else 0
            bland = bland or degenerate_run > 50
            self._pivot(r, j)
            if self.pivots > self._limit:
                raise LPError("pivot limit reached")

    def solve(self):
        """Optimize; returns ``(w, objective)``."""
        self._limit = self.pivots + self.max_pivots
        try:
            self._use_cost(self._perturbed)
            self._solve()
            # polish with the exact costs, then return to the perturbed optimum so the
            # next warm start (new cuts or right-hand sides) begins dual feasible
            saved = self.T.copy(), list(self.basis), self._since_refactor
            self._use_cost(self._true_cost)
            self._solve()
            result = self.solution(), self.obj
            self.T, self.basis, self._since_refactor = saved
            self._use_cost(self._perturbed)
            return result
        except (np.linalg.LinAlgError, LPError):
            self._limit = self.pivots + self.max_pivots
            self._cost = self._true_cost
            self._cold_start()
            self._primal()
            try:
                self._refactor()
            except np.linalg.LinAlgError as exc:
                raise LPError(str(exc)) from exc
            return self.solution(), self.obj

    def _use_cost(self, cost):
        self._cost = cost
        self.z = cost[self.basis] @ self.T[:, :-1] - cost
        self.obj = float(cost[self.basis] @ self.T[:, -1])

    def _solve(self):
        if np.any(self.T[:, -1] < -FEAS_TOL):
            self._dual()
        self._primal()
        if self._since_refactor:
            self._refactor()
            if np.any(self.T[:, -1] < -FEAS_TOL) or np.any(self.z < -FEAS_TOL):
                self._dual()
                self._primal()

    def set_rhs(self, box_upper, box_lower, cut_rhs):
        """Replace every right-hand side (all must be >= 0); the basis is kept."""
        m = self.m
        b = np.concatenate([np.broadcast_to(box_upper, (m,)), np.broadcast_to(box_lower, (m,)),
                            np.asarray(cut_rhs, dtype=float).reshape(-1)])
        if b.size != self._b0.size or np.any(b < 0):
            raise LPError("right-hand sides must match the rows and be non-negative")
        self._b0 = b.astype(float)
        rows, cols = self._A0.shape
        binv = self.T[:, cols - rows: cols]
        self.T[:, -1] = binv @ self._b0
        self.obj = float(self._cost[self.basis] @ self.T[:, -1])

    def solution(self):
        x = np.zeros(self._A0.shape[1])
        x[self.basis] = self.T[:, -1]
        return x[: self.m] - x[self.m: self.n_struct]

    def add_cut(self, g, h):
        """Add the row ``g . w <= h`` (``h`` must be >= 0)."""
        g = np.asarray(g, dtype=float)
        if h < 0:
            raise LPError("cut right-hand side must be non-negative (w = 0 stays feasible)")
        rows, cols = self._A0.shape
        A0 = np.zeros((rows + 1, cols + 1))
        A0[:rows, :cols] = self._A0
        A0[rows, : self.m] = g
        A0[rows, self.m: self.n_struct] = -g
        A0[rows, cols] = 1.0
        self._A0 = A0
        self._b0 = np.append(self._b0, float(h))
        self._true_cost = np.append(self._true_cost, 0.0)
        self._perturbed = np.append(self._perturbed, self._pert_scale * self._rng.uniform(0.5, 1.0))
        self._cost = np.append(self._cost, 0.0)  # solve() reinstates a consistent cost vector

        T = np.zeros((rows + 1, cols + 2))
        T[:rows, :cols] = self.T[:, :-1]
        T[:rows, -1] = self.T[:, -1]
        new = np.zeros(cols + 2)
        new[: self.n_struct] = A0[rows, : self.n_struct]
        new[cols] = 1.0
        new[-1] = h
        for i, bj in enumerate(self.basis):
            if new[bj] != 0.0:
                new -= new[bj] * T[i]
        T[rows] = new
        self.T = T
        self.z = np.append(self.z, 0.0)
        self.basis.append(cols)
        self.n_cuts += 1


def solve_lp(c, G, h, bound):
    """One-shot helper: maximize c.w s.t. G w <= h, |w| <= bound."""
    lp = DenseLP(c, bound)
    for g, hh in zip(np.atleast_2d(G), np.atleast_1d(h)):
        lp.add_cut(g, hh)
    return lp.solve()
