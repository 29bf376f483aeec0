"""Lowest eigenpair of a Hermitian operator given only its action on vectors.

Explicitly restarted Lanczos with full reorthogonalization. The second-lowest
eigenvalue (for the degeneracy gap) comes from a second run deflated against
the converged vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_SEED = 20150101


class EigenConvergenceError(RuntimeError):
    def __init__(self, residual, iterations):
        super().__init__(f"Lanczos did not converge after {iterations} matvecs (best residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    residual_norm: float
    degeneracy_gap: float
    matvecs: int
    seed: int
    ritz_history: list = field(default_factory=list, repr=False)

    def is_degenerate(self, rel=1e-8):
        return self.degeneracy_gap < rel * max(1.0, abs(self.value))


def _orthogonalize(w, basis, locked):
    for _ in range(2):
        if basis.shape[0]:
            w -= basis.T @ (basis.conj() @ w)
        for u in locked:
            w -= u * np.vdot(u, w)
    return w


def _lanczos_cycle(apply, v, krylov_dim, locked, project, tol, history):
    dim = v.size
    m = min(krylov_dim, dim - len(locked))
    V = np.zeros((m, dim), dtype=v.dtype)
    alpha, beta = [], []
    V[0] = v
    theta, s = None, None
    for k in range(m):
        w = apply(V[k])
        if project is not None:
            w = project(w)
        a = float(np.vdot(V[k], w).real)
        alpha.append(a)
        w = w - a * V[k]
        if k:
            w -= beta[-1] * V[k - 1]
        w = _orthogonalize(w, V[: k + 1], locked)
        b = float(np.linalg.norm(w))
        if k:
            theta, s = eigh_tridiagonal(np.array(alpha), np.array(beta), select="i", select_range=(0, 0))
        else:
            theta, s = np.array([a]), np.ones((1, 1))
        history.append(float(theta[0]))
        scale = abs(a) + (beta[-1] if beta else 0.0) + 1e-300
        if b * abs(s[-1, 0]) < 0.1 * tol or b < 1e-13 * scale or k == m - 1:
            break
        beta.append(b)
        V[k + 1] = w / b
    x = V[: len(alpha)].T @ s[:, 0]
    x /= np.linalg.norm(x)
    return float(theta[0]), x, len(alpha)


def smallest_eigpair(apply, dim, tol=1e-10, max_iter=5000, *, v0=None, seed=DEFAULT_SEED,
                     dtype=float, project=None, want_gap=True, krylov_dim=60, locked=()):
    """Lowest eigenpair of the Hermitian operator ``apply``.

    Parameters
    ----------
    apply : callable
        Maps a vector of length ``dim`` to the operator applied to it.
    tol : float
        Target for the true residual ``||A x - lambda x||``.
    max_iter : int
        Budget of operator applications (excluding residual checks).
    v0 : array, optional
        Start vector; a seeded Gaussian vector otherwise.
    project : callable, optional
        Projector onto an invariant subspace, applied after every matvec
        (e.g. a symmetry sector).
    want_gap : bool
        Also compute the distance to the next eigenvalue by deflation.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    if v0 is None:
        v = rng.normal(size=dim).astype(dtype)
        if np.dtype(dtype).kind == "c":
            v = v + 1j * rng.normal(size=dim)
    else:
        v = np.array(v0, dtype=dtype)
    if project is not None:
        v = project(v)
    locked = [np.asarray(u, dtype=dtype) for u in locked]
    v = _orthogonalize(v, np.zeros((0, dim), dtype=v.dtype), locked)
    v /= np.linalg.norm(v)

    history = []
    used, best = 0, np.inf
    while True:
        theta, x, steps = _lanczos_cycle(apply, v, krylov_dim, locked, project, tol, history)
        used += steps
        r = apply(x)
        if project is not None:
            r = project(r)
        res = float(np.linalg.norm(r - theta * x))
        best = min(best, res)
        if res < tol:
            break
        if used >= max_iter:
            raise EigenConvergenceError(best, used)
        v = x

    gap = np.nan
    if want_gap:
        if dim - len(locked) < 2:
            gap = np.inf
        else:
            second = smallest_eigpair(apply, dim, tol, max_iter, seed=seed + 1, dtype=dtype,
                                      project=project, want_gap=False, krylov_dim=krylov_dim,
                                      locked=[*locked, x])
            gap = second.value - theta
    return EigResult(theta, x, res, float(gap), used, seed, history)


def largest_eigpair(apply, dim, tol=1e-10, **kw):
    """Largest eigenpair via the negated operator."""
    res = smallest_eigpair(lambda v: -apply(v), dim, tol, **kw)
    res.value = -res.value
    res.ritz_history = [-h for h in res.ritz_history]
    return res


def dense_smallest(matrix):
    """Reference lowest eigenpair and gap from a full diagonalization."""
    w, U = np.linalg.eigh(np.asarray(matrix))
    gap = w[1] - w[0] if w.size > 1 else np.inf
    return EigResult(float(w[0]), U[:, 0], 0.0, float(gap), 0, -1)
