"""Frobenius-norm error of bond-dimension-D matrix-product-operator approximations.

A density operator on N qubits is read as a vector on a chain of N sites with
local dimension 4 (row and column index of each site interleaved), so that
||rho - rho_D||_F is the 2-norm of the difference of these vectors.

lower: best rank-D approximation across the worst single cut (Eckart-Young).
       Any bond-D MPO has rank <= D across every cut, so this is a valid
       lower bound on eps_D.
upper: error of a constructive bond-D approximant (left-to-right sequential
       SVD truncation); the smallest such error over D' <= D is reported so
       the bound is non-increasing in D.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import DensityOperator, StateError

MAX_SITES = 10
RANK_TOL = 1e-12


@dataclass(frozen=True)
class MpoErrorBounds:
    bond_dimension: int
    lower: float
    upper: float


def operator_chain_vector(rho):
    """Interleave row/column indices per site: shape (4,) * N flattened."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    n = int(m.shape[0]).bit_length() - 1
    if m.shape != (1 << n, 1 << n):
        raise StateError(f"not a 2^N x 2^N operator: {m.shape}")
    t = m.reshape((2,) * (2 * n))
    order = [k for i in range(n) for k in (i, n + i)]
    return np.ascontiguousarray(t.transpose(order)).reshape(-1), n


def cut_singular_values(rho, cut):
    """Operator-Schmidt values across the cut after ``cut`` sites."""
    vec, n = operator_chain_vector(rho)
    if not 1 <= cut < n:
        raise ValueError(f"cut must lie in 1..{n - 1}")
    return np.linalg.svd(vec.reshape(4 ** cut, -1), compute_uv=False)


def _tail(s, D):
    return float(np.sqrt(np.sum(s[D:] ** 2))) if D < s.size else 0.0


def _sequential_error(vec, n, D):
    """Frobenius error of left-to-right truncated SVD to bond D.

    With left-orthonormal cores the squared error is the sum of the squared
    discarded singular values of every step.
    """
    err2 = 0.0
    rest = vec.reshape(1, -1)
    bond = 1
    for _ in range(n - 1):
        mat = rest.reshape(bond * 4, -1)
        U, s, Vh = np.linalg.svd(mat, full_matrices=False)
        keep = min(D, s.size)
        err2 += float(np.sum(s[keep:] ** 2))
        rest = s[:keep, None] * Vh[:keep]
        bond = keep
    return float(np.sqrt(err2))


def _cut_spectra(vec, n):
    out = []
    for cut in range(1, n):
        s = np.linalg.svd(vec.reshape(4 ** cut, -1), compute_uv=False)
        out.append(s)
    return out


def mpo_error_curve(rho, dims):
    """``MpoErrorBounds`` for every bond dimension in ``dims``."""
    dims = [int(D) for D in dims]
    if any(D < 1 for D in dims):
        raise ValueError("bond dimension must be >= 1")
    vec, n = operator_chain_vector(rho)
    if n > MAX_SITES:
        raise StateError(f"MPO bounds limited to N <= {MAX_SITES}")
    if n < 2:
        return [MpoErrorBounds(D, 0.0, 0.0) for D in dims]
    spectra = _cut_spectra(vec, n)
    rank = max(int(np.sum(s > RANK_TOL * max(s[0], 1e-300))) for s in spectra)
    seq = {}
    out = []
    for D in dims:
        if D >= rank:
            out.append(MpoErrorBounds(D, 0.0, 0.0))
            continue
        lower = max(_tail(s, D) for s in spectra)
        for d in range(1, D + 1):
            if d not in seq:
                seq[d] = _sequential_error(vec, n, d)
        upper = max(min(seq[d] for d in range(1, D + 1)), lower)
        out.append(MpoErrorBounds(D, lower, upper))
    return out


def mpo_error_bounds(rho, D):
    """Lower and upper bounds on min ||rho - rho_D||_F over bond-D MPOs."""
    return mpo_error_curve(rho, [D])[0]
