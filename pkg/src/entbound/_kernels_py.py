"""Pure numpy versions of the compiled kernels (same signatures)."""
import numpy as np


def _spins(n):
    # (n, 2**n) array of +-1, row i is Z_i on every basis state
    idx = np.arange(1 << n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    return 1.0 - 2.0 * bits


def zz_diagonal(couplings, n):
    s = _spins(n)
    upper = np.triu(np.asarray(couplings, dtype=float), 1)
    out = np.zeros(1 << n)
    for i in range(n):
        out += s[i] * (upper[i] @ s)
    return out


def apply_tfim(diag, field, n, v, out):
    out[:] = diag * v
    if field != 0.0:
        t = v.reshape((2,) * n)
        acc = np.zeros_like(t)
        for axis in range(n):
            acc += np.flip(t, axis=axis)
        out += field * acc.reshape(-1)
    return out


def lindblad_rhs(diag, field, n, rho, decay, gamma_jump, jump_bit, out):
    comm = (diag[:, None] - diag[None, :]) * rho
    if field != 0.0:
        t = rho.reshape((2,) * (2 * n))
        flips = np.zeros_like(t)
        for axis in range(n):
            flips += np.flip(t, axis=axis)
            flips -= np.flip(t, axis=n + axis)
        comm += field * flips.reshape(rho.shape)
    out[:] = -1j * comm + decay * rho
    if gamma_jump != 0.0:
        t = rho.reshape((2,) * (2 * n))
        jumps = np.zeros_like(t)
        src, dst = 1 - jump_bit, jump_bit
        for m in range(n):
            sel_dst = [slice(None)] * (2 * n)
            sel_src = [slice(None)] * (2 * n)
            sel_dst[m] = sel_dst[n + m] = dst
            sel_src[m] = sel_src[n + m] = src
            jumps[tuple(sel_dst)] += t[tuple(sel_src)]
        out += gamma_jump * jumps.reshape(rho.shape)
    return out
