# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the transverse-field Ising applicator and the
Lindblad right-hand side.

Bit convention: site ``i`` (0-based) is bit ``n - 1 - i`` of the basis index,
so site 0 is the most significant qubit (Kronecker order).
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef fused scalar:
    double
    double complex


cdef double _zz_energy(const double[:, ::1] J, double[::1] s, int n):
    cdef int i, j
    cdef double acc = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            acc += J[i, j] * s[i] * s[j]
    return acc


def zz_diagonal(const double[:, ::1] couplings, int n):
    """Diagonal of sum_{i<j} J_ij Z_i Z_j over all 2**n basis states.

    Walks the basis in Gray-code order so each step flips one spin and costs
    O(n); the running value is recomputed exactly every 1024 steps.
    """
    cdef Py_ssize_t dim = 1 << n
    cdef Py_ssize_t t, a = 0
    cdef int p, site, j
    cdef double cur, acc
    out = np.empty(dim, dtype=np.float64)
    spins = np.ones(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] s = spins
    cur = _zz_energy(couplings, s, n)
    o[0] = cur
    for t in range(1, dim):
        p = 0
        while not ((t >> p) & 1):
            p += 1
        site = n - 1 - p
        acc = 0.0
        for j in range(n):
            if j != site:
                acc += couplings[site, j] * s[j]
        cur -= 2.0 * s[site] * acc
        s[site] = -s[site]
        a ^= (<Py_ssize_t>1) << p
        if (t & 1023) == 0:
            cur = _zz_energy(couplings, s, n)
        o[a] = cur
    return out


cdef void _tfim_real(const double* diag, double field, int n, Py_ssize_t dim, int width,
                     const double* v, double* out) noexcept nogil:
    # width = 1 for real vectors, 2 for complex vectors seen as (re, im) pairs
    cdef Py_ssize_t a, base, blk, k, step, c, w = width
    cdef int m
    for a in range(dim):
        for c in range(w):
            out[w * a + c] = diag[a] * v[w * a + c]
    if field == 0.0:
        return
    for m in range(n):
        step = w << m
        for blk in range((w * dim) // (2 * step)):
            base = blk * (2 * step)
            for k in range(base, base + step):
                out[k] += field * v[k + step]
                out[k + step] += field * v[k]


def apply_tfim(const double[::1] diag, double field, int n, v, out):
    """out = diag * v + field * sum_i X_i v (real or complex vectors)."""
    cdef int width = 2 if np.iscomplexobj(v) else 1
    if np.iscomplexobj(out) != (width == 2):
        raise TypeError("v and out must have the same dtype kind")
    cdef const double[::1] vv = np.ascontiguousarray(v).view(np.float64)
    cdef double[::1] oo = out.view(np.float64)
    with nogil:
        _tfim_real(&diag[0], field, n, diag.shape[0], width, &vv[0], &oo[0])
    return out


def lindblad_rhs(const double[::1] diag, double field, int n,
                 const double complex[:, ::1] rho, const double[:, ::1] decay,
                 double gamma_jump, int jump_bit, double complex[:, ::1] out):
    """Trace-preserving Lindblad generator for the ramp model.

    ``decay`` holds the elementwise anticommutator and dephasing factors;
    ``jump_bit`` is the bit value (0 or 1) the jump operator lands on.
    Arithmetic runs on the interleaved (re, im) doubles.
    """
    cdef Py_ssize_t dim = diag.shape[0]
    cdef Py_ssize_t row = 2 * dim
    cdef const double* r = <const double*> &rho[0, 0]
    cdef double* o = <double*> &out[0, 0]
    cdef Py_ssize_t a, b, base, blk, blk2, k, step, cstep, src, dst, ia, ib
    cdef int m
    cdef double w, g, x, y
    with nogil:
        for a in range(dim):
            for b in range(dim):
                # (-i w + g) (x + i y) with w = E_a - E_b
                w = diag[a] - diag[b]
                g = decay[a, b]
                ia = a * row + 2 * b
                x = r[ia]
                y = r[ia + 1]
                o[ia] = g * x + w * y
                o[ia + 1] = g * y - w * x
        if field != 0.0:
            for m in range(n):
                step = 1 << m
                # rows: -i B X_m rho  ->  (re, im) += B * (im, -re) of the partner row
                for blk in range((dim) // (2 * step)):
                    base = blk * (2 * step)
                    for k in range(base, base + step):
                        ia = k * row
                        ib = (k + step) * row
                        for b in range(0, row, 2):
                            o[ia + b] += field * r[ib + b + 1]
                            o[ia + b + 1] -= field * r[ib + b]
                            o[ib + b] += field * r[ia + b + 1]
                            o[ib + b + 1] -= field * r[ia + b]
                # columns: +i B rho X_m
                cstep = 2 * step
                for a in range(dim):
                    ia = a * row
                    for blk in range((row) // (2 * cstep)):
                        base = blk * (2 * cstep)
                        for k in range(base, base + cstep, 2):
                            o[ia + k] -= field * r[ia + k + cstep + 1]
                            o[ia + k + 1] += field * r[ia + k + cstep]
                            o[ia + k + cstep] -= field * r[ia + k + 1]
                            o[ia + k + cstep + 1] += field * r[ia + k]
        if gamma_jump != 0.0:
            for m in range(n):
                step = 1 << m
                cstep = 2 * step
                for blk in range((dim) // (2 * step)):
                    base = blk * (2 * step)
                    for k in range(base, base + step):
                        # k has bit m = 0, k + step has bit m = 1
                        if jump_bit:
                            dst = (k + step) * row + cstep
                            src = k * row
                        else:
                            dst = k * row
                            src = (k + step) * row + cstep
                        for blk2 in range(row // (2 * cstep)):
                            b = blk2 * (2 * cstep)
                            for ib in range(b, b + cstep):
                                o[dst + ib] += gamma_jump * r[src + ib]
    return np.asarray(out)
