"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-repeat wall time per call for each kernel and backend, and
checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from entbound import _kernels_py
from entbound.model import algebraic_couplings

try:
    from entbound import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rng):
    for n in (12, 16, 18):
        J = np.ascontiguousarray(algebraic_couplings(n, 1.0, -1.0))
        diag = _kernels_py.zz_diagonal(J, n)
        v = rng.normal(size=1 << n)
        yield (f"zz_diagonal N={n}", lambda k, J=J, n=n: k.zz_diagonal(J, n))
        yield (f"apply_tfim N={n}", lambda k, d=diag, n=n, v=v: k.apply_tfim(d, 0.7, n, v, np.empty_like(v)))
    for n in (6, 8):
        J = np.ascontiguousarray(algebraic_couplings(n, 1.0, -1.0))
        diag = _kernels_py.zz_diagonal(J, n)
        d = 1 << n
        rho = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = np.ascontiguousarray(rho + rho.conj().T)
        decay = np.ascontiguousarray(-0.01 * rng.random((d, d)))
        yield (f"lindblad_rhs N={n}",
               lambda k, diag=diag, n=n, rho=rho, decay=decay: k.lindblad_rhs(
                   diag, 0.7, n, rho, decay, 0.02, 1, np.empty_like(rho)))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)] + ([("cython", _kernels)] if _kernels is not None else [])
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}")
    for label, fn in cases(rng):
        times, outs = [], []
        for _, k in backends:
            outs.append(np.asarray(fn(k)).copy())
            number = 3
            times.append(min(timeit.repeat(lambda k=k: fn(k), number=number, repeat=args.repeat)) / number)
        if len(outs) == 2:
            scale = max(1.0, float(np.abs(outs[0]).max()))
            assert np.abs(outs[0] - outs[1]).max() <= 1e-10 * scale, f"{label}: backends disagree"
        speed = f"{times[0] / times[1]:9.1f}x" if len(times) == 2 else ""
        print(f"{label:<22}" + "".join(f"{t * 1e3:12.3f}ms" for t in times) + f"{speed:>10}")


if __name__ == "__main__":
    main()
