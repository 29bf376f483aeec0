"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``ENTBOUND_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ENTBOUND_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

zz_diagonal = _impl.zz_diagonal
apply_tfim = _impl.apply_tfim
lindblad_rhs = _impl.lindblad_rhs


def use_backend(name):
    """Switch backend at runtime ("cython" or "python"). Returns previous name."""
    global BACKEND, _impl, zz_diagonal, apply_tfim, lindblad_rhs
    previous = BACKEND
    if name == "cython":
        from . import _kernels as impl
    elif name == "python":
        impl = _kernels_py
    else:
        raise ValueError(f"unknown backend {name!r}")
    _impl, BACKEND = impl, name
    zz_diagonal = impl.zz_diagonal
    apply_tfim = impl.apply_tfim
    lindblad_rhs = impl.lindblad_rhs
    return previous
