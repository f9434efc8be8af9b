"""Backend selection for the hot loops.

The compiled extension ``nlks._kernels`` is used when it imports; otherwise the
NumPy fallback is used.  Setting ``NLKS_PURE_PYTHON=1`` forces the fallback.
"""
import importlib
import os

__all__ = [
    "BACKEND",
    "available_backends",
    "load_backend",
    "etd_stage",
    "etd_stage_c",
    "etd_final",
    "compensated_sum",
    "count_row_critical",
]

_MODULES = {"cython": "nlks._kernels", "python": "nlks._fallback"}


def load_backend(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}") from None


def available_backends():
    names = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("NLKS_PURE_PYTHON", "").strip() not in ("", "0"):
        return "python", load_backend("python")
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", load_backend("python")


BACKEND, _impl = _select()

etd_stage = _impl.etd_stage
etd_stage_c = _impl.etd_stage_c
etd_final = _impl.etd_final
compensated_sum = _impl.compensated_sum
count_row_critical = _impl.count_row_critical
