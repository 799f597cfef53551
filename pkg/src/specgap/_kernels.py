"""Select the Jacobi kernel at import time.

The compiled extension is used when it was built; otherwise, or when
``SPECGAP_PURE_PYTHON=1`` is set, the numpy fallback is used.
"""

import os

from specgap import _jacobi_py

BACKEND = "python"
_python_batch = _jacobi_py.jacobi_batch
jacobi_batch = _python_batch
_compiled_batch = None

if os.environ.get("SPECGAP_PURE_PYTHON") != "1":
    try:
        from specgap._jacobi import jacobi_batch as _compiled_batch
    except ImportError:  # extension not built
        _compiled_batch = None
    else:
        jacobi_batch = _compiled_batch
        BACKEND = "cython"


def available_backends():
    names = ["python"]
    if _compiled_batch is not None:
        names.append("cython")
    return names


def get_kernel(name=None):
    """Return the batch kernel named ``name`` (default: the selected one)."""
    if name is None:
        return jacobi_batch
    if name == "python":
        return _python_batch
    if name == "cython":
        if _compiled_batch is None:
            raise ImportError("compiled Jacobi kernel is not built")
        return _compiled_batch
    raise ValueError(f"unknown kernel backend {name!r}")
