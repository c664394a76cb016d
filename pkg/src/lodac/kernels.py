"""Hot-kernel backend selection.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernels`` is used.  Setting ``LODAC_PURE_PYTHON=1``
forces the fallback.  Both backends give bit-identical results for equal seeds.
"""
import os

from lodac import _pykernels as python_backend

try:
    from lodac import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("LODAC_PURE_PYTHON"):
    backend = compiled_backend
    BACKEND = "cython"
else:
    backend = python_backend
    BACKEND = "python"

__all__ = ["backend", "BACKEND", "compiled_backend", "python_backend"]
