"""Backend selection for the two loop-bound kernels.

At import time the compiled Cython extension is preferred; the pure
numpy implementations are used when the extension is missing or when
the environment variable GRAPHPOOL_NO_SPEEDUPS is set. Both backends
implement the same contracts and are cross-checked in the test suite;
``benchmarks/bench_kernels.py`` compares their throughput.
"""

import os

from . import _kernels_py

if os.environ.get("GRAPHPOOL_NO_SPEEDUPS"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

greedy_matching = _impl.greedy_matching
project_rows_to_simplex = _impl.project_rows_to_simplex


def available_backends() -> dict:
    """Map backend name -> module, for tests and benchmarks."""
    out = {"python": _kernels_py}
    try:
        from . import _speedups

        out["compiled"] = _speedups
    except ImportError:
        pass
    return out
