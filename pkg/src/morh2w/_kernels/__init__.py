"""Hot back-substitution kernels with compiled/pure-Python twin selection.

The compiled Cython kernel is preferred when built; otherwise the numpy
reference implementation is used.  ``MORH2W_KERNEL=python`` forces the
fallback (useful for benchmarking, see ``benchmarks/bench_kernels.py``).
"""

import os

from ._qtri_py import diag_blocks
from ._qtri_py import solve_qtri_sylvester as solve_qtri_sylvester_py

if os.environ.get("MORH2W_KERNEL", "").lower() == "python":
    solve_qtri_sylvester = solve_qtri_sylvester_py
    KERNEL_BACKEND = "python"
else:
    try:
        from ._qtri_cy import solve_qtri_sylvester as _cy_kernel

        solve_qtri_sylvester = _cy_kernel
        KERNEL_BACKEND = "compiled"
    except ImportError:
        solve_qtri_sylvester = solve_qtri_sylvester_py
        KERNEL_BACKEND = "python"

__all__ = [
    "KERNEL_BACKEND",
    "diag_blocks",
    "solve_qtri_sylvester",
    "solve_qtri_sylvester_py",
]
