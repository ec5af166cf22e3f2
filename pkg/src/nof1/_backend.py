"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly; ``NOF1_PURE_PYTHON=1``
forces the numpy fallback. ``kernels`` is the active module and ``NAME`` says
which one it is.
"""

import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _ckernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and not os.environ.get("NOF1_PURE_PYTHON"):
    kernels = compiled_kernels
    NAME = "cython"
else:
    kernels = _pykernels
    NAME = "python"

KERNEL_NAMES = (
    "conv_linear",
    "conv_circular",
    "corr_linear",
    "corr_circular",
    "linear_quadratic_terms",
    "lagged_cross",
    "conv_linear_rows",
    "conv_circular_rows",
    "enumerate_moments",
)
