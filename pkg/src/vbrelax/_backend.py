"""Select the compiled kernels when available, else the pure-Python ones.

Set ``VBRELAX_PURE_PYTHON=1`` before import to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("VBRELAX_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

rk4_populations = _impl.rk4_populations
exp_chi2 = _impl.exp_chi2
exp_normal_equations = _impl.exp_normal_equations
