"""Kernel backend selection.

The compiled extension is used when it was built and importable; otherwise
the pure-Python kernels are used. Setting ``EPPSDECOMP_PURE_PYTHON=1`` in the
environment forces the fallback.
"""

import os

import numpy as np

from eppsdecomp import _pykernels

if os.environ.get("EPPSDECOMP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from eppsdecomp import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def _contiguous(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def exact_sum(x):
    """Correctly rounded sum of a float64 vector."""
    return _impl.exact_sum(_contiguous(x))


def exact_dot(a, b):
    """Correctly rounded sum of the elementwise products ``a[i] * b[i]``."""
    return _impl.exact_dot(_contiguous(a), _contiguous(b))


def pair_moments(a, b):
    """Correctly rounded (sum a, sum b, sum a^2, sum b^2, sum ab)."""
    return _impl.pair_moments(_contiguous(a), _contiguous(b))
