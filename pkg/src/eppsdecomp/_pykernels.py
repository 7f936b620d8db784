"""Pure-Python reduction kernels (fallback for the compiled ``_ckernels``).

Each function returns the correctly rounded exact sum, so the two backends
agree bit for bit on finite input.
"""

import math

import numpy as np


def exact_sum(x):
    return math.fsum(np.asarray(x, dtype=np.float64).tolist())


def exact_dot(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return math.fsum((a * b).tolist())


def pair_moments(a, b):
    """Return (sum a, sum b, sum a*a, sum b*b, sum a*b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    return (
        math.fsum(a.tolist()),
        math.fsum(b.tolist()),
        math.fsum((a * a).tolist()),
        math.fsum((b * b).tolist()),
        math.fsum((a * b).tolist()),
    )
