# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled reduction kernels.

Every routine returns the correctly rounded value of the exact sum it
describes, using the same partials algorithm as :func:`math.fsum`. Results
are therefore bit-identical to the pure-Python kernels in ``_pykernels``.
"""

from libc.math cimport fabs, isfinite
from libc.stdlib cimport malloc, realloc, free


cdef struct Partials:
    double* p
    Py_ssize_t n
    Py_ssize_t cap
    double special   # naive sum of non-finite terms
    int has_special


cdef int _init(Partials* acc) except -1:
    acc.cap = 32
    acc.n = 0
    acc.special = 0.0
    acc.has_special = 0
    acc.p = <double*> malloc(acc.cap * sizeof(double))
    if acc.p == NULL:
        raise MemoryError()
    return 0


cdef inline int _add(Partials* acc, double x) except -1 nogil:
    cdef Py_ssize_t i = 0, j
    cdef double y, t, hi, lo
    cdef double* grown
    if not isfinite(x):
        acc.special += x
        acc.has_special = 1
        return 0
    for j in range(acc.n):
        y = acc.p[j]
        if fabs(x) < fabs(y):
            t = x
            x = y
            y = t
        hi = x + y
        lo = y - (hi - x)
        if lo != 0.0:
            acc.p[i] = lo
            i += 1
        x = hi
    acc.n = i
    if x != 0.0:
        if acc.n >= acc.cap:
            grown = <double*> realloc(acc.p, 2 * acc.cap * sizeof(double))
            if grown == NULL:
                with gil:
                    raise MemoryError()
            acc.p = grown
            acc.cap *= 2
        acc.p[acc.n] = x
        acc.n += 1
    return 0


cdef double _result(Partials* acc) nogil:
    # final round-half-even correction mirrors CPython's math.fsum
    cdef Py_ssize_t n = acc.n
    cdef double hi = 0.0, lo = 0.0, x, y, yr
    if acc.has_special:
        return acc.special
    if n > 0:
        n -= 1
        hi = acc.p[n]
        while n > 0:
            x = hi
            n -= 1
            y = acc.p[n]
            hi = x + y
            yr = hi - x
            lo = y - yr
            if lo != 0.0:
                break
        if n > 0 and ((lo < 0.0 and acc.p[n - 1] < 0.0) or
                      (lo > 0.0 and acc.p[n - 1] > 0.0)):
            y = lo * 2.0
            x = hi + y
            yr = x - hi
            if y == yr:
                hi = x
    return hi


def exact_sum(const double[::1] x):
    cdef Partials acc
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double out
    _init(&acc)
    try:
        with nogil:
            for i in range(n):
                _add(&acc, x[i])
            out = _result(&acc)
    finally:
        free(acc.p)
    return out


def exact_dot(const double[::1] a, const double[::1] b):
    cdef Partials acc
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double out
    if b.shape[0] != n:
        raise ValueError("length mismatch")
    _init(&acc)
    try:
        with nogil:
            for i in range(n):
                _add(&acc, a[i] * b[i])
            out = _result(&acc)
    finally:
        free(acc.p)
    return out


def pair_moments(const double[::1] a, const double[::1] b):
    """Return (sum a, sum b, sum a*a, sum b*b, sum a*b) in one pass."""
    cdef Partials sa, sb, saa, sbb, sab
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double x, y
    cdef double out[5]
    if b.shape[0] != n:
        raise ValueError("length mismatch")
    _init(&sa)
    _init(&sb)
    _init(&saa)
    _init(&sbb)
    _init(&sab)
    try:
        with nogil:
            for i in range(n):
                x = a[i]
                y = b[i]
                _add(&sa, x)
                _add(&sb, y)
                _add(&saa, x * x)
                _add(&sbb, y * y)
                _add(&sab, x * y)
            out[0] = _result(&sa)
            out[1] = _result(&sb)
            out[2] = _result(&saa)
            out[3] = _result(&sbb)
            out[4] = _result(&sab)
    finally:
        free(sa.p)
        free(sb.p)
        free(saa.p)
        free(sbb.p)
        free(sab.p)
    return out[0], out[1], out[2], out[3], out[4]
