# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled metric kernels. Must stay bit-identical to ``pure.py``: the same
arithmetic in the same order, with libm pow matching CPython's float power."""

from libc.math cimport pow


def temporal_label_sums(const long long[::1] ts, const long long[::1] out,
                        const long long[::1] final, const unsigned char[::1] is_auto,
                        long long label, bint include_auto, double gamma,
                        long long now_t):
    cdef double num = 0.0
    cdef double den_label = 0.0
    cdef double den_all = 0.0
    cdef double w
    cdef Py_ssize_t i, n = ts.shape[0]
    cdef long long o
    for i in range(n):
        o = out[i]
        if o < 0:
            continue
        if is_auto[i] and not include_auto:
            continue
        w = pow(gamma, <double> (now_t - ts[i]))
        den_all += w
        if o == label:
            den_label += w
            if o == final[i]:
                num += w
    return num, den_label, den_all


def weighted_label_sums(const double[::1] weights, const long long[::1] out,
                        const long long[::1] final, const unsigned char[::1] is_auto,
                        long long label, bint include_auto):
    cdef double num = 0.0
    cdef double den_label = 0.0
    cdef double den_all = 0.0
    cdef double w
    cdef Py_ssize_t i, n = weights.shape[0]
    cdef long long o
    for i in range(n):
        o = out[i]
        if o < 0:
            continue
        if is_auto[i] and not include_auto:
            continue
        w = weights[i]
        den_all += w
        if o == label:
            den_label += w
            if o == final[i]:
                num += w
    return num, den_label, den_all
