# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled word kernels; semantics identical to bsw._kernels.pure."""

from libc.stdlib cimport malloc, free


def reduce_ints(seq):
    cdef Py_ssize_t n = len(seq)
    if n == 0:
        return []
    cdef long long *buf = <long long *> malloc(n * sizeof(long long))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t top = 0
    cdef long long x
    try:
        for v in seq:
            x = v
            if top > 0 and buf[top - 1] == -x:
                top -= 1
            else:
                buf[top] = x
                top += 1
        return [buf[i] for i in range(top)]
    finally:
        free(buf)


def concat_reduced(a, b):
    cdef Py_ssize_t i = len(a)
    cdef Py_ssize_t j = 0
    cdef Py_ssize_t nb = len(b)
    while i > 0 and j < nb:
        if <long long> a[i - 1] == -(<long long> b[j]):
            i -= 1
            j += 1
        else:
            break
    return list(a[:i]) + list(b[j:nb])


def common_prefix_len(a, b, limit):
    cdef Py_ssize_t n = len(a)
    cdef Py_ssize_t m = len(b)
    cdef Py_ssize_t lim = limit
    if m < n:
        n = m
    if lim < n:
        n = lim
    cdef Py_ssize_t k = 0
    while k < n and <long long> a[k] == <long long> b[k]:
        k += 1
    return k
