# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loop-bound kernels (see _kernels_py for the
reference semantics)."""

from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()


def greedy_matching(long[::1] indptr, long[::1] indices, double[::1] scores, long[::1] order):
    cdef Py_ssize_t n = order.shape[0]
    out = np.full(n, -1, dtype=np.int64)
    cdef long[::1] match = out
    cdef Py_ssize_t ui, ptr
    cdef long u, v, best_v
    cdef double s, best_s
    for ui in range(n):
        u = order[ui]
        if match[u] != -1:
            continue
        best_v = -1
        best_s = 0.0
        for ptr in range(indptr[u], indptr[u + 1]):
            v = indices[ptr]
            if v == u or match[v] != -1:
                continue
            s = scores[ptr]
            if best_v == -1 or s > best_s:
                best_v = v
                best_s = s
        if best_v == -1:
            match[u] = u
        else:
            match[u] = best_v
            match[best_v] = u
    return out


cdef double _simplex_threshold(const double* y, Py_ssize_t m, double* active,
                               double* waiting) noexcept nogil:
    # Condat's sort-free projection: maintain an active set whose mean
    # minus 1/|active| is the running threshold estimate, park displaced
    # candidates in a waiting list, then prune until stable.
    cdef Py_ssize_t n_active = 1, n_waiting = 0
    cdef Py_ssize_t i, j
    cdef double rho = y[0] - 1.0
    cdef double yn
    active[0] = y[0]
    for i in range(1, m):
        yn = y[i]
        if yn > rho:
            rho = rho + (yn - rho) / (n_active + 1)
            if rho > yn - 1.0:
                active[n_active] = yn
                n_active += 1
            else:
                for j in range(n_active):
                    waiting[n_waiting + j] = active[j]
                n_waiting += n_active
                active[0] = yn
                n_active = 1
                rho = yn - 1.0
    for i in range(n_waiting):
        yn = waiting[i]
        if yn > rho:
            active[n_active] = yn
            n_active += 1
            rho = rho + (yn - rho) / n_active
    cdef bint changed = True
    while changed:
        changed = False
        i = 0
        while i < n_active:
            yn = active[i]
            if yn <= rho:
                n_active -= 1
                active[i] = active[n_active]
                rho = rho + (rho - yn) / n_active
                changed = True
            else:
                i += 1
    return rho


def project_rows_to_simplex(double[:, ::1] z):
    cdef Py_ssize_t n = z.shape[0], m = z.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef double* active = <double*> malloc(m * sizeof(double))
    cdef double* waiting = <double*> malloc(m * sizeof(double))
    if active == NULL or waiting == NULL:
        free(active)
        free(waiting)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef double tau, val
    try:
        for i in range(n):
            tau = _simplex_threshold(&z[i, 0], m, active, waiting)
            for j in range(m):
                val = z[i, j] - tau
                res[i, j] = val if val > 0.0 else 0.0
    finally:
        free(active)
        free(waiting)
    return out
