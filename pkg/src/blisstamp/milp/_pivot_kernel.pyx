# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the simplex hot loops in ``_kernel_py``.

Compiled with -ffp-contract=off so the explicit multiply-then-subtract in
``rank1_update`` rounds exactly like the NumPy fallback.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF BASIC = 0
DEF AT_LO = 1
DEF AT_UP = 2


def leaving_row(double[::1] xval, double[::1] lb, double[::1] ub,
                long[::1] basis, double ftol, bint bland):
    cdef Py_ssize_t m = basis.shape[0]
    cdef Py_ssize_t i, r = -1
    cdef long p, best_var = -1
    cdef double v, vlo, vup, best = ftol, delta = 0.0
    for i in range(m):
        p = basis[i]
        v = xval[p]
        vlo = lb[p] - v
        vup = v - ub[p]
        if bland:
            # Bland's rule: smallest variable index among violated basics
            if (vlo > ftol or vup > ftol) and (best_var < 0 or p < best_var):
                best_var = p
                r = i
                delta = vlo if vlo >= vup else -vup
        else:
            if vlo > best:
                best = vlo
                r = i
                delta = vlo
            if vup > best:
                best = vup
                r = i
                delta = -vup
    return r, delta


def ratio_test(double[::1] trow, double[::1] d, signed char[::1] status,
               double sigma, double ptol, bint bland):
    cdef Py_ssize_t n = trow.shape[0]
    cdef Py_ssize_t j, q = -1
    cdef double a, num, ratio, theta = np.inf
    cdef double tau = 1e-9, besta = -1.0
    # Harris pass 1: most permissive step keeping reduced costs within tau
    for j in range(n):
        a = sigma * trow[j]
        if status[j] == AT_LO and a < -ptol:
            if bland:
                return j
            num = d[j] if d[j] > 0.0 else 0.0
            a = -a
        elif status[j] == AT_UP and a > ptol:
            if bland:
                return j
            num = -d[j] if d[j] < 0.0 else 0.0
        else:
            continue
        ratio = (num + tau) / a
        if ratio < theta:
            theta = ratio
            q = j
    if q < 0:
        return -1
    # pass 2: largest |pivot| among candidates not exceeding theta
    q = -1
    for j in range(n):
        a = sigma * trow[j]
        if status[j] == AT_LO and a < -ptol:
            num = d[j] if d[j] > 0.0 else 0.0
            a = -a
        elif status[j] == AT_UP and a > ptol:
            num = -d[j] if d[j] < 0.0 else 0.0
        else:
            continue
        if num <= theta * a and a > besta:
            besta = a
            q = j
    return q


def rank1_update(double[:, ::1] T, double[::1] colq, double[::1] trow_new,
                 Py_ssize_t r, double[:, ::1] buf):
    # buf is unused here; kept for signature parity with the fallback.
    cdef Py_ssize_t m = T.shape[0]
    cdef Py_ssize_t n = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double ci
    for i in range(m):
        if i == r:
            continue
        ci = colq[i]
        if ci == 0.0:
            continue
        for j in range(n):
            T[i, j] = T[i, j] - ci * trow_new[j]
    for j in range(n):
        T[r, j] = trow_new[j]
