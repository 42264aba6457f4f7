# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled back-substitution kernel for quasi-triangular Sylvester
equations.  Same contract as ``_qtri_py.solve_qtri_sylvester``."""

import numpy as np

from libc.math cimport fabs


cdef int _gauss(double* M, double* b, int k) except -1:
    """Solve a k x k dense system in place (partial pivoting), k <= 4."""
    cdef int i, j, p, piv
    cdef double amax, tmp, f
    for i in range(k):
        piv = i
        amax = fabs(M[i * k + i])
        for p in range(i + 1, k):
            if fabs(M[p * k + i]) > amax:
                amax = fabs(M[p * k + i])
                piv = p
        if amax == 0.0:
            raise ZeroDivisionError("singular Sylvester block")
        if piv != i:
            for j in range(k):
                tmp = M[i * k + j]
                M[i * k + j] = M[piv * k + j]
                M[piv * k + j] = tmp
            tmp = b[i]
            b[i] = b[piv]
            b[piv] = tmp
        for p in range(i + 1, k):
            f = M[p * k + i] / M[i * k + i]
            for j in range(i, k):
                M[p * k + j] -= f * M[i * k + j]
            b[p] -= f * b[i]
    for i in range(k - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, k):
            tmp -= M[i * k + j] * b[j]
        b[i] = tmp / M[i * k + i]
    return 0


def solve_qtri_sylvester(double[:, :] TA, double[:, :] TB, double[:, :] F,
                         bint tb_lower=False):
    cdef int na = TA.shape[0]
    cdef int nb = TB.shape[0]
    Y_arr = np.zeros((na, nb))
    cdef double[:, ::1] Y = Y_arr
    if na == 0 or nb == 0:
        return Y_arr

    # diagonal block starts/sizes of TA and TB
    astarts_arr = np.zeros(na, dtype=np.intp)
    asizes_arr = np.zeros(na, dtype=np.intp)
    cdef Py_ssize_t[::1] astarts = astarts_arr
    cdef Py_ssize_t[::1] asizes = asizes_arr
    cdef int nab = 0, i = 0
    while i < na:
        astarts[nab] = i
        if i + 1 < na and TA[i + 1, i] != 0.0:
            asizes[nab] = 2
            i += 2
        else:
            asizes[nab] = 1
            i += 1
        nab += 1

    bstarts_arr = np.zeros(nb, dtype=np.intp)
    bsizes_arr = np.zeros(nb, dtype=np.intp)
    cdef Py_ssize_t[::1] bstarts = bstarts_arr
    cdef Py_ssize_t[::1] bsizes = bsizes_arr
    cdef int nbb = 0
    cdef double sub
    i = 0
    while i < nb:
        bstarts[nbb] = i
        sub = TB[i, i + 1] if tb_lower and i + 1 < nb else 0.0
        if not tb_lower and i + 1 < nb:
            sub = TB[i + 1, i]
        if i + 1 < nb and sub != 0.0:
            bsizes[nbb] = 2
            i += 2
        else:
            bsizes[nbb] = 1
            i += 1
        nbb += 1

    G_arr = np.zeros((na, 2))
    cdef double[:, ::1] G = G_arr
    cdef double M[16]
    cdef double rhs[4]
    cdef int jb, ib, c0, cs, r0, rs, r, c, k, sa, sb, idx
    cdef double acc, den

    for idx in range(nbb):
        jb = nbb - 1 - idx if tb_lower else idx
        c0 = bstarts[jb]
        cs = bsizes[jb]
        # G = -(F[:, c0:c0+cs] + Y @ TB[solved, c0:c0+cs])
        for r in range(na):
            for c in range(cs):
                acc = F[r, c0 + c]
                if tb_lower:
                    for k in range(c0 + cs, nb):
                        acc += Y[r, k] * TB[k, c0 + c]
                else:
                    for k in range(c0):
                        acc += Y[r, k] * TB[k, c0 + c]
                G[r, c] = -acc
        for ib in range(nab - 1, -1, -1):
            r0 = astarts[ib]
            rs = asizes[ib]
            # rhs = G[r0:r0+rs, :cs] - TA[r0:r0+rs, r0+rs:] @ Y[r0+rs:, c0:c0+cs]
            for r in range(rs):
                for c in range(cs):
                    acc = G[r0 + r, c]
                    for k in range(r0 + rs, na):
                        acc -= TA[r0 + r, k] * Y[k, c0 + c]
                    rhs[r + rs * c] = acc  # column-major vec
            sa = rs
            sb = cs
            if sa == 1 and sb == 1:
                den = TA[r0, r0] + TB[c0, c0]
                if den == 0.0:
                    raise ZeroDivisionError("singular Sylvester block")
                Y[r0, c0] = rhs[0] / den
            else:
                # K = I_sb (x) TAii + TBjj^T (x) I_sa, column-major vec
                k = sa * sb
                for r in range(k):
                    for c in range(k):
                        M[r * k + c] = 0.0
                for c in range(sb):
                    for r in range(sa):
                        for i in range(sa):
                            M[(c * sa + r) * k + (c * sa + i)] += TA[r0 + r, r0 + i]
                        for i in range(sb):
                            M[(c * sa + r) * k + (i * sa + r)] += TB[c0 + i, c0 + c]
                _gauss(M, rhs, k)
                for c in range(sb):
                    for r in range(sa):
                        Y[r0 + r, c0 + c] = rhs[c * sa + r]
    return Y_arr
