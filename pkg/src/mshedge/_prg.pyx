# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernel: projected reflected gradient subproblem solve.

Semantically identical to ``mshedge._prg_py.prg_solve`` (the pure-numpy
reference); the loop is fused here so one iteration touches each scenario
row once (update, matvec, projection, residual) without temporaries.
"""

from libc.math cimport sqrt

import numpy as np


def prg_solve(
    const double[:, :, ::1] mats,
    const double[:, ::1] offs,
    const double[:, ::1] lower,
    const double[:, ::1] upper,
    const double[:, ::1] x_base,
    const double[:, ::1] y_base,
    const double[::1] probs,
    double r,
    double lam,
    double eps,
    long max_iter,
    double[:, ::1] cand,
    double[:, ::1] proj,
):
    cdef Py_ssize_t m = offs.shape[0]
    cdef Py_ssize_t n = offs.shape[1]
    cdef double rinv = 1.0 / r

    buf = np.empty((6, m, n), dtype=np.float64)
    cdef double[:, ::1] z_prev = buf[0]
    cdef double[:, ::1] z = buf[1]
    cdef double[:, ::1] z_new = buf[2]
    cdef double[:, ::1] f_prev = buf[3]
    cdef double[:, ::1] f_cur = buf[4]
    cdef double[:, ::1] f_new = buf[5]
    cdef double[:, ::1] tmp

    cdef Py_ssize_t i, a, c
    cdef long it = 0
    cdef double acc, gval, v, w, d, di, res2, max2, res, res_max

    with nogil:
        res2 = 0.0
        max2 = 0.0
        for i in range(m):
            di = 0.0
            for a in range(n):
                v = cand[i, a]
                z[i, a] = v
                z_prev[i, a] = v
            for a in range(n):
                acc = offs[i, a]
                for c in range(n):
                    acc += mats[i, a, c] * z[i, c]
                f_cur[i, a] = acc
                f_prev[i, a] = acc
                w = x_base[i, a] - (acc + y_base[i, a]) * rinv
                if w < lower[i, a]:
                    w = lower[i, a]
                elif w > upper[i, a]:
                    w = upper[i, a]
                proj[i, a] = w
                d = z[i, a] - w
                di += d * d
            res2 += probs[i] * di
            if di > max2:
                max2 = di
        res = sqrt(res2)
        res_max = sqrt(max2)

        if res > eps:
            for it in range(1, max_iter + 1):
                res2 = 0.0
                max2 = 0.0
                for i in range(m):
                    for a in range(n):
                        gval = (
                            2.0 * f_cur[i, a]
                            - f_prev[i, a]
                            + y_base[i, a]
                            + r * (2.0 * z[i, a] - z_prev[i, a] - x_base[i, a])
                        )
                        v = z[i, a] - lam * gval
                        if v < lower[i, a]:
                            v = lower[i, a]
                        elif v > upper[i, a]:
                            v = upper[i, a]
                        z_new[i, a] = v
                    di = 0.0
                    for a in range(n):
                        acc = offs[i, a]
                        for c in range(n):
                            acc += mats[i, a, c] * z_new[i, c]
                        f_new[i, a] = acc
                        w = x_base[i, a] - (acc + y_base[i, a]) * rinv
                        if w < lower[i, a]:
                            w = lower[i, a]
                        elif w > upper[i, a]:
                            w = upper[i, a]
                        proj[i, a] = w
                        d = z_new[i, a] - w
                        di += d * d
                    res2 += probs[i] * di
                    if di > max2:
                        max2 = di
                tmp = z_prev
                z_prev = z
                z = z_new
                z_new = tmp
                tmp = f_prev
                f_prev = f_cur
                f_cur = f_new
                f_new = tmp
                res = sqrt(res2)
                res_max = sqrt(max2)
                if res <= eps:
                    break

        for i in range(m):
            for a in range(n):
                cand[i, a] = z[i, a]

    return int(it), res, res_max
