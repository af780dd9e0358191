# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernels.

Must stay operation-for-operation identical to ``_kernels_py`` (same libm
calls, same accumulation order, compiled with -ffp-contract=off) so both
backends produce bit-equal results.
"""

from libc.math cimport exp, log, tanh

import numpy as np


cdef double CLAMP = 1e-12


def run_epoch(double[:, ::1] w, double[:, ::1] v,
              unsigned char[:, ::1] aw, unsigned char[:, ::1] av,
              unsigned char[::1] frozen,
              double[:, ::1] X, double[:, ::1] T,
              double lr, double eps1_frac, double eps2_frac, double beta):
    """One online pass over the patterns, updating w and v in place."""
    cdef Py_ssize_t h = w.shape[0]
    cdef Py_ssize_t n = w.shape[1] - 1
    cdef Py_ssize_t C = v.shape[0]
    cdef Py_ssize_t k = X.shape[0]
    cdef Py_ssize_t i, m, l, p
    cdef double a, b, s, q, g, da
    cdef double[::1] d = np.empty(h, dtype=np.float64)
    cdef double[::1] e = np.empty(C, dtype=np.float64)
    cdef double[::1] dd = np.empty(h, dtype=np.float64)

    for i in range(k):
        for m in range(h):
            a = w[m, n]
            for l in range(n):
                a += w[m, l] * X[i, l]
            d[m] = tanh(a)
        for p in range(C):
            b = v[p, h]
            for m in range(h):
                b += v[p, m] * d[m]
            e[p] = 1.0 / (1.0 + exp(-b)) - T[i, p]
        for m in range(h):
            s = 0.0
            for p in range(C):
                s += e[p] * v[p, m]
            dd[m] = s
        for p in range(C):
            for m in range(h):
                if av[p, m]:
                    q = v[p, m]
                    g = e[p] * d[m] + eps1_frac * (2.0 * beta * q) / (
                        (1.0 + beta * q * q) * (1.0 + beta * q * q)
                    ) + 2.0 * eps2_frac * q
                    v[p, m] = q - lr * g
            v[p, h] = v[p, h] - lr * e[p]
        for m in range(h):
            if frozen[m]:
                continue
            da = dd[m] * (1.0 - d[m] * d[m])
            for l in range(n):
                if aw[m, l]:
                    q = w[m, l]
                    g = da * X[i, l] + eps1_frac * (2.0 * beta * q) / (
                        (1.0 + beta * q * q) * (1.0 + beta * q * q)
                    ) + 2.0 * eps2_frac * q
                    w[m, l] = q - lr * g
            w[m, n] = w[m, n] - lr * da


def evaluate(double[:, ::1] w, double[:, ::1] v,
             double[:, ::1] X, double[:, ::1] T):
    """Forward pass over a pattern set -> (E, F, n_correct, acts)."""
    cdef Py_ssize_t h = w.shape[0]
    cdef Py_ssize_t n = w.shape[1] - 1
    cdef Py_ssize_t C = v.shape[0]
    cdef Py_ssize_t k = X.shape[0]
    cdef Py_ssize_t i, m, l, p, best, best_true
    cdef double a, b, s, sc, tp, diff, best_s, best_t
    cdef double E = 0.0
    cdef double F = 0.0
    cdef long n_correct = 0
    acts_arr = np.empty((k, h), dtype=np.float64)
    cdef double[:, ::1] acts = acts_arr
    cdef double[::1] d = np.empty(h, dtype=np.float64)

    for i in range(k):
        for m in range(h):
            a = w[m, n]
            for l in range(n):
                a += w[m, l] * X[i, l]
            d[m] = tanh(a)
            acts[i, m] = d[m]
        best = 0
        best_true = 0
        best_s = -1.0
        best_t = -1.0
        for p in range(C):
            b = v[p, h]
            for m in range(h):
                b += v[p, m] * d[m]
            s = 1.0 / (1.0 + exp(-b))
            tp = T[i, p]
            diff = s - tp
            E += diff * diff
            sc = s
            if sc < CLAMP:
                sc = CLAMP
            elif sc > 1.0 - CLAMP:
                sc = 1.0 - CLAMP
            F -= tp * log(sc) + (1.0 - tp) * log(1.0 - sc)
            if s > best_s:
                best_s = s
                best = p
            if tp > best_t:
                best_t = tp
                best_true = p
        if best == best_true:
            n_correct += 1
    E *= 0.5
    return E, F, n_correct, acts_arr


def penalty_value(double[:, ::1] w, double[:, ::1] v,
                  unsigned char[:, ::1] aw, unsigned char[:, ::1] av,
                  double eps1, double eps2, double beta):
    """Two-term decay penalty over active non-bias weights of both layers."""
    cdef Py_ssize_t h = w.shape[0]
    cdef Py_ssize_t n = w.shape[1] - 1
    cdef Py_ssize_t C = v.shape[0]
    cdef Py_ssize_t m, l, p
    cdef double q2
    cdef double flat = 0.0
    cdef double quad = 0.0

    for m in range(h):
        for l in range(n):
            if aw[m, l]:
                q2 = w[m, l] * w[m, l]
                flat += beta * q2 / (1.0 + beta * q2)
                quad += q2
    for p in range(C):
        for m in range(h):
            if av[p, m]:
                q2 = v[p, m] * v[p, m]
                flat += beta * q2 / (1.0 + beta * q2)
                quad += q2
    return eps1 * flat + eps2 * quad
