"""Pure-Python training kernels.

Fallback for the compiled extension in ``_kernels.pyx``. Both versions
perform the exact same floating-point operations in the exact same order
(libm tanh/exp on IEEE doubles), so a run is bit-reproducible regardless
of which backend is active.
"""

from math import exp, log, tanh

import numpy as np

CLAMP = 1e-12


def run_epoch(w, v, aw, av, frozen, X, T, lr, eps1_frac, eps2_frac, beta):
    """One online pass over the patterns, updating w and v in place.

    Per pattern: forward pass, cross-entropy deltas, then gradient steps on
    the hidden->output weights followed by the input->hidden weights. The
    decay penalty contributes ``eps*_frac`` per pattern (the caller scales
    the full coefficients by 1/k). Inactive connections and frozen rows
    receive no update; bias columns (last column of each matrix) carry no
    penalty.
    """
    h, ncol = w.shape
    n = ncol - 1
    C = v.shape[0]
    k = X.shape[0]

    wl = w.tolist()
    vl = v.tolist()
    awl = aw.tolist()
    avl = av.tolist()
    frozenl = frozen.tolist()
    Xl = X.tolist()
    Tl = T.tolist()

    d = [0.0] * h
    e = [0.0] * C
    dd = [0.0] * h

    for i in range(k):
        x = Xl[i]
        t = Tl[i]
        for m in range(h):
            wm = wl[m]
            a = wm[n]
            for l in range(n):
                a += wm[l] * x[l]
            d[m] = tanh(a)
        for p in range(C):
            vp = vl[p]
            b = vp[h]
            for m in range(h):
                b += vp[m] * d[m]
            e[p] = 1.0 / (1.0 + exp(-b)) - t[p]
        for m in range(h):
            s = 0.0
            for p in range(C):
                s += e[p] * vl[p][m]
            dd[m] = s
        for p in range(C):
            vp = vl[p]
            avp = avl[p]
            ep = e[p]
            for m in range(h):
                if avp[m]:
                    q = vp[m]
                    g = ep * d[m] + eps1_frac * (2.0 * beta * q) / (
                        (1.0 + beta * q * q) * (1.0 + beta * q * q)
                    ) + 2.0 * eps2_frac * q
                    vp[m] = q - lr * g
            vp[h] = vp[h] - lr * ep
        for m in range(h):
            if frozenl[m]:
                continue
            wm = wl[m]
            awm = awl[m]
            da = dd[m] * (1.0 - d[m] * d[m])
            for l in range(n):
                if awm[l]:
                    q = wm[l]
                    g = da * x[l] + eps1_frac * (2.0 * beta * q) / (
                        (1.0 + beta * q * q) * (1.0 + beta * q * q)
                    ) + 2.0 * eps2_frac * q
                    wm[l] = q - lr * g
            wm[n] = wm[n] - lr * da

    w[:] = wl
    v[:] = vl


def evaluate(w, v, X, T):
    """Forward pass over a pattern set.

    Returns ``(E, F, n_correct, acts)``: half summed squared error, the
    clamped cross entropy, the count of argmax-correct patterns (ties to
    the lower output index), and the k-by-h hidden activation matrix.
    """
    h, ncol = w.shape
    n = ncol - 1
    C = v.shape[0]
    k = X.shape[0]

    wl = w.tolist()
    vl = v.tolist()
    Xl = X.tolist()
    Tl = T.tolist()

    acts = np.empty((k, h), dtype=np.float64)
    E = 0.0
    F = 0.0
    n_correct = 0
    d = [0.0] * h

    for i in range(k):
        x = Xl[i]
        t = Tl[i]
        for m in range(h):
            wm = wl[m]
            a = wm[n]
            for l in range(n):
                a += wm[l] * x[l]
            d[m] = tanh(a)
            acts[i, m] = d[m]
        best = 0
        best_true = 0
        best_s = -1.0
        best_t = -1.0
        for p in range(C):
            vp = vl[p]
            b = vp[h]
            for m in range(h):
                b += vp[m] * d[m]
            s = 1.0 / (1.0 + exp(-b))
            tp = t[p]
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
    return E, F, n_correct, acts


def penalty_value(w, v, aw, av, eps1, eps2, beta):
    """Two-term decay penalty over active non-bias weights of both layers."""
    h, ncol = w.shape
    n = ncol - 1
    C = v.shape[0]

    wl = w.tolist()
    vl = v.tolist()
    awl = aw.tolist()
    avl = av.tolist()

    flat = 0.0
    quad = 0.0
    for m in range(h):
        wm = wl[m]
        awm = awl[m]
        for l in range(n):
            if awm[l]:
                q2 = wm[l] * wm[l]
                flat += beta * q2 / (1.0 + beta * q2)
                quad += q2
    for p in range(C):
        vp = vl[p]
        avp = avl[p]
        for m in range(h):
            if avp[m]:
                q2 = vp[m] * vp[m]
                flat += beta * q2 / (1.0 + beta * q2)
                quad += q2
    return eps1 * flat + eps2 * quad
