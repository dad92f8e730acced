# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels for the closed model family.

Mirrors the Dormand-Prince 5(4) stepper in ``flocsim.numerics.integrate``
(same tableau, PI controller, and quartic dense output) over models
encoded as flat parameter blocks; see the ``pack`` methods in
``flocsim.models`` and ``flocsim.reduction`` for the layouts. Keep the
constants in sync with the pure-Python kernel.
"""

import numpy as np

from libc.math cimport fabs, fmax, fmin, pow, sqrt

KINDS = {"full_single": 0, "reduced_single": 1, "full_multi": 2, "reduced_multi": 3}

cdef int KIND_FULL_SINGLE = 0
cdef int KIND_REDUCED_SINGLE = 1
cdef int KIND_FULL_MULTI = 2
cdef int KIND_REDUCED_MULTI = 3

cdef double SAFETY = 0.9
cdef double BETA = 0.04
cdef double ALPHA = 0.2 - 0.75 * 0.04
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 10.0
cdef double MIN_FACOLD = 1e-4

cdef double[7] C_NODES
C_NODES[0] = 0.0
C_NODES[1] = 1.0 / 5.0
C_NODES[2] = 3.0 / 10.0
C_NODES[3] = 4.0 / 5.0
C_NODES[4] = 8.0 / 9.0
C_NODES[5] = 1.0
C_NODES[6] = 1.0

cdef double[7][7] A_TAB
A_TAB[1][0] = 1.0 / 5.0
A_TAB[2][0] = 3.0 / 40.0
A_TAB[2][1] = 9.0 / 40.0
A_TAB[3][0] = 44.0 / 45.0
A_TAB[3][1] = -56.0 / 15.0
A_TAB[3][2] = 32.0 / 9.0
A_TAB[4][0] = 19372.0 / 6561.0
A_TAB[4][1] = -25360.0 / 2187.0
A_TAB[4][2] = 64448.0 / 6561.0
A_TAB[4][3] = -212.0 / 729.0
A_TAB[5][0] = 9017.0 / 3168.0
A_TAB[5][1] = -355.0 / 33.0
A_TAB[5][2] = 46732.0 / 5247.0
A_TAB[5][3] = 49.0 / 176.0
A_TAB[5][4] = -5103.0 / 18656.0
A_TAB[6][0] = 35.0 / 384.0
A_TAB[6][1] = 0.0
A_TAB[6][2] = 500.0 / 1113.0
A_TAB[6][3] = 125.0 / 192.0
A_TAB[6][4] = -2187.0 / 6784.0
A_TAB[6][5] = 11.0 / 84.0

cdef double[7] E_ROW
E_ROW[0] = 71.0 / 57600.0
E_ROW[1] = 0.0
E_ROW[2] = -71.0 / 16695.0
E_ROW[3] = 71.0 / 1920.0
E_ROW[4] = -17253.0 / 339200.0
E_ROW[5] = 22.0 / 525.0
E_ROW[6] = -1.0 / 40.0

cdef double[4][7] P_T
P_T[0][0] = 1.0
P_T[0][1] = 0.0
P_T[0][2] = 0.0
P_T[0][3] = 0.0
P_T[0][4] = 0.0
P_T[0][5] = 0.0
P_T[0][6] = 0.0
P_T[1][0] = -8048581381.0 / 2820520608.0
P_T[1][1] = 0.0
P_T[1][2] = 131558114200.0 / 32700410799.0
P_T[1][3] = -1754552775.0 / 470086768.0
P_T[1][4] = 127303824393.0 / 49829197408.0
P_T[1][5] = -282668133.0 / 205662961.0
P_T[1][6] = 40617522.0 / 29380423.0
P_T[2][0] = 8663915743.0 / 2820520608.0
P_T[2][1] = 0.0
P_T[2][2] = -68118460800.0 / 10900136933.0
P_T[2][3] = 14199869525.0 / 1410260304.0
P_T[2][4] = -318862633887.0 / 49829197408.0
P_T[2][5] = 2019193451.0 / 616988883.0
P_T[2][6] = -110615467.0 / 29380423.0
P_T[3][0] = -12715105075.0 / 11282082432.0
P_T[3][1] = 0.0
P_T[3][2] = 87487479700.0 / 32700410799.0
P_T[3][3] = -10690763975.0 / 1880347072.0
P_T[3][4] = 701980252875.0 / 199316789632.0
P_T[3][5] = -1453857185.0 / 822651844.0
P_T[3][6] = 69997945.0 / 29380423.0


cdef inline double growth(double mu, double K, double S) nogil:
    # Zero growth is encoded as mu=0, K=1
    return mu * S / (K + S)


cdef void rhs_full_single(double* p, double* y, double* out) nogil:
    cdef double S = fmax(y[0], 0.0)
    cdef double u = fmax(y[1], 0.0)
    cdef double v = fmax(y[2], 0.0)
    cdef double fS = growth(p[6], p[7], S)
    cdef double gS = growth(p[9], p[10], S)
    cdef int kk = <int> p[11]
    cdef double al, be, W
    if kk == 0:
        al = p[12]
        be = p[15]
    elif kk == 1:
        al = growth(p[13], p[14], S)
        be = growth(p[16], p[17], S)
    elif kk == 2:
        al = p[12] * u
        be = p[15]
    elif kk == 3:
        al = p[12] * (u + v)
        be = p[15]
    else:
        W = v / p[18]
        if W > 1.0:
            W = 1.0
        al = p[12] * (1.0 - W)
        be = p[15] + gS * W  # 1 - G(W) = W for the default linear G
    cdef double ex = (al * u - be * v) / p[4]
    out[0] = p[0] * (p[1] - S) - fS * u - gS * v
    out[1] = (fS - p[2]) * u - ex
    out[2] = (gS - p[3]) * v + ex


cdef void rhs_reduced_single(double* p, double* y, double* out) nogil:
    cdef double S = fmax(y[0], 0.0)
    cdef double x = fmax(y[1], 0.0)
    cdef double fS = growth(p[5], p[6], S)
    cdef double gS = growth(p[8], p[9], S)
    cdef int pk = <int> p[10]
    cdef double pp, al, be, alp, bep, r, den
    if pk == 0:
        pp = p[14] / (p[11] + p[14])
    elif pk == 1:
        al = growth(p[12], p[13], S)
        be = growth(p[15], p[16], S)
        if al + be == 0.0:
            den = p[13] + S
            alp = p[12] * p[13] / (den * den)
            den = p[16] + S
            bep = p[15] * p[16] / (den * den)
            pp = bep / (alp + bep)
        else:
            pp = be / (al + be)
    elif pk == 2:
        r = sqrt(1.0 + 4.0 * (p[11] / p[14]) * x)
        pp = 2.0 / (1.0 + r)
    else:
        pp = p[14] / (p[14] + p[11] * x)
    cdef double mu = pp * fS + (1.0 - pp) * gS
    cdef double dd = pp * p[2] + (1.0 - pp) * p[3]
    out[0] = p[0] * (p[1] - S) - mu * x
    out[1] = (mu - dd) * x


cdef void rhs_full_multi(double* p, double* y, double* out, double* work) nogil:
    cdef int n = <int> p[3]
    cdef int base = 5
    cdef int abase = 5 + 8 * n
    cdef double S = fmax(y[0], 0.0)
    cdef double eps = p[2]
    cdef int i, j, q
    cdef double u, v, fS, gS, al, ex, consumption
    for j in range(n):
        work[j] = fmax(y[1 + j], 0.0) + fmax(y[1 + n + j], 0.0)
    consumption = 0.0
    for i in range(n):
        u = fmax(y[1 + i], 0.0)
        v = fmax(y[1 + n + i], 0.0)
        q = base + 8 * i
        fS = growth(p[q], p[q + 1], S)
        gS = growth(p[q + 2], p[q + 3], S)
        al = 0.0
        for j in range(n):
            al += p[abase + i * n + j] * work[j]
        ex = (al * u - p[q + 6] * v) / eps
        out[1 + i] = (fS - p[q + 4]) * u - ex
        out[1 + n + i] = (gS - p[q + 5]) * v + ex
        consumption += fS * u + gS * v
    out[0] = p[0] * (p[1] - S) - consumption


cdef void rhs_reduced_multi(double* p, double* y, double* out, double* work) nogil:
    cdef int n = <int> p[2]
    cdef int base = 4
    cdef int abase = 4 + 8 * n
    cdef double S = fmax(y[0], 0.0)
    cdef int i, j, q
    cdef double x, fS, gS, ax, pp, mu, dd, consumption
    for j in range(n):
        work[j] = fmax(y[1 + j], 0.0)
    consumption = 0.0
    for i in range(n):
        x = work[i]
        q = base + 8 * i
        fS = growth(p[q], p[q + 1], S)
        gS = growth(p[q + 2], p[q + 3], S)
        ax = 0.0
        for j in range(n):
            ax += p[abase + i * n + j] * work[j]
        pp = p[q + 6] / (p[q + 6] + ax)
        mu = pp * fS + (1.0 - pp) * gS
        dd = pp * p[q + 4] + (1.0 - pp) * p[q + 5]
        out[1 + i] = (mu - dd) * x
        consumption += mu * x
    out[0] = p[0] * (p[1] - S) - consumption


cdef inline void eval_rhs(int kind, double* p, double* y, double* out, double* work) nogil:
    if kind == KIND_FULL_SINGLE:
        rhs_full_single(p, y, out)
    elif kind == KIND_REDUCED_SINGLE:
        rhs_reduced_single(p, y, out)
    elif kind == KIND_FULL_MULTI:
        rhs_full_multi(p, y, out, work)
    else:
        rhs_reduced_multi(p, y, out, work)


cdef double rms_scaled(double* v, double* y0, double* y1, double rtol, double atol,
                       int dim) nogil:
    cdef double acc = 0.0
    cdef double sc, w
    cdef int i
    for i in range(dim):
        sc = atol + rtol * fmax(fabs(y0[i]), fabs(y1[i]))
        w = v[i] / sc
        acc += w * w
    return sqrt(acc / dim)


def integrate_packed(int kind, double[::1] params, double[::1] y0, double t0,
                     double t1, double rtol, double atol, double max_step,
                     long max_steps):
    """Run the stepper; returns (ts, ys, fs, dense?, status, naccept, nreject, nfev).

    Status: 0 completed, 1 step underflow, 2 max_steps exceeded. Partial
    node arrays are returned either way (dense output is reconstructed on
    the Python side from nodes when a run aborts mid-way; here the dense
    block always covers the accepted steps).
    """
    cdef int dim = y0.shape[0]
    cdef double* p = &params[0]

    cap = 1024
    ts_arr = np.empty(cap)
    ys_arr = np.empty((cap, dim))
    fs_arr = np.empty((cap, dim))
    dn_arr = np.empty((cap, 4, dim))
    cdef double[::1] ts = ts_arr
    cdef double[:, ::1] ys = ys_arr
    cdef double[:, ::1] fs = fs_arr
    cdef double[:, :, ::1] dn = dn_arr

    work_arr = np.empty((12, dim))
    cdef double[:, ::1] wk = work_arr
    cdef double* y = &wk[7, 0]
    cdef double* yi = &wk[8, 0]
    cdef double* f0 = &wk[9, 0]
    cdef double* errv = &wk[10, 0]
    cdef double* scratch = &wk[11, 0]
    k_arr = np.empty((7, dim))
    cdef double[:, ::1] kk = k_arr

    cdef int i, j, m
    for i in range(dim):
        y[i] = y0[i]
    eval_rhs(kind, p, y, f0, scratch)
    cdef long nfev = 2
    cdef long naccept = 0
    cdef long nreject = 0
    cdef int status = 0

    cdef long n = 1
    ts[0] = t0
    for i in range(dim):
        ys[0, i] = y[i]
        fs[0, i] = f0[i]

    # initial step size (same heuristic as the pure kernel)
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, sc, h0, h1, h
    for i in range(dim):
        sc = atol + rtol * fabs(y[i])
        d0 += (y[i] / sc) * (y[i] / sc)
        d1 += (f0[i] / sc) * (f0[i] / sc)
    d0 = sqrt(d0 / dim)
    d1 = sqrt(d1 / dim)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = fmin(fmin(h0, t1 - t0), max_step)
    if h0 != h0 or h0 <= 0.0:
        h0 = fmin(fmin(1e-6, t1 - t0), max_step)
    for i in range(dim):
        yi[i] = y[i] + h0 * f0[i]
    eval_rhs(kind, p, yi, errv, scratch)
    for i in range(dim):
        sc = atol + rtol * fabs(y[i])
        d2 += ((errv[i] - f0[i]) / sc) * ((errv[i] - f0[i]) / sc)
    d2 = sqrt(d2 / dim) / h0
    if fmax(d1, d2) <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    h = fmin(fmin(100.0 * h0, h1), fmin(t1 - t0, max_step))
    if h != h or h <= 0.0:
        h = fmin(fmin(1e-6, t1 - t0), max_step)

    cdef double t = t0
    cdef double facold = MIN_FACOLD
    cdef double err, fac11, fac, h_new, acc, t_new
    cdef bint rejected = False
    for i in range(dim):
        kk[0, i] = f0[i]

    while t < t1:
        if naccept + nreject >= max_steps:
            status = 2
            break
        h = fmin(fmin(h, max_step), t1 - t)
        if h <= 1e-14 * fmax(1.0, fabs(t)):
            status = 1
            break

        for m in range(1, 7):
            for i in range(dim):
                acc = 0.0
                for j in range(m):
                    acc += A_TAB[m][j] * kk[j, i]
                yi[i] = y[i] + h * acc
            eval_rhs(kind, p, yi, &kk[m, 0], scratch)
        nfev += 6
        # stage-7 argument is the 5th order solution (FSAL); yi holds it
        for i in range(dim):
            acc = 0.0
            for j in range(7):
                acc += E_ROW[j] * kk[j, i]
            errv[i] = h * acc
        err = rms_scaled(errv, y, yi, rtol, atol, dim)
        if err != err or err - err != 0.0:  # NaN or infinity
            err = 2.0

        if err <= 1.0:
            t_new = t + h
            naccept += 1
            if n == cap:
                cap *= 2
                ts_arr = np.resize(ts_arr, cap)
                new_ys = np.empty((cap, dim)); new_ys[:n] = ys_arr; ys_arr = new_ys
                new_fs = np.empty((cap, dim)); new_fs[:n] = fs_arr; fs_arr = new_fs
                new_dn = np.empty((cap, 4, dim)); new_dn[:n] = dn_arr; dn_arr = new_dn
                ts = ts_arr
                ys = ys_arr
                fs = fs_arr
                dn = dn_arr
            ts[n] = t_new
            for i in range(dim):
                ys[n, i] = yi[i]
                fs[n, i] = kk[6, i]
            for m in range(4):
                for i in range(dim):
                    acc = 0.0
                    for j in range(7):
                        acc += P_T[m][j] * kk[j, i]
                    dn[n - 1, m, i] = acc
            n += 1

            if err > 0.0:
                fac11 = pow(err, ALPHA)
                fac = fac11 / pow(facold, BETA)
            else:
                fac = 1.0 / FAC_MAX
            fac = fmax(1.0 / FAC_MAX, fmin(1.0 / FAC_MIN, fac / SAFETY))
            h_new = h / fac
            if rejected:
                h_new = fmin(h_new, h)
            facold = fmax(err, MIN_FACOLD)
            t = t_new
            for i in range(dim):
                y[i] = yi[i]
                kk[0, i] = kk[6, i]
            rejected = False
            h = h_new
        else:
            nreject += 1
            rejected = True
            fac11 = pow(err, ALPHA)
            h = h / fmin(1.0 / FAC_MIN, fac11 / SAFETY)

    return (ts_arr[:n].copy(), ys_arr[:n].copy(), fs_arr[:n].copy(),
            dn_arr[:n - 1].copy(), status, naccept, nreject, nfev)
