# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot inner loops.

Signature-compatible with ``survact._kernels_py``; see that module for the
contracts. Data must be sorted by ascending observed time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log, sqrt

cnp.import_array()


def cox_loglik(x, time, event, beta):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(time, dtype=np.float64)
    cdef unsigned char[::1] ev = np.ascontiguousarray(event, dtype=np.uint8)
    cdef double[::1] bv = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], p = xv.shape[1]
    cdef Py_ssize_t i, j, k, a
    cdef double s0 = 0.0, ll = 0.0, eta
    cdef double[::1] etas = np.empty(n, dtype=np.float64)

    for i in range(n):
        eta = 0.0
        for k in range(p):
            eta += xv[i, k] * bv[k]
        etas[i] = eta

    i = n - 1
    while i >= 0:
        a = i
        while a > 0 and tv[a - 1] == tv[i]:
            a -= 1
        for j in range(a, i + 1):
            s0 += exp(etas[j])
        for j in range(a, i + 1):
            if ev[j]:
                ll += etas[j] - log(s0)
        i = a - 1
    return ll


def cox_grad_hess(x, time, event, beta):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(time, dtype=np.float64)
    cdef unsigned char[::1] ev = np.ascontiguousarray(event, dtype=np.uint8)
    cdef double[::1] bv = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], p = xv.shape[1]
    cdef Py_ssize_t i, j, k, l, a
    cdef double s0 = 0.0, ll = 0.0, eta, w, m1k

    grad_arr = np.zeros(p, dtype=np.float64)
    hess_arr = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[:, ::1] hess = hess_arr
    cdef double[::1] etas = np.empty(n, dtype=np.float64)
    cdef double[::1] s1 = np.zeros(p, dtype=np.float64)
    cdef double[:, ::1] s2 = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] m1 = np.empty(p, dtype=np.float64)

    for i in range(n):
        eta = 0.0
        for k in range(p):
            eta += xv[i, k] * bv[k]
        etas[i] = eta

    i = n - 1
    while i >= 0:
        a = i
        while a > 0 and tv[a - 1] == tv[i]:
            a -= 1
        for j in range(a, i + 1):
            w = exp(etas[j])
            s0 += w
            for k in range(p):
                s1[k] += w * xv[j, k]
                for l in range(p):
                    s2[k, l] += w * xv[j, k] * xv[j, l]
        for j in range(a, i + 1):
            if ev[j]:
                ll += etas[j] - log(s0)
                for k in range(p):
                    m1[k] = s1[k] / s0
                for k in range(p):
                    grad[k] += xv[j, k] - m1[k]
                    m1k = m1[k]
                    for l in range(p):
                        hess[k, l] -= s2[k, l] / s0 - m1k * m1[l]
        i = a - 1
    return ll, grad_arr, hess_arr


def breslow_increments(x, time, event, beta):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] tv = np.ascontiguousarray(time, dtype=np.float64)
    cdef unsigned char[::1] ev = np.ascontiguousarray(event, dtype=np.uint8)
    cdef double[::1] bv = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], p = xv.shape[1]
    cdef Py_ssize_t i, j, k, a
    cdef double s0 = 0.0, eta, d

    times_list = []
    incr_list = []
    i = n - 1
    while i >= 0:
        a = i
        while a > 0 and tv[a - 1] == tv[i]:
            a -= 1
        for j in range(a, i + 1):
            eta = 0.0
            for k in range(p):
                eta += xv[j, k] * bv[k]
            s0 += exp(eta)
        d = 0.0
        for j in range(a, i + 1):
            if ev[j]:
                d += 1.0
        if d > 0.0:
            times_list.append(tv[i])
            incr_list.append(d / s0)
        i = a - 1
    times_list.reverse()
    incr_list.reverse()
    return np.asarray(times_list, dtype=np.float64), np.asarray(incr_list, dtype=np.float64)


def concordance_counts(time, event, scores):
    cdef double[::1] tv = np.ascontiguousarray(time, dtype=np.float64)
    cdef unsigned char[::1] ev = np.ascontiguousarray(event, dtype=np.uint8)
    cdef double[::1] sv = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0]
    cdef Py_ssize_t i, j
    cdef long long concordant = 0, tied = 0, comparable = 0

    for i in range(n):
        if not ev[i]:
            continue
        for j in range(n):
            if tv[i] < tv[j]:
                comparable += 1
                if sv[i] > sv[j]:
                    concordant += 1
                elif sv[i] == sv[j]:
                    tied += 1
    return int(concordant), int(tied), int(comparable)


def best_split_logrank(values, time, event, min_leaf_events):
    values = np.ascontiguousarray(values, dtype=np.float64)
    time = np.ascontiguousarray(time, dtype=np.float64)
    event_u8 = np.ascontiguousarray(event, dtype=np.uint8)

    order = np.argsort(values, kind="stable")
    v_arr = values[order]
    t_arr = time[order]
    e_arr = event_u8[order]
    ev_times = np.unique(t_arr[e_arr.view(bool)])

    cdef double[::1] v = v_arr
    cdef double[::1] t = t_arr
    cdef unsigned char[::1] e = e_arr
    cdef double[::1] taus = ev_times
    cdef Py_ssize_t n = v.shape[0], m = taus.shape[0]
    cdef Py_ssize_t mle = int(min_leaf_events)
    if m == 0 or n < 2:
        return float("nan"), float("-inf")

    # hi[i]: number of event times <= t[i]; di[i]: index of t[i] among event times
    hi_arr = np.searchsorted(ev_times, t_arr, side="right").astype(np.intp)
    di_arr = np.searchsorted(ev_times, t_arr, side="left").astype(np.intp)
    cdef Py_ssize_t[::1] hi = hi_arr
    cdef Py_ssize_t[::1] di = di_arr

    cdef double[::1] n_tot = np.zeros(m, dtype=np.float64)
    cdef double[::1] d_tot = np.zeros(m, dtype=np.float64)
    cdef double[::1] n1 = np.zeros(m, dtype=np.float64)
    cdef double[::1] d1 = np.zeros(m, dtype=np.float64)
    cdef Py_ssize_t i, k, mm
    cdef long total_events = 0, left_events = 0
    cdef double num, var, fr, stat, best_stat, best_thr

    for i in range(n):
        for mm in range(hi[i]):
            n_tot[mm] += 1.0
        if e[i]:
            d_tot[di[i]] += 1.0
            total_events += 1

    best_stat = float("-inf")
    best_thr = float("nan")
    for k in range(1, n):
        i = k - 1
        for mm in range(hi[i]):
            n1[mm] += 1.0
        if e[i]:
            d1[di[i]] += 1.0
            left_events += 1
        if v[i] >= v[k]:
            continue
        if left_events < mle or total_events - left_events < mle:
            continue
        num = 0.0
        var = 0.0
        for mm in range(m):
            fr = n1[mm] / n_tot[mm]
            num += d1[mm] - d_tot[mm] * fr
            if n_tot[mm] > 1.0:
                var += d_tot[mm] * fr * (1.0 - fr) * (n_tot[mm] - d_tot[mm]) / (n_tot[mm] - 1.0)
        if var > 0.0:
            stat = fabs(num) / sqrt(var)
            if stat > best_stat:
                best_stat = stat
                best_thr = 0.5 * (v[i] + v[k])
    return best_thr, best_stat
