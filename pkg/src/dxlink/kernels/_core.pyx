# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the pure kernels; same contract as ``_pure``.

The subset evaluation runs in double precision and reruns in ``long double``
when inclusion-exclusion cancellation exceeds the same ratio the fallback
uses, so both backends deliver the same accuracy.
"""

import numpy as np

from libc.math cimport exp, log1p, isfinite

from ..errors import NumericalError

cdef extern from "<math.h>" nogil:
    long double expl(long double)
    long double logl(long double)
    long double log1pl(long double)

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil
    int __builtin_popcountll(unsigned long long) nogil

ctypedef fused real_t:
    double
    long double

cdef double RETRY_RATIO = 1e4


def closure_reach(Py_ssize_t n, indptr_arr, parents_arr, topo_arr):
    """Ancestor bitsets in uint64 blocks, filled in topological order."""
    cdef long long[::1] indptr = np.ascontiguousarray(indptr_arr, dtype=np.int64)
    cdef long long[::1] parents = np.ascontiguousarray(parents_arr, dtype=np.int64)
    cdef long long[::1] topo = np.ascontiguousarray(topo_arr, dtype=np.int64)

    cdef Py_ssize_t words = (n + 63) >> 6 if n else 0
    reach_np = np.zeros((n, words), dtype=np.uint64)
    cdef unsigned long long[:, ::1] reach = reach_np
    cdef Py_ssize_t vi, k, w
    cdef long long v, p
    cdef long long total = 0
    cdef unsigned long long bits, low

    with nogil:
        for vi in range(n):
            v = topo[vi]
            for k in range(indptr[v], indptr[v + 1]):
                p = parents[k]
                for w in range(words):
                    reach[v, w] |= reach[p, w]
                reach[v, p >> 6] |= (<unsigned long long>1) << (p & 63)
        for vi in range(n):
            for w in range(words):
                total += __builtin_popcountll(reach[vi, w])

    desc_np = np.empty(total, dtype=np.int64)
    anc_np = np.empty(total, dtype=np.int64)
    cdef long long[::1] desc = desc_np
    cdef long long[::1] anc = anc_np
    cdef Py_ssize_t idx = 0
    with nogil:
        for vi in range(n):
            for w in range(words):
                bits = reach[vi, w]
                while bits:
                    low = bits & (~bits + 1)
                    desc[idx] = vi
                    anc[idx] = (w << 6) + __builtin_ctzll(low)
                    idx += 1
                    bits ^= low
    return desc_np, anc_np


cdef inline real_t _lae(real_t a, real_t b) nogil:
    cdef real_t t
    if a < b:
        t = a
        a = b
        b = t
    if real_t is double:
        return a + log1p(exp(b - a))
    else:
        return a + log1pl(expl(b - a))


cdef int _fill_terms(real_t[::1] theta0_e, real_t[:, ::1] theta_e,
                     real_t[::1] base, real_t[::1] log_p, real_t[::1] log_1mp,
                     real_t[::1] a_vec, real_t[::1] term_log,
                     signed char[::1] parity, long double* peak_out) nogil:
    """Gray-code walk filling one term per subset; returns 0 on non-finite."""
    cdef Py_ssize_t n_exact = theta0_e.shape[0]
    cdef Py_ssize_t n_dis = base.shape[0]
    cdef unsigned long long n_sub = (<unsigned long long>1) << n_exact
    cdef unsigned long long s
    cdef Py_ssize_t j, bit
    cdef int par = 0
    cdef real_t c = 0.0
    cdef real_t acc
    cdef long double peak = -1e308

    for j in range(n_dis):
        a_vec[j] = base[j]
    for s in range(n_sub):
        if s:
            bit = __builtin_ctzll(s)
            if (s ^ (s >> 1)) & ((<unsigned long long>1) << bit):
                c -= theta0_e[bit]
                for j in range(n_dis):
                    a_vec[j] -= theta_e[bit, j]
            else:
                c += theta0_e[bit]
                for j in range(n_dis):
                    a_vec[j] += theta_e[bit, j]
            par ^= 1
        acc = c
        for j in range(n_dis):
            acc += _lae(log_1mp[j], log_p[j] + a_vec[j])
        if not isfinite(<double>acc):
            return 0
        term_log[s] = acc
        parity[s] = par
        if <long double>acc > peak:
            peak = <long double>acc
    peak_out[0] = peak
    return 1


cdef void _signed_sums(real_t[::1] term_log, signed char[::1] parity,
                       long double peak, long double* pos_out,
                       long double* neg_out) nogil:
    cdef Py_ssize_t n_sub = term_log.shape[0]
    cdef Py_ssize_t s
    cdef long double pos = 0.0, neg = 0.0, w
    for s in range(n_sub):
        w = expl(<long double>term_log[s] - peak)
        if parity[s]:
            neg += w
        else:
            pos += w
    pos_out[0] = pos
    neg_out[0] = neg


cdef void _marginal_sums(real_t[:, ::1] theta_e, real_t[::1] base,
                         real_t[::1] log_p, real_t[::1] log_1mp,
                         real_t[::1] a_vec, real_t[::1] term_log,
                         signed char[::1] parity, long double peak,
                         long double[::1] num) nogil:
    cdef Py_ssize_t n_exact = theta_e.shape[0]
    cdef Py_ssize_t n_dis = base.shape[0]
    cdef unsigned long long n_sub = (<unsigned long long>1) << n_exact
    cdef unsigned long long s
    cdef Py_ssize_t j, bit
    cdef int par = 0
    cdef long double signed_w
    cdef real_t shifted, lae

    for j in range(n_dis):
        a_vec[j] = base[j]
        num[j] = 0.0
    for s in range(n_sub):
        if s:
            bit = __builtin_ctzll(s)
            if (s ^ (s >> 1)) & ((<unsigned long long>1) << bit):
                for j in range(n_dis):
                    a_vec[j] -= theta_e[bit, j]
            else:
                for j in range(n_dis):
                    a_vec[j] += theta_e[bit, j]
            par ^= 1
        signed_w = expl(<long double>term_log[s] - peak)
        if par:
            signed_w = -signed_w
        for j in range(n_dis):
            shifted = log_p[j] + a_vec[j]
            lae = _lae(log_1mp[j], shifted)
            if real_t is double:
                num[j] += signed_w * <long double>exp(shifted - lae)
            else:
                num[j] += signed_w * expl(<long double>(shifted - lae))


def signed_subset_eval(theta0_e_arr, theta_e_arr, base_arr, log_p_arr, log_1mp_arr,
                       bint want_marginals=False, double tol=1e-9):
    theta0_np = np.ascontiguousarray(theta0_e_arr, dtype=np.float64)
    theta_np = np.ascontiguousarray(
        np.atleast_2d(np.asarray(theta_e_arr, dtype=np.float64)))
    base_np = np.ascontiguousarray(base_arr, dtype=np.float64)
    logp_np = np.ascontiguousarray(log_p_arr, dtype=np.float64)
    log1mp_np = np.ascontiguousarray(log_1mp_arr, dtype=np.float64)

    cdef Py_ssize_t n_exact = theta0_np.shape[0]
    cdef Py_ssize_t n_dis = base_np.shape[0]
    cdef unsigned long long n_sub = (<unsigned long long>1) << n_exact

    term_np = np.empty(n_sub, dtype=np.float64)
    parity_np = np.empty(n_sub, dtype=np.int8)
    work_np = np.empty(n_dis, dtype=np.float64)
    num_np = np.zeros(n_dis, dtype=np.longdouble)

    cdef double[::1] t0_d = theta0_np
    cdef double[:, ::1] te_d = theta_np
    cdef double[::1] base_d = base_np
    cdef double[::1] lp_d = logp_np
    cdef double[::1] l1_d = log1mp_np
    cdef double[::1] work_d = work_np
    cdef double[::1] term_d = term_np
    cdef signed char[::1] parity = parity_np
    cdef long double[::1] num = num_np

    cdef long double peak = 0.0
    cdef long double pos = 0.0, neg = 0.0
    cdef int ok
    cdef bint upgraded = False

    ok = _fill_terms(t0_d, te_d, base_d, lp_d, l1_d, work_d, term_d, parity, &peak)
    if not ok:
        raise NumericalError("non-finite term in signed subset sum")
    _signed_sums(term_d, parity, peak, &pos, &neg)

    cdef long double total = pos - neg
    cdef long double mass = pos + neg

    cdef long double[::1] t0_l, base_l, lp_l, l1_l, work_l, term_l
    cdef long double[:, ::1] te_l
    theta0_ld = theta_ld = base_ld = logp_ld = log1mp_ld = term_ld = work_ld = None
    if n_exact and mass > 0.0 and (total if total >= 0 else -total) < mass / RETRY_RATIO:
        upgraded = True
        theta0_ld = theta0_np.astype(np.longdouble)
        theta_ld = np.ascontiguousarray(theta_np.astype(np.longdouble))
        base_ld = base_np.astype(np.longdouble)
        logp_ld = logp_np.astype(np.longdouble)
        log1mp_ld = log1mp_np.astype(np.longdouble)
        term_ld = np.empty(n_sub, dtype=np.longdouble)
        work_ld = np.empty(n_dis, dtype=np.longdouble)
        t0_l = theta0_ld
        te_l = theta_ld
        base_l = base_ld
        lp_l = logp_ld
        l1_l = log1mp_ld
        term_l = term_ld
        work_l = work_ld
        ok = _fill_terms(t0_l, te_l, base_l, lp_l, l1_l, work_l, term_l, parity, &peak)
        if not ok:
            raise NumericalError("non-finite term in signed subset sum")
        _signed_sums(term_l, parity, peak, &pos, &neg)
        total = pos - neg
        mass = pos + neg

    if total <= 0.0:
        if mass > 0.0 and total < -(<long double>tol) * mass:
            raise NumericalError(
                f"inclusion-exclusion normalizer is negative ({float(total):.3e} "
                f"relative to mass {float(mass):.3e})"
            )
        total = <long double>2.2250738585072014e-308
    cdef double log_norm = <double>(peak + logl(total))

    if not want_marginals:
        return log_norm, None

    if n_dis == 0:
        return log_norm, np.zeros(0, dtype=np.float64)

    if upgraded:
        _marginal_sums(te_l, base_l, lp_l, l1_l, work_l, term_l, parity, peak, num)
    else:
        _marginal_sums(te_d, base_d, lp_d, l1_d, work_d, term_d, parity, peak, num)
    marginals = np.clip((num_np / np.longdouble(total)).astype(np.float64), 0.0, 1.0)
    return log_norm, marginals
