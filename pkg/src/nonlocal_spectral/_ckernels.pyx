# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels (GMP fixed-point series, spline lookup, stencils).

Semantics mirror ``_pykernels`` exactly; see the docstrings there.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log2, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

NAME = "cython"

cdef extern from "gmp.h":
    ctypedef struct __mpz_struct:
        pass
    ctypedef __mpz_struct mpz_t[1]
    ctypedef __mpz_struct* mpz_ptr
    void mpz_init(mpz_t)
    void mpz_clear(mpz_t)
    int mpz_set_str(mpz_t, const char*, int)
    char* mpz_get_str(char*, int, const mpz_t)
    void mpz_set(mpz_t, const mpz_t)
    void mpz_set_ui(mpz_t, unsigned long)
    void mpz_mul(mpz_t, const mpz_t, const mpz_t)
    void mpz_mul_ui(mpz_t, const mpz_t, unsigned long)
    void mpz_add(mpz_t, const mpz_t, const mpz_t)
    void mpz_neg(mpz_t, const mpz_t)
    void mpz_tdiv_q(mpz_t, const mpz_t, const mpz_t)
    void mpz_mul_2exp(mpz_t, const mpz_t, unsigned long)
    int mpz_sgn(const mpz_t)
    size_t mpz_sizeinbase(const mpz_t, int)
    double mpz_get_d_2exp(long*, const mpz_t)


cdef void _set_int(mpz_t dst, object value):
    s = format(int(value), "x").encode("ascii")
    mpz_set_str(dst, s, 16)


cdef object _get_int(mpz_t src):
    cdef size_t size = mpz_sizeinbase(src, 16) + 2
    cdef char* buf = <char*> malloc(size)
    if buf == NULL:
        raise MemoryError()
    try:
        mpz_get_str(buf, 16, src)
        return int(buf.decode("ascii"), 16)
    finally:
        free(buf)


cdef inline double _mpz_log2(mpz_t x):
    cdef long e = 0
    cdef double d = mpz_get_d_2exp(&e, x)
    if d < 0:
        d = -d
    return log2(d) + e


cdef inline double _log2_add(double a, double b):
    cdef double tmp
    if a < b:
        tmp = a
        a = b
        b = tmp
    if b == -INFINITY:
        return a
    return a + log2(1.0 + 2.0 ** (b - a))


def hypsum_fixed(anum, aden, bnum, bden, znum, zden, long prec, long kmin, long maxterms):
    cdef int na = len(anum)
    cdef int nb = len(bnum)
    cdef int i
    cdef long k = 0
    cdef double lr, err_term = -INFINITY, err_sum = -INFINITY, err
    cdef bint converged = False
    cdef mpz_t num0, den0, num, den, t, total, tmp, x
    cdef __mpz_struct* ap = <__mpz_struct*> malloc(na * sizeof(__mpz_struct))
    cdef __mpz_struct* aq = <__mpz_struct*> malloc(na * sizeof(__mpz_struct))
    cdef __mpz_struct* bp = <__mpz_struct*> malloc(nb * sizeof(__mpz_struct))
    cdef __mpz_struct* bq = <__mpz_struct*> malloc(nb * sizeof(__mpz_struct))
    if ap == NULL or aq == NULL or bp == NULL or bq == NULL:
        free(ap); free(aq); free(bp); free(bq)
        raise MemoryError()
    for i in range(na):
        mpz_init(&ap[i]); mpz_init(&aq[i])
        _set_int(&ap[i], anum[i]); _set_int(&aq[i], aden[i])
    for i in range(nb):
        mpz_init(&bp[i]); mpz_init(&bq[i])
        _set_int(&bp[i], bnum[i]); _set_int(&bq[i], bden[i])
    mpz_init(num0); mpz_init(den0); mpz_init(num); mpz_init(den)
    mpz_init(t); mpz_init(total); mpz_init(tmp); mpz_init(x)
    try:
        _set_int(num0, znum)
        _set_int(den0, zden)
        for i in range(nb):
            mpz_mul(num0, num0, &bq[i])
        for i in range(na):
            mpz_mul(den0, den0, &aq[i])
        mpz_set_ui(t, 1)
        mpz_mul_2exp(t, t, prec)
        mpz_set(total, t)
        while k < maxterms:
            mpz_set(num, num0)
            for i in range(na):
                mpz_mul_ui(tmp, &aq[i], k)
                mpz_add(tmp, tmp, &ap[i])
                mpz_mul(num, num, tmp)
            mpz_mul_ui(den, den0, k + 1)
            for i in range(nb):
                mpz_mul_ui(tmp, &bq[i], k)
                mpz_add(tmp, tmp, &bp[i])
                mpz_mul(den, den, tmp)
            if mpz_sgn(num) == 0:
                mpz_set_ui(t, 0)
                k += 1
                converged = True
                break
            if mpz_sgn(den) < 0:
                mpz_neg(num, num)
                mpz_neg(den, den)
            mpz_mul(x, t, num)
            mpz_tdiv_q(t, x, den)
            mpz_add(total, total, t)
            k += 1
            lr = _mpz_log2(num) - _mpz_log2(den)
            err_term = _log2_add(err_term + lr, 0.0)
            err_sum = _log2_add(err_sum, err_term)
            if mpz_sgn(t) == 0 and k >= kmin:
                converged = True
                break
        err = _log2_add(err_sum, err_term + 1.0) + 1e-9
        return _get_int(total), k + 1, err, bool(converged)
    finally:
        for i in range(na):
            mpz_clear(&ap[i]); mpz_clear(&aq[i])
        for i in range(nb):
            mpz_clear(&bp[i]); mpz_clear(&bq[i])
        free(ap); free(aq); free(bp); free(bq)
        mpz_clear(num0); mpz_clear(den0); mpz_clear(num); mpz_clear(den)
        mpz_clear(t); mpz_clear(total); mpz_clear(tmp); mpz_clear(x)


def spline_eval(double[::1] x, double[::1] y, double[::1] y2, q):
    qa = np.ascontiguousarray(q, dtype=np.float64)
    out = np.empty_like(qa)
    cdef double[::1] qv = qa.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t m = x.shape[0], nq = qv.shape[0], j, lo, hi, mid
    cdef double v, h, a, b
    for j in range(nq):
        v = qv[j]
        lo = 0
        hi = m - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if x[mid] > v:
                hi = mid
            else:
                lo = mid
        h = x[hi] - x[lo]
        b = (v - x[lo]) / h
        a = 1.0 - b
        ov[j] = a * y[lo] + b * y[hi] + ((a * a * a - a) * y2[lo] + (b * b * b - b) * y2[hi]) * (h * h) / 6.0
    return out


def stencil_apply(u, a):
    ua = np.ascontiguousarray(u, dtype=np.float64)
    aa = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] uv = ua
    cdef double[::1] av = aa
    out = np.empty_like(ua)
    cdef double[::1] ov = out
    cdef Py_ssize_t n = uv.shape[0], r = av.shape[0] - 1, i, j, ip, im
    cdef double acc
    for i in range(n):
        acc = av[0] * uv[i]
        if r <= i < n - r:
            # interior: no wrap-around
            for j in range(1, r + 1):
                acc += av[j] * (uv[i + j] + uv[i - j])
        else:
            for j in range(1, r + 1):
                ip = (i + j) % n
                im = (i - j) % n
                if im < 0:
                    im += n
                acc += av[j] * (uv[ip] + uv[im])
        ov[i] = acc
    return out
