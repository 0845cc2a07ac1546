# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled training-pass kernels (hot-loop backend).

Twin of ``_pykernels.py``. Every arithmetic expression must stay
operation-for-operation identical to the pure-Python module: the two
backends are required to produce bit-identical trajectories and tests
enforce that. Compile with -ffp-contract=off so no multiply-add fusion
changes the rounding.
"""

from libc.math cimport INFINITY, exp, floor, log1p
from libc.stdint cimport int64_t

BACKEND_NAME = "cython"

ALGO_PERCEPTRON = 0
ALGO_MPCS = 1
ALGO_MPVS = 2


cdef inline double _ipow(double x, int64_t n) noexcept:
    cdef double r = 1.0
    cdef int64_t i
    for i in range(n):
        r *= x
    return r


def ipow(double x, long n):
    """x**n by n-fold left-to-right multiplication, n >= 0."""
    return _ipow(x, n)


def dot_sparse(double[::1] w, int64_t[::1] idx, double[::1] val,
               long lo, long hi):
    """Sequential-order sparse dot of w with entries [lo, hi)."""
    cdef double s = 0.0
    cdef long i
    for i in range(lo, hi):
        s += w[idx[i]] * val[i]
    return s


def scan_min_dot(double[::1] w, int64_t[::1] indptr, int64_t[::1] idx,
                 double[::1] val, int64_t[::1] rows):
    """(min dot, row) over the given rows; first minimum in scan order wins."""
    cdef double best = INFINITY
    cdef double s
    cdef int64_t best_row = -1
    cdef int64_t r, k, i
    for r in range(rows.shape[0]):
        k = rows[r]
        s = 0.0
        for i in range(indptr[k], indptr[k + 1]):
            s += w[idx[i]] * val[i]
        if s < best:
            best = s
            best_row = k
    return best, best_row


def run_pass(long algo, double[::1] w,
             int64_t[::1] indptr, int64_t[::1] idx, double[::1] val,
             double[::1] sqn, int64_t[::1] rows,
             double eta, double b, double lam, long n, long lup,
             long t, double powersum, double normsq, double max_normsq,
             long budget, double cbar, sel_out):
    """One presentation pass over ``rows``, updating ``w`` in place.

    Returns (t, powersum, normsq, max_normsq, updates, presented, n_sel,
    min_dot, budget_hit). When ``cbar > 0`` and ``sel_out`` is given, rows
    whose post-visit dot is within ``cbar`` times the current threshold are
    recorded into ``sel_out`` (active-set selection).
    """
    cdef int64_t[::1] sel
    cdef bint do_select = 0
    if cbar > 0.0 and sel_out is not None:
        sel = sel_out
        do_select = 1
    cdef long dim = w.shape[0]
    cdef long updates = 0, presented = 0, n_sel = 0
    cdef bint budget_hit = 0
    cdef double min_dot = INFINITY
    cdef double log_om = 0.0
    if algo == ALGO_MPCS:
        log_om = log1p(-eta * lam)
    cdef double flup = <double> lup
    cdef int64_t r, k, i
    cdef long j, mu
    cdef int64_t lo, hi
    cdef double dot, sq, thr, thr_now, mu_f, coef, shrink, coefy
    cdef double S, nxt, esq, dot_after
    for r in range(rows.shape[0]):
        if t >= budget:
            budget_hit = 1
            break
        k = rows[r]
        presented += 1
        lo = indptr[k]
        hi = indptr[k + 1]
        dot = 0.0
        for i in range(lo, hi):
            dot += w[idx[i]] * val[i]
        sq = sqn[k]
        if algo == ALGO_MPVS:
            thr = b * _ipow(<double> (t + 1), n)
        else:
            thr = b
        thr_now = thr
        dot_after = dot
        if dot <= thr:
            updates += 1
            if algo == ALGO_PERCEPTRON:
                mu_f = floor((b - dot) / (eta * sq)) + 1.0
                if mu_f >= flup:
                    mu = lup
                else:
                    mu = <long> mu_f
                    if mu < 1:
                        mu = 1
                coef = eta * (<double> mu)
                for i in range(lo, hi):
                    w[idx[i]] += coef * val[i]
                normsq = normsq + 2.0 * coef * dot + coef * coef * sq
                t += mu
                powersum += <double> mu
                dot_after = dot + coef * sq
            elif algo == ALGO_MPCS:
                mu_f = floor(
                    log1p(lam * (b - dot) / (sq - lam * b)) / (-log_om)) + 1.0
                if mu_f >= flup:
                    mu = lup
                else:
                    mu = <long> mu_f
                    if mu < 1:
                        mu = 1
                shrink = exp((<double> mu) * log_om)
                coefy = (1.0 - shrink) / lam
                for j in range(dim):
                    w[j] *= shrink
                for i in range(lo, hi):
                    w[idx[i]] += coefy * val[i]
                normsq = ((shrink * shrink) * normsq
                          + 2.0 * (shrink * coefy) * dot + (coefy * coefy) * sq)
                t += mu
                dot_after = shrink * dot + coefy * sq
            else:
                mu = 1
                S = _ipow(<double> (t + 1), n)
                esq = eta * sq
                while mu < lup:
                    nxt = <double> (t + mu + 1)
                    if dot + esq * S <= b * _ipow(nxt, n):
                        mu += 1
                        S += _ipow(nxt, n)
                    else:
                        break
                coef = eta * S
                for i in range(lo, hi):
                    w[idx[i]] += coef * val[i]
                normsq = normsq + 2.0 * coef * dot + coef * coef * sq
                t += mu
                powersum += S
                dot_after = dot + coef * sq
                thr_now = b * _ipow(<double> (t + 1), n)
            if normsq > max_normsq:
                max_normsq = normsq
        if dot_after < min_dot:
            min_dot = dot_after
        if do_select and dot_after <= cbar * thr_now:
            sel[n_sel] = k
            n_sel += 1
    return (t, powersum, normsq, max_normsq, updates, presented, n_sel,
            min_dot, budget_hit)
