"""Pure-Python training-pass kernels (fallback backend).

This module is the twin of ``_ckernels.pyx``. The two backends must produce
bit-identical trajectories, so every arithmetic expression here is written
operation-for-operation like the compiled version: sequential-order dot
products, thresholds and multiplicities evaluated with the same libm calls
(`log1p`, `exp`, `floor`), and integer powers by left-to-right repeated
multiplication. Dense scaling and scattered adds may be vectorized because
they are element-wise (no reduction order involved).
"""

from __future__ import annotations

import math

BACKEND_NAME = "python"

ALGO_PERCEPTRON = 0
ALGO_MPCS = 1
ALGO_MPVS = 2


def ipow(x: float, n: int) -> float:
    """x**n by n-fold left-to-right multiplication, n >= 0."""
    r = 1.0
    for _ in range(n):
        r *= x
    return r


def dot_sparse(w, idx, val, lo: int, hi: int) -> float:
    """Sequential-order sparse dot of w with entries [lo, hi)."""
    s = 0.0
    for i in range(lo, hi):
        s += w[idx[i]] * val[i]
    return float(s)


def scan_min_dot(w, indptr, idx, val, rows):
    """(min dot, row) over the given rows; first minimum in scan order wins."""
    best = math.inf
    best_row = -1
    for r in range(len(rows)):
        k = rows[r]
        s = 0.0
        for i in range(indptr[k], indptr[k + 1]):
            s += w[idx[i]] * val[i]
        if s < best:
            best = s
            best_row = k
    return float(best), int(best_row)


def run_pass(algo, w, indptr, idx, val, sqn, rows, eta, b, lam, n, lup,
             t, powersum, normsq, max_normsq, budget, cbar, sel_out):
    """One presentation pass over ``rows``, updating ``w`` in place.

    Returns (t, powersum, normsq, max_normsq, updates, presented, n_sel,
    min_dot, budget_hit). When ``cbar > 0`` and ``sel_out`` is given, rows
    whose post-visit dot is within ``cbar`` times the current threshold are
    recorded into ``sel_out`` (active-set selection).
    """
    do_select = cbar > 0.0 and sel_out is not None
    updates = 0
    presented = 0
    n_sel = 0
    budget_hit = False
    min_dot = math.inf
    log_om = math.log1p(-eta * lam) if algo == ALGO_MPCS else 0.0
    flup = float(lup)
    for r in range(len(rows)):
        if t >= budget:
            budget_hit = True
            break
        k = rows[r]
        presented += 1
        lo = indptr[k]
        hi = indptr[k + 1]
        dot = 0.0
        for i in range(lo, hi):
            dot += w[idx[i]] * val[i]
        dot = float(dot)
        sq = float(sqn[k])
        if algo == ALGO_MPVS:
            thr = b * ipow(float(t + 1), n)
        else:
            thr = b
        thr_now = thr
        dot_after = dot
        if dot <= thr:
            updates += 1
            if algo == ALGO_PERCEPTRON:
                mu_f = math.floor((b - dot) / (eta * sq)) + 1.0
                if mu_f >= flup:
                    mu = lup
                else:
                    mu = int(mu_f)
                    if mu < 1:
                        mu = 1
                coef = eta * float(mu)
                w[idx[lo:hi]] += coef * val[lo:hi]
                normsq = normsq + 2.0 * coef * dot + coef * coef * sq
                t += mu
                powersum += float(mu)
                dot_after = dot + coef * sq
            elif algo == ALGO_MPCS:
                mu_f = math.floor(
                    math.log1p(lam * (b - dot) / (sq - lam * b)) / (-log_om)) + 1.0
                if mu_f >= flup:
                    mu = lup
                else:
                    mu = int(mu_f)
                    if mu < 1:
                        mu = 1
                shrink = math.exp(float(mu) * log_om)
                coefy = (1.0 - shrink) / lam
                w *= shrink
                w[idx[lo:hi]] += coefy * val[lo:hi]
                normsq = ((shrink * shrink) * normsq
                          + 2.0 * (shrink * coefy) * dot + (coefy * coefy) * sq)
                t += mu
                dot_after = shrink * dot + coefy * sq
            else:
                mu = 1
                S = ipow(float(t + 1), n)
                esq = eta * sq
                while mu < lup:
                    nxt = float(t + mu + 1)
                    if dot + esq * S <= b * ipow(nxt, n):
                        mu += 1
                        S += ipow(nxt, n)
                    else:
                        break
                coef = eta * S
                w[idx[lo:hi]] += coef * val[lo:hi]
                normsq = normsq + 2.0 * coef * dot + coef * coef * sq
                t += mu
                powersum += S
                dot_after = dot + coef * sq
                thr_now = b * ipow(float(t + 1), n)
            if normsq > max_normsq:
                max_normsq = normsq
        if dot_after < min_dot:
            min_dot = dot_after
        if do_select and dot_after <= cbar * thr_now:
            sel_out[n_sel] = k
            n_sel += 1
    return (t, powersum, normsq, max_normsq, updates, presented, n_sel,
            min_dot, budget_hit)
