"""Epoch driver: full passes, two-level nested active sets, convergence.

The loop structure is: a full updating pass over all patterns selects the
first-level active set through the slackened condition (dot within ``cbar``
times the current threshold at visit time); that set is cycled ``nep1``
times, each cycle selecting a second-level set the same way and cycling it
``nep2`` times; then a fresh full pass updates and rebuilds the first level.
Convergence is declared only by a full pass that triggers zero updates, so
active sets can never change the verdict. Presentation order is dataset
order by default; shuffling draws a fresh permutation per pass from a
seeded generator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backend
from .data import Dataset
from .errors import ConfigError
from .model import Hyperparams, TrainState, validate_hyperparams

ProgressFn = Callable[[int, int, float], None]


@dataclass
class ActiveSets:
    """Nested pattern-index subsets selected by the slackened condition."""

    level1: np.ndarray
    level2: np.ndarray
    epochs_level1: int = 0
    epochs_level2: int = 0
    presentations: int = 0
    updates: int = 0


@dataclass
class RunResult:
    converged: bool
    state: TrainState
    t_c: int
    full_passes: int
    wall_time: float


def _algo_code(algo: str, hp: Hyperparams, K) -> tuple[int, float, int]:
    """Kernel dispatch: degenerate settings run the classical-perceptron core
    so that lam=0 / n=0 trajectories are bit-identical by construction."""
    if algo == "perceptron":
        return K.ALGO_PERCEPTRON, 0.0, 0
    if algo == "mpcs":
        if hp.lam == 0.0:
            return K.ALGO_PERCEPTRON, 0.0, 0
        return K.ALGO_MPCS, hp.lam, 0
    if algo == "mpvs":
        if hp.n == 0:
            return K.ALGO_PERCEPTRON, 0.0, 0
        return K.ALGO_MPVS, 0.0, int(hp.n)
    raise ConfigError(f"unknown algorithm {algo!r}")


def train(dataset: Dataset, hp: Hyperparams, algo: str,
          order: str = "seq", seed: int | None = None,
          use_active_sets: bool = True,
          progress: ProgressFn | None = None,
          kernels=None) -> RunResult:
    """Run one training session to convergence or to the update budget.

    Returns converged=True only after a clean full pass (zero updates over
    all m patterns). Identical inputs, order policy, and seed give
    bit-identical weights.
    """
    validate_hyperparams(hp, dataset, algo)
    if order not in ("seq", "shuffle"):
        raise ConfigError(f"order must be 'seq' or 'shuffle', got {order!r}")
    K = kernels if kernels is not None else backend.kernels
    code, lam, n = _algo_code(algo, hp, K)

    m = dataset.m
    w = np.zeros(dataset.dim, dtype=np.float64)
    t = 0
    powersum = 0.0
    normsq = 0.0
    max_normsq = 0.0
    budget = hp.max_updates
    shuffled = order == "shuffle"
    rng = np.random.default_rng(seed) if shuffled else None
    full_rows = np.arange(m, dtype=np.int64)
    sel1 = np.empty(m, dtype=np.int64) if use_active_sets else None
    sel2 = np.empty(m, dtype=np.int64) if use_active_sets else None

    full_passes = 0
    presentations = 0
    last_full_updates = 0
    converged = False
    start = time.perf_counter()

    def do_pass(rows, cbar, sel_buf):
        nonlocal t, powersum, normsq, max_normsq, presentations
        res = K.run_pass(code, w, dataset.indptr, dataset.indices,
                         dataset.values, dataset.sqnorms, rows,
                         hp.eta, hp.b, lam, n, hp.lup,
                         t, powersum, normsq, max_normsq, budget,
                         cbar, sel_buf)
        t, powersum, normsq, max_normsq = res[0], res[1], res[2], res[3]
        presentations += res[5]
        return res[4], res[6], res[7], res[8]  # updates, n_sel, min_dot, bhit

    while True:
        rows = rng.permutation(full_rows) if shuffled else full_rows
        cbar = hp.cbar if use_active_sets else -1.0
        upd, n1, min_dot, bhit = do_pass(rows, cbar, sel1)
        full_passes += 1
        last_full_updates = upd
        # Resync the running ||w||^2 at pass boundaries so incremental drift
        # cannot accumulate across a whole run.
        normsq = float(np.dot(w, w))
        if normsq > max_normsq:
            max_normsq = normsq
        if progress is not None:
            est = min_dot / math.sqrt(normsq) if normsq > 0 else 0.0
            progress(full_passes, t, est)
        if bhit:
            break
        if upd == 0:
            converged = True
            break
        if t >= budget:
            break
        if not use_active_sets or n1 == 0:
            continue
        level1 = sel1[:n1].copy()
        stop = False
        for _ in range(hp.nep1):
            rows1 = rng.permutation(level1) if shuffled else level1
            upd1, n2, _, bhit = do_pass(rows1, hp.cbar, sel2)
            if bhit or t >= budget:
                stop = True
                break
            if upd1 == 0:
                # Nothing moved, so the freshly selected level2 cannot
                # contain violators either; hand back to the full pass.
                break
            if n2 == 0:
                continue
            level2 = sel2[:n2].copy()
            for _ in range(hp.nep2):
                rows2 = rng.permutation(level2) if shuffled else level2
                upd2, _, _, bhit = do_pass(rows2, -1.0, None)
                if bhit or t >= budget:
                    stop = True
                    break
                if upd2 == 0:
                    break
            if stop:
                break
        if stop:
            break

    wall = time.perf_counter() - start
    state = TrainState(w=w, t=t, powersum=powersum,
                       updates_this_pass=last_full_updates,
                       total_presentations=presentations,
                       normsq=normsq, max_normsq=max_normsq)
    return RunResult(converged=converged, state=state, t_c=t,
                     full_passes=full_passes, wall_time=wall)


def build_active_sets(dataset: Dataset, state: TrainState, hp: Hyperparams,
                      algo: str, kernels=None) -> ActiveSets:
    """Read-only selection of the nested active sets at the current state.

    A row enters level1 when its dot sits within ``cbar`` times the
    algorithm's current threshold; level2 applies the same rule over level1.
    (During training the live selection happens inside updating passes, so
    level2 generally shrinks below level1 there.)
    """
    K = kernels if kernels is not None else backend.kernels
    if algo == "mpvs" and hp.n > 0:
        thr = hp.b * K.ipow(float(state.t + 1), int(hp.n))
    else:
        thr = hp.b
    limit = hp.cbar * thr

    def select(rows):
        out = []
        for k in rows:
            lo, hi = int(dataset.indptr[k]), int(dataset.indptr[k + 1])
            dot = K.dot_sparse(state.w, dataset.indices, dataset.values, lo, hi)
            if dot <= limit:
                out.append(k)
        return np.asarray(out, dtype=np.int64)

    level1 = select(range(dataset.m))
    level2 = select(level1)
    return ActiveSets(level1=level1, level2=level2)


def count_margin_errors(dataset: Dataset, state: TrainState, hp: Hyperparams,
                        algo: str, kernels=None) -> int:
    """Full-dataset verification scan: how many rows still trigger the
    update condition at the current state."""
    K = kernels if kernels is not None else backend.kernels
    if algo == "mpvs" and hp.n > 0:
        thr = hp.b * K.ipow(float(state.t + 1), int(hp.n))
    else:
        thr = hp.b
    errors = 0
    for k in range(dataset.m):
        lo, hi = int(dataset.indptr[k]), int(dataset.indptr[k + 1])
        dot = K.dot_sparse(state.w, dataset.indices, dataset.values, lo, hi)
        if dot <= thr:
            errors += 1
    return errors
