"""Desk-scale ground truth.

``exact_gamma_d`` computes the maximum directional margin exactly: for
patterns separable through the origin it equals the distance from the origin
to the convex hull of the patterns, so we find the minimum-norm point of the
hull. The solver is the classic minimum-norm-point iteration: repeatedly
pull in the hull vertex with the smallest dot against the current point
(Gilbert's selection rule) and re-optimize over the current support set,
dropping vertices whose affine weight would go negative. This terminates on
a duality-gap criterion and shares no code with the training side.

``reference_train`` runs the literal unscaled update forms with strictly
single updates and no active sets; it is the behavioral oracle for
multiple-update, active-set, and representation-equivalence tests. Note the
constant-shrinking literal form scales like (1-eta*lam)^(-t) and will
overflow on long runs; that is exactly why the solver uses the shrunken
representation.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset, dense_matrix
from .errors import ConfigError, ConvergenceError
from .model import Hyperparams, TrainState
from .scheduler import RunResult

_REFERENCE_SIZE_CAP = 10_000


@dataclass
class GammaResult:
    gamma_d: float
    witness_u: np.ndarray
    gap: float
    separable: bool
    support: list[int]


def _affine_min_norm(Ys: np.ndarray) -> np.ndarray:
    """Weights of the minimum-norm point of the affine hull of the rows.

    Solves the stationarity system via the rank-one augmented Gram matrix;
    falls back to least squares on degenerate support sets.
    """
    G = Ys @ Ys.T
    A = G + 1.0
    rhs = np.ones(len(Ys))
    try:
        beta = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        beta = np.linalg.lstsq(A, rhs, rcond=None)[0]
    s = beta.sum()
    if s == 0 or not np.isfinite(s):
        beta = np.linalg.lstsq(A, rhs, rcond=None)[0]
        s = beta.sum()
        if s == 0 or not np.isfinite(s):
            raise np.linalg.LinAlgError("degenerate support set")
    return beta / s


def min_norm_point(Y: np.ndarray, rel_gap: float = 1e-10,
                   max_major: int | None = None
                   ) -> tuple[np.ndarray, list[int], np.ndarray, float]:
    """Minimum-norm point of the convex hull of the rows of Y.

    Returns (point, support indices, support weights, final duality gap in
    length units). The gap is ||p|| - min_k p.y_k/||p||; iteration stops once
    it falls below rel_gap * max ||y_k|| or the point collapses onto the
    origin (hull contains the origin).
    """
    m = Y.shape[0]
    norms2 = np.einsum("ij,ij->i", Y, Y)
    R = math.sqrt(float(norms2.max()))
    if R == 0.0:
        return np.zeros(Y.shape[1]), [0], np.array([1.0]), 0.0
    k0 = int(np.argmin(norms2))
    support = [k0]
    alpha = np.array([1.0])
    p = Y[k0].astype(np.float64).copy()
    if max_major is None:
        max_major = 100 * m + 2000
    gap = math.inf
    tiny = 1e-14
    for _ in range(max_major):
        pn2 = float(p @ p)
        pn = math.sqrt(pn2)
        if pn <= rel_gap * R:
            return p, support, alpha, 0.0
        dots = Y @ p
        v = int(np.argmin(dots))
        gap = pn - float(dots[v]) / pn
        if gap <= rel_gap * R:
            return p, support, alpha, gap
        if v not in support:
            support.append(v)
            alpha = np.append(alpha, 0.0)
        # Minor cycles: optimize over the affine hull of the support,
        # walking back toward the feasible simplex whenever weights
        # would go negative and dropping those vertices.
        while True:
            Ys = Y[support]
            try:
                beta = _affine_min_norm(Ys)
            except np.linalg.LinAlgError:
                keep = alpha > tiny
                if keep.sum() == len(support):
                    keep[np.argmin(alpha)] = False
                support = [s for s, k in zip(support, keep) if k]
                alpha = alpha[keep]
                alpha = alpha / alpha.sum()
                continue
            if np.all(beta > tiny):
                alpha = beta
                break
            move = alpha - beta
            mask = (beta <= tiny) & (move > 0)
            if not mask.any():
                # boundary weights cannot move further; drop them outright
                keep = beta > tiny
                if not keep.any():
                    keep[int(np.argmax(beta))] = True
                support = [s for s, k in zip(support, keep) if k]
                alpha = np.clip(beta[keep], 0.0, None)
                s = alpha.sum()
                alpha = alpha / s if s > 0 else np.full(len(support),
                                                        1.0 / len(support))
                continue
            theta = float(np.min(alpha[mask] / move[mask]))
            theta = min(1.0, max(0.0, theta))
            alpha = alpha + theta * (beta - alpha)
            keep = alpha > tiny
            if keep.all():
                # numerical corner: force the smallest one out
                keep[np.argmin(alpha)] = False
            support = [s for s, k in zip(support, keep) if k]
            alpha = alpha[keep]
            alpha = alpha / alpha.sum()
        p = alpha @ Y[support]
    raise ConvergenceError(
        f"minimum-norm-point iteration did not reach gap {rel_gap:g}*R "
        f"within {max_major} iterations (gap={gap:.3e})")


def exact_gamma_d(dataset: Dataset, rel_gap: float = 1e-10) -> GammaResult:
    """Exact maximum directional margin and its witness direction.

    gamma_d = ||p*|| with p* the minimum-norm point of the pattern hull.
    If the hull contains the origin the data are not separable through the
    origin; gamma_d is reported as 0 with a zero witness.
    """
    if dataset.m > _REFERENCE_SIZE_CAP:
        raise ConfigError(
            f"oracle is desk-scale only (m <= {_REFERENCE_SIZE_CAP})")
    Y = dense_matrix(dataset)
    p, support, alpha, gap = min_norm_point(Y, rel_gap=rel_gap)
    norm = float(np.linalg.norm(p))
    if norm <= rel_gap * dataset.radius_R * 10:
        return GammaResult(gamma_d=0.0, witness_u=np.zeros(dataset.dim),
                           gap=gap, separable=False, support=support)
    u = p / norm
    return GammaResult(gamma_d=norm, witness_u=u, gap=gap, separable=True,
                       support=support)


def exhaustive_gamma_d(dataset: Dataset) -> tuple[float, np.ndarray]:
    """Brute-force cross-check for m <= 6: the minimum-norm point lies in
    the relative interior of some support subset, so scan every nonempty
    subset's affine minimizer and keep the best feasible one."""
    if dataset.m > 6:
        raise ConfigError("exhaustive search is limited to m <= 6")
    Y = dense_matrix(dataset)
    best_norm = math.inf
    best_p: np.ndarray | None = None
    for r in range(1, dataset.m + 1):
        for subset in itertools.combinations(range(dataset.m), r):
            Ys = Y[list(subset)]
            try:
                beta = _affine_min_norm(Ys)
            except np.linalg.LinAlgError:
                continue
            if np.any(beta < -1e-12):
                continue
            beta = np.clip(beta, 0.0, None)
            beta = beta / beta.sum()
            z = beta @ Ys
            zn = float(np.linalg.norm(z))
            if zn < best_norm:
                best_norm = zn
                best_p = z
    assert best_p is not None
    if best_norm <= 1e-12 * dataset.radius_R:
        return 0.0, np.zeros(dataset.dim)
    return best_norm, best_p / best_norm


def reference_train(dataset: Dataset, hp: Hyperparams, algo: str,
                    max_passes: int = 1_000_000) -> RunResult:
    """Literal-form trainer: strictly single updates, dataset order, no
    active sets. For constant shrinking this runs the unscaled equivalent
    form whose coefficients blow up like (1-eta*lam)^(-t)."""
    if dataset.m > _REFERENCE_SIZE_CAP:
        raise ConfigError(
            f"reference trainer is desk-scale only (m <= {_REFERENCE_SIZE_CAP})")
    if algo not in ("mpcs", "mpvs", "perceptron"):
        raise ConfigError(f"unknown algorithm {algo!r}")
    m = dataset.m
    indptr, indices, values = dataset.indptr, dataset.indices, dataset.values
    w = np.zeros(dataset.dim, dtype=np.float64)
    t = 0
    powersum = 0.0
    presentations = 0
    full_passes = 0
    converged = False
    log_om = math.log1p(-hp.eta * hp.lam) if algo == "mpcs" else 0.0
    start = time.perf_counter()
    while full_passes < max_passes:
        updates = 0
        full_passes += 1
        for k in range(m):
            if t >= hp.max_updates:
                break
            presentations += 1
            lo, hi = int(indptr[k]), int(indptr[k + 1])
            dot = 0.0
            for i in range(lo, hi):
                dot += w[indices[i]] * values[i]
            if algo == "mpcs":
                thr = hp.b * math.exp(-(t - 1) * log_om)
                coef = hp.eta * math.exp(-t * log_om)
                rate_pow = 0.0
            elif algo == "mpvs":
                rate_pow = float(t + 1) ** hp.n
                thr = hp.b * rate_pow
                coef = hp.eta * rate_pow
            else:
                thr = hp.b
                coef = hp.eta
                rate_pow = 1.0
            if dot <= thr:
                w[indices[lo:hi]] += coef * values[lo:hi]
                t += 1
                updates += 1
                powersum += rate_pow if algo == "mpvs" else 1.0
        if updates == 0:
            converged = True
            break
        if t >= hp.max_updates:
            break
    wall = time.perf_counter() - start
    state = TrainState(w=w, t=t, powersum=powersum,
                       updates_this_pass=0, total_presentations=presentations,
                       normsq=float(w @ w), max_normsq=float(w @ w))
    return RunResult(converged=converged, state=state, t_c=t,
                     full_passes=full_passes, wall_time=wall)


def descale_mpcs(w_shrunken: np.ndarray, t: int, hp: Hyperparams) -> np.ndarray:
    """Map a shrunken-representation vector to the unscaled form,
    a = a_s / (1-eta*lam)^(t-1), with the power taken in log space."""
    if hp.lam == 0.0 or t == 0:
        return w_shrunken.copy()
    scale = math.exp(-(t - 1) * math.log1p(-hp.eta * hp.lam))
    return w_shrunken * scale
