"""Single-step update operations for both shrinking solvers.

These are the reference, per-pattern forms of the updates; the training
kernels in ``_ckernels``/``_pykernels`` inline the same expressions. The
constant-shrinking solver works in the shrunken representation, whose
condition is simply ``w.y <= b`` against a constant threshold and whose norm
stays bounded over any run; the equivalent unscaled form would grow like
(1 - eta*lam)^(-t) and overflow. The variable-shrinking solver keeps the
plain vector: its growth is polynomial in t and safe in doubles at desk
scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .data import Pattern, sparse_dot
from .errors import ConfigError
from .model import Hyperparams, TrainState


@dataclass(frozen=True)
class McpsStep:
    """Record of one applied constant-shrinking update."""

    pattern_index: int
    mu: int
    dot_before: float
    t_before: int


# -- classical perceptron with margin (the lam = 0 / n = 0 degenerate core) --

def perceptron_condition(state: TrainState, pattern: Pattern,
                         hp: Hyperparams) -> bool:
    return sparse_dot(state.w, pattern) <= hp.b


def perceptron_max_multiplicity(dot_before: float, sq_norm: float,
                                hp: Hyperparams) -> int:
    """Largest number of stacked unit steps that are each margin errors."""
    if dot_before > hp.b:
        raise ConfigError("pattern is not a margin error (dot > b)")
    mu_f = math.floor((hp.b - dot_before) / (hp.eta * sq_norm)) + 1.0
    if mu_f >= float(hp.lup):
        return hp.lup
    mu = int(mu_f)
    return mu if mu >= 1 else 1


def perceptron_apply(state: TrainState, pattern: Pattern, mu: int,
                     hp: Hyperparams) -> TrainState:
    coef = hp.eta * float(mu)
    state.w[pattern.indices] += coef * pattern.values
    state.t += mu
    state.powersum += float(mu)
    return state


# -- constant shrinking (shrunken representation) ----------------------------

def mpcs_condition(state: TrainState, pattern: Pattern, hp: Hyperparams) -> bool:
    """Margin-error test: shrunken dot at most the constant threshold b."""
    return sparse_dot(state.w, pattern) <= hp.b


def mpcs_max_multiplicity(dot_before: float, sq_norm: float,
                          hp: Hyperparams) -> int:
    """Multiplicity of the just-violating multiple update, capped at lup.

    The shrunken dot after j stacked updates follows a linear contraction
    toward sq_norm/lam, so the largest legal j solves a single log; lam = 0
    degenerates to the classical arithmetic-progression count.
    """
    if hp.lam == 0.0:
        return perceptron_max_multiplicity(dot_before, sq_norm, hp)
    if dot_before > hp.b:
        raise ConfigError("pattern is not a margin error (dot > b)")
    if sq_norm - hp.lam * hp.b <= 0:
        raise ConfigError(
            f"||y||^2 - lambda*b = {sq_norm - hp.lam * hp.b} must be > 0 "
            "(lambda too large)")
    if hp.eta * hp.lam >= 1:
        raise ConfigError("eta*lambda must be < 1")
    log_om = math.log1p(-hp.eta * hp.lam)
    mu_f = math.floor(
        math.log1p(hp.lam * (hp.b - dot_before) / (sq_norm - hp.lam * hp.b))
        / (-log_om)) + 1.0
    if mu_f >= float(hp.lup):
        return hp.lup
    mu = int(mu_f)
    return mu if mu >= 1 else 1


def mpcs_apply(state: TrainState, pattern: Pattern, mu: int,
               hp: Hyperparams) -> TrainState:
    """Apply a multiplicity-mu update in the shrunken representation.

    Equals mu chained single updates: the whole vector shrinks by
    (1-eta*lam)^mu and the pattern is added with the geometric-series
    coefficient (1-(1-eta*lam)^mu)/lam. The power goes through exp/log so
    large mu does not accumulate pow-loop drift.
    """
    if mu < 1:
        raise ConfigError(f"mu must be >= 1, got {mu}")
    if hp.lam == 0.0:
        return perceptron_apply(state, pattern, mu, hp)
    log_om = math.log1p(-hp.eta * hp.lam)
    shrink = math.exp(float(mu) * log_om)
    coefy = (1.0 - shrink) / hp.lam
    state.w *= shrink
    state.w[pattern.indices] += coefy * pattern.values
    state.t += mu
    return state


def mpcs_step(state: TrainState, pattern: Pattern,
              hp: Hyperparams) -> McpsStep | None:
    """Condition + multiplicity + apply; None when no margin error."""
    dot = sparse_dot(state.w, pattern)
    if dot > hp.b:
        return None
    t_before = state.t
    mu = mpcs_max_multiplicity(dot, pattern.sq_norm, hp)
    mpcs_apply(state, pattern, mu, hp)
    return McpsStep(pattern_index=pattern.source_row, mu=mu,
                    dot_before=dot, t_before=t_before)


# -- variable shrinking -------------------------------------------------------

def _ipow(x: float, n: int) -> float:
    r = 1.0
    for _ in range(n):
        r *= x
    return r


def mpvs_condition(state: TrainState, pattern: Pattern, hp: Hyperparams) -> bool:
    """Margin-error test against the growing threshold b*(t+1)^n."""
    return sparse_dot(state.w, pattern) <= hp.b * _ipow(float(state.t + 1), hp.n)


def mpvs_max_multiplicity(state: TrainState, pattern: Pattern,
                          hp: Hyperparams) -> tuple[int, float]:
    """(mu, sum of i^n over the mu constituent steps), mu capped at lup.

    Found by an exact incremental scan: each candidate step j is legal only
    if the dot after the previous j steps still sits at or below the
    threshold at that step's own index. The scan stops at the first illegal
    step, costs O(1) scalar work per candidate, and is exact for every n
    (the closed-form root only exists for small exponents). n = 0 is the
    linear case and uses the classical closed form directly.
    """
    dot = sparse_dot(state.w, pattern)
    t = state.t
    if hp.n == 0:
        if dot > hp.b:
            raise ConfigError("pattern is not a margin error")
        mu = perceptron_max_multiplicity(dot, pattern.sq_norm, hp)
        return mu, float(mu)
    if dot > hp.b * _ipow(float(t + 1), hp.n):
        raise ConfigError("pattern is not a margin error")
    sq = pattern.sq_norm
    mu = 1
    S = _ipow(float(t + 1), hp.n)
    esq = hp.eta * sq
    while mu < hp.lup:
        nxt = float(t + mu + 1)
        if dot + esq * S <= hp.b * _ipow(nxt, hp.n):
            mu += 1
            S += _ipow(nxt, hp.n)
        else:
            break
    return mu, S


def mpvs_apply(state: TrainState, pattern: Pattern, mu: int, sum_jn: float,
               hp: Hyperparams) -> TrainState:
    """Apply mu stacked updates at once: w += eta * sum_jn * y."""
    if mu < 1:
        raise ConfigError(f"mu must be >= 1, got {mu}")
    coef = hp.eta * sum_jn
    state.w[pattern.indices] += coef * pattern.values
    state.t += mu
    state.powersum += sum_jn
    return state
