"""Theoretical guarantees: update-count bounds, margin-fraction bounds,
accuracy parameterizations, the staged shrinking-strength procedure, and the
power-sum inequalities backing the variable-shrinking analysis.

Conventions: delta = eta*R^2/b and epsilon measure how aggressively the
algorithm is tuned; gamma_d is the maximum directional margin (exact from
the oracle, or an estimate). Before-run bounds need only these parameters;
after-run bounds are computed from the finished run (t_c, ||a||, achieved
margin) and are typically much tighter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .data import Dataset
from .errors import ConfigError, ConvergenceError
from .model import Hyperparams, evaluate_margin
from .scheduler import RunResult, train


@dataclass
class BoundInputs:
    """Everything the closed-form bounds need."""

    R: float
    gamma_d: float
    eta: float
    b: float
    lam: float | None = None
    n: int | None = None
    delta_p: float = 0.0
    epsilon_p: float = 0.0
    zeta: float | None = None
    xi: float | None = None
    calA: float | None = None


def bound_inputs(algo: str, eta: float, b: float, R: float, gamma_d: float,
                 lam: float | None = None, n: int | None = None) -> BoundInputs:
    delta_p = eta * R * R / b
    if algo == "mpcs":
        if lam is None:
            raise ConfigError("mpcs bounds need lam")
        epsilon_p = 1.0 - lam * b / (gamma_d * gamma_d)
        calA = None
        if lam > 0:
            el = eta * lam
            calA = lam * (b / (gamma_d * gamma_d)) * (eta * R * R / b
                                                      + 2.0 * (1.0 - el)) / (2.0 - el)
        return BoundInputs(R=R, gamma_d=gamma_d, eta=eta, b=b, lam=lam,
                           delta_p=delta_p, epsilon_p=epsilon_p, calA=calA)
    if algo == "mpvs":
        if n is None:
            raise ConfigError("mpvs bounds need n")
        return BoundInputs(R=R, gamma_d=gamma_d, eta=eta, b=b, n=n,
                           delta_p=delta_p, epsilon_p=1.0 / (n + 1))
    raise ConfigError(f"no bounds for algo {algo!r}")


def mpcs_bounds(inp: BoundInputs) -> tuple[float, float]:
    """(update-count upper bound, before-run margin-fraction lower bound)
    for constant shrinking. Valid only under delta <= 2 and
    delta/(2+delta) < epsilon < 1; violations raise naming the inequality."""
    d, e = inp.delta_p, inp.epsilon_p
    if d > 2:
        raise ConfigError(f"proviso failed: delta = {d} > 2")
    if not e > d / (2.0 + d):
        raise ConfigError(
            f"proviso failed: epsilon = {e} <= delta/(2+delta) = {d / (2 + d)}")
    if not e < 1:
        raise ConfigError(f"proviso failed: epsilon = {e} >= 1")
    ratio = inp.R * inp.R / (inp.gamma_d * inp.gamma_d)
    t_upper = (1.0 / (d * (1.0 - e))) * ratio * math.log(
        (4.0 - (2.0 + d) * e + d) / ((2.0 + d) * e - d))
    f_before = 1.0 / (2.0 + d) + (1.0 - e) / 2.0
    return t_upper, f_before


def perceptron_margin_bounds(delta_p: float, R: float,
                             gamma_d: float) -> tuple[float, float]:
    """Classical perceptron-with-margin limits of the constant-shrinking
    bounds as the shrinking strength vanishes (epsilon -> 1)."""
    ratio = R * R / (gamma_d * gamma_d)
    return (2.0 + delta_p) / delta_p * ratio, 1.0 / (2.0 + delta_p)


def mpcs_after_run(t_c: int, norm_a_s: float, gamma_prime: float,
                   hp: Hyperparams) -> tuple[float, float]:
    """(after-run lower bound on f, implied upper bound on gamma_d).

    ``norm_a_s`` is the norm of the shrunken vector; the scale factor
    relating it to the unscaled solution cancels algebraically, leaving
    f >= (1-(1-eta*lam)^t_c) * gamma_prime / (lam * ||a_s||). At lam = 0 the
    analytic limit is eta * t_c * gamma_prime / ||a||.
    """
    if t_c < 1:
        raise ConfigError("after-run bound needs t_c >= 1")
    if norm_a_s <= 0:
        raise ConfigError("zero weight norm")
    if hp.lam == 0.0:
        f_after = hp.eta * float(t_c) * gamma_prime / norm_a_s
    else:
        pw = math.exp(float(t_c) * math.log1p(-hp.eta * hp.lam))
        f_after = (1.0 - pw) * gamma_prime / (hp.lam * norm_a_s)
    return f_after, gamma_prime / f_after


def mpvs_bounds(inp: BoundInputs) -> tuple[float, float, float]:
    """(update-count upper bound, update-count lower bound, before-run
    margin-fraction lower bound) for variable shrinking."""
    n = inp.n
    if n is None or n < 0:
        raise ConfigError("mpvs bounds need n >= 0")
    ratio = inp.R * inp.R / (inp.gamma_d * inp.gamma_d)
    t_upper = ((n + 1.0) ** 2 / (2.0 * n + 1.0)) \
        * (1.0 + 2.0 * inp.b / (inp.eta * inp.R * inp.R)) * ratio
    f_before = ((2.0 * n + 1.0) / (2.0 * n + 2.0)) \
        / (1.0 + inp.eta * inp.R * inp.R / (2.0 * inp.b))
    d, e = inp.delta_p, inp.epsilon_p
    t_lower = (1.0 / (e * d)) * ((1.0 - e / 2.0) / (1.0 + d / 2.0)) * ratio
    return t_upper, t_lower, f_before


def mpvs_after_run(t_c: int, powersum: float, norm_a: float,
                   gamma_prime: float, hp: Hyperparams) -> tuple[float, float]:
    """(after-run lower bound on f, implied upper bound on gamma_d):
    f >= eta * sum_{k<=t_c} k^n * gamma_prime / ||a||."""
    if norm_a <= 0:
        raise ConfigError("zero weight norm")
    f_after = hp.eta * powersum * gamma_prime / norm_a
    return f_after, gamma_prime / f_after


def mpcs_accuracy_params(zeta: float, R: float, b: float,
                         gamma_hat: float) -> tuple[float, float]:
    """Single-knob tuning for constant shrinking: accuracy zeta < 1/sqrt(2)
    guarantees f > 1 - zeta. Returns (eta, lam); needs a margin estimate."""
    if not 0 < zeta < 1.0 / math.sqrt(2.0):
        raise ConfigError(f"zeta must lie in (0, 1/sqrt(2)), got {zeta}")
    delta_p = 2.0 * zeta
    epsilon_p = delta_p * (1.0 + delta_p) / (2.0 + delta_p)
    eta = delta_p * b / (R * R)
    lam = (1.0 - epsilon_p) * gamma_hat * gamma_hat / b
    return eta, lam


def mpvs_accuracy_params(epsilon: float, R: float, b: float) -> tuple[float, int]:
    """Single-knob tuning for variable shrinking: returns (eta, n) with
    delta = epsilon, so accuracy epsilon costs about epsilon^-2 updates."""
    if not 0 < epsilon <= 1:
        raise ConfigError(f"epsilon must lie in (0, 1], got {epsilon}")
    eta = epsilon * b / (R * R)
    n = math.ceil(1.0 / epsilon) - 1
    return eta, n


# -- power-sum inequalities ---------------------------------------------------

@dataclass(frozen=True)
class LemmaChecks:
    """Exact LHS/RHS values of the three power-sum inequalities at (n, t)."""

    lemma1: tuple[Fraction, Fraction]  # (n+1) sum k^n  <=  t (t+1)^n
    lemma2: tuple[Fraction, Fraction]  # (n+1) sum k^n  >=  (t+1)^{n+1} - ((n+1)^2/(2n+1)) (t+1)^n
    lemma3: tuple[Fraction, Fraction]  # (2n+1) t sum k^{2n}  <=  (n+1)^2 (sum k^n)^2

    def all_hold(self) -> bool:
        return (self.lemma1[0] <= self.lemma1[1]
                and self.lemma2[0] >= self.lemma2[1]
                and self.lemma3[0] <= self.lemma3[1])


def lemma_check(n: int, t: int) -> LemmaChecks:
    """Evaluate all three inequalities by direct exact summation."""
    if n < 0 or t < 1:
        raise ConfigError("lemma_check needs n >= 0 and t >= 1")
    s1 = sum(k ** n for k in range(1, t + 1))
    s2 = sum(k ** (2 * n) for k in range(1, t + 1))
    l1 = (Fraction((n + 1) * s1), Fraction(t * (t + 1) ** n))
    l2 = (Fraction((n + 1) * s1),
          Fraction((t + 1) ** (n + 1))
          - Fraction((n + 1) ** 2, 2 * n + 1) * (t + 1) ** n)
    l3 = (Fraction((2 * n + 1) * t * s2), Fraction((n + 1) ** 2 * s1 * s1))
    return LemmaChecks(lemma1=l1, lemma2=l2, lemma3=l3)


# -- certificates and the staged procedure ------------------------------------

@dataclass
class Certificate:
    """Margin guarantees attached to a finished run. ``gamma_basis`` records
    where gamma_d came from (oracle, user estimate, or the run's own
    after-run upper bound)."""

    t_bound_upper: float | None
    t_bound_lower: float | None
    f_before: float | None
    f_after: float
    f_vs_oracle: float | None
    gamma_d_upper: float
    gamma_basis: str = "after-run-estimate"

    def lines(self) -> list[str]:
        out = []
        for key in ("t_bound_upper", "t_bound_lower", "f_before", "f_after",
                    "f_vs_oracle", "gamma_d_upper"):
            val = getattr(self, key)
            if val is not None:
                out.append(f"{key}={val:.17g}")
        out.append(f"gamma_basis={self.gamma_basis}")
        return out


def certificate_for_run(result: RunResult, dataset: Dataset, hp: Hyperparams,
                        algo: str, gamma_d: float | None = None,
                        gamma_basis: str | None = None) -> Certificate:
    """Build the full certificate for a converged run.

    Without an externally supplied gamma_d, bounds are evaluated at the
    run's own upper estimate gamma_prime/f_after (labeled as such).
    """
    state = result.state
    gamma_prime, _ = evaluate_margin(state.w, dataset)
    norm = state.norm_w()
    if algo == "mpvs" and hp.n > 0:
        f_after, g_up = mpvs_after_run(result.t_c, state.powersum, norm,
                                       gamma_prime, hp)
    elif algo == "mpcs" and hp.lam > 0:
        f_after, g_up = mpcs_after_run(result.t_c, norm, gamma_prime, hp)
    else:
        f_after, g_up = mpcs_after_run(result.t_c, norm, gamma_prime,
                                       hp.replace(lam=0.0))
    if gamma_d is None:
        gd, basis = g_up, "after-run-estimate"
        f_vs_oracle = None
    else:
        gd, basis = gamma_d, (gamma_basis or "oracle")
        f_vs_oracle = gamma_prime / gamma_d
    t_up = t_lo = f_before = None
    try:
        if algo == "mpvs":
            inp = bound_inputs("mpvs", hp.eta, hp.b, dataset.radius_R, gd, n=hp.n)
            t_up, t_lo, f_before = mpvs_bounds(inp)
        elif algo == "mpcs" and hp.lam > 0:
            inp = bound_inputs("mpcs", hp.eta, hp.b, dataset.radius_R, gd,
                               lam=hp.lam)
            t_up, f_before = mpcs_bounds(inp)
        else:
            delta_p = hp.eta * dataset.radius_R ** 2 / hp.b
            t_up, f_before = perceptron_margin_bounds(delta_p,
                                                      dataset.radius_R, gd)
    except ConfigError:
        pass  # out-of-proviso parameters simply carry no before-run bound
    return Certificate(t_bound_upper=t_up, t_bound_lower=t_lo,
                       f_before=f_before, f_after=f_after,
                       f_vs_oracle=f_vs_oracle, gamma_d_upper=g_up,
                       gamma_basis=basis)


@dataclass
class StageLog:
    stage: int
    lam: float
    eta: float
    t_c: int
    gamma_prime: float
    f_after: float


@dataclass
class StagedResult:
    result: RunResult
    certificate: Certificate
    stages: list[StageLog]
    reached: bool
    hp_final: Hyperparams
    best_stage: int = 0
    log_notes: list[str] = field(default_factory=list)


def staged_lambda(dataset: Dataset, hp_base: Hyperparams, target_f: float,
                  max_stages: int = 20, *, order: str = "seq",
                  seed: int | None = None, use_active_sets: bool = True,
                  kernels=None) -> StagedResult:
    """Grow the shrinking strength stage by stage until the after-run bound
    certifies the target margin fraction.

    Stage 0 runs with lam = 0 (no shrinking). Each later stage sets
    lam = (2/(2+delta)) * gamma_bar^2 / b where gamma_bar is the best
    achieved margin so far, a certified lower bound on gamma_d, which keeps
    lam strictly below its maximal allowed value. When a stage improves
    f_after by less than 1e-4, eta is halved before the next stage (the
    achieved margin typically sits well above the after-run bound, so
    shrinking eta is what unlocks further progress).
    """
    if not target_f < 1:
        raise ConfigError(f"target_f must be < 1, got {target_f}")
    eta = hp_base.eta
    lam = 0.0
    gamma_bar = 0.0
    stages: list[StageLog] = []
    notes: list[str] = []
    best: tuple[float, int, RunResult, Hyperparams] | None = None
    prev_f_after: float | None = None
    reached = False
    for stage in range(max_stages):
        hp_s = hp_base.replace(eta=eta, lam=lam)
        rr = train(dataset, hp_s, "mpcs", order=order, seed=seed,
                   use_active_sets=use_active_sets, kernels=kernels)
        if not rr.converged:
            raise ConvergenceError(
                f"stage {stage} (lam={lam:.6g}, eta={eta:.6g}) hit the update "
                f"budget {hp_s.max_updates}")
        gamma_prime, _ = evaluate_margin(rr.state.w, dataset)
        f_after, g_up = mpcs_after_run(rr.t_c, rr.state.norm_w(), gamma_prime,
                                       hp_s)
        stages.append(StageLog(stage=stage, lam=lam, eta=eta, t_c=rr.t_c,
                               gamma_prime=gamma_prime, f_after=f_after))
        if g_up > gamma_prime * 1.02:
            notes.append(
                f"stage {stage}: gamma_d likely in [{gamma_prime:.6g}, "
                f"{g_up:.6g}] and usually near the upper end")
        if best is None or f_after > best[0]:
            best = (f_after, stage, rr, hp_s)
        if f_after >= target_f:
            reached = True
            break
        if prev_f_after is not None and f_after - prev_f_after < 1e-4:
            eta = eta / 2.0
        prev_f_after = f_after
        gamma_bar = max(gamma_bar, gamma_prime)
        delta_p = eta * dataset.radius_R ** 2 / hp_base.b
        lam = (2.0 / (2.0 + delta_p)) * gamma_bar * gamma_bar / hp_base.b
    assert best is not None
    f_best, best_stage, rr_best, hp_best = best
    cert = certificate_for_run(rr_best, dataset, hp_best, "mpcs")
    return StagedResult(result=rr_best, certificate=cert, stages=stages,
                        reached=reached, hp_final=hp_best,
                        best_stage=best_stage, log_notes=notes)
