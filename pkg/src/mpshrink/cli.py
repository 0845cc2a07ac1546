"""Command-line surface.

Subcommands: train, eval, autotune, oracle, selftest, bench. Reports are
plain ``key=value`` lines (or a CSV header+row with ``--report csv``).
Exit codes are stable API: 0 converged/ok, 2 update budget or target not
reached, 3 invalid configuration, 4 I/O or malformed input.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import backend, certify, oracle, synth
from .data import build_dataset, parse_dataset, sparse_dot
from .errors import (ConfigError, ConvergenceError, DataFormatError,
                     ModelFormatError, MpshrinkError)
from .model import (Hyperparams, evaluate_margin, load_model, margin_report,
                    save_model, validate_hyperparams)
from .scheduler import train

EXIT_OK = 0
EXIT_BUDGET = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with the config exit code."""

    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _emit(pairs: list[tuple[str, object]], fmt: str) -> None:
    if fmt == "csv":
        print(",".join(k for k, _ in pairs))
        print(",".join(_fmt(v) for _, v in pairs))
    else:
        for k, v in pairs:
            print(f"{k}={_fmt(v)}")


def _load_dataset(path: str, rho: float, delta: float):
    with open(path, "r", encoding="utf-8") as f:
        examples = parse_dataset(f)
    return build_dataset(examples, rho=rho, delta=delta)


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("data", help="sparse 'label index:value ...' text file")
    p.add_argument("--rho", type=float, default=1.0,
                   help="augmentation coordinate (default 1)")
    p.add_argument("--delta-ext", type=float, default=0.0, dest="delta_ext",
                   help="per-instance extension magnitude; 0 disables "
                        "(2-norm soft margin needs > 0 on inseparable data)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=("mpcs", "mpvs", "perceptron"),
                   required=True)
    p.add_argument("--eta", type=float, default=None,
                   help="learning rate (default 0.1, or derived from "
                        "--epsilon/--zeta when given)")
    p.add_argument("--b", default="auto",
                   help="margin threshold, a number or 'auto' for R^2")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="constant shrinking strength (mpcs)")
    p.add_argument("--n", type=int, default=None,
                   help="variable shrinking exponent (mpvs, default 3)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="accuracy knob: for mpvs sets n (and eta when "
                        "omitted); for mpcs sets lambda via --gamma-hat")
    p.add_argument("--zeta", type=float, default=None,
                   help="mpcs single accuracy knob (< 1/sqrt(2)); sets eta "
                        "and lambda via --gamma-hat")
    p.add_argument("--gamma-hat", type=float, default=None, dest="gamma_hat",
                   help="estimate of the maximum directional margin, used "
                        "by --epsilon/--zeta for mpcs and for bound reports")
    p.add_argument("--lup", type=int, default=1000,
                   help="multiplicity cap per multiple update")
    p.add_argument("--cbar", type=float, default=1.01,
                   help="active-set selection slack")
    p.add_argument("--nep1", type=int, default=5)
    p.add_argument("--nep2", type=int, default=5)
    p.add_argument("--no-active-set", action="store_true")
    p.add_argument("--order", choices=("seq", "shuffle"), default="seq")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-updates", type=int, default=10_000_000)
    p.add_argument("--strict-bounds", action="store_true",
                   help="reject parameters outside the bound provisos "
                        "(delta > 2)")
    p.add_argument("--backend", choices=("auto", "cython", "python"),
                   default="auto")
    p.add_argument("--model-out", default=None)
    p.add_argument("--report", choices=("text", "csv"), default="text")
    p.add_argument("--verbose", action="store_true",
                   help="print per-pass progress to stderr")


def _resolve_hyperparams(args, dataset) -> tuple[Hyperparams, float | None]:
    R = dataset.radius_R
    b = R * R if args.b == "auto" else float(args.b)
    eta = args.eta
    lam = args.lam
    n = args.n
    gamma_hat = args.gamma_hat
    if args.zeta is not None:
        if args.algo != "mpcs":
            raise ConfigError("--zeta applies to mpcs only")
        if gamma_hat is None:
            raise ConfigError("--zeta needs --gamma-hat")
        if lam is not None or args.epsilon is not None or eta is not None:
            raise ConfigError("--zeta conflicts with --lambda/--epsilon/--eta")
        eta, lam = certify.mpcs_accuracy_params(args.zeta, R, b, gamma_hat)
    elif args.epsilon is not None:
        if args.algo == "mpcs":
            if gamma_hat is None:
                raise ConfigError("--epsilon for mpcs needs --gamma-hat")
            if lam is not None:
                raise ConfigError("--epsilon conflicts with --lambda")
            lam = (1.0 - args.epsilon) * gamma_hat * gamma_hat / b
        elif args.algo == "mpvs":
            if n is not None:
                raise ConfigError("--epsilon conflicts with --n")
            eta_eps, n = certify.mpvs_accuracy_params(args.epsilon, R, b)
            if eta is None:
                eta = eta_eps
        else:
            raise ConfigError("--epsilon applies to mpcs or mpvs")
    if eta is None:
        eta = 0.1
    if args.algo == "mpcs" and lam is None:
        raise ConfigError(
            "mpcs needs --lambda (or --epsilon/--zeta with --gamma-hat); "
            "there is no safe universal default, see the autotune command")
    hp = Hyperparams(eta=eta, b=b, lam=lam if lam is not None else 0.0,
                     n=n if n is not None else 3, lup=args.lup,
                     cbar=args.cbar, nep1=args.nep1, nep2=args.nep2,
                     max_updates=args.max_updates, rho=args.rho,
                     delta=args.delta_ext)
    return hp, gamma_hat


def _run_report(result, dataset, hp, algo, gamma_hat, args) -> list[tuple[str, object]]:
    pairs: list[tuple[str, object]] = [("algo", algo),
                                       ("backend", backend.get_kernels(args.backend).BACKEND_NAME)]
    pairs += [("m", dataset.m), ("d", dataset.d), ("dim", dataset.dim),
              ("R", dataset.radius_R), ("rho", dataset.rho),
              ("delta", dataset.delta), ("eta", hp.eta), ("b", hp.b)]
    if algo == "mpvs":
        pairs.append(("n", hp.n))
    else:
        pairs.append(("lambda", hp.lam))
    pairs += [("lup", hp.lup), ("order", args.order),
              ("converged", result.converged), ("t_c", result.t_c),
              ("full_passes", result.full_passes),
              ("presentations", result.state.total_presentations),
              ("wall_time_s", result.wall_time)]
    if result.t_c > 0:
        gamma_prime, argmin = evaluate_margin(result.state.w, dataset)
        basis = "user" if gamma_hat is not None else None
        cert = certify.certificate_for_run(result, dataset, hp, algo,
                                           gamma_d=gamma_hat,
                                           gamma_basis=basis)
        delta_p = hp.eta * dataset.radius_R ** 2 / hp.b
        if algo == "mpvs":
            epsilon_p = 1.0 / (hp.n + 1)
        elif hp.lam > 0:
            epsilon_p = 1.0 - hp.lam * hp.b / cert.gamma_d_upper ** 2
        else:
            epsilon_p = 1.0
        pairs += [("gamma_prime", gamma_prime), ("argmin_index", argmin),
                  ("norm_w", result.state.norm_w()),
                  ("delta_p", delta_p), ("epsilon_p", epsilon_p)]
        pairs += [(k, v) for k, v in
                  (line.split("=", 1) for line in cert.lines())]
    return pairs


def cmd_train(args) -> int:
    dataset = _load_dataset(args.data, args.rho, args.delta_ext)
    hp, gamma_hat = _resolve_hyperparams(args, dataset)
    validate_hyperparams(hp, dataset, args.algo,
                         strict_bounds=args.strict_bounds)
    progress = None
    if args.verbose:
        def progress(p, t, est):
            print(f"pass={p} t={t} margin_est={est:.6g}", file=sys.stderr)
    result = train(dataset, hp, args.algo, order=args.order, seed=args.seed,
                   use_active_sets=not args.no_active_set, progress=progress,
                   kernels=backend.get_kernels(args.backend))
    pairs = _run_report(result, dataset, hp, args.algo, gamma_hat, args)
    _emit(pairs, args.report)
    if args.model_out:
        cert_lines = [f"{k}={_fmt(v)}" for k, v in pairs
                      if k.startswith(("f_", "t_bound", "gamma_"))]
        with open(args.model_out, "w", encoding="utf-8") as f:
            save_model(f, args.algo, hp, result.state, dataset.dim,
                       cert_lines=cert_lines)
    return EXIT_OK if result.converged else EXIT_BUDGET


def cmd_eval(args) -> int:
    with open(args.model_in, "r", encoding="utf-8") as f:
        md = load_model(f)
    dataset = _load_dataset(args.data, md.rho, md.delta)
    if dataset.dim != md.dim:
        raise ConfigError(
            f"model dim {md.dim} does not match dataset dim {dataset.dim}")
    rep = margin_report(md.w, dataset, threads=args.threads)
    errors_pos = errors_neg = 0
    for k, p in enumerate(dataset.patterns):
        if sparse_dot(md.w, p) <= 0.0:
            if dataset.labels[k] > 0:
                errors_pos += 1
            else:
                errors_neg += 1
    pairs = [("m", dataset.m), ("d", dataset.d), ("R", dataset.radius_R),
             ("rho", dataset.rho), ("delta", dataset.delta),
             ("algo", md.algo), ("t", md.t),
             ("gamma_prime", rep.gamma_prime),
             ("argmin_index", rep.argmin_index),
             ("norm_w", rep.norm_w),
             ("errors_pos", errors_pos), ("errors_neg", errors_neg)]
    _emit(pairs, args.report)
    return EXIT_OK


def cmd_autotune(args) -> int:
    dataset = _load_dataset(args.data, args.rho, args.delta_ext)
    R = dataset.radius_R
    b = R * R if args.b == "auto" else float(args.b)
    hp_base = Hyperparams(eta=args.eta, b=b, lam=0.0, lup=args.lup,
                          cbar=args.cbar, nep1=args.nep1, nep2=args.nep2,
                          max_updates=args.max_updates, rho=args.rho,
                          delta=args.delta_ext)
    staged = certify.staged_lambda(dataset, hp_base, args.target_f,
                                   max_stages=args.max_stages,
                                   order=args.order, seed=args.seed,
                                   use_active_sets=not args.no_active_set,
                                   kernels=backend.get_kernels(args.backend))
    for s in staged.stages:
        print(f"stage={s.stage} lambda={s.lam:.17g} eta={s.eta:.17g} "
              f"t_c={s.t_c} gamma_prime={s.gamma_prime:.17g} "
              f"f_after={s.f_after:.17g}")
    for note in staged.log_notes:
        print(f"# {note}", file=sys.stderr)
    print(f"reached={_fmt(staged.reached)}")
    print(f"best_stage={staged.best_stage}")
    for line in staged.certificate.lines():
        print(line)
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as f:
            save_model(f, "mpcs", staged.hp_final, staged.result.state,
                       dataset.dim, cert_lines=staged.certificate.lines())
    return EXIT_OK if staged.reached else EXIT_BUDGET


def cmd_oracle(args) -> int:
    dataset = _load_dataset(args.data, args.rho, args.delta_ext)
    res = oracle.exact_gamma_d(dataset)
    pairs = [("m", dataset.m), ("d", dataset.d), ("R", dataset.radius_R),
             ("rho", dataset.rho), ("delta", dataset.delta),
             ("gamma_d", res.gamma_d), ("duality_gap", res.gap),
             ("separable", res.separable),
             ("support_size", len(res.support))]
    _emit(pairs, args.report)
    return EXIT_OK


def cmd_selftest(args) -> int:
    failures = 0

    def check(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        if ok:
            print(f"PASS {name}")
        else:
            failures += 1
            print(f"FAIL {name} {detail}")

    from .data import RawExample
    toy = build_dataset([RawExample(1, ((1, 1.0),)),
                         RawExample(-1, ((1, -1.0),))], rho=1.0, delta=0.0)
    hp = Hyperparams(eta=1.0, b=0.5, n=0, max_updates=1000)
    rr = train(toy, hp, "mpvs", use_active_sets=False)
    check("toy-trace", rr.converged and rr.t_c == 2
          and np.array_equal(rr.state.w, np.array([2.0, 0.0])),
          f"t_c={rr.t_c} w={rr.state.w}")
    gamma_prime, _ = evaluate_margin(rr.state.w, toy)
    f_after, _ = certify.mpvs_after_run(rr.t_c, rr.state.powersum,
                                        rr.state.norm_w(), gamma_prime, hp)
    check("toy-after-run", abs(f_after - 1.0) < 1e-12, f"f_after={f_after}")
    res = oracle.exact_gamma_d(toy)
    check("toy-oracle", abs(res.gamma_d - 1.0) < 1e-9, f"gamma_d={res.gamma_d}")
    lc = certify.lemma_check(2, 3)
    check("lemma-spot", lc.all_hold() and lc.lemma1 == (42, 48),
          f"lemma1={lc.lemma1}")
    from .solvers import mpcs_max_multiplicity
    mu = mpcs_max_multiplicity(0.0, 2.0, Hyperparams(eta=0.1, b=0.5, lam=0.5))
    check("mpcs-multiplicity", mu == 3, f"mu={mu}")
    names = backend.available_backends()
    check("backend", backend.BACKEND_NAME in names,
          f"{backend.BACKEND_NAME} not in {names}")
    if "cython" in names and "python" in names:
        rrc = train(toy, hp, "mpvs", use_active_sets=False,
                    kernels=backend.get_kernels("cython"))
        rrp = train(toy, hp, "mpvs", use_active_sets=False,
                    kernels=backend.get_kernels("python"))
        check("backend-bitwise", np.array_equal(rrc.state.w, rrp.state.w),
              f"{rrc.state.w} vs {rrp.state.w}")
    return EXIT_OK if failures == 0 else 1


def cmd_bench(args) -> int:
    rng = np.random.default_rng(args.seed)
    examples = synth.make_separable(args.m, args.d, margin=0.05, rng=rng)
    dataset = build_dataset(examples, rho=1.0, delta=0.0)
    hp = Hyperparams(eta=args.eta, b=dataset.radius_R ** 2, n=3,
                     max_updates=args.max_updates)
    results = {}
    for name in backend.available_backends():
        K = backend.get_kernels(name)
        best = math.inf
        rr = None
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            rr = train(dataset, hp, "mpvs", use_active_sets=True, kernels=K)
            best = min(best, time.perf_counter() - t0)
        results[name] = (best, rr)
        print(f"backend={name} wall_s={best:.17g} converged={_fmt(rr.converged)} "
              f"t_c={rr.t_c} presentations={rr.state.total_presentations}")
    if "cython" in results and "python" in results:
        same = np.array_equal(results["cython"][1].state.w,
                              results["python"][1].state.w)
        speedup = results["python"][0] / results["cython"][0]
        print(f"identical_weights={_fmt(same)}")
        print(f"speedup={speedup:.17g}")
    else:
        print("# compiled backend not available; built fallback only")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="mpshrink",
                     description="Margin perceptron training with weight "
                                 "shrinking, certificates, and an exact "
                                 "margin oracle.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a linear classifier")
    _add_dataset_flags(p)
    _add_train_flags(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model file on a dataset")
    _add_dataset_flags(p)
    p.add_argument("--model-in", required=True)
    p.add_argument("--report", choices=("text", "csv"), default="text")
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("MPSHRINK_EVAL_THREADS", "1")))
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("autotune",
                       help="staged shrinking-strength search for a target "
                            "margin fraction")
    _add_dataset_flags(p)
    p.add_argument("--target-f", type=float, default=0.99, dest="target_f")
    p.add_argument("--max-stages", type=int, default=25)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--b", default="auto")
    p.add_argument("--lup", type=int, default=1000)
    p.add_argument("--cbar", type=float, default=1.01)
    p.add_argument("--nep1", type=int, default=5)
    p.add_argument("--nep2", type=int, default=5)
    p.add_argument("--no-active-set", action="store_true")
    p.add_argument("--order", choices=("seq", "shuffle"), default="seq")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-updates", type=int, default=10_000_000)
    p.add_argument("--backend", choices=("auto", "cython", "python"),
                   default="auto")
    p.add_argument("--model-out", default=None)
    p.set_defaults(fn=cmd_autotune)

    p = sub.add_parser("oracle", help="exact maximum directional margin "
                                      "(desk scale)")
    _add_dataset_flags(p)
    p.add_argument("--report", choices=("text", "csv"), default="text")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("selftest", help="quick built-in sanity checks")
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("bench", help="compare compiled and fallback backends")
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--max-updates", type=int, default=10_000_000)
    p.set_defaults(fn=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (DataFormatError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MpshrinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
