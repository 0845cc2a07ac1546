"""Shared training state, hyperparameters, margin evaluation, model files."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import TextIO

import numpy as np

from . import backend
from .data import Dataset
from .errors import ConfigError, ModelFormatError

ALGOS = ("mpcs", "mpvs", "perceptron")


@dataclass
class Hyperparams:
    """Training knobs shared by both solvers.

    ``lam`` is the constant-shrinking strength (MPCS only; 0 disables
    shrinking and recovers the classical perceptron with margin). ``n`` is
    the variable-shrinking exponent (MPVS only; 0 likewise degenerates).
    ``lup`` caps the multiplicity of a single multiple update. ``cbar``,
    ``nep1`` and ``nep2`` drive active-set selection and cycling.
    """

    eta: float = 0.1
    b: float = 1.0
    lam: float = 0.0
    n: int = 3
    lup: int = 1000
    cbar: float = 1.01
    nep1: int = 5
    nep2: int = 5
    max_updates: int = 10_000_000
    rho: float = 1.0
    delta: float = 0.0

    def replace(self, **kw) -> "Hyperparams":
        return replace(self, **kw)


def validate_hyperparams(hp: Hyperparams, dataset: Dataset, algo: str,
                         strict_bounds: bool = False) -> None:
    """Raise ConfigError on invalid settings for this dataset and algorithm."""
    if algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {algo!r}")
    if hp.eta <= 0:
        raise ConfigError(f"eta must be > 0, got {hp.eta}")
    if hp.b <= 0:
        raise ConfigError(f"b must be > 0, got {hp.b}")
    if hp.lup < 1:
        raise ConfigError(f"lup must be >= 1, got {hp.lup}")
    if hp.cbar < 1:
        raise ConfigError(f"cbar must be >= 1, got {hp.cbar}")
    if hp.nep1 < 1 or hp.nep2 < 1:
        raise ConfigError("nep1 and nep2 must be >= 1")
    if hp.max_updates < 0:
        raise ConfigError("max_updates must be >= 0")
    if algo == "mpcs":
        if hp.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {hp.lam}")
        if hp.lam > 0:
            if hp.eta * hp.lam >= 1:
                raise ConfigError(
                    f"eta*lambda must be < 1, got {hp.eta * hp.lam}")
            if hp.lam * hp.b >= dataset.min_sq_norm:
                raise ConfigError(
                    f"lambda*b = {hp.lam * hp.b} must be < min ||y||^2 = "
                    f"{dataset.min_sq_norm}")
    if algo == "mpvs":
        if hp.n < 0 or int(hp.n) != hp.n:
            raise ConfigError(f"n must be a nonnegative integer, got {hp.n}")
    if strict_bounds:
        delta_p = hp.eta * dataset.radius_R ** 2 / hp.b
        if delta_p > 2:
            raise ConfigError(
                f"delta = eta*R^2/b = {delta_p} exceeds 2 (strict bounds)")


@dataclass
class TrainState:
    """Mutable solver state, single-owner by contract.

    ``w`` stores the shrunken-representation vector for MPCS (its norm stays
    bounded, so no overflow) and the plain vector for MPVS/perceptron.
    ``t`` counts updates with multiplicity. ``powersum`` tracks
    sum_{k=1..t} k^n for MPVS (t itself for n = 0). ``normsq``/``max_normsq``
    are trainer-maintained running values of ||w||^2.
    """

    w: np.ndarray
    t: int = 0
    powersum: float = 0.0
    updates_this_pass: int = 0
    total_presentations: int = 0
    normsq: float = 0.0
    max_normsq: float = 0.0

    @classmethod
    def zeros(cls, dim: int) -> "TrainState":
        return cls(w=np.zeros(dim, dtype=np.float64))

    def norm_w(self) -> float:
        return math.sqrt(float(np.dot(self.w, self.w)))


@dataclass
class MarginReport:
    """Directional margin achieved by a weight vector on a dataset."""

    gamma_prime: float
    norm_w: float
    argmin_index: int
    f_after: float | None = None
    gamma_d_upper: float | None = None


def margin_report(w: np.ndarray, dataset: Dataset,
                  f_after: float | None = None,
                  threads: int | None = None) -> MarginReport:
    gamma_prime, argmin = evaluate_margin(w, dataset, threads=threads)
    upper = gamma_prime / f_after if f_after else None
    return MarginReport(gamma_prime=gamma_prime,
                        norm_w=math.sqrt(float(np.dot(w, w))),
                        argmin_index=argmin, f_after=f_after,
                        gamma_d_upper=upper)


def _env_threads() -> int:
    try:
        return max(1, int(os.environ.get("MPSHRINK_EVAL_THREADS", "1")))
    except ValueError:
        return 1


def evaluate_margin(w: np.ndarray, dataset: Dataset,
                    threads: int | None = None) -> tuple[float, int]:
    """(min_k w.y_k / ||w||, 1-based argmin row); ties pick the lowest row.

    The scan may be chunked across threads; the reduction compares
    (value, row) pairs so the result does not depend on chunking.
    """
    norm = math.sqrt(float(np.dot(w, w)))
    if norm == 0.0:
        raise ConfigError("cannot evaluate the margin of a zero weight vector")
    K = backend.kernels
    if threads is None:
        threads = _env_threads()
    m = dataset.m
    if threads <= 1 or m < 2 * threads:
        dot, row = K.scan_min_dot(w, dataset.indptr, dataset.indices,
                                  dataset.values,
                                  np.arange(m, dtype=np.int64))
        return dot / norm, row + 1

    bounds = np.linspace(0, m, threads + 1, dtype=np.int64)
    chunks = [np.arange(bounds[i], bounds[i + 1], dtype=np.int64)
              for i in range(threads) if bounds[i] < bounds[i + 1]]

    def scan(rows):
        return K.scan_min_dot(w, dataset.indptr, dataset.indices,
                              dataset.values, rows)

    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        results = list(pool.map(scan, chunks))
    best, best_row = math.inf, -1
    for dot, row in results:
        if dot < best or (dot == best and row < best_row):
            best, best_row = dot, row
    return best / norm, best_row + 1


def derived_params(eta: float, b: float, R: float, *, lam: float | None = None,
                   n: int | None = None,
                   gamma_hat: float | None = None) -> tuple[float, float]:
    """(delta, epsilon) accuracy parameters.

    delta = eta*R^2/b for both solvers. epsilon = 1 - lam*b/gamma_hat^2 for
    constant shrinking (gamma_hat, an estimate of the maximum directional
    margin, is required unless lam = 0) and 1/(n+1) for variable shrinking.
    """
    if (lam is None) == (n is None):
        raise ConfigError("provide exactly one of lam= or n=")
    delta_p = eta * R * R / b
    if lam is not None:
        if lam == 0.0:
            return delta_p, 1.0
        if gamma_hat is None:
            raise ConfigError("gamma_hat is required to derive epsilon when lam > 0")
        return delta_p, 1.0 - lam * b / (gamma_hat * gamma_hat)
    return delta_p, 1.0 / (n + 1)


# -- model files -------------------------------------------------------------

_FLOAT_KEYS = ("eta", "b", "lambda", "rho", "delta")


@dataclass
class ModelData:
    algo: str
    eta: float
    b: float
    lam: float
    n: int
    t: int
    rho: float
    delta: float
    dim: int
    w: np.ndarray
    cert_lines: list[str] = field(default_factory=list)


def save_model(f: TextIO, algo: str, hp: Hyperparams, state: TrainState,
               dim: int, cert_lines: list[str] | None = None) -> None:
    """Write the text model format: header key=value lines, then one
    ``w <1-based index> <value>`` line per nonzero coordinate (17 significant
    digits, which round-trips doubles exactly). Certificate lines, when
    given, are embedded as ``#cert`` comments."""
    f.write(f"algo={algo}\n")
    f.write(f"eta={hp.eta:.17g}\n")
    f.write(f"b={hp.b:.17g}\n")
    if algo == "mpvs":
        f.write(f"n={hp.n}\n")
    else:
        f.write(f"lambda={hp.lam:.17g}\n")
    f.write(f"t={state.t}\n")
    f.write(f"rho={hp.rho:.17g}\n")
    f.write(f"delta={hp.delta:.17g}\n")
    f.write(f"dim={dim}\n")
    for line in cert_lines or []:
        f.write(f"#cert {line}\n")
    w = state.w
    for i in np.nonzero(w)[0]:
        f.write(f"w {i + 1} {w[i]:.17g}\n")


def load_model(f: TextIO) -> ModelData:
    header: dict[str, str] = {}
    cert_lines: list[str] = []
    w: np.ndarray | None = None
    nz: list[tuple[int, float]] = []
    for line_no, raw in enumerate(f, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#cert"):
            cert_lines.append(line[len("#cert"):].strip())
            continue
        if line.startswith("#"):
            continue
        if line.startswith("w "):
            parts = line.split()
            if len(parts) != 3:
                raise ModelFormatError(f"line {line_no}: bad weight line {line!r}")
            try:
                nz.append((int(parts[1]), float(parts[2])))
            except ValueError:
                raise ModelFormatError(
                    f"line {line_no}: bad weight entry {line!r}") from None
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ModelFormatError(f"line {line_no}: expected key=value, got {line!r}")
        header[key.strip()] = val.strip()

    for required in ("algo", "eta", "b", "t", "rho", "delta", "dim"):
        if required not in header:
            raise ModelFormatError(f"missing header field {required!r}")
    algo = header["algo"]
    if algo not in ALGOS:
        raise ModelFormatError(f"unknown algo {algo!r}")
    try:
        dim = int(header["dim"])
        t = int(header["t"])
        eta = float(header["eta"])
        b = float(header["b"])
        rho = float(header["rho"])
        delta = float(header["delta"])
        lam = float(header.get("lambda", "0"))
        n = int(header.get("n", "0"))
    except ValueError as exc:
        raise ModelFormatError(f"bad header value: {exc}") from None
    w = np.zeros(dim, dtype=np.float64)
    for idx, val in nz:
        if not 1 <= idx <= dim:
            raise ModelFormatError(f"weight index {idx} out of range 1..{dim}")
        w[idx - 1] = val
    return ModelData(algo=algo, eta=eta, b=b, lam=lam, n=n, t=t, rho=rho,
                     delta=delta, dim=dim, w=w, cert_lines=cert_lines)
