"""Sparse dataset parsing and the training-space transforms.

Input rows are ``label index:value ...`` text (1-based, strictly ascending
indices). Building a dataset applies, in order: augmentation (one extra
coordinate fixed to ``rho`` per instance, so bias learning becomes a
through-origin problem), reflection (multiply the augmented instance by its
label), and optionally the per-instance extension (one private coordinate of
magnitude ``delta`` per instance, which turns hard-margin training in the
extended space into 2-norm soft-margin training in the original space).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .backend import kernels
from .errors import ConfigError, DataFormatError


@dataclass(frozen=True)
class RawExample:
    """One parsed input row: a +/-1 label and sorted sparse features."""

    label: int
    features: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class Pattern:
    """One augmented/reflected/extended training vector.

    ``indices`` are 0-based positions into a dense weight vector and are
    strictly ascending; ``sq_norm`` is cached at build time and must never be
    recomputed inside training loops. ``source_row`` is the 1-based position
    of the originating example.
    """

    indices: np.ndarray
    values: np.ndarray
    sq_norm: float
    source_row: int


@dataclass
class Dataset:
    """Immutable pattern collection plus the transform provenance.

    ``dim`` is d + 1 (bias) + m (extension coordinates, only when
    ``delta > 0``), where d is the largest feature index seen. The CSR
    arrays (indptr/indices/values/sqnorms) are the canonical storage; the
    ``patterns`` list holds views into them.
    """

    patterns: list[Pattern]
    m: int
    d: int
    dim: int
    radius_R: float
    rho: float
    delta: float
    labels: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    sqnorms: np.ndarray
    min_sq_norm: float = field(default=0.0)

    def summary_lines(self) -> list[str]:
        return [
            f"m={self.m}",
            f"d={self.d}",
            f"R={self.radius_R:.17g}",
            f"rho={self.rho:.17g}",
            f"delta={self.delta:.17g}",
        ]


def _parse_label(tok: str, line_no: int) -> int:
    if tok in ("+1", "1"):
        return 1
    if tok == "-1":
        return -1
    raise DataFormatError(f"label must be +1 or -1, got {tok!r}", line_no)


def parse_dataset(stream: Iterable[str]) -> list[RawExample]:
    """Parse ``label index:value ...`` lines into examples, order preserved.

    Blank lines and ``#`` comments (full-line or trailing) are ignored.
    Raises DataFormatError with the offending 1-based line number.
    """
    examples: list[RawExample] = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        label = _parse_label(toks[0], line_no)
        feats: list[tuple[int, float]] = []
        prev = 0
        for tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataFormatError(f"expected index:value, got {tok!r}", line_no)
            try:
                idx = int(idx_s)
            except ValueError:
                raise DataFormatError(f"bad index {idx_s!r}", line_no) from None
            try:
                val = float(val_s)
            except ValueError:
                raise DataFormatError(f"bad value {val_s!r}", line_no) from None
            if idx <= 0:
                raise DataFormatError(f"index must be positive, got {idx}", line_no)
            if idx <= prev:
                raise DataFormatError(
                    f"indices must be strictly ascending, got {idx} after {prev}",
                    line_no)
            if not math.isfinite(val):
                raise DataFormatError(f"value must be finite, got {val_s!r}", line_no)
            feats.append((idx, val))
            prev = idx
        examples.append(RawExample(label=label, features=tuple(feats)))
    return examples


def format_example(ex: RawExample) -> str:
    """Serialize an example back to its text form (round-trips exactly)."""
    parts = ["+1" if ex.label > 0 else "-1"]
    parts.extend(f"{i}:{v!r}" for i, v in ex.features)
    return " ".join(parts)


def build_dataset(examples: list[RawExample], rho: float, delta: float) -> Dataset:
    """Apply augmentation, reflection, and the ``delta``-extension.

    Pattern k becomes ``l_k * [x_k, rho, delta * e_k]`` where the bias
    coordinate sits at 1-based index d+1 and the extension coordinate of row
    k at d+1+k (present only when ``delta > 0``). ``delta = 0`` disables the
    extension entirely (hard margin on the data as given).
    """
    if not examples:
        raise ConfigError("cannot build a dataset from an empty example list")
    if rho <= 0:
        raise ConfigError(f"rho must be > 0, got {rho}")
    if delta < 0:
        raise ConfigError(f"delta must be >= 0, got {delta}")

    m = len(examples)
    d = max((f[0] for ex in examples for f in ex.features), default=0)
    extend = delta > 0
    dim = d + 1 + (m if extend else 0)

    nnz_per_row = [len(ex.features) + 1 + (1 if extend else 0) for ex in examples]
    indptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(nnz_per_row, out=indptr[1:])
    total = int(indptr[-1])
    indices = np.empty(total, dtype=np.int64)
    values = np.empty(total, dtype=np.float64)
    sqnorms = np.empty(m, dtype=np.float64)
    labels = np.empty(m, dtype=np.int64)

    pos = 0
    for row, ex in enumerate(examples, start=1):
        lk = float(ex.label)
        labels[row - 1] = ex.label
        sq = 0.0
        for idx, v in ex.features:
            indices[pos] = idx - 1
            values[pos] = lk * v
            sq += v * v
            pos += 1
        indices[pos] = d
        values[pos] = lk * rho
        pos += 1
        if extend:
            indices[pos] = d + row
            values[pos] = lk * delta
            pos += 1
        sqnorms[row - 1] = sq + rho * rho + delta * delta

    radius = math.sqrt(float(sqnorms.max()))
    patterns = [
        Pattern(
            indices=indices[indptr[k]:indptr[k + 1]],
            values=values[indptr[k]:indptr[k + 1]],
            sq_norm=float(sqnorms[k]),
            source_row=k + 1,
        )
        for k in range(m)
    ]
    return Dataset(
        patterns=patterns,
        m=m,
        d=d,
        dim=dim,
        radius_R=radius,
        rho=rho,
        delta=delta,
        labels=labels,
        indptr=indptr,
        indices=indices,
        values=values,
        sqnorms=sqnorms,
        min_sq_norm=float(sqnorms.min()),
    )


def sparse_dot(w: np.ndarray, p: Pattern) -> float:
    """Exact sequential-order dot of a dense weight vector with a pattern."""
    n = len(p.indices)
    if n and int(p.indices[-1]) >= len(w):
        raise IndexError(
            f"pattern index {int(p.indices[-1])} out of range for dim {len(w)}")
    return kernels.dot_sparse(w, p.indices, p.values, 0, n)


def pattern_to_dense(p: Pattern, dim: int) -> np.ndarray:
    """Expand a pattern to a dense vector (test/desk-scale helper)."""
    y = np.zeros(dim, dtype=np.float64)
    y[p.indices] = p.values
    return y


def dense_matrix(ds: Dataset) -> np.ndarray:
    """All patterns as a dense (m, dim) matrix (desk-scale helper)."""
    Y = np.zeros((ds.m, ds.dim), dtype=np.float64)
    for k in range(ds.m):
        lo, hi = int(ds.indptr[k]), int(ds.indptr[k + 1])
        Y[k, ds.indices[lo:hi]] = ds.values[lo:hi]
    return Y
