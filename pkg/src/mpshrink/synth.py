"""Synthetic dataset generators for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from .data import RawExample


def make_separable(m: int, d: int, margin: float, rng: np.random.Generator,
                   offset_scale: float = 0.3) -> list[RawExample]:
    """Random dataset linearly separable (with bias) by a planted hyperplane.

    Points inside the margin band around the plane are resampled, so the
    geometric margin is at least ``margin``; after augmentation with rho the
    directional margin is at least margin/sqrt(1 + offset^2 + rho^2...)-ish,
    exact value left to the oracle.
    """
    u = rng.normal(size=d)
    u /= np.linalg.norm(u)
    c = float(rng.uniform(-offset_scale, offset_scale))
    examples = []
    for _ in range(m):
        while True:
            x = rng.uniform(-1.0, 1.0, size=d)
            s = float(u @ x) - c
            if abs(s) >= margin:
                break
        label = 1 if s > 0 else -1
        feats = tuple((j + 1, float(x[j])) for j in range(d))
        examples.append(RawExample(label=label, features=feats))
    return examples


def make_inseparable(m: int, d: int, margin: float, rng: np.random.Generator,
                     n_conflicts: int = 5) -> list[RawExample]:
    """Separable base plus duplicated points carrying both labels, which
    makes the set provably inseparable in the original space (training needs
    the per-instance extension)."""
    base = make_separable(m - 2 * n_conflicts, d, margin, rng)
    examples = list(base)
    for _ in range(n_conflicts):
        x = rng.uniform(-1.0, 1.0, size=d)
        feats = tuple((j + 1, float(x[j])) for j in range(d))
        examples.append(RawExample(label=1, features=feats))
        examples.append(RawExample(label=-1, features=feats))
    perm = rng.permutation(len(examples))
    return [examples[i] for i in perm]


def make_supported(m: int, d: int, gamma: float, rng: np.random.Generator,
                   n_support: int = 4, far: float = 3.0,
                   spread: float = 0.05,
                   n_conflicts: int = 0) -> list[RawExample]:
    """Classes symmetric through the origin with a crisp planted support set:
    ``n_support`` antipodal pairs sit exactly at distance ``gamma`` from the
    separator and everything else at least ``far * gamma`` behind it. The
    tight support makes after-run margin certificates sharp, the typical
    situation on well-separated real data. ``n_conflicts`` duplicated
    opposite-label pairs make the set inseparable (use the extension)."""
    u = rng.normal(size=d)
    u /= np.linalg.norm(u)
    examples = []
    for _ in range(n_support):
        v = rng.normal(size=d)
        v -= (v @ u) * u
        v *= spread / np.linalg.norm(v)
        for lab in (1, -1):
            x = lab * (gamma * u + v)
            examples.append(RawExample(lab, tuple((j + 1, float(q))
                                                  for j, q in enumerate(x))))
    for _ in range(n_conflicts):
        x = rng.uniform(-1.0, 1.0, size=d)
        feats = tuple((j + 1, float(q)) for j, q in enumerate(x))
        examples.append(RawExample(1, feats))
        examples.append(RawExample(-1, feats))
    while len(examples) < m:
        x = rng.uniform(-1.0, 1.0, size=d)
        s = float(x @ u)
        if abs(s) < far * gamma:
            continue
        lab = 1 if s > 0 else -1
        examples.append(RawExample(lab, tuple((j + 1, float(q))
                                              for j, q in enumerate(x))))
    perm = rng.permutation(len(examples))
    return [examples[i] for i in perm]
