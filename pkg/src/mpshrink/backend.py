"""Kernel backend selection.

The compiled extension (``_ckernels``) is preferred; the pure-Python twin
(``_pykernels``) is the fallback. Selection happens once at import. Set
``MPSHRINK_BACKEND=python`` (or ``cython``) to force a backend; forcing
``cython`` raises if the extension is not built.
"""

from __future__ import annotations

import os

from . import _pykernels

_FORCE = os.environ.get("MPSHRINK_BACKEND", "auto").strip().lower()

if _FORCE in ("python", "py"):
    kernels = _pykernels
elif _FORCE in ("cython", "c", "compiled"):
    from . import _ckernels as kernels  # noqa: F401
elif _FORCE in ("auto", ""):
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _pykernels
else:
    raise ImportError(f"unknown MPSHRINK_BACKEND value: {_FORCE!r}")

BACKEND_NAME: str = kernels.BACKEND_NAME


def get_kernels(name: str | None = None):
    """Return a kernel module: the selected one, or by explicit name."""
    if name is None or name == "auto":
        return kernels
    if name in ("python", "py"):
        return _pykernels
    if name in ("cython", "c", "compiled"):
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend: {name!r}")


def available_backends() -> list[str]:
    names = []
    try:
        from . import _ckernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names
