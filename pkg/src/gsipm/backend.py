"""Backend selection: numba-jitted kernels or the pure-numpy fallback.

The environment variable GSIPM_BACKEND picks the default:

  auto   use numba when importable, numpy otherwise (default)
  numba  require numba, raise if it is missing
  numpy  force the pure-numpy path even when numba is installed

Modules that carry jitted kernels import ``njit`` from here; when numba is
disabled it degrades to a no-op decorator, so the same source runs (slowly)
as plain Python. Batch entry points additionally keep a vectorized numpy
implementation, selected through :func:`active_backend`.
"""

from __future__ import annotations

import os

_ENV_VAR = "GSIPM_BACKEND"
_requested = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"{_ENV_VAR} must be auto, numba or numpy, got {_requested!r}")

HAS_NUMBA = False
if _requested != "numpy":
    try:
        from numba import njit as _numba_njit
        HAS_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")

if HAS_NUMBA:
    def njit(*args, **kwargs):
        return _numba_njit(*args, **kwargs)
else:
    def njit(*args, **kwargs):
        # no-op decorator, handles both @njit and @njit(...) forms
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def active_backend() -> str:
    """The backend batch operations use unless explicitly overridden."""
    return "numba" if HAS_NUMBA else "numpy"


def resolve_backend(name: str | None) -> str:
    """Normalize a per-call backend override against what is available."""
    if name is None or name == "auto":
        return active_backend()
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable "
                           f"(or disabled via {_ENV_VAR})")
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    return name
