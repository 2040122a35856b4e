"""Working precision for all scalar arithmetic.

Every real in the library is an ``mpmath.mpf``.  "double" mode runs mpmath at
53 bits, which matches IEEE double rounding; "high" mode runs at 60 decimal
digits.  The mode is process-global, like mpmath's own context.
"""

from __future__ import annotations

import contextlib
import threading

import mpmath

HIGH_DPS = 60
_lock = threading.RLock()
_mode = "double"

DEFAULT_PSD_TOL = {"double": 1e-9, "high": 1e-30}


def set_precision(mode: str) -> None:
    global _mode
    if mode == "double":
        mpmath.mp.prec = 53
    elif mode == "high":
        mpmath.mp.dps = HIGH_DPS
    else:
        raise ValueError(f"unknown precision mode {mode!r}")
    _mode = mode


def current_mode() -> str:
    return _mode


@contextlib.contextmanager
def precision(mode: str):
    """Temporarily switch the working precision."""
    with _lock:
        old = _mode
        set_precision(mode)
        try:
            yield
        finally:
            set_precision(old)


def psd_tol() -> float:
    return DEFAULT_PSD_TOL[_mode]


def to_json_number(x):
    """Lossless JSON encoding: floats in double mode, decimal strings otherwise."""
    x = mpmath.mpf(x)
    if mpmath.isinf(x):
        return "inf" if x > 0 else "-inf"
    if _mode == "double":
        return float(x)
    return mpmath.nstr(x, mpmath.mp.dps + 5)


def from_json_number(v):
    return mpmath.mpf(v)
