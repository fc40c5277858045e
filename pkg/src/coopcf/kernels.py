"""Kernel backend selection.

The compiled extension ``coopcf._speedups`` is used when it was built;
otherwise the pure-Python module ``coopcf._purepy`` is loaded. Setting the
environment variable ``COOPCF_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _purepy

if os.environ.get("COOPCF_PURE_PYTHON", "") not in ("", "0"):
    _impl = _purepy
else:
    try:
        from . import _speedups as _impl
    except ImportError:  # extension not built
        _impl = _purepy

BACKEND = "cython" if _impl is not _purepy else "python"

c_mac_unit = _impl.c_mac_unit
coop_rate = _impl.coop_rate
nearest_coset_point = _impl.nearest_coset_point
nearest_row = _impl.nearest_row

__all__ = ["BACKEND", "c_mac_unit", "coop_rate", "nearest_coset_point", "nearest_row"]
