"""Select the compiled kernels when importable, else the numpy fallback.

Set ``POTENTIAL_REGIONS_PURE=1`` to force the fallback.
"""
import os

from . import _fallback

fallback = _fallback

if os.environ.get("POTENTIAL_REGIONS_PURE", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else _fallback
NAME = "compiled" if compiled is not None else "numpy"
