"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; otherwise the
pure-Python fallback is used. ``RULENET_BACKEND=python`` or ``=compiled``
forces a choice (the latter raises if the extension is unavailable).
Both backends are bit-compatible, so the choice affects speed only.
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_forced = os.environ.get("RULENET_BACKEND", "").strip().lower()
if _forced == "python":
    _impl = _kernels_py
elif _forced == "compiled":
    if _compiled is None:
        raise ImportError(
            "RULENET_BACKEND=compiled but the rulenet._kernels extension "
            "is not built; run `pip install -e . --no-build-isolation`"
        )
    _impl = _compiled
elif _forced:
    raise ValueError(f"unknown RULENET_BACKEND {_forced!r}")
else:
    _impl = _compiled if _compiled is not None else _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

run_epoch = _impl.run_epoch
evaluate = _impl.evaluate
penalty_value = _impl.penalty_value
