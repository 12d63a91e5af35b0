"""Kernel backend selection: compiled extension when available, else pure Python.

Set XTREE_PURE_PYTHON=1 to force the fallback (used by the benchmark to
compare both backends).
"""

import os

from . import pytraverse

if os.environ.get("XTREE_PURE_PYTHON", "") not in ("", "0"):
    impl = pytraverse
else:
    try:
        from . import _ctraverse as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pytraverse

BACKEND = impl.BACKEND


def backends():
    """All importable backends, name -> module (for the benchmark)."""
    out = {"python": pytraverse}
    try:
        from . import _ctraverse
        out["compiled"] = _ctraverse
    except ImportError:
        pass
    return out
