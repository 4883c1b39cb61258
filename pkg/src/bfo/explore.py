"""Fail reachability for target programs.

The search lives in `explore_core`. When the compiled kernel built from the same
source is importable it is used instead; set BFO_PURE_PYTHON=1 to force the
interpreted one.
"""

from __future__ import annotations

import os

from . import explore_core as _pure

_impl = _pure
if not os.environ.get("BFO_PURE_PYTHON"):
    try:
        from . import _explore_kernel as _impl
    except ImportError:
        pass

KERNEL = "cython" if _impl is not _pure else "python"

DEFAULT_FUEL = _impl.DEFAULT_FUEL
Explorer = _impl.Explorer
ExploreResult = _impl.ExploreResult
Sym = _impl.Sym
Unk = _impl.Unk
explore = _impl.explore
replay = _impl.replay
flatten = _impl.flatten

__all__ = ["explore", "Explorer", "ExploreResult", "replay", "Sym", "Unk", "DEFAULT_FUEL", "KERNEL"]
