"""Split-search backend selection.

The compiled kernel is used when it was built; set ``FLAKEVOCAB_PURE_PYTHON=1``
to force the numpy fallback. Both produce identical trees.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

from . import _split_py

_compiled = None
if os.environ.get("FLAKEVOCAB_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _split_ext as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": SimpleNamespace(name="python", gini=_split_py.best_split_gini, grad=_split_py.best_split_grad)}
if _compiled is not None:
    BACKENDS["compiled"] = SimpleNamespace(
        name="compiled", gini=_compiled.best_split_gini, grad=_compiled.best_split_grad
    )

DEFAULT = BACKENDS["compiled"] if "compiled" in BACKENDS else BACKENDS["python"]


def get_backend(name: str | None = None):
    if name is None:
        return DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"split backend {name!r} is not available; have {sorted(BACKENDS)}") from None
