"""Kernel backend selection.

The hot kernels (tree construction, tree traversal, per-instance attribution,
bootstrap resampling) exist twice: a compiled Cython extension (``_ext``) and
a pure numpy implementation (``_py``).  Both are written to produce
bit-identical output; the compiled one is simply faster.  Selection happens
once at import, preferring the extension, and can be forced with the
``FACTORFORGE_BACKEND`` environment variable (``compiled`` or ``python``).
"""

from __future__ import annotations

import os

_requested = os.environ.get("FACTORFORGE_BACKEND", "").strip().lower()

if _requested in ("", "auto"):
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _py as _impl  # type: ignore[no-redef]
elif _requested in ("compiled", "ext", "c"):
    from . import _ext as _impl  # type: ignore[attr-defined, no-redef]
elif _requested in ("python", "py", "fallback"):
    from . import _py as _impl  # type: ignore[no-redef]
else:
    raise ImportError(
        f"FACTORFORGE_BACKEND={_requested!r} not recognized; "
        "use 'compiled' or 'python'"
    )

NAME: str = _impl.NAME
build_tree = _impl.build_tree
predict_tree = _impl.predict_tree
tree_shap = _impl.tree_shap
bootstrap_counts = _impl.bootstrap_counts

__all__ = ["NAME", "bootstrap_counts", "build_tree", "predict_tree", "tree_shap"]
