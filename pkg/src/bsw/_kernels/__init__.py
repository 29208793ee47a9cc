"""Kernel selection: compiled ``bsw._speedups`` when available, else pure Python.

Set ``BSW_PURE=1`` to force the pure implementation (used by the benchmark and
to cross-test both paths).
"""

import os

from . import pure as _pure

if os.environ.get("BSW_PURE") == "1":
    IMPLEMENTATION = "pure"
    reduce_ints = _pure.reduce_ints
    concat_reduced = _pure.concat_reduced
    common_prefix_len = _pure.common_prefix_len
else:
    try:
        from bsw._speedups import (  # type: ignore[attr-defined]
            common_prefix_len,
            concat_reduced,
            reduce_ints,
        )

        IMPLEMENTATION = "compiled"
    except ImportError:
        IMPLEMENTATION = "pure"
        reduce_ints = _pure.reduce_ints
        concat_reduced = _pure.concat_reduced
        common_prefix_len = _pure.common_prefix_len

__all__ = ["IMPLEMENTATION", "reduce_ints", "concat_reduced", "common_prefix_len"]
