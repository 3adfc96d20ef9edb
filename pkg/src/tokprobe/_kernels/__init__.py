"""Kernel selection: compiled extension when built, numpy/pure otherwise.

`TOKPROBE_NO_EXT=1` forces the fallback (used by tests and the benchmark).
`BACKEND` reports which implementation is active: "ext" or "pure".
"""

import os

from . import pure

if os.environ.get("TOKPROBE_NO_EXT"):
    _impl = pure
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure

BACKEND = "ext" if _impl is not pure else "pure"

count_sorted_runs = _impl.count_sorted_runs
union_labels = _impl.union_labels
hist_accumulate = _impl.hist_accumulate
