"""Metric kernel selection: compiled extension if built, pure Python otherwise.

Set COLABEL_PURE_KERNELS=1 to force the fallback (used by the benchmark and
the cross-implementation tests). The two implementations are bit-identical,
so the choice never affects session outcomes or replay hashes.
"""

import os

from . import pure

ACTIVE_IMPL = "python"
_impl = pure

if not os.environ.get("COLABEL_PURE_KERNELS"):
    try:
        from . import _fast as _compiled

        _impl = _compiled
        ACTIVE_IMPL = "cython"
    except ImportError:
        pass

temporal_label_sums = _impl.temporal_label_sums
weighted_label_sums = _impl.weighted_label_sums
