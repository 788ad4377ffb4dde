"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure-numpy kernels when
the extension is missing or when SURVACT_PURE is set (useful for
benchmarking and for debugging kernel discrepancies).
"""

from __future__ import annotations

import os

from . import _kernels_py

_force_pure = os.environ.get("SURVACT_PURE", "").lower() in {"1", "true", "yes"}

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

cox_loglik = _impl.cox_loglik
cox_grad_hess = _impl.cox_grad_hess
breslow_increments = _impl.breslow_increments
concordance_counts = _impl.concordance_counts
best_split_logrank = _impl.best_split_logrank
