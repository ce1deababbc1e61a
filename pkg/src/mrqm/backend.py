"""Integration backend selection.

The compiled extension carries the hot loop; the numpy implementation is
a drop-in fallback selected at import when the extension is missing.
Set MRQM_BACKEND=python or MRQM_BACKEND=cython to force a choice
(forcing cython without the built extension raises).
"""

from __future__ import annotations

import os

_requested = os.environ.get("MRQM_BACKEND", "").strip().lower()

if _requested == "python":
    from . import _kernel_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernel as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "MRQM_BACKEND=cython but the compiled extension is not built; "
                "run `pip install -e . --no-build-isolation`")
        from . import _kernel_py as _impl
        BACKEND = "python"

integrate_dp5 = _impl.integrate_dp5
