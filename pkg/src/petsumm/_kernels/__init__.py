"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy
implementation when the extension is missing or when the
``PETSUMM_PURE_PYTHON`` environment variable is set to a truthy value.
"""

import os

from . import _pykernels

if os.environ.get("PETSUMM_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

lcs_length = _impl.lcs_length
resample_means = _impl.resample_means
resample_mean_diffs = _impl.resample_mean_diffs


def backend_name() -> str:
    return "compiled" if _impl.__name__.endswith("_ckernels") else "python"
