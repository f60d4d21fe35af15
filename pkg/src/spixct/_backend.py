"""Pick the compiled kernels when available, the numpy ones otherwise.

Set ``SPIXCT_PURE_PYTHON=1`` to force the numpy kernels.
"""
import logging
import os

from . import _kernels_py

logger = logging.getLogger(__name__)


def _load():
    if os.environ.get("SPIXCT_PURE_PYTHON", "") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels
    except ImportError:
        logger.info("compiled kernels unavailable, using numpy fallback")
        return _kernels_py, "python"
    return _kernels, "cython"


kernels, BACKEND = _load()
