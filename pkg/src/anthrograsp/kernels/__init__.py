"""Hot kernels with a compiled core and a pure-Python fallback.

The Cython extension ``_ckernels`` is preferred; if it is missing (no
compiler at install time) or ``ANTHROGRASP_PURE_PYTHON=1`` is set, the numpy
versions in ``_pykernels`` are used. ``BACKEND`` names the active choice.
"""
import os

from . import _pykernels

if os.environ.get("ANTHROGRASP_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build environment
        _impl = _pykernels
        BACKEND = "python"

rasterize_depth = _impl.rasterize_depth
trilinear = _impl.trilinear
ray_first_hit = _impl.ray_first_hit

__all__ = ["BACKEND", "rasterize_depth", "trilinear", "ray_first_hit"]
