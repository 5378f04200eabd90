"""Kernel backend selection.

The compiled extension (`mixlyap._kernels_c`, built from Cython) is used
when importable; otherwise the numpy fallback (`mixlyap._kernels_np`) takes
over. Both expose the same functions with identical floating-point
semantics. Set MIXLYAP_KERNELS=python to force the fallback.
"""

import os

from . import _kernels_np

_forced = os.environ.get("MIXLYAP_KERNELS", "").lower()

if _forced == "python":
    _impl = _kernels_np
else:
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced in ("c", "compiled"):
            raise
        _impl = _kernels_np

USING_COMPILED = bool(getattr(_impl, "COMPILED", False))


def backend_name():
    return "compiled" if USING_COMPILED else "python"


def get_backend(name):
    """Return a specific backend module ('python' or 'compiled')."""
    if name == "python":
        return _kernels_np
    if name in ("c", "compiled"):
        from . import _kernels_c
        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")


lyap_affine_chunk = _impl.lyap_affine_chunk
lyap_flush = _impl.lyap_flush
orbit_chunk = _impl.orbit_chunk
norm_growth = _impl.norm_growth
markov_chain_states = _impl.markov_chain_states
pm_orbit = _impl.pm_orbit
