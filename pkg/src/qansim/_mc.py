"""Backend selection for the Monte Carlo gate tally.

The compiled Cython kernel is preferred when built; otherwise the NumPy
fallback is used.  Both consume identical pre-drawn random arrays and
return identical tallies, so simulation results do not depend on which
backend is active.  Set QANSIM_MC_BACKEND=fallback|compiled to force one.
"""

import os

from . import _mc_fallback

try:
    from . import _mckernel

    HAVE_COMPILED = True
except ImportError:
    _mckernel = None
    HAVE_COMPILED = False


def get_tally(backend: str | None = None):
    """Return the tally function for ``backend`` (None = best available)."""
    if backend is None:
        backend = os.environ.get("QANSIM_MC_BACKEND")
    if backend in (None, "compiled") and HAVE_COMPILED:
        return _mckernel.tally_gates
    if backend == "compiled" and not HAVE_COMPILED:
        raise RuntimeError("compiled Monte Carlo kernel is not built")
    return _mc_fallback.tally_gates


def active_backend() -> str:
    return "compiled" if get_tally() is not _mc_fallback.tally_gates else "fallback"
