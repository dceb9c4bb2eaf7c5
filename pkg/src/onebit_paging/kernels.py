"""Backend selection for the hot loops.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``ONEBIT_PAGING_PURE=1`` is set, the pure-Python ``_pykernels`` module
is used.  Both expose the same functions with identical results.
"""

import os

from . import _pykernels

_compiled = None
if os.environ.get("ONEBIT_PAGING_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels
BACKEND = "cython" if _compiled is not None else "python"

next_use = _impl.next_use
phase_starts = _impl.phase_starts
lfd = _impl.lfd
simulate = _impl.simulate


def compiled():
    """The compiled module, or None when it is not available."""
    return _compiled
