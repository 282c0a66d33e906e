"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension ``_ou`` is used when it imports; setting the
environment variable ``OUSHRINK_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

_compiled = None
if not os.environ.get("OUSHRINK_PURE_PYTHON"):
    try:
        from . import _ou as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"
KERNELS = {"python": _fallback.basis_integrals}
if _compiled is not None:
    KERNELS["cython"] = _compiled.basis_integrals


def get_basis_integrals(backend: str | None = None):
    """Return the ``basis_integrals`` kernel for ``backend`` (default: the active one)."""
    name = backend or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(KERNELS)}") from None
