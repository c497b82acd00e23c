"""Backend selection for the hot numerical kernels.

The compiled extension is used when it imports cleanly; otherwise (or when
``QTOKEN_PURE_PYTHON=1`` is set) the numpy implementation takes over.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QTOKEN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

spectral_moments = _impl.spectral_moments
python_spectral_moments = _kernels_py.spectral_moments
reflection = _kernels_py.reflection
polariton_positions = _kernels_py.polariton_positions
