"""Training kernels with a compiled core and a numpy fallback.

The compiled extension is used when it was built; set ``TRIPNET_PURE_PYTHON=1``
to force the fallback. Both expose ``NAME``, ``permutation(rng, n)`` and
``train_epoch(...)`` with the same semantics. Results agree to rounding, not
bit for bit (summation order differs), so determinism holds per backend.
"""
import os

from . import _reference

try:
    from . import _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _reference}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if os.environ.get("TRIPNET_PURE_PYTHON") or _compiled is None:
    default = _reference
else:
    default = _compiled


def get_backend(name=None):
    if name is None:
        return default
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
