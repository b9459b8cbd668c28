"""Hot kernels.  The compiled extension is used when it is importable and
``GENDERSIGNAL_PURE_PYTHON`` is unset; otherwise the numpy fallback."""
import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["compiled"] = _ckernels

if _ckernels is not None and not os.environ.get("GENDERSIGNAL_PURE_PYTHON"):
    BACKEND = "compiled"
else:
    BACKEND = "python"

_impl = BACKENDS[BACKEND]
onehot_conv_forward = _impl.onehot_conv_forward
onehot_conv_backward = _impl.onehot_conv_backward
kdtree_query = _impl.kdtree_query
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward


def get_backend(name=None):
    """Kernel namespace by name ("compiled" or "python"); the active one by default."""
    return BACKENDS[name or BACKEND]
