"""Select the kernel backend at import time.

The compiled extension is used when it imports; otherwise the pure-Python
kernels take over.  Set ``FRACLOS_BACKEND=python`` to force the fallback.
"""
import logging
import os

from . import _purepy

log = logging.getLogger(__name__)


def _load():
    if os.environ.get("FRACLOS_BACKEND", "").lower() == "python":
        return _purepy
    try:
        from . import _ckernels
    except ImportError as exc:
        log.debug("compiled kernels unavailable (%s); using pure Python", exc)
        return _purepy
    return _ckernels


_impl = _load()
Kernel = _impl.Kernel
BACKEND = Kernel.backend


def kernel_class(name):
    """Return the ``Kernel`` class of a named backend ("python" or "cython")."""
    if name == "python":
        return _purepy.Kernel
    if name == "cython":
        from . import _ckernels

        return _ckernels.Kernel
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        pass
    else:
        names.append("cython")
    return names
