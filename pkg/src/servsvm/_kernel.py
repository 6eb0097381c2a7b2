"""Kernel selection: compiled extension when available, pure Python otherwise.

Set SERVSVM_KERNEL=py or SERVSVM_KERNEL=cython to force one; forcing
cython fails loudly if the extension was not built.
"""

import os

from . import _simcore_py

_choice = os.environ.get("SERVSVM_KERNEL", "").strip().lower()

if _choice == "py":
    _backend = "py"
    exec_segment = _simcore_py.exec_segment
elif _choice == "cython":
    from . import _simcore

    _backend = "cython"
    exec_segment = _simcore.exec_segment
elif _choice == "":
    try:
        from . import _simcore

        _backend = "cython"
        exec_segment = _simcore.exec_segment
    except ImportError:
        _backend = "py"
        exec_segment = _simcore_py.exec_segment
else:
    raise ImportError(
        f"SERVSVM_KERNEL must be 'py' or 'cython', got {_choice!r}")


def kernel_backend() -> str:
    """Name of the active execution kernel: 'cython' or 'py'."""
    return _backend
