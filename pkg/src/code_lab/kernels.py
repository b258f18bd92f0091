"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
reference implementation. ``CODE_LAB_KERNELS=numpy`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("CODE_LAB_KERNELS", "").lower() == "numpy":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND

lstm_step_forward = _impl.lstm_step_forward
lstm_step_backward = _impl.lstm_step_backward
lstm_seq_forward = _impl.lstm_seq_forward
lstm_seq_backward = _impl.lstm_seq_backward
dense_forward = _impl.dense_forward
dense_backward = _impl.dense_backward
chain_hit_counts = _impl.chain_hit_counts

__all__ = [
    "BACKEND",
    "lstm_step_forward",
    "lstm_step_backward",
    "lstm_seq_forward",
    "lstm_seq_backward",
    "dense_forward",
    "dense_backward",
    "chain_hit_counts",
]
