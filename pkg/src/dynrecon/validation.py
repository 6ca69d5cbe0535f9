"""Input validation helpers, in the spirit of sklearn's check_array."""

from __future__ import annotations

import numpy as np


def check_series(x, name: str = "series") -> np.ndarray:
    """Validate a complex dynamic series of shape (frames, height, width).

    Dimensions must be even and >= 4 so the centered-DC index is unambiguous.
    Returns the input as a complex ndarray without copying when possible.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise ValueError(
            f"{name}: expected shape (frames, height, width), got {x.shape}"
        )
    t, h, w = x.shape
    if t < 1:
        raise ValueError(f"{name}: need at least one frame")
    if h < 4 or w < 4 or h % 2 or w % 2:
        raise ValueError(
            f"{name}: height and width must be even and >= 4, got {h}x{w}"
        )
    if not np.iscomplexobj(x):
        x = x.astype(np.complex128)
    check_finite(x, name)
    return x


def check_finite(x: np.ndarray, name: str = "array") -> None:
    """Reject non-finite entries, naming the first offending index."""
    finite = np.isfinite(x) if not np.iscomplexobj(x) else (
        np.isfinite(x.real) & np.isfinite(x.imag)
    )
    if not finite.all():
        idx = np.unravel_index(int(np.argmin(finite)), x.shape)
        raise ValueError(f"{name}: non-finite value at index {tuple(int(i) for i in idx)}")


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch between {what}: {a.shape} vs {b.shape}")
