"""Centered, unitary per-frame 2D Fourier transforms.

Conventions: "centered" means the DC coefficient sits at index
(height // 2, width // 2) after the forward transform; both directions carry
the unitary 1/sqrt(H*W) scaling, so forward and inverse are exact adjoints.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from .validation import check_same_shape, check_series

_AXES = (-2, -1)


def fft2c(x: np.ndarray) -> np.ndarray:
    """Forward centered unitary 2D FFT applied frame by frame."""
    return scipy.fft.fftshift(
        scipy.fft.fft2(scipy.fft.ifftshift(x, axes=_AXES), axes=_AXES, norm="ortho"),
        axes=_AXES,
    )


def ifft2c(x: np.ndarray) -> np.ndarray:
    """Inverse centered unitary 2D FFT applied frame by frame."""
    return scipy.fft.fftshift(
        scipy.fft.ifft2(scipy.fft.ifftshift(x, axes=_AXES), axes=_AXES, norm="ortho"),
        axes=_AXES,
    )


def fft2(series, direction: str = "forward") -> np.ndarray:
    """Validated per-frame centered unitary FFT of a dynamic series."""
    x = check_series(series)
    if direction == "forward":
        return fft2c(x)
    if direction == "inverse":
        return ifft2c(x)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def inner(a, b) -> complex:
    """Inner product sum(conj(a) * b) over all entries."""
    a = np.asarray(a)
    b = np.asarray(b)
    check_same_shape(a, b, "inner-product operands")
    return complex(np.vdot(a, b))
