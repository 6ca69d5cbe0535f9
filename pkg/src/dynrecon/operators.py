"""Per-frame undersampled Fourier operator, its adjoint, and the analytic
data-consistency solve.

The measurement operator for frame i is mask_i * F where F is the centered
unitary 2D FFT. Because F is unitary and the mask is a 0/1 diagonal in the
Fourier domain, the regularized normal equations

    [A_i^H A_i + (lam1 + lam2 * d_i) I] x = A_i^H b + lam1 * y_i + lam2 * q_i

are diagonal after a forward FFT and are solved exactly per frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .fourier import fft2c, ifft2c
from .sampling import SamplingPattern
from .validation import check_finite, check_same_shape, check_series


@dataclass(frozen=True)
class KSpaceData:
    """Sampled Fourier coefficients in zero-filled full-grid representation."""

    pattern: SamplingPattern
    values: np.ndarray  # (nframes, height, width) complex, zero off-mask

    def __post_init__(self):
        check_same_shape(self.values, self.pattern.masks, "k-space values and masks")
        check_finite(self.values, "k-space values")
        off = self.values * (1 - self.pattern.masks)
        if np.any(off != 0):
            raise ValueError("k-space values must be zero at unsampled locations")

    @property
    def nframes(self) -> int:
        return self.values.shape[0]


def apply_A(x, pattern: SamplingPattern) -> KSpaceData:
    """Forward model: per-frame centered FFT followed by mask multiply."""
    x = check_series(x, "image series")
    check_same_shape(x, pattern.masks, "series and masks")
    values = fft2c(x) * pattern.masks
    return KSpaceData(pattern=pattern, values=values)


def apply_A_star(b: KSpaceData) -> np.ndarray:
    """Adjoint: mask, zero-fill, inverse centered FFT (a.k.a. gridding)."""
    return ifft2c(b.values * b.pattern.masks)


def _frame_degrees(d, nframes: int) -> np.ndarray:
    d = np.zeros(nframes) if d is None else np.asarray(d, dtype=float)
    if d.shape != (nframes,):
        raise ValueError(f"degree vector must have shape ({nframes},), got {d.shape}")
    if (d < 0).any():
        raise ValueError("degrees must be nonnegative")
    return d


def dc_solve(
    b: KSpaceData,
    y: np.ndarray | None,
    q: np.ndarray | None,
    lam1: float,
    lam2: float,
    d=None,
) -> np.ndarray:
    """Exact per-frame data-consistency solve in the Fourier domain.

    y is the denoised estimate weighted by lam1, q the graph-averaged series
    weighted by lam2, and d the per-frame graph degrees entering the diagonal.
    """
    if lam1 < 0 or lam2 < 0:
        raise ValueError("regularization weights must be nonnegative")
    masks = b.pattern.masks.astype(float)
    d = _frame_degrees(d, b.nframes)
    denom = masks + lam1 + lam2 * d[:, None, None]
    bad = np.where((denom == 0).any(axis=(1, 2)))[0]
    if bad.size:
        raise NumericError(
            f"singular data-consistency system at frame {int(bad[0])}: "
            "zero denominator at an unsampled Fourier location "
            "(need lam1 + lam2*d > 0 or full sampling)"
        )
    num = apply_A_star(b)
    if lam1 != 0:
        num = num + lam1 * np.asarray(y)
    if lam2 != 0:
        num = num + lam2 * np.asarray(q)
    if np.all(denom == 1.0):  # unregularized fully sampled case is exact
        return num
    return ifft2c(fft2c(num) / denom)


def normal_residual(
    x,
    b: KSpaceData,
    y: np.ndarray | None,
    q: np.ndarray | None,
    lam1: float,
    lam2: float,
    d=None,
) -> float:
    """Norm of the normal-equation gradient at x; certifies dc_solve output."""
    x = check_series(x, "candidate series")
    masks = b.pattern.masks
    d = _frame_degrees(d, b.nframes)
    r = ifft2c(fft2c(x) * masks - b.values * masks)
    if lam1 != 0:
        r = r + lam1 * (x - np.asarray(y))
    if lam2 != 0:
        r = r + lam2 * (d[:, None, None] * x - np.asarray(q))
    return float(np.linalg.norm(r.ravel()))
