"""Reconstruction quality metrics."""

from __future__ import annotations

import math

import numpy as np

from .validation import check_same_shape


def snr_db(x, ref) -> float:
    """20 * log10(||ref|| / ||x - ref||) over all frames; +inf when x == ref."""
    x = np.asarray(x)
    ref = np.asarray(ref)
    check_same_shape(x, ref, "reconstruction and reference")
    err = float(np.linalg.norm((x - ref).ravel()))
    if err == 0.0:
        return math.inf
    return 20.0 * math.log10(float(np.linalg.norm(ref.ravel())) / err)


def spearman_rank_correlation(a, b) -> float:
    """Spearman correlation: Pearson correlation of the rank vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    check_same_shape(a, b, "rank-correlation inputs")

    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty_like(order, dtype=float)
        r[order] = np.arange(len(v), dtype=float)
        # average ranks over ties
        vals, inv, counts = np.unique(v, return_inverse=True, return_counts=True)
        sums = np.zeros(len(vals))
        np.add.at(sums, inv, r)
        return sums[inv] / counts[inv]

    ra, rb = ranks(a), ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt(np.sum(ra**2) * np.sum(rb**2))
    if denom == 0:
        return 0.0
    return float(np.sum(ra * rb) / denom)
