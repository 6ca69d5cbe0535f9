"""Frame-similarity graph: weights from navigator signals, Laplacian terms,
and the graph-averaged series Q = W X.

Weights use a Gaussian kernel on navigator distances, sparsified to the k
nearest neighbors of each frame and symmetrized by max, then scaled so the
largest off-diagonal entry is 1 (keeps the manifold weight transferable
across datasets).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_finite, check_series


@dataclass(frozen=True)
class ManifoldGraph:
    """Symmetric nonnegative frame-similarity weights; Laplacian is D - W."""

    weights: np.ndarray  # (nframes, nframes), zero diagonal, entries in [0, 1]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got {w.shape}")
        if not np.allclose(w, w.T, atol=0):
            raise ValueError("weights must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("weights must have zero diagonal")
        if (w < 0).any() or (w > 1).any():
            raise ValueError("weights must lie in [0, 1]")
        check_finite(w, "weights")

    @property
    def nframes(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees) - self.weights


def pairwise_sq_distances(nav: np.ndarray) -> np.ndarray:
    nav = np.asarray(nav)
    if nav.ndim != 2:
        raise ValueError(f"navigator signals must be (nframes, siglen), got {nav.shape}")
    check_finite(nav, "navigator signals")
    sq = np.sum(np.abs(nav) ** 2, axis=1)
    gram = np.real(nav.conj() @ nav.T)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    return np.maximum(d2, 0.0)


def estimate_weights(nav, sigma: float | None = None, k: int = 10) -> ManifoldGraph:
    """Gaussian-kernel k-nearest-neighbor graph from navigator signals.

    sigma=None picks the median of the retained neighbor distances; this is
    rejected when all retained distances are zero (caller must supply sigma).
    """
    nav = np.asarray(nav)
    nframes = nav.shape[0]
    if not 1 <= k < nframes:
        raise ValueError(f"k must satisfy 1 <= k < nframes={nframes}, got {k}")
    d2 = pairwise_sq_distances(nav)
    np.fill_diagonal(d2, np.inf)
    keep = np.zeros((nframes, nframes), dtype=bool)
    order = np.argsort(d2, axis=1, kind="stable")
    for i in range(nframes):
        keep[i, order[i, :k]] = True
    keep |= keep.T  # max-symmetrization: either side's neighbor is retained
    retained = np.sqrt(d2[np.triu(keep)])
    if sigma is None:
        sigma = float(np.median(retained))
        if sigma == 0.0:
            raise ValueError(
                "all retained navigator distances are zero; "
                "automatic bandwidth is undefined, supply sigma explicitly"
            )
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    w = np.where(keep, np.exp(-d2 / sigma**2), 0.0)
    np.fill_diagonal(w, 0.0)
    wmax = w.max()
    if wmax > 0:
        w = w / wmax
    w = np.minimum(w, 1.0)
    w = 0.5 * (w + w.T)  # exact symmetry against fp asymmetry
    return ManifoldGraph(weights=w)


def storm_energy(x, g: ManifoldGraph) -> float:
    """Quadratic manifold prior tr(X^H L X), each frame flattened to a column."""
    x = check_series(x, "series")
    if x.shape[0] != g.nframes:
        raise ValueError(
            f"frame count mismatch: series has {x.shape[0]}, graph has {g.nframes}"
        )
    flat = x.reshape(g.nframes, -1)
    gram = np.real(flat.conj() @ flat.T)
    return float(np.sum(g.laplacian() * gram))


def compute_Q(x, g: ManifoldGraph) -> np.ndarray:
    """Graph-averaged series: frame i of output = sum_j W_ij * frame j of x."""
    x = check_series(x, "series")
    if x.shape[0] != g.nframes:
        raise ValueError(
            f"frame count mismatch: series has {x.shape[0]}, graph has {g.nframes}"
        )
    return np.einsum("ij,jhw->ihw", g.weights, x)
