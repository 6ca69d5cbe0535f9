"""Sklearn-style estimator facade over the functional core.

fit() trains the shared denoiser and regularization weights on one dataset;
predict() reconstructs new undersampled data. Hyperparameters follow the
sklearn get_params/set_params protocol, so the estimator clones and composes
with the wider ecosystem. Inputs are domain objects (KSpaceData plus complex
series), not 2D feature matrices.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .graph import ManifoldGraph, estimate_weights
from .metrics import snr_db
from .operators import KSpaceData
from .unroll import UnrollConfig, reconstruct, train
from .validation import check_series


class ManifoldUnrolledReconstructor(BaseEstimator):
    """Unrolled model-based reconstructor with learned denoiser and
    frame-similarity graph prior.

    Parameters mirror UnrollConfig plus the graph construction settings.
    """

    def __init__(
        self,
        n_iterations: int = 4,
        lam1: float = 0.05,
        lam2: float = 0.05,
        train_lam1: bool = True,
        train_lam2: bool = True,
        n_outer: int = 2,
        epochs_per_outer: int = 50,
        batch_frames: int = 15,
        loss_margin: int = 2,
        lr: float = 1e-3,
        seed: int = 0,
        n_layers: int = 3,
        n_filters: int = 8,
        kernel_size: int = 3,
        use_norm: bool = False,
        graph_k: int = 10,
        graph_sigma: float | None = None,
    ):
        self.n_iterations = n_iterations
        self.lam1 = lam1
        self.lam2 = lam2
        self.train_lam1 = train_lam1
        self.train_lam2 = train_lam2
        self.n_outer = n_outer
        self.epochs_per_outer = epochs_per_outer
        self.batch_frames = batch_frames
        self.loss_margin = loss_margin
        self.lr = lr
        self.seed = seed
        self.n_layers = n_layers
        self.n_filters = n_filters
        self.kernel_size = kernel_size
        self.use_norm = use_norm
        self.graph_k = graph_k
        self.graph_sigma = graph_sigma

    def _unroll_config(self, lam1=None, lam2=None) -> UnrollConfig:
        return UnrollConfig(
            n_iterations=self.n_iterations,
            lam1=self.lam1 if lam1 is None else lam1,
            lam2=self.lam2 if lam2 is None else lam2,
            train_lam1=self.train_lam1,
            train_lam2=self.train_lam2,
            n_outer=self.n_outer,
            epochs_per_outer=self.epochs_per_outer,
            batch_frames=self.batch_frames,
            loss_margin=self.loss_margin,
            lr=self.lr,
            seed=self.seed,
            n_layers=self.n_layers,
            n_filters=self.n_filters,
            kernel_size=self.kernel_size,
            use_norm=self.use_norm,
        )

    def _graph(self, X: KSpaceData, navigators) -> ManifoldGraph | None:
        if navigators is None:
            return None
        k = min(self.graph_k, X.nframes - 1)
        return estimate_weights(navigators, sigma=self.graph_sigma, k=k)

    def fit(self, X: KSpaceData, y, navigators=None):
        """Train on undersampled data X against the reference series y.

        navigators: per-frame navigator signals used to build the similarity
        graph; required when lam2 > 0 or train_lam2 is set.
        """
        y = check_series(np.asarray(y), "target series")
        graph = self._graph(X, navigators)
        if graph is None:
            if self.lam2 > 0 or self.train_lam2:
                raise ValueError(
                    "navigators are required unless lam2 == 0 and "
                    "train_lam2 is False"
                )
            graph = ManifoldGraph(weights=np.zeros((X.nframes, X.nframes)))
        result = train(X, y, graph, self._unroll_config())
        self.params_ = result.params
        self.lam1_ = result.lam1
        self.lam2_ = result.lam2
        self.history_ = result.history
        return self

    def predict(self, X: KSpaceData, navigators=None) -> np.ndarray:
        """Reconstruct undersampled data with the fitted parameters."""
        if not hasattr(self, "params_"):
            raise ValueError("estimator is not fitted; call fit() first")
        graph = self._graph(X, navigators)
        if graph is None and self.lam2_ > 0:
            raise ValueError("navigators are required to reconstruct with lam2 > 0")
        cfg = self._unroll_config(lam1=self.lam1_, lam2=self.lam2_)
        x, _ = reconstruct(X, graph, self.params_, cfg)
        return x

    def score(self, X: KSpaceData, y, navigators=None) -> float:
        """SNR (dB) of the reconstruction against the reference series."""
        return snr_db(self.predict(X, navigators=navigators), np.asarray(y))
