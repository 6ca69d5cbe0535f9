"""Weight-shared unrolled reconstruction and its training loop.

One unrolled iteration denoises the current iterate with the shared network,
averages it over the frame-similarity graph, and solves the per-frame
data-consistency system exactly. Training freezes the graph-averaged series
(the Q schedule) during the inner epochs and recomputes it over the full
dataset in an outer loop, so gradients never have to flow through the
dataset-wide graph product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoiser import (
    AdamState,
    DenoiserParams,
    adam_arrays_step,
    denoise_backward,
    denoise_forward,
    init_denoiser,
    param_arrays,
    with_param_arrays,
)
from .errors import NumericError
from .fourier import fft2c, ifft2c
from .graph import ManifoldGraph, compute_Q
from .operators import KSpaceData, SamplingPattern, apply_A_star
from .validation import check_same_shape

# trained regularization weights are clamped to this floor rather than zero:
# with every weight at exactly zero the per-frame data-consistency system is
# singular off the sampled set
LAM_FLOOR = 1e-6


@dataclass
class UnrollConfig:
    """Iteration, regularization and training settings."""

    n_iterations: int = 4
    lam1: float = 0.05
    lam2: float = 0.05
    train_lam1: bool = True
    train_lam2: bool = True
    n_outer: int = 2
    epochs_per_outer: int = 50
    batch_frames: int = 15
    loss_margin: int = 2
    lr: float = 1e-3
    seed: int = 0
    n_layers: int = 3
    n_filters: int = 8
    kernel_size: int = 3
    use_norm: bool = False

    def __post_init__(self):
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.lam1 < 0 or self.lam2 < 0:
            raise ValueError("regularization weights must be nonnegative")
        if self.batch_frames <= 2 * self.loss_margin:
            raise ValueError("batch_frames must exceed 2 * loss_margin")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


@dataclass
class QSchedule:
    """Frozen graph-averaged series, one entry per unrolled iteration."""

    entries: list  # n_iterations arrays shaped like the dataset
    degrees: np.ndarray  # per-frame graph degrees

    def slice(self, start: int, stop: int) -> "QSchedule":
        return QSchedule(
            entries=[q[start:stop] for q in self.entries],
            degrees=self.degrees[start:stop],
        )


def _slice_kspace(b: KSpaceData, start: int, stop: int) -> KSpaceData:
    return KSpaceData(
        pattern=SamplingPattern(
            masks=b.pattern.masks[start:stop],
            lines_per_frame=b.pattern.lines_per_frame,
        ),
        values=b.values[start:stop],
    )


def _dc_denominator(b: KSpaceData, lam1: float, lam2: float, d: np.ndarray):
    masks = b.pattern.masks.astype(float)
    denom = masks + lam1 + lam2 * d[:, None, None]
    bad = np.where((denom == 0).any(axis=(1, 2)))[0]
    if bad.size:
        raise NumericError(
            f"singular data-consistency system at frame {int(bad[0])}"
        )
    return denom


@dataclass
class _UnrollTrace:
    iterates: list  # X_0 .. X_N
    denoised: list  # Y_0 .. Y_{N-1}
    caches: list  # denoiser caches per iteration
    kspace_num: list  # forward FFT of each DC numerator
    denom: np.ndarray


def _forward_unroll(
    b: KSpaceData,
    qs: QSchedule | None,
    p: DenoiserParams,
    cfg: UnrollConfig,
    graph: ManifoldGraph | None = None,
) -> _UnrollTrace:
    """Run the N-iteration recursion. Q comes from the frozen schedule when
    qs is given, otherwise from the graph applied to the running iterate."""
    lam1, lam2 = cfg.lam1, cfg.lam2
    if lam2 > 0 and qs is None and graph is None:
        raise ValueError("lam2 > 0 requires a graph or a fixed Q schedule")
    d = np.zeros(b.nframes)
    if qs is not None:
        d = np.asarray(qs.degrees, dtype=float)
        if len(qs.entries) < cfg.n_iterations:
            raise ValueError(
                f"Q schedule has {len(qs.entries)} entries, "
                f"need {cfg.n_iterations}"
            )
    elif graph is not None and lam2 > 0:
        d = graph.degrees
    denom = _dc_denominator(b, lam1, lam2, d)
    a_star_b = apply_A_star(b)
    x = a_star_b
    iterates, denoised, caches, kspace_num = [x], [], [], []
    for n in range(cfg.n_iterations):
        y, cache = denoise_forward(x, p)
        num = a_star_b
        if lam1 != 0:
            num = num + lam1 * y
        if lam2 != 0:
            q = qs.entries[n] if qs is not None else compute_Q(x, graph)
            num = num + lam2 * q
        k = fft2c(num)
        x = ifft2c(k / denom)
        iterates.append(x)
        denoised.append(y)
        caches.append(cache)
        kspace_num.append(k)
    return _UnrollTrace(
        iterates=iterates,
        denoised=denoised,
        caches=caches,
        kspace_num=kspace_num,
        denom=denom,
    )


def reconstruct(
    b: KSpaceData,
    graph: ManifoldGraph | None,
    p: DenoiserParams,
    cfg: UnrollConfig,
):
    """Full reconstruction: X_0 = A*(b), then N shared-weight iterations.

    Returns (x_final, trajectory X_0..X_N).
    """
    trace = _forward_unroll(b, None, p, cfg, graph=graph)
    return trace.iterates[-1], trace.iterates


def reconstruct_with_fixed_Q(
    b: KSpaceData,
    qs: QSchedule,
    p: DenoiserParams,
    cfg: UnrollConfig,
):
    """Same recursion but with the graph-averaged series read from a frozen
    schedule; returns (x_final, trajectory, denoiser caches)."""
    trace = _forward_unroll(b, qs, p, cfg)
    return trace.iterates[-1], trace.iterates, trace.caches


def build_q_schedule(
    b: KSpaceData, graph: ManifoldGraph, p: DenoiserParams, cfg: UnrollConfig
) -> QSchedule:
    """Run the full-dataset reconstruction and freeze Q_n = W X_n for each
    unrolled iteration (the outer-loop step of the training procedure)."""
    _, trajectory = reconstruct(b, graph, p, cfg)
    entries = [compute_Q(trajectory[n], graph) for n in range(cfg.n_iterations)]
    return QSchedule(entries=entries, degrees=graph.degrees.copy())


def _loss_and_grad_xn(x_final, target, margin):
    t = x_final.shape[0]
    lo, hi = margin, t - margin
    diff = np.zeros_like(x_final)
    diff[lo:hi] = x_final[lo:hi] - target[lo:hi]
    m = (hi - lo) * x_final.shape[1] * x_final.shape[2]
    loss = float(np.sum(np.abs(diff[lo:hi]) ** 2) / m)
    return loss, 2.0 * diff / m


def unrolled_gradient(
    batch_b: KSpaceData,
    qs: QSchedule,
    target: np.ndarray,
    p: DenoiserParams,
    cfg: UnrollConfig,
):
    """Loss and exact gradients through the unrolled recursion.

    Loss is the mean squared error between X_N and the target restricted to
    the middle frames of the batch; the frozen Q schedule is treated as a
    constant. Returns (loss, grad_params, grad_lam1, grad_lam2).
    """
    target = np.asarray(target)
    check_same_shape(target, batch_b.values, "target and batch")
    lam1, lam2 = cfg.lam1, cfg.lam2
    trace = _forward_unroll(batch_b, qs, p, cfg)
    loss, gx = _loss_and_grad_xn(trace.iterates[-1], target, cfg.loss_margin)
    if not np.isfinite(loss):
        raise NumericError("non-finite training loss")
    w = 1.0 / trace.denom
    d = np.asarray(qs.degrees, dtype=float)[:, None, None]
    grad_arrays = [np.zeros_like(a) for a in param_arrays(p)]
    g_lam1 = 0.0
    g_lam2 = 0.0
    for n in reversed(range(cfg.n_iterations)):
        k_n = trace.kspace_num[n]
        y_n = trace.denoised[n]
        gk = w * fft2c(gx)
        # local partials w.r.t. the scalar regularization weights
        dxdl1 = ifft2c(-w * w * k_n + w * fft2c(y_n))
        g_lam1 += float(np.real(np.vdot(gx, dxdl1)))
        if lam2 != 0 or cfg.train_lam2:
            q_n = qs.entries[n]
            dxdl2 = ifft2c(-d * w * w * k_n + w * fft2c(q_n))
            g_lam2 += float(np.real(np.vdot(gx, dxdl2)))
        g_r = ifft2c(gk)
        g_y = lam1 * g_r
        grad_p_n, gx = denoise_backward(trace.caches[n], g_y)
        for acc, g in zip(grad_arrays, param_arrays(grad_p_n)):
            acc += g
    grad_p = with_param_arrays(p, grad_arrays)
    return loss, grad_p, g_lam1, g_lam2


def _batch_windows(nframes: int, batch_frames: int, margin: int):
    windows = []
    start = 0
    while start < nframes:
        stop = min(start + batch_frames, nframes)
        if stop - start > 2 * margin:
            windows.append((start, stop))
        start = stop
    return windows


@dataclass
class TrainResult:
    params: DenoiserParams
    lam1: float
    lam2: float
    history: list = field(default_factory=list)


def train(
    dataset_b: KSpaceData,
    target: np.ndarray,
    graph: ManifoldGraph,
    cfg: UnrollConfig,
    initial_params: DenoiserParams | None = None,
    on_epoch=None,
) -> TrainResult:
    """Lagged-Q training of the unrolled network.

    Each outer loop recomputes the frozen Q schedule from a full-dataset
    reconstruction with the current parameters, then runs epochs of ADAM
    updates over contiguous frame batches with that schedule held fixed.
    Regularization weights are clamped at a small positive floor after every
    step so the data-consistency solve stays invertible.
    """
    target = np.asarray(target)
    check_same_shape(target, dataset_b.values, "target and dataset")
    if dataset_b.nframes < cfg.batch_frames:
        raise ValueError("dataset must contain at least batch_frames frames")
    p = initial_params or init_denoiser(
        nlayers=cfg.n_layers,
        width=cfg.n_filters,
        kernel_size=cfg.kernel_size,
        use_norm=cfg.use_norm,
        seed=cfg.seed,
    )
    cfg = UnrollConfig(**{**cfg.__dict__})
    state = AdamState()
    history: list[dict] = []
    windows = _batch_windows(dataset_b.nframes, cfg.batch_frames, cfg.loss_margin)
    for outer in range(cfg.n_outer):
        qs = build_q_schedule(dataset_b, graph, p, cfg)
        for epoch in range(cfg.epochs_per_outer):
            losses = []
            for start, stop in windows:
                bb = _slice_kspace(dataset_b, start, stop)
                loss, grad_p, g_l1, g_l2 = unrolled_gradient(
                    bb, qs.slice(start, stop), target[start:stop], p, cfg
                )
                losses.append(loss)
                arrays = param_arrays(p)
                grads = param_arrays(grad_p)
                if cfg.train_lam1:
                    arrays.append(np.asarray(cfg.lam1, dtype=float))
                    grads.append(np.asarray(g_l1, dtype=float))
                if cfg.train_lam2:
                    arrays.append(np.asarray(cfg.lam2, dtype=float))
                    grads.append(np.asarray(g_l2, dtype=float))
                new_arrays, state = adam_arrays_step(arrays, grads, state, cfg.lr)
                if cfg.train_lam2:
                    cfg.lam2 = max(LAM_FLOOR, float(new_arrays.pop()))
                if cfg.train_lam1:
                    cfg.lam1 = max(LAM_FLOOR, float(new_arrays.pop()))
                p = with_param_arrays(p, new_arrays)
            mean_loss = float(np.mean(losses)) if losses else float("nan")
            if losses and not np.isfinite(mean_loss):
                raise NumericError(
                    f"non-finite loss at outer loop {outer}, epoch {epoch}"
                )
            record = {
                "outer": outer,
                "epoch": epoch,
                "loss": mean_loss,
                "lam1": cfg.lam1,
                "lam2": cfg.lam2,
            }
            history.append(record)
            if on_epoch is not None:
                on_epoch(record)
    return TrainResult(params=p, lam1=cfg.lam1, lam2=cfg.lam2, history=history)
