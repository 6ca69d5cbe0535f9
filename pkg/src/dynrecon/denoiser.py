"""Residual denoiser: y = x - N(x), where N is a small 3D convolutional
network over (frame, row, col) acting on real/imaginary channels.

Forward and backward passes are written directly in numpy so every gradient
is exact and checkable against finite differences. Normalization layers are
optional and default off; when enabled they use the statistics of the tensor
being processed, both in training and at inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NumericError
from .validation import check_finite, check_series

_BN_EPS = 1e-5


@dataclass(frozen=True)
class ConvLayer:
    kernel: np.ndarray  # (out_ch, in_ch, kt, kx, ky), real
    bias: np.ndarray  # (out_ch,)
    scale: np.ndarray | None = None  # normalization scale, (out_ch,)
    shift: np.ndarray | None = None  # normalization shift, (out_ch,)
    relu: bool = True

    def __post_init__(self):
        if self.kernel.ndim != 5:
            raise ValueError(f"kernel must be 5D, got shape {self.kernel.shape}")
        _, _, kt, kx, ky = self.kernel.shape
        if kt % 2 == 0 or kx % 2 == 0 or ky % 2 == 0:
            raise ValueError("kernel extents must be odd")
        if self.bias.shape != (self.kernel.shape[0],):
            raise ValueError("bias shape must match output channels")
        if (self.scale is None) != (self.shift is None):
            raise ValueError("normalization scale and shift come together")
        check_finite(self.kernel, "kernel")
        check_finite(self.bias, "bias")


@dataclass(frozen=True)
class DenoiserParams:
    layers: tuple[ConvLayer, ...]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("need at least one layer")
        if self.layers[0].kernel.shape[1] != 2:
            raise ValueError("first layer must take 2 input channels (re, im)")
        if self.layers[-1].kernel.shape[0] != 2:
            raise ValueError("last layer must emit 2 output channels (re, im)")
        for a, b in zip(self.layers, self.layers[1:]):
            if b.kernel.shape[1] != a.kernel.shape[0]:
                raise ValueError("channel mismatch between consecutive layers")


def init_denoiser(
    nlayers: int = 3,
    width: int = 8,
    kernel_size: int = 3,
    use_norm: bool = False,
    seed: int = 0,
) -> DenoiserParams:
    """Seeded initialization; the final layer starts at zero, so the untrained
    residual network is exactly the identity."""
    if nlayers < 1:
        raise ValueError("nlayers must be >= 1")
    rng = np.random.default_rng(seed)
    k = kernel_size
    channels = [2] + [width] * (nlayers - 1) + [2]
    layers = []
    for i in range(nlayers):
        in_ch, out_ch = channels[i], channels[i + 1]
        last = i == nlayers - 1
        if last:
            kernel = np.zeros((out_ch, in_ch, k, k, k))
        else:
            fan_in = in_ch * k**3
            fan_out = out_ch * k**3
            half = np.sqrt(6.0 / (fan_in + fan_out))
            kernel = rng.uniform(-half, half, size=(out_ch, in_ch, k, k, k))
        scale = np.ones(out_ch) if (use_norm and not last) else None
        shift = np.zeros(out_ch) if (use_norm and not last) else None
        layers.append(
            ConvLayer(
                kernel=kernel,
                bias=np.zeros(out_ch),
                scale=scale,
                shift=shift,
                relu=not last,
            )
        )
    return DenoiserParams(layers=tuple(layers))


# ---------------------------------------------------------------------------
# convolution primitives (zero-padded "same" cross-correlation)

def _conv3d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    _, _, kt, kx, ky = kernel.shape
    pt, px, py = kt // 2, kx // 2, ky // 2
    xp = np.pad(x, ((0, 0), (pt, pt), (px, px), (py, py)))
    win = sliding_window_view(xp, (kt, kx, ky), axis=(1, 2, 3))
    out = np.tensordot(kernel, win, axes=([1, 2, 3, 4], [0, 4, 5, 6]))
    return out + bias[:, None, None, None]


def _conv3d_backward(x: np.ndarray, kernel: np.ndarray, g_out: np.ndarray):
    _, _, kt, kx, ky = kernel.shape
    pt, px, py = kt // 2, kx // 2, ky // 2
    xp = np.pad(x, ((0, 0), (pt, pt), (px, px), (py, py)))
    win = sliding_window_view(xp, (kt, kx, ky), axis=(1, 2, 3))
    g_kernel = np.tensordot(g_out, win, axes=([1, 2, 3], [1, 2, 3]))
    g_bias = g_out.sum(axis=(1, 2, 3))
    gp = np.pad(g_out, ((0, 0), (pt, pt), (px, px), (py, py)))
    gwin = sliding_window_view(gp, (kt, kx, ky), axis=(1, 2, 3))
    kflip = kernel[:, :, ::-1, ::-1, ::-1]
    g_x = np.tensordot(kflip, gwin, axes=([0, 2, 3, 4], [0, 4, 5, 6]))
    return g_kernel, g_bias, g_x


def _bn_forward(x, scale, shift):
    mu = x.mean(axis=(1, 2, 3), keepdims=True)
    var = x.var(axis=(1, 2, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + _BN_EPS)
    xhat = (x - mu) * inv
    out = scale[:, None, None, None] * xhat + shift[:, None, None, None]
    return out, (xhat, inv)


def _bn_backward(g, scale, cache):
    xhat, inv = cache
    m = xhat[0].size
    g_shift = g.sum(axis=(1, 2, 3))
    g_scale = (g * xhat).sum(axis=(1, 2, 3))
    g_hat = g * scale[:, None, None, None]
    s1 = g_hat.sum(axis=(1, 2, 3), keepdims=True)
    s2 = (g_hat * xhat).sum(axis=(1, 2, 3), keepdims=True)
    g_x = inv * (g_hat - s1 / m - xhat * s2 / m)
    return g_x, g_scale, g_shift


# ---------------------------------------------------------------------------
# residual denoiser forward / backward

@dataclass
class DenoiserCache:
    params: DenoiserParams
    layer_caches: list
    input_shape: tuple


def _net_forward(c: np.ndarray, params: DenoiserParams):
    caches = []
    h = c
    for layer in params.layers:
        x_in = h
        h = _conv3d(h, layer.kernel, layer.bias)
        bn_cache = None
        if layer.scale is not None:
            h, bn_cache = _bn_forward(h, layer.scale, layer.shift)
        pre_relu = h
        if layer.relu:
            h = np.maximum(h, 0.0)
        caches.append((x_in, bn_cache, pre_relu))
    return h, caches


def _net_backward(params: DenoiserParams, caches, g: np.ndarray):
    grads = []
    for layer, (x_in, bn_cache, pre_relu) in zip(
        reversed(params.layers), reversed(caches)
    ):
        g_scale = g_shift = None
        if layer.relu:
            g = g * (pre_relu > 0)
        if layer.scale is not None:
            g, g_scale, g_shift = _bn_backward(g, layer.scale, bn_cache)
        g_kernel, g_bias, g = _conv3d_backward(x_in, layer.kernel, g)
        grads.append(
            ConvLayer(
                kernel=g_kernel,
                bias=g_bias,
                scale=g_scale,
                shift=g_shift,
                relu=layer.relu,
            )
        )
    return DenoiserParams(layers=tuple(reversed(grads))), g


def denoise_forward(x, params: DenoiserParams):
    """Apply the residual denoiser; returns (y, cache) with y = x - N(x)."""
    x = check_series(x, "denoiser input")
    c = np.stack([x.real, x.imag]).astype(float)
    n, layer_caches = _net_forward(c, params)
    y = x - (n[0] + 1j * n[1])
    return y, DenoiserCache(params=params, layer_caches=layer_caches, input_shape=x.shape)


def denoise_backward(cache: DenoiserCache, upstream: np.ndarray):
    """Exact gradients of denoise_forward.

    upstream packs the real loss gradient as a complex array
    (d/d(re) + 1j * d/d(im)); the returned grad_input uses the same packing.
    """
    upstream = np.asarray(upstream)
    if upstream.shape != cache.input_shape:
        raise ValueError(
            f"upstream shape {upstream.shape} does not match cached forward "
            f"input {cache.input_shape}"
        )
    g_y = np.stack([upstream.real, upstream.imag]).astype(float)
    grad_params, g_c = _net_backward(cache.params, cache.layer_caches, -g_y)
    grad_input = upstream + (g_c[0] + 1j * g_c[1])
    return grad_params, grad_input


# ---------------------------------------------------------------------------
# parameter flattening + ADAM

def param_arrays(p: DenoiserParams) -> list[np.ndarray]:
    """Deterministic list view of all trainable arrays (kernels, biases,
    normalization scale/shift), layer by layer."""
    out = []
    for layer in p.layers:
        out.append(layer.kernel)
        out.append(layer.bias)
        if layer.scale is not None:
            out.append(layer.scale)
            out.append(layer.shift)
    return out


def with_param_arrays(p: DenoiserParams, arrays: list[np.ndarray]) -> DenoiserParams:
    it = iter(arrays)
    layers = []
    for layer in p.layers:
        kernel = next(it)
        bias = next(it)
        scale = shift = None
        if layer.scale is not None:
            scale = next(it)
            shift = next(it)
        layers.append(replace(layer, kernel=kernel, bias=bias, scale=scale, shift=shift))
    return DenoiserParams(layers=tuple(layers))


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0


def adam_arrays_step(
    arrays: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """One ADAM update over a list of arrays; returns (new_arrays, new_state)."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient passed to the optimizer")
    if not state.m:
        state = AdamState(
            m=[np.zeros_like(a, dtype=float) for a in arrays],
            v=[np.zeros_like(a, dtype=float) for a in arrays],
            step=0,
        )
    t = state.step + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    new_arrays, new_m, new_v = [], [], []
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        new_arrays.append(a - lr * update)
        new_m.append(m)
        new_v.append(v)
    return new_arrays, AdamState(m=new_m, v=new_v, step=t)


def adam_step(p: DenoiserParams, g: DenoiserParams, state: AdamState, lr: float):
    """ADAM update of a full parameter set; returns (new_params, new_state)."""
    arrays, grads = param_arrays(p), param_arrays(g)
    new_arrays, new_state = adam_arrays_step(arrays, grads, state, lr)
    return with_param_arrays(p, new_arrays), new_state
