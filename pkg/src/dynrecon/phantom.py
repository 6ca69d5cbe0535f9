"""Synthetic free-breathing dynamic phantom with known cardiac and
respiratory phases, plus navigator-signal simulation.

Each frame is a static soft-edged torso ellipse plus a beating heart ellipse
whose radii oscillate with the cardiac phase; the whole scene translates
vertically with the respiratory phase. The two periods are incommensurate by
construction, so frames with matching phase pairs are similar images, which
is exactly the structure the manifold prior exploits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import fft2c
from .validation import check_series

TORSO_INTENSITY = 0.5
HEART_INTENSITY = 0.8
_EDGE_SOFTNESS = 0.08


@dataclass(frozen=True)
class PhantomConfig:
    height: int = 32
    width: int = 32
    nframes: int = 60
    cardiac_period: float = 8.7  # frames per cycle
    resp_period: float = 23.3
    resp_amplitude: float = 2.0  # pixels of vertical translation
    contraction_ratio: float = 0.6
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.height < 4 or self.width < 4 or self.height % 2 or self.width % 2:
            raise ValueError("height and width must be even and >= 4")
        if self.cardiac_period < 4 or self.resp_period < 4:
            raise ValueError("periods must be >= 4 frames")
        if self.cardiac_period == self.resp_period:
            raise ValueError("cardiac and respiratory periods must differ")
        if not 0 < self.contraction_ratio <= 1:
            raise ValueError("contraction_ratio must lie in (0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")

    @property
    def peak_intensity(self) -> float:
        return TORSO_INTENSITY + HEART_INTENSITY


@dataclass(frozen=True)
class PhaseRecord:
    cardiac: np.ndarray  # per frame, in [0, 2*pi)
    respiratory: np.ndarray

    def __post_init__(self):
        if self.cardiac.shape != self.respiratory.shape or self.cardiac.ndim != 1:
            raise ValueError("phase arrays must be matching 1D vectors")


def phase_distance(rec: PhaseRecord, i: int, j: int) -> float:
    """Combined circular distance between the phase pairs of two frames."""
    def circ(a, b):
        d = abs(a - b) % (2 * np.pi)
        return min(d, 2 * np.pi - d)

    dc = circ(rec.cardiac[i], rec.cardiac[j])
    dr = circ(rec.respiratory[i], rec.respiratory[j])
    return float(np.hypot(dc, dr))


def _soft_ellipse(yy, xx, cy, cx, ry, rx):
    rho = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2
    arg = np.minimum((rho - 1.0) / _EDGE_SOFTNESS, 700.0)  # avoid exp overflow
    return 1.0 / (1.0 + np.exp(arg))


def _frame(cfg: PhantomConfig, yy, xx, phi_c, phi_r):
    cy = (cfg.height - 1) / 2.0 + cfg.resp_amplitude * np.sin(phi_r)
    cx = (cfg.width - 1) / 2.0
    torso = TORSO_INTENSITY * _soft_ellipse(
        yy, xx, cy, cx, 0.38 * cfg.height, 0.38 * cfg.width
    )
    s = 0.5 * (1 + cfg.contraction_ratio) + 0.5 * (1 - cfg.contraction_ratio) * np.cos(
        phi_c
    )
    heart = HEART_INTENSITY * _soft_ellipse(
        yy, xx, cy - 0.05 * cfg.height, cx, s * 0.16 * cfg.height, s * 0.16 * cfg.width
    )
    return torso + heart


def generate_phantom(cfg: PhantomConfig):
    """Deterministic phantom series and its ground-truth phase record."""
    # torso must stay inside the grid at maximum respiratory displacement
    if 0.38 * cfg.height + cfg.resp_amplitude > (cfg.height - 1) / 2.0:
        raise ValueError(
            "phantom geometry exceeds image bounds at maximum displacement"
        )
    rng = np.random.default_rng(cfg.seed)
    # seeded initial phase offsets make different seeds genuinely different
    # motion trajectories even in the noiseless case
    off_c, off_r = rng.uniform(0.0, 2 * np.pi, size=2)
    t = np.arange(cfg.nframes)
    cardiac = (2 * np.pi * t / cfg.cardiac_period + off_c) % (2 * np.pi)
    resp = (2 * np.pi * t / cfg.resp_period + off_r) % (2 * np.pi)
    yy, xx = np.meshgrid(
        np.arange(cfg.height, dtype=float),
        np.arange(cfg.width, dtype=float),
        indexing="ij",
    )
    frames = np.empty((cfg.nframes, cfg.height, cfg.width), dtype=np.complex128)
    # fixed smooth phase ramp makes the data genuinely complex
    ramp = np.exp(1j * (0.2 + 1.5 * np.pi * xx / cfg.width + 0.8 * np.pi * yy / cfg.height))
    for i in range(cfg.nframes):
        frames[i] = _frame(cfg, yy, xx, cardiac[i], resp[i]) * ramp
    if cfg.noise_sigma > 0:
        noise = rng.normal(size=frames.shape) + 1j * rng.normal(size=frames.shape)
        frames = frames + cfg.noise_sigma / np.sqrt(2.0) * noise
    return frames, PhaseRecord(cardiac=cardiac, respiratory=resp)


def simulate_navigators(x, lines) -> np.ndarray:
    """Per-frame k-space samples along fixed navigator lines.

    lines is a list of (rows, cols) index pairs, identical for all frames;
    samples are concatenated line-major, index-minor.
    """
    x = check_series(x, "series")
    k = fft2c(x)
    chunks = [k[:, rows, cols] for rows, cols in lines]
    return np.concatenate(chunks, axis=1)
