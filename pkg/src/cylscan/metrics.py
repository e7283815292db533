"""Evaluation metrics: radial noise statistics, diameter error, PSNR and SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .cloud import PointCloud
from .fitting import CylinderModel

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0

_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class ImageGrid:
    """8-bit-range image: row-major samples in [0, 255], 1 or 3 channels."""

    width: int
    height: int
    channels: int
    samples: np.ndarray  # (height, width, channels) float64

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        arr = np.asarray(self.samples, dtype=np.float64).reshape(
            self.height, self.width, self.channels
        )
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        if arr.size and (arr.min() < 0.0 or arr.max() > 255.0):
            raise ValueError("image samples must lie in [0, 255]")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_array(cls, array) -> "ImageGrid":
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w[, 1|3]) array, got shape {arr.shape}")
        h, w, c = arr.shape
        return cls(width=w, height=h, channels=c, samples=arr)

    def luminance(self) -> np.ndarray:
        """Grayscale plane: identity for 1 channel, Rec.601 weights for RGB."""
        if self.channels == 1:
            return self.samples[:, :, 0]
        return self.samples @ _LUMA_WEIGHTS


def load_image(path) -> ImageGrid:
    """Read an 8-bit PNG/PGM/PPM (anything Pillow decodes) as an ImageGrid."""
    from PIL import Image

    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return ImageGrid.from_array(arr.astype(np.float64))


@dataclass(frozen=True)
class RadialStats:
    """Spread of signed radial residuals dist(p, axis) - radius over a cloud."""

    count: int
    mean: float
    std: float
    rms: float


@dataclass(frozen=True)
class DiameterReport:
    estimated: float
    ground_truth: float
    abs_error: float
    pct_error: float


@dataclass(frozen=True)
class RenderQualityReport:
    """PSNR (dB, +inf for identical images) and mean SSIM in [-1, 1]."""

    psnr: float
    ssim: float

    def __post_init__(self):
        if not -1.0 <= self.ssim <= 1.0:
            raise ValueError(f"ssim must lie in [-1, 1], got {self.ssim}")


def radial_residual_stats(cloud: PointCloud, model: CylinderModel) -> RadialStats:
    """Mean / sample std / rms of signed radial residuals against `model`."""
    if len(cloud) == 0:
        raise ValueError("radial stats are undefined for an empty cloud")
    res = model.radial_residuals(cloud.points)
    n = len(res)
    std = float(np.std(res, ddof=1)) if n > 1 else 0.0
    return RadialStats(
        count=n,
        mean=float(res.mean()),
        std=std,
        rms=float(np.sqrt(np.mean(res**2))),
    )


def diameter_error(estimated: float, ground_truth: float) -> DiameterReport:
    """Absolute and percent (of ground truth) diameter error."""
    if not ground_truth > 0.0:
        raise ValueError(f"ground truth must be positive, got {ground_truth}")
    abs_error = abs(estimated - ground_truth)
    return DiameterReport(
        estimated=float(estimated),
        ground_truth=float(ground_truth),
        abs_error=abs_error,
        pct_error=100.0 * abs_error / ground_truth,
    )


def _check_same_shape(a: ImageGrid, b: ImageGrid) -> None:
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise ValueError(
            f"image shapes differ: {a.width}x{a.height}x{a.channels} vs "
            f"{b.width}x{b.height}x{b.channels}"
        )


def psnr(a: ImageGrid, b: ImageGrid, peak: float = DYNAMIC_RANGE) -> float:
    """Peak signal-to-noise ratio over all samples; +inf for identical images."""
    _check_same_shape(a, b)
    mse = float(np.mean((a.samples - b.samples) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a: ImageGrid, b: ImageGrid) -> float:
    """Mean structural similarity on the luminance plane.

    Standard formulation: 11x11 Gaussian window (sigma 1.5), k1=0.01,
    k2=0.03, L=255, averaged over window placements fully inside the
    image.
    """
    _check_same_shape(a, b)
    if a.width < SSIM_WINDOW or a.height < SSIM_WINDOW:
        raise ValueError(
            f"image must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM"
        )
    x = a.luminance()
    y = b.luminance()
    window = _gaussian_window()
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2

    mu_x = convolve2d(x, window, mode="valid")
    mu_y = convolve2d(y, window, mode="valid")
    var_x = convolve2d(x * x, window, mode="valid") - mu_x**2
    var_y = convolve2d(y * y, window, mode="valid") - mu_y**2
    cov_xy = convolve2d(x * y, window, mode="valid") - mu_x * mu_y

    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    )
    return float(np.clip(ssim_map.mean(), -1.0, 1.0))
