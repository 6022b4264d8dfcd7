"""Quality measures: PSNR, SSIM, ratio image, surface/contour table.

PSNR uses the *reference* image's maximum as the peak,

    PSNR = 10 log10( max(ref)^2 / MSE ),

not a fixed 255. SSIM follows

    SSIM = (2 mu_x mu_y + c1)(2 sigma_xy + c2)
           / ((mu_x^2 + mu_y^2 + c1)(sigma_x^2 + sigma_y^2 + c2))

with the standard stabilizers c = (k * dynamic_range)^2, k1 = 0.01,
k2 = 0.03. Global mode applies the formula once with whole-image moments;
windowed mode averages the local index over Gaussian windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

from .grid import ImageGrid

# identical images would give +inf dB; report this sentinel instead
PSNR_CAP_DB = 999.0

# ratio image denominator guard
RATIO_MIN_DENOM = 1e-6


@dataclass(frozen=True)
class GaussianWindow:
    """Local SSIM window (the field-standard 11x11, sigma 1.5)."""

    size: int = 11
    sigma: float = 1.5


@dataclass(frozen=True)
class SsimParams:
    """SSIM stabilizers and window choice; window=None means one global
    evaluation with whole-image statistics."""

    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0
    window: Optional[GaussianWindow] = None

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("k1 and k2 must be positive")
        if not self.dynamic_range > 0:
            raise ValueError("dynamic_range must be positive")


def _check_dims(a: ImageGrid, b: ImageGrid):
    if a.data.shape != b.data.shape:
        raise ValueError(
            f"image dimensions differ: {a.data.shape} vs {b.data.shape}")


def _psnr_raw(ref_data: np.ndarray, peak: float, test_data: np.ndarray) -> float:
    diff = ref_data - test_data
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * float(np.log10(peak * peak / mse)), PSNR_CAP_DB)


def psnr(reference: ImageGrid, test: ImageGrid) -> float:
    """Peak signal-to-noise ratio in dB, peak = max over the reference."""
    _check_dims(reference, test)
    peak = float(reference.data.max())
    if peak <= 0:
        raise ValueError("reference image has non-positive peak")
    return _psnr_raw(reference.data, peak, test.data)


def ssim(x: ImageGrid, y: ImageGrid, p: SsimParams = SsimParams()) -> float:
    """Structural similarity index in [-1, 1]; ssim(x, x) = 1."""
    _check_dims(x, y)
    c1 = (p.k1 * p.dynamic_range) ** 2
    c2 = (p.k2 * p.dynamic_range) ** 2
    a, b = x.data, y.data

    if p.window is None:
        mx, my = a.mean(), b.mean()
        vx, vy = a.var(), b.var()
        cov = float(np.mean((a - mx) * (b - my)))
        return float((2 * mx * my + c1) * (2 * cov + c2)
                     / ((mx * mx + my * my + c1) * (vx + vy + c2)))

    w = p.window
    if w.size < 1 or w.size % 2 == 0:
        raise ValueError(f"window size must be odd and >= 1, got {w.size}")
    r = w.size // 2
    t = np.arange(-r, r + 1, dtype=np.float64)
    k1d = np.exp(-(t * t) / (2.0 * w.sigma * w.sigma))
    k1d /= k1d.sum()

    def local_mean(z):
        out = correlate1d(z, k1d, axis=1, mode="nearest")
        return correlate1d(out, k1d, axis=0, mode="nearest")

    mx, my = local_mean(a), local_mean(b)
    vx = local_mean(a * a) - mx * mx
    vy = local_mean(b * b) - my * my
    cov = local_mean(a * b) - mx * my
    num = (2 * mx * my + c1) * (2 * cov + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ratio_image(degraded: ImageGrid, restored: ImageGrid) -> ImageGrid:
    """Point-by-point ratio degraded / restored (raw values).

    A perfect restoration turns the ratio into pure speckle with no
    structural residue. Use :func:`rescale_minmax` before 8-bit export.
    """
    _check_dims(degraded, restored)
    lowest = restored.data.min()
    if lowest < RATIO_MIN_DENOM:
        j, i = np.unravel_index(int(restored.data.argmin()), restored.data.shape)
        raise ValueError(
            f"restored pixel (i={i}, j={j}) = {lowest:g} is below the "
            f"division guard {RATIO_MIN_DENOM:g}")
    return ImageGrid(degraded.data / restored.data, degraded.spacing)


def rescale_minmax(img: ImageGrid, lo: float = 0.0, hi: float = 255.0) -> ImageGrid:
    """Affine rescale of the value range onto [lo, hi] for display export.

    A constant image maps to the midpoint of the target range.
    """
    vmin, vmax = float(img.data.min()), float(img.data.max())
    if vmax == vmin:
        return ImageGrid(np.full_like(img.data, 0.5 * (lo + hi)), img.spacing)
    scaled = (img.data - vmin) * ((hi - lo) / (vmax - vmin)) + lo
    return ImageGrid(scaled, img.spacing)


def surface_and_contour_table(img: ImageGrid) -> np.ndarray:
    """Flatten the grid to (i, j, value) rows in row-major order, for
    external contour/surface plotting. Values are untouched float64, so
    the table round-trips the grid exactly."""
    h, wdt = img.height, img.width
    jj, ii = np.meshgrid(np.arange(h), np.arange(wdt), indexing="ij")
    return np.column_stack([ii.ravel(), jj.ravel(), img.data.ravel()]).astype(np.float64)


def grid_from_table(table: np.ndarray, spacing: float = 1.0) -> ImageGrid:
    """Rebuild an ImageGrid from an (i, j, value) table (round-trip of
    :func:`surface_and_contour_table`)."""
    t = np.asarray(table, dtype=np.float64)
    if t.ndim != 2 or t.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) table, got shape {t.shape}")
    ii = t[:, 0].astype(np.int64)
    jj = t[:, 1].astype(np.int64)
    w, h = int(ii.max()) + 1, int(jj.max()) + 1
    if len(t) != w * h:
        raise ValueError(f"table has {len(t)} rows, expected {w}x{h}={w * h}")
    data = np.empty((h, w), dtype=np.float64)
    data[jj, ii] = t[:, 2]
    return ImageGrid(data, spacing)
