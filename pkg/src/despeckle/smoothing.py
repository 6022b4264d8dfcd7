"""Gaussian presmoothing used inside the diffusion coefficients.

The diffusivities are evaluated on the mollified image G_xi * I rather
than on I itself; this regularization is what keeps the coefficient
bounded away from the degenerate regime. Kernels are sampled Gaussians
truncated at radius ceil(3*xi) and renormalized; convolution uses
replicate padding to stay consistent with the Neumann boundary of the
PDE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .grid import GradientField, ImageGrid, central_gradient


@dataclass(frozen=True)
class GaussianKernel:
    """Normalized sampled Gaussian, stored both as a full (2r+1)^2 tap
    matrix and as its separable 1D factor."""

    sigma: float
    radius: int
    weights: np.ndarray
    weights_1d: np.ndarray


def build_kernel(sigma: float) -> GaussianKernel:
    """Sample exp(-(x^2+y^2)/(2 sigma^2)) on [-r, r]^2, r = ceil(3 sigma),
    and normalize to unit sum."""
    if sigma <= 0:
        raise ValueError(f"kernel sigma must be positive, got {sigma}")
    radius = max(1, math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w1 = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w1 /= w1.sum()
    w2 = np.outer(w1, w1)
    w2 /= w2.sum()
    return GaussianKernel(sigma=sigma, radius=radius, weights=w2, weights_1d=w1)


def _convolve_raw(data: np.ndarray, kernel: GaussianKernel) -> np.ndarray:
    out = correlate1d(data, kernel.weights_1d, axis=1, mode="nearest")
    return correlate1d(out, kernel.weights_1d, axis=0, mode="nearest", output=out)


def convolve(img: ImageGrid, kernel: GaussianKernel) -> ImageGrid:
    """Replicate-padded Gaussian convolution, same output size.

    Runs as two separable 1D passes; with nearest-edge padding this is
    identical (up to rounding) to the dense 2D convolution over the
    replicate-extended grid. The kernel is symmetric, so correlation and
    convolution coincide.
    """
    return ImageGrid(_convolve_raw(img.data, kernel), img.spacing)


def smoothed_gradient(img: ImageGrid, kernel: GaussianKernel) -> GradientField:
    """Gradient of the mollified image: central_gradient(convolve(img))."""
    return central_gradient(convolve(img, kernel))
