"""Multiplicative L-look speckle synthesis.

The speckle process eta follows the Gamma law with unit mean,

    p(eta) = L^L / Gamma(L) * eta^(L-1) * exp(-L * eta),  eta > 0,

i.e. Gamma(shape L, scale 1/L) with mean 1 and variance 1/L, and corrupts
a clean image multiplicatively: J = I * eta.

Sampling is the mean of L unit exponentials drawn by inverse CDF from
PCG64 uniforms (-log1p(-U)). For integer L this is exact, and it uses
only bit-stable primitives (the PCG64 stream and IEEE log1p), so a given
seed reproduces the same field on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import ImageGrid


@dataclass(frozen=True)
class NoiseSpec:
    """Speckle configuration: number of looks L and RNG seed."""

    looks: int
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.looks, (int, np.integer)) or self.looks < 1:
            raise ValueError(f"looks must be an integer >= 1, got {self.looks!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed!r}")


def sample_speckle_field(spec: NoiseSpec, width: int, height: int) -> np.ndarray:
    """Draw an i.i.d. Gamma(L, 1/L) field of shape (height, width).

    Deterministic given the seed; every value is strictly positive.
    """
    if width < 1 or height < 1:
        raise ValueError(f"field dimensions must be >= 1, got {width}x{height}")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    eta = np.zeros((height, width), dtype=np.float64)
    for _ in range(spec.looks):
        # unit exponential via inverse CDF; 1-U in (0, 1] keeps log finite
        eta -= np.log1p(-rng.random((height, width)))
    eta /= spec.looks
    return eta


def apply_multiplicative(clean: ImageGrid, eta: np.ndarray) -> ImageGrid:
    """Corrupt `clean` with the speckle field: output = clean * eta, exact
    elementwise product, no clipping."""
    if eta.shape != clean.data.shape:
        raise ValueError(
            f"noise field shape {eta.shape} does not match image shape {clean.data.shape}")
    return ImageGrid(clean.data * eta, clean.spacing)
