"""Synthetic clean test images: disc phantom, stripes, checkerboard.

Stand-ins for the classic synthetic/texture test bitmaps, which are not
distributed. All outputs are deterministic piecewise-constant grids with
hard (non-antialiased) edges so edge preservation is measurable, and all
intensities stay within [min_intensity, 255] so the multiplicative noise
model and the positivity assumption hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .grid import ImageGrid


@dataclass(frozen=True)
class Circles:
    """Discs on a flat background, centers spread on a square lattice."""

    count: int
    radii: tuple
    intensities: tuple
    background: float

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"need at least one disc, got {self.count}")
        if len(self.radii) != self.count or len(self.intensities) != self.count:
            raise ValueError("radii and intensities must both have `count` entries")
        if any(r <= 0 for r in self.radii):
            raise ValueError("disc radii must be positive")


@dataclass(frozen=True)
class Stripes:
    """Vertical stripes alternating between two intensities."""

    period: int
    low: float
    high: float

    def __post_init__(self):
        if self.period < 2:
            raise ValueError(f"stripe period must be >= 2, got {self.period}")


@dataclass(frozen=True)
class Checker:
    """Checkerboard with square cells of side `cell`."""

    cell: int
    low: float
    high: float

    def __post_init__(self):
        if self.cell < 1:
            raise ValueError(f"checker cell must be >= 1, got {self.cell}")


PhantomKind = Union[Circles, Stripes, Checker]


@dataclass(frozen=True)
class SynthSpec:
    kind: PhantomKind
    width: int = 256
    height: int = 256
    min_intensity: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"canvas must be >= 1x1, got {self.width}x{self.height}")
        if self.min_intensity < 1:
            raise ValueError(
                f"min_intensity must be >= 1, got {self.min_intensity}")
        values = self._values()
        bad = [v for v in values if not self.min_intensity <= v <= 255]
        if bad:
            raise ValueError(
                f"intensities {bad} outside [{self.min_intensity}, 255]")

    def _values(self):
        k = self.kind
        if isinstance(k, Circles):
            return (k.background, *k.intensities)
        return (k.low, k.high)


def _lattice_centers(count: int, width: int, height: int):
    # spread disc centers on the smallest square lattice that holds them,
    # row-major cell order
    side = math.ceil(math.sqrt(count))
    cw, ch = width / side, height / side
    centers = []
    for k in range(count):
        row, col = divmod(k, side)
        centers.append(((col + 0.5) * cw, (row + 0.5) * ch))
    return centers


def synthesize(spec: SynthSpec) -> ImageGrid:
    """Render the phantom described by `spec` (deterministic, no RNG)."""
    w, h = spec.width, spec.height
    k = spec.kind
    ii = np.arange(w, dtype=np.float64)
    jj = np.arange(h, dtype=np.float64)

    if isinstance(k, Circles):
        data = np.full((h, w), float(k.background))
        centers = _lattice_centers(k.count, w, h)
        for (cx, cy), r, val in zip(centers, k.radii, k.intensities):
            if cx - r < -0.5 or cx + r > w - 0.5 or cy - r < -0.5 or cy + r > h - 0.5:
                raise ValueError(
                    f"disc of radius {r} at ({cx:g}, {cy:g}) falls outside "
                    f"the {w}x{h} canvas")
            dist2 = (ii[None, :] - cx) ** 2 + (jj[:, None] - cy) ** 2
            data[dist2 <= r * r] = float(val)
        return ImageGrid(data)

    if isinstance(k, Stripes):
        half = (k.period + 1) // 2
        col = np.where((np.arange(w) % k.period) < half, float(k.low), float(k.high))
        return ImageGrid(np.tile(col, (h, 1)))

    if isinstance(k, Checker):
        ix = np.arange(w) // k.cell
        iy = np.arange(h) // k.cell
        parity = (ix[None, :] + iy[:, None]) % 2
        return ImageGrid(np.where(parity == 0, float(k.low), float(k.high)))

    raise ValueError(f"unknown phantom kind: {k!r}")


def default_circle_phantom(width: int = 256, height: int = 256) -> SynthSpec:
    """Four discs of graded radius and intensity on a dark background;
    multiple gray levels exercise the gray-level indicator.

    Canonical desk-scale geometry is radii (20, 28, 36, 44) on a 256x256
    canvas; other canvas sizes scale the radii proportionally.
    """
    scale = min(width, height) / 256.0
    radii = tuple(max(1, round(r * scale)) for r in (20, 28, 36, 44))
    return SynthSpec(
        kind=Circles(count=4, radii=radii,
                     intensities=(90, 140, 190, 240), background=40),
        width=width, height=height)


def default_stripes_phantom(width: int = 256, height: int = 256) -> SynthSpec:
    return SynthSpec(kind=Stripes(period=16, low=60, high=220),
                     width=width, height=height)


def default_checker_phantom(width: int = 256, height: int = 256) -> SynthSpec:
    return SynthSpec(kind=Checker(cell=8, low=60, high=220),
                     width=width, height=height)


DEFAULT_PHANTOMS = {
    "circles": default_circle_phantom,
    "stripes": default_stripes_phantom,
    "checker": default_checker_phantom,
}
