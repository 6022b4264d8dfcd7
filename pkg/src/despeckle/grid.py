"""Image grid container and discrete differential operators.

Every numerical module in this package shares one spatial discretization:
a regular 2D grid with uniform spacing h, replicate (nearest-edge) ghost
cells implementing the zero-flux Neumann boundary, and central differences
for first derivatives,

    dI/dx at (i,j)  ~  (I[i+1,j] - I[i-1,j]) / (2h).

Arrays are stored row-major with ``data[j, i]`` the intensity at column i
(the x direction) and row j (the y direction). The ``_raw`` helpers work
on bare ndarrays and are shared by the public wrappers and the solver's
hot loop, so both paths produce bit-identical values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class StencilMode(Enum):
    """Spatial discretization of div(g grad I).

    CONSERVATIVE is the half-point flux form with arithmetic-mean face
    diffusivities; under the replicate boundary its discrete divergence
    telescopes to zero, so the grid mean is preserved. PAPER_CENTRAL is
    the literal nested central-difference form; it decouples even and odd
    pixels (checkerboard modes) and is provided for comparison only.
    """

    CONSERVATIVE = "conservative"
    PAPER_CENTRAL = "paper-central"


@dataclass
class ImageGrid:
    """2D scalar intensity field with uniform grid spacing.

    Intensities are kept as unclipped float64 values; the nominal working
    range is [0, 255] but nothing inside the pipeline truncates or clips
    (clipping happens only at 8-bit image export).
    """

    data: np.ndarray
    spacing: float = 1.0

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"image data must be 2D, got shape {self.data.shape}")
        if self.data.size == 0:
            raise ValueError("image data must be non-empty")
        if not np.isfinite(self.data).all():
            raise ValueError("image data contains NaN or Inf")
        if not self.spacing > 0:
            raise ValueError(f"grid spacing must be positive, got {self.spacing}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def copy(self) -> "ImageGrid":
        return ImageGrid(self.data.copy(), self.spacing)


@dataclass
class GradientField:
    """Per-pixel central-difference gradient: components and magnitude."""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray


def _pad_edge(a: np.ndarray, r: int) -> np.ndarray:
    """Replicate-pad by r cells (same layout as np.pad mode='edge',
    without its bookkeeping overhead)."""
    h, w = a.shape
    out = np.empty((h + 2 * r, w + 2 * r), dtype=np.float64)
    out[r:h + r, r:w + r] = a
    out[r:h + r, :r] = a[:, :1]
    out[r:h + r, w + r:] = a[:, -1:]
    out[:r, :] = out[r:r + 1, :]
    out[h + r:, :] = out[h + r - 1:h + r, :]
    return out


def extend_replicate(img: ImageGrid, radius: int) -> ImageGrid:
    """Pad the grid by `radius` ghost cells replicating the nearest edge pixel.

    This is the discrete Neumann condition: the ghost values equal the
    boundary values (I[-1,j] = I[0,j] and so on), making the boundary
    normal derivative vanish under central differences.
    """
    if radius < 1:
        raise ValueError(f"replicate radius must be >= 1, got {radius}")
    return ImageGrid(_pad_edge(img.data, radius), img.spacing)


def crop(img: ImageGrid, radius: int) -> ImageGrid:
    """Inverse of :func:`extend_replicate`: drop `radius` border cells."""
    if radius < 1:
        raise ValueError(f"crop radius must be >= 1, got {radius}")
    if img.width <= 2 * radius or img.height <= 2 * radius:
        raise ValueError("crop radius larger than grid")
    return ImageGrid(img.data[radius:-radius, radius:-radius].copy(), img.spacing)


def _gradient_xy(data: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    p = _pad_edge(data, 1)
    inv = 1.0 / (2.0 * h)
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) * inv
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) * inv
    return gx, gy


def _gradient_magnitude(data: np.ndarray, h: float) -> np.ndarray:
    gx, gy = _gradient_xy(data, h)
    gx *= gx
    gy *= gy
    gx += gy
    return np.sqrt(gx, out=gx)


def central_gradient(img: ImageGrid) -> GradientField:
    """Central-difference gradient with replicate ghost cells.

    At borders the replicated neighbor collapses the stencil to a one-sided
    half-difference, so the normal derivative at the boundary is halved and
    vanishes for boundary-constant data.
    """
    gx, gy = _gradient_xy(img.data, img.spacing)
    return GradientField(gx, gy, np.sqrt(gx * gx + gy * gy))


def _divergence_raw(g: np.ndarray, data: np.ndarray, h: float,
                    mode: StencilMode) -> np.ndarray:
    if mode is StencilMode.CONSERVATIVE:
        ip = _pad_edge(data, 1)
        gp = _pad_edge(g, 1)
        # each interior face is computed once and reused by both cells, so
        # the grid sum telescopes to zero exactly (boundary faces vanish
        # because the replicated difference is zero)
        fx = gp[1:-1, 1:] + gp[1:-1, :-1]
        fx *= ip[1:-1, 1:] - ip[1:-1, :-1]
        fy = gp[1:, 1:-1] + gp[:-1, 1:-1]
        fy *= ip[1:, 1:-1] - ip[:-1, 1:-1]
        div = fx[:, 1:] - fx[:, :-1]
        div += fy[1:, :] - fy[:-1, :]
        div *= 0.5 / (h * h)
        return div

    if mode is StencilMode.PAPER_CENTRAL:
        ip = _pad_edge(data, 2)
        gp = _pad_edge(g, 1)
        inv = 1.0 / (2.0 * h)
        # flux p = g * central dI, evaluated on a one-cell halo per axis
        px = gp[1:-1, :] * ((ip[2:-2, 2:] - ip[2:-2, :-2]) * inv)
        py = gp[:, 1:-1] * ((ip[2:, 2:-2] - ip[:-2, 2:-2]) * inv)
        div = (px[:, 2:] - px[:, :-2]) * inv
        div += (py[2:, :] - py[:-2, :]) * inv
        return div

    raise ValueError(f"unknown stencil mode: {mode!r}")


def divergence_of_flux(g: np.ndarray, img: ImageGrid,
                       mode: StencilMode = StencilMode.CONSERVATIVE) -> np.ndarray:
    """Discrete div(g grad I) under the replicate (Neumann) boundary.

    CONSERVATIVE evaluates per-axis face fluxes

        [g_{i+1/2} (I_{i+1} - I_i) - g_{i-1/2} (I_i - I_{i-1})] / h^2

    with g at half points the arithmetic mean of the adjacent cell values.
    Boundary faces carry zero flux (replicated neighbors are equal), so the
    result sums to zero over the grid up to rounding.

    PAPER_CENTRAL nests two central differences per axis; ghost cells
    replicate the nearest boundary value for both I and g, which makes the
    inner derivative vanish at ghost columns/rows.

    `g` must be finite and nonnegative (caller contract; not rechecked in
    this hot path).
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape != img.data.shape:
        raise ValueError(
            f"coefficient shape {g.shape} does not match image shape {img.data.shape}")
    return _divergence_raw(g, img.data, img.spacing, mode)
