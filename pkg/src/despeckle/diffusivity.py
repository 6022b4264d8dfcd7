"""Diffusion coefficients: the gray-level telegraph model's and Shan's.

The proposed coefficient couples a gray-level indicator with a gradient
edge stopper, both evaluated on the mollified image I_xi = G_xi * I:

    g = 2|I_xi|^nu / (M_xi^nu + |I_xi|^nu) * 1 / (1 + (|grad I_xi| / K)^2)

with M_xi = max |I_xi| over the grid, recomputed at every call because the
normalization tracks the evolving image. Writing s = |I_xi| / M_xi in
[0, 1], the first factor is b(s) = 2 s^nu / (1 + s^nu): diffusion slows in
dark regions, where multiplicative noise is weak, and runs freely in
bright ones. The comparison coefficient (Shan) is

    g = (|I_xi| / M_xi)^nu * 1 / (1 + |grad I_xi|^beta).

Both coefficients take values in [0, 1]; for an image with positive
mollified minimum, the proposed g is bounded below by the computable
constant b(min|I_xi|/M_xi) / (1 + (max|grad I_xi|/K)^2) > 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .grid import ImageGrid, StencilMode, _gradient_magnitude
from .smoothing import GaussianKernel, _convolve_raw, build_kernel

if TYPE_CHECKING:
    from .solver import StoppingPolicy

# max |I_xi| below this is treated as a degenerate (effectively zero) image
DEGENERATE_MAX = 1e-8


class DegenerateImageError(ValueError):
    """Raised when the mollified image is identically ~0, so the gray-level
    normalization M_xi is meaningless."""


@dataclass(frozen=True)
class TdeParams:
    """Parameters of the telegraph diffusion model and its explicit scheme.

    gamma   damping coefficient (> 0)
    nu      gray-level exponent (>= 1)
    k_edge  gradient scale K of the edge stopper (> 0)
    xi      Gaussian presmoothing sigma (> 0)
    tau     time step (> 0); tau <= h/sqrt(2) keeps the explicit scheme stable
    """

    gamma: float
    nu: float = 1.0
    k_edge: float = 1.0
    xi: float = 1.0
    tau: float = 0.2
    max_iter: int = 2000
    stencil: StencilMode = StencilMode.CONSERVATIVE
    stop: Optional["StoppingPolicy"] = None  # None = blind relative-change stop

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.nu >= 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")
        if not self.k_edge > 0:
            raise ValueError(f"k_edge must be positive, got {self.k_edge}")
        if not self.xi > 0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")


@dataclass(frozen=True)
class ShanParams:
    """Parameters of the Shan comparison model (parabolic).

    nu is the gray-level exponent (the benchmark table's alpha column) and
    beta_exp the gradient exponent of the 1/(1 + |grad I_xi|^beta) stopper.
    """

    nu: float
    beta_exp: float
    xi: float = 1.0
    tau: float = 0.2
    max_iter: int = 2000
    stencil: StencilMode = StencilMode.CONSERVATIVE
    stop: Optional["StoppingPolicy"] = None

    def __post_init__(self):
        for name in ("nu", "beta_exp", "xi", "tau"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be >= 0, got {self.max_iter}")


def _power(base: np.ndarray, exponent: float) -> np.ndarray:
    # np.power is the hot spot for fractional exponents; shortcut the
    # common integer cases
    if exponent == 1.0:
        return base
    if exponent == 2.0:
        return base * base
    return np.power(base, exponent)


def gray_indicator(s, nu: float):
    """Gray-level indicator b(s) = 2 s^nu / (1 + s^nu) on s in [0, 1].

    Monotone nondecreasing, b(0) = 0, b(1) = 1. Accepts scalars or arrays.
    """
    if not nu >= 1:
        raise ValueError(f"nu must be >= 1, got {nu}")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0) or np.any(s > 1):
        raise ValueError(
            "gray-level ratio outside [0, 1]; upstream max-normalization is broken")
    p = _power(s, nu)
    out = 2.0 * p / (1.0 + p)
    return out if out.ndim else float(out)


def edge_stopper(grad_mag, k: float):
    """Edge-stopping factor 1 / (1 + (m/K)^2), in (0, 1], decreasing in m."""
    if not k > 0:
        raise ValueError(f"K must be positive, got {k}")
    m = np.asarray(grad_mag, dtype=np.float64)
    r = m / k
    out = 1.0 / (1.0 + r * r)
    return out if out.ndim else float(out)


def shan_stopper(grad_mag, beta: float):
    """Shan's gradient factor 1 / (1 + m^beta), in (0, 1]."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    m = np.asarray(grad_mag, dtype=np.float64)
    out = 1.0 / (1.0 + _power(m, beta))
    return out if out.ndim else float(out)


def _mollified_raw(data: np.ndarray, h: float, xi: float,
                   kernel: GaussianKernel | None):
    if kernel is None:
        kernel = build_kernel(xi)
    sm = _convolve_raw(data, kernel)
    a = np.abs(sm, out=sm)
    m_xi = float(a.max())
    if m_xi < DEGENERATE_MAX:
        raise DegenerateImageError(
            f"max |I_xi| = {m_xi:g} below {DEGENERATE_MAX:g}; image is degenerate")
    mag = _gradient_magnitude(a, h)
    a /= m_xi
    return a, mag


def _tde_raw(data: np.ndarray, h: float, p: TdeParams,
             kernel: GaussianKernel | None = None) -> np.ndarray:
    # s is in [0, 1] by construction, so the gray_indicator domain check
    # is skipped on this hot path
    s, mag = _mollified_raw(data, h, p.xi, kernel)
    sp = _power(s, p.nu)
    g = 2.0 * sp / (1.0 + sp)
    mag /= p.k_edge
    mag *= mag
    mag += 1.0
    g /= mag
    return g


def tde_coefficient(img: ImageGrid, p: TdeParams,
                    kernel: GaussianKernel | None = None) -> np.ndarray:
    """Per-pixel diffusivity of the proposed model, in [0, 1].

    M_xi is recomputed from this image (it tracks the current iterate when
    called from the solver). Pass a prebuilt kernel to skip rebuilding it
    in iteration loops.
    """
    return _tde_raw(img.data, img.spacing, p, kernel)


def tde_kappa_bound(img: ImageGrid, p: TdeParams,
                    kernel: GaussianKernel | None = None) -> float:
    """Computable lower bound kappa for tde_coefficient on this image:
    b(min|I_xi|/M_xi) / (1 + (max|grad I_xi|/K)^2).

    Positive whenever min |I_xi| > 0; the coefficient field dominates it
    pixelwise because both factors are monotone.
    """
    s, mag = _mollified_raw(img.data, img.spacing, p.xi, kernel)
    return float(gray_indicator(s.min(), p.nu) * edge_stopper(mag.max(), p.k_edge))


def _shan_raw(data: np.ndarray, h: float, p: ShanParams,
              kernel: GaussianKernel | None = None) -> np.ndarray:
    # s and mag are fresh local arrays, safe to consume in place
    s, mag = _mollified_raw(data, h, p.xi, kernel)
    g = _power(s, p.nu)
    den = _power(mag, p.beta_exp)
    den += 1.0
    g /= den
    return g


def shan_coefficient(img: ImageGrid, p: ShanParams,
                     kernel: GaussianKernel | None = None) -> np.ndarray:
    """Per-pixel diffusivity of the Shan comparison model, in [0, 1]."""
    return _shan_raw(img.data, img.spacing, p, kernel)
