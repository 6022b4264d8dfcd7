"""Explicit time stepping for the telegraph and parabolic despeckling models.

The telegraph model I_tt + gamma I_t = div(g grad I) is advanced by the
explicit scheme

    (1 + gamma tau) I^{n+1} = (2 + gamma tau) I^n - I^{n-1}
                              + tau^2 div(g^n grad I^n),

with I^0 = I^1 = I_0 encoding the zero initial velocity. The code uses the
algebraically identical increment form

    I^{n+1} = I^n + [(I^n - I^{n-1}) + tau^2 div(g^n grad I^n)] / (1 + gamma tau)

which is floating-point-exact on the constant-image fixed point. The Shan
comparison model is the forward-Euler analog without the inertial term:

    I^{n+1} = I^n + tau div(g^n grad I^n).

Coefficients are recomputed from the current iterate each step (coefficient
lagging). A frozen-coefficient von Neumann argument with g <= 1 gives the
step bound tau <= h/sqrt(2); the guard warns rather than fails because the
gamma damping enlarges the stable region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .diffusivity import ShanParams, TdeParams, _shan_raw, _tde_raw
from .grid import ImageGrid, _divergence_raw
from .metrics import _psnr_raw
from .metrics import ssim as _ssim
from .smoothing import GaussianKernel, build_kernel


class DivergenceError(RuntimeError):
    """Numerical blow-up: the scheme produced a non-finite value."""

    def __init__(self, iteration: int, max_abs: float):
        self.iteration = iteration
        self.max_abs = max_abs
        super().__init__(
            f"non-finite value at iteration {iteration} "
            f"(max |I| of finite entries = {max_abs:g}); "
            f"the time step is likely unstable for these parameters")


@dataclass(frozen=True)
class BestPsnr:
    """Stop after `patience` consecutive iterations without a PSNR
    improvement against `reference`; the best iterate seen is returned."""

    reference: ImageGrid
    patience: int = 20

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass(frozen=True)
class FixedIterations:
    """Run exactly n steps (still capped by max_iter)."""

    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"iteration count must be >= 0, got {self.n}")


@dataclass(frozen=True)
class RelativeChange:
    """Stop when the mean absolute update falls below tol relative to the
    mean absolute intensity (blind mode, no reference needed)."""

    tol: float = 1e-4

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")


StoppingPolicy = Union[BestPsnr, FixedIterations, RelativeChange]

ModelParams = Union[TdeParams, ShanParams]


@dataclass
class SolverState:
    """Two-level time state: current I^n, previous I^{n-1}."""

    current: ImageGrid
    previous: ImageGrid
    iteration: int = 1
    best_psnr: Optional[float] = None
    best_image: Optional[ImageGrid] = None

    def __post_init__(self):
        if self.current.data.shape != self.previous.data.shape:
            raise ValueError("current/previous dimensions differ")
        if self.iteration < 1:
            raise ValueError(f"iteration must be >= 1, got {self.iteration}")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    psnr: Optional[float]
    ssim: Optional[float]
    relative_change: float


@dataclass
class RunReport:
    """Outcome of a solver run: the restored grid plus a per-iteration
    trace and an echo of every parameter that influenced the result."""

    iterations_run: int
    trace: list[TraceEntry]
    final: ImageGrid
    params_echo: dict


def _advance(state: SolverState, new_data: np.ndarray) -> SolverState:
    if not np.isfinite(new_data).all():
        finite = new_data[np.isfinite(new_data)]
        max_abs = float(np.abs(finite).max()) if finite.size else float("nan")
        raise DivergenceError(state.iteration + 1, max_abs)
    return SolverState(
        current=ImageGrid(new_data, state.current.spacing),
        previous=state.current,
        iteration=state.iteration + 1,
        best_psnr=state.best_psnr,
        best_image=state.best_image,
    )


def _tde_next(cur: np.ndarray, prev: np.ndarray, h: float, p: TdeParams,
              kernel: GaussianKernel | None = None,
              coefficient: np.ndarray | None = None) -> np.ndarray:
    g = _tde_raw(cur, h, p, kernel) if coefficient is None else coefficient
    div = _divergence_raw(g, cur, h, p.stencil)
    div *= p.tau * p.tau
    div += cur - prev
    div /= 1.0 + p.gamma * p.tau
    div += cur
    return div


def _shan_next(cur: np.ndarray, prev: np.ndarray, h: float, p: ShanParams,
               kernel: GaussianKernel | None = None,
               coefficient: np.ndarray | None = None) -> np.ndarray:
    g = _shan_raw(cur, h, p, kernel) if coefficient is None else coefficient
    div = _divergence_raw(g, cur, h, p.stencil)
    div *= p.tau
    div += cur
    return div


def tde_step(state: SolverState, p: TdeParams,
             kernel: GaussianKernel | None = None,
             coefficient: np.ndarray | None = None) -> SolverState:
    """One telegraph step I^{n-1}, I^n -> I^{n+1}.

    `coefficient` overrides the computed diffusivity (used for frozen-g
    experiments); normally it is recomputed from the current iterate.
    """
    new = _tde_next(state.current.data, state.previous.data,
                    state.current.spacing, p, kernel, coefficient)
    return _advance(state, new)


def shan_step(state: SolverState, p: ShanParams,
              kernel: GaussianKernel | None = None,
              coefficient: np.ndarray | None = None) -> SolverState:
    """One forward-Euler step of the Shan model."""
    new = _shan_next(state.current.data, state.previous.data,
                     state.current.spacing, p, kernel, coefficient)
    return _advance(state, new)


def _stability_guard(p: ModelParams, h: float):
    limit = h / np.sqrt(2.0)
    if p.tau > limit:
        warnings.warn(
            f"tau = {p.tau:g} exceeds the stability guard h/sqrt(2) = {limit:g} "
            f"(frozen-coefficient bound with g <= 1); expect possible blow-up",
            RuntimeWarning, stacklevel=3)


def _echo(p: ModelParams, stop: StoppingPolicy, h: float) -> dict:
    if isinstance(p, TdeParams):
        out = {"model": "tde", "gamma": p.gamma, "nu": p.nu, "k": p.k_edge}
    else:
        out = {"model": "shan", "nu": p.nu, "beta": p.beta_exp}
    out.update({"xi": p.xi, "tau": p.tau, "max_iter": p.max_iter,
                "stencil": p.stencil.value, "spacing": h})
    if isinstance(stop, BestPsnr):
        out["stop"] = f"best-psnr:patience={stop.patience}"
    elif isinstance(stop, FixedIterations):
        out["stop"] = f"fixed:{stop.n}"
    else:
        out["stop"] = f"reltol:{stop.tol:g}"
    return out


def run(initial: ImageGrid, params: ModelParams,
        reference: ImageGrid | None = None,
        trace_ssim: bool = False) -> RunReport:
    """Iterate the chosen model until its stopping policy fires.

    The model is selected by the type of `params`. The initial image must
    be strictly positive (callers clamp on load, floor 1 of 255) and at
    least 3x3. `reference`, when given, adds per-iteration PSNR (and SSIM
    if `trace_ssim`) to the trace; BestPsnr stopping uses the reference
    embedded in the policy.
    """
    if initial.width < 3 or initial.height < 3:
        raise ValueError(
            f"solver needs at least a 3x3 grid, got {initial.width}x{initial.height}")
    if initial.data.min() <= 0:
        raise ValueError(
            "solver input must be strictly positive; clamp the image first "
            "(file loading applies a floor of 1)")

    stop: StoppingPolicy = params.stop if params.stop is not None else RelativeChange()
    if isinstance(stop, BestPsnr):
        ref = stop.reference
    else:
        ref = reference
    if ref is not None and ref.data.shape != initial.data.shape:
        raise ValueError("reference dimensions do not match the input image")

    _stability_guard(params, initial.spacing)
    kernel = build_kernel(params.xi)
    is_tde = isinstance(params, TdeParams)
    h = initial.spacing

    limit = params.max_iter
    if isinstance(stop, FixedIterations):
        limit = min(limit, stop.n)

    ref_data = ref.data if ref is not None else None
    peak = float(ref_data.max()) if ref_data is not None else 0.0

    cur = initial.data
    prev = initial.data
    iteration = 1
    trace: list[TraceEntry] = []
    best_psnr: float | None = None
    best: np.ndarray | None = None
    since_best = 0

    steps = 0
    while steps < limit:
        new = _tde_next(cur, prev, h, params, kernel) if is_tde \
            else _shan_next(cur, prev, h, params, kernel)
        if not np.isfinite(new).all():
            finite = new[np.isfinite(new)]
            max_abs = float(np.abs(finite).max()) if finite.size else float("nan")
            raise DivergenceError(iteration + 1, max_abs)
        prev, cur = cur, new
        iteration += 1
        steps += 1

        delta = float(np.abs(cur - prev).mean())
        scale = float(np.abs(prev).mean())
        rel = delta / scale if scale > 0 else delta

        cur_psnr = cur_ssim = None
        if ref_data is not None:
            cur_psnr = _psnr_raw(ref_data, peak, cur)
            if trace_ssim:
                cur_ssim = _ssim(ref, ImageGrid(cur, h))
        trace.append(TraceEntry(iteration, cur_psnr, cur_ssim, rel))

        if isinstance(stop, BestPsnr):
            if best_psnr is None or cur_psnr > best_psnr:
                best_psnr = cur_psnr
                best = cur
                since_best = 0
            else:
                since_best += 1
                if since_best >= stop.patience:
                    break
        elif isinstance(stop, RelativeChange):
            if rel < stop.tol:
                break

    final_data = best if (isinstance(stop, BestPsnr) and best is not None) else cur

    return RunReport(
        iterations_run=steps,
        trace=trace,
        final=ImageGrid(final_data, h),
        params_echo=_echo(params, stop, initial.spacing),
    )
