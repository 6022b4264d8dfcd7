"""Gray-level telegraph diffusion toolkit for multiplicative speckle removal.

Core pipeline: synthesize or load a positive grayscale image, corrupt it
with L-look Gamma speckle, despeckle it with the telegraph-diffusion model
(or the parabolic Shan baseline), and score PSNR/SSIM against the clean
reference. See the CLI (`despeckle --help`) for the file-level workflow.
"""

from .bench import BenchRow, bench_report, run_bench, table1_params
from .diffusivity import (DegenerateImageError, ShanParams, TdeParams,
                          edge_stopper, gray_indicator, shan_coefficient,
                          shan_stopper, tde_coefficient, tde_kappa_bound)
from .fileio import PgmFormatError, load_image, save_image
from .grid import (GradientField, ImageGrid, StencilMode, central_gradient,
                   crop, divergence_of_flux, extend_replicate)
from .metrics import (GaussianWindow, SsimParams, grid_from_table, psnr,
                      ratio_image, rescale_minmax, ssim,
                      surface_and_contour_table)
from .phantoms import (Checker, Circles, Stripes, SynthSpec,
                       default_circle_phantom, synthesize)
from .smoothing import GaussianKernel, build_kernel, convolve, smoothed_gradient
from .solver import (BestPsnr, DivergenceError, FixedIterations,
                     RelativeChange, RunReport, SolverState, StoppingPolicy,
                     TraceEntry, run, shan_step, tde_step)
from .speckle import NoiseSpec, apply_multiplicative, sample_speckle_field

__version__ = "0.1.0"

__all__ = [
    "BenchRow", "BestPsnr", "Checker", "Circles", "DegenerateImageError",
    "DivergenceError", "FixedIterations", "GaussianKernel", "GaussianWindow",
    "GradientField", "ImageGrid", "NoiseSpec", "PgmFormatError",
    "RelativeChange", "RunReport", "ShanParams", "SolverState", "SsimParams",
    "StencilMode", "StoppingPolicy", "Stripes", "SynthSpec", "TdeParams",
    "TraceEntry", "apply_multiplicative", "bench_report", "build_kernel",
    "central_gradient", "convolve", "crop", "default_circle_phantom",
    "divergence_of_flux", "edge_stopper", "extend_replicate", "gray_indicator",
    "grid_from_table", "load_image", "psnr", "ratio_image", "rescale_minmax",
    "run", "run_bench", "sample_speckle_field", "save_image",
    "shan_coefficient", "shan_step", "shan_stopper", "smoothed_gradient",
    "ssim", "surface_and_contour_table", "synthesize", "table1_params",
    "tde_coefficient", "tde_kappa_bound", "tde_step",
]
