"""Noise-adaptive BM3D denoising for grayscale, satellite and Bayer CFA images."""

__version__ = "0.1.0"

from .cfa import BayerMosaic, add_cfa_noise, demosaick_bilinear, denoise_cfa, mosaic_from_color
from .estimator import BM3DDenoiser, CFADenoiser
from .harness import BenchRecord, awgn, mse, psnr, run_benchmark
from .pipeline import DenoiseResult, Mode, ParameterProfile, denoise, select_profile
from .raster import load_color, load_plane, save_color, save_plane

__all__ = [
    "BM3DDenoiser",
    "BayerMosaic",
    "BenchRecord",
    "CFADenoiser",
    "DenoiseResult",
    "Mode",
    "ParameterProfile",
    "add_cfa_noise",
    "awgn",
    "demosaick_bilinear",
    "denoise",
    "denoise_cfa",
    "load_color",
    "load_plane",
    "mosaic_from_color",
    "mse",
    "psnr",
    "run_benchmark",
    "save_color",
    "save_plane",
    "select_profile",
]
