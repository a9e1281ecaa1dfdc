"""Noise synthesis, PSNR and the benchmark runner."""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .pipeline import denoise, select_profile
from .raster import load_plane

CSV_HEADER = ("image", "sigma", "mode", "seed", "psnr_noisy", "psnr_basic",
              "psnr_final", "wall_seconds", "error")


def mse(ref, test) -> float:
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {test.shape}")
    diff = ref - test
    return float(np.mean(diff * diff))


def psnr(ref, test) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit peak 255; ``inf`` when equal."""
    err = mse(ref, test)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / err)


def awgn(plane, sigma: float, seed: int = 0) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise (PCG64 stream); the result is not clamped."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    plane = np.asarray(plane, dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64(seed))
    return plane + sigma * rng.standard_normal(plane.shape)


@dataclass
class BenchRecord:
    image: str
    sigma: float
    mode: str
    seed: int
    psnr_noisy: float = math.nan
    psnr_basic: float = math.nan
    psnr_final: float = math.nan
    wall_seconds: float = 0.0
    error: str = ""

    def csv_row(self) -> List[str]:
        def db(v):
            if self.error and math.isnan(v):
                return ""
            return "inf" if math.isinf(v) else f"{v:.2f}"

        return [self.image, f"{self.sigma:g}", self.mode, str(self.seed), db(self.psnr_noisy),
                db(self.psnr_basic), db(self.psnr_final), f"{self.wall_seconds:.3f}", self.error]


CorpusItem = Union[str, os.PathLike, Tuple[str, np.ndarray]]


def _item_name(item: CorpusItem) -> str:
    if isinstance(item, tuple):
        return item[0]
    return os.path.splitext(os.path.basename(os.fspath(item)))[0]


def _run_item(item: CorpusItem, sigma: float, mode: str, seed: int,
              overrides: Optional[Mapping[str, object]]) -> BenchRecord:
    rec = BenchRecord(image=_item_name(item), sigma=float(sigma), mode=str(mode), seed=int(seed))
    try:
        clean = item[1] if isinstance(item, tuple) else load_plane(item)
        profile = select_profile(sigma, mode)
        if overrides:
            profile = profile.with_overrides(overrides)
        noisy = awgn(clean, sigma, seed)
        rec.psnr_noisy = psnr(clean, noisy)
        t0 = time.perf_counter()
        result = denoise(noisy, sigma, profile)
        rec.wall_seconds = time.perf_counter() - t0
        rec.psnr_basic = psnr(clean, result.basic)
        rec.psnr_final = psnr(clean, result.final)
    except Exception as exc:  # recorded per row, never aborts the batch
        rec.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return rec


def run_benchmark(corpus: Sequence[CorpusItem], sigmas: Iterable[float], modes: Iterable[str],
                  seeds: Iterable[int] = (0,), overrides: Optional[Mapping[str, object]] = None,
                  workers: int = 1) -> List[BenchRecord]:
    """Run every (image, sigma, mode, seed) combination in that nesting order.

    All modes of one (image, sigma, seed) see the same noise realisation.
    """
    jobs = [(item, s, m, seed, overrides)
            for item in corpus for s in sigmas for m in modes for seed in seeds]
    if workers <= 1 or len(jobs) < 2:
        return [_run_item(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_item, *job) for job in jobs]
        return [f.result() for f in futures]


def write_csv(records: Iterable[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.csv_row())
