"""Bayer CFA modelling: mosaicking, channel-dependent noise, mosaic-domain
denoising through phase subplanes, and bilinear demosaicking."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Optional, Tuple

import numpy as np
from scipy.ndimage import correlate

from .pipeline import denoise, select_profile
from .raster import check_color, check_plane

PATTERNS = ("RGGB", "GRBG", "GBRG", "BGGR")
_CHANNEL_INDEX = {"R": 0, "G": 1, "B": 2}
# (dy, dx) of the four 2x2 phases, in pattern-string order
_PHASES = ((0, 0), (0, 1), (1, 0), (1, 1))


def _check_pattern(pattern: str) -> str:
    pattern = pattern.upper()
    if pattern not in PATTERNS:
        raise ValueError(f"unknown Bayer pattern {pattern!r}; expected one of {', '.join(PATTERNS)}")
    return pattern


def _check_even(h: int, w: int) -> None:
    if h % 2 or w % 2 or h < 2 or w < 2:
        raise ValueError(f"Bayer data needs even, non-zero dimensions; got {w}x{h}")


@dataclass(frozen=True)
class BayerMosaic:
    plane: np.ndarray
    pattern: str = "RGGB"
    channel_sigmas: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        plane = check_plane(self.plane, "mosaic")
        _check_even(*plane.shape)
        object.__setattr__(self, "plane", plane)
        object.__setattr__(self, "pattern", _check_pattern(self.pattern))
        sig = tuple(float(s) for s in self.channel_sigmas)
        if len(sig) != 3 or min(sig) < 0:
            raise ValueError(f"channel_sigmas must be three values >= 0, got {self.channel_sigmas}")
        object.__setattr__(self, "channel_sigmas", sig)

    def channel_map(self) -> np.ndarray:
        """Channel index (0=R, 1=G, 2=B) of every pixel."""
        h, w = self.plane.shape
        tile = np.array([_CHANNEL_INDEX[c] for c in self.pattern]).reshape(2, 2)
        return np.tile(tile, (h // 2, w // 2))

    def phase_sigmas(self) -> Tuple[float, float, float, float]:
        return tuple(self.channel_sigmas[_CHANNEL_INDEX[c]] for c in self.pattern)


def mosaic_from_color(image, pattern: str = "RGGB",
                      channel_sigmas=(0.0, 0.0, 0.0)) -> BayerMosaic:
    image = check_color(image)
    h, w, _ = image.shape
    _check_even(h, w)
    pattern = _check_pattern(pattern)
    plane = np.empty((h, w))
    for (dy, dx), ch in zip(_PHASES, pattern):
        plane[dy::2, dx::2] = image[dy::2, dx::2, _CHANNEL_INDEX[ch]]
    return BayerMosaic(plane, pattern, channel_sigmas)


def add_cfa_noise(mosaic: BayerMosaic, seed: int = 0) -> BayerMosaic:
    """Add zero-mean Gaussian noise with the per-channel standard deviations."""
    sig = np.asarray(mosaic.channel_sigmas)[mosaic.channel_map()]
    rng = np.random.Generator(np.random.PCG64(seed))
    noisy = mosaic.plane + sig * rng.standard_normal(mosaic.plane.shape)
    return replace(mosaic, plane=noisy)


def split_subplanes(mosaic: BayerMosaic):
    """Half-resolution phase planes ordered ``(R, G1, G2, B)``.

    ``G1`` is the green phase that comes first in raster order.
    """
    by_phase = [mosaic.plane[dy::2, dx::2].copy() for dy, dx in _PHASES]
    order = _subplane_order(mosaic.pattern)
    return tuple(by_phase[i] for i in order)


def _subplane_order(pattern: str):
    greens = [i for i, c in enumerate(pattern) if c == "G"]
    return (pattern.index("R"), greens[0], greens[1], pattern.index("B"))


def merge_subplanes(subplanes, pattern: str = "RGGB",
                    channel_sigmas=(0.0, 0.0, 0.0)) -> BayerMosaic:
    pattern = _check_pattern(pattern)
    subplanes = [np.asarray(p, dtype=np.float64) for p in subplanes]
    if len(subplanes) != 4 or len({p.shape for p in subplanes}) != 1:
        raise ValueError("expected four subplanes of identical shape")
    hh, hw = subplanes[0].shape
    plane = np.empty((2 * hh, 2 * hw))
    for sub, phase in zip(subplanes, _subplane_order(pattern)):
        dy, dx = _PHASES[phase]
        plane[dy::2, dx::2] = sub
    return BayerMosaic(plane, pattern, channel_sigmas)


def denoise_cfa(mosaic: BayerMosaic, mode="improved",
                overrides: Optional[Mapping[str, object]] = None, workers: int = 1) -> BayerMosaic:
    """Denoise each phase subplane with the profile for its channel's sigma.

    Subplanes whose channel sigma is 0 are passed through unchanged.
    """
    subs = split_subplanes(mosaic)
    sr, sg, sb = mosaic.channel_sigmas
    sigmas = (sr, sg, sg, sb)
    out = []
    for sub, sigma in zip(subs, sigmas):
        if sigma == 0:
            out.append(sub)
            continue
        profile = select_profile(sigma, mode)
        if overrides:
            profile = profile.with_overrides(overrides)
        need = max(profile.ht.n1, profile.wie.n1)
        if min(sub.shape) < need:
            raise ValueError(
                f"mosaic of {mosaic.plane.shape[1]}x{mosaic.plane.shape[0]} is too small: "
                f"subplanes must be at least {need}x{need}, i.e. input at least {2 * need}x{2 * need}"
            )
        out.append(denoise(sub, sigma, profile, workers=workers).final)
    return merge_subplanes(out, mosaic.pattern, mosaic.channel_sigmas)


_NEIGHBOURS = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0]])


def demosaick_bilinear(mosaic: BayerMosaic) -> np.ndarray:
    """Bilinear demosaicking to an ``(H, W, 3)`` image.

    Missing samples average the nearest same-channel neighbours in the 3x3
    ring; on a Bayer lattice that is 2 or 4 taps, fewer at the border.
    """
    cmap = mosaic.channel_map()
    out = np.empty(mosaic.plane.shape + (3,))
    for ch in range(3):
        mask = (cmap == ch).astype(np.float64)
        total = correlate(mosaic.plane * mask, _NEIGHBOURS, mode="constant")
        count = correlate(mask, _NEIGHBOURS, mode="constant")
        out[..., ch] = np.where(mask > 0, mosaic.plane, total / np.maximum(count, 1.0))
    return out
