"""Block matching: distances, similarity sets and group assembly."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .raster import Origin, extract_block
from .transforms import _is_power_of_two, dct2_forward


@dataclass(frozen=True)
class MatchParams:
    """Tunables of one block-matching pass.

    ``search_extent`` is the side, in pixels, of the square search window. The
    window is centred on the reference block and a candidate qualifies only
    when its whole block lies inside it (and inside the plane).
    ``lambda_2d`` enables the prefiltered distance when not ``None``.
    """

    side: int
    search_extent: int
    tau_match: float
    max_group: int
    lambda_2d: Optional[float] = None

    def __post_init__(self):
        if self.side < 1:
            raise ValueError(f"side must be >= 1, got {self.side}")
        if self.search_extent < self.side:
            raise ValueError(
                f"search_extent ({self.search_extent}) must be >= side ({self.side})"
            )
        if self.tau_match < 0:
            raise ValueError(f"tau_match must be >= 0, got {self.tau_match}")
        if not _is_power_of_two(self.max_group):
            raise ValueError(f"max_group must be a power of two, got {self.max_group}")
        if self.lambda_2d is not None and self.lambda_2d < 0:
            raise ValueError(f"lambda_2d must be >= 0, got {self.lambda_2d}")


@dataclass(frozen=True)
class SimilaritySet:
    """Matched origins (``(M, 2)`` array of ``x, y``) sorted by distance.

    The reference block always sits at ``reference_index`` with distance 0.
    """

    origins: np.ndarray
    distances: np.ndarray
    side: int
    reference_index: int = 0

    def __len__(self) -> int:
        return len(self.distances)

    @property
    def entries(self):
        return [((int(x), int(y)), float(d)) for (x, y), d in zip(self.origins, self.distances)]


@dataclass(frozen=True)
class BlockGroup:
    """A stack of ``K`` equally sized blocks with their plane origins."""

    slices: np.ndarray  # (K, N, N)
    origins: np.ndarray  # (K, 2) as (x, y)

    def __post_init__(self):
        if self.slices.ndim != 3 or self.slices.shape[1] != self.slices.shape[2]:
            raise ValueError(f"group slices must be (K, N, N), got {self.slices.shape}")
        if len(self.origins) != self.slices.shape[0]:
            raise ValueError("group depth and origin count differ")

    @property
    def depth(self) -> int:
        return self.slices.shape[0]

    @property
    def side(self) -> int:
        return self.slices.shape[1]


def _check_pair(ref: np.ndarray, cand: np.ndarray) -> int:
    if ref.shape != cand.shape or ref.ndim != 2 or ref.shape[0] != ref.shape[1]:
        raise ValueError(f"block shape mismatch: {ref.shape} vs {cand.shape}")
    return ref.shape[0]


def block_distance_noisy(ref: np.ndarray, cand: np.ndarray) -> float:
    """Per-pixel mean squared difference of two blocks."""
    ref = np.asarray(ref, dtype=np.float64)
    cand = np.asarray(cand, dtype=np.float64)
    n = _check_pair(ref, cand)
    diff = ref - cand
    return float(np.sum(diff * diff) / (n * n))


def _prefilter(spectrum: np.ndarray, threshold: float) -> np.ndarray:
    return np.where(np.abs(spectrum) > threshold, spectrum, 0.0)


def block_distance_prefiltered(ref: np.ndarray, cand: np.ndarray, sigma: float,
                               lambda_2d: float) -> float:
    """Distance between hard-thresholded 2-D spectra (threshold ``lambda_2d * sigma``).

    No coefficient is exempt from the threshold here.
    """
    ref = np.asarray(ref, dtype=np.float64)
    cand = np.asarray(cand, dtype=np.float64)
    n = _check_pair(ref, cand)
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    thr = lambda_2d * sigma
    diff = _prefilter(dct2_forward(ref), thr) - _prefilter(dct2_forward(cand), thr)
    return float(np.sum(diff * diff) / (n * n))


def _search_range(pos: int, extent: int, side: int, window: int) -> Tuple[int, int]:
    # candidate origins whose block lies in the window centred on the reference block
    lo = pos - (window - side) // 2
    hi = lo + (window - side)
    return max(lo, 0), min(hi, extent - side)


class BlockMatcher:
    """Reusable matcher over one plane.

    Block features (raw pixels, or prefiltered spectra when ``lambda_2d`` is
    set) are computed once for every origin of the plane, so repeated
    :meth:`find` calls only pay for the distance scan.
    """

    def __init__(self, plane: np.ndarray, sigma: float, params: MatchParams):
        self.plane = plane
        self.params = params
        n = params.side
        h, w = plane.shape
        if n > h or n > w:
            raise ValueError(f"block side {n} exceeds plane size {w}x{h}")
        self.patches = sliding_window_view(plane, (n, n))
        if params.lambda_2d is not None:
            feats = _prefilter(dct2_forward(self.patches), params.lambda_2d * sigma)
        else:
            feats = self.patches
        # contiguous (rows, cols, n*n) layout keeps the distance scan fast
        self.features = np.ascontiguousarray(feats).reshape(h - n + 1, w - n + 1, n * n)
        self._scale = float(n * n)

    def blocks(self, origins: np.ndarray) -> np.ndarray:
        """Raw blocks of the matched plane at ``origins`` as a ``(K, n, n)`` array."""
        return self.patches[origins[:, 1], origins[:, 0]]

    def find(self, ref_origin: Origin) -> SimilaritySet:
        p = self.params
        xr, yr = int(ref_origin[0]), int(ref_origin[1])
        h, w = self.plane.shape
        n = p.side
        if xr < 0 or yr < 0 or xr + n > w or yr + n > h:
            raise IndexError(f"reference origin {(xr, yr)} out of bounds for side {n}")
        x0, x1 = _search_range(xr, w, n, p.search_extent)
        y0, y1 = _search_range(yr, h, n, p.search_extent)

        diff = self.features[y0:y1 + 1, x0:x1 + 1] - self.features[yr, xr]
        dist = np.einsum("ijk,ijk->ij", diff, diff) / self._scale

        ys, xs = np.nonzero(dist <= p.tau_match)  # row-major order
        d = dist[ys, xs]
        is_ref = (ys == yr - y0) & (xs == xr - x0)
        # reference first among equals, then row-major
        order = np.lexsort((~is_ref, d))
        origins = np.stack([xs[order] + x0, ys[order] + y0], axis=1)
        return SimilaritySet(origins=origins, distances=d[order], side=n)


def find_similar(plane: np.ndarray, ref_origin: Origin, sigma: float,
                 params: MatchParams) -> SimilaritySet:
    """Exhaustive stride-1 block matching around ``ref_origin``."""
    return BlockMatcher(plane, sigma, params).find(ref_origin)


def select_group(sset: SimilaritySet, max_group: int) -> SimilaritySet:
    """Keep the best ``K`` entries, ``K`` the largest power of two <= min(|S|, N2)."""
    if len(sset) == 0:
        raise ValueError("similarity set is empty")
    limit = min(len(sset), max_group)
    k = 1 << (limit.bit_length() - 1)
    return SimilaritySet(sset.origins[:k], sset.distances[:k], sset.side, sset.reference_index)


def gather_group(plane: np.ndarray, sset: SimilaritySet) -> BlockGroup:
    """Stack the blocks at the set's origins, in set order."""
    side = sset.side
    slices = np.empty((len(sset), side, side))
    for i, (x, y) in enumerate(sset.origins):
        slices[i] = extract_block(plane, (int(x), int(y)), side)
    return BlockGroup(slices=slices, origins=np.asarray(sset.origins).copy())
