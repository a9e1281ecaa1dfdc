"""Collaborative filtering of block groups and weighted-overlap aggregation."""
from __future__ import annotations

from typing import Tuple

import numpy as np

from .matching import BlockGroup
from .transforms import group_forward, group_inverse, hard_threshold, wiener_shrink


def kaiser_window(side: int, beta: float = 2.0) -> np.ndarray:
    """2-D Kaiser taper normalised to a peak of 1. ``beta=0`` gives a flat window."""
    k = np.kaiser(side, beta) if side > 1 else np.ones(1)
    win = np.outer(k, k)
    return win / win.max()


def ht_filter_group(group: BlockGroup, sigma: float, lambda_3d: float) -> Tuple[BlockGroup, float]:
    """Hard-threshold collaborative filter.

    Returns the filtered group and its aggregation weight
    ``1 / (sigma**2 * retained)`` (``1`` when ``sigma == 0``).
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    spectrum = group_forward(group.slices)
    shrunk, retained = hard_threshold(spectrum, lambda_3d * sigma)
    estimates = group_inverse(shrunk)
    weight = 1.0 / (sigma * sigma * retained) if sigma > 0 and retained >= 1 else 1.0
    return BlockGroup(slices=estimates, origins=group.origins), weight


def wiener_filter_group(noisy: BlockGroup, pilot: BlockGroup, sigma: float) -> Tuple[BlockGroup, float]:
    """Empirical Wiener filter driven by the pilot (basic-estimate) group."""
    if noisy.slices.shape != pilot.slices.shape:
        raise ValueError(
            f"shape mismatch: noisy {noisy.slices.shape} vs pilot {pilot.slices.shape}"
        )
    shrunk, energy = wiener_shrink(group_forward(noisy.slices), group_forward(pilot.slices), sigma)
    estimates = group_inverse(shrunk)
    weight = 1.0 / (sigma * sigma * energy) if energy > 0 else 1.0
    return BlockGroup(slices=estimates, origins=noisy.origins), weight


class CoverageError(RuntimeError):
    """Some pixel never received a block estimate."""


class EstimateAccumulator:
    """Numerator/denominator buffers for weighted averaging of block estimates.

    This is the only mutable object in the pipeline. Concurrent producers must
    each use a private accumulator and combine them with :meth:`merge`.
    """

    def __init__(self, shape: Tuple[int, int]):
        self.numerator = np.zeros(shape)
        self.denominator = np.zeros(shape)

    @property
    def shape(self):
        return self.numerator.shape

    def add(self, estimates: BlockGroup, weight: float, window: np.ndarray) -> None:
        n = estimates.side
        if window.shape != (n, n):
            raise ValueError(f"window shape {window.shape} does not match block side {n}")
        h, w = self.shape
        origins = np.asarray(estimates.origins)
        xs, ys = origins[:, 0], origins[:, 1]
        if np.any((xs < 0) | (ys < 0) | (xs + n > w) | (ys + n > h)):
            bad = int(np.argmax((xs < 0) | (ys < 0) | (xs + n > w) | (ys + n > h)))
            raise IndexError(f"block at {(int(xs[bad]), int(ys[bad]))} falls outside the {w}x{h} plane")
        ww = weight * window
        offsets = (np.arange(n)[:, None] * w + np.arange(n)[None, :]).ravel()
        index = ((ys * w + xs)[:, None] + offsets).ravel()
        np.add.at(self.numerator.reshape(-1), index, (estimates.slices * ww).ravel())
        np.add.at(self.denominator.reshape(-1), index, np.broadcast_to(ww.ravel(), (len(xs), n * n)).ravel())

    def merge(self, other: "EstimateAccumulator") -> None:
        self.numerator += other.numerator
        self.denominator += other.denominator


def aggregate(acc: EstimateAccumulator, estimates: BlockGroup, weight: float,
              window: np.ndarray) -> None:
    acc.add(estimates, weight, window)


def finalize(acc: EstimateAccumulator) -> np.ndarray:
    if not np.all(acc.denominator > 0):
        ys, xs = np.nonzero(~(acc.denominator > 0))
        raise CoverageError(
            f"{len(ys)} pixel(s) received no estimate, first at (x={xs[0]}, y={ys[0]})"
        )
    return acc.numerator / acc.denominator
