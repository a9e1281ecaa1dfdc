"""Orthonormal block transforms and the shrinkage operators applied to groups.

Groups are stored as ``(K, N, N)`` arrays: stack axis first, then block rows
and columns. The 2-D transform acts on the last two axes, the Walsh-Hadamard
transform on the stack axis.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Tuple

import numpy as np

_SQRT_HALF = np.sqrt(0.5)


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; row ``k`` holds the ``k``-th cosine."""
    if n < 1:
        raise ValueError(f"transform size must be >= 1, got {n}")
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    mat[0, :] = np.sqrt(1.0 / n)
    mat.setflags(write=False)
    return mat


def dct2_forward(block: np.ndarray) -> np.ndarray:
    """Separable orthonormal DCT-II over the last two axes.

    Works on a single ``(N, N)`` block or any stack of them.
    """
    block = np.asarray(block, dtype=np.float64)
    c = dct_matrix(block.shape[-1])
    return c @ block @ c.T


def dct2_inverse(spectrum: np.ndarray) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=np.float64)
    c = dct_matrix(spectrum.shape[-1])
    return c.T @ spectrum @ c


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


def _butterflies(stack: np.ndarray) -> np.ndarray:
    # log2(K) in-place butterfly stages, each scaled by 1/sqrt(2)
    k = stack.shape[0]
    out = stack.copy()
    tail = out.shape[1:]
    h = 1
    while h < k:
        view = out.reshape((k // (2 * h), 2, h) + tail)
        a = view[:, 0].copy()
        b = view[:, 1]
        view[:, 0] = (a + b) * _SQRT_HALF
        view[:, 1] = (a - b) * _SQRT_HALF
        h *= 2
    return out


@lru_cache(maxsize=None)
def hadamard_matrix(k: int) -> np.ndarray:
    """Orthonormal Walsh-Hadamard matrix in natural (Sylvester) order.

    Symmetric and orthogonal, hence its own inverse.
    """
    if not _is_power_of_two(k):
        raise ValueError(f"stack depth must be a power of two, got {k}")
    mat = _butterflies(np.eye(k))
    mat.setflags(write=False)
    return mat


def hadamard_forward(stack: np.ndarray) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform along axis 0."""
    stack = np.asarray(stack, dtype=np.float64)
    k = stack.shape[0]
    if not _is_power_of_two(k):
        raise ValueError(f"stack depth must be a power of two, got {k}")
    if k == 1:
        return stack.copy()
    return (hadamard_matrix(k) @ stack.reshape(k, -1)).reshape(stack.shape)


hadamard_inverse = hadamard_forward


def group_forward(slices: np.ndarray) -> np.ndarray:
    """Full 3-D transform of a ``(K, N, N)`` group: 2-D DCT then stack WHT."""
    return hadamard_forward(dct2_forward(slices))


def group_inverse(spectrum: np.ndarray) -> np.ndarray:
    return dct2_inverse(hadamard_inverse(spectrum))


def hard_threshold(spectrum: np.ndarray, threshold: float) -> Tuple[np.ndarray, int]:
    """Zero every coefficient with ``|c| <= threshold`` except the group DC.

    The group DC is element ``[0, 0, 0]`` (first stack index, spatial DC); it
    is always kept and always counted in ``retained``.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    spectrum = np.asarray(spectrum, dtype=np.float64)
    keep = np.abs(spectrum) > threshold
    out = np.where(keep, spectrum, 0.0)
    dc = (0,) * spectrum.ndim
    out[dc] = spectrum[dc]
    keep[dc] = False
    retained = int(np.count_nonzero(out[keep])) + 1
    return out, retained


def wiener_shrink(noisy: np.ndarray, pilot: np.ndarray, sigma: float) -> Tuple[np.ndarray, float]:
    """Empirical Wiener attenuation ``W = p^2 / (p^2 + sigma^2)``.

    Returns the attenuated noisy spectrum and ``sum(W**2)``.
    """
    noisy = np.asarray(noisy, dtype=np.float64)
    pilot = np.asarray(pilot, dtype=np.float64)
    if noisy.shape != pilot.shape:
        raise ValueError(f"shape mismatch: noisy {noisy.shape} vs pilot {pilot.shape}")
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    p2 = pilot * pilot
    w = p2 / (p2 + sigma * sigma)
    return w * noisy, float(np.sum(w * w))
