"""scikit-learn style wrappers around the denoising pipelines.

Both estimators are stateless apart from the resolved parameter profile, so
``fit`` only validates its input and resolves parameters. They accept a single
2-D plane or a stack of planes shaped ``(n_images, H, W)``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cfa import BayerMosaic, denoise_cfa
from .pipeline import Mode, denoise, select_profile
from .raster import check_plane


def _as_stack(X):
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        return [check_plane(arr, "X")], False
    if arr.ndim == 3:
        return [check_plane(p, f"X[{i}]") for i, p in enumerate(arr)], True
    raise ValueError(f"expected a 2-D plane or a (n, H, W) stack, got shape {arr.shape}")


class BM3DDenoiser(TransformerMixin, BaseEstimator):
    """Two-stage BM3D with noise-band parameter profiles.

    Parameters
    ----------
    sigma : float
        Noise standard deviation on the 0-255 scale.
    mode : {"improved", "baseline", "satellite"}
        Profile family.
    overrides : dict, optional
        Flat ``stage.field`` profile overrides, e.g. ``{"ht.lambda_3d": 2.5}``.
    workers : int
        Worker processes per image. ``1`` is bit-deterministic.
    """

    def __init__(self, sigma=25.0, mode="improved", overrides=None, workers=1):
        self.sigma = sigma
        self.mode = mode
        self.overrides = overrides
        self.workers = workers

    def fit(self, X, y=None):
        _as_stack(X)
        profile = select_profile(self.sigma, Mode(self.mode))
        if self.overrides:
            profile = profile.with_overrides(self.overrides)
        self.profile_ = profile
        return self

    def _run(self, X):
        check_is_fitted(self, "profile_")
        planes, stacked = _as_stack(X)
        results = [denoise(p, self.sigma, self.profile_, workers=self.workers) for p in planes]
        return results, stacked

    def transform(self, X):
        results, stacked = self._run(X)
        finals = [r.final for r in results]
        return np.stack(finals) if stacked else finals[0]

    def transform_basic(self, X):
        """Hard-threshold (first stage) estimate only."""
        results, stacked = self._run(X)
        basics = [r.basic for r in results]
        return np.stack(basics) if stacked else basics[0]


class CFADenoiser(TransformerMixin, BaseEstimator):
    """Denoise raw Bayer mosaics; input and output are single-plane mosaics."""

    def __init__(self, channel_sigmas=(30.0, 27.0, 25.0), pattern="RGGB", mode="improved",
                 overrides=None, workers=1):
        self.channel_sigmas = channel_sigmas
        self.pattern = pattern
        self.mode = mode
        self.overrides = overrides
        self.workers = workers

    def fit(self, X, y=None):
        planes, _ = _as_stack(X)
        for p in planes:
            BayerMosaic(p, self.pattern, self.channel_sigmas)
        self.mode_ = Mode(self.mode)
        return self

    def transform(self, X):
        check_is_fitted(self, "mode_")
        planes, stacked = _as_stack(X)
        out = [
            denoise_cfa(BayerMosaic(p, self.pattern, self.channel_sigmas), self.mode_,
                        self.overrides, self.workers).plane
            for p in planes
        ]
        return np.stack(out) if stacked else out[0]
