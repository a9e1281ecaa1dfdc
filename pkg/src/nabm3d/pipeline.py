"""Noise-adaptive parameter profiles and the two-stage BM3D driver."""
from __future__ import annotations

import enum
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Dict, List, Mapping, NamedTuple, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .filtering import EstimateAccumulator, finalize, ht_filter_group, kaiser_window, wiener_filter_group
from .matching import BlockGroup, BlockMatcher, MatchParams, select_group
from .raster import Origin, build_scan_grid, check_plane
from .transforms import _is_power_of_two

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    BASELINE = "baseline"
    IMPROVED = "improved"
    SATELLITE = "satellite"


class Band(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    VERY_HIGH = "very_high"


@dataclass(frozen=True)
class HardThresholdParams:
    n1: int = 8
    n2: int = 16
    nstep: int = 3
    ns: int = 39
    tau_match: float = 2500.0
    lambda_2d: Optional[float] = None
    lambda_3d: float = 2.7


@dataclass(frozen=True)
class WienerParams:
    n1: int = 8
    n2: int = 32
    nstep: int = 3
    ns: int = 39
    tau_match: float = 400.0


@dataclass(frozen=True)
class ParameterProfile:
    """Every tunable of one denoising run, for both stages."""

    ht: HardThresholdParams = field(default_factory=HardThresholdParams)
    wie: WienerParams = field(default_factory=WienerParams)
    window_beta: float = 2.0

    def __post_init__(self):
        for stage_name in ("ht", "wie"):
            stage = getattr(self, stage_name)
            for name in ("n1", "n2", "nstep", "ns"):
                value = getattr(stage, name)
                if int(value) != value or value < 1:
                    raise ValueError(f"{stage_name}.{name} must be a positive integer, got {value}")
            if not _is_power_of_two(stage.n2):
                raise ValueError(f"{stage_name}.n2 must be a power of two, got {stage.n2}")
            if stage.ns < stage.n1:
                raise ValueError(f"{stage_name}.ns ({stage.ns}) must be >= {stage_name}.n1 ({stage.n1})")
            if stage.nstep > stage.n1:
                raise ValueError(f"{stage_name}.nstep ({stage.nstep}) must be <= {stage_name}.n1 ({stage.n1})")
            if stage.tau_match < 0:
                raise ValueError(f"{stage_name}.tau_match must be >= 0, got {stage.tau_match}")
        if self.ht.lambda_2d is not None and self.ht.lambda_2d < 0:
            raise ValueError(f"ht.lambda_2d must be >= 0, got {self.ht.lambda_2d}")
        if self.ht.lambda_3d < 0:
            raise ValueError(f"ht.lambda_3d must be >= 0, got {self.ht.lambda_3d}")
        if self.window_beta < 0:
            raise ValueError(f"window_beta must be >= 0, got {self.window_beta}")

    def to_flat(self) -> Dict[str, object]:
        flat: Dict[str, object] = {}
        for stage_name in ("ht", "wie"):
            for key, value in asdict(getattr(self, stage_name)).items():
                flat[f"{stage_name}.{key}"] = value
        flat["window_beta"] = self.window_beta
        return flat

    def with_overrides(self, overrides: Mapping[str, object]) -> "ParameterProfile":
        """Return a copy with flat ``stage.field`` keys replaced."""
        ht_kw: Dict[str, object] = {}
        wie_kw: Dict[str, object] = {}
        top_kw: Dict[str, object] = {}
        for key, value in overrides.items():
            stage_name, _, name = key.rpartition(".")
            target = {"ht": ht_kw, "wie": wie_kw, "": top_kw}.get(stage_name)
            cls = {"ht": HardThresholdParams, "wie": WienerParams, "": ParameterProfile}.get(stage_name)
            if target is None or name not in {f.name for f in fields(cls)} or name in ("ht", "wie"):
                raise KeyError(f"unknown profile key {key!r}")
            target[name] = _coerce(key, value)
        return replace(
            self,
            ht=replace(self.ht, **ht_kw),
            wie=replace(self.wie, **wie_kw),
            **top_kw,
        )

    def to_text(self) -> str:
        return "".join(f"{k} = {_format_value(v)}\n" for k, v in self.to_flat().items())


_INT_KEYS = {"n1", "n2", "nstep", "ns"}


def _coerce(key: str, value):
    name = key.rpartition(".")[2]
    if isinstance(value, str):
        value = _parse_value(value)
    if value is None:
        if name != "lambda_2d":
            raise ValueError(f"{key} cannot be none")
        return None
    if name in _INT_KEYS:
        if float(value) != int(value):
            raise ValueError(f"{key} must be an integer, got {value}")
        return int(value)
    return float(value)


def _parse_value(text: str):
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return repr(value)


def parse_profile_text(text: str) -> Dict[str, object]:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        try:
            out[key.strip()] = _parse_value(value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value {value.strip()!r}") from None
    return out


def load_profile_overrides(path) -> Dict[str, object]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_profile_text(fh.read())


# --------------------------------------------------------------------------
# noise-band profile selection

BASELINE_PREFILTER_LAMBDA = 2.0
BASELINE_PREFILTER_FROM_SIGMA = 40.0
SATELLITE_TAU_INCREMENT = 3000.0
SATELLITE_SEARCH_EXTENT = 99


def noise_band(sigma: float) -> Band:
    if sigma < 30:
        return Band.LOW
    if sigma < 50:
        return Band.MEDIUM
    if sigma < 80:
        return Band.HIGH
    return Band.VERY_HIGH


_BASELINE_HT = {
    Band.LOW: dict(tau_match=2500.0),
    Band.MEDIUM: dict(tau_match=2500.0),
    Band.HIGH: dict(n1=11, n2=16, tau_match=5000.0),
    Band.VERY_HIGH: dict(n1=11, n2=16, tau_match=5000.0),
}
_BASELINE_WIE = {Band.LOW: dict(nstep=3), Band.MEDIUM: dict(nstep=3), Band.HIGH: {}, Band.VERY_HIGH: {}}

_IMPROVED_HT = {
    Band.LOW: dict(tau_match=3000.0),
    Band.MEDIUM: dict(tau_match=6500.0),
    Band.HIGH: dict(n1=8, n2=32, tau_match=15000.0),
    Band.VERY_HIGH: dict(n1=8, n2=64, tau_match=30000.0),
}
_IMPROVED_WIE = {Band.LOW: dict(nstep=2), Band.MEDIUM: dict(nstep=2), Band.HIGH: {}, Band.VERY_HIGH: {}}


def select_profile(sigma: float, mode="improved") -> ParameterProfile:
    """Resolve the parameter profile for noise level ``sigma`` (0-255 scale).

    ``sigma > 100`` is treated as the very-high band and emits a warning.
    """
    mode = Mode(mode)
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if sigma > 100:
        warnings.warn(f"sigma={sigma} exceeds 100; using the very-high noise profile", UserWarning,
                      stacklevel=2)
    band = noise_band(sigma)
    if mode is Mode.BASELINE:
        lam = BASELINE_PREFILTER_LAMBDA if sigma >= BASELINE_PREFILTER_FROM_SIGMA else None
        ht = HardThresholdParams(lambda_2d=lam, **_BASELINE_HT[band])
        wie = WienerParams(**_BASELINE_WIE[band])
        return ParameterProfile(ht=ht, wie=wie)

    ht = HardThresholdParams(**_IMPROVED_HT[band])
    wie = WienerParams(**_IMPROVED_WIE[band])
    if mode is Mode.SATELLITE:
        ht = replace(ht, tau_match=ht.tau_match + SATELLITE_TAU_INCREMENT, n1=8,
                     ns=SATELLITE_SEARCH_EXTENT)
    return ParameterProfile(ht=ht, wie=wie)


# --------------------------------------------------------------------------
# denoising

class DenoiseResult(NamedTuple):
    basic: np.ndarray
    final: np.ndarray


def _ht_chunk(noisy, sigma, profile, positions):
    ht = profile.ht
    matcher = BlockMatcher(noisy, sigma, MatchParams(ht.n1, ht.ns, ht.tau_match, ht.n2, ht.lambda_2d))
    window = kaiser_window(ht.n1, profile.window_beta)
    acc = EstimateAccumulator(noisy.shape)
    for ref in positions:
        sset = select_group(matcher.find(ref), ht.n2)
        group = BlockGroup(slices=matcher.blocks(sset.origins), origins=sset.origins)
        estimates, weight = ht_filter_group(group, sigma, ht.lambda_3d)
        acc.add(estimates, weight, window)
    return acc


def _wiener_chunk(noisy, basic, sigma, profile, positions):
    wie = profile.wie
    matcher = BlockMatcher(basic, sigma, MatchParams(wie.n1, wie.ns, wie.tau_match, wie.n2))
    window = kaiser_window(wie.n1, profile.window_beta)
    acc = EstimateAccumulator(noisy.shape)
    noisy_patches = sliding_window_view(noisy, (wie.n1, wie.n1))
    for ref in positions:
        sset = select_group(matcher.find(ref), wie.n2)
        o = sset.origins
        estimates, weight = wiener_filter_group(
            BlockGroup(slices=noisy_patches[o[:, 1], o[:, 0]], origins=o),
            BlockGroup(slices=matcher.blocks(o), origins=o),
            sigma,
        )
        acc.add(estimates, weight, window)
    return acc


def _chunks(positions: List[Origin], workers: int) -> List[List[Origin]]:
    size = -(-len(positions) // workers)
    return [positions[i:i + size] for i in range(0, len(positions), size)]


def _run_stage(fn, args, positions: List[Origin], shape, workers: int) -> np.ndarray:
    if workers <= 1 or len(positions) < 2:
        return finalize(fn(*args, positions))
    parts = _chunks(positions, workers)
    acc = EstimateAccumulator(shape)
    with ProcessPoolExecutor(max_workers=len(parts)) as pool:
        futures = [pool.submit(fn, *args, part) for part in parts]
        for fut in futures:  # merge in submission order
            acc.merge(fut.result())
    return finalize(acc)


def default_workers() -> int:
    return os.cpu_count() or 1


def denoise(noisy, sigma: float, profile: ParameterProfile, workers: int = 1) -> DenoiseResult:
    """Two-stage BM3D: hard-threshold basic estimate, then Wiener refinement.

    Both returned planes are clamped to [0, 255]; the Wiener stage uses the
    unclamped basic estimate as its pilot.
    """
    noisy = check_plane(noisy, "noisy")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    h, w = noisy.shape
    need = max(profile.ht.n1, profile.wie.n1)
    if min(h, w) < need:
        raise ValueError(f"plane is {w}x{h}; this profile needs at least {need}x{need}")

    ht, wie = profile.ht, profile.wie
    grid = build_scan_grid(w, h, ht.n1, ht.nstep).positions
    log.debug("hard-threshold stage: %d reference blocks", len(grid))
    basic = _run_stage(_ht_chunk, (noisy, sigma, profile), grid, noisy.shape, workers)

    grid = build_scan_grid(w, h, wie.n1, wie.nstep).positions
    log.debug("wiener stage: %d reference blocks", len(grid))
    final = _run_stage(_wiener_chunk, (noisy, basic, sigma, profile), grid, noisy.shape, workers)
    return DenoiseResult(basic=np.clip(basic, 0.0, 255.0), final=np.clip(final, 0.0, 255.0))
