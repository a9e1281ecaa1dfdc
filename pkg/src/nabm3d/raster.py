"""Raster helpers: plane validation, block extraction, scan grids and 8-bit I/O.

Planes are plain 2-D ``float64`` numpy arrays indexed ``[y, x]`` with nominal
range [0, 255]. Coordinates passed around the package are ``(x, y)`` origins of
the top-left corner of a block.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np
from PIL import Image

Origin = Tuple[int, int]

# BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


class ImageFormatError(ValueError):
    """Raised for unreadable or unsupported image files."""


def check_plane(plane, name: str = "plane") -> np.ndarray:
    """Validate and convert ``plane`` to a finite 2-D float64 array."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf samples")
    return arr


def check_color(image, name: str = "image") -> np.ndarray:
    """Validate a ``(H, W, 3)`` color image and return it as float64."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf samples")
    return arr


def extract_block(plane: np.ndarray, origin: Origin, side: int) -> np.ndarray:
    """Copy the ``side x side`` block whose top-left corner is ``origin``."""
    x, y = origin
    h, w = plane.shape
    if side < 1 or x < 0 or y < 0 or x + side > w or y + side > h:
        raise IndexError(
            f"block of side {side} at origin {(x, y)} does not fit in a {w}x{h} plane"
        )
    return plane[y:y + side, x:x + side].copy()


def _axis_positions(extent: int, side: int, step: int) -> List[int]:
    last = extent - side
    positions = list(range(0, last + 1, step))
    if positions[-1] != last:
        positions.append(last)
    return positions


@dataclass(frozen=True)
class ScanGrid:
    """Reference-block origins visited by one denoising stage."""

    step: int
    xs: Tuple[int, ...]
    ys: Tuple[int, ...]

    @property
    def positions(self) -> List[Origin]:
        return [(x, y) for y in self.ys for x in self.xs]

    def __iter__(self) -> Iterator[Origin]:
        return iter(self.positions)

    def __len__(self) -> int:
        return len(self.xs) * len(self.ys)


def build_scan_grid(width: int, height: int, side: int, step: int) -> ScanGrid:
    """Origins ``0, step, 2*step, ...`` per axis, with the last one forced to
    ``extent - side`` so the final row/column of blocks touches the border."""
    if step < 1 or step > side:
        # a stride wider than the block would leave uncovered pixel columns/rows
        raise ValueError(f"step must be in [1, side={side}], got {step}")
    if side < 1 or side > width or side > height:
        raise ValueError(f"block side {side} does not fit in a {width}x{height} plane")
    return ScanGrid(
        step=step,
        xs=tuple(_axis_positions(width, side, step)),
        ys=tuple(_axis_positions(height, side, step)),
    )


# --------------------------------------------------------------------------
# file I/O

def _read_pgm(data: bytes, path) -> np.ndarray:
    tokens = []
    pos = 2
    # header: magic, width, height, maxval separated by whitespace/comments
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError(f"{path}: truncated PGM header")
        tok = data[start:pos]
        if not tok.isdigit():
            raise ImageFormatError(f"{path}: malformed PGM header field {tok!r}")
        tokens.append(int(tok))
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = tokens
    if maxval > 255:
        raise ImageFormatError(
            f"{path}: unsupported PGM bit depth (maxval {maxval}); only 8-bit is supported"
        )
    if width < 1 or height < 1 or maxval < 1:
        raise ImageFormatError(f"{path}: invalid PGM dimensions {width}x{height}")
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(
            f"{path}: truncated PGM raster ({len(raster)} of {width * height} bytes)"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64)


def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            im.load()
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: unsupported format {im.format}")
            mode = im.mode
            if mode == "P":
                im = im.convert("RGB")
                mode = "RGB"
            if mode not in ("L", "RGB", "RGBA", "LA"):
                raise ImageFormatError(
                    f"{path}: unsupported PNG mode {mode!r}; only 8-bit gray or color is supported"
                )
            return np.asarray(im, dtype=np.float64)
    except ImageFormatError:
        raise
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{path}: cannot decode PNG ({exc})") from exc


def _read_any(path) -> np.ndarray:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ImageFormatError(f"{path}: cannot read file ({exc.strerror})") from exc
    if not data:
        raise ImageFormatError(f"{path}: empty file")
    if data[:2] == b"P5":
        return _read_pgm(data, path)
    if data[:2] in (b"P2", b"P1", b"P3", b"P4", b"P6"):
        raise ImageFormatError(f"{path}: unsupported netpbm variant {data[:2].decode()}; only P5 is supported")
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _read_png(path)
    raise ImageFormatError(f"{path}: unrecognised image format (expected P5 PGM or PNG)")


def load_plane(path) -> np.ndarray:
    """Load an 8-bit grayscale plane; color PNGs are reduced with BT.601 luma."""
    arr = _read_any(path)
    if arr.ndim == 3:
        arr = arr[..., :3] @ _LUMA if arr.shape[2] >= 3 else arr[..., 0]
    return arr


def load_color(path) -> np.ndarray:
    """Load an image as ``(H, W, 3)``; gray inputs are replicated to 3 channels."""
    arr = _read_any(path)
    if arr.ndim == 2:
        return np.repeat(arr[..., None], 3, axis=2)
    if arr.shape[2] < 3:
        return np.repeat(arr[..., :1], 3, axis=2)
    return arr[..., :3].copy()


def quantize(samples: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to ``uint8``."""
    clamped = np.clip(np.asarray(samples, dtype=np.float64), 0.0, 255.0)
    return np.floor(clamped + 0.5).astype(np.uint8)


def _write(pixels: np.ndarray, path) -> None:
    ext = os.path.splitext(str(path))[1].lower()
    try:
        if ext == ".pgm":
            if pixels.ndim != 2:
                raise ImageFormatError(f"{path}: PGM output requires a single-channel plane")
            h, w = pixels.shape
            with open(path, "wb") as fh:
                fh.write(b"P5\n%d %d\n255\n" % (w, h))
                fh.write(pixels.tobytes())
        elif ext == ".png":
            Image.fromarray(pixels).save(path, format="PNG")
        else:
            raise ImageFormatError(f"{path}: unsupported output extension {ext!r} (use .pgm or .png)")
    except OSError as exc:
        raise OSError(f"{path}: cannot write image ({exc.strerror or exc})") from exc


def save_plane(plane, path) -> None:
    _write(quantize(check_plane(plane)), path)


def save_color(image, path) -> None:
    _write(quantize(check_color(image)), path)
