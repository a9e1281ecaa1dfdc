"""Command-line entry point.

Exit status: 0 on success, 1 on a runtime failure, 2 on flag misuse.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .cfa import PATTERNS, add_cfa_noise, demosaick_bilinear, denoise_cfa, mosaic_from_color
from .harness import psnr, run_benchmark, write_csv
from .pipeline import Mode, default_workers, denoise, load_profile_overrides, select_profile
from .raster import load_color, load_plane, save_color, save_plane

PROG = "nabm3d"
_MODES = [m.value for m in Mode]


class _Failure(Exception):
    """Runtime failure reported as a single diagnostic line (exit 1)."""


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {value}")
    return value


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _mode_list(text):
    modes = [t.strip() for t in text.split(",") if t.strip()]
    bad = [m for m in modes if m not in _MODES]
    if bad or not modes:
        raise argparse.ArgumentTypeError(f"modes must be among {', '.join(_MODES)}; got {text!r}")
    return modes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Noise-adaptive BM3D image denoising.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("denoise", help="denoise a grayscale PGM/PNG image")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--sigma", required=True, type=float)
    p.add_argument("--mode", choices=_MODES, default=Mode.IMPROVED.value)
    p.add_argument("--profile-file")
    p.add_argument("--save-basic")
    p.add_argument("--workers", type=_positive_int, default=None)

    p = sub.add_parser("cfa-denoise", help="denoise Bayer CFA data and demosaick it")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--sigma-r", required=True, type=float)
    p.add_argument("--sigma-g", required=True, type=float)
    p.add_argument("--sigma-b", required=True, type=float)
    p.add_argument("--pattern", type=str.lower, choices=[x.lower() for x in PATTERNS], default="rggb")
    p.add_argument("--add-noise", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=None)

    p = sub.add_parser("benchmark", help="PSNR benchmark over a corpus, written as CSV")
    p.add_argument("--images", required=True, help="directory, or comma-separated image files")
    p.add_argument("--sigmas", required=True, type=_float_list)
    p.add_argument("--modes", type=_mode_list, default=["baseline", "improved"])
    p.add_argument("--seed", type=_int_list, default=[0], help="seed or comma-separated seeds")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=_positive_int, default=None)

    p = sub.add_parser("print-profile", help="print the resolved parameter profile")
    p.add_argument("--sigma", required=True, type=float)
    p.add_argument("--mode", choices=_MODES, default=Mode.IMPROVED.value)
    return parser


def _err(msg: str) -> None:
    print(f"{PROG}: {msg}", file=sys.stderr)


def _resolve_profile(sigma, mode, profile_file=None):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        profile = select_profile(sigma, mode)
    for w in caught:
        _err(f"warning: {w.message}")
    if profile_file:
        profile = profile.with_overrides(load_profile_overrides(profile_file))
    return profile


def cmd_denoise(args) -> int:
    profile = _resolve_profile(args.sigma, args.mode, args.profile_file)
    noisy = load_plane(args.input)
    workers = args.workers or default_workers()
    t0 = time.perf_counter()
    result = denoise(noisy, args.sigma, profile, workers=workers)
    elapsed = time.perf_counter() - t0
    save_plane(result.final, args.output)
    if args.save_basic:
        save_plane(result.basic, args.save_basic)
    print(f"mode={args.mode} sigma={args.sigma:g} seconds={elapsed:.3f}")
    return 0


def _fmt_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.2f}"


def cmd_cfa_denoise(args) -> int:
    sigmas = (args.sigma_r, args.sigma_g, args.sigma_b)
    if min(sigmas) < 0:
        raise _Failure("channel sigmas must be >= 0")
    color = load_color(args.input)
    mosaic = mosaic_from_color(color, args.pattern.upper(), sigmas)
    if args.add_noise:
        mosaic = add_cfa_noise(mosaic, args.seed)
    workers = args.workers or default_workers()
    denoised = denoise_cfa(mosaic, Mode.IMPROVED, workers=workers)
    out = np.clip(demosaick_bilinear(denoised), 0.0, 255.0)
    save_color(out, args.output)
    if args.add_noise:
        before = np.clip(demosaick_bilinear(mosaic), 0.0, 255.0)
        print(f"psnr_noisy_demosaicked={_fmt_db(psnr(color, before))} "
              f"psnr_denoised={_fmt_db(psnr(color, out))}")
    return 0


_IMAGE_EXTS = (".png", ".pgm")


def _corpus(spec: str):
    if os.path.isdir(spec):
        files = sorted(
            os.path.join(spec, f) for f in os.listdir(spec) if f.lower().endswith(_IMAGE_EXTS)
        )
        if not files:
            raise _Failure(f"no .png or .pgm images in {spec}")
        return files
    files = [f.strip() for f in spec.split(",") if f.strip()]
    missing = [f for f in files if not os.path.isfile(f)]
    if missing or not files:
        raise _Failure(f"image path not found: {missing[0] if missing else spec!r}")
    return files


def cmd_benchmark(args) -> int:
    corpus = _corpus(args.images)
    out_dir = os.path.dirname(os.path.abspath(args.out))
    if not os.path.isdir(out_dir) or not os.access(out_dir, os.W_OK):
        raise _Failure(f"cannot write CSV to {args.out}")
    records = run_benchmark(corpus, args.sigmas, args.modes, args.seed,
                            workers=args.workers or default_workers())
    write_csv(records, args.out)
    for rec in records:
        if rec.error:
            _err(f"warning: {rec.image} sigma={rec.sigma:g} mode={rec.mode}: {rec.error}")
    print(f"records={len(records)} out={args.out}")
    return 0


def cmd_print_profile(args) -> int:
    sys.stdout.write(_resolve_profile(args.sigma, args.mode).to_text())
    return 0


_COMMANDS = {
    "denoise": cmd_denoise,
    "cfa-denoise": cmd_cfa_denoise,
    "benchmark": cmd_benchmark,
    "print-profile": cmd_print_profile,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on misuse
    try:
        return _COMMANDS[args.command](args)
    except (_Failure, ValueError, KeyError, OSError, IndexError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        _err(f"error: {' '.join(str(msg).split())}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
