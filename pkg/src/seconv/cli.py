"""``seconv`` command line: add-noise, denoise, eval, bench.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .baselines import adaptive_median_filter, median_filter
from .errors import ImageFormatError, SeConvError, UnrestorableImageError, ValidationError, WeightFormatError
from .imaging import as_image
from .metrics import SsimParams, mse, psnr, ssim
from .netpbm import read_image, write_image
from .noise import NoiseSpec, add_sap_noise
from .noise import preprocess
from .selective import CascadeSpec, Finalize, run_cascade

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _density(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid density {text!r}") from None
    return value


def _densities(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) / 100.0 for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid density list {text!r}") from None


def _load_cascade(args) -> CascadeSpec:
    if args.config:
        spec = CascadeSpec.from_config(Path(args.config).read_text(encoding="utf-8"))
    else:
        spec = CascadeSpec.default(kernel=args.kernel)
    if args.finalize:
        spec = CascadeSpec(spec.blocks, Finalize(args.finalize))
    return spec


def cmd_add_noise(args) -> int:
    clean = read_image(args.input)
    spec = NoiseSpec(args.density, seed=args.seed)
    noisy = add_sap_noise(clean, spec)
    write_image(args.output, noisy)
    changed = int(np.count_nonzero(noisy != clean))
    # Salt landing on an already-255 pixel (or pepper on 0) is not visible as a change.
    print(f"corrupted {changed} of {clean.size} values ({changed / clean.size:.4f})")
    return EXIT_OK


def cmd_denoise(args) -> int:
    noisy = read_image(args.input)
    if args.method == "mf":
        out = median_filter(noisy, args.window)
    elif args.method == "amf":
        out = adaptive_median_filter(noisy, args.max_window)
    elif args.method == "cascade":
        state, stages = run_cascade(preprocess(as_image(noisy)), _load_cascade(args))
        for name, count in stages:
            print(f"{name}: restored {count}")
        print(f"remaining noisy: {int(state.noisy.sum())}")
        out = state.image
    else:
        if not args.weights:
            raise ValidationError("--method network requires --weights")
        from .network import forward, load_weights

        out = forward(load_weights(args.weights), noisy)
    write_image(args.output, out)
    return EXIT_OK


def cmd_eval(args) -> int:
    a = read_image(args.denoised)
    b = read_image(args.reference)
    if a.shape != b.shape:
        raise ValidationError(f"shape mismatch: {a.shape} vs {b.shape}")
    params = SsimParams(mode=args.ssim_mode)
    p = psnr(a, b)
    print("PSNR: inf" if p == float("inf") else f"PSNR: {p:.2f}")
    print(f"SSIM: {ssim(a, b, params):.3f}")
    print(f"MSE: {mse(a, b):.4f}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = bench_mod.BenchmarkConfig(
        dataset_dir=Path(args.dataset),
        densities=args.densities,
        methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
        seed=args.seed,
        output_csv=Path(args.output),
        weights_path=Path(args.weights) if args.weights else None,
        workers=args.workers,
        timing=not args.no_timing,
        mf_window=args.window,
        amf_max_window=args.max_window,
        cascade=_load_cascade(args),
        ssim_params=SsimParams(mode=args.ssim_mode),
    )
    result = bench_mod.run_benchmark(config)
    print(bench_mod.format_summary(result.rows), end="")
    for name, reason in result.skipped:
        print(f"skipped {name}: {reason}", file=sys.stderr)
    if args.plot:
        bench_mod.write_svg_plot(result.rows, args.plot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seconv", description="Salt-and-pepper denoising toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("add-noise", help="corrupt an image with salt-and-pepper noise")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--density", type=_density, required=True, help="fraction in [0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_add_noise)

    def cascade_flags(q):
        q.add_argument("--config", help="cascade key=value config file")
        q.add_argument("--kernel", choices=["ones", "inverse_distance"], default="ones")
        q.add_argument("--finalize", choices=[f.value for f in Finalize])
        q.add_argument("--window", type=int, default=3, help="median filter window")
        q.add_argument("--max-window", type=int, default=7, help="adaptive median growth bound")
        q.add_argument("--weights", help="SCVW weight file for --method network")

    p = sub.add_parser("denoise", help="denoise one image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", choices=["mf", "amf", "cascade", "network"], default="cascade")
    cascade_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("eval", help="PSNR/SSIM/MSE of a denoised image against a reference")
    p.add_argument("denoised")
    p.add_argument("reference")
    p.add_argument("--ssim-mode", choices=["global", "windowed"], default="global")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run the density sweep over a directory of images")
    p.add_argument("--dataset", required=True)
    p.add_argument("--output", required=True, help="CSV path")
    p.add_argument("--densities", type=_densities, default=bench_mod.DEFAULT_DENSITIES, help="percentages, e.g. 10,50,95")
    p.add_argument("--methods", default="cascade,mf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="write runtime_ms as 0 for byte-reproducible CSVs")
    p.add_argument("--plot", help="optional SVG path for a PSNR vs density chart")
    p.add_argument("--ssim-mode", choices=["global", "windowed"], default="global")
    cascade_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, UnrestorableImageError) as exc:
        print(f"seconv: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ImageFormatError, WeightFormatError) as exc:
        print(f"seconv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SeConvError as exc:
        print(f"seconv: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
