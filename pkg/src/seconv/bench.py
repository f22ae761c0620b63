"""Benchmark harness: corrupt, denoise and score a directory of images.

One noise realization is drawn per (image, density) and shared by every
method.  Its seed is derived from the master seed, the image id and the
density only, so adding or removing images never perturbs the other rows.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import adaptive_median_filter, median_filter
from .errors import ImageFormatError, ValidationError
from .imaging import as_image, to_uint8
from .metrics import SsimParams, mse, psnr, ssim
from .netpbm import read_image
from .noise import NoiseSpec, add_sap_noise
from .selective import CascadeSpec, cascade_denoise

log = logging.getLogger(__name__)

CSV_VERSION = 1
CSV_COLUMNS = ("image", "method", "density", "psnr_db", "ssim", "mse", "runtime_ms", "seed")
DEFAULT_DENSITIES = (0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.95)
METHODS = ("noisy", "mf", "amf", "cascade", "network")
IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm", ".png"}


@dataclass
class BenchmarkConfig:
    dataset_dir: Path
    densities: tuple[float, ...] = DEFAULT_DENSITIES
    methods: tuple[str, ...] = ("cascade", "mf")
    seed: int = 0
    output_csv: Path | None = None
    weights_path: Path | None = None
    workers: int = 1
    timing: bool = True
    mf_window: int = 3
    amf_max_window: int = 7
    cascade: CascadeSpec = field(default_factory=CascadeSpec.default)
    ssim_params: SsimParams = field(default_factory=SsimParams)

    def __post_init__(self):
        self.dataset_dir = Path(self.dataset_dir)
        self.densities = tuple(float(d) for d in self.densities)
        if not self.densities:
            raise ValidationError("at least one density is required")
        for d in self.densities:
            if not 0.0 < d <= 1.0:
                raise ValidationError(f"densities must lie in (0, 1], got {d}")
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValidationError("at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValidationError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if "network" in self.methods and self.weights_path is None:
            raise ValidationError("method 'network' needs a weights file")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


@dataclass(frozen=True)
class BenchmarkRow:
    image_id: str
    method: str
    density: float
    psnr_db: float
    ssim: float
    mse: float
    runtime_ms: float
    seed: int

    def sort_key(self):
        return (self.image_id, self.method, self.density)


@dataclass
class BenchmarkResult:
    rows: list[BenchmarkRow]
    skipped: list[tuple[str, str]]


def derive_seed(master_seed: int, image_id: str, density: float) -> int:
    """64-bit seed from (master seed, image id, density)."""
    key = f"{int(master_seed)}\x1f{image_id}\x1f{round(density * 1_000_000)}".encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def make_denoiser(method: str, config: BenchmarkConfig):
    if method == "noisy":
        return lambda x: as_image(x)
    if method == "mf":
        return lambda x: median_filter(x, config.mf_window)
    if method == "amf":
        return lambda x: adaptive_median_filter(x, config.amf_max_window)
    if method == "cascade":
        return lambda x: cascade_denoise(x, config.cascade)
    if method == "network":
        from .network import forward, load_weights

        graph = load_weights(config.weights_path)
        return lambda x: forward(graph, x)
    raise ValidationError(f"unknown method {method!r}")


def list_images(dataset_dir: Path) -> list[Path]:
    if not dataset_dir.is_dir():
        raise ValidationError(f"dataset directory {dataset_dir} does not exist")
    return sorted(p for p in dataset_dir.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _score_one(image_id, clean, density, config, denoisers) -> list[BenchmarkRow]:
    seed = derive_seed(config.seed, image_id, density)
    noisy = add_sap_noise(clean, NoiseSpec(density, seed=seed))
    rows = []
    for method in config.methods:
        start = time.perf_counter()
        out = denoisers[method](noisy)
        elapsed = (time.perf_counter() - start) * 1000.0 if config.timing else 0.0
        out = to_uint8(out)
        rows.append(
            BenchmarkRow(
                image_id,
                method,
                density,
                psnr(out, clean),
                ssim(out, clean, config.ssim_params),
                mse(out, clean),
                elapsed,
                seed,
            )
        )
    return rows


def run_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    """Score every (image, density, method) triple; rows come back sorted."""
    paths = list_images(config.dataset_dir)
    images = {}
    skipped = []
    for path in paths:
        try:
            images[path.stem] = read_image(path)
        except (ImageFormatError, OSError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            skipped.append((path.name, str(exc)))
    if not images:
        raise ValidationError(f"no readable images in {config.dataset_dir}")

    denoisers = {m: make_denoiser(m, config) for m in config.methods}
    tasks = [(image_id, clean, d) for image_id, clean in images.items() for d in config.densities]
    if config.workers == 1:
        chunks = [_score_one(i, c, d, config, denoisers) for i, c, d in tasks]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(lambda t: _score_one(*t, config, denoisers), tasks))
    rows = sorted((r for chunk in chunks for r in chunk), key=BenchmarkRow.sort_key)
    if config.output_csv is not None:
        Path(config.output_csv).write_text(format_csv(rows, timing=config.timing), encoding="utf-8", newline="")
    return BenchmarkResult(rows, skipped)


def _fmt(value: float, digits: int) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"


def format_csv(rows: list[BenchmarkRow], timing: bool = True) -> str:
    buf = io.StringIO()
    buf.write(f"# seconv-bench-csv v{CSV_VERSION} timing={'on' if timing else 'off'}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.image_id,
                r.method,
                f"{r.density:.2f}",
                _fmt(r.psnr_db, 4),
                _fmt(r.ssim, 6),
                _fmt(r.mse, 6),
                f"{r.runtime_ms:.3f}",
                r.seed,
            ]
        )
    return buf.getvalue()


def read_csv(text: str) -> list[BenchmarkRow]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [
        BenchmarkRow(
            d["image"],
            d["method"],
            float(d["density"]),
            float(d["psnr_db"]),
            float(d["ssim"]),
            float(d["mse"]),
            float(d["runtime_ms"]),
            int(d["seed"]),
        )
        for d in reader
    ]


def summarize(rows: list[BenchmarkRow], metric: str = "psnr_db") -> dict[str, dict]:
    """Per-method mean of ``metric`` at each density plus a ``"mean"`` entry.

    ``"mean"`` is the arithmetic mean of the per-density means, matching the
    last column of a results table.
    """
    acc: dict[str, dict[float, list[float]]] = {}
    for r in rows:
        acc.setdefault(r.method, {}).setdefault(r.density, []).append(getattr(r, metric))
    out = {}
    for method, by_density in acc.items():
        means = {d: float(np.mean(v)) for d, v in sorted(by_density.items())}
        out[method] = {**means, "mean": float(np.mean(list(means.values())))}
    return out


def format_summary(rows: list[BenchmarkRow]) -> str:
    """Fixed-width tables (methods x densities + Mean) for PSNR and SSIM."""
    densities = sorted({r.density for r in rows})
    methods = sorted({r.method for r in rows})
    out = []
    for metric, label, digits in (("psnr_db", "PSNR (dB)", 2), ("ssim", "SSIM", 3)):
        table = summarize(rows, metric)
        header = f"{label:<10}" + "".join(f"{round(d * 100):>9}%" for d in densities) + f"{'Mean':>10}"
        out.append(header)
        for m in methods:
            cells = "".join(f"{_fmt(table[m].get(d, float('nan')), digits):>10}" for d in densities)
            out.append(f"{m:<10}{cells}{_fmt(table[m]['mean'], digits):>10}")
        out.append("")
    return "\n".join(out)


def write_svg_plot(rows: list[BenchmarkRow], path: str | Path, metric: str = "psnr_db") -> None:
    """Line chart of the per-density mean ``metric`` for every method."""
    table = summarize(rows, metric)
    densities = sorted({r.density for r in rows})
    values = [v for m in table.values() for d, v in m.items() if d != "mean" and math.isfinite(v)]
    if not values:
        raise ValidationError("nothing finite to plot")
    lo, hi = min(values), max(values)
    if hi == lo:
        hi = lo + 1.0
    width, height, pad = 640, 400, 50
    dmin, dmax = densities[0], densities[-1] if densities[-1] > densities[0] else densities[0] + 1

    def px(d, v):
        x = pad + (d - dmin) / (dmax - dmin) * (width - 2 * pad)
        y = height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)
        return f"{x:.1f},{y:.1f}"

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">noise density (%)</text>',
        f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">{metric}</text>',
    ]
    for d in densities:
        x = px(d, lo).split(",")[0]
        parts.append(f'<text x="{x}" y="{height - pad + 14}" text-anchor="middle">{round(d * 100)}</text>')
    for v in (lo, hi):
        y = px(dmin, v).split(",")[1]
        parts.append(f'<text x="{pad - 4}" y="{y}" text-anchor="end">{v:.2f}</text>')
    for i, method in enumerate(sorted(table)):
        color = palette[i % len(palette)]
        pts = " ".join(px(d, table[method][d]) for d in densities if d in table[method] and math.isfinite(table[method][d]))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" fill="{color}">{method}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
