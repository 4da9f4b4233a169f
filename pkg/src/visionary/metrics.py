"""Image quality metrics and the trajectory benchmark harness."""
from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import convolve

from .errors import InvalidInputError
from .pipeline import FrameStats, Scene, image_to_rgba8, render_frame
from .sortlab import GlobalSort, SortStrategy, count_inversions

CSV_COLUMNS = ["frame", "generate_ms", "preprocess_ms", "sort_ms", "draw_ms",
               "total_ms", "splats_in", "splats_visible", "inversions"]


def _to_u8(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr[..., :3]
    return image_to_rgba8(arr)[..., :3]


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB over 8-bit RGB; +inf when equal."""
    ua, ub = _to_u8(a), _to_u8(b)
    if ua.shape != ub.shape:
        raise InvalidInputError(f"image size mismatch: {ua.shape} vs {ub.shape}")
    mse = np.mean((ua.astype(np.float64) - ub.astype(np.float64)) ** 2)
    if mse == 0:
        return float("inf")
    return 20.0 * np.log10(255.0 / np.sqrt(mse))


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a, b, k1: float = 0.01, k2: float = 0.03) -> float:
    """Mean local SSIM: 11x11 Gaussian window (sigma 1.5), 8-bit range.

    Luminance is the per-pixel RGB mean; windows use reflect padding.
    """
    ua = _to_u8(a).astype(np.float64).mean(axis=2)
    ub = _to_u8(b).astype(np.float64).mean(axis=2)
    if ua.shape != ub.shape:
        raise InvalidInputError(f"image size mismatch: {ua.shape} vs {ub.shape}")
    if min(ua.shape) < 11:
        raise InvalidInputError("ssim needs images of at least 11x11 pixels")
    win = _gaussian_window()
    c1 = (k1 * 255.0) ** 2
    c2 = (k2 * 255.0) ** 2

    def filt(x):
        return convolve(x, win, mode="reflect")

    mu_a, mu_b = filt(ua), filt(ub)
    var_a = filt(ua * ua) - mu_a * mu_a
    var_b = filt(ub * ub) - mu_b * mu_b
    cov = filt(ua * ub) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class BenchmarkReport:
    """Per-frame stats rows plus stage aggregates for one benchmark run."""
    rows: list
    scene_info: dict = field(default_factory=dict)

    def aggregates(self) -> dict:
        out = {}
        for stage in ("generate_ms", "preprocess_ms", "sort_ms", "draw_ms", "total_ms"):
            vals = [r[stage] for r in self.rows]
            out[stage] = {"mean": statistics.fmean(vals) if vals else 0.0,
                          "median": statistics.median(vals) if vals else 0.0}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: row[k] for k in CSV_COLUMNS})
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BenchmarkReport":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            row = {}
            for k in CSV_COLUMNS:
                v = rec[k]
                row[k] = int(v) if k in ("frame", "splats_in", "splats_visible",
                                         "inversions") else float(v)
            rows.append(row)
        return cls(rows=rows)

    def to_json(self) -> str:
        return json.dumps({"scene": self.scene_info, "rows": self.rows,
                           "aggregates": self.aggregates()}, indent=1)


def run_benchmark(scene: Scene, trajectory, strategy: SortStrategy | None = None,
                  csv_path: str | None = None,
                  json_path: str | None = None) -> BenchmarkReport:
    """Render every (camera, inputs) pair of the trajectory and record stats.

    Inversion counts are recorded when a non-global strategy is active.
    """
    trajectory = list(trajectory)
    if not trajectory:
        raise InvalidInputError("trajectory is empty")
    if strategy is None:
        strategy = GlobalSort()
    is_global = isinstance(strategy, GlobalSort)
    rows = []
    for frame, (cam, inputs) in enumerate(trajectory):
        result = render_frame(scene, cam, inputs, strategy)
        inv = 0 if is_global else count_inversions(result.permutation, result.keys)
        rows.append({"frame": frame, **result.stats.to_dict(), "inversions": inv})
    total = sum(len(r.source.cloud) if hasattr(r.source, "cloud") else 0
                for r in scene.instances)
    report = BenchmarkReport(rows=rows, scene_info={
        "instances": len(scene.instances),
        "gaussians_static": total,
        "strategy": type(strategy).__name__,
        "frames": len(rows)})
    if csv_path:
        with open(csv_path, "w") as f:
            f.write(report.to_csv())
    if json_path:
        with open(json_path, "w") as f:
            f.write(report.to_json())
    return report


def scale_table(entries) -> str:
    """Time-breakdown table over scene scales as JSON.

    entries: iterable of (label, gaussian_count, BenchmarkReport).
    """
    rows = []
    for label, count, report in entries:
        agg = report.aggregates()
        prep_draw = agg["preprocess_ms"]["mean"] + agg["draw_ms"]["mean"] \
            + agg["generate_ms"]["mean"]
        rows.append({"scale": label, "gaussians": count,
                     "sort_ms": agg["sort_ms"]["mean"],
                     "prep_draw_ms": prep_draw,
                     "total_ms": agg["total_ms"]["mean"]})
    return json.dumps({"scales": rows}, indent=1)
