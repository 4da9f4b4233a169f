import json

import numpy as np
import pytest

from visionary import metrics, pipeline as pl, splatmath as sm
from visionary.errors import InvalidInputError
from visionary.generators import GeneratorInputs
from visionary.generators.fixtures import toy_cloud
from visionary.sortlab import GlobalSort, LazySort


class TestPsnr:
    def test_identical_is_inf(self):
        img = np.random.default_rng(0).integers(0, 256, size=(16, 16, 3),
                                                dtype=np.uint8)
        assert metrics.psnr(img, img) == float("inf")

    def test_off_by_one_everywhere(self):
        a = np.full((8, 8, 3), 100, dtype=np.uint8)
        b = a + 1
        # MSE 1 -> 20 log10(255) = 48.1308 dB.
        assert metrics.psnr(a, b) == pytest.approx(48.1308, abs=1e-4)

    def test_half_range_offset(self):
        a = np.zeros((8, 8, 3), dtype=np.uint8)
        b = np.full((8, 8, 3), 128, dtype=np.uint8)
        assert metrics.psnr(a, b) == pytest.approx(20 * np.log10(255 / 128),
                                                   abs=1e-9)

    def test_accepts_float_images(self):
        a = np.zeros((4, 4, 3))
        b = np.full((4, 4, 3), 128 / 255)
        assert metrics.psnr(a, b) == pytest.approx(20 * np.log10(255 / 128),
                                                   abs=1e-9)

    def test_size_mismatch(self):
        with pytest.raises(InvalidInputError):
            metrics.psnr(np.zeros((4, 4, 3), dtype=np.uint8),
                         np.zeros((5, 4, 3), dtype=np.uint8))


class TestSsim:
    def test_self_similarity_is_one(self):
        img = np.random.default_rng(1).integers(0, 256, size=(32, 32, 3),
                                                dtype=np.uint8)
        assert metrics.ssim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_constant_patches_closed_form(self):
        # Zero variance: SSIM = (2xy + c1) / (x^2 + y^2 + c1).
        x, y = 100.0, 120.0
        a = np.full((16, 16, 3), int(x), dtype=np.uint8)
        b = np.full((16, 16, 3), int(y), dtype=np.uint8)
        c1 = (0.01 * 255) ** 2
        expected = (2 * x * y + c1) / (x * x + y * y + c1)
        assert metrics.ssim(a, b) == pytest.approx(expected, abs=1e-9)

    def test_negative_image_scores_low(self):
        img = np.random.default_rng(2).integers(0, 256, size=(24, 24, 3),
                                                dtype=np.uint8)
        assert metrics.ssim(img, 255 - img) < 0.2

    def test_noise_ranks_below_identity(self):
        rng = np.random.default_rng(3)
        img = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
        noisy = np.clip(img.astype(int) + rng.integers(-20, 21, img.shape),
                        0, 255).astype(np.uint8)
        assert 0.3 < metrics.ssim(img, noisy) < 1.0

    def test_too_small_rejected(self):
        with pytest.raises(InvalidInputError):
            metrics.ssim(np.zeros((8, 8, 3), dtype=np.uint8),
                         np.zeros((8, 8, 3), dtype=np.uint8))


def small_scene(seed=4, count=80):
    return pl.Scene(instances=[pl.ModelInstance(
        source=toy_cloud(seed, count=count, degree=1, extent=0.5))])


def orbit_trajectory(frames=3, radius=2.5):
    cams = []
    for i in range(frames):
        ang = 2 * np.pi * i / max(frames, 1)
        eye = (radius * np.sin(ang), 0.4, radius * np.cos(ang))
        cams.append((sm.Camera.look_at(eye, (0, 0, 0), width=48, height=48),
                     GeneratorInputs(time=i / max(frames - 1, 1))))
    return cams


class TestBenchmark:
    def test_rows_and_aggregates(self):
        report = metrics.run_benchmark(small_scene(), orbit_trajectory(3))
        assert len(report.rows) == 3
        for row in report.rows:
            assert row["splats_in"] == 80
            assert row["inversions"] == 0
            stage_sum = (row["generate_ms"] + row["preprocess_ms"]
                         + row["sort_ms"] + row["draw_ms"])
            assert row["total_ms"] == pytest.approx(stage_sum, rel=0.05)
        agg = report.aggregates()
        assert agg["total_ms"]["mean"] > 0

    def test_lazy_strategy_reports_inversions(self):
        report = metrics.run_benchmark(small_scene(), orbit_trajectory(6),
                                       strategy=LazySort(6))
        inv = [r["inversions"] for r in report.rows]
        assert inv[0] == 0            # frame 0 is a full sort
        assert max(inv) > 0           # stale frames under a moving camera

    def test_csv_roundtrip(self, tmp_path):
        path = tmp_path / "bench.csv"
        report = metrics.run_benchmark(small_scene(), orbit_trajectory(2),
                                       csv_path=str(path))
        text = path.read_text()
        assert text.splitlines()[0] == ",".join(metrics.CSV_COLUMNS)
        again = metrics.BenchmarkReport.from_csv(text)
        assert again.rows == report.rows

    def test_json_output(self, tmp_path):
        path = tmp_path / "bench.json"
        metrics.run_benchmark(small_scene(), orbit_trajectory(2),
                              strategy=GlobalSort(), json_path=str(path))
        doc = json.loads(path.read_text())
        assert doc["scene"]["frames"] == 2
        assert set(doc["aggregates"]) == {"generate_ms", "preprocess_ms",
                                          "sort_ms", "draw_ms", "total_ms"}

    def test_empty_trajectory_rejected(self):
        with pytest.raises(InvalidInputError):
            metrics.run_benchmark(small_scene(), [])


class TestScaleTable:
    def test_shape(self):
        reports = [metrics.run_benchmark(small_scene(count=c),
                                         orbit_trajectory(2))
                   for c in (20, 40)]
        doc = json.loads(metrics.scale_table(
            [("S", 20, reports[0]), ("M", 40, reports[1])]))
        assert [r["scale"] for r in doc["scales"]] == ["S", "M"]
        for row in doc["scales"]:
            assert row["total_ms"] >= row["sort_ms"]
            assert set(row) == {"scale", "gaussians", "sort_ms",
                                "prep_draw_ms", "total_ms"}
