import json
import os

import numpy as np
import pytest

from matinfer.chains import ChainWriter, read_chain, sample_record
from matinfer.imgio import (Grid, ImageDecodeError, linear_to_srgb, load_image,
                            save_image, srgb_to_linear)
from matinfer.sampler import ChainSample


class TestSrgbTransfer:
    def test_endpoints(self):
        assert srgb_to_linear(0.0) == 0.0
        assert srgb_to_linear(1.0) == pytest.approx(1.0, abs=1e-12)
        assert linear_to_srgb(0.0) == 0.0
        assert linear_to_srgb(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_iec_value_at_half(self):
        # encoded 0.5 -> linear per the IEC 61966-2-1 formula
        assert float(srgb_to_linear(0.5)) == pytest.approx(
            ((0.5 + 0.055) / 1.055) ** 2.4, abs=1e-12)
        assert float(srgb_to_linear(0.5)) == pytest.approx(0.21404, abs=1e-5)
        # and linear 0.5 encodes to 8-bit value 188
        assert round(float(linear_to_srgb(0.5)) * 255) == 188

    def test_transfer_round_trip(self):
        x = np.linspace(0, 1, 1001)
        assert np.abs(srgb_to_linear(linear_to_srgb(x)) - x).max() < 1e-12


class TestPng:
    def test_quantized_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        img = srgb_to_linear(rng.integers(0, 256, (16, 16, 3)) / 255.0)
        p1 = str(tmp_path / "a.png")
        p2 = str(tmp_path / "b.png")
        save_image(Grid(img), p1)
        loaded = load_image(p1)
        save_image(loaded, p2)
        assert load_image(p2).data.tobytes() == loaded.data.tobytes()

    def test_extreme_pixel_values(self, tmp_path):
        img = np.zeros((4, 4, 3))
        img[0, 0] = 1.0
        p = str(tmp_path / "x.png")
        save_image(Grid(img), p)
        back = load_image(p).data
        assert back[0, 0, 0] == pytest.approx(1.0, abs=1e-12)
        assert back[1, 1, 0] == 0.0

    def test_corrupt_png_reports_offset(self, tmp_path):
        p = tmp_path / "broken.png"
        good = tmp_path / "good.png"
        save_image(Grid(np.zeros((8, 8, 3))), str(good))
        blob = good.read_bytes()
        p.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(ImageDecodeError, match="byte offset"):
            load_image(str(p))

    def test_unsupported_format(self, tmp_path):
        p = tmp_path / "file.bmp"
        p.write_bytes(b"BM")
        with pytest.raises(ImageDecodeError, match="unsupported"):
            load_image(str(p))


class TestExr:
    def test_float_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        img = (rng.random((8, 8, 3)) * 5).astype(np.float32).astype(np.float64)
        p = str(tmp_path / "a.exr")
        save_image(Grid(img), p)
        back = load_image(p).data
        assert back.tobytes() == img.tobytes()

    def test_values_above_one_survive(self, tmp_path):
        img = np.full((4, 4, 3), 37.5)
        p = str(tmp_path / "hot.exr")
        save_image(Grid(img), p)
        assert load_image(p).data.max() == 37.5

    def test_truncated_exr_reports_offset(self, tmp_path):
        good = tmp_path / "good.exr"
        save_image(Grid(np.ones((8, 8, 3))), str(good))
        blob = good.read_bytes()
        bad = tmp_path / "bad.exr"
        bad.write_bytes(blob[:-50])
        with pytest.raises(ImageDecodeError, match="byte offset"):
            load_image(str(bad))

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.exr"
        p.write_bytes(b"\x00\x00\x00\x00rest")
        with pytest.raises(ImageDecodeError, match="offset 0"):
            load_image(str(p))


class TestGridType:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            Grid(np.zeros((2, 2, 2, 2)))

    def test_nonfinite_rejected(self):
        bad = np.ones((2, 2, 3))
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            Grid(bad)

    def test_length_invariant(self):
        g = Grid(np.zeros((3, 4, 3)))
        assert g.data.size == g.height * g.width * g.channels


def make_samples(n):
    rng = np.random.default_rng(2)
    return [ChainSample(t, rng.random(3), np.array([t % 2]), float(rng.random()), bool(t % 3))
            for t in range(n)]


class TestChains:
    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "chain_0.jsonl")
        samples = make_samples(20)
        with ChainWriter(path) as w:
            for s in samples:
                w.write(s)
        records = read_chain(path)
        assert len(records) == 20
        for s, r in zip(samples, records):
            assert r == sample_record(s)

    def test_line_count_matches_samples(self, tmp_path):
        path = str(tmp_path / "chain_1.jsonl")
        with ChainWriter(path) as w:
            for s in make_samples(7):
                w.write(s)
        with open(path) as f:
            assert len(f.read().strip().split("\n")) == 7

    @pytest.mark.parametrize("cut", [1, 3, 10, 25])
    def test_truncated_final_line_skipped(self, tmp_path, cut):
        path = str(tmp_path / "chain_2.jsonl")
        with ChainWriter(path) as w:
            for s in make_samples(10):
                w.write(s)
        blob = open(path, "rb").read()
        open(path, "wb").write(blob[:-cut])
        records = read_chain(path)
        assert len(records) == 9

    def test_mid_file_corruption_raises(self, tmp_path):
        path = str(tmp_path / "chain_3.jsonl")
        with ChainWriter(path) as w:
            for s in make_samples(5):
                w.write(s)
        lines = open(path).read().strip().split("\n")
        lines[2] = lines[2][:5]
        open(path, "w").write("\n".join(lines) + "\n")
        with pytest.raises(json.JSONDecodeError):
            read_chain(path)

    def test_deterministic_serialization(self, tmp_path):
        p1, p2 = str(tmp_path / "chain_a.jsonl"), str(tmp_path / "chain_b.jsonl")
        for p in (p1, p2):
            with ChainWriter(p) as w:
                for s in make_samples(15):
                    w.write(s)
        assert open(p1, "rb").read() == open(p2, "rb").read()
