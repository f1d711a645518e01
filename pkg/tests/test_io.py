import struct

import numpy as np
import pytest

from nearlight.errors import ConfigError
from nearlight.geometry import OffsetMode
from nearlight.io import (
    camera_from_dict,
    camera_to_dict,
    read_mask_png,
    read_pfm,
    rig_from_dict,
    rig_to_dict,
    write_mask_png,
    write_pfm,
)


class TestPfm:
    def test_roundtrip_single_channel_bit_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        img = rng.normal(scale=10, size=(17, 23)).astype(np.float32)
        img[0, 0] = -0.0
        img[1, 1] = np.float32(1e-40)  # denormal
        img[2, 2] = np.float32(-3.4e38)
        path = tmp_path / "x.pfm"
        write_pfm(path, img)
        back = read_pfm(path)
        assert back.dtype == np.float32
        assert back.shape == img.shape
        assert np.array_equal(img.view(np.uint32), back.view(np.uint32))

    def test_roundtrip_three_channel_bit_exact(self, tmp_path):
        rng = np.random.default_rng(4)
        img = rng.normal(size=(9, 5, 3)).astype(np.float32)
        path = tmp_path / "n.pfm"
        write_pfm(path, img)
        back = read_pfm(path)
        assert np.array_equal(img.view(np.uint32), back.view(np.uint32))

    def test_reads_big_endian(self, tmp_path):
        img = np.arange(12, dtype=np.float32).reshape(3, 4) - 5.5
        path = tmp_path / "be.pfm"
        payload = np.flipud(img).astype(">f4").tobytes()
        with open(path, "wb") as f:
            f.write(b"Pf\n4 3\n1.0\n")
            f.write(payload)
        back = read_pfm(path)
        np.testing.assert_array_equal(back, img)

    def test_written_header_is_little_endian(self, tmp_path):
        path = tmp_path / "h.pfm"
        write_pfm(path, np.zeros((2, 2), dtype=np.float32))
        with open(path, "rb") as f:
            assert f.readline() == b"Pf\n"
            assert f.readline() == b"2 2\n"
            assert float(f.readline()) < 0

    def test_rejects_bad_shapes(self, tmp_path):
        with pytest.raises(ValueError):
            write_pfm(tmp_path / "bad.pfm", np.zeros((2, 2, 4)))

    def test_rejects_non_pfm(self, tmp_path):
        path = tmp_path / "no.pfm"
        path.write_bytes(b"P6\n2 2\n255\n" + b"\x00" * 12)
        with pytest.raises(ValueError):
            read_pfm(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.pfm"
        path.write_bytes(b"Pf\n4 4\n-1.0\n" + b"\x00" * 10)
        with pytest.raises(ValueError):
            read_pfm(path)


class TestMaskPng:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        mask = rng.random((11, 7)) > 0.5
        path = tmp_path / "m.png"
        write_mask_png(path, mask)
        np.testing.assert_array_equal(read_mask_png(path), mask)


class TestRigConfig:
    DOC = {
        "pairs": [
            {"radius_ratio": 1.0, "angle_deg": 45.0},
            {"radius_ratio": 1.0, "angle_deg": 135.0},
            {"radius_ratio": 2.0, "angle_deg": 45.0},
            {"radius_ratio": 2.0, "angle_deg": 135.0},
        ],
        "offset_mode": "z",
        "absolute_radius": 1.0,
        "offset_truth": [0.0, 0.0, 0.5],
    }

    def test_parse(self):
        rig = rig_from_dict(self.DOC)
        assert rig.n_pairs == 4
        assert rig.offset_mode is OffsetMode.Z_ONLY
        assert rig.absolute_radius == 1.0
        assert rig.offset_truth == (0.0, 0.0, 0.5)

    def test_structural_roundtrip(self):
        rig = rig_from_dict(self.DOC)
        doc2 = rig_to_dict(rig)
        rig2 = rig_from_dict(doc2)
        assert rig2 == rig
        assert rig_to_dict(rig2) == doc2

    def test_unknown_key_rejected(self):
        doc = dict(self.DOC)
        doc["radius"] = 2
        with pytest.raises(ConfigError, match="radius"):
            rig_from_dict(doc)

    def test_unknown_pair_key_rejected(self):
        doc = {"pairs": [{"radius_ratio": 1, "angle_deg": 0, "z": 1}]}
        with pytest.raises(ConfigError):
            rig_from_dict(doc)

    def test_missing_pairs(self):
        with pytest.raises(ConfigError, match="pairs"):
            rig_from_dict({"offset_mode": "z"})

    def test_bad_offset_mode(self):
        doc = dict(self.DOC)
        doc["offset_mode"] = "zz"
        with pytest.raises(ConfigError, match="offset_mode"):
            rig_from_dict(doc)

    def test_optional_fields_absent(self):
        rig = rig_from_dict(
            {"pairs": [{"radius_ratio": 1, "angle_deg": 0}, {"radius_ratio": 2, "angle_deg": 90}]}
        )
        assert rig.absolute_radius is None
        assert rig.offset_truth is None
        doc = rig_to_dict(rig)
        assert "absolute_radius" not in doc and "offset_truth" not in doc


class TestCameraConfig:
    def test_roundtrip(self):
        doc = {"fx": 300.0, "fy": 310.0, "cx": 63.5, "cy": 64.5, "width": 128, "height": 130}
        cam = camera_from_dict(doc)
        assert camera_to_dict(cam) == doc

    def test_missing_key(self):
        with pytest.raises(ConfigError, match="fy"):
            camera_from_dict({"fx": 300, "cx": 0, "cy": 0, "width": 4, "height": 4})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="skew"):
            camera_from_dict(
                {"fx": 1, "fy": 1, "cx": 0, "cy": 0, "width": 4, "height": 4, "skew": 0}
            )
