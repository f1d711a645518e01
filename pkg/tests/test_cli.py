import json

import numpy as np
import pytest

from nearlight import io as nio
from nearlight.cli import main


def write_configs(tmp_path, pairs=None, offset_mode="z", absolute_radius=1.0,
                  offset_truth=(0, 0, 0.5), size=48, fx=120.0):
    pairs = pairs or [
        {"radius_ratio": 1, "angle_deg": 45},
        {"radius_ratio": 1, "angle_deg": 135},
        {"radius_ratio": 2, "angle_deg": 45},
        {"radius_ratio": 2, "angle_deg": 135},
    ]
    rig = {"pairs": pairs, "offset_mode": offset_mode}
    if absolute_radius is not None:
        rig["absolute_radius"] = absolute_radius
    if offset_truth is not None:
        rig["offset_truth"] = list(offset_truth)
    cam = {"fx": fx, "fy": fx, "cx": (size - 1) / 2, "cy": (size - 1) / 2,
           "width": size, "height": size}
    scene = {"kind": "sphere", "center": [0, 0, 6], "radius": 1.0, "albedo": 0.9}
    paths = {}
    for name, doc in [("rig", rig), ("camera", cam), ("scene", scene)]:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    return paths


class TestRender:
    def test_writes_expected_files(self, tmp_path):
        paths = write_configs(tmp_path)
        out = tmp_path / "data"
        code = main(["render", "--scene", paths["scene"], "--rig", paths["rig"],
                     "--camera", paths["camera"], "--falloff", "relaxed",
                     "--out", str(out)])
        assert code == 0
        for pair in range(4):
            assert (out / f"light_{pair}_p.pfm").exists()
            assert (out / f"light_{pair}_m.pfm").exists()
        assert (out / "gt_normal.pfm").exists()
        assert (out / "gt_depth.pfm").exists()
        assert (out / "mask.png").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["images"]) == 8

    def test_non_metric_rig_exits_2(self, tmp_path, capsys):
        paths = write_configs(tmp_path, absolute_radius=None, offset_truth=None)
        code = main(["render", "--scene", paths["scene"], "--rig", paths["rig"],
                     "--camera", paths["camera"], "--out", str(tmp_path / "o")])
        assert code == 2
        assert "rig not metric" in capsys.readouterr().err

    def test_bad_config_key_exits_2(self, tmp_path, capsys):
        paths = write_configs(tmp_path)
        bad = tmp_path / "bad_rig.json"
        doc = json.loads((tmp_path / "rig.json").read_text())
        doc["radius"] = 3
        bad.write_text(json.dumps(doc))
        code = main(["render", "--scene", paths["scene"], "--rig", str(bad),
                     "--camera", paths["camera"], "--out", str(tmp_path / "o")])
        assert code == 2
        assert "radius" in capsys.readouterr().err

    def test_rerun_byte_identical(self, tmp_path):
        paths = write_configs(tmp_path)
        args = ["render", "--scene", paths["scene"], "--rig", paths["rig"],
                "--camera", paths["camera"], "--falloff", "cubic"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ["light_0_p.pfm", "light_3_m.pfm", "gt_depth.pfm"]:
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b


class TestSolveAndEval:
    @pytest.fixture
    def dataset(self, tmp_path):
        paths = write_configs(tmp_path)
        out = tmp_path / "data"
        assert main(["render", "--scene", paths["scene"], "--rig", paths["rig"],
                     "--camera", paths["camera"], "--falloff", "relaxed",
                     "--out", str(out)]) == 0
        return paths, out

    def test_solve_then_eval_round_trip(self, dataset, tmp_path, capsys):
        paths, data = dataset
        est = tmp_path / "est"
        assert main(["solve", "--manifest", str(data / "manifest.json"),
                     "--rig", paths["rig"], "--out", str(est)]) == 0
        for name in ["normal.pfm", "depth.pfm", "albedo.pfm", "status.png",
                     "normal_vis.png"]:
            assert (est / name).exists()
        assert main(["eval", "--estimate", str(est), "--truth", str(data)]) == 0
        report = json.loads((est / "report.json").read_text())
        assert set(report) == {"mean_angular_error_deg", "mean_rel_abs_depth_error",
                               "scale", "shift", "pixel_count"}
        assert report["mean_angular_error_deg"] < 0.01
        assert report["mean_rel_abs_depth_error"] < 1e-5
        assert report["pixel_count"] > 300
        assert (est / "angular_error.pfm").exists()
        assert (est / "depth_error.pfm").exists()

    def test_eval_identical_dirs_zero_error(self, dataset, tmp_path):
        paths, data = dataset
        est = tmp_path / "self"
        est.mkdir()
        depth = nio.read_pfm(data / "gt_depth.pfm")
        nio.write_pfm(est / "depth.pfm", depth)
        nio.write_pfm(est / "normal.pfm", nio.read_pfm(data / "gt_normal.pfm"))
        assert main(["eval", "--estimate", str(est), "--truth", str(data)]) == 0
        report = json.loads((est / "report.json").read_text())
        assert report["mean_rel_abs_depth_error"] == pytest.approx(0.0, abs=1e-7)
        assert report["mean_angular_error_deg"] == pytest.approx(0.0, abs=1e-3)

    def test_ring_rig_exits_4_citing_condition(self, dataset, tmp_path, capsys):
        paths, data = dataset
        ring = tmp_path / "ring.json"
        ring.write_text(json.dumps({
            "pairs": [{"radius_ratio": 1, "angle_deg": a} for a in (0, 45, 90, 135)],
            "offset_mode": "z",
        }))
        code = main(["solve", "--manifest", str(data / "manifest.json"),
                     "--rig", str(ring), "--out", str(tmp_path / "x")])
        assert code == 4
        assert "At least two pairs with different radii" in capsys.readouterr().err

    def test_manifest_rig_count_mismatch_exits_2(self, dataset, tmp_path):
        paths, data = dataset
        three = tmp_path / "three.json"
        three.write_text(json.dumps({
            "pairs": [{"radius_ratio": 1, "angle_deg": 45},
                      {"radius_ratio": 1, "angle_deg": 135},
                      {"radius_ratio": 2, "angle_deg": 45}],
            "offset_mode": "z",
        }))
        code = main(["solve", "--manifest", str(data / "manifest.json"),
                     "--rig", str(three), "--out", str(tmp_path / "x")])
        assert code == 2

    def test_missing_manifest_exits_3(self, dataset, tmp_path):
        paths, _ = dataset
        code = main(["solve", "--manifest", str(tmp_path / "nope.json"),
                     "--rig", paths["rig"], "--out", str(tmp_path / "x")])
        assert code == 3

    def test_eval_missing_files_exits_3(self, dataset, tmp_path):
        paths, data = dataset
        code = main(["eval", "--estimate", str(tmp_path / "empty"), "--truth", str(data)])
        assert code == 3


class TestCheck:
    def test_full_general_z_ranks(self, tmp_path, capsys):
        paths = write_configs(tmp_path)
        assert main(["check", "--rig", paths["rig"]]) == 0
        out = capsys.readouterr().out
        assert "FullGeneralZOnly" in out
        assert "rank(A) = 5" in out
        assert "rank([A; A']) = 7" in out

    def test_ring_exits_4(self, tmp_path, capsys):
        ring = tmp_path / "ring.json"
        ring.write_text(json.dumps({
            "pairs": [{"radius_ratio": 1, "angle_deg": a} for a in (0, 60, 120)],
            "offset_mode": "z",
        }))
        assert main(["check", "--rig", str(ring)]) == 4
        assert "RingScaledDistOnly" in capsys.readouterr().out

    def test_two_pairs_noncollinear_insufficient(self, tmp_path, capsys):
        rig = tmp_path / "two.json"
        rig.write_text(json.dumps({
            "pairs": [{"radius_ratio": 1, "angle_deg": 45},
                      {"radius_ratio": 2, "angle_deg": 135}],
            "offset_mode": "xyz",
        }))
        assert main(["check", "--rig", str(rig)]) == 4
        assert "Insufficient" in capsys.readouterr().out

    def test_collinear_solvable(self, tmp_path, capsys):
        rig = tmp_path / "line.json"
        rig.write_text(json.dumps({
            "pairs": [{"radius_ratio": 1, "angle_deg": 45},
                      {"radius_ratio": 2, "angle_deg": 45}],
            "offset_mode": "z",
        }))
        assert main(["check", "--rig", str(rig)]) == 0
        assert "CollinearDepthOnly" in capsys.readouterr().out


class TestOracle:
    def test_oracle_outputs(self, tmp_path):
        paths = write_configs(tmp_path, size=24, fx=60.0)
        data = tmp_path / "data"
        assert main(["render", "--scene", paths["scene"], "--rig", paths["rig"],
                     "--camera", paths["camera"], "--falloff", "relaxed",
                     "--out", str(data)]) == 0
        out = tmp_path / "oracle"
        assert main(["oracle", "--manifest", str(data / "manifest.json"),
                     "--rig", paths["rig"], "--grid-min", "4", "--grid-max", "8",
                     "--grid-steps", "401", "--out", str(out)]) == 0
        for name in ["oracle_depth.pfm", "oracle_normal.pfm", "oracle_residual.pfm"]:
            assert (out / name).exists()
        depth = nio.read_pfm(out / "oracle_depth.pfm")
        gt = nio.read_pfm(data / "gt_depth.pfm")
        mask = nio.read_mask_png(data / "mask.png")
        assert np.abs(depth[mask] - gt[mask]).max() <= 0.011

    def test_non_metric_rig_exits_2(self, tmp_path):
        paths = write_configs(tmp_path, size=24, fx=60.0)
        data = tmp_path / "data"
        assert main(["render", "--scene", paths["scene"], "--rig", paths["rig"],
                     "--camera", paths["camera"], "--out", str(data)]) == 0
        bare = tmp_path / "bare.json"
        doc = json.loads((tmp_path / "rig.json").read_text())
        del doc["absolute_radius"], doc["offset_truth"]
        bare.write_text(json.dumps(doc))
        code = main(["oracle", "--manifest", str(data / "manifest.json"),
                     "--rig", str(bare), "--out", str(tmp_path / "x")])
        assert code == 2
