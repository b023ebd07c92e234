import json
import subprocess
import sys

import numpy as np
import pytest

from ocuctx import ClassSpec, ContextConfig, LabelMask, pc_loss, save_mask
from ocuctx.cli import main

from test_harness import three_image_fixture, write_pair


@pytest.fixture
def classes_file(tmp_path):
    path = tmp_path / "classes.json"
    path.write_text('{"1": "iris", "2": "sclera", "background": 0}')
    return path


@pytest.fixture
def spec():
    return ClassSpec(classes=((1, "iris"), (2, "sclera")))


class TestEvaluateCommand:
    def test_writes_report_and_exits_zero(self, tmp_path, spec, classes_file, capsys):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        out = tmp_path / "report.json"
        code = main([
            "evaluate", "--gt", str(gt_dir), "--pred", str(pred_dir),
            "--scenario", "custom", "--classes", str(classes_file),
            "--out", str(out), "--jobs", "2",
        ])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["schema"] == 1
        assert doc["aggregate"]["n_images"] == 3
        assert "evaluated 3 image(s)" in capsys.readouterr().out

    def test_partial_failure_exit_code(self, tmp_path, spec, classes_file):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        (pred_dir / "img_a.png").write_bytes(b"junk")
        out = tmp_path / "report.json"
        code = main([
            "evaluate", "--gt", str(gt_dir), "--pred", str(pred_dir),
            "--scenario", "custom", "--classes", str(classes_file),
            "--out", str(out),
        ])
        assert code == 3
        doc = json.loads(out.read_text())
        assert doc["aggregate"]["n_failed"] == 1

    def test_total_failure_exit_code(self, tmp_path, spec, classes_file):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        for path in pred_dir.iterdir():
            path.write_bytes(b"junk")
        out = tmp_path / "report.json"
        code = main([
            "evaluate", "--gt", str(gt_dir), "--pred", str(pred_dir),
            "--scenario", "custom", "--classes", str(classes_file),
            "--out", str(out),
        ])
        assert code == 4

    def test_markdown_format(self, tmp_path, spec, classes_file):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        out = tmp_path / "report.md"
        code = main([
            "evaluate", "--gt", str(gt_dir), "--pred", str(pred_dir),
            "--scenario", "all", "--classes", str(classes_file),
            "--punish", "add", "--out", str(out), "--format", "markdown",
        ])
        assert code == 0
        assert "| Region | F-Score | ER | IoU |" in out.read_text()

    def test_domain_error_exit_one(self, tmp_path, classes_file, capsys):
        code = main([
            "evaluate", "--gt", str(tmp_path / "none"), "--pred", str(tmp_path),
            "--scenario", "custom", "--classes", str(classes_file),
            "--out", str(tmp_path / "r.json"),
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestPcLossCommand:
    def test_prints_full_precision_values(self, tmp_path, spec, classes_file, capsys):
        gt_grid = np.zeros((8, 8), dtype=np.uint8)
        gt_grid[1:4, 1:4] = 1
        gt_grid[5:8, 5:8] = 2
        pred_grid = gt_grid.copy()
        pred_grid[5:8, 5:8] = 0
        pred_grid[4:7, 5:8] = 2
        gt_path, pred_path = tmp_path / "gt.png", tmp_path / "pred.png"
        save_mask(LabelMask(gt_grid, spec), gt_path)
        save_mask(LabelMask(pred_grid, spec), pred_path)

        code = main([
            "pcloss", "--gt", str(gt_path), "--pred", str(pred_path),
            "--classes", str(classes_file),
        ])
        assert code == 0
        out = capsys.readouterr().out
        lines = dict(line.split(": ", 1) for line in out.strip().splitlines())

        expected = pc_loss(
            LabelMask(gt_grid, spec), LabelMask(pred_grid, spec), ContextConfig(spec=spec)
        )
        assert lines["pc_loss"] == repr(expected.pc_loss)
        assert lines["lambda"] == repr(expected.lambda_)
        assert lines["rho"] == repr(expected.rho)
        assert lines["delta_gt"] == repr(expected.delta_gt)
        assert lines["delta_pred"] == repr(expected.delta_pred)
        assert lines["theta[iris]"] == repr(expected.thetas["iris"])
        assert lines["flags"] == "none"

    def test_flags_printed(self, tmp_path, spec, classes_file, capsys):
        gt_grid = np.zeros((4, 4), dtype=np.uint8)
        gt_grid[0, 0] = 1
        gt_grid[2, 3] = 2
        pred_grid = np.zeros((4, 4), dtype=np.uint8)  # everything background
        gt_path, pred_path = tmp_path / "gt.png", tmp_path / "pred.png"
        save_mask(LabelMask(gt_grid, spec), gt_path)
        save_mask(LabelMask(pred_grid, spec), pred_path)
        main(["pcloss", "--gt", str(gt_path), "--pred", str(pred_path),
              "--classes", str(classes_file)])
        out = capsys.readouterr().out
        assert "flags: PRED_CLASS_EMPTY" in out

    def test_size_mismatch_exit_one(self, tmp_path, spec, classes_file, capsys):
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        save_mask(LabelMask(np.zeros((2, 2), dtype=np.uint8), spec), a)
        save_mask(LabelMask(np.zeros((3, 3), dtype=np.uint8), spec), b)
        code = main(["pcloss", "--gt", str(a), "--pred", str(b),
                     "--classes", str(classes_file)])
        assert code == 1
        assert "dimension mismatch" in capsys.readouterr().err


class TestSplitCommand:
    def test_writes_assignment(self, tmp_path, spec, classes_file, capsys):
        masks = tmp_path / "masks"
        masks.mkdir()
        grid = np.zeros((2, 2), dtype=np.uint8)
        for i in range(10):
            save_mask(LabelMask(grid, spec), masks / f"img{i:02d}.png")
        out = tmp_path / "splits.json"
        code = main(["split", "--manifest", str(masks), "--seed", "7", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["seed"] == 7
        assert (len(doc["train"]), len(doc["test"]), len(doc["validation"])) == (4, 4, 2)

        # deterministic: run again into a second file
        out2 = tmp_path / "splits2.json"
        main(["split", "--manifest", str(masks), "--seed", "7", "--out", str(out2)])
        assert out.read_text() == out2.read_text()

    def test_group_by_prefix_flag(self, tmp_path, spec):
        masks = tmp_path / "masks"
        masks.mkdir()
        grid = np.zeros((2, 2), dtype=np.uint8)
        for subject in range(6):
            for shot in ("a", "b"):
                save_mask(LabelMask(grid, spec), masks / f"s{subject}_{shot}.png")
        out = tmp_path / "splits.json"
        code = main(["split", "--manifest", str(masks), "--seed", "3",
                     "--out", str(out), "--group-by-prefix"])
        assert code == 0
        doc = json.loads(out.read_text())
        for subject in range(6):
            holders = [
                key for key in ("train", "test", "validation")
                if any(i.startswith(f"s{subject}_") for i in doc[key])
            ]
            assert len(holders) == 1


class TestCompareCommand:
    def test_compares_two_reports(self, tmp_path, spec, classes_file, capsys):
        rng = np.random.default_rng(71)
        gt_dir = tmp_path / "gt"
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        for i in range(7):
            gt = np.zeros((8, 8), dtype=np.uint8)
            gt[2:6, 1:4] = 1
            gt[0:2, 5:8] = 2
            pa, pb = gt.copy(), gt.copy()
            pa[int(rng.integers(0, 8)), int(rng.integers(0, 8))] = 1
            pb[2:6, 2:5] = 1
            write_pair(gt_dir, a_dir, f"img{i}", gt, pa, spec)
            write_pair(gt_dir, b_dir, f"img{i}", gt, pb, spec)
        ra, rb = tmp_path / "ra.json", tmp_path / "rb.json"
        for pred_dir, out in ((a_dir, ra), (b_dir, rb)):
            assert main([
                "evaluate", "--gt", str(gt_dir), "--pred", str(pred_dir),
                "--scenario", "custom", "--classes", str(classes_file),
                "--out", str(out),
            ]) == 0
        capsys.readouterr()
        code = main(["compare", str(ra), str(rb), "--metric", "fscore", "--alpha", "0.05"])
        assert code == 0
        out = capsys.readouterr().out
        assert "p_two_sided:" in out
        assert "method: EXACT" in out
        assert "significant at alpha=0.05:" in out


class TestEntryPoint:
    def test_installed_script_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ocuctx.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "ocuctx" in proc.stdout
