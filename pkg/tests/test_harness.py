import json

import numpy as np
import pytest

from ocuctx import (
    ClassSpec,
    ConfigError,
    ContextConfig,
    LabelMask,
    Method,
    Scenario,
    compare,
    discover,
    evaluate,
    load_report,
    mask_ids,
    render,
    report_from_dict,
    report_to_dict,
    save_mask,
    split,
)


def write_pair(gt_dir, pred_dir, image_id, gt_grid, pred_grid, spec, suffix=".png"):
    gt_dir.mkdir(exist_ok=True)
    pred_dir.mkdir(exist_ok=True)
    save_mask(LabelMask(np.asarray(gt_grid, dtype=np.uint8), spec), gt_dir / f"{image_id}{suffix}")
    save_mask(LabelMask(np.asarray(pred_grid, dtype=np.uint8), spec), pred_dir / f"{image_id}{suffix}")


def three_image_fixture(tmp_path, spec):
    """Hand-designed 4x4 pairs with easily hand-checked metrics."""
    gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
    base = np.zeros((4, 4), dtype=np.uint8)

    a = base.copy()
    a[0, 0] = 1
    a[3, 3] = 2
    write_pair(gt_dir, pred_dir, "img_a", a, a, spec)

    b_gt, b_pred = a.copy(), base.copy()
    b_pred[0, 0] = 1
    b_pred[3, 2] = 2  # sclera disjoint, same size
    write_pair(gt_dir, pred_dir, "img_b", b_gt, b_pred, spec)

    c_gt, c_pred = base.copy(), base.copy()
    c_gt[0, 0:2] = 1
    c_gt[3, 3] = 2
    c_pred[0, 1:3] = 1  # iris shifted one column
    c_pred[3, 3] = 2
    write_pair(gt_dir, pred_dir, "img_c", c_gt, c_pred, spec)
    return gt_dir, pred_dir


class TestDiscover:
    def test_pairs_by_stem_and_warns_on_unmatched(self, tmp_path, spec):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        extra = np.zeros((4, 4), dtype=np.uint8)
        save_mask(LabelMask(extra, spec), gt_dir / "only_gt.png")
        save_mask(LabelMask(extra, spec), pred_dir / "only_pred.png")

        manifest = discover(gt_dir, pred_dir, spec)
        assert manifest.image_ids == ("img_a", "img_b", "img_c")
        assert len(manifest.warnings) == 2
        assert any("only_gt" in w for w in manifest.warnings)
        assert any("only_pred" in w for w in manifest.warnings)

    def test_empty_intersection_is_error(self, tmp_path, spec):
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
        grid = np.zeros((4, 4), dtype=np.uint8)
        gt_dir.mkdir()
        pred_dir.mkdir()
        save_mask(LabelMask(grid, spec), gt_dir / "x.png")
        save_mask(LabelMask(grid, spec), pred_dir / "y.png")
        with pytest.raises(ConfigError, match="no matching"):
            discover(gt_dir, pred_dir, spec)

    def test_duplicate_stem_is_error(self, tmp_path, spec):
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
        grid = np.zeros((4, 4), dtype=np.uint8)
        gt_dir.mkdir()
        pred_dir.mkdir()
        save_mask(LabelMask(grid, spec), gt_dir / "x.png")
        save_mask(LabelMask(grid, spec), gt_dir / "x.pgm")
        save_mask(LabelMask(grid, spec), pred_dir / "x.png")
        with pytest.raises(ConfigError, match="duplicate"):
            discover(gt_dir, pred_dir, spec)

    def test_missing_directory(self, tmp_path, spec):
        with pytest.raises(ConfigError, match="not a directory"):
            discover(tmp_path / "nope", tmp_path, spec)


class TestSplit:
    def test_ten_images_split_4_4_2(self):
        ids = [f"img{i:02d}" for i in range(10)]
        assignment = split(ids, seed=123)
        assert (len(assignment.train), len(assignment.test), len(assignment.validation)) == (4, 4, 2)

    def test_seven_images_split_2_2_3(self):
        ids = [f"img{i}" for i in range(7)]
        assignment = split(ids, seed=5)
        assert (len(assignment.train), len(assignment.test), len(assignment.validation)) == (2, 2, 3)

    def test_same_seed_same_assignment(self):
        ids = [f"img{i:02d}" for i in range(13)]
        assert split(ids, seed=99) == split(ids, seed=99)

    def test_different_seed_differs(self):
        ids = [f"img{i:02d}" for i in range(20)]
        assert split(ids, seed=1) != split(ids, seed=2)

    def test_partitions_ids(self):
        ids = [f"img{i:02d}" for i in range(11)]
        assignment = split(ids, seed=7)
        union = assignment.train | assignment.test | assignment.validation
        assert union == set(ids)
        assert not assignment.train & assignment.test
        assert not assignment.train & assignment.validation
        assert not assignment.test & assignment.validation

    def test_too_few_images(self):
        with pytest.raises(ConfigError, match="too few"):
            split(["a", "b", "c", "d"], seed=1)

    def test_group_by_prefix_keeps_subjects_together(self):
        ids = [f"s{subject:02d}_{shot}" for subject in range(8) for shot in ("a", "b", "c")]
        assignment = split(ids, seed=42, group_by_prefix=True)
        for subject in range(8):
            members = {f"s{subject:02d}_{shot}" for shot in ("a", "b", "c")}
            buckets = [
                bucket
                for bucket in (assignment.train, assignment.test, assignment.validation)
                if members & bucket
            ]
            assert len(buckets) == 1
            assert members <= buckets[0]

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ConfigError, match="unique"):
            split(["a", "a", "b", "c", "d"], seed=1)


class TestEvaluate:
    def test_three_image_aggregate_matches_hand_values(self, tmp_path, spec, cfg):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        manifest = discover(gt_dir, pred_dir, spec)
        report = evaluate(manifest, cfg)

        # per-image overall f_score: a=1, b=(1+0)/2, c=(0.5+1)/2
        series = report.overall_series("f_score")
        assert series["img_a"] == 1.0
        assert series["img_b"] == 0.5
        assert series["img_c"] == 0.75

        overall = report.aggregate["overall"]
        assert overall["f_score"]["mean"] == pytest.approx((1 + 0.5 + 0.75) / 3, abs=1e-12)
        assert overall["f_score"]["std"] == pytest.approx(0.25, abs=1e-12)
        assert overall["error_rate"]["mean"] == pytest.approx((0 + 0.0625 + 0.0625) / 3, abs=1e-12)
        assert overall["iou"]["mean"] == pytest.approx((1 + 0.5 + (1 / 3 + 1) / 2) / 3, abs=1e-12)

        iris = report.aggregate["per_class"]["iris"]
        assert iris["f_score"]["mean"] == pytest.approx((1 + 1 + 0.5) / 3, abs=1e-12)
        sclera = report.aggregate["per_class"]["sclera"]
        assert sclera["iou"]["mean"] == pytest.approx((1 + 0 + 1) / 3, abs=1e-12)

    def test_rows_follow_manifest_order(self, tmp_path, spec, cfg):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        manifest = discover(gt_dir, pred_dir, spec)
        report = evaluate(manifest, cfg, jobs=3)
        assert tuple(r.image_id for r in report.per_image) == manifest.image_ids

    def test_parallel_report_is_byte_identical(self, tmp_path, spec, cfg):
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
        rng = np.random.default_rng(51)
        for i in range(12):
            gt = rng.integers(0, 3, size=(16, 16), dtype=np.uint8)
            pred = rng.integers(0, 3, size=(16, 16), dtype=np.uint8)
            write_pair(gt_dir, pred_dir, f"img{i:03d}", gt, pred, spec)
        manifest = discover(gt_dir, pred_dir, spec)
        serial = render(evaluate(manifest, cfg, jobs=1), "json")
        parallel = render(evaluate(manifest, cfg, jobs=8), "json")
        assert serial == parallel

    def test_broken_file_recorded_not_fatal(self, tmp_path, spec, cfg):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        (gt_dir / "img_b.png").write_bytes(b"garbage")
        manifest = discover(gt_dir, pred_dir, spec)
        report = evaluate(manifest, cfg)
        failed = [r for r in report.per_image if not r.ok]
        assert [r.image_id for r in failed] == ["img_b"]
        assert "img_b" in failed[0].error
        assert report.aggregate["n_images"] == 2
        assert report.aggregate["n_failed"] == 1
        assert set(report.evaluated_ids) == {"img_a", "img_c"}

    def test_scenario_all_merges_foreground(self, tmp_path, spec):
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
        grid = np.zeros((4, 4), dtype=np.uint8)
        grid[0, 0] = 1
        grid[1, 3] = 2
        swapped = np.zeros((4, 4), dtype=np.uint8)
        swapped[0, 0] = 2  # labels swapped: identical once merged
        swapped[1, 3] = 1
        write_pair(gt_dir, pred_dir, "img", grid, swapped, spec)
        manifest = discover(gt_dir, pred_dir, spec, Scenario.ALL)
        report = evaluate(manifest, ContextConfig(spec=spec))
        assert list(report.aggregate["per_class"]) == ["all"]
        row = report.per_image[0]
        assert row.class_metrics["all"].f_score == 1.0
        assert row.class_metrics["all"].iou == 1.0
        assert row.context.pc_loss == 0.5  # perfect prediction once merged

    def test_scenario_iris_ignores_sclera_errors(self, tmp_path, spec):
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
        gt = np.zeros((4, 4), dtype=np.uint8)
        gt[0, 0] = 1
        gt[3, 3] = 2
        pred = gt.copy()
        pred[3, 3] = 0  # sclera completely wrong
        pred[2, 2] = 2
        write_pair(gt_dir, pred_dir, "img", gt, pred, spec)
        manifest = discover(gt_dir, pred_dir, spec, Scenario.IRIS)
        report = evaluate(manifest, ContextConfig(spec=spec))
        assert list(report.aggregate["per_class"]) == ["iris"]
        assert report.per_image[0].class_metrics["iris"].f_score == 1.0

    def test_scenario_needs_named_class(self, tmp_path):
        spec = ClassSpec(classes=((1, "lesion"),))
        gt_dir, pred_dir = tmp_path / "gt", tmp_path / "pred"
        grid = np.zeros((4, 4), dtype=np.uint8)
        grid[0, 0] = 1
        write_pair(gt_dir, pred_dir, "img", grid, grid, spec)
        manifest = discover(gt_dir, pred_dir, spec, Scenario.IRIS)
        with pytest.raises(ConfigError, match="iris"):
            evaluate(manifest, ContextConfig(spec=spec))

    def test_spec_mismatch_between_cfg_and_manifest(self, tmp_path, spec):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        manifest = discover(gt_dir, pred_dir, spec)
        other = ClassSpec(classes=((1, "iris"),))
        with pytest.raises(ConfigError, match="class spec"):
            evaluate(manifest, ContextConfig(spec=other))


class TestReportSerialization:
    @pytest.fixture
    def report(self, tmp_path, spec, cfg):
        gt_dir, pred_dir = three_image_fixture(tmp_path, spec)
        return evaluate(discover(gt_dir, pred_dir, spec), cfg)

    def test_json_round_trip_is_lossless(self, report):
        doc = json.loads(render(report, "json"))
        again = report_from_dict(doc)
        assert report_to_dict(again) == report_to_dict(report)
        assert again.aggregate == report.aggregate

    def test_schema_field_present(self, report):
        doc = json.loads(render(report, "json"))
        assert doc["schema"] == 1
        assert doc["config"]["punish_mode"] == "multiplicative"

    def test_load_rejects_tampered_aggregate(self, report, tmp_path):
        doc = json.loads(render(report, "json"))
        doc["aggregate"]["overall"]["f_score"]["mean"] = 0.123
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="aggregate"):
            load_report(path)

    def test_load_rejects_unknown_schema(self, report, tmp_path):
        doc = json.loads(render(report, "json"))
        doc["schema"] = 99
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigError, match="schema"):
            load_report(path)

    def test_csv_has_row_per_image_class(self, report):
        lines = render(report, "csv").decode().strip().splitlines()
        assert lines[0].startswith("id,class,")
        assert len(lines) == 1 + 3 * 2  # header + 3 images x 2 classes

    def test_markdown_shows_mean_pm_std(self, report):
        text = render(report, "markdown").decode()
        assert "| Region | F-Score | ER | IoU |" in text
        assert "±" in text

    def test_unknown_format(self, report):
        with pytest.raises(ConfigError, match="format"):
            render(report, "yaml")


class TestCompare:
    def _reports(self, tmp_path, spec, cfg, n=8, drop_from_b=None):
        rng = np.random.default_rng(61)
        gt_dir = tmp_path / "gt"
        a_dir = tmp_path / "pred_a"
        b_dir = tmp_path / "pred_b"
        b_dir.mkdir()
        for i in range(n):
            gt = np.zeros((8, 8), dtype=np.uint8)
            gt[1:4, 1:4] = 1
            gt[5:7, 5:7] = 2
            # method a: one pixel off; method b: a couple more pixels off
            pa = gt.copy()
            pa[int(rng.integers(0, 8)), int(rng.integers(0, 8))] = 1
            pb = gt.copy()
            for _ in range(3):
                pb[int(rng.integers(0, 8)), int(rng.integers(0, 8))] = 2
            write_pair(gt_dir, a_dir, f"img{i}", gt, pa, spec)
            save_mask(LabelMask(pb, spec), b_dir / f"img{i}.png")
        manifest_a = discover(gt_dir, a_dir, spec)
        if drop_from_b:
            (b_dir / f"{drop_from_b}.png").unlink()
        manifest_b = discover(gt_dir, b_dir, spec)
        return evaluate(manifest_a, cfg), evaluate(manifest_b, cfg)

    def test_compare_returns_test_result(self, tmp_path, spec, cfg):
        ra, rb = self._reports(tmp_path, spec, cfg)
        result = compare(ra, rb, "fscore", alpha=0.05)
        assert result.method is Method.EXACT
        assert 0.0 <= result.p_two_sided <= 1.0

    def test_compare_rejects_unknown_metric(self, tmp_path, spec, cfg):
        ra, rb = self._reports(tmp_path, spec, cfg)
        with pytest.raises(ConfigError, match="metric"):
            compare(ra, rb, "dice")

    def test_compare_lists_id_difference(self, tmp_path, spec, cfg):
        ra, rb = self._reports(tmp_path, spec, cfg, drop_from_b="img3")
        with pytest.raises(ConfigError, match="img3"):
            compare(ra, rb, "iou")


def test_mask_ids(tmp_path, spec):
    grid = np.zeros((2, 2), dtype=np.uint8)
    save_mask(LabelMask(grid, spec), tmp_path / "b.png")
    save_mask(LabelMask(grid, spec), tmp_path / "a.pgm")
    (tmp_path / "notes.txt").write_text("ignored")
    assert mask_ids(tmp_path) == ["a", "b"]
