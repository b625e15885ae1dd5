"""CLI dispatch, artifacts, manifests, and rerun determinism."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import pytest

from abkit.cli import main
from abkit.records import serialize_record

from conftest import build_coco_case, build_imagenet_case


def write_records_file(path: Path, records) -> None:
    with path.open("wb") as fh:
        for record in records:
            fh.write(serialize_record(record) + b"\n")


def write_imagenet_gt(path: Path, gt_by_assignment) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for assignment_id, gt in gt_by_assignment.items():
            for image_id, is_seed in gt.seed_membership.items():
                fh.write(
                    json.dumps(
                        {"assignment_id": assignment_id, "image_id": image_id,
                         "is_seed": is_seed}
                    )
                    + "\n"
                )


def write_coco_gt(path: Path, gt) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for image_id, classes in gt.classes.items():
            fh.write(
                json.dumps(
                    {
                        "image_id": image_id,
                        "classes": {c: [list(b.box) for b in boxes] for c, boxes in classes.items()},
                    }
                )
                + "\n"
            )


def write_boxes(path: Path, records, box=(0.3, 0.3, 0.7, 0.7)) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for image_id in sorted({r.image_id for r in records}):
            fh.write(json.dumps({"image_id": image_id, "boxes": [list(box)]}) + "\n")


def tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


class TestQcCommand:
    def test_boundary_fixture_exit_zero_and_report(self, tmp_path):
        records, gt = build_imagenet_case(120, 40, 0, 10, assignment_id="hit-x")
        records_path = tmp_path / "records.jsonl"
        gt_path = tmp_path / "gt.jsonl"
        write_records_file(records_path, records)
        write_imagenet_gt(gt_path, {"hit-x": gt})
        report = tmp_path / "out" / "verdicts.jsonl"
        code = main(
            ["qc", "--records", str(records_path), "--gt", str(gt_path),
             "--interface", "imagenet", "--report", str(report)]
        )
        assert code == 0
        rows = [json.loads(line) for line in report.read_text().splitlines()]
        assert rows == [{"assignment_id": "hit-x", "decision": "Accept", "reasons": []}]
        assert (tmp_path / "out" / "verdicts.csv").exists()
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_coco_qc(self, tmp_path):
        plans = [{"classes": ["a"], "icons": [("a", True)]} for _ in range(20)]
        records, gt = build_coco_case(plans, assignment_id="hit-c")
        records_path = tmp_path / "records.jsonl"
        gt_path = tmp_path / "gt.jsonl"
        write_records_file(records_path, records)
        write_coco_gt(gt_path, gt)
        report = tmp_path / "o" / "verdicts.jsonl"
        assert main(
            ["qc", "--records", str(records_path), "--gt", str(gt_path),
             "--interface", "coco", "--report", str(report)]
        ) == 0
        row = json.loads(report.read_text().splitlines()[0])
        assert row["decision"] == "Accept"

    def test_missing_records_with_bad_code(self, tmp_path):
        records, gt = build_imagenet_case(120, 40, 0, 10, assignment_id="hit-x")
        records_path = tmp_path / "records.jsonl"
        write_records_file(records_path, records)
        gt_path = tmp_path / "gt.jsonl"
        write_imagenet_gt(gt_path, {"hit-x": gt})
        codes = tmp_path / "codes.jsonl"
        codes.write_text(
            json.dumps({"assignment_id": "hit-ghost", "code_valid": False}) + "\n"
            + json.dumps({"assignment_id": "hit-x", "code_valid": True}) + "\n"
        )
        report = tmp_path / "o" / "verdicts.jsonl"
        main(
            ["qc", "--records", str(records_path), "--gt", str(gt_path),
             "--interface", "imagenet", "--report", str(report), "--codes", str(codes)]
        )
        rows = {r["assignment_id"]: r for r in map(json.loads, report.read_text().splitlines())}
        assert rows["hit-ghost"]["reasons"] == ["MissingRecordBadCode"]
        assert rows["hit-x"]["decision"] == "Accept"


class TestDispatch:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["qc", "--wat"])
        assert exc.value.code == 2

    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_domain_error_exits_1(self, tmp_path):
        records, gt = build_imagenet_case(10, 5, 0, 10, assignment_id="hit-x")
        records_path = tmp_path / "records.jsonl"
        write_records_file(records_path, records)
        gt_path = tmp_path / "gt.jsonl"
        gt_path.write_text("")  # empty ground truth: domain error
        report = tmp_path / "verdicts.jsonl"
        code = main(
            ["qc", "--records", str(records_path), "--gt", str(gt_path),
             "--interface", "imagenet", "--report", str(report)]
        )
        assert code == 1

    def test_config_file_supplies_defaults_flags_win(self, tmp_path):
        records, gt = build_imagenet_case(120, 40, 0, 10, assignment_id="hit-x")
        records_path = tmp_path / "r.jsonl"
        gt_path = tmp_path / "g.jsonl"
        write_records_file(records_path, records)
        write_imagenet_gt(gt_path, {"hit-x": gt})
        config = tmp_path / "abkit.ini"
        config.write_text(
            f"[qc]\nrecords = {records_path}\ngt = {gt_path}\ninterface = imagenet\n"
        )
        report = tmp_path / "from-config" / "v.jsonl"
        assert main(["--config", str(config), "qc", "--report", str(report)]) == 0
        assert report.exists()


class TestAnalyzeCommand:
    def _imagenet_fixture(self, tmp_path):
        records, _ = build_imagenet_case(60, 30, 10, 10)
        records_path = tmp_path / "records.jsonl"
        write_records_file(records_path, records)
        boxes_path = tmp_path / "boxes.jsonl"
        write_boxes(boxes_path, records)
        return records_path, boxes_path

    def test_clicks(self, tmp_path):
        records_path, boxes_path = self._imagenet_fixture(tmp_path)
        out = tmp_path / "clicks"
        assert main(
            ["analyze", "--records", str(records_path), "--gt", str(boxes_path),
             "--stat", "clicks", "--out", str(out)]
        ) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["accuracy"] == 1.0  # all fixture clicks at box centre

    def test_sweep_and_quantiles_and_bias(self, tmp_path):
        records_path, boxes_path = self._imagenet_fixture(tmp_path)
        for stat in ("sweep", "quantiles", "bias"):
            out = tmp_path / stat
            assert main(
                ["analyze", "--records", str(records_path), "--gt", str(boxes_path),
                 "--stat", stat, "--out", str(out), "--samples", "2000"]
            ) == 0
            assert (out / "summary.json").exists()

    def test_actions_and_recall_size(self, tmp_path):
        plans = [
            {"classes": ["a", "b"], "icons": [("a", True), ("b", True)]} for _ in range(20)
        ]
        records, gt = build_coco_case(plans)
        records_path = tmp_path / "coco.jsonl"
        write_records_file(records_path, records)
        gt_path = tmp_path / "coco_gt.jsonl"
        write_coco_gt(gt_path, gt)
        out = tmp_path / "actions"
        assert main(
            ["analyze", "--records", str(records_path), "--stat", "actions",
             "--out", str(out)]
        ) == 0
        rows = (out / "actions.csv").read_text().splitlines()
        assert rows[1].startswith("add,40")
        out2 = tmp_path / "rs"
        assert main(
            ["analyze", "--records", str(records_path), "--gt", str(gt_path),
             "--stat", "recall-size", "--out", str(out2)]
        ) == 0
        assert (out2 / "recall_size.csv").exists()


TRAIN_ARGS = [
    "train", "--mode", "luab", "--seeds", "0", "--epochs", "2",
    "--n-train", "256", "--n-val", "64", "--n-test", "64", "--dim", "16",
]


class TestTrainEvalReport:
    def test_train_rerun_is_bitwise_identical(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(TRAIN_ARGS + ["--out", str(out_a)]) == 0
        assert main(TRAIN_ARGS + ["--out", str(out_b)]) == 0
        assert tree_digest(out_a) == tree_digest(out_b)

    def test_eval_suites_on_saved_model(self, tmp_path):
        out = tmp_path / "t"
        main(TRAIN_ARGS + ["--out", str(out)])
        for suite in ("bggap", "loc"):
            eval_out = tmp_path / f"eval-{suite}"
            assert main(
                ["eval", "--model", str(out / "seed0" / "model.npz"), "--suite", suite,
                 "--n-test", "64", "--out", str(eval_out)]
            ) == 0
            assert (eval_out / "eval.json").exists()

    def test_report_aggregates_csvs(self, tmp_path):
        records, _ = build_imagenet_case(60, 30, 10, 10)
        records_path = tmp_path / "records.jsonl"
        write_records_file(records_path, records)
        boxes_path = tmp_path / "boxes.jsonl"
        write_boxes(boxes_path, records)
        out = tmp_path / "clicks"
        main(["analyze", "--records", str(records_path), "--gt", str(boxes_path),
              "--stat", "clicks", "--out", str(out)])
        report = tmp_path / "report.md"
        assert main(["report", "--analytics", str(out), "--out", str(report)]) == 0
        text = report.read_text()
        assert "clicks.csv" in text and "accuracy" in text

    def test_analyze_rerun_is_bitwise_identical(self, tmp_path):
        records, _ = build_imagenet_case(60, 30, 10, 10)
        records_path = tmp_path / "records.jsonl"
        write_records_file(records_path, records)
        boxes_path = tmp_path / "boxes.jsonl"
        write_boxes(boxes_path, records)
        outs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            main(["analyze", "--records", str(records_path), "--gt", str(boxes_path),
                  "--stat", "sweep", "--out", str(out), "--samples", "2000"])
            outs.append(tree_digest(out))
        assert outs[0] == outs[1]


class TestMakeHits:
    def test_make_hits_registers_assignments(self, tmp_path):
        pool = tmp_path / "pool.json"
        pool.write_text(
            json.dumps(
                {
                    "class_id": "c0",
                    "seed_images": [f"s{i}" for i in range(130)],
                    "distractor_images": [f"d{i}" for i in range(400)],
                }
            )
        )
        out = tmp_path / "data"
        assert main(
            ["make-hits", "--interface", "imagenet", "--pool", str(pool),
             "--count", "2", "--seed", "3", "--out", str(out)]
        ) == 0
        assert (out / "assignments" / "hit-0000" / "hit.json").exists()
        assert (out / "assignments" / "hit-0001" / "hit.json").exists()
        assert (out / "manifest.json").exists()

    def test_insufficient_pool_is_domain_error(self, tmp_path):
        pool = tmp_path / "pool.json"
        pool.write_text(
            json.dumps({"class_id": "c0", "seed_images": ["a"], "distractor_images": ["b"]})
        )
        code = main(
            ["make-hits", "--interface", "imagenet", "--pool", str(pool),
             "--out", str(tmp_path / "d")]
        )
        assert code == 1


class TestMultiAndAttpoolModes:
    def test_vmetrics_eval_suite(self, tmp_path):
        out = tmp_path / "multi"
        args = ["train", "--mode", "luab", "--label-mode", "multi", "--lambda", "5",
                "--seeds", "0", "--epochs", "2", "--n-train", "256", "--n-val", "64",
                "--n-test", "64", "--n-vset", "32", "--dim", "16", "--lr", "0.2",
                "--out", str(out)]
        assert main(args) == 0
        report = json.loads((out / "seed0" / "report.json").read_text())
        assert report["v_avg"] is not None and report["v_min"] >= report["v_avg"]
        eval_out = tmp_path / "ev"
        assert main(
            ["eval", "--model", str(out / "seed0" / "model.npz"), "--suite", "vmetrics",
             "--n-test", "32", "--out", str(eval_out)]
        ) == 0
        payload = json.loads((eval_out / "eval.json").read_text())
        assert payload["v_min"] >= payload["v_avg"]

    def test_attpool_mode_trains(self, tmp_path):
        out = tmp_path / "att"
        args = ["train", "--mode", "attpool", "--seeds", "0", "--epochs", "2",
                "--n-train", "256", "--n-val", "64", "--n-test", "64", "--dim", "16",
                "--out", str(out)]
        assert main(args) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["mode"] == "attpool"
