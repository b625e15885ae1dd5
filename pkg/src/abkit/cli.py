"""Command-line entry point: serve, make-hits, qc, analyze, train, eval, report.

Every artifact-producing command writes exactly one manifest.json in its
output directory recording the resolved configuration, seeds, inputs, and
outputs (never wall-clock time), so a rerun with the same manifest produces
bitwise-identical artifacts. A config file (INI key=value sections named
after subcommands) supplies defaults; explicit flags win.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    GtBox,
    SweepConfig,
    action_sequence_histogram,
    click_localization_accuracy,
    gaussian_click_sweep,
    recall_by_category_and_size,
    relative_click_histogram,
    trace_quantile_accuracy,
)
from .errors import AbkitError
from .hits import CandidatePool, assemble_browsing_hit, assemble_tagging_hit
from .qc import CocoGroundTruth, ImageNetGroundTruth, evaluate_coco_hit, evaluate_imagenet_hit
from .records import extract_final_click, parse_coco_record, parse_imagenet_record


def write_manifest(out_dir: Path, command: str, config: dict, seeds, inputs, outputs) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": sorted(str(p) for p in inputs),
        "outputs": sorted(outputs),
        "seeds": list(seeds),
        "version": __version__,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


def write_csv(path: Path, header: list[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def _read_jsonl(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def load_records(path: Path, interface: str, strict: bool = True):
    parse = parse_imagenet_record if interface == "imagenet" else parse_coco_record
    records = []
    with open(path, "rb") as fh:
        for line in fh:
            if line.strip():
                records.append(parse(line, strict=strict))
    return records


def load_imagenet_gt(path: Path) -> dict[str, ImageNetGroundTruth]:
    """Per-assignment seed membership from rows {assignment_id, image_id, is_seed}."""
    per_assignment: dict[str, dict[str, bool]] = {}
    for row in _read_jsonl(path):
        per_assignment.setdefault(row["assignment_id"], {})[row["image_id"]] = bool(
            row["is_seed"]
        )
    return {a: ImageNetGroundTruth(m) for a, m in per_assignment.items()}


def load_coco_gt(path: Path) -> CocoGroundTruth:
    """Per-image class boxes from rows {image_id, classes: {name: [[x0,y0,x1,y1], ...]}}."""
    classes = {}
    for row in _read_jsonl(path):
        image_id = row["image_id"]
        classes[image_id] = {
            name: tuple(GtBox(image_id, tuple(b)) for b in boxes)
            for name, boxes in row["classes"].items()
        }
    return CocoGroundTruth(classes)


def load_boxes(path: Path) -> dict:
    """Per-image instance boxes from rows {image_id, boxes: [[x0,y0,x1,y1], ...]}."""
    out = {}
    for row in _read_jsonl(path):
        out[row["image_id"]] = tuple(GtBox(row["image_id"], tuple(b)) for b in row["boxes"])
    return out


# ---------------------------------------------------------------------------
# Subcommands


def cmd_serve(args) -> int:
    import uvicorn

    from .server import make_app
    from .service import AnnotationService

    service = AnnotationService(args.data_dir, strict=args.strict)
    uvicorn.run(make_app(service), host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_make_hits(args) -> int:
    from .service import AnnotationService

    out = Path(args.out)
    service = AnnotationService(out, strict=args.strict)
    pool_obj = json.loads(Path(args.pool).read_text(encoding="utf-8"))
    made = []
    for i in range(args.count):
        assignment_id = f"{args.prefix}{i:04d}"
        if args.interface == "imagenet":
            pool = CandidatePool(
                class_id=pool_obj["class_id"],
                seed_images=tuple(pool_obj["seed_images"]),
                distractor_images=tuple(pool_obj["distractor_images"]),
            )
            hit = assemble_browsing_hit(pool, rng_seed=args.seed + i, assignment_id=assignment_id)
        else:
            hit = assemble_tagging_hit(
                pool_obj["images"], rng_seed=args.seed + i, assignment_id=assignment_id
            )
        service.register_hit(hit)
        made.append(assignment_id)
    write_manifest(
        out,
        "make-hits",
        {"interface": args.interface, "count": args.count, "prefix": args.prefix,
         "strict": args.strict},
        [args.seed],
        [args.pool],
        [f"assignments/{a}/hit.json" for a in made],
    )
    print(f"registered {len(made)} HITs under {out}")
    return 0


def _code_validity(path) -> dict[str, bool]:
    if not path:
        return {}
    return {row["assignment_id"]: bool(row["code_valid"]) for row in _read_jsonl(Path(path))}


def cmd_qc(args) -> int:
    records = load_records(Path(args.records), args.interface, strict=args.strict)
    by_assignment: dict[str, list] = {}
    for record in records:
        by_assignment.setdefault(record.assignment_id, []).append(record)
    codes = _code_validity(args.codes)
    for assignment_id in codes:
        by_assignment.setdefault(assignment_id, [])
    verdicts = {}
    if args.interface == "imagenet":
        gt = load_imagenet_gt(Path(args.gt))
        for assignment_id, recs in sorted(by_assignment.items()):
            verdicts[assignment_id] = evaluate_imagenet_hit(
                recs, gt.get(assignment_id), codes.get(assignment_id, True)
            )
    else:
        gt = load_coco_gt(Path(args.gt))
        for assignment_id, recs in sorted(by_assignment.items()):
            verdicts[assignment_id] = evaluate_coco_hit(
                recs, gt, codes.get(assignment_id, True)
            )
    report_path = Path(args.report)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with report_path.open("w", encoding="utf-8") as fh:
        for assignment_id, verdict in sorted(verdicts.items()):
            fh.write(
                json.dumps(
                    {
                        "assignment_id": assignment_id,
                        "decision": verdict.decision,
                        "reasons": list(verdict.reasons),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    accepted = sum(v.accepted for v in verdicts.values())
    summary_path = report_path.with_suffix(".csv")
    write_csv(
        summary_path,
        ["assignments", "accepted", "rejected", "rejection_rate"],
        [[len(verdicts), accepted, len(verdicts) - accepted,
          (len(verdicts) - accepted) / len(verdicts) if verdicts else 0.0]],
    )
    write_manifest(
        report_path.parent,
        "qc",
        {"interface": args.interface, "strict": args.strict},
        [],
        [args.records, args.gt] + ([args.codes] if args.codes else []),
        [report_path.name, summary_path.name],
    )
    print(f"qc: {accepted}/{len(verdicts)} accepted -> {report_path}")
    return 0


def _parse_sigmas(text: str) -> tuple[float, ...]:
    out = []
    for token in text.split(","):
        token = token.strip()
        out.append(math.inf if token in ("inf", "Inf") else float(token))
    return tuple(out)


def cmd_analyze(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    summary: dict = {"stat": args.stat}
    inputs = [args.records]
    if args.stat in ("clicks", "sweep", "quantiles", "bias"):
        records = load_records(Path(args.records), "imagenet", strict=args.strict)
        boxes = load_boxes(Path(args.gt))
        inputs.append(args.gt)
    else:
        records = load_records(Path(args.records), "coco", strict=args.strict)
        if args.stat == "recall-size":
            gt = load_coco_gt(Path(args.gt))
            inputs.append(args.gt)

    if args.stat == "clicks":
        pairs = []
        rows = []
        for record in records:
            point = extract_final_click(record)
            if point is None or record.image_id not in boxes:
                continue
            hit = any(b.contains(point.x, point.y) for b in boxes[record.image_id])
            pairs.append((point, boxes[record.image_id]))
            rows.append([record.image_id, point.x, point.y, int(hit)])
        accuracy = click_localization_accuracy(pairs)
        write_csv(out / "clicks.csv", ["image_id", "x", "y", "inside"], rows)
        outputs.append("clicks.csv")
        summary["accuracy"] = accuracy
    elif args.stat == "sweep":
        cfg = SweepConfig(
            sigmas=_parse_sigmas(args.sigmas),
            samples_per_image=args.samples,
            rng_seed=args.seed,
        )
        groups = [boxes[r.image_id] for r in records if r.image_id in boxes]
        acc = gaussian_click_sweep(groups, cfg)
        write_csv(
            out / "sweep.csv",
            ["sigma", "accuracy"],
            [["inf" if math.isinf(s) else s, acc[s]] for s in cfg.sigmas],
        )
        outputs.append("sweep.csv")
        summary["accuracy_per_sigma"] = {
            "inf" if math.isinf(s) else str(s): acc[s] for s in cfg.sigmas
        }
    elif args.stat == "quantiles":
        curve = trace_quantile_accuracy(records, boxes, args.mode, args.bins)
        write_csv(
            out / "quantiles.csv",
            ["bin", "accuracy"],
            [[i, a] for i, a in enumerate(curve.accuracy)],
        )
        outputs.append("quantiles.csv")
        summary.update(mode=curve.mode, bins=curve.bins, final_bin=curve.accuracy[-1])
    elif args.stat == "bias":
        points, gts = [], []
        for record in records:
            point = extract_final_click(record)
            if point is not None and record.image_id in boxes:
                points.append(point)
                gts.append(boxes[record.image_id][0])
        hist = relative_click_histogram(points, gts, args.grid_bins)
        write_csv(
            out / "bias.csv",
            [f"col{j}" for j in range(hist.shape[1])],
            hist.tolist(),
        )
        outputs.append("bias.csv")
        summary["total"] = int(hist.sum())
    elif args.stat == "actions":
        counts = action_sequence_histogram(records)
        total = sum(counts.values()) or 1
        write_csv(
            out / "actions.csv",
            ["sequence", "count", "share"],
            [[k, v, v / total] for k, v in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))],
        )
        outputs.append("actions.csv")
        summary["sequences"] = len(counts)
        summary["total_live_icons"] = total
    elif args.stat == "recall-size":
        table = recall_by_category_and_size(records, gt.classes)
        write_csv(
            out / "recall_size.csv",
            ["category", "recall", "mean_size_bin"],
            [[c, r, b] for c, (r, b) in sorted(table.items())],
        )
        outputs.append("recall_size.csv")
        if len(table) > 1:
            recalls = [table[c][0] for c in sorted(table)]
            bins = [table[c][1] for c in sorted(table)]
            if np.std(bins) > 0 and np.std(recalls) > 0:
                summary["pearson_r"] = float(np.corrcoef(bins, recalls)[0, 1])
    write_json(out / "summary.json", summary)
    outputs.append("summary.json")
    write_manifest(
        out,
        "analyze",
        {"stat": args.stat, "strict": args.strict, "mode": getattr(args, "mode", None),
         "bins": getattr(args, "bins", None), "grid_bins": getattr(args, "grid_bins", None),
         "sigmas": getattr(args, "sigmas", None), "samples": getattr(args, "samples", None)},
        [args.seed],
        inputs,
        outputs,
    )
    print(f"analyze {args.stat}: wrote {', '.join(outputs)} under {out}")
    return 0


_TRAIN_MODES = {
    "luab": {"supervision": "byproduct", "pooling": "gap"},
    "rand": {"supervision": "random-point", "pooling": "gap"},
    "baseline": {"supervision": "none", "pooling": "gap", "weight": 0.0},
    "attpool": {"supervision": "byproduct", "pooling": "attentive", "weight": 0.0},
}


def _train_one(args, seed: int):
    from .luab import (
        SceneConfig,
        SceneData,
        TrainConfig,
        evaluate_robustness,
        make_dataset,
        train,
    )

    mode = dict(_TRAIN_MODES[args.mode])
    weight = mode.pop("weight", args.weight)
    label_mode = args.label_mode
    scene = SceneConfig(rho=args.rho, layout=args.layout, label_mode=label_mode)
    data = SceneData(
        train=make_dataset(args.n_train, seed, scene),
        val=make_dataset(args.n_val, seed + 500_000, scene),
    )
    cfg = TrainConfig(
        weight=weight,
        beta=args.beta,
        regression=args.regression,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=seed,
        label_mode=label_mode,
        dim=args.dim,
        bandwidth=args.bandwidth,
        **mode,
    )
    result = train(data, cfg)
    corr = make_dataset(
        args.n_test, seed + 700_000, SceneConfig(rho=1.0, layout=args.layout, label_mode=label_mode)
    )
    decorr = make_dataset(
        args.n_test,
        seed + 800_000,
        SceneConfig(rho=1.0 / scene.classes, layout=args.layout, label_mode=label_mode),
    )
    v_set = None
    if label_mode == "multi":
        v_set = make_dataset(
            args.n_vset, seed + 900_000,
            SceneConfig(rho=args.rho, layout=args.layout, label_mode="multi"),
            include_background=True,
        )
    report = evaluate_robustness(result.model, corr, decorr, v_set=v_set, v_seed=seed)
    return result, report


def save_model(path: Path, result) -> None:
    import dataclasses
    import zipfile

    state = result.model.state_dict()
    meta = {
        "spec": dataclasses.asdict(result.model.spec),
        "train_config": result.config.to_dict(),
    }
    entries = {"__meta__": np.array(json.dumps(meta, sort_keys=True)), **state}
    # plain np.savez stamps zip entries with the current time; write the zip
    # by hand with a fixed date so identical runs give identical bytes
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(entries):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(entries[name]))
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_model(path: Path):
    from .luab.nn import ModelSpec, PointRegressionNet

    archive = np.load(path, allow_pickle=False)
    meta = json.loads(str(archive["__meta__"]))
    spec = ModelSpec(**meta["spec"])
    model = PointRegressionNet(spec, np.random.Generator(np.random.Philox(key=np.uint64(0))))
    model.load_state_dict({k: archive[k] for k in archive.files if k != "__meta__"})
    return model, meta


def cmd_train(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [int(s) for s in args.seeds.split(",")]
    outputs = []
    aggregate = []
    for seed in seeds:
        result, report = _train_one(args, seed)
        seed_dir = out / f"seed{seed}"
        seed_dir.mkdir(exist_ok=True)
        epochs = len(result.curves["cls_loss"])
        write_csv(
            seed_dir / "curves.csv",
            ["epoch", "cls_loss", "reg_loss", "val_loc_acc"],
            [
                [e, result.curves["cls_loss"][e], result.curves["reg_loss"][e],
                 result.curves["val_loc_acc"][e]]
                for e in range(epochs)
            ],
        )
        write_json(seed_dir / "report.json", report.to_dict())
        save_model(seed_dir / "model.npz", result)
        outputs += [f"seed{seed}/curves.csv", f"seed{seed}/report.json", f"seed{seed}/model.npz"]
        aggregate.append({"seed": seed, **report.to_dict(),
                          "final_reg_loss": result.curves["reg_loss"][-1],
                          "final_val_loc_acc": result.curves["val_loc_acc"][-1]})
    write_json(out / "summary.json", {"mode": args.mode, "runs": aggregate})
    outputs.append("summary.json")
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config", "out", "seeds")}
    write_manifest(out, "train", config, seeds, [], outputs)
    print(f"train {args.mode}: {len(seeds)} runs -> {out}")
    return 0


def cmd_eval(args) -> int:
    from .luab import SceneConfig, evaluate_robustness, make_dataset, v_metrics
    from .luab.train import forward_in_batches, localization_accuracy

    model, meta = load_model(Path(args.model))
    label_mode = meta["spec"]["label_mode"]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result: dict = {"suite": args.suite, "model": str(args.model)}
    if args.suite == "bggap":
        corr = make_dataset(args.n_test, args.seed, SceneConfig(rho=1.0, label_mode=label_mode))
        decorr = make_dataset(
            args.n_test, args.seed + 1, SceneConfig(rho=1.0 / 8.0, label_mode=label_mode)
        )
        result.update(evaluate_robustness(model, corr, decorr).to_dict())
    elif args.suite == "vmetrics":
        eval_set = make_dataset(
            args.n_test, args.seed, SceneConfig(label_mode="multi"), include_background=True
        )
        v_avg, v_min = v_metrics(model, eval_set, rng_seed=args.seed)
        result.update(v_avg=v_avg, v_min=v_min)
    else:  # loc
        test = make_dataset(args.n_test, args.seed, SceneConfig(label_mode=label_mode))
        _, points = forward_in_batches(model, test.images)
        result["localization_accuracy"] = localization_accuracy(points, test)
    write_json(out / "eval.json", result)
    write_manifest(
        out, "eval", {"suite": args.suite, "n_test": args.n_test}, [args.seed],
        [args.model], ["eval.json"],
    )
    print(json.dumps(result, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# Analytics report", ""]
    inputs = []
    for directory in args.analytics:
        directory = Path(directory)
        summary = directory / "summary.json"
        if summary.exists():
            payload = json.loads(summary.read_text(encoding="utf-8"))
            lines.append(f"## {directory.name}")
            lines.append("")
            for key, value in sorted(payload.items()):
                lines.append(f"- {key}: {value}")
            lines.append("")
            inputs.append(str(summary))
        for csv_path in sorted(directory.glob("*.csv")):
            rows = list(csv.reader(csv_path.read_text(encoding="utf-8").splitlines()))
            if not rows:
                continue
            inputs.append(str(csv_path))
            lines.append(f"### {csv_path.name}")
            lines.append("")
            lines.append("| " + " | ".join(rows[0]) + " |")
            lines.append("|" + "---|" * len(rows[0]))
            for row in rows[1 : args.max_rows + 1]:
                lines.append("| " + " | ".join(row) + " |")
            if len(rows) - 1 > args.max_rows:
                lines.append(f"| ... {len(rows) - 1 - args.max_rows} more rows ... |")
            lines.append("")
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_manifest(out.parent, "report", {"max_rows": args.max_rows}, [], inputs, [out.name])
    print(f"report -> {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abkit", description=__doc__)
    parser.add_argument("--config", help="INI config file; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the annotation collection service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("make-hits", help="assemble and register work units")
    p.add_argument("--interface", choices=["imagenet", "coco"], required=True)
    p.add_argument("--pool", required=True, help="candidate pool JSON")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="hit-")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", required=True, help="service data directory")
    p.set_defaults(func=cmd_make_hits)

    p = sub.add_parser("qc", help="evaluate accept/reject rules over records")
    p.add_argument("--records", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--interface", choices=["imagenet", "coco"], required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--codes", help="JSONL of {assignment_id, code_valid}")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_qc)

    p = sub.add_parser("analyze", help="byproduct statistics")
    p.add_argument("--records", required=True)
    p.add_argument("--gt")
    p.add_argument(
        "--stat",
        choices=["clicks", "sweep", "quantiles", "bias", "actions", "recall-size"],
        required=True,
    )
    p.add_argument("--out", required=True)
    p.add_argument("--sigmas", default="0,0.05,0.1,0.2,0.4,inf")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--mode", choices=["lastN", "traceQuantile", "timeQuantile"],
                   default="traceQuantile")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--grid-bins", type=int, default=9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train the point-supervised classifier")
    p.add_argument("--mode", choices=sorted(_TRAIN_MODES), required=True)
    p.add_argument("--lambda", dest="weight", type=float, default=10.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--regression", choices=["smooth_l1", "mse"], default="smooth_l1")
    p.add_argument("--rho", type=float, default=0.95)
    p.add_argument("--layout", choices=["center-biased", "uniform"], default="uniform")
    p.add_argument("--label-mode", choices=["single", "multi"], default="single")
    p.add_argument("--seeds", default="0", help="comma-separated rng seeds")
    p.add_argument("--epochs", type=int, default=18)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--dim", type=int, default=24)
    p.add_argument("--bandwidth", type=float, default=0.15)
    p.add_argument("--n-train", type=int, default=20_000)
    p.add_argument("--n-val", type=int, default=2_000)
    p.add_argument("--n-test", type=int, default=3_000)
    p.add_argument("--n-vset", type=int, default=400)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--suite", choices=["bggap", "vmetrics", "loc"], required=True)
    p.add_argument("--n-test", type=int, default=3_000)
    p.add_argument("--seed", type=int, default=12_345)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="aggregate analytics outputs into markdown")
    p.add_argument("--analytics", nargs="+", required=True, help="analyze output dirs")
    p.add_argument("--out", required=True, help="markdown file")
    p.add_argument("--max-rows", type=int, default=12)
    p.set_defaults(func=cmd_report)
    return parser


def _config_argv(config_path: str, command: str) -> list[str]:
    """Turn a config-file section into CLI arguments (flags still win)."""
    parser = configparser.ConfigParser()
    parser.read(config_path)
    if command not in parser:
        return []
    argv = []
    for key, value in parser[command].items():
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                argv.append(flag)
        else:
            argv += [flag, value]
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # peek at --config and the subcommand so config values become defaults
    if "--config" in argv:
        at = argv.index("--config")
        config_path = argv[at + 1]
        rest = argv[:at] + argv[at + 2 :]
        command = next((a for a in rest if not a.startswith("-")), None)
        if command:
            at_cmd = rest.index(command)
            argv = rest[: at_cmd + 1] + _config_argv(config_path, command) + rest[at_cmd + 1 :]
        else:
            argv = rest
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AbkitError as exc:
        print(f"abkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
