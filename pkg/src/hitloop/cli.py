"""Operator entry points.

Subcommands: serve, import, score, eval, report, simulate. Exit codes are
0 on success, 1 on data errors, 2 on usage errors. Every table can also be
emitted as JSON via --format json.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, diversity, reporting
from .annotations import (
    AnnotationError,
    ClassMap,
    parse_label_file,
    parse_prediction_file,
)
from .datastore import DataStore, StoreError
from .evaluation import DetectionScene, EvaluationError, GroundTruthScene, map50
from .hub import ConfigError, HubConfig, HubError, run_hub
from .simulate import SimulationError, run_simulation


def _fail(message) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _open_store(root) -> DataStore:
    try:
        return DataStore.open(root)
    except StoreError as exc:
        _fail(exc)


@click.group()
@click.version_option(__version__, prog_name="hitloop")
def main() -> None:
    """Interactive teaching loop tools: hub, datasets, diversity, evaluation."""


# -- serve ---------------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="hub config JSON")
def serve(config_path: str) -> None:
    """Run the hub until interrupted."""
    try:
        config = HubConfig.from_file(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    try:
        asyncio.run(run_hub(config))
    except KeyboardInterrupt:
        pass
    except (HubError, StoreError) as exc:
        _fail(exc)


# -- import --------------------------------------------------------------------


def _parse_remap(spec: str) -> dict[str, str] | None:
    if not spec:
        return None
    mapping: dict[str, str] = {}
    for entry in spec.split(","):
        parts = entry.split("=")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise click.UsageError(f"bad remap entry {entry!r}; expected old=new")
        if parts[0] in mapping:
            raise click.UsageError(f"duplicate remap entry for {parts[0]!r}")
        mapping[parts[0]] = parts[1]
    return mapping


def _class_abbrevs(names) -> dict[str, str]:
    short = {name: f"#{name[0].upper()}" for name in names}
    if len(set(short.values())) != len(names):
        return {name: f"#{name}" for name in names}
    return short


@main.command(name="import")
@click.option("--src", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--store", "store_root", required=True, type=click.Path())
@click.option("--remap", default="", help='class remap "old=new,old=new"; new may be DROP')
@click.option("--classes", default="door,handle", show_default=True,
              help="class map used when creating a new store")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def import_cmd(src: str, store_root: str, remap: str, classes: str, fmt: str) -> None:
    """Copy a YOLO-layout dataset into a store as base (round 0) samples."""
    mapping = _parse_remap(remap)
    root = Path(store_root)
    try:
        if (root / "manifest.json").exists():
            store = DataStore.open(root)
        else:
            store = DataStore.create(root, ClassMap(tuple(c for c in classes.split(",") if c)))
        summary = store.import_dataset(src, mapping)
    except (AnnotationError, StoreError) as exc:
        _fail(exc)
    if fmt == "json":
        click.echo(json.dumps({"images": summary.images, "boxes": summary.box_counts}))
        return
    short = _class_abbrevs(store.class_map.names)
    cells = [f"#images {summary.images}"]
    cells += [f"{short[name]} {summary.box_counts[name]}" for name in store.class_map.names]
    click.echo(" | ".join(cells))


# -- score ---------------------------------------------------------------------


def _round_raw_scores(
    store: DataStore, embeddings_path, bins: int
) -> dict[int, float]:
    try:
        vectors = diversity.load_embeddings(embeddings_path)
    except (OSError, diversity.DiversityError) as exc:
        _fail(exc)
    scores: dict[int, float] = {}
    for record in store.rounds():
        if not record.succeeded:
            continue
        samples = store.samples_for_round(record.round)
        for sample in samples:
            if sample.sample_id not in vectors:
                _fail(f"missing embedding for {sample.sample_id}")
        features = np.stack([vectors[s.sample_id] for s in samples])
        labels = [
            store.class_map.name_for(box.class_id)
            for sample in samples
            for box in store.label_boxes(sample)
        ]
        f_ent = diversity.feature_entropy(features, bins)
        l_ent = diversity.label_entropy(labels) if labels else 0.0
        scores[record.round] = diversity.harmonic_diversity(f_ent, l_ent)
    return scores


@main.command()
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--embeddings", required=True, type=click.Path(exists=True))
@click.option("--bins", default=diversity.DEFAULT_BIN_COUNT, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def score(store_root: str, embeddings: str, bins: int, fmt: str) -> None:
    """Raw and normalized HaDES per recorded round."""
    if bins < 1:
        raise click.UsageError("--bins must be at least 1")
    store = _open_store(store_root)
    raw = _round_raw_scores(store, embeddings, bins)
    rounds = sorted(raw)
    norms = diversity.normalize_scores([raw[r] for r in rounds])
    rows = [
        {"round": r, "raw_hades": raw[r], "norm_hades": n}
        for r, n in zip(rounds, norms)
    ]
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2))
        return
    click.echo(f"{'round':<6} {'raw-hades':<12} norm-hades")
    for row in rows:
        click.echo(
            f"{row['round']:<6} {reporting.fmt_score(row['raw_hades']):<12} "
            f"{reporting.fmt_score(row['norm_hades'])}"
        )


# -- eval ----------------------------------------------------------------------


def _load_eval_dirs(pred_dir: Path, gt_dir: Path):
    classes_file = gt_dir / "classes.txt"
    if not classes_file.exists():
        # labels often live in <root>/labels with classes.txt at <root>
        classes_file = gt_dir.parent / "classes.txt"
    if not classes_file.exists():
        _fail(f"missing class map file {gt_dir / 'classes.txt'}")
    class_map = ClassMap.from_text(classes_file.read_text(encoding="utf-8"))
    gt_scenes = []
    for path in sorted(gt_dir.glob("*.txt")):
        if path.name == "classes.txt":
            continue
        try:
            boxes = parse_label_file(path.read_text("utf-8"), class_map)
        except AnnotationError as exc:
            _fail(f"{path.name}: {exc}")
        gt_scenes.append(GroundTruthScene(path.stem, tuple(boxes)))
    pred_scenes = []
    for path in sorted(pred_dir.glob("*.txt")):
        if path.name == "classes.txt":
            continue
        try:
            dets = parse_prediction_file(path.read_text("utf-8"), class_map)
        except AnnotationError as exc:
            _fail(f"{path.name}: {exc}")
        pred_scenes.append(DetectionScene(path.stem, tuple(dets)))
    return class_map, pred_scenes, gt_scenes


@main.command(name="eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--iou", "iou_thr", default=0.5, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def eval_cmd(pred_dir: str, gt_dir: str, iou_thr: float, fmt: str) -> None:
    """mAP at an IoU threshold over per-scene label/prediction files."""
    if not 0 < iou_thr <= 1:
        raise click.UsageError("--iou must be in (0, 1]")
    class_map, pred_scenes, gt_scenes = _load_eval_dirs(Path(pred_dir), Path(gt_dir))
    try:
        result = map50(pred_scenes, gt_scenes, class_map, threshold=iou_thr)
    except EvaluationError as exc:
        _fail(exc)
    if fmt == "json":
        click.echo(json.dumps({"map": result.mean, "per_class": result.per_class}))
        return
    cells = [f"all {result.mean * 100:.1f}"]
    cells += [
        f"{name} {result.per_class[name] * 100:.1f}"
        for name in class_map.names
        if name in result.per_class
    ]
    click.echo(" | ".join(cells))


# -- report --------------------------------------------------------------------


@main.command()
@click.option("--store", "store_root", required=True, type=click.Path(exists=True))
@click.option("--embeddings", default=None, type=click.Path(exists=True),
              help="score stored-as-unscored rounds on the fly")
@click.option("--bins", default=diversity.DEFAULT_BIN_COUNT, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def report(store_root: str, embeddings: str | None, bins: int, fmt: str) -> None:
    """Ledger report: per successful round, counts plus raw/normalized HaDES."""
    store = _open_store(store_root)
    extra = _round_raw_scores(store, embeddings, bins) if embeddings else None
    rows = reporting.build_report(store, extra)
    click.echo(
        reporting.report_json(rows) if fmt == "json" else reporting.report_text(rows),
        nl=False,
    )


# -- simulate --------------------------------------------------------------------


@main.command(name="simulate")
@click.option("--frames", "frames_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--rounds", default=3, show_default=True)
@click.option("--per-round", "per_round", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--workdir", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path(exists=True),
              help="JSON overriding plugin commands / ports / bins")
@click.option("--jitter", is_flag=True, help="jitter annotation boxes by the seed")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def simulate_cmd(
    frames_dir: str, rounds: int, per_round: int, seed: int,
    workdir: str, config_path: str | None, jitter: bool, fmt: str,
) -> None:
    """Scripted end-to-end session: stream, annotate, fine-tune, report."""
    if rounds < 0:
        raise click.UsageError("--rounds must be >= 0")
    if per_round < 1:
        raise click.UsageError("--per-round must be >= 1")
    overrides = None
    if config_path:
        try:
            overrides = json.loads(Path(config_path).read_text("utf-8"))
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"config file is not valid JSON: {exc}")
    try:
        result = asyncio.run(
            run_simulation(
                frames_dir, rounds, per_round, seed, workdir,
                config_overrides=overrides, jitter=jitter,
            )
        )
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    except (SimulationError, HubError, StoreError, AnnotationError) as exc:
        _fail(exc)
    if fmt == "json":
        click.echo(
            json.dumps(
                {
                    "store_root": str(result.store_root),
                    "saves": result.saves,
                    "rounds_completed": result.rounds_completed,
                    "trainer_invocations": result.trainer_invocations,
                    "report": [vars(r) for r in result.rows],
                },
                indent=2,
            )
        )
        return
    click.echo(
        f"saved {result.saves} samples over {result.rounds_completed} rounds "
        f"({result.trainer_invocations} trainer runs); store at {result.store_root}"
    )
    click.echo(reporting.report_text(result.rows), nl=False)


if __name__ == "__main__":
    main()
