"""On-disk store for annotated samples, fine-tuning rounds, and model weights.

Layout under one root::

    images/<sample_id>.png   labels/<sample_id>.txt
    models/<version>/weights.bin
    manifest.json  rounds.json  models/registry.json

All structured documents are UTF-8 JSON written with a temp-file-then-rename
discipline, so a crash leaves either the previous document or a stray
``*.tmp`` file, never a half-written one. The store is single-writer: the
hub owns it at runtime and mutating CLI commands take the exclusive lock.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator

import filelock

from .annotations import (
    AnnotationError,
    ClassMap,
    NormalizedBox,
    parse_label_file,
    remap_classes,
    serialize_label_file,
)

SCHEMA_VERSION = 1
PENDING = "pending"
# Imported base datasets carry round 0: part of the training data, never
# part of the pending pool or the per-round collection arithmetic.
BASE_ROUND = 0

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


class StoreError(Exception):
    pass


class RootNotEmpty(StoreError):
    pass


class StoreCorrupt(StoreError):
    pass


class StoreLocked(StoreError):
    pass


class DuplicateFrame(StoreError):
    pass


class EmptyPendingPool(StoreError):
    pass


class UnknownRound(StoreError):
    pass


class AlreadyRecorded(StoreError):
    pass


class UnknownParent(StoreError):
    pass


def _now_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass
class SampleRecord:
    sample_id: str
    source_frame_id: str
    saved_at: int
    round_assigned: int | str  # round number, BASE_ROUND, or PENDING
    image_path: str
    label_path: str


@dataclass
class RoundRecord:
    round: int
    newly_collected: int | None
    overall_collected: int | None
    raw_hades: float | None
    trainer_outcome: str | None  # "success" | "failure" | None while open
    failure_detail: str | None
    started_at: int
    finished_at: int | None
    produced_model: str | None

    @property
    def is_open(self) -> bool:
        return self.trainer_outcome is None

    @property
    def succeeded(self) -> bool:
        return self.trainer_outcome == "success"


@dataclass
class ModelVersion:
    version: str
    parent: str | None
    created_at: int
    weights_path: str
    produced_by_round: int | str  # round number or "initial"


@dataclass
class ImportSummary:
    images: int
    box_counts: dict[str, int]
    sample_ids: list[str]


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _read_json(path: Path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise StoreCorrupt(f"missing store document {path}") from None
    except json.JSONDecodeError as exc:
        raise StoreCorrupt(f"unreadable store document {path}: {exc}") from None


class DataStore:
    """Handle over one store root. Construct via :meth:`create` or :meth:`open`."""

    def __init__(self, root: Path, clock: Callable[[], int] | None = None):
        self.root = Path(root)
        self.clock = clock or _now_ms
        self._manifest: dict = {}
        self._rounds: list[dict] = []
        self._registry: dict = {}
        self._lock = filelock.FileLock(str(self.root / ".lock"))

    # -- construction ------------------------------------------------------

    @classmethod
    def create(
        cls,
        root,
        class_map: ClassMap,
        initial_weights: bytes | None = None,
        clock: Callable[[], int] | None = None,
    ) -> "DataStore":
        root = Path(root)
        if root.exists() and any(root.iterdir()):
            raise RootNotEmpty(f"store root {root} is not empty")
        for sub in ("images", "labels", "models"):
            (root / sub).mkdir(parents=True, exist_ok=True)
        store = cls(root, clock)
        store._manifest = {
            "schema_version": SCHEMA_VERSION,
            "class_map": list(class_map.names),
            "samples": [],
        }
        store._rounds = []
        store._registry = {"current": None, "models": []}
        store._save_manifest()
        store._save_rounds()
        store._save_registry()
        if initial_weights is not None:
            store.register_model(initial_weights, parent_version=None, round="initial")
        return store

    @classmethod
    def open(cls, root, clock: Callable[[], int] | None = None) -> "DataStore":
        store = cls(Path(root), clock)
        store._manifest = _read_json(store.root / "manifest.json")
        store._rounds = _read_json(store.root / "rounds.json")["rounds"]
        store._registry = _read_json(store.root / "models" / "registry.json")
        if store._manifest.get("schema_version") != SCHEMA_VERSION:
            raise StoreCorrupt(f"unsupported schema {store._manifest.get('schema_version')}")
        return store

    def exclusive_lock(self):
        """Process-exclusive writer lock; raises StoreLocked if already held."""
        try:
            self._lock.acquire(timeout=0)
        except filelock.Timeout:
            raise StoreLocked(f"store {self.root} is locked by another process") from None
        return self._lock

    # -- persistence -------------------------------------------------------

    def _save_manifest(self) -> None:
        _write_atomic(self.root / "manifest.json", _dump_json(self._manifest))

    def _save_rounds(self) -> None:
        _write_atomic(self.root / "rounds.json", _dump_json({"rounds": self._rounds}))

    def _save_registry(self) -> None:
        _write_atomic(self.root / "models" / "registry.json", _dump_json(self._registry))

    # -- views -------------------------------------------------------------

    @property
    def class_map(self) -> ClassMap:
        return ClassMap(tuple(self._manifest["class_map"]))

    def samples(self) -> list[SampleRecord]:
        return [SampleRecord(**s) for s in self._manifest["samples"]]

    def pending_samples(self) -> list[SampleRecord]:
        return [s for s in self.samples() if s.round_assigned == PENDING]

    def samples_for_round(self, round_no: int) -> list[SampleRecord]:
        return [s for s in self.samples() if s.round_assigned == round_no]

    def rounds(self) -> list[RoundRecord]:
        return [self._round_from_json(r) for r in self._rounds]

    @staticmethod
    def _round_from_json(row: dict) -> RoundRecord:
        raw = row["raw_hades"]
        return RoundRecord(
            round=row["round"],
            newly_collected=row["newly_collected"],
            overall_collected=row["overall_collected"],
            raw_hades=None if raw in (None, "unscored") else float(raw),
            trainer_outcome=row["trainer_outcome"],
            failure_detail=row["failure_detail"],
            started_at=row["started_at"],
            finished_at=row["finished_at"],
            produced_model=row["produced_model"],
        )

    def models(self) -> list[ModelVersion]:
        return [ModelVersion(**m) for m in self._registry["models"]]

    def current_model(self) -> ModelVersion | None:
        current = self._registry["current"]
        if current is None:
            return None
        return next(m for m in self.models() if m.version == current)

    def overall_collected(self) -> int:
        return sum(r.newly_collected or 0 for r in self.rounds() if not r.is_open)

    def next_round_number(self) -> int:
        return len(self._rounds) + 1

    def open_round(self) -> RoundRecord | None:
        for r in self.rounds():
            if r.is_open:
                return r
        return None

    def last_raw_hades(self) -> float | None:
        for r in reversed(self.rounds()):
            if r.succeeded and r.raw_hades is not None:
                return r.raw_hades
        return None

    def label_boxes(self, sample: SampleRecord) -> list[NormalizedBox]:
        text = (self.root / sample.label_path).read_text(encoding="utf-8")
        return parse_label_file(text, self.class_map)

    def image_bytes(self, sample: SampleRecord) -> bytes:
        return (self.root / sample.image_path).read_bytes()

    # -- mutations ---------------------------------------------------------

    def _next_sample_id(self) -> str:
        return f"sample-{len(self._manifest['samples']) + 1:06d}"

    def _store_sample(
        self,
        image_bytes: bytes,
        boxes: list[NormalizedBox],
        source_frame_id: str,
        round_assigned: int | str,
        image_suffix: str = ".png",
    ) -> SampleRecord:
        if any(s["source_frame_id"] == source_frame_id for s in self._manifest["samples"]):
            raise DuplicateFrame(f"frame {source_frame_id!r} was already saved")
        sample_id = self._next_sample_id()
        image_path = f"images/{sample_id}{image_suffix}"
        label_path = f"labels/{sample_id}.txt"
        (self.root / image_path).write_bytes(image_bytes)
        (self.root / label_path).write_text(serialize_label_file(boxes), encoding="utf-8")
        record = SampleRecord(
            sample_id=sample_id,
            source_frame_id=source_frame_id,
            saved_at=self.clock(),
            round_assigned=round_assigned,
            image_path=image_path,
            label_path=label_path,
        )
        self._manifest["samples"].append(vars(record).copy())
        self._save_manifest()
        return record

    def add_sample(
        self, image_bytes: bytes, boxes: list[NormalizedBox], source_frame_id: str
    ) -> SampleRecord:
        """Persist one annotated frame into the pending pool."""
        validated = [b for b in boxes]
        return self._store_sample(image_bytes, validated, source_frame_id, PENDING)

    def snapshot_round(self) -> tuple[int, list[SampleRecord]]:
        """Freeze the pending pool as the next round's sample set."""
        pending = self.pending_samples()
        if not pending:
            raise EmptyPendingPool("no pending samples to snapshot")
        if self.open_round() is not None:
            raise AlreadyRecorded(f"round {self.open_round().round} is still open")
        round_no = self.next_round_number()
        ids = {s.sample_id for s in pending}
        for row in self._manifest["samples"]:
            if row["sample_id"] in ids:
                row["round_assigned"] = round_no
        self._rounds.append(
            {
                "round": round_no,
                "newly_collected": len(pending),
                "overall_collected": None,
                "raw_hades": None,
                "trainer_outcome": None,
                "failure_detail": None,
                "started_at": self.clock(),
                "finished_at": None,
                "produced_model": None,
            }
        )
        self._save_manifest()
        self._save_rounds()
        return round_no, [s for s in self.samples() if s.round_assigned == round_no]

    def record_round_result(
        self,
        round_no: int,
        raw_hades: float | None,
        trainer_outcome: str,
        produced_model: str | None = None,
        failure_detail: str | None = None,
    ) -> RoundRecord:
        """Close an open round. A failed round consumes no samples: they
        revert to pending and the round is retired with zero collected, so
        the cumulative ledger identity survives retries."""
        if trainer_outcome not in ("success", "failure"):
            raise ValueError(f"trainer_outcome must be success or failure, got {trainer_outcome!r}")
        row = next((r for r in self._rounds if r["round"] == round_no), None)
        if row is None:
            raise UnknownRound(f"round {round_no} was never snapshotted")
        if row["trainer_outcome"] is not None:
            raise AlreadyRecorded(f"round {round_no} already has a result")
        prev_overall = sum(
            r["newly_collected"] for r in self._rounds
            if r["round"] < round_no and r["trainer_outcome"] is not None
        )
        if trainer_outcome == "success":
            if produced_model is not None and not any(
                m["version"] == produced_model for m in self._registry["models"]
            ):
                raise UnknownParent(f"produced model {produced_model!r} is not registered")
            row["overall_collected"] = prev_overall + row["newly_collected"]
        else:
            attempted = row["newly_collected"]
            for sample in self._manifest["samples"]:
                if sample["round_assigned"] == round_no:
                    sample["round_assigned"] = PENDING
            row["newly_collected"] = 0
            row["overall_collected"] = prev_overall
            if failure_detail is None:
                failure_detail = "trainer failed"
            failure_detail += f" ({attempted} samples returned to pending)"
        row["raw_hades"] = raw_hades if raw_hades is not None else "unscored"
        row["trainer_outcome"] = trainer_outcome
        row["failure_detail"] = failure_detail
        row["finished_at"] = self.clock()
        row["produced_model"] = produced_model if trainer_outcome == "success" else None
        self._save_manifest()
        self._save_rounds()
        return self._round_from_json(row)

    def register_model(
        self, weights_blob: bytes, parent_version: str | None, round: int | str
    ) -> ModelVersion:
        """Store a weights blob as the next version and advance ``current``."""
        versions = {m["version"] for m in self._registry["models"]}
        if parent_version is None:
            if versions:
                raise UnknownParent("registry already has a root version; parent required")
        elif parent_version not in versions:
            raise UnknownParent(f"parent version {parent_version!r} is not registered")
        version = f"v{len(self._registry['models'])}"
        weights_path = f"models/{version}/weights.bin"
        (self.root / "models" / version).mkdir(parents=True)
        (self.root / weights_path).write_bytes(weights_blob)
        record = ModelVersion(
            version=version,
            parent=parent_version,
            created_at=self.clock(),
            weights_path=weights_path,
            produced_by_round=round,
        )
        self._registry["models"].append(vars(record).copy())
        self._registry["current"] = version
        self._save_registry()
        return record

    def import_dataset(self, src_dir, remap: dict[str, str] | None = None) -> ImportSummary:
        """Copy a YOLO-layout dataset in as base (round 0) samples.

        ``src_dir`` needs a ``classes.txt`` plus images with matching label
        basenames, either flat or under ``images/`` and ``labels/``. A
        missing label file is an image with no objects.
        """
        src = Path(src_dir)
        classes_file = src / "classes.txt"
        if not classes_file.exists():
            raise StoreError(f"missing class map file {classes_file}")
        src_map = ClassMap.from_text(classes_file.read_text(encoding="utf-8"))
        mapping = remap if remap is not None else {n: n for n in src_map.names}
        image_dir = src / "images" if (src / "images").is_dir() else src
        label_dir = src / "labels" if (src / "labels").is_dir() else src
        images = sorted(
            p for p in image_dir.iterdir()
            if p.suffix.lower() in _IMAGE_SUFFIXES and p.is_file()
        )
        if not images:
            raise StoreError(f"no images found under {image_dir}")
        box_counts = {name: 0 for name in self.class_map.names}
        sample_ids = []
        for image_path in images:
            label_path = label_dir / (image_path.stem + ".txt")
            label_text = label_path.read_text(encoding="utf-8") if label_path.exists() else ""
            try:
                boxes = parse_label_file(label_text, src_map)
                boxes = remap_classes(boxes, src_map, mapping, self.class_map)
            except AnnotationError as exc:
                raise type(exc)(f"{label_path.name}: {exc}") from exc
            record = self._store_sample(
                image_path.read_bytes(),
                boxes,
                source_frame_id=f"import:{image_path.name}",
                round_assigned=BASE_ROUND,
                image_suffix=image_path.suffix.lower(),
            )
            sample_ids.append(record.sample_id)
            for box in boxes:
                box_counts[self.class_map.name_for(box.class_id)] += 1
        return ImportSummary(len(images), box_counts, sample_ids)

    def recover_interrupted(self) -> list[int]:
        """Close any round left open by a crash, reverting its samples."""
        recovered = []
        for row in self._rounds:
            if row["trainer_outcome"] is None:
                self.record_round_result(
                    row["round"], None, "failure", failure_detail="interrupted"
                )
                recovered.append(row["round"])
        return recovered

    # -- integrity ---------------------------------------------------------

    def verify(self) -> list[str]:
        """Cross-check manifest, ledger, and registry against the disk."""
        issues = []
        for pattern in ("*.tmp", "models/*.tmp", "models/registry.json.tmp"):
            for tmp in self.root.glob(pattern):
                issues.append(f"quarantined temp file: {tmp.relative_to(self.root)}")
        seen_ids = set()
        referenced = set()
        for sample in self.samples():
            if sample.sample_id in seen_ids:
                issues.append(f"duplicate sample id {sample.sample_id}")
            seen_ids.add(sample.sample_id)
            referenced.update({sample.image_path, sample.label_path})
            if not (self.root / sample.image_path).exists():
                issues.append(f"{sample.sample_id}: missing image {sample.image_path}")
            label_file = self.root / sample.label_path
            if not label_file.exists():
                issues.append(f"{sample.sample_id}: missing label {sample.label_path}")
            else:
                try:
                    parse_label_file(label_file.read_text(encoding="utf-8"), self.class_map)
                except AnnotationError as exc:
                    issues.append(f"{sample.sample_id}: bad label file: {exc}")
        for sub in ("images", "labels"):
            for path in sorted((self.root / sub).iterdir()):
                rel = f"{sub}/{path.name}"
                if rel not in referenced and not path.name.endswith(".tmp"):
                    issues.append(f"orphan file not in manifest: {rel}")
        overall = 0
        for i, row in enumerate(self.rounds(), start=1):
            if row.round != i:
                issues.append(f"round numbering gap: expected {i}, found {row.round}")
            if not row.is_open:
                overall += row.newly_collected
                if row.overall_collected != overall:
                    issues.append(
                        f"round {row.round}: overall_collected {row.overall_collected}"
                        f" != cumulative {overall}"
                    )
        roots = [m for m in self.models() if m.parent is None]
        if self._registry["models"]:
            if len(roots) != 1:
                issues.append(f"registry has {len(roots)} root versions, expected 1")
            versions = {m.version for m in self.models()}
            current = self._registry["current"]
            if current not in versions:
                issues.append(f"current version {current!r} is not registered")
            for m in self.models():
                if m.parent is not None and m.parent not in versions:
                    issues.append(f"model {m.version}: unknown parent {m.parent}")
                if not (self.root / m.weights_path).exists():
                    issues.append(f"model {m.version}: missing weights {m.weights_path}")
        elif self._registry["current"] is not None:
            issues.append("registry current set but no models registered")
        return issues

    # -- export ------------------------------------------------------------

    def iter_label_files(self) -> Iterator[tuple[str, str]]:
        """(sample_id, label text) pairs, manifest order."""
        for sample in self.samples():
            yield sample.sample_id, (self.root / sample.label_path).read_text(encoding="utf-8")
