"""Label-manifest ingestion, exclusions, balanced sampling, train/test split.

Native manifest CSV: header `image_id,path,cardiomegaly,effusion,consolidation`
with binary label cells. NIH-style CSVs carry `Image Index` and
`Finding Labels` columns with '|'-separated finding names.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadHeader,
    BadLabel,
    DuplicateId,
    EmptyDataset,
    EmptyFile,
    InsufficientNegatives,
    InsufficientPositives,
)

NATIVE_HEADER = ["image_id", "path", "cardiomegaly", "effusion", "consolidation"]

# exact token membership in the '|'-separated finding list
NIH_FINDINGS = ("Cardiomegaly", "Effusion", "Consolidation")


@dataclass(frozen=True)
class ManifestRecord:
    image_id: str
    path: str
    labels: tuple[int, int, int]  # (cardiomegaly, effusion, consolidation)


@dataclass(frozen=True)
class BinaryDataset:
    abnormality: str
    items: tuple  # of (image_id, path, label)


def load_manifest(text: str) -> list[ManifestRecord]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != NATIVE_HEADER:
        raise BadHeader(f"expected header {','.join(NATIVE_HEADER)}")
    records = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 5:
            raise BadLabel(f"row {lineno}: expected 5 cells, got {len(row)}")
        image_id, path = row[0], row[1]
        labels = []
        for cell in row[2:]:
            if cell not in ("0", "1"):
                raise BadLabel(f"row {lineno}: label cell {cell!r} is not 0/1")
            labels.append(int(cell))
        if image_id in seen:
            raise DuplicateId(f"row {lineno}: duplicate image_id {image_id!r}")
        seen.add(image_id)
        records.append(ManifestRecord(image_id, path, tuple(labels)))
    return records


def load_manifest_file(path: str | Path) -> list[ManifestRecord]:
    return load_manifest(Path(path).read_text(encoding="utf-8"))


def save_manifest(records, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NATIVE_HEADER)
        for rec in records:
            writer.writerow([rec.image_id, rec.path, *rec.labels])


def ingest_nih_labels(text: str, image_root: str | Path = ".") -> list[ManifestRecord]:
    """Map NIH finding strings to the three target labels.

    Membership is exact per '|'-separated token; all other findings are
    ignored. Paths resolve image_id against image_root.
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise EmptyFile("empty NIH label file")
    if "Image Index" not in reader.fieldnames or "Finding Labels" not in reader.fieldnames:
        raise BadHeader("NIH CSV needs 'Image Index' and 'Finding Labels' columns")
    root = Path(image_root)
    records = []
    for row in reader:
        image_id = row["Image Index"]
        findings = set(row["Finding Labels"].split("|"))
        labels = tuple(int(f in findings) for f in NIH_FINDINGS)
        records.append(ManifestRecord(image_id, str(root / image_id), labels))
    if not records:
        raise EmptyFile("NIH label file has a header but no rows")
    return records


def apply_exclusions(records, exclusion_text: str) -> tuple[list[ManifestRecord], list[str]]:
    """Drop records whose id is listed; returns (kept, warnings for unknown ids)."""
    excluded: set[str] = set()
    for line in exclusion_text.splitlines():
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            excluded.add(stripped)
    known = {r.image_id for r in records}
    warnings = [f"exclusion id not in manifest: {i}" for i in sorted(excluded - known)]
    kept = [r for r in records if r.image_id not in excluded]
    return kept, warnings


_BIT_FOR = {"cardiomegaly": 0, "effusion": 1, "consolidation": 2}


def balanced_sample(records, abnormality: str, n_pos: int, n_neg: int, seed: int) -> BinaryDataset:
    """Uniform without-replacement draw of n_pos positives and n_neg negatives.

    Both strata are shuffled by the seeded generator, heads taken, then the
    combined selection shuffled once more with the same generator.
    """
    bit = _BIT_FOR[abnormality]
    pos = [r for r in records if r.labels[bit] == 1]
    neg = [r for r in records if r.labels[bit] == 0]
    if len(pos) < n_pos:
        raise InsufficientPositives(
            f"{abnormality}: requested {n_pos} positives, pool has {len(pos)}"
        )
    if len(neg) < n_neg:
        raise InsufficientNegatives(
            f"{abnormality}: requested {n_neg} negatives, pool has {len(neg)}"
        )
    rng = np.random.default_rng(seed)
    picked_pos = [pos[i] for i in rng.permutation(len(pos))[:n_pos]]
    picked_neg = [neg[i] for i in rng.permutation(len(neg))[:n_neg]]
    combined = picked_pos + picked_neg
    order = rng.permutation(len(combined))
    items = tuple((combined[i].image_id, combined[i].path, combined[i].labels[bit]) for i in order)
    return BinaryDataset(abnormality=abnormality, items=items)


def split(dataset: BinaryDataset, train_fraction: float = 0.7, seed: int = 0):
    """Seeded shuffle then exact partition; train gets floor(N * fraction)."""
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(dataset.items)
    if n == 0:
        raise EmptyDataset("cannot split an empty dataset")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    # tiny epsilon so e.g. 100 * 0.29 = 28.999...96 still floors to 29
    n_train = int(np.floor(n * train_fraction + 1e-9))
    train = BinaryDataset(dataset.abnormality, tuple(dataset.items[i] for i in order[:n_train]))
    test = BinaryDataset(dataset.abnormality, tuple(dataset.items[i] for i in order[n_train:]))
    return train, test


def save_binary_dataset(ds: BinaryDataset, path: str | Path) -> None:
    """Binary datasets reuse the native manifest layout; the abnormality's
    bit is set and the other two are zero."""
    bit = _BIT_FOR[ds.abnormality]
    records = []
    for image_id, img_path, label in ds.items:
        labels = [0, 0, 0]
        labels[bit] = int(label)
        records.append(ManifestRecord(image_id, img_path, tuple(labels)))
    save_manifest(records, path)


def load_binary_dataset(path: str | Path, abnormality: str) -> BinaryDataset:
    bit = _BIT_FOR[abnormality]
    records = load_manifest_file(path)
    return BinaryDataset(
        abnormality=abnormality,
        items=tuple((r.image_id, r.path, r.labels[bit]) for r in records),
    )
