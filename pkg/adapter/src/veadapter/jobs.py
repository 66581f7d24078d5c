"""Embedding jobs: turn image files or text records into store + manifest.

Job items come from a JSONL spec.  Image records carry ``id``, ``path``,
``split`` and optionally ``role`` (default original_image), ``parent_id``
and ``caption``; text records carry ``id``, ``text``, ``split``.  Ids must
be unique within a job.  Unreadable images either abort the job or are
skipped and reported, per the job's error policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from .writer import write_jsonl, write_provenance, write_store

ROLES_IMAGE = ("original_image", "generated_image")
SPLITS = ("train", "dev", "test")


class JobError(ValueError):
    pass


@dataclass
class JobResult:
    count: int
    dim: int
    skipped: list = field(default_factory=list)  # (id, reason)


def read_spec(path) -> list[dict]:
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise JobError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            if "id" not in record:
                raise JobError(f"line {lineno}: missing id")
            if record["id"] in seen:
                raise JobError(f"line {lineno}: duplicate id {record['id']!r}")
            seen.add(record["id"])
            if record.get("split", "train") not in SPLITS:
                raise JobError(f"line {lineno}: unknown split {record.get('split')!r}")
            records.append(record)
    if not records:
        raise JobError(f"empty spec {path}")
    return records


def _manifest_record(record: dict, role: str, caption: Optional[str]) -> dict:
    out = {
        "id": record["id"],
        "role": role,
        "split": record.get("split", "train"),
    }
    if record.get("parent_id") is not None:
        out["parent_id"] = record["parent_id"]
    if caption is not None:
        out["caption"] = caption
    return out


def _finish(encoder, ids, rows, manifest, out_store, out_manifest, provenance_path,
            skipped):
    matrix = np.vstack(rows) if rows else np.empty((0, encoder.dim), dtype=np.float32)
    write_store(out_store, ids, matrix)
    write_jsonl(out_manifest, manifest)
    if provenance_path:
        write_provenance(
            provenance_path,
            {
                "encoder": encoder.name,
                "dim": int(matrix.shape[1]),
                "count": len(ids),
                "skipped": [{"id": i, "reason": r} for i, r in skipped],
            },
        )
    return JobResult(count=len(ids), dim=int(matrix.shape[1]), skipped=skipped)


def embed_images(
    spec_path,
    encoder,
    out_store,
    out_manifest,
    images_root=None,
    batch_size: int = 32,
    on_error: str = "abort",
    provenance_path=None,
) -> JobResult:
    """Embed image files listed in a spec into a store + manifest pair."""
    if on_error not in ("abort", "skip"):
        raise JobError(f"unknown error policy {on_error!r}")
    records = read_spec(spec_path)
    root = Path(images_root) if images_root else None
    ids, rows, manifest, skipped = [], [], [], []
    batch_records, batch_images = [], []

    def flush():
        if not batch_images:
            return
        features = encoder.embed_images(batch_images)
        for record, row in zip(batch_records, features):
            role = record.get("role", "original_image")
            if role not in ROLES_IMAGE:
                raise JobError(f"id {record['id']!r}: bad image role {role!r}")
            ids.append(record["id"])
            rows.append(row)
            manifest.append(_manifest_record(record, role, record.get("caption")))
        batch_records.clear()
        batch_images.clear()

    for record in records:
        if "path" not in record:
            raise JobError(f"id {record['id']!r}: missing image path")
        path = root / record["path"] if root else Path(record["path"])
        try:
            with Image.open(path) as image:
                image.load()
                batch_records.append(record)
                batch_images.append(image.convert("RGB"))
        except (OSError, UnidentifiedImageError) as exc:
            if on_error == "abort":
                raise JobError(f"cannot read image {path}: {exc}") from exc
            skipped.append((record["id"], str(exc)))
            continue
        if len(batch_images) >= batch_size:
            flush()
    flush()
    return _finish(encoder, ids, rows, manifest, out_store, out_manifest,
                   provenance_path, skipped)


def embed_texts(
    spec_path,
    encoder,
    out_store,
    out_manifest,
    batch_size: int = 256,
    empty_text: str = "error",
    provenance_path=None,
) -> JobResult:
    """Embed hypothesis texts listed in a spec into a store + manifest pair.

    Empty strings are rejected by default; with ``empty_text="encode"`` they
    are passed to the encoder like any other input.
    """
    if empty_text not in ("error", "encode"):
        raise JobError(f"unknown empty-text policy {empty_text!r}")
    records = read_spec(spec_path)
    ids, rows, manifest, skipped = [], [], [], []
    for start in range(0, len(records), batch_size):
        chunk = records[start : start + batch_size]
        texts = []
        for record in chunk:
            if "text" not in record:
                raise JobError(f"id {record['id']!r}: missing text")
            if record["text"] == "" and empty_text == "error":
                raise JobError(f"id {record['id']!r}: empty text")
            texts.append(record["text"])
        features = encoder.embed_texts(texts)
        for record, row in zip(chunk, features):
            ids.append(record["id"])
            rows.append(row)
            manifest.append(_manifest_record(record, "hypothesis_text", record["text"]))
    return _finish(encoder, ids, rows, manifest, out_store, out_manifest,
                   provenance_path, skipped)
