"""Binary embedding store, JSONL manifest, and pair files.

The store file is the single container for fixed-dimension feature vectors,
one row per id.  Layout (all little-endian):

    magic "VEEM" (4 bytes)
    version      u32  (currently 1)
    count        u64
    dim          u32
    matrix       count * dim float32, row-major
    id table     count entries of (u16 length, UTF-8 bytes)

The manifest is JSONL, one object per line with keys ``id``, ``role``,
``split`` and optional ``parent_id`` / ``caption``.  Pair files are JSONL
with keys ``premise_id``, ``hypothesis_id``, ``label``.

Stores and manifests are immutable after load and safe to share between
threads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

MAGIC = b"VEEM"
VERSION = 1
HEADER = struct.Struct("<4sIQI")  # magic, version, count, dim -> 20 bytes

ROLE_ORIGINAL = "original_image"
ROLE_GENERATED = "generated_image"
ROLE_HYPOTHESIS = "hypothesis_text"
ROLES = (ROLE_ORIGINAL, ROLE_GENERATED, ROLE_HYPOTHESIS)
IMAGE_ROLES = (ROLE_ORIGINAL, ROLE_GENERATED)

SPLITS = ("train", "dev", "test")

LABEL_ENTAILMENT = "entailment"
LABEL_NEUTRAL = "neutral"
LABEL_CONTRADICTION = "contradiction"
DEFAULT_LABELS = (LABEL_ENTAILMENT, LABEL_NEUTRAL, LABEL_CONTRADICTION)


class DataError(ValueError):
    """Malformed or inconsistent input data (store, manifest, or pairs)."""


class EmbeddingStore:
    """Immutable matrix of float32 feature vectors keyed by string ids."""

    def __init__(self, ids: Sequence[str], matrix: np.ndarray):
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.ndim != 2:
            raise DataError("matrix must be 2-dimensional")
        if matrix.shape[1] < 1:
            raise DataError("store dimension must be positive")
        if len(ids) != matrix.shape[0]:
            raise DataError(
                f"id count {len(ids)} does not match row count {matrix.shape[0]}"
            )
        if not np.isfinite(matrix).all():
            raise DataError("store contains non-finite values")
        ids = [str(i) for i in ids]
        index: dict[str, int] = {}
        for row, sid in enumerate(ids):
            if sid in index:
                raise DataError(f"duplicate id {sid!r}")
            index[sid] = row
        self._ids = tuple(ids)
        self._index = index
        self._matrix = matrix
        self._matrix.setflags(write=False)
        self._norms: Optional[np.ndarray] = None

    @property
    def ids(self) -> tuple[str, ...]:
        return self._ids

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    @property
    def count(self) -> int:
        return self._matrix.shape[0]

    @property
    def norms(self) -> np.ndarray:
        """Per-row L2 norms in float64, computed once on first use."""
        if self._norms is None:
            norms = np.linalg.norm(self._matrix.astype(np.float64), axis=1)
            norms.setflags(write=False)
            self._norms = norms
        return self._norms

    def __len__(self) -> int:
        return self.count

    def __contains__(self, sid: str) -> bool:
        return sid in self._index

    def row(self, sid: str) -> int:
        try:
            return self._index[sid]
        except KeyError:
            raise DataError(f"id {sid!r} not in store") from None

    def rows(self, sids: Sequence[str]) -> np.ndarray:
        """Row indices for a sequence of ids, in the given order."""
        return np.fromiter((self.row(s) for s in sids), dtype=np.int64, count=len(sids))

    def vector(self, sid: str) -> np.ndarray:
        return self._matrix[self.row(sid)]

    @classmethod
    def concat(cls, stores: Sequence["EmbeddingStore"]) -> "EmbeddingStore":
        """Combine several stores of equal dimension into one (ids must stay unique)."""
        if not stores:
            raise DataError("no stores to combine")
        dims = {s.dim for s in stores}
        if len(dims) != 1:
            raise DataError(f"stores have mixed dimensions {sorted(dims)}")
        ids = [sid for s in stores for sid in s.ids]
        matrix = np.vstack([s.matrix for s in stores])
        return cls(ids, matrix)


def write_store(store: EmbeddingStore, path) -> None:
    """Write a store to disk; ``load_store`` reproduces it bit-exactly."""
    encoded = []
    for sid in store.ids:
        raw = sid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise DataError(f"id {sid[:32]!r}... exceeds 65535 encoded bytes")
        encoded.append(raw)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, store.count, store.dim))
        fh.write(store.matrix.astype("<f4", copy=False).tobytes())
        for raw in encoded:
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)


def load_store(path) -> EmbeddingStore:
    """Read and validate a binary store file."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        raise DataError("truncated header")
    magic, version, count, dim = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DataError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise DataError(f"unsupported version {version}")
    if dim < 1:
        raise DataError("store dimension must be positive")
    offset = HEADER.size
    payload_bytes = count * dim * 4
    if len(data) < offset + payload_bytes:
        raise DataError("truncated payload")
    matrix = np.frombuffer(
        data, dtype="<f4", count=count * dim, offset=offset
    ).reshape(count, dim)
    offset += payload_bytes
    ids = []
    for _ in range(count):
        if len(data) < offset + 2:
            raise DataError("truncated id table")
        (length,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if len(data) < offset + length:
            raise DataError("truncated id table")
        ids.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    if offset != len(data):
        raise DataError(f"{len(data) - offset} trailing bytes after id table")
    return EmbeddingStore(ids, matrix.copy())


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    role: str
    split: str
    parent_id: Optional[str] = None
    caption: Optional[str] = None


class Manifest:
    """Ordered manifest entries with id / role / split / parent indexes."""

    def __init__(self, entries: Sequence[ManifestEntry]):
        self._entries = tuple(entries)
        self._by_id = {e.id: e for e in self._entries}
        self._by_role: dict[str, list[str]] = {r: [] for r in ROLES}
        self._by_split: dict[str, list[str]] = {s: [] for s in SPLITS}
        self._children: dict[str, list[str]] = {}
        for e in self._entries:
            self._by_role[e.role].append(e.id)
            self._by_split[e.split].append(e.id)
            if e.parent_id is not None:
                self._children.setdefault(e.parent_id, []).append(e.id)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self._entries)

    def __getitem__(self, i: int) -> ManifestEntry:
        return self._entries[i]

    def __contains__(self, sid: str) -> bool:
        return sid in self._by_id

    def entry(self, sid: str) -> ManifestEntry:
        try:
            return self._by_id[sid]
        except KeyError:
            raise DataError(f"id {sid!r} not in manifest") from None

    def children(self, parent_id: str) -> tuple[str, ...]:
        """Ids of generated images derived from the given original image."""
        return tuple(self._children.get(parent_id, ()))

    def ids(self, role: Optional[str] = None, split: Optional[str] = None) -> tuple[str, ...]:
        """Entry ids filtered by role and/or split, in manifest order."""
        if role is not None and role not in ROLES:
            raise DataError(f"unknown role {role!r}")
        if split is not None and split not in SPLITS:
            raise DataError(f"unknown split {split!r}")
        if role is not None and split is None:
            return tuple(self._by_role[role])
        if split is not None and role is None:
            return tuple(self._by_split[split])
        if role is None and split is None:
            return tuple(e.id for e in self._entries)
        return tuple(
            e.id for e in self._entries if e.role == role and e.split == split
        )

    def counts(self) -> dict[str, dict[str, int]]:
        """Entry counts per role and per split."""
        return {
            "role": {r: len(self._by_role[r]) for r in ROLES},
            "split": {s: len(self._by_split[s]) for s in SPLITS},
        }


def _manifest_entry(record: Mapping, lineno: int, store: EmbeddingStore) -> ManifestEntry:
    for key in ("id", "role", "split"):
        if key not in record:
            raise DataError(f"line {lineno}: missing key {key!r}")
    sid = str(record["id"])
    role = record["role"]
    split = record["split"]
    if role not in ROLES:
        raise DataError(f"line {lineno}: unknown role {role!r}")
    if split not in SPLITS:
        raise DataError(f"line {lineno}: unknown split {split!r}")
    if sid not in store:
        raise DataError(f"line {lineno}: id {sid!r} not in store")
    parent = record.get("parent_id")
    if role == ROLE_GENERATED:
        if parent is None:
            raise DataError(f"line {lineno}: generated image {sid!r} has no parent_id")
    elif parent is not None:
        raise DataError(f"line {lineno}: parent_id on non-generated entry {sid!r}")
    return ManifestEntry(
        id=sid,
        role=role,
        split=split,
        parent_id=None if parent is None else str(parent),
        caption=record.get("caption"),
    )


def load_manifest(path, store: EmbeddingStore) -> Manifest:
    """Load and validate a JSONL manifest against a store.

    Every id must exist in the store, generated images must link to an
    original image in the same split, and ids must be unique.  Errors carry
    the offending line number.
    """
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise DataError(f"line {lineno}: expected an object")
            entry = _manifest_entry(record, lineno, store)
            if entry.id in seen:
                raise DataError(f"line {lineno}: duplicate manifest id {entry.id!r}")
            seen.add(entry.id)
            entries.append(entry)
    by_id = {e.id: e for e in entries}
    for e in entries:
        if e.parent_id is None:
            continue
        parent = by_id.get(e.parent_id)
        if parent is None:
            raise DataError(f"dangling parent {e.parent_id!r} on entry {e.id!r}")
        if parent.role != ROLE_ORIGINAL:
            raise DataError(
                f"parent {e.parent_id!r} of {e.id!r} has role {parent.role}, "
                f"expected {ROLE_ORIGINAL}"
            )
        if parent.split != e.split:
            raise DataError(
                f"entry {e.id!r} in split {e.split} but parent "
                f"{e.parent_id!r} in split {parent.split}"
            )
    return Manifest(entries)


@dataclass(frozen=True)
class PairExample:
    premise_id: str
    hypothesis_id: str
    label: str


def load_pairs(
    path,
    store: EmbeddingStore,
    manifest: Manifest,
    labels: Sequence[str] = DEFAULT_LABELS,
) -> list[PairExample]:
    """Load classification pairs, checking ids, roles, and the label set.

    Loading is order-preserving and total: every input line yields exactly
    one pair.  A dataset may declare a subset of the default three labels.
    """
    label_set = set(labels)
    unknown = label_set - set(DEFAULT_LABELS)
    if unknown:
        raise DataError(f"labels {sorted(unknown)} outside {list(DEFAULT_LABELS)}")
    pairs: list[PairExample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            for key in ("premise_id", "hypothesis_id", "label"):
                if key not in record:
                    raise DataError(f"line {lineno}: missing key {key!r}")
            premise_id = str(record["premise_id"])
            hypothesis_id = str(record["hypothesis_id"])
            label = record["label"]
            if label not in label_set:
                raise DataError(f"line {lineno}: unknown label {label!r}")
            premise = manifest.entry(premise_id) if premise_id in manifest else None
            if premise is None:
                raise DataError(f"line {lineno}: premise id {premise_id!r} unresolvable")
            if premise.role not in IMAGE_ROLES:
                raise DataError(
                    f"line {lineno}: role mismatch, premise {premise_id!r} "
                    f"has role {premise.role}"
                )
            hyp = manifest.entry(hypothesis_id) if hypothesis_id in manifest else None
            if hyp is None:
                raise DataError(f"line {lineno}: hypothesis id {hypothesis_id!r} unresolvable")
            if hyp.role != ROLE_HYPOTHESIS:
                raise DataError(
                    f"line {lineno}: role mismatch, hypothesis {hypothesis_id!r} "
                    f"has role {hyp.role}"
                )
            pairs.append(PairExample(premise_id, hypothesis_id, label))
    return pairs
