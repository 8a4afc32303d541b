"""FCAE embedding archives: a little-endian binary payload plus a JSON
sidecar manifest.

Payload layout (all little-endian):

    magic    4 bytes  ASCII "FCAE"
    version  u32      currently 1
    dim      u32      vector dimension
    count    u64      number of records
    checksum u64      FNV-1a 64 over all record bytes
    records  count *  (sample_id u64, class_id u32, dim * f32)

Vectors are stored at 32-bit precision and promoted to float64 on load.
The sidecar lives next to the payload with the final suffix replaced by
``.manifest.json`` and carries the class catalog and the per-session
train/test sample-id split.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import EmbeddingSet
from .exceptions import (
    BadMagicError,
    ChecksumMismatchError,
    LabelOverlapError,
    ManifestError,
    TruncatedArchiveError,
    UnsupportedVersionError,
)
from .rng import fnv1a64

MAGIC = b"FCAE"
VERSION = 1
_HEADER = struct.Struct("<4sIIQQ")


@dataclass
class ArchiveManifest:
    dim: int
    classes: dict[int, str]
    sessions: list[dict[str, list[int]]]
    provenance: str = ""
    version: int = VERSION

    def session_train_ids(self, m: int) -> list[int]:
        return list(self.sessions[m]["train"])

    def session_test_ids(self, m: int) -> list[int]:
        return list(self.sessions[m]["test"])

    def num_sessions(self) -> int:
        return len(self.sessions)

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "dim": self.dim,
            "classes": {str(k): v for k, v in sorted(self.classes.items())},
            "sessions": [
                {"train": list(s["train"]), "test": list(s["test"])} for s in self.sessions
            ],
            "provenance": self.provenance,
        }

    @staticmethod
    def from_json_dict(payload: dict) -> "ArchiveManifest":
        try:
            return ArchiveManifest(
                version=int(payload["version"]),
                dim=int(payload["dim"]),
                classes={int(k): str(v) for k, v in payload["classes"].items()},
                sessions=[
                    {"train": [int(i) for i in s["train"]], "test": [int(i) for i in s["test"]]}
                    for s in payload["sessions"]
                ],
                provenance=str(payload.get("provenance", "")),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ManifestError(f"malformed manifest: {exc!r}") from exc


def manifest_path(path) -> Path:
    return Path(path).with_suffix(".manifest.json")


def _record_dtype(dim: int) -> np.dtype:
    return np.dtype([("sample_id", "<u8"), ("class_id", "<u4"), ("vec", "<f4", (dim,))])


def validate_manifest(manifest: ArchiveManifest, embeddings: EmbeddingSet) -> None:
    """Check id references and cross-session label disjointness."""
    if manifest.dim != embeddings.dim:
        raise ManifestError(f"manifest dim {manifest.dim} != payload dim {embeddings.dim}")
    label_of = {int(s): int(c) for s, c in zip(embeddings.sample_ids, embeddings.labels)}
    session_labels = []
    for m, split in enumerate(manifest.sessions):
        labels = set()
        for kind in ("train", "test"):
            for sid in split[kind]:
                if int(sid) not in label_of:
                    raise ManifestError(f"session {m} {kind} references missing sample id {sid}")
                labels.add(label_of[int(sid)])
        session_labels.append(labels)
    for a in range(len(session_labels)):
        for b in range(a + 1, len(session_labels)):
            overlap = session_labels[a] & session_labels[b]
            if overlap:
                raise LabelOverlapError(
                    f"sessions {a} and {b} share classes {sorted(overlap)[:5]}"
                )


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_archive(embeddings: EmbeddingSet, manifest: ArchiveManifest, path) -> None:
    """Write payload + sidecar manifest; refuses invalid inputs before writing."""
    path = Path(path)
    validate_manifest(manifest, embeddings)
    if np.any(embeddings.sample_ids < 0):
        raise ValueError("sample ids must be non-negative for archival")
    if np.any(embeddings.labels < 0):
        raise ValueError("class ids must be non-negative for archival")
    records = np.empty(len(embeddings), dtype=_record_dtype(embeddings.dim))
    records["sample_id"] = embeddings.sample_ids.astype(np.uint64)
    records["class_id"] = embeddings.labels.astype(np.uint32)
    records["vec"] = embeddings.vectors.astype(np.float32)
    body = records.tobytes()
    header = _HEADER.pack(MAGIC, VERSION, embeddings.dim, len(embeddings), fnv1a64(body))
    _atomic_write_bytes(path, header + body)
    _atomic_write_bytes(
        manifest_path(path),
        (json.dumps(manifest.to_json_dict(), indent=2, sort_keys=True) + "\n").encode(),
    )


def read_archive(path) -> tuple[EmbeddingSet, ArchiveManifest]:
    """Read and fully validate an archive; malformed files fail closed."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedArchiveError(f"{path} is shorter than the archive header")
    magic, version, dim, count, checksum = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path} does not start with {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path} has version {version}, expected {VERSION}")
    if dim < 1:
        raise TruncatedArchiveError(f"{path} declares dimension {dim}")
    body = raw[_HEADER.size :]
    expected = count * _record_dtype(dim).itemsize
    if len(body) != expected:
        raise TruncatedArchiveError(
            f"{path} has {len(body)} record bytes, expected {expected}"
        )
    if fnv1a64(body) != checksum:
        raise ChecksumMismatchError(f"{path} payload does not match its checksum")
    records = np.frombuffer(body, dtype=_record_dtype(dim))
    embeddings = EmbeddingSet(
        records["sample_id"].astype(np.int64),
        records["class_id"].astype(np.int64),
        records["vec"].astype(np.float64).reshape(count, dim),
    )
    mpath = manifest_path(path)
    if not mpath.exists():
        raise ManifestError(f"missing sidecar manifest {mpath}")
    manifest = ArchiveManifest.from_json_dict(json.loads(mpath.read_text()))
    if manifest.version != VERSION:
        raise UnsupportedVersionError(f"manifest declares version {manifest.version}")
    validate_manifest(manifest, embeddings)
    return embeddings, manifest
