import struct

import numpy as np
import pytest

from fscil.archive import (
    ArchiveManifest,
    manifest_path,
    read_archive,
    validate_manifest,
    write_archive,
)
from fscil.data import EmbeddingSet
from fscil.exceptions import (
    BadMagicError,
    ChecksumMismatchError,
    LabelOverlapError,
    ManifestError,
    TruncatedArchiveError,
    UnsupportedVersionError,
)
from fscil.rng import SplitMix64


def small_archive(n=10, dim=3, seed=0):
    rng = SplitMix64(seed)
    embeddings = EmbeddingSet(
        np.arange(n), np.arange(n) % 2, rng.normal_matrix((n, dim))
    )
    manifest = ArchiveManifest(
        dim=dim,
        classes={0: "a", 1: "b"},
        sessions=[{"train": list(range(n // 2)), "test": list(range(n // 2, n))}],
        provenance="test fixture",
    )
    return embeddings, manifest


class TestRoundTrip:
    def test_empty_archive(self, tmp_path):
        embeddings = EmbeddingSet(np.empty(0, int), np.empty(0, int), np.empty((0, 4)))
        manifest = ArchiveManifest(dim=4, classes={}, sessions=[{"train": [], "test": []}])
        path = tmp_path / "empty.fcae"
        write_archive(embeddings, manifest, path)
        loaded, m2 = read_archive(path)
        assert len(loaded) == 0
        assert loaded.dim == 4
        assert m2.num_sessions() == 1

    def test_values_quantized_to_f32_ids_exact(self, tmp_path):
        rng = SplitMix64(5)
        embeddings = EmbeddingSet(
            np.arange(100) * 7 + 3, np.arange(100) % 4, rng.normal_matrix((100, 16))
        )
        manifest = ArchiveManifest(
            dim=16,
            classes={c: f"c{c}" for c in range(4)},
            sessions=[{"train": embeddings.sample_ids.tolist(), "test": []}],
        )
        path = tmp_path / "dat.fcae"
        write_archive(embeddings, manifest, path)
        loaded, _ = read_archive(path)
        assert np.array_equal(loaded.sample_ids, embeddings.sample_ids)
        assert np.array_equal(loaded.labels, embeddings.labels)
        assert np.array_equal(loaded.vectors, embeddings.vectors.astype(np.float32).astype(np.float64))

    def test_writes_are_byte_deterministic(self, tmp_path):
        embeddings, manifest = small_archive()
        a, b = tmp_path / "a.fcae", tmp_path / "b.fcae"
        write_archive(embeddings, manifest, a)
        write_archive(embeddings, manifest, b)
        assert a.read_bytes() == b.read_bytes()
        assert manifest_path(a).read_text() == manifest_path(b).read_text()

    def test_layout_is_little_endian_packed(self, tmp_path):
        embeddings = EmbeddingSet(
            np.array([9]), np.array([2]), np.array([[1.5, -2.0]])
        )
        manifest = ArchiveManifest(dim=2, classes={2: "x"}, sessions=[{"train": [9], "test": []}])
        path = tmp_path / "one.fcae"
        write_archive(embeddings, manifest, path)
        raw = path.read_bytes()
        magic, version, dim, count, checksum = struct.unpack_from("<4sIIQQ", raw)
        assert magic == b"FCAE"
        assert (version, dim, count) == (1, 2, 1)
        sid, cid, v0, v1 = struct.unpack_from("<QIff", raw, 28)
        assert (sid, cid) == (9, 2)
        assert (v0, v1) == (1.5, -2.0)


class TestFormatErrors:
    def test_bad_magic(self, tmp_path):
        embeddings, manifest = small_archive()
        path = tmp_path / "x.fcae"
        write_archive(embeddings, manifest, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagicError):
            read_archive(path)

    def test_bad_version(self, tmp_path):
        embeddings, manifest = small_archive()
        path = tmp_path / "x.fcae"
        write_archive(embeddings, manifest, path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 4, 99)
        path.write_bytes(bytes(raw))
        with pytest.raises(UnsupportedVersionError):
            read_archive(path)

    def test_truncation(self, tmp_path):
        embeddings, manifest = small_archive()
        path = tmp_path / "x.fcae"
        write_archive(embeddings, manifest, path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) - 7])
        with pytest.raises(TruncatedArchiveError):
            read_archive(path)

    def test_corrupted_payload_fails_checksum(self, tmp_path):
        embeddings, manifest = small_archive()
        path = tmp_path / "x.fcae"
        write_archive(embeddings, manifest, path)
        raw = bytearray(path.read_bytes())
        raw[40] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ChecksumMismatchError):
            read_archive(path)

    def test_missing_manifest(self, tmp_path):
        embeddings, manifest = small_archive()
        path = tmp_path / "x.fcae"
        write_archive(embeddings, manifest, path)
        manifest_path(path).unlink()
        with pytest.raises(ManifestError):
            read_archive(path)


class TestManifestValidation:
    def test_missing_sample_id_refused_before_writing(self, tmp_path):
        embeddings, manifest = small_archive()
        manifest.sessions[0]["train"].append(12345)
        path = tmp_path / "x.fcae"
        with pytest.raises(ManifestError):
            write_archive(embeddings, manifest, path)
        assert not path.exists()

    def test_overlapping_session_labels_rejected(self, tmp_path):
        rng = SplitMix64(1)
        embeddings = EmbeddingSet(
            np.arange(8), np.array([0, 0, 1, 1, 1, 1, 2, 2]), rng.normal_matrix((8, 2))
        )
        manifest = ArchiveManifest(
            dim=2,
            classes={0: "a", 1: "b", 2: "c"},
            sessions=[
                {"train": [0, 1, 2], "test": [3]},  # classes {0, 1}
                {"train": [4, 6], "test": [5, 7]},  # classes {1, 2}: overlap on 1
            ],
        )
        with pytest.raises(LabelOverlapError):
            write_archive(embeddings, manifest, tmp_path / "x.fcae")

    def test_overlap_detected_on_read_too(self, tmp_path):
        embeddings, manifest = small_archive()
        path = tmp_path / "x.fcae"
        write_archive(embeddings, manifest, path)
        # swap in a manifest that splits the same class across two sessions
        bad = ArchiveManifest(
            dim=manifest.dim,
            classes=manifest.classes,
            sessions=[
                {"train": [0, 1], "test": []},
                {"train": [2, 3], "test": []},
            ],
        )
        import json

        manifest_path(path).write_text(json.dumps(bad.to_json_dict()))
        with pytest.raises(LabelOverlapError):
            read_archive(path)

    def test_dim_mismatch(self):
        embeddings, manifest = small_archive(dim=3)
        manifest.dim = 7
        with pytest.raises(ManifestError):
            validate_manifest(manifest, embeddings)


def test_manifest_path_rule():
    assert str(manifest_path("data.fcae")).endswith("data.manifest.json")
    assert str(manifest_path("dir/archive")).endswith("dir/archive.manifest.json")
