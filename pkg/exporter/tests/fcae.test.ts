import { execFileSync } from "child_process";
import fs from "fs";
import os from "os";
import path from "path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import {
  EmbeddingRecord,
  Manifest,
  VERSION,
  manifestPath,
  readArchive,
  writeArchive,
} from "../src/fcae";

let tmp: string;
beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "fcae-"));
});
afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

function sampleRecords(): { records: EmbeddingRecord[]; manifest: Manifest } {
  const records: EmbeddingRecord[] = [
    { sampleId: 0, classId: 1, vector: [0.5, -1.25] },
    { sampleId: 1, classId: 1, vector: [2.0, 0.75] },
    { sampleId: 2, classId: 3, vector: [-0.125, 4.5] },
    { sampleId: 3, classId: 3, vector: [1.0, -2.0] },
  ];
  const manifest: Manifest = {
    version: VERSION,
    dim: 2,
    classes: { "1": "class_1", "3": "class_3" },
    sessions: [
      { train: [0, 2], test: [1, 3] },
    ],
    provenance: "unit test",
  };
  return { records, manifest };
}

describe("archive round trip", () => {
  it("preserves ids, classes and f32 values", () => {
    const { records, manifest } = sampleRecords();
    const archive = path.join(tmp, "a.fcae");
    writeArchive(records, 2, manifest, archive);
    const loaded = readArchive(archive);
    expect(loaded.dim).toBe(2);
    expect(loaded.records.map((r) => r.sampleId)).toEqual([0, 1, 2, 3]);
    expect(loaded.records.map((r) => r.classId)).toEqual([1, 1, 3, 3]);
    expect([...loaded.records[2].vector]).toEqual([-0.125, 4.5]);
    expect(loaded.manifest.sessions).toEqual(manifest.sessions);
  });

  it("writes the documented little-endian header", () => {
    const { records, manifest } = sampleRecords();
    const archive = path.join(tmp, "a.fcae");
    writeArchive(records, 2, manifest, archive);
    const raw = fs.readFileSync(archive);
    expect(raw.toString("ascii", 0, 4)).toBe("FCAE");
    expect(raw.readUInt32LE(4)).toBe(1);
    expect(raw.readUInt32LE(8)).toBe(2);
    expect(Number(raw.readBigUInt64LE(12))).toBe(4);
    expect(raw.length).toBe(28 + 4 * (8 + 4 + 8));
  });

  it("detects a corrupted payload", () => {
    const { records, manifest } = sampleRecords();
    const archive = path.join(tmp, "a.fcae");
    writeArchive(records, 2, manifest, archive);
    const raw = fs.readFileSync(archive);
    raw[35] ^= 0xff;
    fs.writeFileSync(archive, raw);
    expect(() => readArchive(archive)).toThrow(/checksum/);
  });
});

describe("manifest validation", () => {
  it("rejects references to missing samples", () => {
    const { records, manifest } = sampleRecords();
    manifest.sessions[0].train.push(999);
    expect(() => writeArchive(records, 2, manifest, path.join(tmp, "x.fcae"))).toThrow(
      /missing sample id 999/
    );
  });

  it("rejects overlapping session label sets", () => {
    const { records, manifest } = sampleRecords();
    manifest.sessions = [
      { train: [0], test: [1] }, // class 1
      { train: [2, 1], test: [3] }, // classes 3 and 1: overlap
    ];
    expect(() => writeArchive(records, 2, manifest, path.join(tmp, "x.fcae"))).toThrow(
      /share class 1/
    );
  });
});

describe("cross-language byte compatibility", () => {
  it("produces the identical payload bytes as the engine's writer", () => {
    const { records, manifest } = sampleRecords();
    const tsArchive = path.join(tmp, "ts.fcae");
    writeArchive(records, 2, manifest, tsArchive);

    const pyArchive = path.join(tmp, "py.fcae");
    const script = `
import numpy as np
from fscil.archive import ArchiveManifest, write_archive
from fscil.data import EmbeddingSet

embeddings = EmbeddingSet(
    np.array([0, 1, 2, 3]),
    np.array([1, 1, 3, 3]),
    np.array([[0.5, -1.25], [2.0, 0.75], [-0.125, 4.5], [1.0, -2.0]]),
)
manifest = ArchiveManifest(
    dim=2,
    classes={1: "class_1", 3: "class_3"},
    sessions=[{"train": [0, 2], "test": [1, 3]}],
    provenance="unit test",
)
write_archive(embeddings, manifest, ${JSON.stringify(pyArchive)})
`;
    execFileSync("python3", ["-c", script], { cwd: path.join(__dirname, "..", "..") });
    const tsBytes = fs.readFileSync(tsArchive);
    const pyBytes = fs.readFileSync(pyArchive);
    expect(Buffer.compare(tsBytes, pyBytes)).toBe(0);
    const tsManifest = JSON.parse(fs.readFileSync(manifestPath(tsArchive), "utf-8"));
    const pyManifest = JSON.parse(fs.readFileSync(manifestPath(pyArchive), "utf-8"));
    expect(tsManifest).toEqual(pyManifest);
  });
});
