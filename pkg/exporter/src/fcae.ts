/**
 * FCAE archive writer/reader, bit-exact with the engine's format.
 *
 * Little-endian layout:
 *   magic "FCAE" | version u32 | dim u32 | count u64 | checksum u64 (FNV-1a
 *   over all record bytes) | records: sample_id u64, class_id u32, dim * f32.
 *
 * The sidecar manifest sits next to the payload with the final suffix
 * replaced by `.manifest.json`.
 */

import fs from "fs";
import path from "path";

import { fnv1a64 } from "./rng";

export const MAGIC = "FCAE";
export const VERSION = 1;
const HEADER_SIZE = 28;

export interface EmbeddingRecord {
  sampleId: number;
  classId: number;
  vector: ArrayLike<number>;
}

export interface SessionSplit {
  train: number[];
  test: number[];
}

export interface Manifest {
  version: number;
  dim: number;
  classes: Record<string, string>;
  sessions: SessionSplit[];
  provenance: string;
}

export function manifestPath(archivePath: string): string {
  const parsed = path.parse(archivePath);
  return path.join(parsed.dir, `${parsed.name}.manifest.json`);
}

function recordSize(dim: number): number {
  return 8 + 4 + 4 * dim;
}

export function encodeRecords(records: EmbeddingRecord[], dim: number): Buffer {
  const body = Buffer.alloc(records.length * recordSize(dim));
  let offset = 0;
  for (const record of records) {
    if (record.vector.length !== dim) {
      throw new Error(
        `sample ${record.sampleId} has dim ${record.vector.length}, expected ${dim}`
      );
    }
    body.writeBigUInt64LE(BigInt(record.sampleId), offset);
    body.writeUInt32LE(record.classId >>> 0, offset + 8);
    for (let j = 0; j < dim; j++) {
      body.writeFloatLE(record.vector[j], offset + 12 + 4 * j);
    }
    offset += recordSize(dim);
  }
  return body;
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeysDeep);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export function writeArchive(
  records: EmbeddingRecord[],
  dim: number,
  manifest: Manifest,
  archivePath: string
): void {
  validateManifest(manifest, records, dim);
  const body = encodeRecords(records, dim);
  const header = Buffer.alloc(HEADER_SIZE);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(VERSION, 4);
  header.writeUInt32LE(dim, 8);
  header.writeBigUInt64LE(BigInt(records.length), 12);
  header.writeBigUInt64LE(fnv1a64(body), 20);
  fs.writeFileSync(archivePath, Buffer.concat([header, body]));
  // recursively key-sorted with 2-space indent, matching the engine's output
  fs.writeFileSync(
    manifestPath(archivePath),
    JSON.stringify(sortKeysDeep(manifest), null, 2) + "\n"
  );
}

export function validateManifest(
  manifest: Manifest,
  records: EmbeddingRecord[],
  dim: number
): void {
  if (manifest.dim !== dim) {
    throw new Error(`manifest dim ${manifest.dim} does not match payload dim ${dim}`);
  }
  const labelOf = new Map<number, number>();
  for (const record of records) {
    labelOf.set(record.sampleId, record.classId);
  }
  const sessionLabels: Set<number>[] = [];
  manifest.sessions.forEach((split, m) => {
    const labels = new Set<number>();
    for (const kind of ["train", "test"] as const) {
      for (const sid of split[kind]) {
        const label = labelOf.get(sid);
        if (label === undefined) {
          throw new Error(`session ${m} ${kind} references missing sample id ${sid}`);
        }
        labels.add(label);
      }
    }
    sessionLabels.push(labels);
  });
  for (let a = 0; a < sessionLabels.length; a++) {
    for (let b = a + 1; b < sessionLabels.length; b++) {
      for (const label of sessionLabels[a]) {
        if (sessionLabels[b].has(label)) {
          throw new Error(`sessions ${a} and ${b} share class ${label}`);
        }
      }
    }
  }
}

/** Reader used by the round-trip tests; validates like the engine does. */
export function readArchive(archivePath: string): {
  records: EmbeddingRecord[];
  dim: number;
  manifest: Manifest;
} {
  const raw = fs.readFileSync(archivePath);
  if (raw.length < HEADER_SIZE) throw new Error("file shorter than header");
  if (raw.toString("ascii", 0, 4) !== MAGIC) throw new Error("bad magic");
  const version = raw.readUInt32LE(4);
  if (version !== VERSION) throw new Error(`unsupported version ${version}`);
  const dim = raw.readUInt32LE(8);
  const count = Number(raw.readBigUInt64LE(12));
  const checksum = raw.readBigUInt64LE(20);
  const body = raw.subarray(HEADER_SIZE);
  if (body.length !== count * recordSize(dim)) throw new Error("truncated payload");
  if (fnv1a64(body) !== checksum) throw new Error("checksum mismatch");
  const records: EmbeddingRecord[] = [];
  for (let i = 0; i < count; i++) {
    const offset = i * recordSize(dim);
    const vector = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      vector[j] = body.readFloatLE(offset + 12 + 4 * j);
    }
    records.push({
      sampleId: Number(body.readBigUInt64LE(offset)),
      classId: body.readUInt32LE(offset + 8),
      vector,
    });
  }
  const manifest = JSON.parse(fs.readFileSync(manifestPath(archivePath), "utf-8"));
  validateManifest(manifest, records, dim);
  return { records, dim, manifest };
}
