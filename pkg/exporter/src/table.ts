/**
 * Input readers: a columnar CSV table (`sample_id,class_id,v0..v{d-1}`,
 * header required) or a directory of per-sample vector files named
 * `<sample_id>_<class_id>.vec` holding whitespace- or comma-separated
 * values.
 */

import fs from "fs";
import path from "path";

import { EmbeddingRecord } from "./fcae";

export interface Table {
  records: EmbeddingRecord[];
  dim: number;
}

export function parseCsvTable(text: string): Table {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) throw new Error("input table is empty");
  const header = lines[0].split(",").map((cell) => cell.trim());
  if (header[0] !== "sample_id" || header[1] !== "class_id") {
    throw new Error("header must start with sample_id,class_id");
  }
  const dim = header.length - 2;
  if (dim < 1) throw new Error("table has no vector columns");
  for (let j = 0; j < dim; j++) {
    if (header[2 + j] !== `v${j}`) {
      throw new Error(`expected column v${j}, found ${header[2 + j]}`);
    }
  }
  const records: EmbeddingRecord[] = [];
  const seen = new Set<number>();
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== header.length) {
      throw new Error(`row ${i} has ${cells.length} cells, expected ${header.length}`);
    }
    const sampleId = Number(cells[0]);
    const classId = Number(cells[1]);
    if (!Number.isInteger(sampleId) || !Number.isInteger(classId)) {
      throw new Error(`row ${i} has non-integer ids`);
    }
    if (seen.has(sampleId)) throw new Error(`duplicate sample id ${sampleId}`);
    seen.add(sampleId);
    const vector = new Float64Array(dim);
    for (let j = 0; j < dim; j++) {
      const value = Number(cells[2 + j]);
      if (!Number.isFinite(value)) {
        throw new Error(`row ${i} column v${j} is not a finite number`);
      }
      vector[j] = value;
    }
    records.push({ sampleId, classId, vector });
  }
  return { records, dim };
}

export function readCsvTable(file: string): Table {
  return parseCsvTable(fs.readFileSync(file, "utf-8"));
}

export function readVectorDir(dir: string): Table {
  const files = fs
    .readdirSync(dir)
    .filter((name) => name.endsWith(".vec"))
    .sort();
  if (files.length === 0) throw new Error(`no .vec files in ${dir}`);
  const records: EmbeddingRecord[] = [];
  let dim = -1;
  for (const name of files) {
    const match = /^(\d+)_(\d+)\.vec$/.exec(name);
    if (!match) throw new Error(`cannot parse ids from filename ${name}`);
    const values = fs
      .readFileSync(path.join(dir, name), "utf-8")
      .split(/[\s,]+/)
      .filter((token) => token.length > 0)
      .map(Number);
    if (values.some((value) => !Number.isFinite(value))) {
      throw new Error(`${name} contains non-finite values`);
    }
    if (dim === -1) dim = values.length;
    if (values.length !== dim) {
      throw new Error(`${name} has ${values.length} values, expected ${dim}`);
    }
    records.push({
      sampleId: Number(match[1]),
      classId: Number(match[2]),
      vector: Float64Array.from(values),
    });
  }
  return { records, dim };
}
