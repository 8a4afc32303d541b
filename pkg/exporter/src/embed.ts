/**
 * Optional embedding hook: run a user-supplied command once per audio file
 * and parse its stdout as the embedding vector.  The exporter never
 * computes embeddings itself; this keeps heavyweight models out of the
 * tool.
 *
 * Expected layout: <audioDir>/<classId>/<file>, class directories named by
 * integer id.  `{}` in the command template is replaced by the file path.
 */

import { execSync } from "child_process";
import fs from "fs";
import path from "path";

import { EmbeddingRecord } from "./fcae";
import { Table } from "./table";

export function embedDirectory(audioDir: string, commandTemplate: string): Table {
  const classDirs = fs
    .readdirSync(audioDir)
    .filter((name) => /^\d+$/.test(name))
    .sort((a, b) => Number(a) - Number(b));
  if (classDirs.length === 0) {
    throw new Error(`${audioDir} has no integer-named class directories`);
  }
  const records: EmbeddingRecord[] = [];
  let dim = -1;
  let sampleId = 0;
  for (const classDir of classDirs) {
    const classId = Number(classDir);
    const files = fs.readdirSync(path.join(audioDir, classDir)).sort();
    for (const file of files) {
      const target = path.join(audioDir, classDir, file);
      const command = commandTemplate.includes("{}")
        ? commandTemplate.replaceAll("{}", JSON.stringify(target))
        : `${commandTemplate} ${JSON.stringify(target)}`;
      const stdout = execSync(command, { encoding: "utf-8" });
      const values = stdout
        .split(/[\s,]+/)
        .filter((token) => token.length > 0)
        .map(Number);
      if (values.length === 0 || values.some((v) => !Number.isFinite(v))) {
        throw new Error(`embedding command produced no usable vector for ${target}`);
      }
      if (dim === -1) dim = values.length;
      if (values.length !== dim) {
        throw new Error(`${target} embedded to ${values.length} values, expected ${dim}`);
      }
      records.push({ sampleId: sampleId++, classId, vector: Float64Array.from(values) });
    }
  }
  return { records, dim };
}
