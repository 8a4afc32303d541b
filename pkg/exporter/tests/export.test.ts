import { execFileSync } from "child_process";
import fs from "fs";
import os from "os";
import path from "path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { runExport } from "../src/cli";
import { readArchive } from "../src/fcae";
import { SplitMix64 } from "../src/rng";

const REPO_ROOT = path.join(__dirname, "..", "..");

let tmp: string;
beforeEach(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "export-"));
});
afterEach(() => {
  fs.rmSync(tmp, { recursive: true, force: true });
});

function writeRandomTable(file: string, nClasses: number, perClass: number, dim: number) {
  const rng = new SplitMix64(2024);
  const header = ["sample_id", "class_id", ...Array.from({ length: dim }, (_, j) => `v${j}`)];
  const lines = [header.join(",")];
  let sampleId = 0;
  for (let c = 0; c < nClasses; c++) {
    for (let i = 0; i < perClass; i++) {
      const vector = Array.from({ length: dim }, () => (rng.uniform() * 2 - 1).toFixed(6));
      lines.push([sampleId++, c, ...vector].join(","));
    }
  }
  fs.writeFileSync(file, lines.join("\n") + "\n");
}

function engine(args: string[]): string {
  return execFileSync("python3", ["-m", "fscil.cli", ...args], {
    cwd: REPO_ROOT,
    encoding: "utf-8",
  });
}

describe("export command", () => {
  it("exports a table the engine validates and runs end to end", () => {
    const table = path.join(tmp, "table.csv");
    writeRandomTable(table, 100, 14, 16);
    const archive = path.join(tmp, "export.fcae");

    const code = runExport([
      "--input", table, "--out", archive,
      "--base-classes", "60", "--ways", "5", "--shots", "5", "--sessions", "9",
      "--train-per-class", "10", "--test-per-class", "4", "--seed", "3",
    ]);
    expect(code).toBe(0);

    const loaded = readArchive(archive);
    expect(loaded.records).toHaveLength(1400);
    expect(loaded.dim).toBe(16);
    expect(loaded.manifest.sessions).toHaveLength(9);

    const summary = engine(["validate", "--archive", archive]);
    expect(summary).toContain("OK");
    expect(summary).toContain("sessions  9");

    const outDir = path.join(tmp, "run");
    engine([
      "run", "--archive", archive, "--out-dir", outDir,
      "--seed", "5", "--epochs", "5", "--incremental-epochs", "10",
    ]);
    const report = JSON.parse(fs.readFileSync(path.join(outDir, "report.json"), "utf-8"));
    expect(report.records).toHaveLength(9);
    expect(report.records.map((r: { session: number }) => r.session)).toEqual(
      [0, 1, 2, 3, 4, 5, 6, 7, 8]
    );
    expect(report.aa.all).toBeGreaterThanOrEqual(0);
  });

  it("reruns with the same seed give identical session assignment", () => {
    const table = path.join(tmp, "table.csv");
    writeRandomTable(table, 20, 10, 4);
    const common = [
      "--input", table, "--base-classes", "10", "--ways", "5", "--shots", "3",
      "--sessions", "3", "--train-per-class", "6", "--test-per-class", "3",
      "--seed", "9",
    ];
    const a = path.join(tmp, "a.fcae");
    const b = path.join(tmp, "b.fcae");
    expect(runExport([...common, "--out", a])).toBe(0);
    expect(runExport([...common, "--out", b])).toBe(0);
    expect(Buffer.compare(fs.readFileSync(a), fs.readFileSync(b))).toBe(0);
  });

  it("reads a directory of vector files", () => {
    const dir = path.join(tmp, "vecs");
    fs.mkdirSync(dir);
    let sampleId = 0;
    for (let c = 0; c < 4; c++) {
      for (let i = 0; i < 6; i++) {
        fs.writeFileSync(
          path.join(dir, `${sampleId}_${c}.vec`),
          `${c + 0.5} ${i * 0.25} -1.0\n`
        );
        sampleId++;
      }
    }
    const archive = path.join(tmp, "dir.fcae");
    const code = runExport([
      "--input-dir", dir, "--out", archive,
      "--base-classes", "2", "--ways", "2", "--shots", "2", "--sessions", "2",
      "--train-per-class", "4", "--test-per-class", "2",
    ]);
    expect(code).toBe(0);
    const loaded = readArchive(archive);
    expect(loaded.records).toHaveLength(24);
    expect(loaded.dim).toBe(3);
  });

  it("embeds audio files through a user-supplied command", () => {
    const audio = path.join(tmp, "audio");
    for (const c of [0, 1]) {
      fs.mkdirSync(path.join(audio, String(c)), { recursive: true });
      for (const name of ["x.wav", "y.wav", "z.wav", "w.wav"]) {
        fs.writeFileSync(path.join(audio, String(c), name), "not really audio");
      }
    }
    // stub "model": hash the file size into a 2-dim vector
    const stub =
      `node -e "const s=require('fs').statSync(process.argv[1]).size;` +
      `console.log(s*0.1, -s*0.05)" {}`;
    const archive = path.join(tmp, "audio.fcae");
    const code = runExport([
      "--audio-dir", audio, "--embed-cmd", stub, "--out", archive,
      "--base-classes", "1", "--ways", "1", "--shots", "1", "--sessions", "2",
      "--train-per-class", "2", "--test-per-class", "1",
    ]);
    expect(code).toBe(0);
    const loaded = readArchive(archive);
    expect(loaded.records).toHaveLength(8);
    expect(loaded.dim).toBe(2);
    expect(loaded.records[0].vector[0]).toBeCloseTo(1.6, 5);
  });

  it("rejects missing inputs with a clear error", () => {
    expect(() =>
      runExport([
        "--out", path.join(tmp, "x.fcae"), "--base-classes", "1",
        "--sessions", "1", "--train-per-class", "1", "--test-per-class", "1",
      ])
    ).toThrow(/provide --input/);
  });
});
