#!/usr/bin/env node
/**
 * fcae-export: turn a columnar embedding table (or a directory of vector
 * files, or an audio tree plus an embedding command) into an FCAE archive
 * with a session-split manifest.
 */

import path from "path";
import yargs from "yargs";
import { embedDirectory } from "./embed";
import { writeArchive } from "./fcae";
import { SplitRecipe, buildManifest, requiredClasses } from "./split";
import { Table, readCsvTable, readVectorDir } from "./table";

export function runExport(argv: string[]): number {
  const args = yargs(argv)
    .usage("fcae-export --input table.csv --out archive.fcae [options]")
    .option("input", { type: "string", describe: "columnar csv table" })
    .option("input-dir", { type: "string", describe: "directory of <id>_<class>.vec files" })
    .option("audio-dir", { type: "string", describe: "audio tree <class>/<file> for --embed-cmd" })
    .option("embed-cmd", {
      type: "string",
      describe: "command run per audio file; {} expands to the file path",
    })
    .option("out", { type: "string", demandOption: true })
    .option("base-classes", { type: "number", demandOption: true })
    .option("ways", { type: "number", default: 5 })
    .option("shots", { type: "number", default: 5 })
    .option("sessions", { type: "number", demandOption: true, describe: "total sessions incl. base" })
    .option("train-per-class", { type: "number", demandOption: true, describe: "base-session train samples per class" })
    .option("test-per-class", { type: "number", demandOption: true })
    .option("seed", { type: "number", default: 0 })
    .option("provenance", { type: "string", default: "" })
    .strict()
    .exitProcess(false)
    .parseSync();

  let table: Table;
  let source: string;
  if (args.input) {
    table = readCsvTable(args.input);
    source = `csv ${path.basename(args.input)}`;
  } else if (args["input-dir"]) {
    table = readVectorDir(args["input-dir"]);
    source = `vector dir ${path.basename(args["input-dir"])}`;
  } else if (args["audio-dir"] && args["embed-cmd"]) {
    table = embedDirectory(args["audio-dir"], args["embed-cmd"]);
    source = `audio dir ${path.basename(args["audio-dir"])} via embed command`;
  } else {
    throw new Error("provide --input, --input-dir, or --audio-dir with --embed-cmd");
  }

  const recipe: SplitRecipe = {
    baseClasses: args["base-classes"],
    nWay: args.ways,
    kShot: args.shots,
    sessions: args.sessions,
    trainPerClass: args["train-per-class"],
    testPerClass: args["test-per-class"],
    seed: args.seed,
  };
  const provenance =
    args.provenance ||
    `${source}, split base=${recipe.baseClasses} ways=${recipe.nWay} ` +
      `shots=${recipe.kShot} sessions=${recipe.sessions} seed=${recipe.seed}`;
  const manifest = buildManifest(table.records, table.dim, recipe, provenance);
  const assigned = requiredClasses(recipe);
  writeArchive(table.records, table.dim, manifest, args.out);
  console.log(
    `wrote ${args.out}: ${table.records.length} records, dim ${table.dim}, ` +
      `${manifest.sessions.length} sessions covering ${assigned} classes`
  );
  return 0;
}

if (require.main === module) {
  try {
    process.exitCode = runExport(process.argv.slice(2));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exitCode = 1;
  }
}
