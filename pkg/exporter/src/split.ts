/**
 * Session-split assignment: base classes first, then nWay classes per
 * incremental session, deterministic under the seed.  Per class, shuffled
 * sample ids fill the train quota (trainPerClass for base classes, kShot
 * for incremental ones) and then the test quota.
 */

import { EmbeddingRecord, Manifest, SessionSplit, VERSION } from "./fcae";
import { SplitMix64 } from "./rng";

export interface SplitRecipe {
  baseClasses: number;
  nWay: number;
  kShot: number;
  sessions: number; // total, including the base session
  trainPerClass: number; // base-session train samples per class
  testPerClass: number;
  seed: number;
}

export function requiredClasses(recipe: SplitRecipe): number {
  return recipe.baseClasses + (recipe.sessions - 1) * recipe.nWay;
}

export function planSessions(
  records: EmbeddingRecord[],
  recipe: SplitRecipe
): { sessions: SessionSplit[]; assignedClasses: number[][] } {
  if (recipe.sessions < 1 || recipe.baseClasses < 1) {
    throw new Error("recipe needs at least one session and one base class");
  }
  if (recipe.nWay < 1 || recipe.kShot < 1) {
    throw new Error("nWay and kShot must be positive");
  }
  const byClass = new Map<number, number[]>();
  for (const record of records) {
    const ids = byClass.get(record.classId) ?? [];
    ids.push(record.sampleId);
    byClass.set(record.classId, ids);
  }

  const classIds = [...byClass.keys()].sort((a, b) => a - b);
  const needed = requiredClasses(recipe);
  const deficits: string[] = [];
  if (classIds.length < needed) {
    deficits.push(`need ${needed} classes, inventory has ${classIds.length}`);
  }

  const rng = new SplitMix64(recipe.seed);
  const shuffled = rng.spawn("class-order").shuffled(classIds);
  const assignedClasses: number[][] = [];
  assignedClasses.push(shuffled.slice(0, recipe.baseClasses));
  for (let m = 1; m < recipe.sessions; m++) {
    const start = recipe.baseClasses + (m - 1) * recipe.nWay;
    assignedClasses.push(shuffled.slice(start, start + recipe.nWay));
  }

  const sessions: SessionSplit[] = [];
  assignedClasses.forEach((classes, m) => {
    const trainNeed = m === 0 ? recipe.trainPerClass : recipe.kShot;
    const split: SessionSplit = { train: [], test: [] };
    for (const classId of classes) {
      const pool = (byClass.get(classId) ?? []).slice().sort((a, b) => a - b);
      if (pool.length < trainNeed + recipe.testPerClass) {
        deficits.push(
          `class ${classId} has ${pool.length} samples, session ${m} needs ` +
            `${trainNeed} train + ${recipe.testPerClass} test`
        );
        continue;
      }
      const order = rng.spawn(`class-${classId}`).shuffled(pool);
      split.train.push(...order.slice(0, trainNeed));
      split.test.push(...order.slice(trainNeed, trainNeed + recipe.testPerClass));
    }
    sessions.push(split);
  });

  if (deficits.length > 0) {
    throw new Error(`recipe infeasible:\n  ${deficits.join("\n  ")}`);
  }
  return { sessions, assignedClasses };
}

export function buildManifest(
  records: EmbeddingRecord[],
  dim: number,
  recipe: SplitRecipe,
  provenance: string
): Manifest {
  const { sessions, assignedClasses } = planSessions(records, recipe);
  const classes: Record<string, string> = {};
  for (const group of assignedClasses) {
    for (const classId of group) {
      classes[String(classId)] = `class_${classId}`;
    }
  }
  return { version: VERSION, dim, classes, sessions, provenance };
}
