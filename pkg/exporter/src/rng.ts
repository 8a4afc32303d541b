/**
 * Deterministic RNG for split assignment: SplitMix64 in counter mode.
 * Output i of a stream with seed s is mix64(s + (i+1) * GOLDEN) mod 2^64.
 */

const MASK = 0xffffffffffffffffn;
const GOLDEN = 0x9e3779b97f4a7c15n;

function mix64(z: bigint): bigint {
  z = (z ^ (z >> 30n)) & MASK;
  z = (z * 0xbf58476d1ce4e5b9n) & MASK;
  z = (z ^ (z >> 27n)) & MASK;
  z = (z * 0x94d049bb133111ebn) & MASK;
  return (z ^ (z >> 31n)) & MASK;
}

export function fnv1a64(data: Buffer): bigint {
  let h = 0xcbf29ce484222325n;
  for (const b of data) {
    h = ((h ^ BigInt(b)) * 0x100000001b3n) & MASK;
  }
  return h;
}

export class SplitMix64 {
  seed: bigint;
  counter: bigint;

  constructor(seed: bigint | number, counter: bigint | number = 0n) {
    this.seed = BigInt(seed) & MASK;
    this.counter = BigInt(counter);
  }

  next(): bigint {
    this.counter += 1n;
    return mix64((this.seed + this.counter * GOLDEN) & MASK);
  }

  /** double in [0, 1) from the top 53 bits */
  uniform(): number {
    return Number(this.next() >> 11n) / 2 ** 53;
  }

  spawn(label: string): SplitMix64 {
    const hash = fnv1a64(Buffer.from(label, "utf-8"));
    return new SplitMix64(mix64(((this.seed ^ hash) + GOLDEN) & MASK));
  }

  /** Fisher-Yates shuffled copy */
  shuffled<T>(items: readonly T[]): T[] {
    const out = items.slice();
    for (let i = out.length - 1; i > 0; i--) {
      const j = Math.min(Math.floor(this.uniform() * (i + 1)), i);
      [out[i], out[j]] = [out[j], out[i]];
    }
    return out;
  }
}
