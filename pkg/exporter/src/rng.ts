/**
 * Counter-based deterministic random streams.
 *
 * Bit-identical to the Python toolkit's generator (SplitMix64 output function
 * over a Weyl sequence), so exporter runs are reproducible and cross-checkable:
 *
 *   GAMMA   = 0x9E3779B97F4A7C15
 *   mix(x)  : x ^= x >> 30; x *= 0xBF58476D1CE4E5B9;
 *             x ^= x >> 27; x *= 0x94D049BB133111EB;
 *             x ^= x >> 31                   (all mod 2^64)
 *   s0      = mix(seed + GAMMA)
 *   base    = mix(s0 + GAMMA * (stream + 1))
 *   word(k) = mix(base + GAMMA * (k + 1))
 *
 * Uniforms take the top 53 bits: u = (word >> 11 + 0.5) / 2^53, strictly
 * inside (0, 1).
 */

const MASK = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

export function mix64(x: bigint): bigint {
  x &= MASK;
  x = ((x ^ (x >> 30n)) * MIX1) & MASK;
  x = ((x ^ (x >> 27n)) * MIX2) & MASK;
  return (x ^ (x >> 31n)) & MASK;
}

export class CounterRng {
  private readonly base: bigint;

  constructor(seed: number | bigint, stream: number | bigint = 0) {
    const s0 = mix64((BigInt(seed) + GAMMA) & MASK);
    this.base = mix64((s0 + GAMMA * (BigInt(stream) + 1n)) & MASK);
  }

  word(counter: number): bigint {
    return mix64((this.base + GAMMA * (BigInt(counter) + 1n)) & MASK);
  }

  /** Uniform double strictly inside (0, 1) at the given counter. */
  uniform(counter: number): number {
    const top53 = Number(this.word(counter) >> 11n);
    return (top53 + 0.5) * 2 ** -53;
  }

  /** Integer uniform on [0, bound) at the given counter. */
  integer(counter: number, bound: number): number {
    if (bound <= 0) throw new Error("bound must be positive");
    return Math.min(Math.floor(this.uniform(counter) * bound), bound - 1);
  }
}

/** A stateful view over one stream: hands out consecutive counters. */
export class StreamCursor {
  private rng: CounterRng;
  private at = 0;

  constructor(seed: number | bigint, stream: number | bigint) {
    this.rng = new CounterRng(seed, stream);
  }

  uniform(): number {
    return this.rng.uniform(this.at++);
  }

  integer(bound: number): number {
    return Math.min(Math.floor(this.uniform() * bound), bound - 1);
  }
}
