import { describe, expect, it } from 'vitest';
import { decodeRle, encodeRle } from '../src/rle.js';

describe('rle codec', () => {
  it('decodes skip-first counts', () => {
    const bits = decodeRle([2, 1, 5], 4, 2);
    expect(Array.from(bits)).toEqual([0, 0, 1, 0, 0, 0, 0, 0]);
  });

  it('handles a leading zero when the mask starts set', () => {
    const bits = decodeRle([0, 4], 2, 2);
    expect(Array.from(bits)).toEqual([1, 1, 1, 1]);
  });

  it('round-trips random masks', () => {
    let seed = 12345;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) & 0x7fffffff;
      return seed / 0x7fffffff;
    };
    for (let k = 0; k < 50; k++) {
      const w = 1 + Math.floor(rand() * 40);
      const h = 1 + Math.floor(rand() * 40);
      const bits = new Uint8Array(w * h);
      const density = rand();
      for (let i = 0; i < bits.length; i++) bits[i] = rand() < density ? 1 : 0;
      const counts = encodeRle(bits);
      expect(counts.reduce((a, b) => a + b, 0)).toBe(w * h);
      expect(Array.from(decodeRle(counts, w, h))).toEqual(Array.from(bits));
    }
  });

  it('rejects counts that do not cover the raster', () => {
    expect(() => decodeRle([3], 2, 2)).toThrow(/sum/);
  });
});
