// S1: the mask overlay must be pixel-exact against the service RLE.

import { describe, expect, it } from 'vitest';
import { MASK_COLOR, clickPolarity, overlayPixels } from '../src/overlay.js';
import { decodeRle, encodeRle } from '../src/rle.js';

function randomMask(w: number, h: number, seedInit: number): Uint8Array {
  let seed = seedInit;
  const rand = () => {
    seed = (seed * 48271) % 2147483647;
    return seed / 2147483647;
  };
  const bits = new Uint8Array(w * h);
  for (let i = 0; i < bits.length; i++) bits[i] = rand() < 0.37 ? 1 : 0;
  return bits;
}

describe('mask overlay', () => {
  it('is pixel-equal to the decoded RLE', () => {
    const w = 31;
    const h = 23;
    const bits = randomMask(w, h, 7);
    const counts = encodeRle(bits);
    const rgba = overlayPixels(counts, w, h);
    const reference = decodeRle(counts, w, h);
    expect(rgba.length).toBe(w * h * 4);
    for (let i = 0; i < w * h; i++) {
      const alpha = rgba[i * 4 + 3];
      if (reference[i]) {
        expect(alpha).toBe(MASK_COLOR.a);
        expect(rgba[i * 4]).toBe(MASK_COLOR.r);
        expect(rgba[i * 4 + 1]).toBe(MASK_COLOR.g);
        expect(rgba[i * 4 + 2]).toBe(MASK_COLOR.b);
      } else {
        expect(alpha).toBe(0);
      }
    }
  });
});

describe('prompt polarity rule', () => {
  it('clicking the masked region adds a negative point', () => {
    const w = 10;
    const bits = new Uint8Array(10 * 10);
    bits[5 * w + 4] = 1;
    expect(clickPolarity(bits, w, 4.6, 5.2)).toBe('negative');
  });

  it('clicking outside the mask adds a positive point', () => {
    const w = 10;
    const bits = new Uint8Array(10 * 10);
    bits[5 * w + 4] = 1;
    expect(clickPolarity(bits, w, 8.1, 2.9)).toBe('positive');
  });

  it('is positive before any mask exists', () => {
    expect(clickPolarity(null, 10, 3, 3)).toBe('positive');
  });
});
