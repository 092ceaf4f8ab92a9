// Mask overlay pixels. The server's mask is authoritative: the overlay is a
// pure function of the returned RLE, never a local prediction.

import { decodeRle } from './rle.js';

export interface OverlayColor {
  r: number;
  g: number;
  b: number;
  a: number; // 0..255 applied where the mask is set
}

export const MASK_COLOR: OverlayColor = { r: 255, g: 140, b: 0, a: 110 };

/** RGBA bytes for a mask overlay; transparent wherever the mask is unset. */
export function overlayPixels(
  counts: number[],
  width: number,
  height: number,
  color: OverlayColor = MASK_COLOR,
): Uint8ClampedArray<ArrayBuffer> {
  const bits = decodeRle(counts, width, height);
  const out = new Uint8ClampedArray(new ArrayBuffer(width * height * 4));
  for (let i = 0; i < bits.length; i++) {
    if (bits[i]) {
      const o = i * 4;
      out[o] = color.r;
      out[o + 1] = color.g;
      out[o + 2] = color.b;
      out[o + 3] = color.a;
    }
  }
  return out;
}

/**
 * The click rule: a click on a masked pixel negates, on an unmasked pixel
 * affirms. With no mask yet, every click is positive.
 */
export function clickPolarity(
  mask: Uint8Array | null,
  width: number,
  u: number,
  v: number,
): 'positive' | 'negative' {
  if (!mask) return 'positive';
  const col = Math.floor(u);
  const row = Math.floor(v);
  return mask[row * width + col] ? 'negative' : 'positive';
}
