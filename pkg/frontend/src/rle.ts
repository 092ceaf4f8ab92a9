// Run-length mask codec matching the service wire format: row-major,
// alternating skip/fill counts, starting with a skip (possibly zero).

export function decodeRle(counts: number[], width: number, height: number): Uint8Array {
  const total = counts.reduce((a, b) => a + b, 0);
  if (total !== width * height) {
    throw new Error(`RLE counts sum to ${total}, expected ${width * height}`);
  }
  const bits = new Uint8Array(width * height);
  let pos = 0;
  let value = 0;
  for (const c of counts) {
    if (c < 0) throw new Error('RLE counts must be non-negative');
    if (value) bits.fill(1, pos, pos + c);
    pos += c;
    value ^= 1;
  }
  return bits;
}

export function encodeRle(bits: Uint8Array | ArrayLike<number>): number[] {
  const n = bits.length;
  const counts: number[] = [];
  let current = 0;
  let run = 0;
  for (let i = 0; i < n; i++) {
    const v = bits[i] ? 1 : 0;
    if (v === current) {
      run += 1;
    } else {
      counts.push(run);
      current = v;
      run = 1;
    }
  }
  if (n > 0) counts.push(run);
  return counts;
}
