"""Run-length codec for binary masks crossing the wire.

Row-major, alternating skip/fill counts, starting with a skip (which may be
zero when the mask begins set). Counts always sum to width*height.
"""

from __future__ import annotations

import numpy as np


def encode_mask(bits: np.ndarray) -> list[int]:
    flat = np.asarray(bits).astype(bool).reshape(-1)
    if flat.size == 0:
        return []
    change = np.nonzero(flat[1:] != flat[:-1])[0] + 1
    starts = np.concatenate([[0], change, [flat.size]])
    counts = np.diff(starts).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return [int(c) for c in counts]


def decode_mask(counts: list[int], width: int, height: int) -> np.ndarray:
    total = sum(counts)
    if total != width * height:
        raise ValueError(f"RLE counts sum to {total}, expected {width * height}")
    if any(c < 0 for c in counts):
        raise ValueError("RLE counts must be non-negative")
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        if value:
            flat[pos:pos + c] = True
        pos += c
        value = not value
    return flat.reshape(height, width)
