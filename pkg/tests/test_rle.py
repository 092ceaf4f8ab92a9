import numpy as np
import pytest

from poicast.rle import decode_mask, encode_mask


def test_starts_with_skip():
    bits = np.zeros((2, 4), dtype=bool)
    bits[0, 2] = True
    assert encode_mask(bits) == [2, 1, 5]


def test_leading_zero_when_mask_starts_set():
    bits = np.ones((2, 2), dtype=bool)
    assert encode_mask(bits) == [0, 4]


def test_counts_sum_to_pixel_count():
    rng = np.random.default_rng(0)
    bits = rng.uniform(size=(13, 17)) < 0.4
    counts = encode_mask(bits)
    assert sum(counts) == 13 * 17


def test_roundtrip_random_masks():
    rng = np.random.default_rng(1)
    for _ in range(50):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        bits = rng.uniform(size=(h, w)) < rng.uniform(0.05, 0.95)
        counts = encode_mask(bits)
        assert np.array_equal(decode_mask(counts, w, h), bits)


def test_decode_validates_totals():
    with pytest.raises(ValueError):
        decode_mask([3, 2], 2, 2)
    with pytest.raises(ValueError):
        decode_mask([-1, 5], 2, 2)


def test_empty_mask():
    bits = np.zeros((3, 3), dtype=bool)
    assert encode_mask(bits) == [9]
    assert not decode_mask([9], 3, 3).any()
