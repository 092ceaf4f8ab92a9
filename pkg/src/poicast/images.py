"""Small PNG helpers shared by segmentation, storage, and fixtures."""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image


def load_image_rgb(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)


def save_image_rgb(path, pixels: np.ndarray) -> None:
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(path)


def load_mask_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L")) > 0


def save_mask_png(path, bits: np.ndarray) -> None:
    Image.fromarray((np.asarray(bits, dtype=bool) * np.uint8(255)), mode="L").save(path)


def encode_png_b64(pixels: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png_b64(data: str) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"))
    return np.asarray(Image.open(io.BytesIO(raw)).convert("RGB"), dtype=np.uint8)
