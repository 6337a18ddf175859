"""PNG helpers and mask rasterization used by the generation engine and mocks."""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .errors import ValidationError

# Mask convention: single-channel PNG, 0 = keep, 255 = edit region.
MASK_SET = 255


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an HxW (grayscale) or HxWx3 (RGB) uint8 array as PNG bytes."""
    if pixels.dtype != np.uint8:
        pixels = pixels.astype(np.uint8)
    mode = "L" if pixels.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(pixels, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a uint8 array (HxW for grayscale, HxWx3 otherwise)."""
    img = Image.open(io.BytesIO(data))
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def png_dimensions(data: bytes) -> tuple[int, int]:
    """(width, height) of an encoded image."""
    return Image.open(io.BytesIO(data)).size


def is_png(data: bytes) -> bool:
    return data[:8] == b"\x89PNG\r\n\x1a\n"


def blank_mask(width: int, height: int) -> np.ndarray:
    return np.zeros((height, width), dtype=np.uint8)


def boxes_to_mask(boxes: list[tuple[int, int, int, int]], width: int, height: int) -> bytes:
    """Rasterize bounding boxes into a binary mask PNG.

    Boxes use inclusive pixel corners: (x0, y0, x1, y1) sets pixels
    x0..x1 and y0..y1. Boxes are clamped to the image bounds; a box that
    is empty after clamping (or was inverted to begin with) is dropped.
    Raises ValidationError when no box survives - the caller treats that
    as a cascade-stage failure.
    """
    if width <= 0 or height <= 0:
        raise ValidationError(f"mask dimensions must be positive, got {width}x{height}")
    mask = blank_mask(width, height)
    kept = 0
    for box in boxes:
        x0, y0, x1, y1 = (int(v) for v in box)
        if x1 < x0 or y1 < y0:
            continue
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(width - 1, x1), min(height - 1, y1)
        if x1 < x0 or y1 < y0:
            continue
        mask[y0 : y1 + 1, x0 : x1 + 1] = MASK_SET
        kept += 1
    if kept == 0:
        raise ValidationError("all bounding boxes degenerate after clamping")
    return encode_png(mask)


def mask_set_pixel_count(mask_png: bytes) -> int:
    return int(np.count_nonzero(decode_png(mask_png)))


def mask_matches_image(mask_png: bytes, image_png: bytes) -> bool:
    return png_dimensions(mask_png) == png_dimensions(image_png)
