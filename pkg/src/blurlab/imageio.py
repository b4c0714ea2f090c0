"""Image loading and saving.

PNG and JPEG go through Pillow with 8-bit quantization at the file boundary;
everything in memory is float32 in [0, 1], shape (H, W) or (H, W, 3) with
interleaved channels. The raw "BFI1" container stores buffers losslessly
(magic, u32 LE width/height/channels/dtype, row-major payload; dtype 0 is
float32 LE, dtype 1 is uint8) so external processes can exchange images with
the core bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_MAGIC = b"BFI1"
RAW_SUFFIX = ".bfi"

_DTYPE_F32 = 0
_DTYPE_U8 = 1


class ImageFormatError(ValueError):
    """Bytes do not follow the BFI1 layout."""


def u8_to_float(data: np.ndarray) -> np.ndarray:
    return data.astype(np.float32) / np.float32(255.0)


def float_to_u8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)


def image_to_bytes(img: np.ndarray) -> bytes:
    if img.ndim == 2:
        h, w, c = *img.shape, 1
    elif img.ndim == 3:
        h, w, c = img.shape
    else:
        raise ValueError("image must be (H, W) or (H, W, C)")
    if img.dtype == np.uint8:
        dtype, payload = _DTYPE_U8, img.tobytes()
    else:
        dtype, payload = _DTYPE_F32, img.astype("<f4").tobytes()
    return IMAGE_MAGIC + struct.pack("<IIII", w, h, c, dtype) + payload


def image_from_bytes(data: bytes) -> np.ndarray:
    """Decode a BFI1 buffer to float32 in [0, 1]."""
    if len(data) < 20 or data[:4] != IMAGE_MAGIC:
        raise ImageFormatError("missing BFI1 magic")
    w, h, c, dtype = struct.unpack_from("<IIII", data, 4)
    count = w * h * c
    if dtype == _DTYPE_F32:
        expected = 20 + 4 * count
        if len(data) != expected:
            raise ImageFormatError(f"expected {expected} bytes, got {len(data)}")
        img = np.frombuffer(data, dtype="<f4", offset=20, count=count).astype(np.float32)
    elif dtype == _DTYPE_U8:
        expected = 20 + count
        if len(data) != expected:
            raise ImageFormatError(f"expected {expected} bytes, got {len(data)}")
        img = u8_to_float(np.frombuffer(data, dtype=np.uint8, offset=20, count=count))
    else:
        raise ImageFormatError(f"unknown dtype tag {dtype}")
    img = img.reshape(h, w, c)
    return img[:, :, 0] if c == 1 else img


def load_image(path) -> np.ndarray:
    """Read PNG/JPEG/BFI1 into a float32 [0, 1] array."""
    path = Path(path)
    if path.suffix.lower() == RAW_SUFFIX:
        return image_from_bytes(path.read_bytes())
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            im = im.convert("L")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        return u8_to_float(np.asarray(im))


def save_image(path, img: np.ndarray) -> None:
    """Write PNG/JPEG (8-bit quantized) or BFI1 (lossless float32)."""
    path = Path(path)
    if path.suffix.lower() == RAW_SUFFIX:
        path.write_bytes(image_to_bytes(np.asarray(img, dtype=np.float32)))
        return
    data = float_to_u8(np.asarray(img))
    mode = "L" if data.ndim == 2 else "RGB"
    Image.fromarray(data, mode=mode).save(path)
