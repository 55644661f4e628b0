"""8-bit PPM/PGM image ingestion and seeded procedural test images."""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .tensorops import bilinear_sample_many


def _read_header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First `count` whitespace-delimited tokens, skipping # comments.
    Returns the tokens and the offset just past the final separator."""
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise InputError("image header ended prematurely")
        ch = data[i:i + 1]
        if ch == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif ch.isspace():
            i += 1
        else:
            start = i
            while i < len(data) and not data[i:i + 1].isspace() and data[i:i + 1] != b"#":
                i += 1
            tokens.append(data[start:i])
    return tokens, i + 1  # single whitespace byte separates header and pixels


def read_image(path: str) -> np.ndarray:
    """Load a binary P6 PPM or P5 PGM as float32 (H, W, 3) scaled to [0, 1].

    Grayscale inputs are replicated across the three channels.
    """
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as exc:
        raise InputError(f"cannot read image {path}: {exc}") from exc
    if data[:2] not in (b"P5", b"P6"):
        raise InputError(f"{path}: unsupported image format (need binary PGM/PPM)")
    channels = 3 if data[:2] == b"P6" else 1
    tokens, offset = _read_header_tokens(data, 4)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise InputError(f"{path}: malformed header") from exc
    if maxval != 255:
        raise InputError(f"{path}: only 8-bit images supported (maxval {maxval})")
    expected = width * height * channels
    pixels = np.frombuffer(data, dtype=np.uint8, count=-1, offset=offset)
    if pixels.size < expected:
        raise InputError(f"{path}: pixel data truncated")
    img = pixels[:expected].reshape(height, width, channels).astype(np.float32) / 255.0
    if channels == 1:
        img = np.repeat(img, 3, axis=2)
    return img


def write_image(path: str, image: np.ndarray) -> None:
    """Write a float [0, 1] image as binary PPM (3 channels) or PGM (1)."""
    h, w = image.shape[:2]
    channels = image.shape[2] if image.ndim == 3 else 1
    if channels not in (1, 3):
        raise InputError(f"cannot write image with {channels} channels")
    quantized = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    magic = b"P6" if channels == 3 else b"P5"
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (w, h))
        f.write(quantized.tobytes())


OCTAVE_CELLS = (4, 8, 16, 32, 64, 128, 256)
OCTAVE_DECAY = 0.9


def procedural_image(seed: int, height: int = 480, width: int = 640) -> np.ndarray:
    """Seeded multi-scale value noise in [0, 1], replicated to 3 channels.

    Octaves run from coarse structure down to few-pixel detail with a gentle
    amplitude decay: fine enough that nearby descriptors stay distinctive,
    coarse enough that texture survives bilinear warping.
    """
    rng = np.random.default_rng(seed)
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    acc = np.zeros(height * width, dtype=np.float32)
    total = 0.0
    amplitude = 1.0
    for cells in OCTAVE_CELLS:
        grid = rng.random((cells + 1, cells + 1, 1)).astype(np.float32)
        gx = (xs.ravel() + 0.5) * (cells / width) - 0.5
        gy = (ys.ravel() + 0.5) * (cells / height) - 0.5
        acc += amplitude * bilinear_sample_many(grid, gx, gy)[:, 0]
        total += amplitude
        amplitude *= OCTAVE_DECAY
    values = (acc / total).reshape(height, width, 1)
    return np.repeat(values, 3, axis=2)
