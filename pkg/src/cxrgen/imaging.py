"""Radiograph decoding and preprocessing.

Every input image ends up as a normalized 128x128 grayscale raster plus
three 64x128 lung segments:

    I   rows [0, 64)    upper part
    II  rows [64, 128)  lower part
    III rows [32, 96)   middle part

Pipeline order is fixed: decode -> grayscale -> center square crop ->
bilinear resize to 128x128 -> slice segments.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import MalformedImage, UnsupportedFormat, WrongDimensions

FULL_SIZE = 128
SEGMENT_ROWS = 64


@dataclass(frozen=True)
class RawImage:
    """Decoded 8-bit pixels, shape (height, width, channels), uint8."""

    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class GrayImage:
    """Normalized grayscale raster, shape (height, width), float64 in [0,1]."""

    pixels: np.ndarray

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Segment:
    tag: str
    row_start: int
    row_stop: int


SEGMENT_I = Segment("I", 0, 64)
SEGMENT_II = Segment("II", 64, 128)
SEGMENT_III = Segment("III", 32, 96)

SEGMENTS = {"I": SEGMENT_I, "II": SEGMENT_II, "III": SEGMENT_III}


@dataclass(frozen=True)
class PreprocessOutput:
    full: GrayImage
    seg1: GrayImage
    seg2: GrayImage
    seg3: GrayImage


def _decode_pgm(data: bytes) -> RawImage:
    if not data.startswith(b"P5"):
        raise MalformedImage("not a binary PGM (missing P5 magic)")
    # header: P5 <width> <height> <maxval>, '#' comments allowed
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MalformedImage("truncated PGM header")
        fields.append(data[start:pos])
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedImage("truncated PGM header")
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(f) for f in fields)
    except ValueError as exc:
        raise MalformedImage(f"bad PGM header field: {exc}") from exc
    if width < 1 or height < 1:
        raise MalformedImage("non-positive PGM dimensions")
    if maxval != 255:
        raise UnsupportedFormat(f"PGM maxval {maxval}, only 8-bit (255) supported")
    expected = width * height
    raster = data[pos : pos + expected]
    if len(raster) < expected:
        raise MalformedImage("PGM raster truncated")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 1)
    return RawImage(pixels.copy())


def _decode_png(data: bytes) -> RawImage:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise MalformedImage(f"cannot decode PNG: {exc}") from exc
    if img.format != "PNG":
        raise MalformedImage(f"expected PNG, got {img.format}")
    if img.mode == "L":
        pixels = np.asarray(img, dtype=np.uint8)[:, :, np.newaxis]
    elif img.mode == "RGB":
        pixels = np.asarray(img, dtype=np.uint8)
    else:
        # palette, alpha, 1-bit and 16-bit modes are all rejected
        raise UnsupportedFormat(f"PNG mode {img.mode!r} not supported (8-bit gray/RGB only)")
    return RawImage(pixels.copy())


def decode_image(data: bytes, fmt: str) -> RawImage:
    """Decode 8-bit PNG (gray/RGB) or binary PGM (P5, maxval 255) bytes."""
    if fmt == "pgm":
        return _decode_pgm(data)
    if fmt == "png":
        return _decode_png(data)
    raise UnsupportedFormat(f"unknown format {fmt!r}")


def sniff_format(data: bytes) -> str:
    """Guess png/pgm from magic bytes; MalformedImage if neither."""
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return "png"
    if data.startswith(b"P5"):
        return "pgm"
    raise MalformedImage("unrecognized image magic (expected PNG or PGM P5)")


_LUMA = np.array([0.299, 0.587, 0.114])


def to_gray(img: RawImage) -> GrayImage:
    """Normalize to [0,1]; RGB collapsed with Rec.601 luma."""
    if img.channels == 1:
        gray = img.pixels[:, :, 0] / 255.0
    elif img.channels == 3:
        gray = img.pixels @ _LUMA / 255.0
    else:
        raise UnsupportedFormat(f"{img.channels}-channel images not supported")
    return GrayImage(gray)


def center_square_crop(img: GrayImage) -> GrayImage:
    s = min(img.width, img.height)
    y0 = (img.height - s) // 2
    x0 = (img.width - s) // 2
    return GrayImage(img.pixels[y0 : y0 + s, x0 : x0 + s].copy())


def resize_bilinear(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Bilinear resampling with half-pixel-center mapping.

    src = (dst + 0.5) * scale - 0.5, clamped to [0, dim-1]; interpolation
    of values in [0,1] cannot overshoot.
    """
    if out_w < 1 or out_h < 1:
        raise WrongDimensions("output dimensions must be >= 1")
    src = img.pixels
    h, w = src.shape
    if (out_w, out_h) == (w, h):
        return GrayImage(src.copy())

    sy = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, np.newaxis]
    fx = (sx - x0)[np.newaxis, :]

    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    return GrayImage(top * (1 - fy) + bot * fy)


def slice_segment(img: GrayImage, seg: Segment) -> GrayImage:
    if (img.height, img.width) != (FULL_SIZE, FULL_SIZE):
        raise WrongDimensions(
            f"segments are sliced from a {FULL_SIZE}x{FULL_SIZE} image, got {img.height}x{img.width}"
        )
    return GrayImage(img.pixels[seg.row_start : seg.row_stop].copy())


def preprocess(data: bytes, fmt: str | None = None) -> PreprocessOutput:
    """Full deterministic pipeline from encoded bytes to segments."""
    if fmt is None:
        fmt = sniff_format(data)
    raw = decode_image(data, fmt)
    gray = to_gray(raw)
    square = center_square_crop(gray)
    full = resize_bilinear(square, FULL_SIZE, FULL_SIZE)
    return PreprocessOutput(
        full=full,
        seg1=slice_segment(full, SEGMENT_I),
        seg2=slice_segment(full, SEGMENT_II),
        seg3=slice_segment(full, SEGMENT_III),
    )


def encode_pgm(img: GrayImage) -> bytes:
    """P5 maxval-255 encoding, sample = round(value * 255)."""
    samples = np.rint(img.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + samples.tobytes()
