"""Raster data types and file codecs.

2D images travel as PNG (8-bit gray or RGB) or binary PGM/PPM; volumes use
the minimal MIV1 format: one ASCII header line ``MIV1 <width> <height>
<depth>\\n`` followed by width*height*depth little-endian float32 voxels,
x-fastest, then y, then z.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionMismatch, InvalidInput, UnsupportedFormat

MIV1_MAGIC = b"MIV1"
_MIV1_HEADER = re.compile(rb"^MIV1 (\d+) (\d+) (\d+)\n")


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """2D raster, row-major, ``data`` shaped (height, width, channels)."""

    width: int
    height: int
    channels: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1 or self.channels < 1:
            raise InvalidInput("image dimensions must be positive")
        if self.data.shape != (self.height, self.width, self.channels):
            raise DimensionMismatch(
                f"data shape {self.data.shape} != "
                f"({self.height}, {self.width}, {self.channels})"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidInput("image samples must be finite")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageGrid":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, np.newaxis]
        if a.ndim != 3:
            raise InvalidInput(f"expected 2D or 3D array, got ndim={a.ndim}")
        h, w, c = a.shape
        return cls(width=w, height=h, channels=c, data=a)


@dataclass(frozen=True, eq=False)
class Volume:
    """3D raster, ``data`` shaped (depth, height, width)."""

    width: int
    height: int
    depth: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1 or self.depth < 1:
            raise InvalidInput("volume dimensions must be positive")
        if self.data.shape != (self.depth, self.height, self.width):
            raise DimensionMismatch(
                f"data shape {self.data.shape} != "
                f"({self.depth}, {self.height}, {self.width})"
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidInput("voxels must be finite")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Volume":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 3:
            raise InvalidInput(f"expected 3D array, got ndim={a.ndim}")
        d, h, w = a.shape
        return cls(width=w, height=h, depth=d, data=a)


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Per-pixel values in [0, 1], ``values`` shaped (height, width)."""

    width: int
    height: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise InvalidInput("map dimensions must be positive")
        if self.values.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"values shape {self.values.shape} != ({self.height}, {self.width})"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidInput("probabilities must be finite")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            raise InvalidInput("probabilities must lie in [0, 1]")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ProbabilityMap":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise InvalidInput(f"expected 2D array, got ndim={a.ndim}")
        return cls(width=a.shape[1], height=a.shape[0], values=a)


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary label raster; 2D when ``depth`` is None, else 3D."""

    width: int
    height: int
    labels: np.ndarray = field(repr=False)
    depth: int | None = None

    def __post_init__(self) -> None:
        expected = (
            (self.height, self.width)
            if self.depth is None
            else (self.depth, self.height, self.width)
        )
        if self.labels.shape != expected:
            raise DimensionMismatch(
                f"labels shape {self.labels.shape} != {expected}"
            )
        if self.labels.size and not np.isin(self.labels, (0, 1)).all():
            raise InvalidInput("mask labels must be 0 or 1")


# ---------------------------------------------------------------------------
# Codecs
# ---------------------------------------------------------------------------

def sniff_format(payload: bytes) -> str:
    """Return one of 'png', 'pgm', 'ppm', 'miv1'."""
    if payload.startswith(b"\x89PNG\r\n\x1a\n"):
        return "png"
    if payload.startswith(b"P5"):
        return "pgm"
    if payload.startswith(b"P6"):
        return "ppm"
    if payload.startswith(MIV1_MAGIC):
        return "miv1"
    raise UnsupportedFormat("expected PNG, binary PGM/PPM, or MIV1 payload")


def decode_image(payload: bytes) -> ImageGrid:
    """Decode PNG / binary PGM / binary PPM into an ImageGrid (0..255 samples)."""
    kind = sniff_format(payload)
    if kind == "miv1":
        raise UnsupportedFormat("payload is a MIV1 volume, not a 2D image")
    try:
        im = Image.open(io.BytesIO(payload))
        im.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise UnsupportedFormat(f"cannot decode {kind} payload: {exc}") from exc
    if im.mode not in ("L", "RGB"):
        # 8-bit gray and RGB only; normalize palettes etc. away.
        try:
            im = im.convert("RGB" if im.mode in ("P", "RGBA", "CMYK") else "L")
        except OSError as exc:
            raise UnsupportedFormat(f"unsupported image mode {im.mode}") from exc
    return ImageGrid.from_array(np.asarray(im, dtype=np.float64))


def encode_mask_pgm(mask: Mask) -> bytes:
    """2D mask as binary PGM, labels {0,1} mapped to bytes {0,255}."""
    if mask.depth is not None:
        raise InvalidInput("PGM output is for 2D masks; use MIV1 for volumes")
    arr = (mask.labels.astype(np.uint8) * 255)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PPM")
    return buf.getvalue()


def decode_volume(payload: bytes) -> Volume:
    """Parse an MIV1 payload."""
    m = _MIV1_HEADER.match(payload)
    if not m:
        raise UnsupportedFormat("missing or malformed MIV1 header")
    w, h, d = (int(m.group(i)) for i in (1, 2, 3))
    if w < 1 or h < 1 or d < 1:
        raise InvalidInput("MIV1 dimensions must be positive")
    body = payload[m.end():]
    expected = w * h * d * 4
    if len(body) != expected:
        raise UnsupportedFormat(
            f"MIV1 body is {len(body)} bytes, expected {expected}"
        )
    voxels = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return Volume(width=w, height=h, depth=d, data=voxels.reshape(d, h, w))


def encode_volume(volume: Volume) -> bytes:
    header = f"MIV1 {volume.width} {volume.height} {volume.depth}\n".encode("ascii")
    return header + volume.data.astype("<f4").tobytes()


def encode_mask_miv1(mask: Mask) -> bytes:
    """3D mask as MIV1 with voxel values 0.0 / 1.0."""
    if mask.depth is None:
        raise InvalidInput("MIV1 output is for 3D masks; use PGM for 2D")
    vol = Volume(
        width=mask.width,
        height=mask.height,
        depth=mask.depth,
        data=mask.labels.astype(np.float64),
    )
    return encode_volume(vol)


def slices_to_grids(slices: Sequence[np.ndarray]) -> list[ImageGrid]:
    return [ImageGrid.from_array(s) for s in slices]
