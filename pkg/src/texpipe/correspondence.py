"""Raster types exchanged with external parsing models.

Three co-registered rasters move through the pipeline: RGB frames,
dense-correspondence maps (per-pixel part id + intra-part UV), and binary
human masks. Frames travel as 8-bit RGB PNG; correspondence maps travel in
the IUV1 binary container defined here:

    magic  "IUV1"                       4 bytes
    width  u32 little-endian            4 bytes
    height u32 little-endian            4 bytes
    per pixel, row-major:
        partId u8   (0 = background, 1..24 = body part)
        u      u16 little-endian        fraction = stored / 65535
        v      u16 little-endian

UV values are 16-bit fixed point; writers store u = v = 0 for background
pixels and readers normalize any stray nonzero background UV to zero, so a
valid map round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import (
    BadMagic,
    DimensionZero,
    PartIdOutOfRange,
    TruncatedPayload,
)

PART_COUNT = 24
UV_SCALE = 65535  # max of the 16-bit fixed-point fraction

_IUV_MAGIC = b"IUV1"
_IUV_HEADER = struct.Struct("<4sII")
_IUV_PIXEL = np.dtype([("part", "u1"), ("u", "<u2"), ("v", "<u2")])


@dataclass(frozen=True)
class Frame:
    """8-bit RGB raster, shape (height, width, 3), row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError(f"frame pixels must be (h, w, 3) uint8, got {px.shape} {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise DimensionZero("frame dimensions must be >= 1")
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class DenseCorrespondenceMap:
    """Per-pixel (partId, u, v) raster; UV stored as 16-bit fixed point.

    partId 0 marks background and forces u = v = 0; construction
    normalizes the UV planes accordingly.
    """

    part_id: np.ndarray  # (h, w) uint8, values 0..24
    u: np.ndarray        # (h, w) uint16
    v: np.ndarray        # (h, w) uint16

    def __post_init__(self):
        pid, u, v = self.part_id, self.u, self.v
        if pid.ndim != 2:
            raise ValueError("part_id must be 2-D")
        if pid.shape != u.shape or pid.shape != v.shape:
            raise ValueError("part_id, u, v must share one shape")
        if pid.dtype != np.uint8 or u.dtype != np.uint16 or v.dtype != np.uint16:
            raise ValueError("expected part_id uint8 and u, v uint16")
        if pid.shape[0] < 1 or pid.shape[1] < 1:
            raise DimensionZero("map dimensions must be >= 1")
        if pid.max(initial=0) > PART_COUNT:
            raise PartIdOutOfRange(f"partId {int(pid.max())} exceeds {PART_COUNT}")
        bg = pid == 0
        if (u[bg].any() or v[bg].any()):
            u = u.copy()
            v = v.copy()
            u[bg] = 0
            v[bg] = 0
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "v", v)
        for plane in (self.part_id, self.u, self.v):
            plane.setflags(write=False)

    @property
    def width(self) -> int:
        return self.part_id.shape[1]

    @property
    def height(self) -> int:
        return self.part_id.shape[0]

    def u_fraction(self) -> np.ndarray:
        """UV columns as float fractions in [0, 1]."""
        return self.u.astype(np.float64) / UV_SCALE

    def v_fraction(self) -> np.ndarray:
        return self.v.astype(np.float64) / UV_SCALE


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel foreground flags, shape (height, width) bool."""

    mask: np.ndarray

    def __post_init__(self):
        if self.mask.ndim != 2 or self.mask.dtype != np.bool_:
            raise ValueError("mask must be a 2-D bool array")
        self.mask.setflags(write=False)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    def popcount(self) -> int:
        return int(self.mask.sum())


def map_from_fractions(part_id: np.ndarray, u: np.ndarray, v: np.ndarray) -> DenseCorrespondenceMap:
    """Quantize float UV fractions in [0, 1] to the fixed-point map type."""
    uq = np.floor(np.clip(u, 0.0, 1.0) * UV_SCALE + 0.5).astype(np.uint16)
    vq = np.floor(np.clip(v, 0.0, 1.0) * UV_SCALE + 0.5).astype(np.uint16)
    return DenseCorrespondenceMap(part_id.astype(np.uint8), uq, vq)


def read_iuv(data: bytes) -> DenseCorrespondenceMap:
    """Parse an IUV1 byte sequence.

    Raises BadMagic, TruncatedPayload (payload length disagrees with the
    header, short or long), DimensionZero, or PartIdOutOfRange.
    """
    if data[:4] != _IUV_MAGIC:
        raise BadMagic(f"expected {_IUV_MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < _IUV_HEADER.size:
        raise TruncatedPayload("header truncated")
    _, width, height = _IUV_HEADER.unpack_from(data)
    if width == 0 or height == 0:
        raise DimensionZero(f"declared size {width}x{height}")
    expected = width * height * _IUV_PIXEL.itemsize
    payload = len(data) - _IUV_HEADER.size
    if payload != expected:
        raise TruncatedPayload(f"payload is {payload} bytes, header implies {expected}")
    raw = np.frombuffer(data, dtype=_IUV_PIXEL, offset=_IUV_HEADER.size)
    part = raw["part"].reshape(height, width).copy()
    if part.max() > PART_COUNT:
        raise PartIdOutOfRange(f"partId {int(part.max())} exceeds {PART_COUNT}")
    u = raw["u"].reshape(height, width).copy()
    v = raw["v"].reshape(height, width).copy()
    return DenseCorrespondenceMap(part, u, v)


def write_iuv(m: DenseCorrespondenceMap) -> bytes:
    """Serialize a map to IUV1 bytes; background UV written as zero."""
    record = np.empty(m.part_id.size, dtype=_IUV_PIXEL)
    record["part"] = m.part_id.ravel()
    record["u"] = m.u.ravel()
    record["v"] = m.v.ravel()
    return _IUV_HEADER.pack(_IUV_MAGIC, m.width, m.height) + record.tobytes()


def mask_from_iuv(m: DenseCorrespondenceMap) -> BinaryMask:
    """Foreground wherever partId > 0."""
    return BinaryMask(m.part_id > 0)


def read_frame_png(path) -> Frame:
    with Image.open(path) as im:
        return Frame(np.asarray(im.convert("RGB"), dtype=np.uint8))


def write_frame_png(frame: Frame, path) -> None:
    Image.fromarray(frame.pixels, mode="RGB").save(path, format="PNG")


def read_mask_png(path) -> BinaryMask:
    """Grayscale PNG to mask; any nonzero pixel is foreground."""
    with Image.open(path) as im:
        return BinaryMask(np.asarray(im.convert("L")) > 0)
