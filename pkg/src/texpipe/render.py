"""Inverse mapping: atlas texels back onto frames, and raster encodings.

Gathers replace the scatter of the atlas module: each foreground pixel looks
up its (partId, u, v) texel in a finalized atlas. The module also owns the
canonical IUV false-color encoding (partId and UV stretched to the full
0..255 range), the 6-channel frame assembly that concatenates RGB with that
encoding, and the 24-channel grayscale appearance stack.

All functions are pure over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atlas import TEXELS, TextureAtlas, planes_to_grid
from .correspondence import DenseCorrespondenceMap, Frame, PART_COUNT
from .errors import DimensionMismatch

# BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class SixChannelFrame:
    """Per-pixel R, G, B plus partId/U/V scaled to 8 bits; shape (h, w, 6)."""

    channels: np.ndarray

    def __post_init__(self):
        ch = self.channels
        if ch.ndim != 3 or ch.shape[2] != 6 or ch.dtype != np.uint8:
            raise ValueError(f"expected (h, w, 6) uint8, got {ch.shape} {ch.dtype}")
        ch.setflags(write=False)

    @property
    def width(self) -> int:
        return self.channels.shape[1]

    @property
    def height(self) -> int:
        return self.channels.shape[0]


@dataclass(frozen=True)
class AppearanceStack:
    """24 grayscale channels of 200x200, one per part plane."""

    channels: np.ndarray

    def __post_init__(self):
        if self.channels.shape != (PART_COUNT, TEXELS, TEXELS) or self.channels.dtype != np.uint8:
            raise ValueError("expected (24, 200, 200) uint8")
        self.channels.setflags(write=False)


def _round_half_up_u8(x: np.ndarray) -> np.ndarray:
    return np.minimum(np.floor(x + 0.5), 255).astype(np.uint8)


def _check_dims(frame: Frame, m: DenseCorrespondenceMap) -> None:
    if (frame.height, frame.width) != (m.height, m.width):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs map {m.width}x{m.height}"
        )


def rerender(frame: Frame, m: DenseCorrespondenceMap, atlas: TextureAtlas) -> Frame:
    """Replace foreground pixels with their atlas texels; keep background.

    Foreground pixels whose part plane is entirely unoccupied fall back to
    the original pixel, so frames are never destroyed by a missing part.
    """
    _check_dims(frame, m)
    out = frame.pixels.copy()
    fg = m.part_id > 0
    if not fg.any():
        return Frame(out)
    parts = m.part_id[fg].astype(np.int64) - 1
    u = m.u[fg].astype(np.float64) * (TEXELS / 65535.0)
    v = m.v[fg].astype(np.float64) * (TEXELS / 65535.0)
    cols = np.minimum(u.astype(np.int64), TEXELS - 1)
    rows = np.minimum(v.astype(np.int64), TEXELS - 1)

    plane_has_texels = atlas.occupied.any(axis=(1, 2))
    usable = plane_has_texels[parts]
    texel_colors = atlas.colors[parts, rows, cols]

    fg_out = out[fg]
    fg_out[usable] = texel_colors[usable]
    out[fg] = fg_out
    return Frame(out)


def render_iuv_rgb(m: DenseCorrespondenceMap) -> Frame:
    """False-color a correspondence map: R=partId, G=u, B=v at full range.

    partId maps 0..24 onto 0..255 (spacing > 10, so part ids stay
    distinguishable after quantization); u and v map [0,1] onto 0..255.
    Background renders as pure black.
    """
    r = _round_half_up_u8(m.part_id.astype(np.float64) * (255.0 / PART_COUNT))
    g = _round_half_up_u8(m.u.astype(np.float64) / 257.0)
    b = _round_half_up_u8(m.v.astype(np.float64) / 257.0)
    rgb = np.stack([r, g, b], axis=-1)
    rgb[m.part_id == 0] = 0
    return Frame(rgb)


def replace_human_regions(frame: Frame, m: DenseCorrespondenceMap) -> Frame:
    """Composite: background from the frame, foreground from render_iuv_rgb."""
    _check_dims(frame, m)
    rendered = render_iuv_rgb(m)
    fg = (m.part_id > 0)[..., None]
    return Frame(np.where(fg, rendered.pixels, frame.pixels))


def assemble_six_channel(frame: Frame, m: DenseCorrespondenceMap) -> SixChannelFrame:
    """Channels 0-2: frame RGB (bit-exact); channels 3-5: IUV false colors."""
    _check_dims(frame, m)
    rendered = render_iuv_rgb(m)
    return SixChannelFrame(np.concatenate([frame.pixels, rendered.pixels], axis=-1))


def atlas_feature_stack(atlas: TextureAtlas) -> AppearanceStack:
    """Per-part luminance planes (BT.601 weights, round half up)."""
    lum = atlas.colors.astype(np.float64) @ _LUMA
    return AppearanceStack(_round_half_up_u8(lum))


def appearance_stack_to_grid(stack: AppearanceStack) -> np.ndarray:
    """Tile the 24 luminance channels into an (800, 1200) grayscale raster."""
    return planes_to_grid(stack.channels)
