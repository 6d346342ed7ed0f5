"""Per-part texture look-up tables and their exact integer accumulation.

A texture atlas holds 24 part planes of 200x200 texels. Frame pixels are
scattered into the planes through their dense-correspondence coordinates;
contributions are kept as integer channel sums plus a count so that partial
accumulations merge exactly (commutative, associative) and the finalized
colors are independent of frame order and thread partitioning.

Binary containers:

    ATL1 (accumulator): magic "ATL1", then 24*200*200 records of
        sumR u64, sumG u64, sumB u64, count u32, little-endian,
        part-major then row-major within a plane.
    OCC1 (occupancy sidecar): magic "OCC1", then 24*200*200 bits,
        row-major, packed most-significant-bit first.

Finalized atlases are rendered to a 1200x800 grid image (6 tiles per row,
4 rows, part 1 top-left, row-major by part id) and stored as that PNG plus
the OCC1 sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correspondence import DenseCorrespondenceMap, Frame, PART_COUNT
from .errors import ArithmeticOverflow, BadMagic, DimensionMismatch, TruncatedPayload

TEXELS = 200                 # texels per plane edge
GRID_COLS = 6                # part tiles per grid-image row
GRID_ROWS = PART_COUNT // GRID_COLS
GRID_WIDTH = GRID_COLS * TEXELS    # 1200
GRID_HEIGHT = GRID_ROWS * TEXELS   # 800

_ATL_MAGIC = b"ATL1"
_ATL_RECORD = np.dtype([("r", "<u8"), ("g", "<u8"), ("b", "<u8"), ("count", "<u4")])
_OCC_MAGIC = b"OCC1"

_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)
_U32_MAX = np.uint32(0xFFFFFFFF)


@dataclass
class TextureAtlasAccumulator:
    """Exact accumulation state: channel sums (u64) and counts (u32).

    Single-writer: accumulate into one instance per thread and merge the
    partials afterwards.
    """

    sums: np.ndarray    # (24, 200, 200, 3) uint64
    counts: np.ndarray  # (24, 200, 200) uint32

    @classmethod
    def empty(cls) -> "TextureAtlasAccumulator":
        return cls(
            sums=np.zeros((PART_COUNT, TEXELS, TEXELS, 3), dtype=np.uint64),
            counts=np.zeros((PART_COUNT, TEXELS, TEXELS), dtype=np.uint32),
        )

    def copy(self) -> "TextureAtlasAccumulator":
        return TextureAtlasAccumulator(self.sums.copy(), self.counts.copy())


@dataclass(frozen=True)
class TextureAtlas:
    """Finalized per-part colors plus occupancy flags.

    Unoccupied texels are canonical black until inpainting fills them.
    """

    colors: np.ndarray    # (24, 200, 200, 3) uint8
    occupied: np.ndarray  # (24, 200, 200) bool

    def __post_init__(self):
        if self.colors.shape != (PART_COUNT, TEXELS, TEXELS, 3) or self.colors.dtype != np.uint8:
            raise ValueError("colors must be (24, 200, 200, 3) uint8")
        if self.occupied.shape != (PART_COUNT, TEXELS, TEXELS) or self.occupied.dtype != np.bool_:
            raise ValueError("occupied must be (24, 200, 200) bool")
        self.colors.setflags(write=False)
        self.occupied.setflags(write=False)


def texel_of(u: float, v: float) -> tuple[int, int]:
    """Quantize UV fractions to a (row, col) texel: 200 uniform bins, upper edge clamped."""
    col = min(int(u * TEXELS), TEXELS - 1)
    row = min(int(v * TEXELS), TEXELS - 1)
    return row, col


def _texel_indices(m: DenseCorrespondenceMap, fg: np.ndarray):
    """Vectorized texel_of over the map's foreground pixels."""
    u = m.u[fg].astype(np.float64) * (TEXELS / 65535.0)
    v = m.v[fg].astype(np.float64) * (TEXELS / 65535.0)
    cols = np.minimum(u.astype(np.int64), TEXELS - 1)
    rows = np.minimum(v.astype(np.int64), TEXELS - 1)
    return rows, cols


def accumulate(acc: TextureAtlasAccumulator, frame: Frame, m: DenseCorrespondenceMap) -> TextureAtlasAccumulator:
    """Scatter-add every foreground pixel into its (part, texel) cell.

    Mutates and returns `acc`. Background pixels are ignored.
    """
    if (frame.height, frame.width) != (m.height, m.width):
        raise DimensionMismatch(
            f"frame {frame.width}x{frame.height} vs map {m.width}x{m.height}"
        )
    fg = m.part_id > 0
    if not fg.any():
        return acc
    parts = m.part_id[fg].astype(np.int64) - 1
    rows, cols = _texel_indices(m, fg)
    flat = (parts * TEXELS + rows) * TEXELS + cols
    rgb = frame.pixels[fg].astype(np.uint64)
    np.add.at(acc.sums.reshape(-1, 3), flat, rgb)
    np.add.at(acc.counts.reshape(-1), flat, np.uint32(1))
    return acc


def merge(a: TextureAtlasAccumulator, b: TextureAtlasAccumulator) -> TextureAtlasAccumulator:
    """Texelwise integer sum of two accumulators; exactly commutative/associative."""
    if np.any(a.sums > _U64_MAX - b.sums):
        raise ArithmeticOverflow("channel sums exceed 64 bits")
    if np.any(a.counts > _U32_MAX - b.counts):
        raise ArithmeticOverflow("counts exceed 32 bits")
    return TextureAtlasAccumulator(a.sums + b.sums, a.counts + b.counts)


def finalize(acc: TextureAtlasAccumulator) -> TextureAtlas:
    """Round-half-up integer mean per occupied texel; unoccupied stay black."""
    counts = acc.counts.astype(np.uint64)
    divisor = np.maximum(counts, 1)[..., None]
    colors = (acc.sums + (counts // 2)[..., None]) // divisor
    occupied = acc.counts > 0
    colors[~occupied] = 0
    return TextureAtlas(colors.astype(np.uint8), occupied)


def coverage(acc: TextureAtlasAccumulator) -> np.ndarray:
    """Fraction of texels with at least one contribution, per part (24 floats)."""
    return (acc.counts > 0).mean(axis=(1, 2))


# -- inpainting ---------------------------------------------------------------
#
# Gap filling is nearest-occupied fill: each unoccupied texel takes the
# channelwise round-half-up mean of all originally occupied texels at minimal
# 4-connected grid distance (ties averaged). On an unobstructed grid that
# distance is the Manhattan distance, which factors by rows: the nearest
# sources in row r' as seen from column c are at the per-row horizontal
# distance d_row[r', c], and the plane-wide minimum over r' of
# |r - r'| + d_row[r', c] is computed with two sequential min-plus sweeps
# (top-down and bottom-up) that carry tie counts and color sums along.

_FAR = np.int64(1) << 40  # sentinel distance for rows with no occupied texel


def _row_profiles(colors: np.ndarray, occ: np.ndarray):
    """Per-row nearest-occupied distance, tie count, and color sums.

    Returns (dist, cnt, sums) with shapes (n, n), (n, n), (n, n, 3): for each
    row r and column c, the distance to the nearest occupied texel within row
    r, how many occupied texels sit at exactly that distance (1 or 2), and
    the sum of their colors.
    """
    n = occ.shape[0]
    cols = np.arange(n, dtype=np.int64)

    left = np.where(occ, cols[None, :], np.int64(-1))
    left = np.maximum.accumulate(left, axis=1)
    right = np.where(occ, cols[None, :], np.int64(2 * n))
    right = np.minimum.accumulate(right[:, ::-1], axis=1)[:, ::-1]

    dl = np.where(left >= 0, cols[None, :] - left, _FAR)
    dr = np.where(right < n, right - cols[None, :], _FAR)
    dist = np.minimum(dl, dr)

    rows = np.arange(n, dtype=np.int64)[:, None]
    lcolor = colors[rows, np.clip(left, 0, n - 1)].astype(np.int64)
    rcolor = colors[rows, np.clip(right, 0, n - 1)].astype(np.int64)

    use_l = (dl == dist) & (dist < _FAR)
    # the occupied texel itself has left == right; count it once
    use_r = (dr == dist) & (dist < _FAR) & (right != left)
    cnt = use_l.astype(np.int64) + use_r.astype(np.int64)
    sums = use_l[..., None] * lcolor + use_r[..., None] * rcolor
    return dist, cnt, sums


def _merge_min(d1, c1, s1, d2, c2, s2):
    d = np.minimum(d1, d2)
    first = d1 < d2
    second = d2 < d1
    cnt = np.where(first, c1, np.where(second, c2, c1 + c2))
    sums = np.where(first[..., None], s1, np.where(second[..., None], s2, s1 + s2))
    return d, cnt, sums


def _nearest_fill(colors: np.ndarray, occ: np.ndarray) -> np.ndarray:
    """Fill unoccupied texels of one plane from their nearest occupied texels."""
    n = occ.shape[0]
    dist, cnt, sums = _row_profiles(colors, occ)

    # up[r] = best over source rows r' <= r
    up_d = dist.copy()
    up_c = cnt.copy()
    up_s = sums.copy()
    for r in range(1, n):
        up_d[r], up_c[r], up_s[r] = _merge_min(
            dist[r], cnt[r], sums[r], up_d[r - 1] + 1, up_c[r - 1], up_s[r - 1]
        )

    # down[r] = best over source rows r' >= r, then combine rows r' > r with up
    down_d = dist.copy()
    down_c = cnt.copy()
    down_s = sums.copy()
    best_d, best_c, best_s = up_d, up_c, up_s
    for r in range(n - 2, -1, -1):
        down_d[r], down_c[r], down_s[r] = _merge_min(
            dist[r], cnt[r], sums[r], down_d[r + 1] + 1, down_c[r + 1], down_s[r + 1]
        )
        best_d[r], best_c[r], best_s[r] = _merge_min(
            best_d[r], best_c[r], best_s[r], down_d[r + 1] + 1, down_c[r + 1], down_s[r + 1]
        )

    filled = (best_s + (best_c // 2)[..., None]) // np.maximum(best_c, 1)[..., None]
    out = colors.copy()
    out[~occ] = filled[~occ].astype(np.uint8)
    return out


def inpaint(atlas: TextureAtlas) -> TextureAtlas:
    """Fill every texel of each nonempty plane; empty planes stay black.

    Deterministic and idempotent: a fully occupied plane is returned as-is.
    """
    colors = atlas.colors.copy()
    occupied = atlas.occupied.copy()
    for p in range(PART_COUNT):
        occ = atlas.occupied[p]
        if not occ.any() or occ.all():
            continue
        colors[p] = _nearest_fill(atlas.colors[p], occ)
        occupied[p] = True
    return TextureAtlas(colors, occupied)


# -- grid image layout ---------------------------------------------------------

def to_grid_image(atlas: TextureAtlas) -> Frame:
    """Lay the 24 planes out as one 1200x800 frame, row-major by part id."""
    return Frame(planes_to_grid(atlas.colors))


def planes_to_grid(planes: np.ndarray) -> np.ndarray:
    """(24, 200, 200, ...) part planes -> (800, 1200, ...) tiled raster."""
    tail = planes.shape[3:]
    grid = planes.reshape(GRID_ROWS, GRID_COLS, TEXELS, TEXELS, *tail)
    grid = np.moveaxis(grid, 2, 1)
    return np.ascontiguousarray(grid.reshape(GRID_HEIGHT, GRID_WIDTH, *tail))


def grid_to_planes(grid: np.ndarray) -> np.ndarray:
    """Inverse of planes_to_grid."""
    if grid.shape[:2] != (GRID_HEIGHT, GRID_WIDTH):
        raise DimensionMismatch(f"grid must be {GRID_WIDTH}x{GRID_HEIGHT}, got {grid.shape[1]}x{grid.shape[0]}")
    tail = grid.shape[2:]
    g = grid.reshape(GRID_ROWS, TEXELS, GRID_COLS, TEXELS, *tail)
    g = np.moveaxis(g, 1, 2)
    return np.ascontiguousarray(g.reshape(PART_COUNT, TEXELS, TEXELS, *tail))


def atlas_from_grid(frame: Frame, occupied: np.ndarray) -> TextureAtlas:
    """Rebuild a finalized atlas from its grid PNG and occupancy sidecar."""
    colors = grid_to_planes(frame.pixels).copy()
    colors[~occupied] = 0
    return TextureAtlas(colors, occupied.copy())


# -- binary containers ----------------------------------------------------------

def accumulator_to_bytes(acc: TextureAtlasAccumulator) -> bytes:
    rec = np.empty(PART_COUNT * TEXELS * TEXELS, dtype=_ATL_RECORD)
    flat = acc.sums.reshape(-1, 3)
    rec["r"] = flat[:, 0]
    rec["g"] = flat[:, 1]
    rec["b"] = flat[:, 2]
    rec["count"] = acc.counts.reshape(-1)
    return _ATL_MAGIC + rec.tobytes()


def accumulator_from_bytes(data: bytes) -> TextureAtlasAccumulator:
    if data[:4] != _ATL_MAGIC:
        raise BadMagic(f"expected {_ATL_MAGIC!r}, got {bytes(data[:4])!r}")
    expected = PART_COUNT * TEXELS * TEXELS * _ATL_RECORD.itemsize
    if len(data) - 4 != expected:
        raise TruncatedPayload(f"payload is {len(data) - 4} bytes, format implies {expected}")
    rec = np.frombuffer(data, dtype=_ATL_RECORD, offset=4)
    sums = np.empty((PART_COUNT * TEXELS * TEXELS, 3), dtype=np.uint64)
    sums[:, 0] = rec["r"]
    sums[:, 1] = rec["g"]
    sums[:, 2] = rec["b"]
    counts = rec["count"].astype(np.uint32).reshape(PART_COUNT, TEXELS, TEXELS)
    return TextureAtlasAccumulator(sums.reshape(PART_COUNT, TEXELS, TEXELS, 3), counts)


def occupancy_to_bytes(occupied: np.ndarray) -> bytes:
    return _OCC_MAGIC + np.packbits(occupied.reshape(-1)).tobytes()


def occupancy_from_bytes(data: bytes) -> np.ndarray:
    if data[:4] != _OCC_MAGIC:
        raise BadMagic(f"expected {_OCC_MAGIC!r}, got {bytes(data[:4])!r}")
    nbits = PART_COUNT * TEXELS * TEXELS
    if len(data) - 4 != nbits // 8:
        raise TruncatedPayload(f"payload is {len(data) - 4} bytes, format implies {nbits // 8}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8, offset=4))
    return bits.astype(bool).reshape(PART_COUNT, TEXELS, TEXELS)
