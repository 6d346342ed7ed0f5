import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from texpipe.correspondence import (
    BinaryMask,
    DenseCorrespondenceMap,
    Frame,
    map_from_fractions,
    mask_from_iuv,
    read_iuv,
    write_iuv,
)
from texpipe.errors import (
    BadMagic,
    DimensionZero,
    PartIdOutOfRange,
    TruncatedPayload,
)

from conftest import make_map, random_map


def pack_pixels(*triples) -> bytes:
    return b"".join(struct.pack("<BHH", p, u, v) for p, u, v in triples)


def header(width, height) -> bytes:
    return struct.pack("<4sII", b"IUV1", width, height)


class TestReadIuv:
    def test_single_background_pixel(self):
        m = read_iuv(header(1, 1) + pack_pixels((0, 0, 0)))
        assert (m.width, m.height) == (1, 1)
        assert m.part_id[0, 0] == 0
        assert m.u[0, 0] == 0 and m.v[0, 0] == 0

    def test_hand_assembled_2x2(self):
        # row-major pixel order: (0,0), (0,1), (1,0), (1,1)
        payload = pack_pixels((1, 100, 200), (2, 300, 400), (0, 0, 0), (24, 65535, 1))
        m = read_iuv(header(2, 2) + payload)
        assert m.part_id.tolist() == [[1, 2], [0, 24]]
        assert m.u.tolist() == [[100, 300], [0, 65535]]
        assert m.v.tolist() == [[200, 400], [0, 1]]

    def test_part_id_out_of_range(self):
        with pytest.raises(PartIdOutOfRange):
            read_iuv(header(1, 1) + pack_pixels((25, 0, 0)))

    def test_bad_magic(self):
        blob = b"XUV1" + header(1, 1)[4:] + pack_pixels((0, 0, 0))
        with pytest.raises(BadMagic):
            read_iuv(blob)
        with pytest.raises(BadMagic):
            read_iuv(b"IU")

    def test_truncated_header(self):
        with pytest.raises(TruncatedPayload):
            read_iuv(b"IUV1\x01\x00")

    def test_payload_shorter_than_header_claims(self):
        with pytest.raises(TruncatedPayload):
            read_iuv(header(2, 2) + pack_pixels((1, 0, 0)))

    def test_trailing_bytes_rejected(self):
        with pytest.raises(TruncatedPayload):
            read_iuv(header(1, 1) + pack_pixels((1, 0, 0)) + b"\x00")

    def test_zero_dimension(self):
        with pytest.raises(DimensionZero):
            read_iuv(header(0, 3))
        with pytest.raises(DimensionZero):
            read_iuv(header(3, 0))

    def test_background_uv_normalized_on_read(self):
        m = read_iuv(header(1, 1) + pack_pixels((0, 123, 456)))
        assert m.u[0, 0] == 0 and m.v[0, 0] == 0


class TestWriteIuv:
    def test_single_pixel_is_17_bytes(self):
        m = make_map([[0]])
        assert len(write_iuv(m)) == 12 + 5

    def test_roundtrip_identity(self, rng):
        m = random_map(rng, 13, 7)
        again = read_iuv(write_iuv(m))
        assert np.array_equal(m.part_id, again.part_id)
        assert np.array_equal(m.u, again.u)
        assert np.array_equal(m.v, again.v)

    def test_one_u_change_moves_exactly_one_field(self):
        base = make_map([[1, 2], [3, 4]], u=[[10, 20], [30, 40]], v=[[1, 2], [3, 4]])
        changed = make_map([[1, 2], [3, 4]], u=[[10, 20], [99, 40]], v=[[1, 2], [3, 4]])
        b1, b2 = write_iuv(base), write_iuv(changed)
        assert len(b1) == len(b2)
        diff = [i for i in range(len(b1)) if b1[i] != b2[i]]
        # pixel (1,0) is the third pixel; its u field sits at
        # 12 (header) + 2*5 (two pixels) + 1 (partId byte)
        field_offset = 12 + 2 * 5 + 1
        assert set(diff) <= {field_offset, field_offset + 1}


@settings(max_examples=60)
@given(st.data())
def test_roundtrip_property(data):
    h = data.draw(st.integers(1, 8))
    w = data.draw(st.integers(1, 8))
    seed = data.draw(st.integers(0, 2**32 - 1))
    m = random_map(np.random.default_rng(seed), h, w)
    blob = write_iuv(m)
    assert write_iuv(read_iuv(blob)) == blob


class TestMaskFromIuv:
    def test_all_background(self):
        assert not mask_from_iuv(make_map(np.zeros((3, 4)))).mask.any()

    def test_single_foreground_pixel(self):
        pid = np.zeros((3, 4))
        pid[1, 2] = 7
        mask = mask_from_iuv(make_map(pid)).mask
        assert mask[1, 2]
        assert mask.sum() == 1

    def test_2x2_pattern(self):
        mask = mask_from_iuv(make_map([[1, 2], [0, 24]])).mask
        assert mask.tolist() == [[True, True], [False, True]]

    def test_popcount_matches_foreground(self, rng):
        m = random_map(rng, 17, 11)
        assert mask_from_iuv(m).popcount() == int((m.part_id > 0).sum())


class TestTypes:
    def test_frame_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Frame(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(ValueError):
            Frame(np.zeros((4, 4, 3), dtype=np.float32))

    def test_map_constructor_normalizes_background(self):
        m = DenseCorrespondenceMap(
            np.zeros((2, 2), np.uint8),
            np.full((2, 2), 9, np.uint16),
            np.full((2, 2), 9, np.uint16),
        )
        assert not m.u.any() and not m.v.any()

    def test_map_rejects_part_25(self):
        with pytest.raises(PartIdOutOfRange):
            make_map([[25]])

    def test_mask_requires_bool(self):
        with pytest.raises(ValueError):
            BinaryMask(np.zeros((2, 2), dtype=np.uint8))

    def test_quantization_from_fractions(self):
        m = map_from_fractions(np.array([[3]]), np.array([[0.5]]), np.array([[1.0]]))
        assert m.u[0, 0] == 32768  # round-half-up of 0.5 * 65535
        assert m.v[0, 0] == 65535


class TestFramePng:
    def test_roundtrip(self, tmp_path, rng):
        from texpipe.correspondence import read_frame_png, write_frame_png
        from conftest import random_frame

        frame = random_frame(rng, 9, 14)
        path = tmp_path / "frame.png"
        write_frame_png(frame, path)
        again = read_frame_png(path)
        assert np.array_equal(again.pixels, frame.pixels)

    def test_reads_as_rgb_without_alpha(self, tmp_path):
        from PIL import Image
        from texpipe.correspondence import read_frame_png

        rgba = np.zeros((4, 4, 4), np.uint8)
        rgba[..., 0] = 200
        rgba[..., 3] = 128
        Image.fromarray(rgba, "RGBA").save(tmp_path / "a.png")
        frame = read_frame_png(tmp_path / "a.png")
        assert frame.pixels.shape == (4, 4, 3)
        assert (frame.pixels[..., 0] == 200).all()
