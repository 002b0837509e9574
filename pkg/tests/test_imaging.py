import struct
import zlib

import numpy as np
import pytest

from conftest import pgm_bytes, png_bytes
from cxrgen import imaging
from cxrgen.errors import MalformedImage, UnsupportedFormat, WrongDimensions
from cxrgen.imaging import (
    SEGMENT_I,
    SEGMENT_II,
    SEGMENT_III,
    GrayImage,
    center_square_crop,
    decode_image,
    encode_pgm,
    preprocess,
    resize_bilinear,
    slice_segment,
    sniff_format,
    to_gray,
)


def _hand_rolled_png_1x1_rgb(r, g, b):
    """Minimal PNG written from the format description, independent of Pillow."""

    def chunk(tag, payload):
        data = tag + payload
        return struct.pack(">I", len(payload)) + data + struct.pack(">I", zlib.crc32(data))

    ihdr = struct.pack(">IIBBBBB", 1, 1, 8, 2, 0, 0, 0)  # 1x1, 8-bit, RGB
    idat = zlib.compress(bytes([0, r, g, b]))  # filter 0 + one pixel
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", idat)
        + chunk(b"IEND", b"")
    )


class TestDecode:
    def test_pgm_2x2(self):
        raw = decode_image(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]), "pgm")
        assert (raw.width, raw.height, raw.channels) == (2, 2, 1)
        assert raw.pixels.reshape(-1).tolist() == [0, 255, 128, 64]

    def test_pgm_with_comment(self):
        raw = decode_image(b"P5\n# a comment\n1 1\n255\n\x7f", "pgm")
        assert raw.pixels[0, 0, 0] == 127

    def test_truncated_png(self):
        with pytest.raises(MalformedImage):
            decode_image(b"\x89PNG\r\n\x1a\n", "png")

    def test_truncated_pgm_raster(self):
        with pytest.raises(MalformedImage):
            decode_image(b"P5\n2 2\n255\n\x00\x01", "pgm")

    def test_pgm_16bit_rejected(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"P5\n1 1\n65535\n\x00\x00", "pgm")

    def test_rgb_png_1x1(self):
        raw = decode_image(_hand_rolled_png_1x1_rgb(30, 60, 90), "png")
        assert raw.channels == 3
        assert raw.pixels.reshape(-1).tolist() == [30, 60, 90]

    def test_16bit_png_rejected(self):
        from PIL import Image
        import io

        img = Image.new("I;16", (2, 2))
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        with pytest.raises(UnsupportedFormat):
            decode_image(buf.getvalue(), "png")

    def test_palette_png_rejected(self):
        from PIL import Image
        import io

        img = Image.new("P", (2, 2))
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        with pytest.raises(UnsupportedFormat):
            decode_image(buf.getvalue(), "png")

    def test_unknown_format(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"anything", "jpeg")

    def test_sniff(self):
        assert sniff_format(png_bytes(np.zeros((2, 2)))) == "png"
        assert sniff_format(pgm_bytes(np.zeros((2, 2)))) == "pgm"
        with pytest.raises(MalformedImage):
            sniff_format(b"hello world")


class TestToGray:
    def test_endpoints(self):
        raw = decode_image(pgm_bytes(np.array([[0, 255]])), "pgm")
        assert to_gray(raw).pixels.tolist() == [[0.0, 1.0]]

    def test_white_rgb(self):
        raw = decode_image(png_bytes(np.full((1, 1, 3), 255)), "png")
        assert to_gray(raw).pixels[0, 0] == pytest.approx(1.0)

    def test_luma(self):
        raw = decode_image(png_bytes(np.array([[[30, 60, 90]]])), "png")
        expected = (0.299 * 30 + 0.587 * 60 + 0.114 * 90) / 255
        assert to_gray(raw).pixels[0, 0] == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.2135, abs=5e-4)


class TestCrop:
    def test_wide(self):
        img = GrayImage(np.tile(np.arange(256) / 255.0, (128, 1)))
        out = center_square_crop(img)
        assert (out.height, out.width) == (128, 128)
        np.testing.assert_array_equal(out.pixels, img.pixels[:, 64:192])

    def test_square_identity(self):
        img = GrayImage(np.random.default_rng(0).random((128, 128)))
        np.testing.assert_array_equal(center_square_crop(img).pixels, img.pixels)

    def test_5x3(self):
        img = GrayImage(np.arange(15).reshape(3, 5) / 15.0)
        out = center_square_crop(img)
        assert (out.height, out.width) == (3, 3)
        np.testing.assert_array_equal(out.pixels, img.pixels[:, 1:4])


class TestResize:
    def test_constant(self):
        out = resize_bilinear(GrayImage(np.full((5, 9), 0.5)), 13, 7)
        np.testing.assert_allclose(out.pixels, 0.5)

    def test_identity_scale(self):
        src = np.random.default_rng(1).random((128, 128))
        out = resize_bilinear(GrayImage(src), 128, 128)
        np.testing.assert_array_equal(out.pixels, src)

    def test_2x2_to_4x4_hand_oracle(self):
        src = GrayImage(np.array([[0.0, 1.0], [0.0, 1.0]]))
        out = resize_bilinear(src, 4, 4)
        for row in out.pixels:
            np.testing.assert_allclose(row, [0.0, 0.25, 0.75, 1.0], atol=1e-15)

    def test_range_preserved(self):
        src = np.random.default_rng(2).random((17, 31))
        out = resize_bilinear(GrayImage(src), 64, 64).pixels
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestSegments:
    def _row_image(self):
        return GrayImage(np.tile(np.arange(128)[:, np.newaxis] / 127.0, (1, 128)))

    def test_segment_I(self):
        out = slice_segment(self._row_image(), SEGMENT_I)
        np.testing.assert_array_equal(out.pixels, self._row_image().pixels[0:64])

    def test_segment_III(self):
        out = slice_segment(self._row_image(), SEGMENT_III)
        np.testing.assert_array_equal(out.pixels, self._row_image().pixels[32:96])

    def test_wrong_dimensions(self):
        with pytest.raises(WrongDimensions):
            slice_segment(GrayImage(np.zeros((64, 64))), SEGMENT_I)

    def test_row_ranges(self):
        assert (SEGMENT_I.row_start, SEGMENT_I.row_stop) == (0, 64)
        assert (SEGMENT_II.row_start, SEGMENT_II.row_stop) == (64, 128)
        assert (SEGMENT_III.row_start, SEGMENT_III.row_stop) == (32, 96)


class TestPreprocess:
    def test_shapes(self, fixture_image_bytes):
        pre = preprocess(fixture_image_bytes)
        assert (pre.full.height, pre.full.width) == (128, 128)
        for seg in (pre.seg1, pre.seg2, pre.seg3):
            assert (seg.height, seg.width) == (64, 128)

    def test_constant_survives(self):
        pre = preprocess(pgm_bytes(np.full((128, 128), 200)), "pgm")
        np.testing.assert_allclose(pre.full.pixels, 200 / 255)
        np.testing.assert_allclose(pre.seg3.pixels, 200 / 255)

    def test_equals_manual_composition(self):
        y, x = np.mgrid[0:256, 0:512]
        arr = ((x + y) % 256).astype(np.uint8)
        data = pgm_bytes(arr)
        pre = preprocess(data, "pgm")
        manual = resize_bilinear(
            center_square_crop(to_gray(decode_image(data, "pgm"))), 128, 128
        )
        np.testing.assert_array_equal(pre.full.pixels, manual.pixels)
        np.testing.assert_array_equal(pre.seg2.pixels, manual.pixels[64:128])

    def test_pure_function(self, fixture_image_bytes):
        a = preprocess(fixture_image_bytes)
        b = preprocess(fixture_image_bytes)
        np.testing.assert_array_equal(a.full.pixels, b.full.pixels)

    def test_segment_tiling(self, fixture_image_bytes):
        pre = preprocess(fixture_image_bytes)
        np.testing.assert_array_equal(
            np.vstack([pre.seg1.pixels, pre.seg2.pixels]), pre.full.pixels
        )
        np.testing.assert_array_equal(
            pre.seg3.pixels, np.vstack([pre.seg1.pixels[32:], pre.seg2.pixels[:32]])
        )

    def test_crop_noop_on_square(self):
        src = np.random.default_rng(3).random((200, 200))
        img = GrayImage(src)
        a = resize_bilinear(center_square_crop(img), 128, 128)
        b = resize_bilinear(img, 128, 128)
        np.testing.assert_array_equal(a.pixels, b.pixels)


def test_encode_pgm_round_trip():
    src = np.random.default_rng(4).random((6, 9))
    img = GrayImage(src)
    raw = decode_image(encode_pgm(img), "pgm")
    np.testing.assert_array_equal(raw.pixels[:, :, 0], np.rint(src * 255).astype(np.uint8))


def test_all_ops_keep_unit_range(fixture_image_bytes):
    pre = preprocess(fixture_image_bytes)
    for img in (pre.full, pre.seg1, pre.seg2, pre.seg3):
        assert img.pixels.min() >= 0.0 and img.pixels.max() <= 1.0
