import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from fpmatch.errors import EmptyRoi, ZeroVarianceImage
from fpmatch.preprocess import (
    RoiMask, binarize, block_variance, is_one_pixel_wide, normalize, read_image, segment_roi,
    skeletonize, thin, write_pgm,
)

EIGHT = np.ones((3, 3), dtype=int)


def textbook_zhang_suen(img):
    """Slow per-pixel Zhang-Suen, written straight from the original description."""
    img = img.astype(int).copy()
    h, w = img.shape

    def at(r, c):
        return img[r, c] if 0 <= r < h and 0 <= c < w else 0

    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            kill = []
            for r in range(h):
                for c in range(w):
                    if not img[r, c]:
                        continue
                    p = [at(r - 1, c), at(r - 1, c + 1), at(r, c + 1), at(r + 1, c + 1),
                         at(r + 1, c), at(r + 1, c - 1), at(r, c - 1), at(r - 1, c - 1)]
                    b = sum(p)
                    a = sum(p[i] == 0 and p[(i + 1) % 8] == 1 for i in range(8))
                    p2, _, p4, _, p6, _, p8, _ = p
                    if not (2 <= b <= 6 and a == 1):
                        continue
                    if step == 0 and p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0:
                        kill.append((r, c))
                    if step == 1 and p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0:
                        kill.append((r, c))
            for r, c in kill:
                img[r, c] = 0
            changed |= bool(kill)
    return img.astype(np.uint8)


def n_components(img):
    return ndimage.label(img, structure=EIGHT)[1]


# --- normalize -------------------------------------------------------------------


def test_normalize_constant_image_warns_and_fills():
    img = np.full((20, 20), 128, dtype=np.uint8)
    with pytest.warns(ZeroVarianceImage):
        out = normalize(img, 100, 2000)
    assert (out == 100).all()


def test_normalize_identity_when_already_at_target():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (64, 64)).astype(np.uint8)
    out = normalize(img, img.mean(), img.var())
    assert np.abs(out.astype(int) - img.astype(int)).max() <= 1


def test_normalize_two_level():
    img = np.zeros((10, 10), dtype=np.uint8)
    img[:, ::2] = 255
    out = normalize(img, 100, 100)
    assert abs(out.mean() - 100) <= 1


@settings(max_examples=60)
@given(st.integers(0, 2**31), st.floats(60, 190), st.floats(100, 1500))
def test_normalize_hits_target_statistics(seed, mean, var):
    # targets whose spread would be clipped at 0 or 255 are not representable in 8 bits
    assume(mean - 4 * var**0.5 >= 0 and mean + 4 * var**0.5 <= 255)
    rng = np.random.default_rng(seed)
    img = np.clip(rng.normal(120, 25, (48, 48)), 0, 255).astype(np.uint8)
    out = normalize(img, mean, var).astype(float)
    assert abs(out.mean() - mean) <= 1
    # rounding to integers adds up to 1/12 of a level of variance
    assert abs(out.var() - var) <= 0.05 * var + 1


# --- ROI ---------------------------------------------------------------------------


def test_segment_roi_uniform_is_empty():
    with pytest.raises(EmptyRoi):
        segment_roi(np.full((64, 64), 128, dtype=np.uint8))


def test_segment_roi_striped_centre():
    img = np.full((96, 96), 128, dtype=np.uint8)
    img[32:64, 32:64:2] = 0
    img[32:64, 33:64:2] = 255
    roi = segment_roi(img, 16, 100)
    # independent per-block variance
    expect = np.zeros((96, 96), dtype=bool)
    for by in range(6):
        for bx in range(6):
            if img[by * 16 : by * 16 + 16, bx * 16 : bx * 16 + 16].var() >= 100:
                expect[by * 16 : by * 16 + 16, bx * 16 : bx * 16 + 16] = True
    assert (roi.mask == expect).all()
    assert expect[32:64, 32:64].all() and expect.sum() == 32 * 32


def test_segment_roi_fully_striped():
    img = np.zeros((64, 80), dtype=np.uint8)
    img[:, ::2] = 255
    assert segment_roi(img).mask.all()


def test_segment_roi_keeps_largest_component():
    img = np.full((96, 96), 128, dtype=np.uint8)
    img[0:16, 0:16:2] = 0          # one lone block
    img[48:96, 48:96:2] = 0        # a 3x3 block patch
    roi = segment_roi(img)
    assert not roi.mask[0:16, 0:16].any()
    assert roi.mask[48:96, 48:96].all()


def test_segment_roi_block_size_check():
    with pytest.raises(ValueError):
        segment_roi(np.zeros((8, 8), dtype=np.uint8), block_size=3)


def test_block_variance_matches_numpy():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (40, 40)).astype(np.uint8)
    bv = block_variance(img, 8)
    assert bv.shape == (5, 5)
    assert np.isclose(bv[2, 3], img[16:24, 24:32].astype(float).var())


# --- binarize -----------------------------------------------------------------------


def test_binarize_flat_block_is_valley():
    img = np.full((16, 16), 90, dtype=np.uint8)
    assert not binarize(img, RoiMask.full(img.shape)).any()


def test_binarize_checkerboard():
    img = (np.indices((16, 16)).sum(axis=0) % 2 * 255).astype(np.uint8)
    out = binarize(img, RoiMask.full(img.shape))
    assert (out == (img == 0)).all()


@given(arrays(np.uint8, (32, 32)), arrays(np.bool_, (2, 2)))
def test_binarize_zero_outside_roi(img, blocks):
    mask = np.kron(blocks, np.ones((16, 16), dtype=bool))
    out = binarize(img, RoiMask(mask, 16))
    assert not out[~mask].any()
    assert set(np.unique(out)) <= {0, 1}


# --- thinning -------------------------------------------------------------------------


def test_thin_empty():
    assert not thin(np.zeros((7, 7), dtype=np.uint8)).any()


def test_thin_bar_5x9_matches_reference():
    bar = np.zeros((5, 9), dtype=np.uint8)
    bar[1:4, :] = 1
    out = thin(bar)
    assert (out == textbook_zhang_suen(bar)).all()
    expected = np.zeros((5, 9), dtype=np.uint8)
    expected[2, 1:7] = 1
    assert (out == expected).all()
    # the schedule peels the west end by one pixel and the east end by two
    xs = np.nonzero(out[2])[0]
    assert (xs[0], xs[-1]) == (1, 6)


def test_thin_diagonal_fixpoint():
    img = np.zeros((10, 10), dtype=np.uint8)
    for i in range(1, 9):
        img[i, i] = 1
    assert (thin(img) == img).all()


@settings(max_examples=40)
@given(st.integers(0, 2**31))
def test_thin_matches_textbook_on_blobs(seed):
    rng = np.random.default_rng(seed)
    img = (ndimage.uniform_filter(rng.random((24, 24)), 5) > 0.5).astype(np.uint8)
    img[[0, -1], :] = 0
    img[:, [0, -1]] = 0
    ref = textbook_zhang_suen(img)
    out = thin(img)
    # the textbook schedule deletes whole 2x2 squares (and with them components);
    # where it does not, ours runs the same passes and then only removes corner pixels
    if n_components(ref) == n_components(img):
        assert not (out & ~ref.astype(bool)).any()
    assert n_components(out) == n_components(img)


@settings(max_examples=150)
@given(arrays(np.uint8, (16, 16), elements=st.integers(0, 1)))
def test_thin_properties_random(img):
    out = thin(img)
    assert not (out.astype(bool) & ~img.astype(bool)).any()
    assert (thin(out) == out).all()
    assert n_components(out) == n_components(img)


@settings(max_examples=60)
@given(st.integers(0, 2**31), st.integers(2, 5))
def test_thin_thick_strokes_are_one_pixel_wide(seed, width):
    rng = np.random.default_rng(seed)
    img = np.zeros((60, 60), dtype=np.uint8)
    for _ in range(3):
        x0, y0, x1, y1 = rng.integers(8, 52, 4)
        n = max(abs(x1 - x0), abs(y1 - y0)) + 1
        for t in np.linspace(0, 1, n):
            x = int(round(x0 + t * (x1 - x0)))
            y = int(round(y0 + t * (y1 - y0)))
            img[y : y + width, x : x + width] = 1
    out = thin(img)
    assert is_one_pixel_wide(out)
    assert n_components(out) == n_components(img)


# --- skeleton & IO --------------------------------------------------------------------


def test_skeletonize_stripes():
    yy, xx = np.mgrid[0:64, 0:64]
    img = (128 + 100 * np.cos(2 * np.pi * xx / 8)).astype(np.uint8)
    skel, roi = skeletonize(img)
    assert roi.mask.all()
    assert is_one_pixel_wide(skel)
    # one skeleton line per dark band
    assert n_components(skel) == 8


def test_pgm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    gray = rng.integers(2, 256, (20, 30)).astype(np.uint8)
    write_pgm(tmp_path / "g.pgm", gray)
    assert (read_image(tmp_path / "g.pgm") == gray).all()
    skel = np.eye(6, dtype=np.uint8)
    write_pgm(tmp_path / "s.pgm", skel)
    back = read_image(tmp_path / "s.pgm")
    assert set(np.unique(back)) == {0, 255}
    assert ((back // 255) == skel).all()
    assert (tmp_path / "s.pgm").read_bytes().startswith(b"P5")
