import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _rasters import blank, hline, vline
from fpmatch.errors import CorruptTemplate, NotEnrollable, TooFewMinutiae
from fpmatch.features import (
    AXIS_NAMES, MinutiaTuple, Template, build_template, build_tuple, load_template,
    neighbor_distances, parse_identity, quality, ridge_crossings, ridge_crossings_raw, save_template,
    start_axis, template_filename, template_from_dict, template_to_dict, template_to_json,
)
from fpmatch.minutiae import BIFURCATION, ENDING, Minutia
from fpmatch.pipeline import extract_skeleton
from fpmatch.synth import SynthSpec, generate, random_planted


def M(x, y, theta=0, t=ENDING):
    return Minutia(x, y, theta, t)


# --- neighbour distances -----------------------------------------------------------------


def test_neighbor_distances_345():
    ms = [M(0, 0), M(3, 4), M(6, 8), M(0, 10), M(20, 20)]
    assert neighbor_distances(ms, 0) == (25, 100, 100)


def test_neighbor_distances_colinear():
    ms = [M(0, 0), M(1, 0), M(2, 0), M(3, 0)]
    assert neighbor_distances(ms, 0) == (1, 4, 9)


def test_neighbor_distances_ties_are_all_kept():
    ms = [M(10, 10), M(13, 14), M(14, 13), M(6, 7), M(30, 30)]
    assert neighbor_distances(ms, 0) == (25, 25, 25)


def test_neighbor_distances_needs_four():
    with pytest.raises(TooFewMinutiae):
        neighbor_distances([M(0, 0), M(1, 1), M(2, 2)], 0)


@given(st.lists(st.tuples(st.integers(0, 200), st.integers(0, 200)), min_size=4, max_size=20, unique=True))
def test_neighbor_distances_brute_force(points):
    ms = [M(x, y) for x, y in points]
    for k in range(len(ms)):
        d = neighbor_distances(ms, k)
        others = sorted((x - points[k][0]) ** 2 + (y - points[k][1]) ** 2
                        for i, (x, y) in enumerate(points) if i != k)
        assert d == tuple(others[:3])
        assert list(d) == sorted(d)


# --- axis selection ------------------------------------------------------------------------


@pytest.mark.parametrize("theta,axis", [
    (0, "+X"), (22, "+X"), (338, "+X"), (345, "+X"), (23, "X=Y"), (67, "X=Y"), (68, "+Y"), (90, "+Y"),
    (112, "+Y"), (113, "-X=Y"), (157, "-X=Y"), (158, "-X"), (202, "-X"), (203, "-X=-Y"), (247, "-X=-Y"),
    (248, "-Y"), (292, "-Y"), (293, "-Y=X"), (337, "-Y=X"),
])
def test_start_axis_table(theta, axis):
    assert AXIS_NAMES[start_axis(theta)] == axis


def test_start_axis_range():
    with pytest.raises(ValueError):
        start_axis(360)


# --- ridge crossings ---------------------------------------------------------------------


def test_rcr_boundary_right_edge():
    img = blank(60, 60)
    raw = ridge_crossings_raw(img, 54, 30)  # 5 px from the right edge
    for i, name in enumerate(AXIS_NAMES):
        if name in ("+X", "X=Y", "-Y=X"):
            assert raw[i] == -1
        else:
            assert raw[i] == 0


def test_rcr_isolated_interior_ending():
    img = hline(blank(60, 80), 30, 40, 70)
    assert ridge_crossings(img, M(40, 30, 0)) == (0,) * 8


def test_rcr_two_parallel_ridges():
    img = blank(60, 80)
    hline(img, 20, 30, 60)  # own ridge, ending at x = 30
    hline(img, 26, 10, 70)  # 6 px further along +Y
    hline(img, 32, 10, 70)  # 12 px further along +Y
    raw = ridge_crossings_raw(img, 30, 20)
    assert raw[AXIS_NAMES.index("+Y")] == 2
    assert raw[AXIS_NAMES.index("-Y")] == 0
    # the own ridge run along +X is skipped
    assert raw[AXIS_NAMES.index("+X")] == 0


def test_rcr_diagonal_cannot_slip_between_pixels():
    img = blank(40, 40)
    for x in range(5, 35):
        img[39 - x, x] = 1  # anti-diagonal ridge: x + y = 39
    # steps along X=Y from (10, 10) only visit even x + y, so they never land on the
    # ridge; the two pixels flanking step 10 do, and that counts as one crossing
    raw = ridge_crossings_raw(img, 10, 10)
    assert raw[AXIS_NAMES.index("X=Y")] == 1


def test_rcr_rotates_with_theta():
    img = blank(60, 80)
    hline(img, 20, 30, 60)
    hline(img, 26, 10, 70)
    base = ridge_crossings_raw(img, 30, 20)
    for theta in (0, 45, 90, 180, 300):
        s = start_axis(theta)
        assert ridge_crossings(img, M(30, 20, theta)) == tuple(base[(s + i) % 8] for i in range(8))


def test_rcr_roi_truncation():
    from fpmatch.preprocess import RoiMask

    mask = np.ones((64, 64), dtype=bool)
    mask[:, 48:] = False
    raw = ridge_crossings_raw(blank(64, 64), 40, 32, RoiMask(mask, 16))
    assert raw[AXIS_NAMES.index("+X")] == -1
    assert raw[AXIS_NAMES.index("-X")] == 0


@settings(max_examples=100)
@given(arrays(np.uint8, (40, 40), elements=st.integers(0, 1)), st.integers(0, 39), st.integers(0, 39))
def test_rcr_bounds(img, x, y):
    raw = ridge_crossings_raw(img, x, y)
    from fpmatch.minutiae import RING

    for v, (dx, dy) in zip(raw, RING):
        leaves = not (0 <= x + 18 * dx < 40 and 0 <= y + 18 * dy < 40)
        assert (v == -1) == leaves
        assert -1 <= v <= 9


# --- quality / tuples ----------------------------------------------------------------------


@pytest.mark.parametrize("rcr,mq", [((2, 1, 0, 3, 2, 1, 0, 1), 1), ((2, 1, 0, -1, 2, 1, 0, 1), 0), ((0,) * 8, 1)])
def test_quality(rcr, mq):
    assert quality(rcr) == mq


def test_build_tuple_fields():
    img = blank(100, 100)
    ms = [M(50, 50), M(53, 54), M(50, 60), M(70, 50)]
    t = build_tuple(img, ms, 0)
    assert t == MinutiaTuple(1, (0,) * 8, (25, 100, 400))
    assert t.vector == (0,) * 8 + (25, 100, 400)


def test_build_template_drops_boundary_tuples():
    img = blank(200, 200)
    ms = [M(30 + 20 * (i % 6), 30 + 20 * (i // 6), 0) for i in range(24)]
    ms += [M(5, 100), M(100, 190)]  # two minutiae whose axes leave the raster
    tpl = build_template(img, None, (1, 1, 1, 0, 0), minutiae=ms)
    assert len(ms) == 26 and len(tpl.tuples) == 24
    assert all(t.mq == 1 for t in tpl.tuples)


def test_build_template_not_enrollable():
    img = blank(200, 200)
    ms = [M(30 + 18 * i, 100) for i in range(9)]
    with pytest.raises(NotEnrollable) as info:
        build_template(img, None, minutiae=ms)
    assert info.value.count == 9
    assert len(info.value.template.tuples) == 9
    with pytest.raises(NotEnrollable):
        build_template(img, None)  # empty skeleton


# --- invariance ------------------------------------------------------------------------------


def _square_skeleton(seed, size=96, pad=20):
    spec = SynthSpec(width=size, height=size, orientation_seed=seed,
                     planted_minutiae=random_planted(seed, size, size, spacing=20))
    gray, _ = generate(spec)
    skel, _ = extract_skeleton(gray)
    return np.pad(skel, pad)


def _multiset(skel):
    tpl = build_template(skel, None, strict=False)
    return Counter(t.vector for t in tpl.tuples), len(tpl.tuples)


@settings(max_examples=8)
@given(st.integers(0, 10_000))
def test_rotation_invariance_small(seed):
    skel = _square_skeleton(seed)
    base, n = _multiset(skel)
    assert n > 0
    for k in (1, 2, 3):
        assert _multiset(np.ascontiguousarray(np.rot90(skel, k)))[0] == base


@settings(max_examples=8)
@given(st.integers(0, 10_000), st.integers(0, 15), st.integers(0, 15))
def test_translation_invariance(seed, dx, dy):
    skel = _square_skeleton(seed)
    shifted = np.pad(skel, ((dy, 15 - dy), (dx, 15 - dx)))
    assert _multiset(shifted)[0] == _multiset(skel)[0]


# --- persistence --------------------------------------------------------------------------


def _template():
    tuples = tuple(MinutiaTuple(1, (i % 3, 1, 0, 2, 1, 0, 0, 1), (4, 9, 16 + i)) for i in range(12))
    ms = tuple(Minutia(10 + i, 20, 45, ENDING if i % 2 else BIFURCATION) for i in range(12))
    return Template(3, 1, 2, 1, 4, tuples, ms)


def test_template_round_trip(tmp_path):
    t = _template()
    p = tmp_path / t.filename
    save_template(t, p)
    assert load_template(p) == t
    assert t.filename == "S3_F1_I2_R1C4.tpl.json"
    assert parse_identity(t.filename) == (3, 1, 2, 1, 4)


def test_template_json_field_order():
    d = json.loads(template_to_json(_template()))
    assert list(d) == ["subject", "finger", "impression", "cropRow", "cropCol", "tuples", "minutiae"]
    assert list(d["tuples"][0]) == ["mq", "rcr", "dsq"]


def test_template_bytes_per_tuple():
    sizes = [len(json.dumps(u.as_dict(), separators=(",", ":"))) + 1 for u in _template().tuples]
    assert 40 <= sum(sizes) / len(sizes) <= 50


@pytest.mark.parametrize("mutate", [
    lambda d: d["tuples"][0].update(rcr=[-1, 1, 0, 2, 1, 0, 0, 1]),
    lambda d: d["tuples"][0].update(mq=0),
    lambda d: d["tuples"][0].update(dsq=[9, 4, 16]),
    lambda d: d["tuples"][0].update(rcr=[1, 1]),
    lambda d: d["tuples"][0].update(rcr=[1.5, 1, 0, 2, 1, 0, 0, 1]),
    lambda d: d.pop("subject"),
    lambda d: d["minutiae"][0].update(type="loop"),
])
def test_template_corrupt(mutate):
    d = template_to_dict(_template())
    mutate(d)
    with pytest.raises(CorruptTemplate):
        template_from_dict(d)


def test_load_template_garbage(tmp_path):
    p = tmp_path / "x.tpl.json"
    p.write_text("{nope")
    with pytest.raises(CorruptTemplate):
        load_template(p)
    p.write_text("[1, 2]")
    with pytest.raises(CorruptTemplate):
        load_template(p)


def test_template_filename_helper():
    assert template_filename(10, 1, 8, 3, 4) == "S10_F1_I8_R3C4.tpl.json"
    assert parse_identity("noise.png") is None
