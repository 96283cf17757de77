import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from tundra.dataframe import DType, Dataset, Schema, canonical_sort
from tundra.engine import Engine, EngineConfig
from tundra.images import (
    CropCenter,
    FlipHorizontal,
    GRAY8,
    ImageRecord,
    RGB8,
    apply_op,
    decode_image,
    encode_image,
)

images = st.builds(
    lambda w, h, mode, seed: ImageRecord.from_array(
        np.random.default_rng(seed).integers(
            0, 256, (h, w, 1 if mode == GRAY8 else 3), dtype=np.uint8),
        mode),
    st.integers(1, 24), st.integers(1, 24), st.sampled_from([GRAY8, RGB8]),
    st.integers(0, 2**32 - 1))


@settings(max_examples=60, deadline=None)
@given(images)
def test_codec_round_trip_lossless(img):
    fmts = ["PGM"] if img.mode == GRAY8 else ["PPM", "BMP"]
    for fmt in fmts:
        back = decode_image(encode_image(img, fmt))
        assert back.data == img.data
        assert (back.width, back.height, back.mode) == (img.width, img.height, img.mode)


@settings(max_examples=60, deadline=None)
@given(images)
def test_flip_involution(img):
    assert apply_op(apply_op(img, FlipHorizontal()), FlipHorizontal()).data == img.data


@settings(max_examples=60, deadline=None)
@given(images, st.integers(1, 24), st.integers(1, 24))
def test_crop_center_stays_in_bounds(img, w, h):
    from tundra.errors import CropOutOfBounds

    if w > img.width or h > img.height:
        try:
            apply_op(img, CropCenter(w, h))
            assert False, "expected CropOutOfBounds"
        except CropOutOfBounds:
            return
    out = apply_op(img, CropCenter(w, h))
    assert (out.width, out.height) == (w, h)


row_lists = st.lists(
    st.tuples(st.text(max_size=6), st.integers(-2**40, 2**40)), max_size=40)
PAIR = Schema.of(("k", DType.STRING), ("v", DType.INT64))


@settings(max_examples=40, deadline=None)
@given(row_lists, st.randoms())
def test_canonical_sort_is_permutation_invariant(rows, rnd):
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert canonical_sort(rows, PAIR) == canonical_sort(shuffled, PAIR)


@settings(max_examples=25, deadline=None)
@given(row_lists, st.integers(1, 5))
def test_group_by_key_preserves_multiset(rows, parts):
    with Engine(EngineConfig(workers=2)) as eng:
        ds = Dataset.from_rows(rows, PAIR, parts)
        groups = ds.group_by_key("k").collect(eng)
        regrouped = sorted(r for _, g in groups for r in g)
        assert regrouped == sorted(rows)
        keys = [k for k, _ in groups]
        assert len(keys) == len(set(keys))
