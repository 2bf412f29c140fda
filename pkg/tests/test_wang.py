import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim.errors import ColorLengthMismatch, UnmappedTile
from selfsim.wang import (BudgetExceeded, Exhausted, Found, Patch, SimulationMap, Tile, TileSet,
                          apply_substitution, bits_to_color, color_to_bits, enumerate_valid_patches,
                          find_valid_patch, has_period, hconcat, is_locally_valid, patch_from_json,
                          patch_to_json, tileset_from_json, tileset_to_json, vconcat)

tiles_st = st.lists(st.tuples(*[st.integers(0, 7)] * 4), min_size=1, max_size=12, unique=True)


def test_tile_sides_are_named():
    t = Tile(1, 2, 3, 4)
    assert (t.east, t.north, t.west, t.south) == (1, 2, 3, 4)


@given(st.integers(0, 2**20), st.integers(21, 30))
def test_color_bits_roundtrip(c, n):
    assert bits_to_color(color_to_bits(c, n)) == c
    assert len(color_to_bits(c, n)) == n


@given(tiles_st)
def test_tileset_json_roundtrip(tiles):
    ts = TileSet.explicit(3, tiles)
    back = tileset_from_json(tileset_to_json(ts))
    assert sorted(back.tiles) == sorted(ts.tiles)
    assert back.color_len == 3


def test_explicit_rejects_duplicates_and_long_colors():
    with pytest.raises(ValueError):
        TileSet.explicit(1, [(0, 0, 0, 0), (0, 0, 0, 0)])
    with pytest.raises(ColorLengthMismatch):
        TileSet.explicit(1, [(2, 0, 0, 0)])


def test_candidates_filter_by_mask(toy_target):
    got = toy_target.candidates({2: (1, 1)})  # west == 1
    assert got == sorted(t for t in toy_target if t.west == 1)


def test_local_validity_and_witness(toy_target):
    a, b = Tile(0, 0, 1, 1), Tile(1, 1, 0, 0)
    good = Patch.from_rows([[a, b]], 2)
    assert is_locally_valid(good, toy_target).valid
    bad = Patch.from_rows([[b, b]], 2)  # b.east = 1 != b.west = 0
    rep = is_locally_valid(bad, toy_target)
    assert not rep.valid and rep.violations == [((0, 0), (1, 0))]
    foreign = Patch.from_rows([[Tile(3, 3, 3, 3)]], 2)
    assert is_locally_valid(foreign, toy_target).non_members == [(0, 0)]
    with pytest.raises(ColorLengthMismatch):
        is_locally_valid(Patch.from_rows([[a]], 3), toy_target)


def test_empty_cells_do_not_constrain(toy_target):
    p = Patch.empty(3, 3, 2).with_tile(0, 0, Tile(1, 1, 1, 1)).with_tile(2, 2, Tile(0, 0, 0, 0))
    assert is_locally_valid(p).valid


@given(st.integers(1, 4), st.integers(1, 4), st.integers(2, 9), st.integers(2, 9), st.integers(0, 99))
def test_has_period_on_tiled_blocks(pw, ph, reps_w, reps_h, seed):
    rng = np.random.default_rng(seed)
    block = rng.integers(0, 4, size=(ph, pw, 4))
    colors = np.tile(block, (reps_h, reps_w, 1))
    p = Patch(colors, np.ones(colors.shape[:2], dtype=bool), 2)
    assert has_period(p, (pw, 0)) and has_period(p, (0, ph)) and has_period(p, (-pw, ph))


def test_has_period_detects_break():
    colors = np.zeros((4, 4, 4), dtype=np.int64)
    colors[2, 1, 0] = 1
    p = Patch(colors, np.ones((4, 4), dtype=bool), 1)
    assert not has_period(p, (1, 0))
    assert has_period(p, (4, 0))  # no overlap


def test_search_outcomes(toy_target):
    res = find_valid_patch(toy_target, 4, 3)
    assert isinstance(res, Found)
    assert is_locally_valid(res.patch, toy_target).valid and res.patch.is_full
    # west boundary color 3 appears on no tile
    res = find_valid_patch(toy_target, 2, 2, boundary={"west": [3, 3]})
    assert isinstance(res, Exhausted)
    res = find_valid_patch(toy_target, 6, 6, boundary={"west": [3] * 6}, budget=1)
    assert isinstance(res, (BudgetExceeded, Exhausted))


def test_enumeration_counts_toy(toy_target):
    # each toy tile pairs a horizontal type (e,w) in {(0,1),(1,0)} with a
    # vertical type (n,s) in {(0,1),(1,0)}; types alternate along rows and
    # columns, each row and each column picking its phase freely, so a
    # w x h patch has 2**(w + h) completions
    for w, h in [(3, 2), (2, 2), (1, 4)]:
        e = enumerate_valid_patches(toy_target, w, h)
        assert e.complete and len(e.patches) == 2 ** (w + h)


def test_substitution_and_concat():
    a, b = Tile(0, 0, 0, 0), Tile(1, 1, 1, 1)
    ia = Patch.from_rows([[a, b], [b, a]], 1)
    ib = Patch.from_rows([[b, b], [b, b]], 1)
    alpha = SimulationMap(2, {a: ia, b: ib})
    out = apply_substitution(alpha, Patch.from_rows([[a, b]], 1))
    assert out == hconcat(ia, ib)
    out2 = apply_substitution(alpha, Patch.from_rows([[a], [b]], 1))
    assert out2 == vconcat(ia, ib)
    assert apply_substitution(alpha, Patch.from_rows([[a]], 1), 2).width == 4
    with pytest.raises(UnmappedTile):
        alpha[Tile(2, 2, 2, 2)]
    with pytest.raises(ValueError):
        SimulationMap(2, {a: ia, b: ia})


def test_patch_json_roundtrip_with_holes():
    p = Patch.empty(3, 2, 4).with_tile(1, 0, Tile(1, 2, 3, 4)).with_tile(2, 1, Tile(9, 8, 7, 6))
    q = patch_from_json(patch_to_json(p))
    assert q == p and q[0, 0] is None and q[1, 0] == Tile(1, 2, 3, 4)
    assert patch_to_json(q) == patch_to_json(p)
