import random

import pytest
from hypothesis import given, settings, strategies as st

from selfsim.compiler import (CANONICAL_FAULTS, FAULTS, ColorCodec, compile_direct, direct_min_zoom)
from selfsim.errors import RecognizerRejected, ZoomTooSmall
from selfsim.wang import Tile, TileSet, is_locally_valid


@given(st.integers(3, 5000), st.data())
def test_codec_roundtrip(n, data):
    codec = ColorCodec(n, 4)
    x, y = data.draw(st.integers(0, n - 1)), data.draw(st.integers(0, n - 1))
    prog, pay = data.draw(st.integers(0, 1)), data.draw(st.integers(0, 7))
    assert codec.unpack(codec.pack(x, y, prog, pay)) == (x, y, prog, pay)
    assert codec.pack(x, y, prog, pay) < 1 << codec.length


def test_codec_tile_addresses_wrap():
    codec = ColorCodec(5, 1)
    t = codec.tile(4, 4, (0, 0, 0, 0))
    assert codec.unpack(t.east)[:2] == (0, 4)
    assert codec.unpack(t.north)[:2] == (4, 0)
    assert codec.address(t) == (4, 4)


def test_toy_min_zoom_matches_hand_count(toy_target):
    # k = 2: the zone [N//3, 2N//3] must be 9 steps high (4k + 1) and
    # the other margins need N//3 >= 3k + 1; the first N with
    # 2N//3 - N//3 >= 9 is 26
    assert direct_min_zoom(toy_target) == 26
    with pytest.raises(ZoomTooSmall):
        compile_direct(toy_target, 25)


def test_macrotiles_are_valid_and_members(toy_min, toy_target):
    compiled, alpha = toy_min
    assert compiled.n == 26
    for s in toy_target:
        img = alpha[s]
        assert img.is_full
        assert is_locally_valid(img, compiled.tileset).valid


def test_border_carries_simulated_colors(toy_min, toy_target):
    compiled, alpha = toy_min
    codec, L, n = compiled.codec, compiled.layout, compiled.n
    for s in toy_target:
        img = alpha[s]
        east = "".join(str(codec.unpack(img[n - 1, r].east)[3]) for r in L.interval)
        north = "".join(str(codec.unpack(img[c, n - 1].north)[3]) for c in L.interval)
        west = "".join(str(codec.unpack(img[0, r].west)[3]) for r in L.interval)
        south = "".join(str(codec.unpack(img[c, 0].south)[3]) for c in L.interval)
        assert (east, north, west, south) == tuple(format(c, "02b") for c in s)


def test_wires_are_disjoint_and_reach_the_zone(toy_min):
    L = toy_min[0].layout
    seen = set()
    for w in L.wires:
        cells = [c for c in w.cells() if not L.in_zone(*c)]
        assert not seen & set(cells)
        seen |= set(cells)
        # each wire lands on the zone's bottom row at its tape position
        assert w.endpoint == (L.a + w.q, L.c)
        assert cells[-1] == (L.a + w.q, L.c - 1)
    assert len(L.wires) == 4 * L.k


def test_foreign_tiles_have_no_macrotile(toy_min):
    compiled, _ = toy_min
    with pytest.raises(RecognizerRejected):
        compiled.assemble_macrotile(Tile(0, 0, 0, 0))


def test_predicate_matches_enumeration(toy_min):
    compiled, alpha = toy_min
    rng = random.Random(3)
    members = {t for img in alpha.entries.values() for _, t in img.tiles()}
    for t in members:
        assert t in compiled.tileset
    for _ in range(300):
        i, j = rng.randrange(compiled.n), rng.randrange(compiled.n)
        for t in compiled.tiles_at(i, j):
            assert compiled.contains(t)
    ell = compiled.color_len
    hits = sum(compiled.contains(Tile(*(rng.getrandbits(ell) for _ in range(4)))) for _ in range(2000))
    assert hits == 0


def test_single_bit_mutants_of_wire_tiles_rejected(toy_min):
    compiled, alpha = toy_min
    L = compiled.layout
    i, j = L.wires[0].cells()[2]
    t = alpha[next(iter(alpha.entries))][i, j]
    for side in range(4):
        for b in range(compiled.color_len):
            mutant = list(t)
            mutant[side] ^= 1 << b
            # flipping the payload bit on both sides is the other wire value,
            # a single side alone breaks wire constancy or the address
            assert not compiled.contains(Tile(*mutant))


def test_descriptor_is_deterministic(toy_target):
    a, _ = compile_direct(toy_target, 30)
    b, _ = compile_direct(toy_target, 30)
    assert a.to_json() == b.to_json()
    d = a.descriptor()
    assert d["N"] == 30 and d["k"] == 2 and d["mode"] == "direct" and d["format_version"] == 1


def test_fault_catalogue_is_complete():
    assert len(CANONICAL_FAULTS) == 6
    assert set(CANONICAL_FAULTS) == set(FAULTS) | {"program_bit_flip"}


@pytest.mark.parametrize("fault", sorted(FAULTS))
def test_each_fault_changes_some_macrotile(toy_min, toy_target, fault):
    compiled, alpha = toy_min
    bad = compiled.with_faults(fault)
    assert any(bad.assemble_macrotile(s) != alpha[s] for s in toy_target)
    assert bad.descriptor()["faults"] == [fault]


def test_larger_target_compiles():
    # all 16 two-bit-color tiles with east == west + 1 mod 4
    tiles = [(w + 1) % 4 for w in range(4)]
    target = TileSet.explicit(2, [(tiles[w], n, w, n) for w in range(4) for n in range(4)])
    n = direct_min_zoom(target)
    compiled, alpha = compile_direct(target, n)
    assert len(alpha.entries) == 16
    for s in list(target)[:3]:
        assert is_locally_valid(alpha[s], compiled.tileset).valid
