import math
import random

import pytest

from selfsim.errors import ZoomTooSmall
from selfsim.fixpoint import (C0, C1, _fixpoint_compiled, _feasible, fixpoint_color_len, mutate,
                              predicate_program, program_size_constants, role_samples)
from selfsim.machines import universal_run
from selfsim.verify import ROLES, quine_probe, verify_fixpoint_program
from selfsim.wang import Tile

pytestmark = pytest.mark.slow


def _word(t, ell):
    return "".join(format(c, f"0{ell}b") for c in t)


def test_color_length():
    # 2 * ceil(log2 N) address bits plus prog and two payload bits
    assert fixpoint_color_len(16286) == 2 * 14 + 3
    assert fixpoint_color_len(1 << 14) == 2 * 14 + 3


def test_small_zoom_has_no_program():
    with pytest.raises(ZoomTooSmall):
        predicate_program(10)


def test_size_constants_reproduce_and_bound():
    assert program_size_constants() == (C0, C1)
    for n in (512, 700, 5000, 16286, 40000, 65536):
        assert len(predicate_program(n)) <= C0 * math.log2(n) + C1


def test_mutate_flips_one_bit():
    rng = random.Random(1)
    t = Tile(5, 6, 7, 8)
    for _ in range(50):
        m = mutate(t, 10, rng)
        assert sum(bin(a ^ b).count("1") for a, b in zip(t, m)) == 1


def test_build_is_minimal_and_fits(fixpoint_build):
    b = fixpoint_build
    c = b.compiled
    assert b.n_min == c.n <= 1 << 16
    assert not _feasible(b.n_min - 1, 0)
    L = c.layout
    assert L.zone_height == (2 * c.n) // 3 - c.n // 3
    assert b.worst_cost <= L.zone_height
    assert L.program_len == len(b.program) <= L.zone_width
    assert c.program_bits == b.program.bits
    assert len(b.program) <= b.c0 * math.log2(c.n) + b.c1


def test_role_samples_cover_roles(fixpoint_build):
    pools = role_samples(fixpoint_build.compiled, random.Random(0), per_role=8)
    assert set(ROLES) <= set(pools)


def test_program_agrees_on_valid_tiles_and_mutants(fixpoint_build):
    c = fixpoint_build.compiled
    ell = c.color_len
    rng = random.Random(7)
    for role, tiles in sorted(role_samples(c, rng, per_role=4).items()):
        for t in tiles[:6]:
            assert universal_run(c.program, _word(t, ell)).accepted, role
            m = mutate(t, ell, rng)
            assert universal_run(c.program, _word(m, ell)).accepted == c.contains(m), role


def test_quine_columns(fixpoint_build):
    c = fixpoint_build.compiled
    plen = len(c.program)
    for idx, demanded, stored in quine_probe(c, [0, 1, 2, plen // 2, plen - 1]):
        assert demanded == stored == int(c.program.bits[idx])


def test_level_one_rejects_level_zero_columns(fixpoint_build):
    # the level-1 header is two bits longer, so it needs a few more columns
    # than N_min provides
    n = fixpoint_build.compiled.n + 12
    p0, p1 = predicate_program(n, 0), predicate_program(n, 1)
    assert p1.body == p0.body and p1.level == 1 and len(p1) == len(p0) + 2
    c0 = _fixpoint_compiled(n, p0, fixpoint_build.worst_cost, 0)
    c1 = _fixpoint_compiled(n, p1, fixpoint_build.worst_cost, 1)
    ell = c0.color_len
    # the container header (and with it the level) sits in the first
    # program columns; find one where the two levels store different bits
    idx = next(i for i, (x, y) in enumerate(zip(p0.bits, p1.bits)) if x != y)
    i = c1.layout.a + idx
    t1 = next(iter(c1.tiles_at(i, 3)))
    t0 = next(iter(c0.tiles_at(i, 3)))
    assert universal_run(p1, _word(t1, ell)).accepted
    assert not universal_run(p1, _word(t0, ell)).accepted
    assert universal_run(p0, _word(t0, ell)).accepted


def test_l4_small_sample_passes(fixpoint_build):
    rep = verify_fixpoint_program(fixpoint_build.compiled, samples=600, seed=3, probe_columns=8)
    assert rep.levels["L4"].status == "pass", rep.to_text()


def test_l4_detects_program_bit_flip(fixpoint_build):
    bad = fixpoint_build.compiled.with_faults("program_bit_flip")
    rep = verify_fixpoint_program(bad, samples=200, seed=0, probe_columns=8)
    assert rep.levels["L4"].status == "fail"


def test_l4_tiny_sample_is_inconclusive(fixpoint_build):
    rep = verify_fixpoint_program(fixpoint_build.compiled, samples=3, seed=0)
    assert rep.levels["L4"].status == "inconclusive"
