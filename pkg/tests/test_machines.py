import pytest
from hypothesis import given, settings, strategies as st

from selfsim.errors import MalformedProgram
from selfsim.machines import (BLANK, RIGHT, STAY, Asm, MachineProgram, RunStats, TuringMachine,
                              compile_recognizer, compile_tm, constant_program, decode_body,
                              encode_tile_bits, gamma_decode, gamma_encode, make_program,
                              parity_program, recognizer_machine, run_machine, universal_run)
from selfsim.wang import TileSet

bits_st = st.text(alphabet="01", max_size=24)


@given(st.integers(0, 10**6))
def test_gamma_roundtrip(v):
    code = gamma_encode(v)
    assert gamma_decode(code + "1", 0) == (v, len(code))


def test_gamma_known_codes():
    # gamma(v + 1): 1 -> "1", 2 -> "010", 5 -> "00101"
    assert [gamma_encode(v) for v in (0, 1, 4)] == ["1", "010", "00101"]


def test_container_header_and_level():
    p = make_program("generic", "1010", level=3)
    mode, level, length, off = p.header
    assert (mode, level, length) == (0, 3, 4) and p.body == "1010"
    assert p.with_level(9).level == 9 and p.with_level(9).body == "1010"


def test_malformed_containers():
    with pytest.raises(MalformedProgram):
        MachineProgram("012")
    with pytest.raises(MalformedProgram):
        MachineProgram("11111").header  # unknown mode
    with pytest.raises(MalformedProgram):
        MachineProgram(make_program("generic", "1010").bits + "0").header


def test_trie_recognizer_accepts_in_length_plus_one_steps():
    words = ["0110", "1111", "0000"]
    m = recognizer_machine(words, 4)
    for w in ["0110", "1111", "0000"]:
        out, _ = run_machine(m, [int(c) for c in w])
        assert out.accepted and out.steps == 5
    for w in ["0111", "1", "01100"]:
        out, _ = run_machine(m, [int(c) for c in w])
        assert out.rejected


def test_accepting_state_without_moves_required():
    with pytest.raises(ValueError):
        TuringMachine({("a", 0): ("a", 0, 5)}, "a", frozenset())
    with pytest.raises(ValueError):
        TuringMachine({("h", 0): ("h", 0, STAY)}, "h", frozenset({"h"}))


def test_run_machine_out_of_time():
    loop = TuringMachine({("a", BLANK): ("a", BLANK, RIGHT)}, "a", frozenset({"z"}))
    out, _ = run_machine(loop, [], max_steps=50)
    assert out.verdict == "out_of_time" and out.steps == 50


@given(bits_st)
def test_parity_program_matches_python(w):
    even = w.count("1") % 2 == 0
    assert universal_run(parity_program(True), w).accepted == even
    assert universal_run(parity_program(False), w).accepted == (not even)


def test_constant_programs_and_budget():
    assert universal_run(constant_program(True), "").accepted
    assert universal_run(constant_program(False), "").rejected
    out = universal_run(parity_program(), "1" * 200, time_budget=50)
    assert out.verdict == "out_of_time"


def test_time_is_charged_by_operand_length():
    s1, s2 = RunStats(), RunStats()
    universal_run(parity_program(), "1" * 8, stats=s1)
    universal_run(parity_program(), "1" * 64, stats=s2)
    assert s2.time > s1.time and s2.instructions > s1.instructions


@given(st.sets(st.tuples(*[st.integers(0, 3)] * 4), min_size=1, max_size=10), st.tuples(*[st.integers(0, 3)] * 4))
@settings(max_examples=40)
def test_table_recognizer_agrees_with_membership(tiles, probe):
    ts = TileSet.explicit(2, tiles)
    p = compile_recognizer(ts)
    assert universal_run(p, encode_tile_bits(probe, 2)).accepted == (probe in tiles)
    # wrong framing is rejected
    assert universal_run(p, encode_tile_bits(probe, 2) + "0").rejected


@given(st.sets(st.text(alphabet="01", min_size=5, max_size=5), min_size=1, max_size=6), st.text(alphabet="01", min_size=5, max_size=5))
@settings(max_examples=40)
def test_compiled_tm_agrees_with_direct_run(words, probe):
    m = recognizer_machine(words, 5)
    direct, _ = run_machine(m, [int(c) for c in probe])
    assert universal_run(compile_tm(m), probe).accepted == direct.accepted == (probe in words)


def test_assembler_labels_and_decode():
    a = Asm()
    a.LDI(1, 5)
    a.label("top")
    a.SUBI(1, 1)
    a.JNEI(1, 0, "top")
    a.ACCEPT()
    p = a.program("generic")
    ops = [ins[0] for ins in decode_body(p.body)]
    assert len(ops) == 4
    assert universal_run(p, "").accepted
    with pytest.raises(Exception):
        b = Asm()
        b.JMP("nowhere")
        b.program("generic")


def test_pbit_and_plen_read_own_program():
    a = Asm()
    a.PLEN(1)
    a.LDI(2, 0)
    a.PBIT(3, 2)
    a.JEQI(3, 0, "yes")  # generic mode starts with bit 0
    a.REJECT()
    a.label("yes")
    a.ACCEPT()
    assert universal_run(a.program("generic"), "").accepted
