import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfsim import ca
from selfsim.errors import ColonyTooSmall, InvalidNeighborhood, WorkPeriodTooShort


def test_rule_tables_by_hand():
    xor = ca.rule_table_program(ca.xor_rule, 1)
    maj = ca.rule_table_program(ca.majority_rule, 1)
    # index = l*4 + c*2 + r
    assert ca.table_of(xor, 1) == [0, 1, 0, 1, 1, 0, 1, 0]
    assert ca.table_of(maj, 1) == [0, 0, 0, 1, 0, 1, 1, 1]


def test_apply_target_is_periodic():
    t = ca.table_of(ca.rule_table_program(ca.xor_rule, 1), 1)
    assert ca.apply_target(t, [1, 0, 0, 0], 1) == [0, 1, 0, 1]


def test_u_min_and_rounding(xor_sim):
    rule, _ = xor_sim
    need = ca.u_min(rule.program, 1, 32)
    assert need == 32 + 3 + ca.agent_worst_case(rule.program, 1)
    assert rule.u == 1 << (need - 1).bit_length() and rule.u >= need
    exact, _ = ca.build_simulator(rule.program, 1, 32, round_pow2=False)
    assert exact.u == need
    with pytest.raises(WorkPeriodTooShort) as exc:
        ca.build_simulator(rule.program, 1, 32, u=need - 1)
    assert exc.value.u_min == need
    with pytest.raises(ColonyTooSmall):
        ca.build_simulator(rule.program, 1, 8)


@given(st.lists(st.integers(0, 1), min_size=3, max_size=10))
@settings(max_examples=60, deadline=None)
def test_encode_decode_injective(x):
    rule_program = ca.rule_table_program(ca.xor_rule, 1)
    coding = ca.ColonyCoding(32, 1, rule_program.bits)
    config = ca.encode_config(coding, x)
    assert ca.decode_config(coding, config) == x
    y = list(x)
    y[0] ^= 1
    assert ca.encode_config(coding, y) != config


@pytest.mark.parametrize("seed", range(4))
def test_scalar_and_vectorized_steps_agree(xor_sim, seed):
    rule, coding = xor_sim
    rng = random.Random(seed)
    c = ca.encode_config(coding, [rng.getrandbits(1) for _ in range(3)])
    for t in range(rule.u):
        a = ca.step_vectorized(rule, c, t)
        b = ca.step_scalar(rule, c, t)
        assert a == b, f"diverged at t={t}"
        c = a


def test_one_work_period_applies_the_rule(majority_sim):
    rule, coding = majority_sim
    x = [1, 1, 0, 0, 1, 0]
    out = ca.step_ca(rule, ca.encode_config(coding, x), rule.u)
    assert ca.decode_config(coding, out) == [1, 1, 0, 0, 0, 1]


def test_strict_mode_reports_position_and_time(xor_sim):
    rule, coding = xor_sim
    c = ca.encode_config(coding, [0, 1, 1]).copy()
    c.age[40] = 5
    with pytest.raises(InvalidNeighborhood) as exc:
        ca.step_ca(rule, c, 3, start_time=7)
    # cells 39, 40 and 41 see mismatched ages; the scan reports the first
    assert (exc.value.position, exc.value.time) == (39, 7)
    with pytest.raises(InvalidNeighborhood) as exc2:
        ca.step_scalar(rule, c, 7)
    assert exc2.value.position == 39


def test_freeze_mode_keeps_invalid_cells(xor_sim):
    rule, coding = xor_sim
    frozen = ca.CARule(rule.q, rule.u, rule.k, rule.program, ca.FREEZE)
    c = ca.encode_config(coding, [0, 1, 1]).copy()
    c.age[40] = 5
    n = ca.step_vectorized(frozen, c)
    for x in (39, 40, 41):
        assert n.cell(x) == c.cell(x)
    assert n.age[0] == 1
    assert ca.step_scalar(frozen, c) == n


def test_phase_monitor_is_silent_on_runs(xor_sim):
    rule, coding = xor_sim
    mon = ca.PhaseMonitor(rule)
    ca.step_ca(rule, ca.encode_config(coding, [1, 0, 1, 1]), 2 * rule.u, on_step=mon)
    assert mon.violations == [] and mon.steps == 2 * rule.u


def test_phase_monitor_flags_tampering(xor_sim):
    rule, coding = xor_sim
    mon = ca.PhaseMonitor(rule)
    a = ca.encode_config(coding, [1, 0, 1])
    b = ca.step_vectorized(rule, a).copy()
    b.address[3] = 9
    b.age[0] = 4
    mon(0, a, b)
    kinds = {v[0] for v in mon.violations}
    assert {"address", "age"} <= kinds


def test_bulking_report_names_failures(xor_sim):
    rule, coding = xor_sim
    wrong = [1 - v for v in ca.table_of(rule.program, 1)]
    rep = ca.verify_bulking(rule, coding, wrong, [[0, 1, 1]])
    assert not rep.passed and rep.failures[0].divergence is None
    assert "witness" in rep.to_text()


def test_test_set_sizes():
    xs = ca.bulking_test_set(range(4, 6), 1, random_count=3, random_width=9, seed=1)
    assert len(xs) == 16 + 32 + 3 and len(xs[-1]) == 9
    assert xs == ca.bulking_test_set(range(4, 6), 1, random_count=3, random_width=9, seed=1)


def test_dump_roundtrip_and_quine(xor_sim):
    rule, coding = xor_sim
    rows = ca.spacetime(rule, ca.encode_config(coding, [1, 0, 1]), 50)
    text = ca.dump_diagram(rule, rows)
    back = ca.load_diagram(text)
    assert back == rows
    assert ca.dump_diagram(rule, back) == text
    assert all(ca.colony_program_matches(rule, r) for r in rows)
    lines = text.splitlines()
    assert lines[0].startswith("# selfsim-ca-dump format_version=1")
    widths = {len(rec) for line in lines[1:] for rec in line.split()}
    assert len(widths) == 1


def test_rule_descriptor_roundtrip(xor_sim):
    rule, _ = xor_sim
    back = ca.CARule.from_json(rule.to_json())
    assert back == rule
    with pytest.raises(ValueError):
        ca.CARule.from_json(rule.to_json().replace('"format_version": 1', '"format_version": 9'))


def test_two_bit_states():
    # k = 2: the target adds left and right neighbors mod 4
    prog = ca.rule_table_program(lambda l, c, r: (l + r) % 4, 2)
    rule, coding = ca.build_simulator(prog, 2, len(prog))
    x = [3, 1, 2]
    out = ca.step_ca(rule, ca.encode_config(coding, x), rule.u)
    assert ca.decode_config(coding, out) == [(2 + 1) % 4, (3 + 2) % 4, (1 + 3) % 4]
