import pytest

from selfsim.compiler import FAULTS
from selfsim.errors import WindowTooSmall
from selfsim.verify import (FAIL, INCONCLUSIVE, PASS, LevelResult, VerificationReport, adjacency_table,
                            border_completions, fault_suite, grid_offsets, substitution_windows,
                            verify_adjacency_equivalence, verify_completeness_small,
                            verify_offset_uniqueness)
from selfsim.wang import has_period


def test_report_exit_codes():
    r = VerificationReport()
    r.levels["L1"] = LevelResult(PASS)
    assert r.exit_code() == 0
    r.levels["L2"] = LevelResult(INCONCLUSIVE)
    assert r.exit_code() == 3
    r.levels["L3"] = LevelResult(FAIL, witness=(1, 2))
    assert r.exit_code() == 1
    assert "witness = (1, 2)" in r.to_text()
    assert "seconds" not in r.to_text()


def test_toy_adjacency_tables_by_hand(toy_target):
    # horizontal types alternate: tiles with east 0 meet tiles with west 0,
    # which are exactly the 2nd and 4th; vertical likewise on north/south
    assert adjacency_table(toy_target, "horizontal") == "0101" "1010" "0101" "1010"
    assert adjacency_table(toy_target, "vertical") == "0110" "1001" "1001" "0110"


def test_levels_one_and_two_pass(toy_min, toy_target):
    compiled, alpha = toy_min
    rep = verify_adjacency_equivalence(compiled, alpha, toy_target)
    assert rep.levels["L1"].status == PASS and rep.levels["L2"].status == PASS
    assert rep.levels["L2"].data["horizontal_table"] == adjacency_table(toy_target, "horizontal")


def test_windows_have_unique_offset(toy_min, toy_target):
    compiled, alpha = toy_min
    n = compiled.n
    for (ox, oy), w in substitution_windows(alpha, toy_target, count=5, seed=1):
        assert (w.width, w.height) == (2 * n, 2 * n)
        assert grid_offsets(compiled, w) == [((-ox) % n, (-oy) % n)]
        assert verify_offset_uniqueness(compiled, w, alpha).levels["L3"].status == PASS


def test_small_window_rejected(toy_min, toy_target):
    compiled, alpha = toy_min
    w = next(iter(alpha.entries.values()))
    with pytest.raises(WindowTooSmall):
        verify_offset_uniqueness(compiled, w)


def test_window_without_period(toy_min, toy_target):
    compiled, alpha = toy_min
    _, w = substitution_windows(alpha, toy_target, count=2, seed=5)[1]
    n = compiled.n
    assert not any(has_period(w, (dx, dy)) for dx in range(-n + 1, n) for dy in range(n)
                   if (dx, dy) != (0, 0) and (dy > 0 or dx > 0))


def test_completeness_and_border_completion(toy_min, toy_target):
    compiled, alpha = toy_min
    rep = verify_completeness_small(compiled, alpha)
    res = rep.levels["completeness"]
    assert res.status == PASS and res.data["completions"] == len(toy_target)
    s = next(iter(toy_target))
    e = border_completions(compiled, alpha[s])
    assert e.complete and e.patches == [alpha[s]]


def test_completeness_budget_is_inconclusive(toy_min):
    compiled, alpha = toy_min
    rep = verify_completeness_small(compiled, alpha, budget=50)
    assert rep.levels["completeness"].status == INCONCLUSIVE


def test_fault_suite_direct(toy_min, toy_target):
    compiled, _ = toy_min
    found = fault_suite(compiled, toy_target, windows=2)
    assert set(found) == set(FAULTS)
    for fault, levels in found.items():
        assert levels, f"{fault} escaped every level"
