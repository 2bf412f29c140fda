import pytest

from selfsim.ca import build_simulator, majority_rule, rule_table_program, xor_rule
from selfsim.compiler import compile_direct, direct_min_zoom
from selfsim.wang import TileSet

# two horizontal and two vertical stripes; every pair of tiles has a
# hand-checkable adjacency relation
TOY_TILES = [(0, 0, 1, 1), (1, 1, 0, 0), (0, 1, 1, 0), (1, 0, 0, 1)]


@pytest.fixture(scope="session")
def toy_target():
    return TileSet.explicit(2, TOY_TILES, name="toy")


@pytest.fixture(scope="session")
def toy_min(toy_target):
    compiled, alpha = compile_direct(toy_target, direct_min_zoom(toy_target))
    return compiled, alpha


@pytest.fixture(scope="session")
def fixpoint_build():
    from selfsim.fixpoint import build_fixpoint
    return build_fixpoint(seed=0)


@pytest.fixture(scope="session")
def xor_sim():
    return build_simulator(rule_table_program(xor_rule, 1), 1, 32)


@pytest.fixture(scope="session")
def majority_sim():
    return build_simulator(rule_table_program(majority_rule, 1), 1, 32)


# ---- acceptance bookkeeping: one pass/fail line per criterion -------------

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """``criterion(number, title)`` registers a criterion as failing until
    the test calls ``.passed(detail)``."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    class Entry:
        def __call__(self, number, title):
            self.number = number
            table[number] = [title, "FAIL", ""]
            return self

        def passed(self, detail=""):
            table[self.number][1:] = ["PASS", detail]

    return Entry()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        title, status, detail = table[number]
        line = f"criterion {number} [{title}]: {status}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
