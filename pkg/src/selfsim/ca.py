"""One-dimensional colony CA simulating a k-bit target rule.

A simulated cell becomes a colony of ``Q`` cells.  Every cell stores its
address in the colony, an age in ``[0, U-1]``, a simulation bit, a program
bit, two mailbox bits and an agent track.  One work period:

* age ``0``: both mailboxes copy the simulation bit;
* ages ``1..Q``: the right-moving mailbox takes its left neighbor's value,
  the left-moving one its right neighbor's, so after ``Q`` shifts cell
  ``x`` holds the bits of cell ``x - Q`` and ``x + Q``;
* age ``Q+1``: the agent appears on address 0;
* ages ``Q+2..U-2``: the agent reads the ``l, c, r`` bits from addresses
  ``0..k-1``, walks to the rule table stored in the program bits, reads the
  ``k`` result bits, walks back and writes them into the simulation bits;
* age ``U-1``: mailboxes and agent are cleared and the age wraps to 0.

The rule table is the body of a ``ca_table`` program container stored in
the program bits of every colony.  The offset ``s`` is always 0.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import ColonyTooSmall, InvalidNeighborhood, MalformedProgram, WorkPeriodTooShort
from .machines import MODES, MachineProgram, make_program, universal_run

FORMAT_VERSION = 1
STRICT, FREEZE = "strict", "freeze"

# agent phases
READ, SEEK, FETCH, RETURN, WRITE, DONE = range(6)
_PHASE_BITS = 3


class CAState(NamedTuple):
    address: int
    age: int
    sim: int
    prog: int
    mail_left: int
    mail_right: int
    head: int
    agent: int


# --------------------------------------------------------------------------
# target rules

def rule_table_program(fn: Callable[[int, int, int], int], k: int) -> MachineProgram:
    """``ca_table`` container whose body lists ``fn(l, c, r)`` (k bits each)
    for ``idx = l << 2k | c << k | r`` in increasing order."""
    body = []
    for idx in range(1 << (3 * k)):
        l, c, r = idx >> (2 * k), (idx >> k) & ((1 << k) - 1), idx & ((1 << k) - 1)
        v = fn(l, c, r)
        if not 0 <= v < 1 << k:
            raise ValueError("rule output out of range")
        body.append(format(v, f"0{k}b"))
    return make_program("ca_table", "".join(body))


def xor_rule(l: int, c: int, r: int) -> int:
    return l ^ r


def majority_rule(l: int, c: int, r: int) -> int:
    return int(l + c + r >= 2)


def table_of(program: MachineProgram, k: int) -> list[int]:
    """The lookup table of a target program.  ``ca_table`` containers are
    read directly; any other single-bit program is evaluated on the
    universal machine over all ``l c r`` words (accept = 1)."""
    if program.mode == MODES["ca_table"]:
        body = program.body
        if len(body) != k << (3 * k):
            raise MalformedProgram(f"table body has {len(body)} bits, expected {k << (3 * k)}")
        return [int(body[i * k:(i + 1) * k], 2) for i in range(1 << (3 * k))]
    if k != 1:
        raise MalformedProgram("only ca_table programs describe multi-bit rules")
    return [int(universal_run(program, format(idx, "03b")).accepted) for idx in range(8)]


def apply_target(table: Sequence[int], x: Sequence[int], k: int) -> list[int]:
    w = len(x)
    return [table[(x[(i - 1) % w] << (2 * k)) | (x[i] << k) | x[(i + 1) % w]] for i in range(w)]


# --------------------------------------------------------------------------
# the agent

def _pack_agent(phase: int, lb: int, cb: int, rb: int, res: int, k: int) -> int:
    return phase | (lb << 3) | (cb << (3 + k)) | (rb << (3 + 2 * k)) | (res << (3 + 3 * k))


def _unpack_agent(v: int, k: int) -> tuple[int, int, int, int, int]:
    m = (1 << k) - 1
    return v & 7, (v >> 3) & m, (v >> (3 + k)) & m, (v >> (3 + 2 * k)) & m, (v >> (3 + 3 * k)) & m


def agent_step(state: int, addr: int, sim: int, prog: int, ml: int, mr: int,
               k: int, table_offset: int) -> tuple[int, int | None, int]:
    """One agent move on the cell it occupies: ``(new_state, sim_write or
    None, move)`` with ``move`` in ``{-1, 0, 1}``."""
    phase, lb, cb, rb, res = _unpack_agent(state, k)
    if phase == READ:
        lb, cb, rb = (lb << 1) | mr, (cb << 1) | sim, (rb << 1) | ml
        lb, cb, rb = lb & ((1 << k) - 1), cb & ((1 << k) - 1), rb & ((1 << k) - 1)
        if addr == k - 1:
            return _pack_agent(SEEK, lb, cb, rb, 0, k), None, 1
        return _pack_agent(READ, lb, cb, rb, 0, k), None, 1
    target = table_offset + (((lb << (2 * k)) | (cb << k) | rb) * k)
    if phase == SEEK:
        if addr < target:
            return state, None, 1
        phase = FETCH
    if phase == FETCH:
        res = ((res << 1) | prog) & ((1 << k) - 1)
        if addr == target + k - 1:
            return _pack_agent(RETURN, lb, cb, rb, res, k), None, -1
        return _pack_agent(FETCH, lb, cb, rb, res, k), None, 1
    if phase == RETURN:
        if addr > 0:
            return state, None, -1
        phase = WRITE
    if phase == WRITE:
        bit = (res >> (k - 1 - addr)) & 1
        if addr == k - 1:
            return _pack_agent(DONE, lb, cb, rb, res, k), bit, 0
        return _pack_agent(WRITE, lb, cb, rb, res, k), bit, 1
    return state, None, 0


def agent_run_length(table_offset: int, k: int, program_bits: str, lcr: tuple[int, int, int]) -> int:
    """Agent steps from its first move until it reaches DONE, for one input."""
    l, c, r = lcr
    state = _pack_agent(READ, 0, 0, 0, 0, k)
    addr, steps = 0, 0
    while _unpack_agent(state, k)[0] != DONE:
        bit = lambda v: (v >> (k - 1 - addr)) & 1 if addr < k else 0  # noqa: E731
        prog = int(program_bits[addr]) if addr < len(program_bits) else 0
        state, _, move = agent_step(state, addr, bit(c), prog, bit(r), bit(l), k, table_offset)
        addr += move
        steps += 1
    return steps


# --------------------------------------------------------------------------
# rule and coding

@dataclass(frozen=True)
class CARule:
    q: int
    u: int
    k: int
    program: MachineProgram
    mode: str = STRICT

    @property
    def table_offset(self) -> int:
        return self.program.header[3]

    @property
    def program_bits(self) -> str:
        return self.program.bits

    @property
    def agent_bits(self) -> int:
        return _PHASE_BITS + 4 * self.k

    def descriptor(self) -> dict:
        return {"format_version": FORMAT_VERSION, "Q": self.q, "U": self.u, "k": self.k,
                "mode": self.mode, "program": self.program.bits}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CARule":
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported rule format {d.get('format_version')}")
        return cls(int(d["Q"]), int(d["U"]), int(d["k"]), MachineProgram(d["program"]), d.get("mode", STRICT))


@dataclass(frozen=True)
class ColonyCoding:
    q: int
    k: int
    program_bits: str
    s: int = 0

    def block(self, v: int) -> list[CAState]:
        out = []
        for a in range(self.q):
            sim = (v >> (self.k - 1 - a)) & 1 if a < self.k else 0
            prog = int(self.program_bits[a]) if a < len(self.program_bits) else 0
            out.append(CAState(a, 0, sim, prog, 0, 0, 0, 0))
        return out


def agent_worst_case(program: MachineProgram, k: int) -> int:
    offset = program.header[3]
    bits = program.bits
    worst = 0
    for idx in range(1 << (3 * k)):
        lcr = (idx >> (2 * k), (idx >> k) & ((1 << k) - 1), idx & ((1 << k) - 1))
        worst = max(worst, agent_run_length(offset, k, bits, lcr))
    return worst


def u_min(program: MachineProgram, k: int, q: int) -> int:
    """Smallest work period: ``Q + 1`` mailbox ages, the spawn age, the
    agent's worst case and the reset age."""
    return q + 3 + agent_worst_case(program, k)


def build_simulator(program: MachineProgram, k: int, q: int, u: int | None = None,
                    mode: str = STRICT, round_pow2: bool = True) -> tuple[CARule, ColonyCoding]:
    """CA rule and colony coding for the target rule ``program``.  ``u=None``
    takes U_min, rounded up to a power of two unless ``round_pow2`` is off."""
    if q < k:
        raise ColonyTooSmall(f"Q={q} < k={k}")
    if program.mode != MODES["ca_table"]:
        program = rule_table_program(lambda l, c, r, t=table_of(program, k): t[(l << 2) | (c << 1) | r], k)
    table_of(program, k)
    if len(program) > q:
        raise ColonyTooSmall(f"program of {len(program)} bits does not fit a colony of {q}")
    need = u_min(program, k, q)
    if u is None:
        u = need if not round_pow2 else 1 << (need - 1).bit_length()
    if u < need:
        raise WorkPeriodTooShort(f"U={u} < U_min={need}", need)
    if mode not in (STRICT, FREEZE):
        raise ValueError(mode)
    return CARule(q, u, k, program, mode), ColonyCoding(q, k, program.bits)


# --------------------------------------------------------------------------
# configurations

@dataclass
class CAConfiguration:
    """Structure-of-arrays configuration with a periodic boundary."""

    address: np.ndarray
    age: np.ndarray
    sim: np.ndarray
    prog: np.ndarray
    mail_left: np.ndarray
    mail_right: np.ndarray
    head: np.ndarray
    agent: np.ndarray

    FIELDS = ("address", "age", "sim", "prog", "mail_left", "mail_right", "head", "agent")

    @property
    def width(self) -> int:
        return len(self.address)

    def cell(self, x: int) -> CAState:
        return CAState(*(int(getattr(self, f)[x]) for f in self.FIELDS))

    def cells(self) -> list[CAState]:
        return [self.cell(x) for x in range(self.width)]

    @classmethod
    def from_cells(cls, cells: Iterable[CAState]) -> "CAConfiguration":
        cells = list(cells)
        cols = list(zip(*cells)) if cells else [[] for _ in cls.FIELDS]
        return cls(*(np.array(c, dtype=np.int64) for c in cols))

    def copy(self) -> "CAConfiguration":
        return CAConfiguration(*(getattr(self, f).copy() for f in self.FIELDS))

    def __eq__(self, other) -> bool:
        return isinstance(other, CAConfiguration) and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in self.FIELDS)

    def first_difference(self, other: "CAConfiguration") -> int | None:
        diff = np.zeros(self.width, dtype=bool)
        for f in self.FIELDS:
            diff |= getattr(self, f) != getattr(other, f)
        idx = np.flatnonzero(diff)
        return int(idx[0]) if len(idx) else None


def encode_config(coding: ColonyCoding, x: Sequence[int]) -> CAConfiguration:
    cells = []
    for v in x:
        cells.extend(coding.block(v))
    return CAConfiguration.from_cells(cells)


def decode_config(coding: ColonyCoding, config: CAConfiguration) -> list[int]:
    q, k = coding.q, coding.k
    if config.width % q:
        raise ValueError("width is not a multiple of Q")
    out = []
    for b in range(config.width // q):
        bits = config.sim[b * q:b * q + k]
        out.append(int("".join(map(str, bits)) or "0", 2))
    return out


# --------------------------------------------------------------------------
# the local rule (scalar) and the vectorized step

def triple_valid(rule: CARule, left: CAState, center: CAState, right: CAState) -> bool:
    q, u = rule.q, rule.u
    if not (0 <= center.address < q and 0 <= center.age < u):
        return False
    if left.address != (center.address - 1) % q or right.address != (center.address + 1) % q:
        return False
    if not left.age == center.age == right.age:
        return False
    bits = rule.program_bits
    if center.prog != (int(bits[center.address]) if center.address < len(bits) else 0):
        return False
    if min(center.sim, center.prog, center.mail_left, center.mail_right, center.head) < 0 or \
            max(center.sim, center.prog, center.mail_left, center.mail_right, center.head) > 1:
        return False
    if center.age == 0 and (center.mail_left or center.mail_right or center.head or center.agent):
        return False
    if center.age <= rule.q + 1 and (center.head or center.agent):
        return False
    if center.sim and center.address >= rule.k:
        return False
    return True


def _agent_move(rule: CARule, c: CAState):
    return agent_step(c.agent, c.address, c.sim, c.prog, c.mail_left, c.mail_right, rule.k, rule.table_offset)


def local_rule(rule: CARule, left: CAState, center: CAState, right: CAState) -> CAState:
    """The CA's local function on one neighborhood (valid triples only)."""
    q, u = rule.q, rule.u
    age = center.age
    new_age = (age + 1) % u
    sim, ml, mr, head, agent = center.sim, center.mail_left, center.mail_right, 0, 0
    if age == 0:
        ml = mr = center.sim
    elif age <= q:
        mr, ml = left.mail_right, right.mail_left
    elif age == u - 1:
        ml = mr = 0
    elif age == q + 1:
        if center.address == 0:
            head, agent = 1, _pack_agent(READ, 0, 0, 0, 0, rule.k)
    else:
        if center.head:
            st, write, move = _agent_move(rule, center)
            if write is not None:
                sim = write
            if move == 0:
                head, agent = 1, st
        if left.head:
            st, _, move = _agent_move(rule, left)
            if move == 1:
                head, agent = 1, st
        if right.head:
            st, _, move = _agent_move(rule, right)
            if move == -1:
                head, agent = 1, st
    if age == u - 1:
        head, agent = 0, 0
    return CAState(center.address, new_age, sim, center.prog, ml, mr, head, agent)


def step_scalar(rule: CARule, config: CAConfiguration, time: int = 0) -> CAConfiguration:
    """Reference step: the local rule applied cell by cell."""
    cells = config.cells()
    w = len(cells)
    out = []
    for x in range(w):
        left, center, right = cells[(x - 1) % w], cells[x], cells[(x + 1) % w]
        if not triple_valid(rule, left, center, right):
            if rule.mode == STRICT:
                raise InvalidNeighborhood(x, time)
            out.append(center)
            continue
        out.append(local_rule(rule, left, center, right))
    return CAConfiguration.from_cells(out)


def invalid_positions(rule: CARule, c: CAConfiguration) -> np.ndarray:
    """Boolean mask of cells whose neighborhood is outside the rule's domain."""
    q, u = rule.q, rule.u
    left = lambda a: np.roll(a, 1)  # noqa: E731
    right = lambda a: np.roll(a, -1)  # noqa: E731
    bits = np.array([int(b) for b in rule.program_bits], dtype=np.int64)
    expected_prog = np.zeros(c.width, dtype=np.int64)
    inside = c.address < len(bits)
    expected_prog[inside] = bits[np.clip(c.address[inside], 0, max(len(bits) - 1, 0))]
    bad = (c.address < 0) | (c.address >= q) | (c.age < 0) | (c.age >= u)
    bad |= left(c.address) != (c.address - 1) % q
    bad |= right(c.address) != (c.address + 1) % q
    bad |= (left(c.age) != c.age) | (right(c.age) != c.age)
    bad |= c.prog != expected_prog
    for f in (c.sim, c.prog, c.mail_left, c.mail_right, c.head):
        bad |= (f < 0) | (f > 1)
    bad |= (c.age == 0) & ((c.mail_left != 0) | (c.mail_right != 0) | (c.head != 0) | (c.agent != 0))
    bad |= (c.age <= q + 1) & ((c.head != 0) | (c.agent != 0))
    bad |= (c.sim != 0) & (c.address >= rule.k)
    return bad


def step_vectorized(rule: CARule, c: CAConfiguration, time: int = 0) -> CAConfiguration:
    q, u, k = rule.q, rule.u, rule.k
    bad = invalid_positions(rule, c)
    if bad.any() and rule.mode == STRICT:
        raise InvalidNeighborhood(int(np.flatnonzero(bad)[0]), time)
    n = c.copy()
    age = c.age
    n.age = (age + 1) % u
    copy = age == 0
    n.mail_left = np.where(copy, c.sim, c.mail_left)
    n.mail_right = np.where(copy, c.sim, c.mail_right)
    shift = (age >= 1) & (age <= q)
    n.mail_right = np.where(shift, np.roll(c.mail_right, 1), n.mail_right)
    n.mail_left = np.where(shift, np.roll(c.mail_left, -1), n.mail_left)
    reset = age == u - 1
    n.mail_left = np.where(reset, 0, n.mail_left)
    n.mail_right = np.where(reset, 0, n.mail_right)
    spawn = (age == q + 1) & (c.address == 0)
    n.head = np.where(spawn, 1, 0)
    n.agent = np.where(spawn, _pack_agent(READ, 0, 0, 0, 0, k), 0)
    active = (age > q + 1) & (age < u - 1)
    w = c.width
    for x in np.flatnonzero((c.head == 1) & active):
        x = int(x)
        cell = c.cell(x)
        st, write, move = _agent_move(rule, cell)
        if write is not None:
            n.sim[x] = write
        y = (x + move) % w
        n.head[y] = 1
        n.agent[y] = st
    if bad.any():  # freeze mode
        for f in CAConfiguration.FIELDS:
            getattr(n, f)[bad] = getattr(c, f)[bad]
    return n


def step_ca(rule: CARule, config: CAConfiguration, steps: int, start_time: int = 0,
            on_step: Callable[[int, CAConfiguration, CAConfiguration], None] | None = None) -> CAConfiguration:
    if config.width < 3:
        raise ValueError("configuration width must be at least 3")
    for t in range(steps):
        nxt = step_vectorized(rule, config, start_time + t)
        if on_step is not None:
            on_step(start_time + t, config, nxt)
        config = nxt
    return config


def spacetime(rule: CARule, config: CAConfiguration, steps: int) -> list[CAConfiguration]:
    rows = [config]
    for t in range(steps):
        rows.append(step_vectorized(rule, rows[-1], t))
    return rows


# --------------------------------------------------------------------------
# phase discipline

@dataclass
class PhaseMonitor:
    """Per-step invariant checks; collects violations instead of raising."""

    rule: CARule
    steps: int = 0
    violations: list = None

    def __post_init__(self):
        if self.violations is None:
            self.violations = []

    def __call__(self, t: int, old: CAConfiguration, new: CAConfiguration) -> None:
        q, u = self.rule.q, self.rule.u
        self.steps += 1
        if not np.array_equal(old.address, new.address):
            self.violations.append(("address", t))
        if not np.array_equal(new.age, (old.age + 1) % u):
            self.violations.append(("age", t))
        mail_changed = (old.mail_left != new.mail_left) | (old.mail_right != new.mail_right)
        # clearing at the reset age is part of the cycle; everything else
        # must happen during ages 0..Q
        outside = mail_changed & ~((old.age <= q) | (old.age == u - 1))
        if outside.any():
            self.violations.append(("mailbox", t, int(np.flatnonzero(outside)[0])))
        sim_changed = old.sim != new.sim
        if (sim_changed & (old.head == 0)).any():
            self.violations.append(("sim", t, int(np.flatnonzero(sim_changed & (old.head == 0))[0])))
        w = new.width
        for y in np.flatnonzero(new.head):
            y = int(y)
            colony = y // q
            if not any(old.head[x % w] and (x % w) // q == colony for x in (y - 1, y, y + 1)) \
                    and not (old.age[y] == q + 1 and new.address[y] == 0):
                self.violations.append(("agent", t, y))
        for b in range(w // q):
            if new.head[b * q:(b + 1) * q].sum() > 1:
                self.violations.append(("agent_count", t, b))


# --------------------------------------------------------------------------
# bulking

@dataclass
class BulkingFailure:
    x: list[int]
    cell: int
    divergence: int | None


@dataclass
class BulkingReport:
    checked: int
    failures: list[BulkingFailure]
    violations: list
    steps: int

    @property
    def passed(self) -> bool:
        return not self.failures and not self.violations

    def to_text(self) -> str:
        lines = ["[bulking]", f"format_version = {FORMAT_VERSION}", f"checked = {self.checked}",
                 f"failures = {len(self.failures)}", f"phase_violations = {len(self.violations)}",
                 f"monitored_steps = {self.steps}", f"status = {'pass' if self.passed else 'fail'}"]
        if self.failures:
            f = self.failures[0]
            lines.append(f"witness = x={f.x} cell={f.cell} divergence_time={f.divergence}")
        return "\n".join(lines) + "\n"


def _divergence_time(rule: CARule, start: CAConfiguration) -> int | None:
    """First step at which the vectorized run departs from the scalar
    reference rule (bisection over the recorded trajectories); ``None`` if
    both routes agree for the whole period."""
    fast, ref = [start], [start]
    for t in range(rule.u):
        fast.append(step_vectorized(rule, fast[-1], t))
        ref.append(step_scalar(rule, ref[-1], t))
    if fast[-1] == ref[-1]:
        return None
    lo, hi = 0, rule.u
    while lo < hi:
        mid = (lo + hi) // 2
        if fast[mid] == ref[mid]:
            lo = mid + 1
        else:
            hi = mid
    return lo


def bulking_test_set(widths: Iterable[int], k: int, random_count: int = 0, random_width: int = 64,
             seed: int = 0) -> list[list[int]]:
    out = []
    for w in widths:
        for v in range(1 << (k * w)):
            out.append([(v >> (k * (w - 1 - i))) & ((1 << k) - 1) for i in range(w)])
    rng = random.Random(seed)
    for _ in range(random_count):
        out.append([rng.getrandbits(k) for _ in range(random_width)])
    return out


def verify_bulking(rule: CARule, coding: ColonyCoding, target: MachineProgram | Sequence[int],
                   xs: Iterable[Sequence[int]], monitor: bool = True) -> BulkingReport:
    """phi^U(alpha(x)) == alpha(psi(x)) exactly, for every ``x``."""
    table = list(target) if not isinstance(target, MachineProgram) else table_of(target, rule.k)
    mon = PhaseMonitor(rule) if monitor else None
    failures = []
    count = 0
    for x in xs:
        x = list(x)
        count += 1
        start = encode_config(coding, x)
        got = step_ca(rule, start, rule.u, on_step=mon)
        want = encode_config(coding, apply_target(table, x, rule.k))
        if got != want:
            failures.append(BulkingFailure(x, got.first_difference(want), _divergence_time(rule, start)))
    return BulkingReport(count, failures, mon.violations if mon else [], mon.steps if mon else 0)


# --------------------------------------------------------------------------
# dump format

def record_widths(rule: CARule) -> tuple[int, int, int]:
    return len(str(rule.q - 1)), len(str(rule.u - 1)), (rule.agent_bits + 3) // 4


def dump_diagram(rule: CARule, rows: Sequence[CAConfiguration]) -> str:
    """One configuration per line; each cell is the fixed-width record
    ``address.age.sim prog mail_left mail_right head.agent`` (decimal
    address and age, hex agent)."""
    wa, wu, wg = record_widths(rule)
    lines = [f"# selfsim-ca-dump format_version={FORMAT_VERSION} Q={rule.q} U={rule.u} k={rule.k} "
             f"width={rows[0].width if rows else 0} rows={len(rows)}"]
    for c in rows:
        recs = [f"{s.address:0{wa}d}.{s.age:0{wu}d}.{s.sim}{s.prog}{s.mail_left}{s.mail_right}{s.head}.{s.agent:0{wg}x}"
                for s in c.cells()]
        lines.append(" ".join(recs))
    return "\n".join(lines) + "\n"


def load_diagram(text: str) -> list[CAConfiguration]:
    rows = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        cells = []
        for rec in line.split():
            addr, age, bits, agent = rec.split(".")
            cells.append(CAState(int(addr), int(age), *(int(b) for b in bits), int(agent, 16)))
        rows.append(CAConfiguration.from_cells(cells))
    return rows


def colony_program_matches(rule: CARule, config: CAConfiguration) -> bool:
    """Every colony stores the rule's own program (the CA-side quine check)."""
    q = rule.q
    bits = rule.program_bits
    want = np.array([int(bits[a]) if a < len(bits) else 0 for a in range(q)], dtype=np.int64)
    return all(np.array_equal(config.prog[b * q:(b + 1) * q], want) for b in range(config.width // q))
