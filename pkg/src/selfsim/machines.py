"""Deterministic Turing machines and the fixed universal machine.

The universal machine is a two-track machine: the work track holds the input
word (cells 0, 1, or blank = 2), the read-only program track holds the whole
program container.  Programs are instruction streams for the frozen machine
definition in ``data/machine_v1.json`` (see ``docs/format-program.md``).
Execution time is charged per instruction as ``1 +`` the bit length of the
operands touched, which is how long a bit-serial single-tape implementation
needs for the same operation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import MalformedProgram, TargetTooLarge

BLANK = 2
LEFT, STAY, RIGHT = -1, 0, 1

_SPEC = json.loads(resources.files("selfsim").joinpath("data/machine_v1.json").read_text())
MACHINE_VERSION: int = _SPEC["version"]
OPCODES: dict[str, int] = {name: i for i, (name, _) in enumerate(_SPEC["opcodes"])}
OPERANDS: list[str] = [ops for _, ops in _SPEC["opcodes"]]
MODES: dict[str, int] = dict(_SPEC["modes"])
OPCODE_BITS: int = _SPEC["opcode_bits"]
REGISTER_BITS: int = _SPEC["register_bits"]
MODE_BITS: int = _SPEC["mode_bits"]
CALL_DEPTH: int = _SPEC["call_depth"]
MAX_LEVEL = (1 << 16) - 1


# --------------------------------------------------------------------------
# plain Turing machines

@dataclass(frozen=True)
class TuringMachine:
    """Single-tape deterministic machine on a two-way infinite tape.

    ``transitions`` maps ``(state, symbol)`` to ``(state, symbol, move)``
    with ``move`` in ``{-1, 0, 1}``.  A missing transition rejects.
    """

    transitions: Mapping[tuple[Hashable, Hashable], tuple[Hashable, Hashable, int]]
    initial: Hashable
    accepting: frozenset
    blank: Hashable = BLANK

    def __post_init__(self):
        for (q, _), (_, _, move) in self.transitions.items():
            if q in self.accepting:
                raise ValueError(f"accepting state {q!r} has an outgoing transition")
            if move not in (LEFT, STAY, RIGHT):
                raise ValueError(f"bad move {move!r}")

    @property
    def states(self) -> list:
        s = {self.initial, *self.accepting}
        for (q, _), (q2, _, _) in self.transitions.items():
            s.update((q, q2))
        return sorted(s, key=repr)

    @property
    def symbols(self) -> list:
        s = {self.blank}
        for (_, a), (_, b, _) in self.transitions.items():
            s.update((a, b))
        return sorted(s, key=repr)


@dataclass(frozen=True)
class MachineConfig:
    """Tape (work track, program track), head, state and step counter."""

    tape: tuple[tuple[int, Hashable], ...]
    head: int
    state: Hashable
    steps: int = 0
    program: str = ""

    def symbol(self, pos: int, blank=BLANK):
        for p, s in self.tape:
            if p == pos:
                return s
        return blank

    def window(self, lo: int, hi: int, blank=BLANK) -> list:
        cells = dict(self.tape)
        return [cells.get(i, blank) for i in range(lo, hi)]


def initial_config(machine: TuringMachine, word: Sequence) -> MachineConfig:
    tape = tuple((i, s) for i, s in enumerate(word) if s != machine.blank)
    return MachineConfig(tape, 0, machine.initial, 0)


@dataclass(frozen=True)
class Halted:
    accepted: bool
    config: MachineConfig


def step(machine: TuringMachine, cfg: MachineConfig) -> MachineConfig | Halted:
    """Apply one transition.  Undefined transitions halt and reject; entering
    an accepting state halts and accepts."""
    sym = cfg.symbol(cfg.head, machine.blank)
    tr = machine.transitions.get((cfg.state, sym))
    if tr is None:
        return Halted(False, cfg)
    q2, s2, move = tr
    cells = dict(cfg.tape)
    if s2 == machine.blank:
        cells.pop(cfg.head, None)
    else:
        cells[cfg.head] = s2
    new = MachineConfig(tuple(sorted(cells.items())), cfg.head + move, q2, cfg.steps + 1, cfg.program)
    if q2 in machine.accepting:
        return Halted(True, new)
    return new


@dataclass(frozen=True)
class RunOutcome:
    verdict: str  # accepted | rejected | out_of_time | out_of_space
    steps: int
    max_space: int

    @property
    def accepted(self) -> bool:
        return self.verdict == "accepted"

    @property
    def rejected(self) -> bool:
        return self.verdict == "rejected"


def run_machine(machine: TuringMachine, word: Sequence, max_steps: int = 10_000,
                trace: bool = False) -> tuple[RunOutcome, list[MachineConfig]]:
    """Run from the initial configuration; optionally record every config."""
    cfg = initial_config(machine, word)
    configs = [cfg] if trace else []
    lo, hi = 0, max(len(word), 1)
    if machine.initial in machine.accepting:
        return RunOutcome("accepted", 0, hi - lo), configs
    while cfg.steps < max_steps:
        nxt = step(machine, cfg)
        if isinstance(nxt, Halted):
            if trace and nxt.accepted:
                configs.append(nxt.config)
            space = max(hi, nxt.config.head + 1) - min(lo, nxt.config.head)
            return RunOutcome("accepted" if nxt.accepted else "rejected", nxt.config.steps, space), configs
        cfg = nxt
        lo, hi = min(lo, cfg.head), max(hi, cfg.head + 1)
        if trace:
            configs.append(cfg)
    return RunOutcome("out_of_time", cfg.steps, hi - lo), configs


def recognizer_machine(words: Iterable[str], length: int) -> TuringMachine:
    """Trie machine accepting exactly ``words`` (all of ``length`` bits).

    It reads the input left to right, one cell per step, and accepts on the
    blank after the last bit.  Acceptance takes exactly ``length + 1`` steps.
    States are trie nodes numbered in breadth-first order; ``-1`` accepts.
    """
    words = sorted(set(words))
    for w in words:
        if len(w) != length:
            raise ValueError("word length mismatch")
    ids: dict[str, int] = {"": 0}
    frontier = [""]
    trans = {}
    for depth in range(length):
        nxt = []
        for prefix in frontier:
            for bit in "01":
                child = prefix + bit
                if any(w.startswith(child) for w in words):
                    ids[child] = len(ids)
                    nxt.append(child)
                    trans[(ids[prefix], int(bit))] = (ids[child], int(bit), RIGHT)
        frontier = nxt
    for w in words:
        trans[(ids[w], BLANK)] = (-1, BLANK, STAY)
    return TuringMachine(trans, 0, frozenset({-1}))


# --------------------------------------------------------------------------
# program container

def gamma_encode(v: int) -> str:
    """Elias gamma code of ``v + 1`` (so every ``v >= 0`` is encodable)."""
    if v < 0:
        raise ValueError("negative immediate")
    b = bin(v + 1)[2:]
    return "0" * (len(b) - 1) + b


def gamma_decode(bits: str, pos: int) -> tuple[int, int]:
    zeros = 0
    while pos + zeros < len(bits) and bits[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(bits):
        raise MalformedProgram("truncated gamma code")
    return int(bits[pos + zeros:end], 2) - 1, end


@dataclass(frozen=True)
class MachineProgram:
    """A program container: ``mode(4) | gamma(level) | gamma(len) | body``."""

    bits: str

    def __post_init__(self):
        if set(self.bits) - {"0", "1"}:
            raise MalformedProgram("program bits must be 0/1")

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    @property
    def header(self) -> tuple[int, int, int, int]:
        """``(mode, level, body_length, body_offset)``; raises on bad framing."""
        if len(self.bits) < MODE_BITS:
            raise MalformedProgram("program shorter than its mode header")
        mode = int(self.bits[:MODE_BITS], 2)
        if mode not in MODES.values():
            raise MalformedProgram(f"unknown mode {mode}")
        level, pos = gamma_decode(self.bits, MODE_BITS)
        length, pos = gamma_decode(self.bits, pos)
        if pos + length != len(self.bits):
            raise MalformedProgram(f"length prefix {length} does not match body ({len(self.bits) - pos})")
        return mode, level, length, pos

    @property
    def mode(self) -> int:
        return self.header[0]

    @property
    def level(self) -> int:
        return self.header[1]

    @property
    def body(self) -> str:
        return self.bits[self.header[3]:]

    def with_level(self, level: int) -> "MachineProgram":
        mode, _, _, off = self.header
        return make_program(mode, self.bits[off:], level)

    def flip(self, i: int) -> "MachineProgram":
        b = "1" if self.bits[i] == "0" else "0"
        return MachineProgram(self.bits[:i] + b + self.bits[i + 1:])


def make_program(mode: int | str, body: str, level: int = 0) -> MachineProgram:
    if isinstance(mode, str):
        mode = MODES[mode]
    return MachineProgram(format(mode, f"0{MODE_BITS}b") + gamma_encode(level) + gamma_encode(len(body)) + body)


# --------------------------------------------------------------------------
# assembler

class Asm:
    """Two-pass assembler; jump operands may be label names."""

    def __init__(self):
        self.code: list[tuple[str, tuple]] = []
        self.labels: dict[str, int] = {}
        self._fresh = 0

    def label(self, name: str) -> None:
        if name in self.labels:
            raise ValueError(f"duplicate label {name}")
        self.labels[name] = len(self.code)

    def fresh(self, stem: str = "L") -> str:
        self._fresh += 1
        return f"_{stem}{self._fresh}"

    def __getattr__(self, op: str):
        if op not in OPCODES:
            raise AttributeError(op)

        def emit(*args):
            if len(args) != len(OPERANDS[OPCODES[op]]):
                raise TypeError(f"{op} takes {len(OPERANDS[OPCODES[op]])} operands")
            self.code.append((op, args))
        return emit

    def assemble(self) -> str:
        out = []
        for op, args in self.code:
            out.append(format(OPCODES[op], f"0{OPCODE_BITS}b"))
            for kind, a in zip(OPERANDS[OPCODES[op]], args):
                if isinstance(a, str):
                    a = self.labels[a]
                if kind == "r":
                    if not 0 <= a < 1 << REGISTER_BITS:
                        raise ValueError(f"bad register {a}")
                    out.append(format(a, f"0{REGISTER_BITS}b"))
                else:
                    out.append(gamma_encode(a))
        return "".join(out)

    def program(self, mode: int | str, level: int = 0) -> MachineProgram:
        return make_program(mode, self.assemble(), level)


def decode_body(body: str) -> list[tuple]:
    """Instruction stream to ``(opcode, operand...)`` tuples."""
    instrs = []
    pos = 0
    nops = len(OPCODES)
    while pos < len(body):
        if pos + OPCODE_BITS > len(body):
            raise MalformedProgram("truncated opcode")
        op = int(body[pos:pos + OPCODE_BITS], 2)
        pos += OPCODE_BITS
        if op >= nops:
            raise MalformedProgram(f"unknown opcode {op}")
        args = []
        for kind in OPERANDS[op]:
            if kind == "r":
                if pos + REGISTER_BITS > len(body):
                    raise MalformedProgram("truncated register operand")
                args.append(int(body[pos:pos + REGISTER_BITS], 2))
                pos += REGISTER_BITS
            else:
                v, pos = gamma_decode(body, pos)
                args.append(v)
        instrs.append((op, *args))
    n = len(instrs)
    for ins in instrs:
        name = _SPEC["opcodes"][ins[0]][0]
        if name in ("JMP", "CALL") and ins[1] >= n:
            raise MalformedProgram("jump target out of range")
        if name.startswith("J") and name != "JMP" and ins[-1] >= n:
            raise MalformedProgram("jump target out of range")
    return instrs


_DECODE_CACHE: dict[str, tuple[list[tuple], int, int]] = {}


def _decoded(p: MachineProgram):
    hit = _DECODE_CACHE.get(p.bits)
    if hit is None:
        mode, level, _, off = p.header
        hit = (decode_body(p.bits[off:]), mode, level)
        if len(_DECODE_CACHE) > 256:
            _DECODE_CACHE.clear()
        _DECODE_CACHE[p.bits] = hit
    return hit


# --------------------------------------------------------------------------
# the universal machine

(ACCEPT, REJECT, LDI, MOV, ADD, SUB, ADDI, SUBI, JMP, JEQ, JNE, JLT, JGE, JEQI, JNEI, JLTI, JGEI,
 READ, WRITE, GETBITS, PBIT, PLEN, CALL, RET, SHLI, SHRI, ANDI, XOR, MUL, OR) = range(30)
assert len(OPCODES) == 30 and OPCODES["OR"] == OR


def _bl(v: int) -> int:
    return v.bit_length() if v >= 0 else (-v).bit_length()


@dataclass
class RunStats:
    instructions: int = 0
    time: int = 0
    work: dict = field(default_factory=dict)  # final work track, blank cells omitted


def universal_run(p: MachineProgram, w: str | Sequence[int], time_budget: int = 1_000_000,
                  space_budget: int = 1_000_000, stats: RunStats | None = None) -> RunOutcome:
    """Run program ``p`` on input ``w`` under the given budgets.

    Raises ``MalformedProgram`` if the container framing or the instruction
    stream is invalid.
    """
    if time_budget <= 0 or space_budget <= 0:
        raise ValueError("budgets must be positive")
    instrs, _, _ = _decoded(p)
    prog = p.bits
    plen = len(prog)
    work: dict[int, int] = {}
    for i, ch in enumerate(w):
        v = int(ch)
        if v not in (0, 1, BLANK):
            raise ValueError("input cells must be 0, 1 or blank")
        if v != BLANK:
            work[i] = v
    lo, hi = 0, max(len(w), 1)
    regs = [0] * 16
    maxbits = 0
    stack: list[int] = []
    pc = 0
    t = 0
    count = 0
    n = len(instrs)
    verdict = None
    while True:
        if pc >= n:
            verdict = "rejected"
            break
        ins = instrs[pc]
        op = ins[0]
        pc += 1
        count += 1
        if op == JEQI or op == JNEI or op == JLTI or op == JGEI:
            a = regs[ins[1]]
            t += 1 + max(_bl(a), _bl(ins[2]))
            b = ins[2]
            if ((op == JEQI and a == b) or (op == JNEI and a != b)
                    or (op == JLTI and a < b) or (op == JGEI and a >= b)):
                pc = ins[3]
        elif op == JEQ or op == JNE or op == JLT or op == JGE:
            a, b = regs[ins[1]], regs[ins[2]]
            t += 1 + max(_bl(a), _bl(b))
            if ((op == JEQ and a == b) or (op == JNE and a != b)
                    or (op == JLT and a < b) or (op == JGE and a >= b)):
                pc = ins[3]
        elif op == LDI:
            regs[ins[1]] = v = ins[2]
            t += 1 + _bl(v)
        elif op == MOV:
            regs[ins[1]] = v = regs[ins[2]]
            t += 1 + _bl(v)
        elif op == ADD or op == SUB or op == XOR or op == OR:
            a, b = regs[ins[1]], regs[ins[2]]
            v = a + b if op == ADD else a - b if op == SUB else a ^ b if op == XOR else a | b
            regs[ins[1]] = v
            t += 1 + max(_bl(a), _bl(b), _bl(v))
        elif op == ADDI or op == SUBI:
            a = regs[ins[1]]
            v = a + ins[2] if op == ADDI else a - ins[2]
            regs[ins[1]] = v
            t += 1 + max(_bl(a), _bl(v))
        elif op == JMP:
            pc = ins[1]
            t += 1
        elif op == READ:
            addr = regs[ins[2]]
            regs[ins[1]] = work.get(addr, BLANK)
            lo, hi = min(lo, addr), max(hi, addr + 1)
            t += 1 + _bl(addr)
        elif op == GETBITS:
            addr = regs[ins[2]]
            width = ins[3]
            v = 0
            for i in range(addr, addr + width):
                v = (v << 1) | (work.get(i, BLANK) & 1)
            regs[ins[1]] = v
            lo, hi = min(lo, addr), max(hi, addr + width)
            t += 1 + width + _bl(addr)
        elif op == PBIT:
            addr = regs[ins[2]]
            regs[ins[1]] = int(prog[addr]) if 0 <= addr < plen else BLANK
            t += 1 + _bl(addr)
        elif op == ACCEPT:
            verdict = "accepted"
            t += 1
            break
        elif op == REJECT:
            verdict = "rejected"
            t += 1
            break
        elif op == CALL:
            if len(stack) >= CALL_DEPTH:
                verdict = "out_of_space"
                break
            stack.append(pc)
            pc = ins[1]
            t += 1
        elif op == RET:
            if not stack:
                verdict = "rejected"
                break
            pc = stack.pop()
            t += 1
        elif op == WRITE:
            addr, v = regs[ins[1]], regs[ins[2]]
            if v not in (0, 1, BLANK):
                verdict = "rejected"
                break
            if v == BLANK:
                work.pop(addr, None)
            else:
                work[addr] = v
            lo, hi = min(lo, addr), max(hi, addr + 1)
            t += 1 + _bl(addr)
        elif op == SHLI or op == SHRI or op == ANDI:
            a = regs[ins[1]]
            v = a << ins[2] if op == SHLI else a >> ins[2] if op == SHRI else a & ins[2]
            regs[ins[1]] = v
            t += 1 + max(_bl(a), _bl(v))
        elif op == MUL:
            a, b = regs[ins[1]], regs[ins[2]]
            regs[ins[1]] = v = a * b
            t += 1 + max(1, _bl(a)) * max(1, _bl(b))
        elif op == PLEN:
            regs[ins[1]] = plen
            t += 1 + _bl(plen)
        else:  # pragma: no cover - decode_body rejects unknown opcodes
            raise MalformedProgram(f"opcode {op}")
        if t > time_budget:
            verdict = "out_of_time"
            break
        rb = max(_bl(r) for r in regs) if op not in (JMP, ACCEPT, REJECT, CALL, RET) else maxbits
        if rb > maxbits:
            maxbits = rb
        if plen + (hi - lo) + 16 * maxbits > space_budget:
            verdict = "out_of_space"
            break
    if stats is not None:
        stats.instructions = count
        stats.time = t
        stats.work = dict(work)
    return RunOutcome(verdict, t, plen + (hi - lo) + 16 * maxbits)


# --------------------------------------------------------------------------
# program builders

MAX_TABLE = 1 << 12


def encode_tile_bits(tile: Sequence[int], k: int) -> str:
    """``east || north || west || south``, each color as ``k`` bits MSB first."""
    return "".join(format(c, f"0{k}b") if k else "" for c in tile)


def decode_tile_bits(word: str, k: int) -> tuple[int, int, int, int]:
    if len(word) != 4 * k:
        raise ValueError(f"expected {4 * k} bits")
    return tuple(int(word[i * k:(i + 1) * k] or "0", 2) for i in range(4))


def _framing_check(a: Asm, length: int, reject: str) -> None:
    """Reject unless the input is exactly ``length`` bits followed by blank."""
    a.LDI(1, length)
    a.READ(0, 1)
    a.JNEI(0, BLANK, reject)
    a.LDI(1, 0)
    loop, done = a.fresh("frame"), a.fresh("framed")
    a.label(loop)
    a.JGEI(1, length, done)
    a.READ(0, 1)
    a.JGEI(0, BLANK, reject)
    a.ADDI(1, 1)
    a.JMP(loop)
    a.label(done)


def compile_recognizer(tiles, k: int | None = None) -> MachineProgram:
    """Table-mode program accepting exactly ``encode_tile_bits(s, k)`` for
    ``s`` in the explicit tile set ``tiles``."""
    k = tiles.color_len if k is None else k
    entries = sorted({int(encode_tile_bits(t, k) or "0", 2) for t in tiles})
    if len(entries) > MAX_TABLE:
        raise TargetTooLarge(f"{len(entries)} tiles exceed the table limit {MAX_TABLE}")
    a = Asm()
    _framing_check(a, 4 * k, "reject")
    a.LDI(1, 0)
    a.GETBITS(2, 1, 4 * k)
    for e in entries:
        a.JEQI(2, e, "accept")
    a.label("reject")
    a.REJECT()
    a.label("accept")
    a.ACCEPT()
    return a.program("table")


def compile_tm(machine: TuringMachine, symbol_codes: Mapping | None = None) -> MachineProgram:
    """TM-mode program that emulates ``machine`` step by step on the work track.

    ``symbol_codes`` maps machine symbols to work-track cell values; the
    default maps ``0, 1`` and the blank to ``0, 1, 2`` and any further symbols
    to 3, 4, ...
    """
    if symbol_codes is None:
        symbol_codes = {0: 0, 1: 1, machine.blank: BLANK}
        extra = 3
        for s in machine.symbols:
            if s not in symbol_codes:
                symbol_codes[s] = extra
                extra += 1
    states = {q: i for i, q in enumerate(machine.states)}
    a = Asm()
    if machine.initial in machine.accepting:
        a.ACCEPT()
        return a.program("tm")
    # r1 head, r2 state, r3 symbol under head, r4 scratch
    a.LDI(1, 0)
    a.LDI(2, states[machine.initial])
    a.label("loop")
    a.READ(3, 1)
    by_state: dict = {}
    for (q, s), tr in sorted(machine.transitions.items(), key=lambda kv: (states[kv[0][0]], symbol_codes[kv[0][1]])):
        by_state.setdefault(q, []).append((s, tr))
    for q in by_state:
        a.JEQI(2, states[q], f"q{states[q]}")
    a.REJECT()
    for q, items in by_state.items():
        a.label(f"q{states[q]}")
        for s, _ in items:
            a.JEQI(3, symbol_codes[s], f"q{states[q]}s{symbol_codes[s]}")
        a.REJECT()
        for s, (q2, s2, move) in items:
            a.label(f"q{states[q]}s{symbol_codes[s]}")
            if s2 != s:
                a.LDI(4, symbol_codes[s2])
                a.WRITE(1, 4)
            if move == RIGHT:
                a.ADDI(1, 1)
            elif move == LEFT:
                a.SUBI(1, 1)
            if q2 in machine.accepting:
                a.ACCEPT()
            else:
                a.LDI(2, states[q2])
                a.JMP("loop")
    return a.program("tm")


def constant_program(accept: bool = True) -> MachineProgram:
    a = Asm()
    a.ACCEPT() if accept else a.REJECT()
    return a.program("generic")


def parity_program(even: bool = True) -> MachineProgram:
    """Accepts bit strings with an even (or odd) number of ones."""
    a = Asm()
    a.LDI(1, 0)
    a.LDI(2, 0)
    a.label("loop")
    a.READ(3, 1)
    a.JEQI(3, BLANK, "end")
    a.XOR(2, 3)
    a.ADDI(1, 1)
    a.JMP("loop")
    a.label("end")
    a.JEQI(2, 0 if even else 1, "yes")
    a.REJECT()
    a.label("yes")
    a.ACCEPT()
    return a.program("generic")
