"""Compile a target tile set into a simulating tile set T(N).

Every tile of T(N) has an address ``(i, j)`` in ``[0, N-1]^2``.  A color is
packed as ``x | y << nb | aux << 2nb`` where ``nb = ceil(log2 N)``:

* east ``(i+1 mod N, j)``, west ``(i, j)``, north ``(i, j+1 mod N)``,
  south ``(i, j)``, so each color carries both address components;
* ``aux = prog | pay << 1``: ``prog`` is the program bit (north/south edges
  of program columns only), ``pay`` the role payload.

Roles by address: wire cells carry one bit along their path; zone cells
carry the zone machine; everything else is filler with zero payload.

In ``direct`` mode the zone runs a trie recognizer of the target, one row
per step.  Vertical zone edges carry the cell content
``sym + 3 * (state + 1)`` (``state = -1`` for no head), horizontal edges a
head signal ``1 + 2 * state + dir`` (``dir`` 0 = moving east, 1 = west).

In ``fixpoint`` mode the zone holds the two tape tracks (input word and
program bits) and the run itself is accounted at program level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Mapping

import numpy as np

from . import layout as lay
from .errors import RecognizerBudgetExceeded, RecognizerRejected, ZoomTooSmall
from .layout import MacrotileLayout, plan_layout
from .machines import (BLANK, LEFT, RIGHT, STAY, MachineProgram, TuringMachine, compile_recognizer,
                       encode_tile_bits, recognizer_machine, run_machine)
from .wang import EAST, NORTH, SOUTH, WEST, Patch, SimulationMap, Tile, TileSet

FORMAT_VERSION = 1
FIXPOINT_PAY_BITS = 2  # m = 1 + 2 in fixpoint mode


def address_bits(n: int) -> int:
    return max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class ColorCodec:
    n: int
    m: int

    @property
    def nb(self) -> int:
        return address_bits(self.n)

    @property
    def length(self) -> int:
        return 2 * self.nb + self.m

    def pack(self, x: int, y: int, prog: int = 0, pay: int = 0) -> int:
        return x | (y << self.nb) | ((prog | (pay << 1)) << (2 * self.nb))

    def unpack(self, color: int) -> tuple[int, int, int, int]:
        nb = self.nb
        mask = (1 << nb) - 1
        aux = color >> (2 * nb)
        return color & mask, (color >> nb) & mask, aux & 1, aux >> 1

    def tile(self, i: int, j: int, pays: tuple[int, int, int, int], prog: int = 0) -> Tile:
        n = self.n
        return Tile(self.pack((i + 1) % n, j, 0, pays[EAST]),
                    self.pack(i, (j + 1) % n, prog, pays[NORTH]),
                    self.pack(i, j, 0, pays[WEST]),
                    self.pack(i, j, prog, pays[SOUTH]))

    def address(self, tile: Tile) -> tuple[int, int]:
        x, y, _, _ = self.unpack(tile.west)
        return x, y


@dataclass
class CompiledTileSet:
    """The implicit tile set T(N) together with its construction data."""

    layout: MacrotileLayout
    mode: str                               # "direct" | "fixpoint"
    codec: ColorCodec
    program: MachineProgram | None          # recognizer (direct) or p_T (fixpoint)
    k: int                                  # simulated color length
    machine: TuringMachine | None = None    # zone machine (direct mode)
    target: TileSet | None = None
    level: int = 0
    faults: frozenset = field(default_factory=frozenset)
    stored_program: MachineProgram | None = None  # column bits, if not ``program``

    # ---- basic properties -------------------------------------------------

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def color_len(self) -> int:
        return self.codec.length

    @property
    def m(self) -> int:
        return self.codec.m

    @property
    def program_bits(self) -> str:
        """Bits stored in the program columns (empty in direct mode)."""
        if self.mode != "fixpoint" or self.program is None:
            return ""
        return (self.stored_program or self.program).bits

    @cached_property
    def _states(self) -> list:
        return self.machine.states if self.machine is not None else []

    @cached_property
    def _state_index(self) -> dict:
        return {q: i for i, q in enumerate(self._states)}

    # ---- payload helpers (direct zone) -------------------------------------

    def content_code(self, sym: int, state=None) -> int:
        return sym + 3 * (0 if state is None else self._state_index[state] + 1)

    def decode_content(self, code: int):
        sym, h = code % 3, code // 3
        if h > len(self._states):
            return None
        return sym, (None if h == 0 else self._states[h - 1])

    def signal_code(self, state, direction: int) -> int:
        return 1 + 2 * self._state_index[state] + direction

    def decode_signal(self, code: int):
        if code == 0:
            return None
        s, direction = divmod(code - 1, 2)
        if s >= len(self._states):
            return False
        return self._states[s], direction

    # ---- tile construction ----------------------------------------------------

    def _prog_bit(self, i: int) -> int:
        idx = self.layout.program_column(i)
        return int(self.program_bits[idx]) if idx is not None else 0

    def _wire_tile(self, i: int, j: int, mask: int, bit: int) -> Tile:
        pays = tuple(bit if mask & (1 << side) else 0 for side in range(4))
        return self.codec.tile(i, j, pays, self._prog_bit(i))

    def _zone_tile_direct(self, i: int, j: int, content, incoming) -> Tile | None:
        """Zone tile for cell content ``(sym, state|None)`` at time ``j - c``
        and an incoming head ``(state, dir)`` or ``None``.  Bottom-row content
        is forced by the input; returns ``None`` where no tile exists."""
        L = self.layout
        x, r = i - L.a, j - L.c
        width, top = L.zone_width, L.zone_height
        sym, head = content
        m = self.machine
        if r == 0:
            want_head = m.initial if x == 0 else None
            if head != want_head or (x >= 4 * self.k and sym != BLANK) or (x < 4 * self.k and sym == BLANK):
                return None
            south = sym if x < 4 * self.k else 0
        else:
            south = self.content_code(sym, head)
        east = west = 0
        if r == top:
            if incoming is not None or (head is not None and head not in m.accepting):
                return None
            north = 0
        elif head is not None:
            if incoming is not None:
                return None
            if head in m.accepting:
                north = self.content_code(sym, head)
            else:
                tr = m.transitions.get((head, sym))
                if tr is None:
                    return None
                q2, s2, move = tr
                if move == STAY:
                    north = self.content_code(s2, q2)
                elif move == RIGHT:
                    if x == width - 1:
                        return None
                    north, east = self.content_code(s2), self.signal_code(q2, 0)
                else:
                    if x == 0:
                        return None
                    north, west = self.content_code(s2), self.signal_code(q2, 1)
        else:
            if incoming is None:
                north = self.content_code(sym)
            else:
                q2, direction = incoming
                if direction == 0:
                    if x == 0:
                        return None
                    west = self.signal_code(q2, 0)
                else:
                    if x == width - 1:
                        return None
                    east = self.signal_code(q2, 1)
                north = self.content_code(sym, q2)
        return self.codec.tile(i, j, (east, north, west, south), self._prog_bit(i))

    def _zone_tile_fixpoint(self, i: int, j: int, sym: int) -> Tile | None:
        L = self.layout
        x, r = i - L.a, j - L.c
        if r == 0:
            if x < 4 * self.k:
                if sym == BLANK:
                    return None
                south = sym
            else:
                if sym != BLANK:
                    return None
                south = 0
        else:
            south = sym
        north = 0 if r == L.zone_height else sym
        return self.codec.tile(i, j, (0, north, 0, south), self._prog_bit(i))

    def role(self, i: int, j: int) -> str:
        L = self.layout
        if L.in_zone(i, j):
            return "zone"
        if L.wire_at(i, j) is not None:
            return "border" if (i, j) in L.border_addresses else "wire"
        return "program" if L.program_column(i) is not None else "filler"

    def tiles_at(self, i: int, j: int, south_pay: int | None = None,
                 west_pay: int | None = None, east_pay: int | None = None) -> Iterator[Tile]:
        """All tiles with address ``(i, j)``; optional payload hints prune the
        zone enumeration."""
        L = self.layout
        if L.in_zone(i, j):
            if self.mode == "fixpoint":
                for sym in (0, 1, BLANK):
                    t = self._zone_tile_fixpoint(i, j, sym)
                    if t is not None:
                        yield t
                return
            r = j - L.c
            if r == 0:
                x = i - L.a
                syms = ([south_pay] if south_pay in (0, 1) else [0, 1]) if x < 4 * self.k else [BLANK]
                contents = [(s, self.machine.initial if x == 0 else None) for s in syms]
            elif south_pay is not None:
                dec = self.decode_content(south_pay)
                contents = [dec] if dec is not None else []
            else:
                contents = [(s, h) for h in [None, *self._states] for s in (0, 1, BLANK)]
            incomings = [None] + [(q, d) for q in self._states for d in (0, 1)]
            if west_pay is not None or east_pay is not None:
                incomings = [None]
                sig = self.decode_signal(west_pay) if west_pay else None
                if sig and sig[1] == 0:
                    incomings.append(sig)
                sig = self.decode_signal(east_pay) if east_pay else None
                if sig and sig[1] == 1:
                    incomings.append(sig)
            for content in contents:
                for inc in incomings:
                    t = self._zone_tile_direct(i, j, content, inc)
                    if t is not None:
                        yield t
            return
        w = L.wire_at(i, j)
        if w is not None:
            for bit in (0, 1):
                yield self._wire_tile(i, j, w[1], bit)
            return
        yield self.codec.tile(i, j, (0, 0, 0, 0), self._prog_bit(i))

    # ---- membership -----------------------------------------------------------

    def contains(self, tile: Tile) -> bool:
        """Membership predicate: address arithmetic, role payloads, zone
        transitions, wire constancy and the program condition."""
        codec = self.codec
        n = self.n
        parts = [codec.unpack(c) for c in tile]
        if any(c >> codec.length for c in tile):
            return False
        (xe, ye, _, pe), (xn, yn, _, pn), (xw, yw, _, pw), (xs, ys, _, ps) = parts
        i, j = xw, yw
        if i >= n or j >= n:
            return False
        if (xe, ye, xn, yn, xs, ys) != ((i + 1) % n, j, i, (j + 1) % n, i, j):
            return False
        for t in self.tiles_at(i, j, south_pay=ps, west_pay=pw, east_pay=pe):
            if t == tile:
                return True
        return False

    @cached_property
    def tileset(self) -> TileSet:
        return TileSet.implicit(self.color_len, self.contains, self.enumerate, name=f"T({self.n})")

    def enumerate(self, constraints: Mapping[int, tuple[int, int]]) -> Iterator[Tile]:
        """Tiles matching edge constraints; the address is read from any side
        whose constraint covers both address fields."""
        codec = self.codec
        amask = (1 << (2 * codec.nb)) - 1
        addr = None
        for side, cons in constraints.items():
            if cons is None:
                continue
            value, mask = cons
            if mask & amask != amask:
                continue
            x, y, _, _ = codec.unpack(value)
            if side == EAST:
                addr = ((x - 1) % self.n, y)
            elif side == NORTH:
                addr = (x, (y - 1) % self.n)
            else:
                addr = (x, y)
            break
        hints = {}
        full_aux = ((1 << codec.m) - 1) << (2 * codec.nb)
        for side, key in ((SOUTH, "south_pay"), (WEST, "west_pay"), (EAST, "east_pay")):
            cons = constraints.get(side)
            if cons is not None and cons[1] & full_aux == full_aux:
                hints[key] = codec.unpack(cons[0])[3]
        addrs = [addr] if addr is not None else [(i, j) for j in range(self.n) for i in range(self.n)]
        for i, j in addrs:
            if i < self.n and j < self.n:
                yield from self.tiles_at(i, j, **hints)

    # ---- macrotiles ------------------------------------------------------------

    def border_word(self, s) -> str:
        """Input tape word for simulated tile ``s`` (routed bit order)."""
        e, n_, w, so = (format(c, f"0{self.k}b") if self.k else "" for c in s)
        return self.layout.tape_word(e, n_, w, so)

    def _wire_bits(self, s) -> dict[int, int]:
        word = self.border_word(s)
        return {q: int(word[q]) for q in range(4 * self.k)}

    def zone_trace(self, s) -> list[list[tuple[int, object]]]:
        """Zone rows: cell contents ``(sym, head)`` at times ``0..zone_height``."""
        L = self.layout
        word = [int(b) for b in self.border_word(s)]
        outcome, configs = run_machine(self.machine, word, max_steps=L.zone_height, trace=True)
        if not outcome.accepted:
            raise RecognizerRejected(f"recognizer does not accept {tuple(s)} within {L.zone_height} steps")
        rows = []
        for r in range(L.zone_height + 1):
            cfg = configs[min(r, len(configs) - 1)]
            cells = cfg.window(0, L.zone_width)
            row = [(sym, cfg.state if x == cfg.head else None) for x, sym in enumerate(cells)]
            rows.append(row)
        return rows

    def assemble_macrotile(self, s) -> Patch:
        """The N x N macrotile simulating tile ``s``."""
        s = Tile(*s)
        L = self.layout
        n = self.n
        if self.mode == "direct":
            if self.target is not None and s not in self.target:
                raise RecognizerRejected(f"{tuple(s)} is not a tile of the target")
            trace = self.zone_trace(s)
        else:
            if not self.contains(s):
                raise RecognizerRejected(f"{tuple(s)} is not a tile of T({n})")
            trace = None
        bits = self._wire_bits(s)
        word = self.border_word(s)
        colors = np.zeros((n, n, 4), dtype=np.int64)
        for j in range(n):
            for i in range(n):
                if L.in_zone(i, j):
                    x, r = i - L.a, j - L.c
                    if self.mode == "fixpoint":
                        sym = int(word[x]) if x < 4 * self.k else BLANK
                        t = self._zone_tile_fixpoint(i, j, sym)
                    else:
                        content = trace[r][x]
                        inc = None
                        if r < L.zone_height and content[1] is None:
                            nxt = trace[r + 1][x]
                            if nxt[1] is not None:
                                came_from_west = x > 0 and trace[r][x - 1][1] is not None
                                inc = (nxt[1], 0 if came_from_west else 1)
                        t = self._zone_tile_direct(i, j, content, inc)
                    if t is None:
                        raise RecognizerBudgetExceeded(f"zone cell {(i, j)} has no tile")
                else:
                    w = L.wire_at(i, j)
                    if w is not None:
                        t = self._wire_tile(i, j, w[1], bits[w[0]])
                    else:
                        t = self.codec.tile(i, j, (0, 0, 0, 0), self._prog_bit(i))
                colors[j, i] = t
        patch = Patch(colors, np.ones((n, n), dtype=bool), self.color_len)
        for fault in sorted(self.faults):
            patch = FAULTS[fault](self, patch, s)
        return patch

    def simulation_map(self) -> SimulationMap:
        if self.target is None:
            raise ValueError("only direct-mode compilations have an explicit target")
        return SimulationMap(self.n, {s: self.assemble_macrotile(s) for s in self.target})

    def with_faults(self, *names: str) -> "CompiledTileSet":
        for name in names:
            if name not in FAULTS and name != "program_bit_flip":
                raise KeyError(name)
        c = CompiledTileSet(self.layout, self.mode, self.codec, self.program, self.k, self.machine,
                            self.target, self.level, frozenset(names) - {"program_bit_flip"})
        if "program_bit_flip" in names and self.program is not None:
            # the run uses a corrupted copy while the columns keep the original
            c.stored_program = self.program
            c.program = self.program.flip(len(self.program) - 1)
        return c

    # ---- descriptor -------------------------------------------------------------

    def descriptor(self) -> dict:
        L = self.layout
        return {
            "format_version": FORMAT_VERSION,
            "N": self.n, "k": self.k, "m": self.m, "color_len": self.color_len,
            "mode": self.mode, "level": self.level,
            "layout": {"a": L.a, "b": L.b, "c": L.c, "d": L.d, "program_len": L.program_len,
                       "interval": [L.interval.start, L.interval.stop - 1] if self.k else []},
            "program": self.program.bits if self.program is not None else None,
            "target": ([[format(c, f"0{self.k}b") for c in t] for t in self.target]
                       if self.target is not None else None),
        } | ({"faults": sorted(self.faults | ({"program_bit_flip"} if self.stored_program else set()))}
             if self.faults or self.stored_program is not None else {})

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), indent=1, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# fault injection (post-assembly corruption of macrotiles)

def _recolor(patch: Patch, cells: Mapping[tuple[int, int], Tile]) -> Patch:
    colors = patch.colors.copy()
    for (i, j), t in cells.items():
        colors[j, i] = t
    return Patch(colors, patch.filled.copy(), patch.color_len)


def _fault_wire_break(c: CompiledTileSet, patch: Patch, s) -> Patch:
    # one mid-wire cell carries the opposite bit
    w = c.layout.wires[0]
    i, j = w.cells()[len(w.cells()) // 2]
    bit = c.codec.unpack(patch[i, j][c.layout.wire_at(i, j)[1].bit_length() - 1])[3]
    return _recolor(patch, {(i, j): c._wire_tile(i, j, c.layout.wire_at(i, j)[1], 1 - bit)})


def _fault_address_skip(c: CompiledTileSet, patch: Patch, s) -> Patch:
    i, j = 1, c.n - 2
    t = patch[i, j]
    x, y, prog, pay = c.codec.unpack(t.east)
    return _recolor(patch, {(i, j): Tile(c.codec.pack((x + 1) % c.n, y, prog, pay), *t[1:])})


def _fault_zone_off_by_one(c: CompiledTileSet, patch: Patch, s) -> Patch:
    L = c.layout
    colors = patch.colors.copy()
    # every zone row above the first shows the row below it
    colors[L.c + 1:L.d + 1, L.a:L.b + 1, :] = patch.colors[L.c:L.d, L.a:L.b + 1, :]
    nb = c.codec.nb
    amask = (1 << (2 * nb)) - 1
    for j in range(L.c + 1, L.d + 1):
        for i in range(L.a, L.b + 1):
            t = Tile(*(int(v) for v in colors[j, i]))
            good = c.codec.tile(i, j, (0, 0, 0, 0))
            colors[j, i] = [(g & amask) | (v & ~amask) for g, v in zip(good, t)]
    return Patch(colors, patch.filled.copy(), patch.color_len)


def _fault_border_reroute(c: CompiledTileSet, patch: Patch, s) -> Patch:
    # east border cells of bits 0 and 1 exchange their outer edge colors
    L = c.layout
    if c.k < 2:
        return patch
    r0, r1 = L.interval[0], L.interval[1]
    i = c.n - 1
    t0, t1 = patch[i, r0], patch[i, r1]
    e0 = c.codec.unpack(t0.east)
    e1 = c.codec.unpack(t1.east)
    new0 = Tile(c.codec.pack(e0[0], e0[1], e0[2], e1[3]), *t0[1:])
    new1 = Tile(c.codec.pack(e1[0], e1[1], e1[2], e0[3]), *t1[1:])
    return _recolor(patch, {(i, r0): new0, (i, r1): new1})


def _fault_filler_leak(c: CompiledTileSet, patch: Patch, s) -> Patch:
    i, j = 0, 0
    t = patch[i, j]
    x, y, prog, pay = c.codec.unpack(t.east)
    return _recolor(patch, {(i, j): Tile(c.codec.pack(x, y, prog, 1), *t[1:])})


FAULTS = {
    "wire_break": _fault_wire_break,
    "address_skip": _fault_address_skip,
    "zone_off_by_one": _fault_zone_off_by_one,
    "border_reroute": _fault_border_reroute,
    "filler_leak": _fault_filler_leak,
}
CANONICAL_FAULTS = ("wire_break", "address_skip", "zone_off_by_one", "program_bit_flip",
                    "border_reroute", "filler_leak")


# --------------------------------------------------------------------------
# direct-mode compilation

def direct_requirements(target: TileSet) -> tuple[TuringMachine, int, int]:
    """Zone machine for ``target`` plus its worst-case steps and tape cells."""
    k = target.color_len
    words = []
    for t in target:
        e, n_, w, s = (format(c, f"0{k}b") for c in t)
        words.append(e + n_[::-1] + w[::-1] + s)
    machine = recognizer_machine(words, 4 * k)
    return machine, 4 * k + 1, 4 * k + 1


def compile_direct(target: TileSet, n: int) -> tuple[CompiledTileSet, SimulationMap]:
    """Direct-mode T(N) simulating the explicit ``target`` with zoom ``n``."""
    if not target.is_explicit:
        raise ValueError("direct mode needs an explicit target")
    k = target.color_len
    if k < 1:
        raise ValueError("target colors need at least one bit")
    machine, steps, tape = direct_requirements(target)
    layout = plan_layout(n, k, steps=steps, tape=tape)
    program = compile_recognizer(target)
    nstates = len(machine.states)
    pay_bits = max(1, (3 * (nstates + 1) - 1).bit_length(), (2 * nstates).bit_length())
    codec = ColorCodec(n, 1 + pay_bits)
    compiled = CompiledTileSet(layout, "direct", codec, program, k, machine, target)
    return compiled, compiled.simulation_map()


def direct_min_zoom(target: TileSet) -> int:
    _, steps, tape = direct_requirements(target)
    return lay.min_zoom(target.color_len, steps, tape)


def compile(target: TileSet, n: int) -> tuple[CompiledTileSet, SimulationMap]:
    return compile_direct(target, n)
