"""Self-simulating fixed point: the predicate program p_T and its build.

p_T reads ``encode_tile(t)`` for a tile ``t`` of T(N) (four colors of
``l = 2 nb + 3`` bits) and accepts iff ``t`` is a tile of T(N).  All layout
quantities enter as immediates, so ``|p_T| = O(log N)``.  The program
condition reads p_T's own bits with PBIT, which closes the quine loop: the
bits demanded on program column ``a + i`` are ``p_T[i]``.

Wire geometry is evaluated in closed form per wire family (one vertical
and one horizontal segment candidate per cell) rather than by replaying the
layout's polylines; the Python predicate uses the polylines, so the two
routes check each other.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass

from .compiler import FIXPOINT_PAY_BITS, ColorCodec, CompiledTileSet, address_bits
from .errors import ZoomTooSmall
from .layout import E_BIT, N_BIT, S_BIT, W_BIT, MacrotileLayout, _constraints, plan_layout, zone_bounds
from .machines import BLANK, MAX_LEVEL, Asm, MachineProgram, RunStats, _framing_check, universal_run
from .wang import Tile

FIXPOINT_M = 1 + FIXPOINT_PAY_BITS


def fixpoint_color_len(n: int) -> int:
    return 2 * address_bits(n) + FIXPOINT_M


# registers
_R0, _IDX, _E, _N, _W, _S, _I, _J, _PROG, _T1, _T2, _T3, _MASK, _LO, _HI = range(15)


def _field(a: Asm, dst: int, src: int, shift: int, mask: int | None) -> None:
    a.MOV(dst, src)
    if shift:
        a.SHRI(dst, shift)
    if mask is not None:
        a.ANDI(dst, mask)


def _segment(a: Asm, coord: int, lo_bit: int, hi_bit: int, miss: str) -> None:
    """``coord`` in [_LO, _HI]: OR the continuation bits into _MASK."""
    a.JLT(coord, _LO, miss)
    a.JLT(_HI, coord, miss)
    no_lo, no_hi = a.fresh("nolo"), a.fresh("nohi")
    a.JGE(_LO, coord, no_lo)
    a.LDI(_T3, lo_bit)
    a.OR(_MASK, _T3)
    a.label(no_lo)
    a.JGE(coord, _HI, no_hi)
    a.LDI(_T3, hi_bit)
    a.OR(_MASK, _T3)
    a.label(no_hi)


def _load_minus_one(a: Asm, r: int) -> None:
    a.LDI(r, 0)
    a.SUBI(r, 1)


def predicate_program(n: int, level: int = 0) -> MachineProgram:
    """Assemble p_T for zoom ``n`` (layout per ``zone_bounds``)."""
    nb = address_bits(n)
    ell = 2 * nb + FIXPOINT_M
    k = ell
    a_, b_ = zone_bounds(n)
    c_, d_ = a_, b_
    amask = (1 << nb) - 1
    if _constraints(n, k, 0, 4 * k, 0):
        raise ZoomTooSmall(f"zoom {n} cannot host the fixpoint layout")
    A = Asm()
    _framing_check(A, 4 * k, "reject")
    A.LDI(_IDX, 0)
    for r in (_E, _N, _W, _S):
        A.GETBITS(r, _IDX, ell)
        A.ADDI(_IDX, ell)

    # west color: own address (i, j), program bit 0
    _field(A, _I, _W, 0, amask)
    _field(A, _J, _W, nb, amask)
    _field(A, _R0, _W, 2 * nb, 1)
    A.JNEI(_R0, 0, "reject")
    A.JGEI(_I, n, "reject")
    A.JGEI(_J, n, "reject")
    # south: (i, j), program bit kept in _PROG
    _field(A, _R0, _S, 0, amask)
    A.JNE(_R0, _I, "reject")
    _field(A, _R0, _S, nb, amask)
    A.JNE(_R0, _J, "reject")
    _field(A, _PROG, _S, 2 * nb, 1)
    # north: (i, j+1 mod N), same program bit
    _field(A, _R0, _N, 0, amask)
    A.JNE(_R0, _I, "reject")
    A.MOV(_T1, _J)
    A.ADDI(_T1, 1)
    A.JNEI(_T1, n, "nwrap")
    A.LDI(_T1, 0)
    A.label("nwrap")
    _field(A, _R0, _N, nb, amask)
    A.JNE(_R0, _T1, "reject")
    _field(A, _R0, _N, 2 * nb, 1)
    A.JNE(_R0, _PROG, "reject")
    # east: (i+1 mod N, j), program bit 0
    A.MOV(_T1, _I)
    A.ADDI(_T1, 1)
    A.JNEI(_T1, n, "ewrap")
    A.LDI(_T1, 0)
    A.label("ewrap")
    _field(A, _R0, _E, 0, amask)
    A.JNE(_R0, _T1, "reject")
    _field(A, _R0, _E, nb, amask)
    A.JNE(_R0, _J, "reject")
    _field(A, _R0, _E, 2 * nb, 1)
    A.JNEI(_R0, 0, "reject")

    # program condition: column a+i stores bit i of this very program
    A.JLTI(_I, a_, "prog0")
    A.MOV(_T1, _I)
    A.SUBI(_T1, a_)
    A.PLEN(_T2)
    A.JGE(_T1, _T2, "prog0")
    A.PBIT(_T1, _T1)
    A.JNE(_T1, _PROG, "reject")
    A.JMP("progok")
    A.label("prog0")
    A.JNEI(_PROG, 0, "reject")
    A.label("progok")

    for r in (_E, _N, _W, _S):
        A.SHRI(r, 2 * nb + 1)

    # computation zone: the input track, one symbol per column
    A.JLTI(_I, a_, "outside")
    A.JGEI(_I, b_ + 1, "outside")
    A.JLTI(_J, c_, "outside")
    A.JGEI(_J, d_ + 1, "outside")
    A.JNEI(_E, 0, "reject")
    A.JNEI(_W, 0, "reject")
    A.MOV(_T1, _I)
    A.SUBI(_T1, a_)
    A.MOV(_T2, _J)
    A.SUBI(_T2, c_)
    A.JNEI(_T2, 0, "zmid")
    A.JGEI(_T1, 4 * k, "zblank")
    A.JGEI(_S, BLANK, "reject")
    A.MOV(_T3, _S)
    A.JMP("ztop")
    A.label("zblank")
    A.JNEI(_S, 0, "reject")
    A.LDI(_T3, BLANK)
    A.JMP("ztop")
    A.label("zmid")
    A.JGEI(_S, BLANK + 1, "reject")
    A.MOV(_T3, _S)
    A.label("ztop")
    A.JNEI(_T2, d_ - c_, "znorth")
    A.JNEI(_N, 0, "reject")
    A.ACCEPT()
    A.label("znorth")
    A.JNE(_N, _T3, "reject")
    A.ACCEPT()

    # outside the zone: wire mask from one vertical and one horizontal family
    A.label("outside")
    A.LDI(_MASK, 0)
    # vertical families by column
    A.JLTI(_I, a_ - 3 * k, "vnone")
    A.JGEI(_I, a_, "vland")
    # ring column x_r, r = i - a + 3k
    A.MOV(_T1, _I)
    A.SUBI(_T1, a_ - 3 * k)
    A.LDI(_LO, c_ - 3 * k)
    A.ADD(_LO, _T1)
    A.JGEI(_T1, k, "vx_ne")
    A.LDI(_HI, a_ + 3 * k)
    A.ADD(_HI, _T1)
    A.JMP("vseg")
    A.label("vx_ne")
    A.LDI(_HI, d_ + 3 * k)
    A.SUB(_HI, _T1)
    A.JMP("vseg")
    A.label("vland")
    A.JGEI(_I, a_ + 3 * k, "vsouth")
    # landing column a+q: rows c-1-q .. c
    A.LDI(_LO, a_ + c_ - 1)
    A.SUB(_LO, _I)
    A.LDI(_HI, c_)
    A.JMP("vseg")
    A.label("vsouth")
    A.JGEI(_I, a_ + 4 * k, "veast")
    A.JGEI(_J, c_, "vnorth")
    _load_minus_one(A, _LO)
    A.LDI(_HI, c_)
    A.JMP("vseg")
    A.label("vnorth")
    # north wire u = i-a-3k drops from row N to h = d+2k-u
    A.LDI(_LO, d_ + 2 * k + a_ + 3 * k)
    A.SUB(_LO, _I)
    A.LDI(_HI, n)
    A.JMP("vseg")
    A.label("veast")
    A.JLTI(_I, b_ + 1, "vnone")
    A.JGEI(_I, b_ + k + 1, "vnone")
    # east riser u = i-b-1: rows a+3k+u .. d+1+u
    A.MOV(_LO, _I)
    A.ADDI(_LO, a_ + 3 * k)
    A.SUBI(_LO, b_ + 1)
    A.MOV(_HI, _I)
    A.ADDI(_HI, d_)
    A.SUBI(_HI, b_)
    A.label("vseg")
    _segment(A, _J, S_BIT, N_BIT, "vnone")
    A.label("vnone")

    # horizontal families by row
    A.JLTI(_J, c_ - 3 * k, "hnone")
    A.JGEI(_J, c_, "hborder")
    # lane r = j - c + 3k: columns a-3k+r .. a+3k-1-r
    A.MOV(_LO, _J)
    A.ADDI(_LO, a_)
    A.SUBI(_LO, c_)
    A.LDI(_HI, a_ + c_ - 1)
    A.SUB(_HI, _J)
    A.JMP("hseg")
    A.label("hborder")
    A.JLTI(_J, a_ + 3 * k, "hnone")
    A.JGEI(_J, a_ + 4 * k, "htop")
    # west bit u = j-a-3k: columns -1 .. a-3k+u; east: b+1+u .. N
    A.MOV(_T1, _J)
    A.SUBI(_T1, a_ + 3 * k)
    A.LDI(_HI, a_ - 3 * k)
    A.ADD(_HI, _T1)
    A.JLT(_HI, _I, "heast")
    _load_minus_one(A, _LO)
    A.JMP("hseg")
    A.label("heast")
    A.LDI(_LO, b_ + 1)
    A.ADD(_LO, _T1)
    A.LDI(_HI, n)
    A.JMP("hseg")
    A.label("htop")
    A.JLTI(_J, d_ + 1, "hnone")
    A.JGEI(_J, d_ + 2 * k + 1, "hnone")
    # top run of ring r = 3k+d-j from x_r = a-3k+r to its riser
    A.LDI(_T1, 3 * k + d_)
    A.SUB(_T1, _J)
    A.LDI(_LO, a_ - 3 * k)
    A.ADD(_LO, _T1)
    A.JGEI(_T1, 2 * k, "htop_e")
    A.LDI(_HI, a_ + 2 * k)
    A.ADD(_HI, _T1)
    A.JMP("hseg")
    A.label("htop_e")
    A.LDI(_HI, b_ + 3 * k)
    A.SUB(_HI, _T1)
    A.label("hseg")
    _segment(A, _I, W_BIT, E_BIT, "hnone")
    A.label("hnone")

    # payloads: active edges carry the wire bit, all others 0
    A.MOV(_R0, _E)
    A.OR(_R0, _N)
    A.OR(_R0, _W)
    A.OR(_R0, _S)
    A.JGEI(_R0, 2, "reject")
    for reg, bit in ((_E, E_BIT), (_N, N_BIT), (_W, W_BIT), (_S, S_BIT)):
        off = A.fresh("off")
        nxt = A.fresh("next")
        A.MOV(_T1, _MASK)
        A.ANDI(_T1, bit)
        A.JEQI(_T1, 0, off)
        A.JNE(reg, _R0, "reject")
        A.JMP(nxt)
        A.label(off)
        A.JNEI(reg, 0, "reject")
        A.label(nxt)
    A.ACCEPT()
    A.label("reject")
    A.REJECT()
    return A.program("predicate", level)


# --------------------------------------------------------------------------
# structured samples

def role_samples(compiled: CompiledTileSet, rng: random.Random, per_role: int = 64) -> dict[str, list[Tile]]:
    """Valid tiles grouped by role: every border address, zone corners and
    edges, wire corners, program columns, random filler."""
    L = compiled.layout
    n = compiled.n
    out: dict[str, list[Tile]] = {}

    def add(i: int, j: int) -> None:
        role = compiled.role(i, j)
        out.setdefault(role, []).extend(compiled.tiles_at(i, j))

    for i, j in L.border_addresses:
        add(i, j)
    for w in L.wires:
        for pt in w.points[1:]:
            if 0 <= pt[0] < n and 0 <= pt[1] < n:
                add(*pt)
    edges = [(L.a, L.c), (L.b, L.c), (L.a, L.d), (L.b, L.d), (L.a + 4 * compiled.k - 1, L.c),
             (L.a + 4 * compiled.k, L.c), (L.a + 4 * compiled.k, L.c + 1)]
    for i, j in edges:
        add(i, j)
    plen = L.program_len
    for idx in sorted({0, 1, plen // 2, plen - 1}):
        if plen:
            add(L.a + idx, 0)
            add(L.a + idx, n - 1)
    for i, j in ((0, 0), (n - 1, n - 1), (0, n - 1), (n - 1, 0)):
        add(i, j)
    for _ in range(per_role * 4):
        add(rng.randrange(n), rng.randrange(n))
    return out


def mutate(tile: Tile, ell: int, rng: random.Random) -> Tile:
    """Flip one random bit of one random color."""
    side = rng.randrange(4)
    cols = list(tile)
    cols[side] ^= 1 << rng.randrange(ell)
    return Tile(*cols)


# --------------------------------------------------------------------------
# build

@dataclass(frozen=True)
class FixpointBuild:
    compiled: CompiledTileSet
    program: MachineProgram
    n_min: int
    worst_cost: int
    c0: float
    c1: int

    def report(self) -> str:
        L = self.compiled.layout
        return "\n".join([
            "[fixpoint]",
            f"N = {self.compiled.n}",
            f"N_min = {self.n_min}",
            f"color_len = {self.compiled.color_len}",
            f"zone = [{L.a},{L.b}]x[{L.c},{L.d}]",
            f"zone_height = {L.zone_height}",
            f"worst_cost = {self.worst_cost}",
            f"program_len = {len(self.program)}",
            f"c0 = {self.c0}",
            f"c1 = {self.c1}",
        ]) + "\n"


# |p_T| <= C0 * log2 N + C1 on [N_min, 2^16]; reproduced by program_size_constants()
C0 = 125.0
C1 = 3835


def worst_case_cost(p: MachineProgram, compiled: CompiledTileSet, seed: int = 0, extra: int = 256) -> int:
    """Largest run time of p over the structured role sample plus mutations."""
    rng = random.Random(seed)
    ell = compiled.color_len
    worst = 0
    stats = RunStats()
    for tiles in role_samples(compiled, rng, per_role=16).values():
        for t in tiles:
            for probe in (t, mutate(t, ell, rng)):
                universal_run(p, _encode(probe, ell), stats=stats)
                worst = max(worst, stats.time)
    for _ in range(extra):
        t = Tile(*(rng.getrandbits(ell) for _ in range(4)))
        universal_run(p, _encode(t, ell), stats=stats)
        worst = max(worst, stats.time)
    return worst


def _encode(t: Tile, ell: int) -> str:
    return "".join(format(c, f"0{ell}b") for c in t)


def _fixpoint_compiled(n: int, p: MachineProgram, steps: int, level: int) -> CompiledTileSet:
    ell = fixpoint_color_len(n)
    layout = plan_layout(n, ell, steps=steps, tape=4 * ell, program_len=len(p))
    return CompiledTileSet(layout, "fixpoint", ColorCodec(n, FIXPOINT_M), p, ell, level=level)


def _geometry_ok(n: int, plen: int) -> bool:
    ell = fixpoint_color_len(n)
    return not _constraints(n, ell, 0, 4 * ell, plen)


def _feasible(n: int, seed: int) -> bool:
    ell = fixpoint_color_len(n)
    if _constraints(n, ell, 0, 4 * ell, 0):
        return False
    p = predicate_program(n)
    if not _geometry_ok(n, len(p)):
        return False
    lo, hi = zone_bounds(n)
    return _provisional_cost(n, p, seed) <= hi - lo


@functools.lru_cache(maxsize=None)
def fixpoint_min_zoom(limit: int = 1 << 16, seed: int = 0) -> int:
    """Smallest N whose layout fits p_T and its measured worst-case run.

    Feasibility is monotone in N here (cost grows like log N, the zone like
    N), so a doubling sweep followed by bisection finds the threshold.
    """
    lo, hi = 2, 16
    while not _feasible(hi, seed):
        lo = hi
        hi *= 2
        if hi > limit:
            if _feasible(limit, seed):
                hi = limit
                break
            raise ZoomTooSmall(f"no fixpoint zoom up to {limit}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _feasible(mid, seed):
            hi = mid
        else:
            lo = mid
    return hi


def _provisional_cost(n: int, p: MachineProgram, seed: int) -> int:
    ell = fixpoint_color_len(n)
    layout = plan_layout(n, ell, steps=0, tape=4 * ell, program_len=len(p))
    c = CompiledTileSet(layout, "fixpoint", ColorCodec(n, FIXPOINT_M), p, ell)
    return worst_case_cost(p, c, seed)


def build_fixpoint(n: int | None = None, level: int = 0, seed: int = 0) -> FixpointBuild:
    """Fixpoint T(N) with its predicate program; ``n=None`` picks N_min."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError("level out of range")
    n_min = fixpoint_min_zoom(seed=seed)
    if n is None:
        n = n_min
    try:
        p = predicate_program(n, level)
    except ZoomTooSmall as exc:
        raise ZoomTooSmall(str(exc), n_min=n_min) from exc
    if not _geometry_ok(n, len(p)):
        raise ZoomTooSmall(f"zoom {n} cannot host p_T", n_min=n_min)
    worst = _provisional_cost(n, p, seed)
    try:
        compiled = _fixpoint_compiled(n, p, worst, level)
    except ZoomTooSmall as exc:
        raise ZoomTooSmall(str(exc), n_min=n_min) from exc
    return FixpointBuild(compiled, p, n_min, worst, C0, C1)


def rebuild_fixpoint(n: int, level: int = 0, seed: int = 0) -> CompiledTileSet:
    """T(N) for a known zoom, skipping the N_min search."""
    p = predicate_program(n, level)
    if not _geometry_ok(n, len(p)):
        raise ZoomTooSmall(f"zoom {n} cannot host p_T")
    return _fixpoint_compiled(n, p, _provisional_cost(n, p, seed), level)


def program_size_constants(ns=None) -> tuple[float, int]:
    """Constants with ``|p_T| <= c0 log2 N + c1``.

    Fit on powers of two (slope from the extreme points, intercept raised
    to cover every point).  |p_T| is nondecreasing in N, so for
    ``2^(e-1) < N <= 2^e`` the bound at ``2^e`` plus one extra ``c0`` covers N.
    """
    ns = list(ns or [2 ** e for e in range(9, 17)])
    sizes = [len(predicate_program(n)) for n in ns]
    x0, x1 = math.log2(ns[0]), math.log2(ns[-1])
    c0 = math.ceil((sizes[-1] - sizes[0]) / (x1 - x0))
    c1 = max(math.ceil(s - c0 * math.log2(n)) for n, s in zip(ns, sizes)) + c0
    return float(c0), c1
