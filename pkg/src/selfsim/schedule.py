"""Variable zoom schedules ``k -> N_k`` and their validation.

A schedule is admissible at level ``k`` when

    N_k >= C_GROWTH * (ceil(log2 N_{k+1}) + ceil(log2(k + 2)))

and the universal machine computes ``N_{k+1}`` from ``k + 1`` within
``BUDGET * N_k`` time and space.  The cost is measured by running a
schedule-mode program generated for the schedule's kind.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EvaluationOverflow, LevelTooLarge
from .machines import BLANK, MAX_LEVEL, Asm, MachineProgram, RunStats, universal_run

C_GROWTH = 1
BUDGET = 16
OVERFLOW_BITS = 1 << 20
FORMAT_VERSION = 1


def _clog2(v: int) -> int:
    return max(0, (v - 1).bit_length())


@dataclass(frozen=True)
class ZoomSchedule:
    """``kind`` is one of constant, polynomial, exponential or custom.

    * constant: ``N_k = n``
    * polynomial: ``N_k = ceil(scale * (k + 1) ** a)`` with rational ``a``
    * exponential: ``N_k = scale * base ** k``
    * custom ``tower``: ``N_0 = n0``, ``N_{k+1} = base ** N_k``
    * custom ``log``: ``N_k = max(2, ceil(log2(k + 2)))``
    """

    kind: str
    params: dict = field(default_factory=dict)

    @staticmethod
    def constant(n: int) -> "ZoomSchedule":
        return ZoomSchedule("constant", {"n": n})

    @staticmethod
    def polynomial(a, scale: int = 1) -> "ZoomSchedule":
        a = Fraction(a)
        return ZoomSchedule("polynomial", {"a": f"{a.numerator}/{a.denominator}", "scale": scale})

    @staticmethod
    def exponential(base: int = 2, scale: int = 1) -> "ZoomSchedule":
        return ZoomSchedule("exponential", {"base": base, "scale": scale})

    @staticmethod
    def tower(base: int = 2, n0: int = 64) -> "ZoomSchedule":
        return ZoomSchedule("custom", {"formula": "tower", "base": base, "n0": n0})

    @staticmethod
    def logarithmic() -> "ZoomSchedule":
        return ZoomSchedule("custom", {"formula": "log"})

    @property
    def symbolic(self) -> bool:
        return self.kind in ("constant", "exponential")

    def log2_value(self, k: int) -> float:
        """log2 N_k without materializing N_k (constant/exponential only)."""
        p = self.params
        if self.kind == "constant":
            return math.log2(p["n"])
        if self.kind == "exponential":
            return math.log2(p["scale"]) + k * math.log2(p["base"])
        raise EvaluationOverflow(f"{self.kind} schedules have no symbolic form")

    def value(self, k: int) -> int:
        """``N_k``; raises EvaluationOverflow beyond OVERFLOW_BITS bits."""
        p = self.params
        if self.kind == "constant":
            return p["n"]
        if self.kind == "exponential":
            if self.log2_value(k) > OVERFLOW_BITS:
                raise EvaluationOverflow(f"N_{k} exceeds 2^{OVERFLOW_BITS}")
            return p["scale"] * p["base"] ** k
        if self.kind == "polynomial":
            a = Fraction(p["a"])
            target = Fraction(p["scale"]) ** a.denominator * (k + 1) ** a.numerator
            return _ceil_root(target, a.denominator)
        if self.kind == "custom" and p["formula"] == "tower":
            n = p["n0"]
            for _ in range(k):
                if n * math.log2(p["base"]) > OVERFLOW_BITS:
                    raise EvaluationOverflow(f"N_{k} exceeds 2^{OVERFLOW_BITS}")
                n = p["base"] ** n
            return n
        if self.kind == "custom" and p["formula"] == "log":
            return max(2, _clog2(k + 2))
        raise ValueError(f"unknown schedule {self.kind} {p}")

    def to_json(self, levels: int) -> str:
        return json.dumps({"format_version": FORMAT_VERSION, "kind": self.kind, "params": self.params,
                           "K": levels, "constants": {"c_growth": C_GROWTH, "budget": BUDGET}},
                          indent=1, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> tuple["ZoomSchedule", int]:
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported schedule format {d.get('format_version')}")
        return ZoomSchedule(d["kind"], dict(d.get("params", {}))), int(d.get("K", 1))


def _ceil_root(x: Fraction, q: int) -> int:
    """Smallest integer ``n`` with ``n ** q >= x``."""
    n = max(1, int(math.ceil(float(x) ** (1 / q))) if float(x) < 1e300 else 1 << (int(x).bit_length() // q))
    while n ** q < x:
        n += 1
    while n > 1 and (n - 1) ** q >= x:
        n -= 1
    return n


# --------------------------------------------------------------------------
# schedule programs: input is k in binary, the run leaves N_k in binary on
# the work track after the input and accepts

def _read_binary(a: Asm, dst: int) -> None:
    a.LDI(dst, 0)
    a.LDI(1, 0)
    loop, done = a.fresh("in"), a.fresh("indone")
    a.label(loop)
    a.READ(0, 1)
    a.JEQI(0, BLANK, done)
    a.SHLI(dst, 1)
    a.OR(dst, 0)
    a.ADDI(1, 1)
    a.JMP(loop)
    a.label(done)


def _pow_loop(a: Asm, acc: int, base: int, times: int) -> None:
    """acc *= base, ``times`` register counts down to 0."""
    loop, done = a.fresh("pow"), a.fresh("powdone")
    a.label(loop)
    a.JEQI(times, 0, done)
    a.MUL(acc, base)
    a.SUBI(times, 1)
    a.JMP(loop)
    a.label(done)


def _write_binary(a: Asm, src: int) -> None:
    """Write ``src`` MSB first starting one cell after the input (r1)."""
    a.ADDI(1, 1)
    a.MOV(5, src)
    a.LDI(6, 0)  # bit length
    cnt, cdone = a.fresh("len"), a.fresh("lendone")
    a.label(cnt)
    a.JEQI(5, 0, cdone)
    a.SHRI(5, 1)
    a.ADDI(6, 1)
    a.JMP(cnt)
    a.label(cdone)
    loop, done = a.fresh("out"), a.fresh("outdone")
    a.label(loop)
    a.JEQI(6, 0, done)
    a.SUBI(6, 1)
    a.MOV(5, src)
    a.MOV(7, 6)
    shift, sdone = a.fresh("sh"), a.fresh("shdone")
    a.label(shift)
    a.JEQI(7, 0, sdone)
    a.SHRI(5, 1)
    a.SUBI(7, 1)
    a.JMP(shift)
    a.label(sdone)
    a.ANDI(5, 1)
    a.WRITE(1, 5)
    a.ADDI(1, 1)
    a.JMP(loop)
    a.label(done)


def schedule_program(s: ZoomSchedule) -> MachineProgram:
    """Schedule-mode program computing ``N_k`` from ``k``."""
    a = Asm()
    p = s.params
    _read_binary(a, 2)  # r2 = k
    if s.kind == "constant":
        a.LDI(3, p["n"])
    elif s.kind == "exponential":
        a.LDI(3, p["scale"])
        a.LDI(4, p["base"])
        _pow_loop(a, 3, 4, 2)
    elif s.kind == "polynomial":
        frac = Fraction(p["a"])
        # x = scale^den * (k+1)^num, then the smallest n with n^den >= x by bisection
        a.LDI(8, 1)
        a.LDI(9, p["scale"])
        a.LDI(10, frac.denominator)
        _pow_loop(a, 8, 9, 10)
        a.MOV(9, 2)
        a.ADDI(9, 1)
        a.LDI(10, frac.numerator)
        _pow_loop(a, 8, 9, 10)
        # hi = 1 << ceil(bits(x) / den) + 1 is an upper bound; bisect on [0, hi]
        a.LDI(3, 1)
        a.MOV(11, 8)
        grow, gdone = a.fresh("grow"), a.fresh("growdone")
        a.label(grow)
        a.LDI(12, 1)
        a.MOV(9, 3)
        a.LDI(10, frac.denominator)
        _pow_loop(a, 12, 9, 10)
        a.JGE(12, 11, gdone)
        a.SHLI(3, 1)
        a.JMP(grow)
        a.label(gdone)
        # r13 = lo (exclusive), r3 = hi (inclusive, feasible)
        a.MOV(13, 3)
        a.SHRI(13, 1)
        bis, bdone, lower = a.fresh("bis"), a.fresh("bisdone"), a.fresh("lower")
        a.label(bis)
        a.MOV(14, 3)
        a.SUB(14, 13)
        a.JLTI(14, 2, bdone)
        a.MOV(14, 13)
        a.ADD(14, 3)
        a.SHRI(14, 1)
        a.LDI(12, 1)
        a.MOV(9, 14)
        a.LDI(10, frac.denominator)
        _pow_loop(a, 12, 9, 10)
        a.JGE(12, 11, lower)
        a.MOV(13, 14)
        a.JMP(bis)
        a.label(lower)
        a.MOV(3, 14)
        a.JMP(bis)
        a.label(bdone)
    elif s.kind == "custom" and p["formula"] == "tower":
        a.LDI(3, p["n0"])
        a.LDI(4, p["base"])
        loop, done = a.fresh("tower"), a.fresh("towerdone")
        a.label(loop)
        a.JEQI(2, 0, done)
        a.MOV(10, 3)
        a.LDI(3, 1)
        _pow_loop(a, 3, 4, 10)
        a.SUBI(2, 1)
        a.JMP(loop)
        a.label(done)
    elif s.kind == "custom" and p["formula"] == "log":
        # ceil(log2(k + 2)) = bit length of k + 1, at least 2
        a.MOV(5, 2)
        a.ADDI(5, 1)
        a.LDI(3, 0)
        loop, done = a.fresh("log"), a.fresh("logdone")
        a.label(loop)
        a.JEQI(5, 0, done)
        a.SHRI(5, 1)
        a.ADDI(3, 1)
        a.JMP(loop)
        a.label(done)
        ok = a.fresh("atleast2")
        a.JGEI(3, 2, ok)
        a.LDI(3, 2)
        a.label(ok)
    else:
        raise ValueError(f"unknown schedule {s.kind} {p}")
    _write_binary(a, 3)
    a.ACCEPT()
    return a.program("schedule")


def run_schedule_program(prog: MachineProgram, k: int, time_budget: int, space_budget: int):
    """Run on input ``k``; returns (outcome, N_k or None, stats)."""
    word = format(k, "b")
    stats = RunStats()
    out = universal_run(prog, word, time_budget=max(1, time_budget), space_budget=max(1, space_budget),
                        stats=stats)
    return out, stats


# --------------------------------------------------------------------------
# validation

@dataclass
class LevelCheck:
    k: int
    n_k: int | None
    n_next: int | None
    growth_ok: bool
    cost_time: int | None
    cost_space: int | None
    cost_ok: bool
    symbolic: bool = False


@dataclass
class ScheduleVerdict:
    accepted: bool
    levels: list[LevelCheck]
    failing_level: int | None = None
    reason: str = ""

    def to_text(self) -> str:
        lines = ["[schedule]", f"format_version = {FORMAT_VERSION}", f"c_growth = {C_GROWTH}",
                 f"budget = {BUDGET}", f"verdict = {'accepted' if self.accepted else 'rejected'}"]
        if not self.accepted:
            lines += [f"failing_level = {self.failing_level}", f"reason = {self.reason}"]
        for lv in self.levels:
            n = lv.n_k if lv.n_k is None or lv.n_k.bit_length() <= 64 else f"2^{lv.n_k.bit_length() - 1}+"
            lines.append(f"level {lv.k}: N = {n} growth = {'ok' if lv.growth_ok else 'fail'} "
                         f"time = {lv.cost_time} space = {lv.cost_space} cost = {'ok' if lv.cost_ok else 'fail'}"
                         + (" symbolic" if lv.symbolic else ""))
        return "\n".join(lines) + "\n"


def validate_schedule(s: ZoomSchedule, levels: int, budget: int = BUDGET,
                      c_growth: int = C_GROWTH) -> ScheduleVerdict:
    """Check levels ``0..levels-1``; stops at the first failing level."""
    if levels < 1:
        raise ValueError("need at least one level")
    prog = schedule_program(s)
    checks: list[LevelCheck] = []
    for k in range(levels):
        try:
            n_k, n_next = s.value(k), s.value(k + 1)
        except EvaluationOverflow as exc:
            if not s.symbolic:
                return ScheduleVerdict(False, checks, k, f"evaluation overflow: {exc}")
            lk, lnext = s.log2_value(k), s.log2_value(k + 1)
            growth = lk >= math.log2(c_growth * (math.ceil(lnext) + _clog2(k + 2)))
            checks.append(LevelCheck(k, None, None, growth, None, None, True, symbolic=True))
            if not growth:
                return ScheduleVerdict(False, checks, k, "growth constraint violated")
            continue
        if n_k <= 1:
            checks.append(LevelCheck(k, n_k, n_next, False, None, None, False))
            return ScheduleVerdict(False, checks, k, f"N_{k} = {n_k} is not above 1")
        growth = n_k >= c_growth * (_clog2(n_next) + _clog2(k + 2))
        if not growth:
            checks.append(LevelCheck(k, n_k, n_next, False, None, None, False))
            reason = ("grows too fast" if _clog2(n_next) > n_k // 2 else "grows too slowly")
            return ScheduleVerdict(False, checks, k, f"growth constraint violated ({reason})")
        cap = budget * n_k
        out, stats = run_schedule_program(prog, k + 1, cap, cap)
        cost_ok = out.accepted and stats.time <= cap and out.max_space <= cap
        checks.append(LevelCheck(k, n_k, n_next, True, stats.time, out.max_space, cost_ok))
        if not cost_ok:
            return ScheduleVerdict(False, checks, k, f"grows too slowly: computing N_{k + 1} exceeds "
                                   f"{budget} * N_{k} ({out.verdict})")
    return ScheduleVerdict(True, checks)


def level_program(p: MachineProgram, k: int) -> MachineProgram:
    """p_T with its level literal set to ``k``.  The level lives in the
    container header, hence in the program columns of every level-k tile."""
    if not 0 <= k <= MAX_LEVEL:
        raise LevelTooLarge(f"level {k} exceeds {MAX_LEVEL}")
    return p.with_level(k)


def schedule_level_program(s: ZoomSchedule, k: int) -> MachineProgram:
    """Predicate program of level ``k`` for zoom ``N_k``."""
    from .fixpoint import predicate_program
    if not 0 <= k <= MAX_LEVEL:
        raise LevelTooLarge(f"level {k} exceeds {MAX_LEVEL}")
    return predicate_program(s.value(k), k)
