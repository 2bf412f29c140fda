"""Command-line front end.

Exit codes (every subcommand):

  0  success / all checks pass / schedule accepted / patch found
  1  a check failed, schedule rejected, patch search exhausted, or an
     invalid neighborhood was met in strict mode
  2  zoom factor or work period too small (the minimum is printed)
  3  inconclusive only (budget exceeded, empty sample)
  4  an input file is missing or unreadable
  5  an input file is malformed
  6  bad command-line usage

Human-readable messages go to stderr; artifacts go to ``--out`` files or,
when no path is given, to stdout.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import ca as ca_mod
from .compiler import CANONICAL_FAULTS, CompiledTileSet, compile_direct, direct_min_zoom
from .errors import (InvalidNeighborhood, RecognizerRejected, SelfSimError, WorkPeriodTooShort,
                     ZoomTooSmall)
from .machines import MachineProgram
from .render import DEFAULT_MAX_PIXELS, render_diagram, render_patch
from .schedule import ZoomSchedule, validate_schedule
from .verify import (INCONCLUSIVE, LevelResult, VerificationReport, substitution_windows,
                     verify_adjacency_equivalence, verify_completeness_small, verify_fixpoint_program,
                     verify_offset_uniqueness)
from .wang import (BudgetExceeded, Exhausted, Found, Tile, TileSet, apply_substitution, bits_to_color,
                   find_valid_patch, patch_from_json, patch_to_json, tileset_from_json)

EXIT_OK, EXIT_FAIL, EXIT_TOO_SMALL, EXIT_INCONCLUSIVE, EXIT_MISSING, EXIT_FORMAT, EXIT_USAGE = range(7)


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}", EXIT_MISSING) from None


def _emit(out: str | None, data: str | bytes) -> None:
    if out is None:
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    Path(out).write_bytes(data if isinstance(data, bytes) else data.encode())


def _json(path: str) -> dict:
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path}: not valid JSON ({exc.msg})", EXIT_FORMAT) from None


def _load_target(path: str) -> TileSet:
    try:
        return tileset_from_json(_read(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise CLIError(f"{path}: malformed tile set ({exc})", EXIT_FORMAT) from None


def _target_from_descriptor(d: dict) -> TileSet:
    return TileSet.explicit(d["k"], [tuple(bits_to_color(b) for b in t) for t in d["target"]])


def load_descriptor(path: str, seed: int = 0) -> CompiledTileSet:
    """Rebuild the compiled tile set a descriptor file describes."""
    d = _json(path)
    try:
        if d["mode"] == "direct":
            compiled, _ = compile_direct(_target_from_descriptor(d), d["N"])
        elif d["mode"] == "fixpoint":
            from .fixpoint import rebuild_fixpoint
            compiled = rebuild_fixpoint(d["N"], d.get("level", 0), seed)
        else:
            raise ValueError(f"unknown mode {d['mode']!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise CLIError(f"{path}: malformed descriptor ({exc})", EXIT_FORMAT) from None
    faults = d.get("faults", [])
    return compiled.with_faults(*faults) if faults else compiled


# --------------------------------------------------------------------------
# compile

def _direct_report(c: CompiledTileSet, n_min: int) -> str:
    L = c.layout
    return "\n".join([
        "[direct]", f"N = {c.n}", f"N_min = {n_min}", f"k = {c.k}", f"color_len = {c.color_len}",
        f"zone = [{L.a},{L.b}]x[{L.c},{L.d}]", f"zone_height = {L.zone_height}",
        f"machine_states = {len(c.machine.states)}", f"program_len = {len(c.program)}",
    ]) + "\n"


def cmd_compile(args) -> int:
    level = args.level
    n = args.zoom
    if args.schedule:
        try:
            sched, _ = ZoomSchedule.from_json(_read(args.schedule))
            n = sched.value(level)
        except (KeyError, ValueError) as exc:
            raise CLIError(f"{args.schedule}: malformed schedule ({exc})", EXIT_FORMAT) from None
    if args.mode == "direct":
        if not args.target:
            raise CLIError("direct mode needs --target", EXIT_USAGE)
        target = _load_target(args.target)
        n_min = direct_min_zoom(target)
        if n is None:
            n = n_min
        try:
            compiled, _ = compile_direct(target, n)
        except ZoomTooSmall:
            _say(f"zoom {n} is too small; N_min = {n_min}")
            return EXIT_TOO_SMALL
        report = _direct_report(compiled, n_min)
    else:
        from .fixpoint import build_fixpoint
        try:
            build = build_fixpoint(n, level, args.seed)
        except ZoomTooSmall as exc:
            _say(f"zoom {n} is too small; N_min = {exc.n_min}")
            return EXIT_TOO_SMALL
        compiled, report = build.compiled, build.report()
    if args.inject_fault:
        compiled = compiled.with_faults(*args.inject_fault)
    _emit(args.out, compiled.to_json())
    if args.report:
        _emit(args.report, report)
    else:
        sys.stderr.write(report)
    return EXIT_OK


# --------------------------------------------------------------------------
# assemble

def _parse_tile(text: str, k: int) -> Tile:
    parts = text.split(",")
    if len(parts) != 4 or any(len(p) != k or set(p) - {"0", "1"} for p in parts):
        raise CLIError(f"--tile wants four {k}-bit strings e,n,w,s", EXIT_USAGE)
    return Tile(*(bits_to_color(p) for p in parts))


def cmd_assemble(args) -> int:
    compiled = load_descriptor(args.descriptor, args.seed)
    if compiled.mode != "direct":
        raise CLIError("assemble works on direct-mode descriptors only", EXIT_USAGE)
    if (args.tile is None) == (args.patch is None):
        raise CLIError("give exactly one of --tile and --patch", EXIT_USAGE)
    try:
        if args.tile is not None:
            out = compiled.assemble_macrotile(_parse_tile(args.tile, compiled.k))
        else:
            alpha = compiled.simulation_map()
            out = apply_substitution(alpha, patch_from_json(_read(args.patch)), args.times)
    except RecognizerRejected as exc:
        _say(f"rejected: {exc}")
        return EXIT_FAIL
    except (KeyError, ValueError) as exc:
        raise CLIError(f"cannot assemble: {exc}", EXIT_FORMAT) from None
    _emit(args.out, patch_to_json(out))
    return EXIT_OK


# --------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    if not Path(args.descriptor).is_file():
        _say(f"descriptor {args.descriptor} not found")
        return EXIT_MISSING
    compiled = load_descriptor(args.descriptor, args.seed)
    if args.levels:
        levels = [s.strip() for s in args.levels.split(",") if s.strip()]
    else:
        levels = ["L1", "L2", "L3"] if compiled.mode == "direct" else ["L4"]
    unknown = set(levels) - {"L1", "L2", "L3", "L4", "completeness"}
    if unknown:
        raise CLIError(f"unknown levels {sorted(unknown)}", EXIT_USAGE)
    rep = VerificationReport(seed=args.seed)
    if compiled.mode == "direct":
        target = compiled.target
        alpha = compiled.simulation_map()
        if "L1" in levels or "L2" in levels:
            r = verify_adjacency_equivalence(compiled, alpha, target)
            for lvl in ("L1", "L2"):
                if lvl in levels:
                    rep.levels[lvl] = r.levels[lvl]
        if "L3" in levels:
            windows = substitution_windows(alpha, target, count=args.windows, seed=args.seed)
            l3 = None
            for idx, (offset, w) in enumerate(windows):
                res = verify_offset_uniqueness(compiled, w, alpha).levels["L3"]
                if not res.passed:
                    res.data["window"] = f"{idx} at {offset}"
                    l3 = res
                    break
            rep.levels["L3"] = l3 or LevelResult("pass", f"unique offset on {len(windows)} windows",
                                                 data={"windows": len(windows)})
        if "completeness" in levels:
            rep = rep.merge(verify_completeness_small(compiled, alpha, budget=args.budget))
        if "L4" in levels:
            _say("L4 applies to fixpoint descriptors; skipped")
    else:
        for lvl in ("L1", "L2", "L3", "completeness"):
            if lvl in levels:
                _say(f"{lvl} needs an explicit target; skipped for fixpoint descriptors")
        if "L4" in levels:
            if args.samples == 0:
                rep.levels["L4"] = LevelResult(INCONCLUSIVE, "empty sample")
            else:
                rep = rep.merge(verify_fixpoint_program(compiled, samples=args.samples, seed=args.seed))
    rep.seed = args.seed
    text = rep.to_text()
    _emit(args.out, text)
    for name in sorted(rep.levels):
        r = rep.levels[name]
        _say(f"{name}: {r.status} ({r.summary})")
    return rep.exit_code()


# --------------------------------------------------------------------------
# patch-search

def cmd_patch_search(args) -> int:
    if args.descriptor:
        tiles = load_descriptor(args.descriptor, args.seed).tileset
    else:
        tiles = _load_target(args.tiles)
    res = find_valid_patch(tiles, args.width, args.height, budget=args.budget, order_seed=args.seed)
    if isinstance(res, Found):
        _emit(args.out, patch_to_json(res.patch))
        _say(f"found after {res.nodes} nodes")
        return EXIT_OK
    if isinstance(res, Exhausted):
        _say(f"no {args.width}x{args.height} patch exists (exhausted {res.nodes} nodes)")
        return EXIT_FAIL
    assert isinstance(res, BudgetExceeded)
    _say(f"budget of {args.budget} nodes exceeded")
    return EXIT_INCONCLUSIVE


# --------------------------------------------------------------------------
# render

def cmd_render(args) -> int:
    if (args.patch is None) == (args.diagram is None):
        raise CLIError("give exactly one of --patch and --diagram", EXIT_USAGE)
    try:
        if args.patch is not None:
            compiled = load_descriptor(args.descriptor, args.seed) if args.descriptor else None
            data = render_patch(patch_from_json(_read(args.patch)), args.palette, compiled, args.max_pixels)
        else:
            data = render_diagram(ca_mod.load_diagram(_read(args.diagram)), args.max_pixels)
    except (KeyError, ValueError) as exc:
        raise CLIError(f"cannot render: {exc}", EXIT_FORMAT) from None
    _emit(args.out, data)
    return EXIT_OK


# --------------------------------------------------------------------------
# ca

_NAMED_RULES = {"xor": ca_mod.xor_rule, "majority": ca_mod.majority_rule}


def _load_rule(path: str) -> ca_mod.CARule:
    try:
        return ca_mod.CARule.from_json(_read(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise CLIError(f"{path}: malformed rule descriptor ({exc})", EXIT_FORMAT) from None


def cmd_ca_build(args) -> int:
    if args.target in _NAMED_RULES:
        program = ca_mod.rule_table_program(_NAMED_RULES[args.target], args.k)
    else:
        program = MachineProgram(_read(args.target).strip())
    try:
        rule, _ = ca_mod.build_simulator(program, args.k, args.q, args.u, args.mode,
                                         round_pow2=not args.exact_u)
    except WorkPeriodTooShort as exc:
        _say(f"work period too short; U_min = {exc.u_min}")
        return EXIT_TOO_SMALL
    _emit(args.out, rule.to_json())
    _say(f"Q = {rule.q} U = {rule.u} U_min = {ca_mod.u_min(rule.program, rule.k, rule.q)}")
    return EXIT_OK


def cmd_ca_run(args) -> int:
    rule = _load_rule(args.rule)
    if (args.width is None) == (args.input is None):
        raise CLIError("give exactly one of --width and --input", EXIT_USAGE)
    if args.input is not None:
        try:
            rows = ca_mod.load_diagram(_read(args.input))
        except ValueError as exc:
            raise CLIError(f"{args.input}: malformed dump ({exc})", EXIT_FORMAT) from None
        if not rows:
            raise CLIError(f"{args.input}: empty dump", EXIT_FORMAT)
        start = rows[-1]
    else:
        rng = random.Random(args.seed)
        x = [rng.getrandbits(rule.k) for _ in range(args.width)]
        start = ca_mod.encode_config(ca_mod.ColonyCoding(rule.q, rule.k, rule.program_bits), x)
    rows = [start]
    try:
        for t in range(args.steps):
            rows.append(ca_mod.step_vectorized(rule, rows[-1], args.start_time + t))
    except InvalidNeighborhood as exc:
        _say(f"invalid neighborhood: position {exc.position}, time {exc.time}")
        return EXIT_FAIL
    if args.final_only:
        rows = rows[-1:]
    _emit(args.out, ca_mod.dump_diagram(rule, rows))
    return EXIT_OK


def cmd_ca_verify(args) -> int:
    rule = _load_rule(args.rule)
    coding = ca_mod.ColonyCoding(rule.q, rule.k, rule.program_bits)
    xs = ca_mod.bulking_test_set(range(args.min_width, args.exhaustive_width + 1), rule.k,
                                 args.random, args.random_width, args.seed)
    rep = ca_mod.verify_bulking(rule, coding, rule.program, xs)
    quine = ca_mod.colony_program_matches(rule, ca_mod.encode_config(coding, [0] * args.min_width))
    text = rep.to_text() + f"seed = {args.seed}\nquine = {'ok' if quine else 'fail'}\n"
    _emit(args.out, text)
    _say(f"bulking: {'pass' if rep.passed else 'fail'} on {rep.checked} configurations")
    return EXIT_OK if rep.passed and quine else EXIT_FAIL


# --------------------------------------------------------------------------
# schedule-check

def cmd_schedule_check(args) -> int:
    try:
        sched, levels = ZoomSchedule.from_json(_read(args.schedule))
    except (KeyError, ValueError) as exc:
        raise CLIError(f"{args.schedule}: malformed schedule ({exc})", EXIT_FORMAT) from None
    if args.levels is not None:
        levels = args.levels
    verdict = validate_schedule(sched, levels)
    _emit(args.out, verdict.to_text())
    if verdict.accepted:
        _say(f"accepted over {levels} levels")
        return EXIT_OK
    _say(f"rejected at level {verdict.failing_level}: {verdict.reason}")
    return EXIT_FAIL


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="selfsim", description="Self-simulating tile sets and cellular automata.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compile", help="compile a tile set descriptor")
    c.add_argument("--target", help="target tile set JSON (direct mode)")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--zoom", type=int, help="zoom factor N (default: the minimum)")
    g.add_argument("--schedule", help="zoom schedule JSON; N is taken at --level")
    c.add_argument("--mode", choices=("direct", "fixpoint"), default="direct")
    c.add_argument("--level", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--inject-fault", action="append", choices=CANONICAL_FAULTS,
                   help="record a construction fault in the descriptor (testing aid)")
    c.add_argument("--out", help="descriptor path (default stdout)")
    c.add_argument("--report", help="build report path (default stderr)")
    c.set_defaults(func=cmd_compile)

    a = sub.add_parser("assemble", help="assemble macrotiles of a direct-mode descriptor")
    a.add_argument("--descriptor", required=True)
    a.add_argument("--tile", help="simulated tile as e,n,w,s bit strings")
    a.add_argument("--patch", help="patch JSON over the target to substitute")
    a.add_argument("--times", type=int, default=1)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_assemble)

    v = sub.add_parser("verify", help="run verification levels on a descriptor")
    v.add_argument("--descriptor", required=True)
    v.add_argument("--levels", help="comma list of L1,L2,L3,L4,completeness")
    v.add_argument("--samples", type=int, default=10_000)
    v.add_argument("--windows", type=int, default=20)
    v.add_argument("--budget", type=int, default=5_000_000, help="completeness search nodes")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("patch-search", help="find a locally valid rectangular patch")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--tiles", help="tile set JSON")
    src.add_argument("--descriptor")
    s.add_argument("--width", type=int, required=True)
    s.add_argument("--height", type=int, required=True)
    s.add_argument("--budget", type=int, default=1_000_000)
    s.add_argument("--seed", type=int, default=None, help="candidate order seed (default: color order)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_patch_search)

    r = sub.add_parser("render", help="render a patch or CA dump as a PPM image")
    r.add_argument("--patch")
    r.add_argument("--diagram")
    r.add_argument("--descriptor", help="needed for the role palette and decoded addresses")
    r.add_argument("--palette", choices=("bit", "address", "role"), default="bit")
    r.add_argument("--max-pixels", type=int, default=DEFAULT_MAX_PIXELS)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_render)

    ca = sub.add_parser("ca", help="build, run and verify simulating cellular automata")
    casub = ca.add_subparsers(dest="ca_command", required=True, parser_class=_Parser)
    b = casub.add_parser("build")
    b.add_argument("--target", required=True, help="xor, majority, or a file holding program bits")
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--q", type=int, default=32)
    b.add_argument("--u", type=int, default=None, help="work period (default: U_min rounded up)")
    b.add_argument("--exact-u", action="store_true", help="do not round the default U to a power of two")
    b.add_argument("--mode", choices=(ca_mod.STRICT, ca_mod.FREEZE), default=ca_mod.STRICT)
    b.add_argument("--out")
    b.set_defaults(func=cmd_ca_build)
    rn = casub.add_parser("run")
    rn.add_argument("--rule", required=True)
    rn.add_argument("--steps", type=int, required=True)
    rn.add_argument("--width", type=int, help="random simulated configuration of this width")
    rn.add_argument("--input", help="dump file; its last row is the start")
    rn.add_argument("--start-time", type=int, default=0)
    rn.add_argument("--final-only", action="store_true")
    rn.add_argument("--seed", type=int, default=0)
    rn.add_argument("--out")
    rn.set_defaults(func=cmd_ca_run)
    cv = casub.add_parser("verify")
    cv.add_argument("--rule", required=True)
    cv.add_argument("--exhaustive-width", type=int, default=8)
    cv.add_argument("--min-width", type=int, default=4)
    cv.add_argument("--random", type=int, default=100)
    cv.add_argument("--random-width", type=int, default=64)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--out")
    cv.set_defaults(func=cmd_ca_verify)

    sc = sub.add_parser("schedule-check", help="validate a zoom schedule")
    sc.add_argument("--schedule", required=True)
    sc.add_argument("--levels", type=int, default=None, help="override K from the file")
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_schedule_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        _say(f"error: {exc}")
        return exc.code
    except SelfSimError as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_FORMAT


if __name__ == "__main__":
    sys.exit(main())
