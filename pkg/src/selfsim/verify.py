"""Graded verification of a compiled tile set.

L1  every macrotile is locally valid over T(N)
L2  macrotile adjacency equals target adjacency (both axes)
L3  a window admits exactly one macrotile grid offset
L4  fixpoint program: p_T agrees with the predicate, the quine identity
    holds, the worst-case run fits the zone
plus an exhaustive completeness appendix for small N.

Each level is ``pass``, ``fail`` (with a witness) or ``inconclusive``.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .compiler import CANONICAL_FAULTS, CompiledTileSet
from .errors import SampleBudgetTooSmall, WindowTooSmall
from .fixpoint import mutate, role_samples
from .machines import RunStats, universal_run
from .wang import (WEST, Patch, SimulationMap, Tile, TileSet, apply_substitution, enumerate_valid_patches,
                   find_valid_patch, hconcat, is_locally_valid, vconcat)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
REPORT_FORMAT_VERSION = 1
ROLES = ("zone", "wire", "border", "program", "filler")


@dataclass
class LevelResult:
    status: str
    summary: str = ""
    witness: object = None
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class VerificationReport:
    levels: dict[str, LevelResult] = field(default_factory=dict)
    seed: int | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        out = VerificationReport(dict(self.levels), self.seed if self.seed is not None else other.seed,
                                 dict(self.timings))
        out.levels.update(other.levels)
        out.timings.update(other.timings)
        return out

    @property
    def worst(self) -> str:
        statuses = [r.status for r in self.levels.values()]
        if FAIL in statuses:
            return FAIL
        if INCONCLUSIVE in statuses:
            return INCONCLUSIVE
        return PASS

    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 1, INCONCLUSIVE: 3}[self.worst]

    def to_text(self, timings: bool = False) -> str:
        """Machine-readable report; timings are left out by default so that
        reports are byte-identical across runs."""
        lines = ["[report]", f"format_version = {REPORT_FORMAT_VERSION}",
                 f"seed = {self.seed if self.seed is not None else 'none'}", f"worst = {self.worst}"]
        for name in sorted(self.levels):
            r = self.levels[name]
            lines += ["", f"[{name}]", f"status = {r.status}", f"summary = {r.summary}"]
            for key in sorted(r.data):
                lines.append(f"{key} = {r.data[key]}")
            if r.witness is not None:
                lines.append(f"witness = {_witness_text(r.witness)}")
            if timings and name in self.timings:
                lines.append(f"seconds = {self.timings[name]:.3f}")
        return "\n".join(lines) + "\n"


def _witness_text(w) -> str:
    if isinstance(w, Patch):
        return f"patch {w.width}x{w.height}"
    return repr(w)


# --------------------------------------------------------------------------
# L1, L2

def verify_adjacency_equivalence(compiled: CompiledTileSet, alpha: SimulationMap,
                                 target: TileSet) -> VerificationReport:
    t0 = time.perf_counter()
    rep = VerificationReport()
    tiles = compiled.tileset
    l1_bad = None
    for s in target:
        v = is_locally_valid(alpha[s], tiles)
        if not v.valid:
            where = (v.violations or v.non_members)[0]
            l1_bad = (tuple(s), where)
            break
    rep.levels["L1"] = LevelResult(FAIL if l1_bad else PASS,
                                   f"{len(target)} macrotiles checked",
                                   witness=l1_bad)
    rep.timings["L1"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mismatches = []
    tables = {"horizontal": [], "vertical": []}
    for s, t in itertools.product(list(target), repeat=2):
        for axis in tables:
            if axis == "horizontal":
                got = _seam_valid(hconcat(alpha[s], alpha[t]), tiles)
                want = s.east == t.west
            else:
                got = _seam_valid(vconcat(alpha[s], alpha[t]), tiles)
                want = s.north == t.south
            tables[axis].append(int(got))
            if got != want:
                mismatches.append((axis, tuple(s), tuple(t), got))
    n_pairs = len(tables["horizontal"])
    rep.levels["L2"] = LevelResult(
        FAIL if mismatches else PASS,
        f"{n_pairs} pairs per axis",
        witness=mismatches[0] if mismatches else None,
        data={f"{axis}_table": "".join(map(str, v)) for axis, v in tables.items()})
    rep.timings["L2"] = time.perf_counter() - t0
    return rep


def _seam_valid(patch: Patch, tiles: TileSet) -> bool:
    return is_locally_valid(patch, tiles).valid


def adjacency_table(target: TileSet, axis: str) -> str:
    bits = []
    for s, t in itertools.product(list(target), repeat=2):
        bits.append(int(s.east == t.west) if axis == "horizontal" else int(s.north == t.south))
    return "".join(map(str, bits))


# --------------------------------------------------------------------------
# L3

def grid_offsets(compiled: CompiledTileSet, window: Patch) -> list[tuple[int, int]]:
    """Offsets ``v`` such that every cell at ``v + (x, y) mod N`` carries
    address ``(x, y)``."""
    n = compiled.n
    codec = compiled.codec
    amask = (1 << codec.nb) - 1
    west = window.colors[:, :, WEST]
    ax = west & amask
    ay = (west >> codec.nb) & amask
    rows, cols = np.indices(ax.shape)
    vx = np.unique((cols - ax) % n)
    vy = np.unique((rows - ay) % n)
    if len(vx) != 1 or len(vy) != 1 or (ax >= n).any() or (ay >= n).any():
        return []
    return [(int(vx[0]), int(vy[0]))]


def verify_offset_uniqueness(compiled: CompiledTileSet, window: Patch,
                             alpha: SimulationMap | None = None) -> VerificationReport:
    t0 = time.perf_counter()
    n = compiled.n
    if window.width < 2 * n or window.height < 2 * n:
        raise WindowTooSmall(f"window {window.width}x{window.height} is smaller than {2 * n}x{2 * n}")
    rep = VerificationReport()
    if not window.is_full:
        rep.levels["L3"] = LevelResult(FAIL, "window not fully filled")
        return rep
    validity = is_locally_valid(window, compiled.tileset)
    candidates = grid_offsets(compiled, window)
    data = {"candidates": candidates}
    if not validity.valid:
        where = (validity.violations or validity.non_members)[0]
        rep.levels["L3"] = LevelResult(FAIL, "window is locally invalid", witness=where, data=data)
    elif len(candidates) != 1:
        rep.levels["L3"] = LevelResult(FAIL, f"{len(candidates)} grid offsets", data=data)
    else:
        vx, vy = candidates[0]
        bad = None
        if alpha is not None:
            images = set(alpha.entries.values())
            for by in range(vy, window.height - n + 1, n):
                for bx in range(vx, window.width - n + 1, n):
                    if window.crop(bx, by, n, n) not in images:
                        bad = (bx, by)
                        break
                if bad:
                    break
        if bad:
            rep.levels["L3"] = LevelResult(FAIL, "aligned block is not a macrotile image", witness=bad, data=data)
        else:
            rep.levels["L3"] = LevelResult(PASS, f"unique offset {candidates[0]}", data=data)
    rep.timings["L3"] = time.perf_counter() - t0
    return rep


def substitution_windows(alpha: SimulationMap, target: TileSet, count: int = 20, seed: int = 0,
                         patch_size: int = 3) -> list[tuple[tuple[int, int], Patch]]:
    """2N x 2N windows cut at seeded offsets from ``alpha`` applied to valid
    ``patch_size``-square patches of the target."""
    n = alpha.zoom
    rng = random.Random(seed)
    bases = []
    for order in range(4):
        res = find_valid_patch(target, patch_size, patch_size, order_seed=order + 1000 * seed, budget=100_000)
        if hasattr(res, "patch"):
            bases.append(res.patch)
    if not bases:
        raise ValueError(f"target admits no valid {patch_size}x{patch_size} patch")
    out = []
    span = (patch_size - 2) * n
    for idx in range(count):
        big = apply_substitution(alpha, bases[idx % len(bases)])
        ox, oy = (0, 0) if idx == 0 else (rng.randrange(span + 1), rng.randrange(span + 1))
        out.append(((ox, oy), big.crop(ox, oy, 2 * n, 2 * n)))
    return out


# --------------------------------------------------------------------------
# L4

def fixpoint_samples(compiled: CompiledTileSet, samples: int, seed: int) -> list[tuple[str, Tile]]:
    """``samples`` tiles interleaved round-robin over roles: valid tiles,
    one-bit mutants and uniformly random bit strings."""
    rng = random.Random(seed)
    ell = compiled.color_len
    pools = role_samples(compiled, rng, per_role=max(16, samples // 32))
    streams: list[list[tuple[str, Tile]]] = []
    for role in ROLES:
        base = pools.get(role, [])
        stream = []
        for t in base:
            stream.append((role, t))
            stream.append((role + "~", mutate(t, ell, rng)))
        streams.append(stream)
    out: list[tuple[str, Tile]] = []
    pos = 0
    while len(out) < samples and any(pos < len(s) for s in streams):
        for s in streams:
            if pos < len(s) and len(out) < samples:
                out.append(s[pos])
        pos += 1
    n = compiled.n
    while len(out) < samples:
        if rng.random() < 0.5:
            t = Tile(*(rng.getrandbits(ell) for _ in range(4)))
            out.append(("random", t))
        else:
            i, j = rng.randrange(n), rng.randrange(n)
            cands = list(compiled.tiles_at(i, j))
            t = cands[rng.randrange(len(cands))]
            if rng.random() < 0.5:
                out.append((compiled.role(i, j), t))
            else:
                out.append((compiled.role(i, j) + "~", mutate(t, ell, rng)))
    return out


def _encode(t: Tile, ell: int) -> str:
    return "".join(format(c, f"0{ell}b") for c in t)


def quine_probe(compiled: CompiledTileSet, columns) -> list[tuple[int, int | None, int]]:
    """For program column indexes ``columns``: (index, demanded bit, stored
    bit).  The demanded bit is whichever program bit p_T accepts on a valid
    tile at address ``(a + index, 0)``; ``None`` if not exactly one is."""
    L = compiled.layout
    codec = compiled.codec
    ell = compiled.color_len
    out = []
    stored = compiled.program_bits
    for idx in columns:
        base = next(iter(compiled.tiles_at(L.a + idx, 0)))
        accepted = []
        for bit in (0, 1):
            e, nn, w, s = base
            xn, yn, _, pn = codec.unpack(nn)
            xs, ys, _, ps = codec.unpack(s)
            probe = Tile(e, codec.pack(xn, yn, bit, pn), w, codec.pack(xs, ys, bit, ps))
            if universal_run(compiled.program, _encode(probe, ell)).accepted:
                accepted.append(bit)
        out.append((idx, accepted[0] if len(accepted) == 1 else None, int(stored[idx])))
    return out


def verify_fixpoint_program(compiled: CompiledTileSet, samples: int = 10_000, seed: int = 0,
                            probe_columns: int = 64) -> VerificationReport:
    if compiled.mode != "fixpoint":
        raise ValueError("L4 needs a fixpoint compilation")
    t0 = time.perf_counter()
    rep = VerificationReport(seed=seed)
    p = compiled.program
    ell = compiled.color_len
    drawn = fixpoint_samples(compiled, samples, seed)
    covered = {role.rstrip("~") for role, _ in drawn} & set(ROLES)
    missing = sorted(set(ROLES) - covered)
    try:
        if missing:
            raise SampleBudgetTooSmall(f"sample of {samples} misses roles {missing}")
    except SampleBudgetTooSmall as exc:
        rep.levels["L4"] = LevelResult(INCONCLUSIVE, str(exc), data={"samples": samples})
        rep.timings["L4"] = time.perf_counter() - t0
        return rep

    stats = RunStats()
    worst = 0
    disagreements = []
    accepted = 0
    per_role: dict[str, int] = {}
    for role, t in drawn:
        out = universal_run(p, _encode(t, ell), stats=stats)
        worst = max(worst, stats.time)
        pred = compiled.contains(t)
        accepted += pred
        per_role[role] = per_role.get(role, 0) + 1
        if out.accepted != pred:
            disagreements.append((role, tuple(t), out.verdict, pred))
    agree = not disagreements

    # quine identity: the bits PBIT reads are the bits stored in the columns,
    # confirmed dynamically on a spread of columns
    plen = len(compiled.program_bits)
    symbolic = p.bits == compiled.program_bits
    first_diff = next((i for i, (x, y) in enumerate(zip(p.bits, compiled.program_bits)) if x != y), None)
    cols = sorted({0, plen - 1, *(round(x) for x in np.linspace(0, plen - 1, probe_columns))}
                  | ({first_diff} if first_diff is not None else set()))
    probes = quine_probe(compiled, cols)
    dyn_bad = [pr for pr in probes if pr[1] != pr[2]]
    quine = symbolic and not dyn_bad

    fits = worst <= compiled.layout.zone_height
    ok = agree and quine and fits
    rep.levels["L4"] = LevelResult(
        PASS if ok else FAIL,
        f"agreement={agree} quine={quine} fits={fits}",
        witness=(disagreements[0] if disagreements else dyn_bad[0] if dyn_bad else
                 ("first differing program bit", first_diff) if not symbolic else
                 ("worst cost", worst) if not fits else None),
        data={"samples": len(drawn), "accepted": accepted, "worst_cost": worst,
              "zone_height": compiled.layout.zone_height, "program_len": plen,
              "quine_probes": len(probes), "roles": dict(sorted(per_role.items()))})
    rep.timings["L4"] = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# completeness appendix

def verify_completeness_small(compiled: CompiledTileSet, alpha: SimulationMap,
                              budget: int = 5_000_000) -> VerificationReport:
    """Enumerate every locally valid N x N patch whose southwest cell has
    address (0, 0) and compare with alpha's images."""
    t0 = time.perf_counter()
    n = compiled.n
    codec = compiled.codec
    amask = (1 << (2 * codec.nb)) - 1
    boundary = {"west": [(codec.pack(0, 0), amask)] + [None] * (n - 1)}
    limit = len(alpha.entries) + 1
    e = enumerate_valid_patches(compiled.tileset, n, n, boundary=boundary, budget=budget, limit=limit)
    images = set(alpha.entries.values())
    got = set(e.patches)
    data = {"completions": len(e.patches), "nodes": e.nodes, "expected": len(images)}
    rep = VerificationReport()
    if got - images:
        rep.levels["completeness"] = LevelResult(FAIL, "found a completion outside alpha(S)",
                                                 witness=next(iter(got - images)), data=data)
    elif not e.complete:
        rep.levels["completeness"] = LevelResult(INCONCLUSIVE, "search budget exceeded", data=data)
    elif got != images:
        rep.levels["completeness"] = LevelResult(FAIL, "some alpha images have no completion", data=data)
    else:
        rep.levels["completeness"] = LevelResult(PASS, "completions are exactly alpha(S) (exhausted)", data=data)
    rep.timings["completeness"] = time.perf_counter() - t0
    return rep


def border_completions(compiled: CompiledTileSet, border: Patch, budget: int = 2_000_000):
    """Completions of an N x N patch whose outer edges match ``border``'s."""
    n = compiled.n
    boundary = {
        "west": [border[0, r].west for r in range(n)],
        "east": [border[n - 1, r].east for r in range(n)],
        "south": [border[c, 0].south for c in range(n)],
        "north": [border[c, n - 1].north for c in range(n)],
    }
    return enumerate_valid_patches(compiled.tileset, n, n, boundary=boundary, budget=budget, limit=4)


# --------------------------------------------------------------------------
# fault injection

def fault_suite(compiled: CompiledTileSet, target: TileSet, fixpoint: CompiledTileSet | None = None,
                windows: int = 4, seed: int = 0, samples: int = 2000) -> dict[str, list[str]]:
    """For each canonical fault: the levels that detect it."""
    out: dict[str, list[str]] = {}
    for name in CANONICAL_FAULTS:
        if name == "program_bit_flip":
            if fixpoint is None:
                continue
            bad = fixpoint.with_faults(name)
            r = verify_fixpoint_program(bad, samples=samples, seed=seed, probe_columns=8)
            out[name] = [lvl for lvl, res in r.levels.items() if res.status == FAIL]
            continue
        bad = compiled.with_faults(name)
        alpha = SimulationMap(compiled.n, {s: bad.assemble_macrotile(s) for s in target})
        r = verify_adjacency_equivalence(bad, alpha, target)
        for _, w in substitution_windows(alpha, target, count=windows, seed=seed):
            r = r.merge(verify_offset_uniqueness(bad, w, alpha))
            if r.levels["L3"].status == FAIL:
                break
        out[name] = [lvl for lvl, res in sorted(r.levels.items()) if res.status == FAIL]
    return out
