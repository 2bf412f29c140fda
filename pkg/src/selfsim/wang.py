"""Wang tiles, tile sets, rectangular patches and the operations on them.

Colors are non-negative integers read as fixed-width bit vectors of length
``color_len``.  A tile is the 4-tuple ``(east, north, west, south)``.

Patches use ``(col, row)`` coordinates with the origin at the southwest
corner: east is ``+col`` and north is ``+row``.  Internally a patch stores a
``(height, width, 4)`` integer array indexed ``[row, col, side]`` together
with a boolean mask of filled cells.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ColorLengthMismatch, UnmappedTile

EAST, NORTH, WEST, SOUTH = range(4)
SIDES = ("east", "north", "west", "south")

FORMAT_VERSION = 1


class Tile(NamedTuple):
    east: int
    north: int
    west: int
    south: int


def color_to_bits(color: int, length: int) -> str:
    return format(color, f"0{length}b") if length else ""


def bits_to_color(bits: str) -> int:
    return int(bits, 2) if bits else 0


# A boundary/edge constraint is either a full color or a (value, mask) pair;
# a color c satisfies (value, mask) when c & mask == value.
Constraint = "int | tuple[int, int] | None"


def _norm_constraint(c, full_mask: int):
    if c is None:
        return None
    if isinstance(c, tuple):
        value, mask = c
        return (value & mask, mask)
    return (int(c), full_mask)


def satisfies(color: int, constraint) -> bool:
    if constraint is None:
        return True
    value, mask = constraint
    return color & mask == value


class TileSet:
    """A Wang tile set, explicit or implicit.

    Implicit sets are given by a membership ``predicate`` and an
    ``enumerator`` that, for a mapping ``{side: (value, mask)}``, yields every
    tile of the set satisfying those edge constraints (possibly more; the
    results are re-filtered).
    """

    def __init__(self, color_len: int, tiles: Iterable[Tile] | None = None,
                 predicate: Callable[[Tile], bool] | None = None,
                 enumerator: Callable[[Mapping[int, tuple[int, int]]], Iterable[Tile]] | None = None,
                 name: str = ""):
        self.color_len = color_len
        self.name = name
        if tiles is not None:
            tiles = tuple(Tile(*t) for t in tiles)
            if len(set(tiles)) != len(tiles):
                raise ValueError("explicit tile list contains duplicates")
            for t in tiles:
                _check_len(t, color_len)
            self.tiles: tuple[Tile, ...] | None = tiles
            self._members = frozenset(tiles)
        else:
            if predicate is None:
                raise ValueError("implicit tile set needs a predicate")
            self.tiles = None
            self._members = None
        self._predicate = predicate
        self._enumerator = enumerator

    @classmethod
    def explicit(cls, color_len: int, tiles: Iterable[Sequence[int]], name: str = "") -> "TileSet":
        return cls(color_len, tiles=[Tile(*t) for t in tiles], name=name)

    @classmethod
    def implicit(cls, color_len: int, predicate, enumerator=None, name: str = "") -> "TileSet":
        return cls(color_len, predicate=predicate, enumerator=enumerator, name=name)

    @property
    def is_explicit(self) -> bool:
        return self.tiles is not None

    @property
    def full_mask(self) -> int:
        return (1 << self.color_len) - 1

    def __contains__(self, tile) -> bool:
        tile = Tile(*tile)
        if self._members is not None:
            return tile in self._members
        return bool(self._predicate(tile))

    def __len__(self) -> int:
        if self.tiles is None:
            raise TypeError("implicit tile sets have no length")
        return len(self.tiles)

    def __iter__(self) -> Iterator[Tile]:
        if self.tiles is None:
            raise TypeError("implicit tile sets are not iterable; use candidates()")
        return iter(self.tiles)

    def candidates(self, constraints: Mapping[int, tuple[int, int]]) -> list[Tile]:
        """Members satisfying every edge constraint, in bitwise color order."""
        if self.tiles is not None:
            pool: Iterable[Tile] = self.tiles
        elif self._enumerator is not None:
            pool = (t for t in self._enumerator(constraints) if t in self)
        else:
            raise TypeError("implicit tile set has no candidate enumerator")
        out = {t for t in pool
               if all(satisfies(t[side], c) for side, c in constraints.items() if c is not None)}
        return sorted(out)


def _check_len(tile: Sequence[int], color_len: int) -> None:
    for c in tile:
        if c < 0 or c >> color_len:
            raise ColorLengthMismatch(f"color {c} does not fit in {color_len} bits")


class Patch:
    """Rectangular pattern of tiles with optional empty cells."""

    __slots__ = ("colors", "filled", "color_len")

    def __init__(self, colors: np.ndarray, filled: np.ndarray, color_len: int):
        self.colors = colors
        self.filled = filled
        self.color_len = color_len
        colors.setflags(write=False)
        filled.setflags(write=False)

    @classmethod
    def empty(cls, width: int, height: int, color_len: int) -> "Patch":
        return cls(np.zeros((height, width, 4), dtype=np.int64),
                   np.zeros((height, width), dtype=bool), color_len)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Tile | None]], color_len: int) -> "Patch":
        """Build from ``rows[row][col]``; ``rows[0]`` is the southernmost row."""
        height = len(rows)
        width = len(rows[0]) if height else 0
        colors = np.zeros((height, width, 4), dtype=np.int64)
        filled = np.zeros((height, width), dtype=bool)
        for r, row in enumerate(rows):
            if len(row) != width:
                raise ValueError("ragged rows")
            for c, t in enumerate(row):
                if t is not None:
                    colors[r, c] = t
                    filled[r, c] = True
        return cls(colors, filled, color_len)

    @classmethod
    def single(cls, tile: Tile, color_len: int) -> "Patch":
        return cls.from_rows([[tile]], color_len)

    @property
    def width(self) -> int:
        return self.filled.shape[1]

    @property
    def height(self) -> int:
        return self.filled.shape[0]

    @property
    def is_full(self) -> bool:
        return bool(self.filled.all())

    def __getitem__(self, pos: tuple[int, int]) -> Tile | None:
        col, row = pos
        if not self.filled[row, col]:
            return None
        return Tile(*(int(v) for v in self.colors[row, col]))

    def tiles(self) -> Iterator[tuple[tuple[int, int], Tile]]:
        for row, col in zip(*np.nonzero(self.filled)):
            yield (int(col), int(row)), Tile(*(int(v) for v in self.colors[row, col]))

    def distinct_tiles(self) -> list[Tile]:
        cells = self.colors[self.filled]
        if len(cells) == 0:
            return []
        return [Tile(*(int(v) for v in row)) for row in np.unique(cells, axis=0)]

    def crop(self, col: int, row: int, width: int, height: int) -> "Patch":
        return Patch(self.colors[row:row + height, col:col + width].copy(),
                     self.filled[row:row + height, col:col + width].copy(), self.color_len)

    def with_tile(self, col: int, row: int, tile: Tile | None) -> "Patch":
        colors = self.colors.copy()
        filled = self.filled.copy()
        if tile is None:
            filled[row, col] = False
            colors[row, col] = 0
        else:
            colors[row, col] = tile
            filled[row, col] = True
        return Patch(colors, filled, self.color_len)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Patch):
            return NotImplemented
        return (self.color_len == other.color_len
                and self.filled.shape == other.filled.shape
                and np.array_equal(self.filled, other.filled)
                and np.array_equal(self.colors[self.filled], other.colors[other.filled]))

    def __hash__(self):
        return hash((self.width, self.height, self.colors[self.filled].tobytes()))

    def __repr__(self) -> str:
        return f"Patch({self.width}x{self.height}, color_len={self.color_len})"


def hconcat(*patches: Patch) -> Patch:
    return Patch(np.concatenate([p.colors for p in patches], axis=1),
                 np.concatenate([p.filled for p in patches], axis=1), patches[0].color_len)


def vconcat(*patches: Patch) -> Patch:
    """Stack patches south to north (first argument is the southernmost)."""
    return Patch(np.concatenate([p.colors for p in patches], axis=0),
                 np.concatenate([p.filled for p in patches], axis=0), patches[0].color_len)


@dataclass
class ValidityReport:
    valid: bool
    violations: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)
    non_members: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


def is_locally_valid(patch: Patch, tiles: TileSet | None = None) -> ValidityReport:
    """Check edge matching between adjacent filled cells and, if ``tiles`` is
    given, membership of every present tile."""
    if tiles is not None and patch.color_len != tiles.color_len:
        raise ColorLengthMismatch(
            f"patch color length {patch.color_len} != tile set {tiles.color_len}")
    cells = patch.colors[patch.filled]
    if len(cells) and (cells.min() < 0 or (cells >> patch.color_len).any()):
        raise ColorLengthMismatch(f"a tile color exceeds {patch.color_len} bits")

    f, c = patch.filled, patch.colors
    bad_h = f[:, :-1] & f[:, 1:] & (c[:, :-1, EAST] != c[:, 1:, WEST])
    bad_v = f[:-1, :] & f[1:, :] & (c[:-1, :, NORTH] != c[1:, :, SOUTH])
    violations = [((int(col), int(row)), (int(col) + 1, int(row))) for row, col in zip(*np.nonzero(bad_h))]
    violations += [((int(col), int(row)), (int(col), int(row) + 1)) for row, col in zip(*np.nonzero(bad_v))]
    violations.sort()

    non_members: list[tuple[int, int]] = []
    if tiles is not None and len(cells):
        uniq, inverse = np.unique(cells, axis=0, return_inverse=True)
        ok = np.array([Tile(*(int(v) for v in u)) in tiles for u in uniq])
        bad_cells = ~ok[inverse.reshape(-1)]
        if bad_cells.any():
            rows, cols = np.nonzero(patch.filled)
            non_members = sorted((int(cc), int(rr)) for rr, cc in zip(rows[bad_cells], cols[bad_cells]))
    return ValidityReport(not violations and not non_members, violations, non_members)


def has_period(patch: Patch, p: tuple[int, int]) -> bool:
    """True iff ``patch(v + p) == patch(v)`` for every ``v`` with both cells in range."""
    dx, dy = p
    h, w = patch.height, patch.width
    if abs(dx) >= w or abs(dy) >= h:
        return True
    a = patch.colors[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    b = patch.colors[max(0, dy):h - max(0, -dy), max(0, dx):w - max(0, -dx)]
    return bool(np.array_equal(a, b))


@dataclass(frozen=True)
class SimulationMap:
    """The injection from simulated tiles to ``zoom x zoom`` patches."""

    zoom: int
    entries: Mapping[Tile, Patch]

    def __post_init__(self):
        images = list(self.entries.values())
        for s, img in self.entries.items():
            if img.width != self.zoom or img.height != self.zoom:
                raise ValueError(f"image of {s} is not {self.zoom}x{self.zoom}")
        for i, img in enumerate(images):
            if any(img == other for other in images[i + 1:]):
                raise ValueError("simulation map is not injective")

    def __getitem__(self, tile: Tile) -> Patch:
        try:
            return self.entries[Tile(*tile)]
        except KeyError:
            raise UnmappedTile(f"no image for {tile}") from None

    def __contains__(self, tile) -> bool:
        return Tile(*tile) in self.entries

    @property
    def color_len(self) -> int:
        return next(iter(self.entries.values())).color_len


def apply_substitution(alpha: SimulationMap, patch: Patch, times: int = 1) -> Patch:
    """Replace each tile by its ``alpha`` image; ``times`` iterates the map."""
    for _ in range(times):
        n = alpha.zoom
        out_len = alpha.color_len if alpha.entries else patch.color_len
        colors = np.zeros((patch.height * n, patch.width * n, 4), dtype=np.int64)
        filled = np.zeros((patch.height * n, patch.width * n), dtype=bool)
        for (col, row), t in patch.tiles():
            img = alpha[t]
            colors[row * n:(row + 1) * n, col * n:(col + 1) * n] = img.colors
            filled[row * n:(row + 1) * n, col * n:(col + 1) * n] = img.filled
        patch = Patch(colors, filled, out_len)
    return patch


# --------------------------------------------------------------------------
# search

@dataclass
class Found:
    patch: Patch
    nodes: int


@dataclass
class Exhausted:
    nodes: int


@dataclass
class BudgetExceeded:
    nodes: int


SearchResult = "Found | Exhausted | BudgetExceeded"


def _iter_completions(tiles: TileSet, width: int, height: int, boundary, fixed, budget,
                      order_seed, stats: dict):
    """Backtracking over cells in row-major order from the southwest corner.

    Yields completed color arrays and keeps ``stats["nodes"]`` current; the
    generator's return value tells whether the tree was exhausted.
    """
    full = tiles.full_mask
    boundary = boundary or {}
    bnd = {side: [_norm_constraint(c, full) for c in boundary.get(side, [None] * n)]
           for side, n in (("west", height), ("east", height), ("south", width), ("north", width))}
    rng = random.Random(order_seed) if order_seed is not None else None
    colors = np.zeros((height, width, 4), dtype=np.int64)
    cache: dict = {}

    def cands(col, row):
        cons = {}
        cons[WEST] = (int(colors[row, col - 1, EAST]), full) if col else bnd["west"][row]
        cons[SOUTH] = (int(colors[row - 1, col, NORTH]), full) if row else bnd["south"][col]
        if col == width - 1:
            cons[EAST] = bnd["east"][row]
        if row == height - 1:
            cons[NORTH] = bnd["north"][col]
        key = tuple(sorted((k, v) for k, v in cons.items() if v is not None))
        if fixed is not None and fixed.filled[row, col]:
            t = fixed[col, row]
            return [t] if all(satisfies(t[s], v) for s, v in key) and t in tiles else []
        lst = cache.get(key)
        if lst is None:
            lst = tiles.candidates(dict(key))
            cache[key] = lst
        if rng is not None:
            lst = list(lst)
            rng.shuffle(lst)
        return lst

    ncells = width * height
    stats["nodes"] = 0
    if ncells == 0:
        yield colors.copy()
        return True
    stack = [(cands(0, 0), 0)]
    while stack:
        lst, idx = stack[-1]
        pos = len(stack) - 1
        if idx >= len(lst):
            stack.pop()
            continue
        stack[-1] = (lst, idx + 1)
        stats["nodes"] += 1
        if budget is not None and stats["nodes"] > budget:
            return False
        row, col = divmod(pos, width)
        colors[row, col] = lst[idx]
        if pos + 1 == ncells:
            yield colors.copy()
            continue
        nrow, ncol = divmod(pos + 1, width)
        stack.append((cands(ncol, nrow), 0))
    return True


def find_valid_patch(tiles: TileSet, width: int, height: int, boundary=None, fixed: Patch | None = None,
                     budget: int | None = 1_000_000, order_seed: int | None = None):
    """Search for a fully filled locally valid patch.

    ``boundary`` maps ``"west"/"east"`` to per-row and ``"south"/"north"`` to
    per-column constraints on the outer edges (a color, a ``(value, mask)``
    pair or ``None``).  ``fixed`` pre-assigns cells.  Returns ``Found``,
    ``Exhausted`` (no completion exists) or ``BudgetExceeded``.
    """
    stats: dict = {}
    gen = _iter_completions(tiles, width, height, boundary, fixed, budget, order_seed, stats)
    try:
        colors = next(gen)
    except StopIteration as stop:
        return Exhausted(stats["nodes"]) if stop.value else BudgetExceeded(stats["nodes"])
    return Found(Patch(colors, np.ones((height, width), dtype=bool), tiles.color_len), stats["nodes"])


@dataclass
class Enumeration:
    patches: list[Patch]
    complete: bool
    nodes: int


def enumerate_valid_patches(tiles: TileSet, width: int, height: int, boundary=None,
                            fixed: Patch | None = None, budget: int | None = 1_000_000,
                            limit: int | None = None) -> Enumeration:
    """All completions (up to ``limit``); ``complete`` is True only when the
    search tree was exhausted within budget."""
    stats: dict = {}
    gen = _iter_completions(tiles, width, height, boundary, fixed, budget, None, stats)
    found: list[Patch] = []
    ones = np.ones((height, width), dtype=bool)
    while True:
        try:
            colors = next(gen)
        except StopIteration as stop:
            return Enumeration(found, bool(stop.value), stats["nodes"])
        found.append(Patch(colors, ones.copy(), tiles.color_len))
        if limit is not None and len(found) >= limit:
            return Enumeration(found, False, stats["nodes"])


# --------------------------------------------------------------------------
# file formats

def _tile_json(t: Tile, ell: int) -> dict:
    return {k[0]: color_to_bits(c, ell) for k, c in zip(SIDES, t)}


def _tile_from_json(d: Mapping[str, str]) -> Tile:
    return Tile(*(bits_to_color(d[k[0]]) for k in SIDES))


def tileset_to_json(tiles: TileSet, predicate_ref: str | None = None) -> str:
    doc: dict = {"format_version": FORMAT_VERSION, "color_len": tiles.color_len}
    if tiles.is_explicit:
        doc["kind"] = "explicit"
        doc["tiles"] = [_tile_json(t, tiles.color_len) for t in tiles.tiles]
    else:
        if predicate_ref is None:
            raise ValueError("implicit tile sets serialize by reference only")
        doc["kind"] = "implicit"
        doc["predicate_ref"] = predicate_ref
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def tileset_from_json(text: str, resolve: Callable[[str], TileSet] | None = None) -> TileSet:
    doc = json.loads(text)
    if doc["kind"] == "explicit":
        return TileSet.explicit(doc["color_len"], [_tile_from_json(t) for t in doc["tiles"]])
    if resolve is None:
        raise ValueError(f"cannot resolve predicate_ref {doc['predicate_ref']!r}")
    return resolve(doc["predicate_ref"])


def patch_to_json(patch: Patch) -> str:
    """Palette-indexed encoding; ``rows[0]`` is the southernmost row."""
    palette = patch.distinct_tiles()
    index = {t: i for i, t in enumerate(palette)}
    rows = []
    for r in range(patch.height):
        row = []
        for c in range(patch.width):
            t = patch[c, r]
            row.append(None if t is None else index[t])
        rows.append(row)
    doc = {"format_version": FORMAT_VERSION, "width": patch.width, "height": patch.height,
           "color_len": patch.color_len,
           "tiles": [_tile_json(t, patch.color_len) for t in palette], "rows": rows}
    return json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n"


def patch_from_json(text: str) -> Patch:
    doc = json.loads(text)
    palette = [_tile_from_json(t) for t in doc["tiles"]]
    rows = [[None if i is None else palette[i] for i in row] for row in doc["rows"]]
    if not rows:
        return Patch.empty(doc["width"], 0, doc["color_len"])
    return Patch.from_rows(rows, doc["color_len"])
