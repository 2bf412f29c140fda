"""Geometry of one N x N macrotile: computation zone, border bits, wires.

Addresses are ``(i, j)`` = (column, row) inside the macrotile.  Border bits
sit on ``I = [a+3k, a+4k-1]``: color bit ``u`` (MSB first) of the east and
west colors lives in row ``a+3k+u``, of the north and south colors in column
``a+3k+u``.

Every border bit has a wire ending on the zone's bottom row at column
``a+q`` where ``q`` is the bit's position on the input tape.  South wires
run straight up.  East, north and west wires travel counter-clockwise to the
region left of the zone, drop to a private lane below it and turn east to
their landing column.  Wires are nested rings (ring 0 outermost), which keeps
them pairwise disjoint.  Because the landing order must follow the cyclic
order of the border, the tape holds ``east || rev(north) || rev(west) ||
south``; ``tape_word`` produces it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import ZoomTooSmall

EAST, NORTH, WEST, SOUTH = range(4)
E_BIT, N_BIT, W_BIT, S_BIT = 1, 2, 4, 8  # edge masks


def zone_bounds(n: int) -> tuple[int, int]:
    """``(a, b)`` with ``a = floor(N/3)``, ``b = floor(2N/3)``; the zone is
    ``[a, b] x [a, b]``."""
    return n // 3, (2 * n) // 3


@dataclass(frozen=True)
class Wire:
    q: int              # landing position on the input tape
    side: int           # EAST/NORTH/WEST/SOUTH: which color the bit belongs to
    bit: int            # bit index in that color, 0 = MSB
    ring: int | None    # nesting index for routed wires, None for south wires
    points: tuple[tuple[int, int], ...]  # polyline, first point outside the macrotile

    def cells(self) -> list[tuple[int, int]]:
        """Path cells from the border cell to the zone-bottom endpoint."""
        out: list[tuple[int, int]] = []
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            dx = (x1 > x0) - (x1 < x0)
            dy = (y1 > y0) - (y1 < y0)
            x, y = x0, y0
            while (x, y) != (x1, y1):
                x, y = x + dx, y + dy
                out.append((x, y))
        return out

    @property
    def source(self) -> tuple[int, int]:
        return self.cells()[0]

    @property
    def endpoint(self) -> tuple[int, int]:
        return self.points[-1]


@dataclass(frozen=True)
class MacrotileLayout:
    n: int
    k: int
    a: int
    b: int
    c: int
    d: int
    program_len: int = 0
    wires: tuple[Wire, ...] = field(default=(), repr=False)

    @property
    def zone(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return (self.a, self.b), (self.c, self.d)

    @property
    def zone_width(self) -> int:
        return self.b - self.a + 1

    @property
    def zone_height(self) -> int:
        """Number of machine steps the zone can show (rows minus one)."""
        return self.d - self.c

    @property
    def interval(self) -> range:
        lo = self.a + 3 * self.k
        return range(lo, lo + self.k)

    @property
    def border_addresses(self) -> list[tuple[int, int]]:
        n, out = self.n, set()
        for t in self.interval:
            out.update({(0, t), (n - 1, t), (t, 0), (t, n - 1)})
        return sorted(out)

    def in_zone(self, i: int, j: int) -> bool:
        return self.a <= i <= self.b and self.c <= j <= self.d

    def program_column(self, i: int) -> int | None:
        """Program bit index stored by column ``i``, if any."""
        x = i - self.a
        return x if 0 <= x < self.program_len else None

    @cached_property
    def _segments(self):
        vseg: dict[int, list] = {}
        hseg: dict[int, list] = {}
        for w in self.wires:
            for (x0, y0), (x1, y1) in zip(w.points, w.points[1:]):
                if x0 == x1:
                    vseg.setdefault(x0, []).append((min(y0, y1), max(y0, y1), w.q))
                else:
                    hseg.setdefault(y0, []).append((min(x0, x1), max(x0, x1), w.q))
        return vseg, hseg

    def wire_at(self, i: int, j: int) -> tuple[int, int] | None:
        """``(q, edge_mask)`` for the wire through cell ``(i, j)``.

        ``edge_mask`` marks the edges along which the wire continues (including
        the outer edge at the border cell and the north edge at the endpoint).
        """
        vseg, hseg = self._segments
        q = None
        mask = 0
        for lo, hi, wq in vseg.get(i, ()):
            if lo <= j <= hi:
                q = wq
                if j > lo:
                    mask |= S_BIT
                if j < hi:
                    mask |= N_BIT
        for lo, hi, wq in hseg.get(j, ()):
            if lo <= i <= hi:
                if q is not None and q != wq:
                    raise AssertionError(f"wires {q} and {wq} share cell {(i, j)}")
                q = wq
                if i > lo:
                    mask |= W_BIT
                if i < hi:
                    mask |= E_BIT
        if q is None:
            return None
        if (i, j) == self.wires[q].endpoint:
            mask |= N_BIT
        return q, mask

    def tape_word(self, east: str, north: str, west: str, south: str) -> str:
        """Input word on the zone's bottom row for the given border colors."""
        return east + north[::-1] + west[::-1] + south

    def tape_index(self, side: int, bit: int) -> int:
        k = self.k
        return (bit, k + (k - 1 - bit), 2 * k + (k - 1 - bit), 3 * k + bit)[side]


def _constraints(n: int, k: int, steps: int, tape: int, program_len: int) -> list[str]:
    a, b = zone_bounds(n)
    c, d = a, b
    bad = []
    if n < 3:
        bad.append("N < 3")
    if k and a - 3 * k < 1:
        bad.append("no room for ring columns left of the zone")
    if k and c - 3 * k < 1:
        bad.append("no room for lanes below the zone")
    if k and a + 4 * k - 1 > b:
        bad.append("border interval wider than the zone")
    if k and d + 2 * k > n - 2:
        bad.append("no room for rings above the zone")
    if k and b + k > n - 2:
        bad.append("no room for east rings right of the zone")
    if max(tape, 4 * k) > b - a + 1:
        bad.append("tape does not fit the zone width")
    if steps > d - c:
        bad.append("run does not fit the zone height")
    if program_len > b - a + 1:
        bad.append("program does not fit the zone width")
    return bad


def min_zoom(k: int, steps: int = 0, tape: int = 0, program_len: int = 0, start: int = 3,
             limit: int = 1 << 24) -> int:
    n = max(3, start)
    while n <= limit:
        if not _constraints(n, k, steps, tape, program_len):
            return n
        n += 1
    raise ZoomTooSmall(f"no feasible zoom up to {limit}")


def plan_layout(n: int, k: int, steps: int = 0, tape: int = 0, program_len: int = 0) -> MacrotileLayout:
    """Plan the macrotile for zoom ``n`` and ``k``-bit simulated colors.

    ``steps`` and ``tape`` are the worst-case time and tape cells the zone
    machine needs; ``program_len`` the number of program columns.
    """
    bad = _constraints(n, k, steps, tape, program_len)
    if bad:
        raise ZoomTooSmall(f"zoom {n} too small: {'; '.join(bad)}",
                           n_min=min_zoom(k, steps, tape, program_len))
    a, b = zone_bounds(n)
    c, d = a, b
    wires: list[Wire] = []
    for q in range(4 * k):
        if q >= 3 * k:
            u = q - 3 * k
            cx = a + q
            wires.append(Wire(q, SOUTH, u, None, ((cx, -1), (cx, c))))
            continue
        r = 3 * k - 1 - q
        x, lane, land = a - 3 * k + r, c - 3 * k + r, a + q
        tail = ((x, lane), (land, lane), (land, c))
        if r < k:
            u = r
            y0 = a + 3 * k + u
            pts = ((-1, y0), (x, y0)) + tail
            wires.append(Wire(q, WEST, u, r, pts))
            continue
        h = d + 1 + (3 * k - 1 - r)
        if r < 2 * k:
            u = r - k
            cx = a + 3 * k + u
            pts = ((cx, n), (cx, h), (x, h)) + tail
            wires.append(Wire(q, NORTH, u, r, pts))
        else:
            u = 3 * k - 1 - r
            y0 = a + 3 * k + u
            z = b + 1 + u
            pts = ((n, y0), (z, y0), (z, h), (x, h)) + tail
            wires.append(Wire(q, EAST, u, r, pts))
    return MacrotileLayout(n, k, a, b, c, d, program_len, tuple(wires))
