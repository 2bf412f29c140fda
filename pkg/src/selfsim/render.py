"""Portable pixmap (binary PPM, P6) rendering of patches and CA diagrams.

One pixel per cell (patch) or per cell-time (diagram).  Image row 0 is the
patch's northmost row and the diagram's time 0.  Palettes are listed in
docs/render.md.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .ca import CAConfiguration
from .compiler import CompiledTileSet
from .wang import NORTH, WEST, Patch

BACKGROUND = (32, 32, 32)
ROLE_COLORS = {
    "filler": (230, 230, 230),
    "wire": (40, 110, 220),
    "border": (220, 60, 40),
    "zone": (250, 200, 60),
    "program": (60, 170, 90),
}
BIT_COLORS = ((255, 255, 255), (0, 0, 0))
DEFAULT_MAX_PIXELS = 1 << 24


def ppm_bytes(rgb: np.ndarray) -> bytes:
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode() + rgb.astype(np.uint8).tobytes()


def _clip(width: int, height: int, max_pixels: int) -> tuple[int, int]:
    if width * height <= max_pixels:
        return width, height
    side = max(1, math.isqrt(max_pixels))
    w = min(width, side)
    return w, min(height, max(1, max_pixels // w))


def render_patch(patch: Patch, palette: str = "bit", compiled: CompiledTileSet | None = None,
                 max_pixels: int = DEFAULT_MAX_PIXELS) -> bytes:
    """``bit``: black where the north edge carries a nonzero payload;
    ``address``: red = column address, green = row address (needs
    ``compiled``; otherwise the raw west color); ``role``: role colors by
    address (needs ``compiled``).  Unfilled cells use the background."""
    if palette not in ("bit", "address", "role"):
        raise ValueError(f"unknown palette {palette}")
    if palette == "role" and compiled is None:
        raise ValueError("the role palette needs the compiled tile set")
    w, h = _clip(patch.width, patch.height, max_pixels)
    rgb = np.empty((h, w, 3), dtype=np.uint8)
    rgb[:] = BACKGROUND
    if w == 0 or h == 0:
        return ppm_bytes(rgb)
    colors = patch.colors[:h, :w]
    filled = patch.filled[:h, :w]
    out = np.zeros((h, w, 3), dtype=np.int64)
    if palette == "bit":
        if compiled is not None:
            pay = colors[:, :, NORTH] >> (2 * compiled.codec.nb + 1)
        else:
            pay = colors[:, :, NORTH]
        out[:] = np.where((pay != 0)[..., None], BIT_COLORS[1], BIT_COLORS[0])
    elif palette == "address":
        west = colors[:, :, WEST]
        if compiled is not None:
            nb, n = compiled.codec.nb, compiled.n
            x = west & ((1 << nb) - 1)
            y = (west >> nb) & ((1 << nb) - 1)
            out[..., 0] = x * 255 // max(1, n - 1)
            out[..., 1] = y * 255 // max(1, n - 1)
            out[..., 2] = 128
        else:
            out[..., 0] = (west * 97) % 256
            out[..., 1] = (west * 57) % 256
            out[..., 2] = (west * 31) % 256
    else:
        nb = compiled.codec.nb
        west = colors[:, :, WEST]
        xs = west & ((1 << nb) - 1)
        ys = (west >> nb) & ((1 << nb) - 1)
        cache: dict[tuple[int, int], tuple[int, int, int]] = {}
        for r in range(h):
            for c in range(w):
                key = (int(xs[r, c]), int(ys[r, c]))
                if key not in cache:
                    cache[key] = ROLE_COLORS[compiled.role(*key)]
                out[r, c] = cache[key]
    out[~filled] = BACKGROUND
    rgb = out[::-1].astype(np.uint8)  # north up
    return ppm_bytes(rgb)


def render_diagram(rows: Sequence[CAConfiguration], max_pixels: int = DEFAULT_MAX_PIXELS) -> bytes:
    """White/black = simulation bit 0/1; red = agent; blue tint where a
    mailbox holds a 1.  Time runs downward."""
    if not rows:
        return ppm_bytes(np.empty((0, 0, 3), dtype=np.uint8))
    w, h = _clip(rows[0].width, len(rows), max_pixels)
    rgb = np.empty((h, w, 3), dtype=np.int64)
    for t in range(h):
        c = rows[t]
        sim = c.sim[:w]
        mail = (c.mail_left[:w] | c.mail_right[:w]) != 0
        px = np.where(sim[:, None] != 0, BIT_COLORS[1], BIT_COLORS[0])
        px = np.where(mail[:, None] & (sim[:, None] == 0), (170, 190, 255), px)
        px = np.where(mail[:, None] & (sim[:, None] != 0), (20, 30, 110), px)
        px = np.where(c.head[:w, None] != 0, (230, 30, 30), px)
        rgb[t] = px
    return ppm_bytes(rgb.astype(np.uint8))
