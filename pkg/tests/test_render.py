import numpy as np
import pytest

from selfsim import ca
from selfsim.render import BACKGROUND, ROLE_COLORS, ppm_bytes, render_diagram, render_patch
from selfsim.wang import Patch, SimulationMap, Tile, apply_substitution, find_valid_patch


def _parse(data: bytes):
    magic, dims, maxval, rest = data.split(b"\n", 3)
    w, h = map(int, dims.split())
    assert magic == b"P6" and maxval == b"255"
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)


def test_ppm_header():
    img = np.zeros((2, 3, 3), dtype=np.uint8)
    assert ppm_bytes(img).startswith(b"P6\n3 2\n255\n") and len(ppm_bytes(img)) == 11 + 18


def test_empty_patch_is_uniform_background():
    px = _parse(render_patch(Patch.empty(4, 3, 2)))
    assert px.shape == (3, 4, 3) and (px == BACKGROUND).all()


def test_role_palette_on_macrotile(toy_min, toy_target):
    compiled, alpha = toy_min
    s = next(iter(toy_target))
    px = _parse(render_patch(alpha[s], "role", compiled))
    n, L = compiled.n, compiled.layout
    # image row 0 is the north edge
    assert tuple(px[n - 1 - L.c, L.a]) == ROLE_COLORS["zone"]
    assert tuple(px[n - 1, 0]) == ROLE_COLORS["filler"]
    bx, by = L.border_addresses[0]
    assert tuple(px[n - 1 - by, bx]) == ROLE_COLORS["border"]


def test_alpha_squared_dimensions_and_clipping():
    # a substitution of zoom 3 on two tiles; alpha^2(s) is 9 x 9
    a, b = Tile(0, 0, 0, 0), Tile(1, 1, 1, 1)
    alpha = SimulationMap(3, {a: Patch.from_rows([[a, b, a], [b, b, b], [a, b, a]], 1),
                              b: Patch.from_rows([[b, a, b], [a, a, a], [b, a, b]], 1)})
    sq = apply_substitution(alpha, Patch.single(a, 1), times=2)
    px = _parse(render_patch(sq))
    assert px.shape[:2] == (9, 9)
    assert px.shape[0] * px.shape[1] == (3 ** 2) ** 2
    clipped = _parse(render_patch(sq, max_pixels=20))
    assert clipped.shape[:2] == (5, 4)


def test_clip_by_max_pixels(toy_min):
    compiled, alpha = toy_min
    base = find_valid_patch(compiled.target, 3, 3).patch
    big = apply_substitution(alpha, base)
    full = _parse(render_patch(big, "bit", compiled))
    assert full.shape[:2] == (3 * compiled.n, 3 * compiled.n)
    clipped = _parse(render_patch(big, "bit", compiled, max_pixels=400))
    assert clipped.shape[0] * clipped.shape[1] <= 400


def test_role_palette_needs_compiled(toy_min):
    with pytest.raises(ValueError):
        render_patch(Patch.empty(1, 1, 2), "role")
    with pytest.raises(ValueError):
        render_patch(Patch.empty(1, 1, 2), "sepia")


def test_diagram_pixels(xor_sim):
    rule, coding = xor_sim
    rows = ca.spacetime(rule, ca.encode_config(coding, [1, 0, 0]), rule.u)
    data = render_diagram(rows)
    px = _parse(data)
    assert px.shape == (rule.u + 1, 96, 3)
    assert tuple(px[0, 0]) == (0, 0, 0) and tuple(px[0, 32]) == (255, 255, 255)
    assert render_diagram(rows) == data
    agent_rows = [t for t in range(len(rows)) if rows[t].head.any()]
    assert all((px[t] == (230, 30, 30)).all(axis=1).any() for t in agent_rows)
