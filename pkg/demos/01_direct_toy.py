"""A four-tile set simulated by macrotiles.

The target has two horizontal and two vertical stripe types. We compile it
at the smallest zoom that fits the recognizer, look at one macrotile, and
run the first three verification levels. Writes toy_macrotile.ppm.
"""

from selfsim.compiler import compile_direct, direct_min_zoom
from selfsim.render import render_patch
from selfsim.verify import substitution_windows, verify_adjacency_equivalence, verify_offset_uniqueness
from selfsim.wang import TileSet

target = TileSet.explicit(2, [(0, 0, 1, 1), (1, 1, 0, 0), (0, 1, 1, 0), (1, 0, 0, 1)])
n = direct_min_zoom(target)
compiled, alpha = compile_direct(target, n)
L = compiled.layout
print(f"zoom N = {n}, colors of {compiled.color_len} bits")
print(f"computation zone [{L.a},{L.b}] x [{L.c},{L.d}], {len(L.wires)} wires")

s = next(iter(target))
img = alpha[s]
counts = {}
for (i, j), _ in img.tiles():
    role = compiled.role(i, j)
    counts[role] = counts.get(role, 0) + 1
print(f"macrotile of {tuple(s)}: " + ", ".join(f"{v} {k}" for k, v in sorted(counts.items())))
with open("toy_macrotile.ppm", "wb") as f:
    f.write(render_patch(img, "role", compiled))

rep = verify_adjacency_equivalence(compiled, alpha, target)
for _, window in substitution_windows(alpha, target, count=5):
    rep = rep.merge(verify_offset_uniqueness(compiled, window, alpha))
print(rep.to_text())
