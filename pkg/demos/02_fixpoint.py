"""The fixed point: a tile set whose program columns hold its own predicate.

Finding the smallest zoom takes a minute or so. The sample here is small.
The acceptance suite uses 10^4 tiles.
"""

from selfsim.fixpoint import build_fixpoint
from selfsim.machines import encode_tile_bits, universal_run
from selfsim.verify import quine_probe, verify_fixpoint_program

build = build_fixpoint()
c = build.compiled
print(build.report())

# Program column a+i stores bit i of p_T in every row. Probing a few
# columns shows that p_T demands exactly the bit that is stored there.
for idx, demanded, stored in quine_probe(c, [0, 1, 2, len(build.program) - 1]):
    print(f"column a+{idx}: p_T demands {demanded}, column stores {stored}")

tile = next(iter(c.tiles_at(c.layout.a + 5, 0)))
word = encode_tile_bits(tile, c.color_len)
print("a program-column tile is accepted:", universal_run(c.program, word).accepted)

print(verify_fixpoint_program(c, samples=500, seed=1, probe_columns=8).to_text())
