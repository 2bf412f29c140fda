"""Six deliberate construction bugs and the verification level that catches each."""

from selfsim.compiler import compile_direct, direct_min_zoom
from selfsim.fixpoint import build_fixpoint
from selfsim.verify import fault_suite
from selfsim.wang import TileSet

target = TileSet.explicit(2, [(0, 0, 1, 1), (1, 1, 0, 0), (0, 1, 1, 0), (1, 0, 0, 1)])
compiled, _ = compile_direct(target, direct_min_zoom(target))
fixpoint = build_fixpoint().compiled
for fault, levels in fault_suite(compiled, target, fixpoint=fixpoint, windows=2, samples=500).items():
    print(f"{fault:16s} caught by {', '.join(levels) or 'nothing'}")
