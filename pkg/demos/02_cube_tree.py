"""The nested cube families and their measure.

Each selected cube carries a small concentric inner cube and a ring of
selected children kept away from both the inner cube and the boundary.
The scales grow so fast that, by the third generation, centres need
hundreds of binary digits. Everything here is exact.

Run with ``python demos/02_cube_tree.py``. An SVG of the relaxed layout is
written to ``demos/out``.
"""

from pathlib import Path

from lipsharp.cli import plot_layout
from lipsharp.cubetree import (
    default_params,
    generation_measure,
    inner_set_lower_bound,
    locate,
    random_chain,
    relaxed_demo_params,
    validate_params,
)
from lipsharp.dyadic import Dyadic

p = default_params(2)
print("strict parameters")
print(f"  j = {p.j}, k = {p.k}, l = {p.l}")
print(f"  a = {[str(a) for a in p.a]}")
print(f"  children per cube: {p.counts[0]} then numbers with {p.counts[1].bit_length()} "
      f"and {p.counts[2].bit_length()} bits")
print(f"  validation ok: {validate_params(p).ok}")

print("\nmeasure of the generations (exact, then decimal)")
lb = inner_set_lower_bound(p)
for n in range(p.n_max + 1):
    m = generation_measure(n, p)
    shown = str(m) if m.denominator < 10**6 else "..."
    print(f"  n = {n}: {shown:>8} ~ {float(m):.6f}")
print(f"  floor 4 e^-2 = {lb['floor']:.6f}; the residual set keeps at least {lb['bound']:.6f}")

print("\nlocating points")
chain = random_chain(p, 3, 2024)
deep = chain.cube(p).center
for label, x in [("origin", (0, 0)), ("corner", (1, 1)), ("gap", (Dyadic(5, 6), 0)),
                 ("level-1 centre", chain.prefix(1).cube(p).center), ("level-3 centre", deep)]:
    loc = locate(x, p)
    print(f"  {label:<15} -> {loc.kind:<8} level {loc.level}")
print(f"  the level-3 centre has coordinates with {max(c.exp for c in deep)} binary digits")

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)
relaxed = relaxed_demo_params(2)
plot_layout(relaxed, 0, out / "relaxed_layout.svg")
print(f"\nrelaxed j = {relaxed.j}: {relaxed.counts[0]} children per cube; layout in {out}")
