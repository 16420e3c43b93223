"""Small-scale behaviour of the assembled function along residual chains.

Along a chain the small-ball bound 2^(l_n - k_{n+1}) collapses to 0, so the
lower Lipschitz constant vanishes. At the same points, difference quotients
against cube centres and cube boundaries blow up, so the upper constant is
infinite. Both are exact statements about dyadic points.

Run with ``python demos/03_sharp_function.py``.
"""

import random

from lipsharp.cubetree import default_params, random_chain
from lipsharp.sharpfn import (
    SharpExample,
    eval_f,
    lip_field_norm_budget,
    lip_probe,
    nondiff_witness,
    sup_on_ball,
)

p = default_params(2)
ex = SharpExample(p)
rng = random.Random(3)

print(f"gradient budget sum_n card(Q_n) eps_n = {lip_field_norm_budget(ex)}")

for trial in range(3):
    chain = random_chain(p, 3, rng)
    x = chain.cube(p).center
    fx = eval_f(ex, x)
    print(f"\nchain {chain.key()[:40]}...")
    print(f"  f(x) in [{fx.value}, {fx.value} + {fx.uncertainty}]")
    for row in lip_probe(ex, chain, 2):
        print(f"  level {row.level}: radius 2^{row.radius_exp:<5} ratio <= 2^{row.bound_exp}")
    for n in (1, 2):
        w = nondiff_witness(ex, chain, n)
        print(f"  level {n}: witness at the {w.kind:<8} ratio >= {w.ratio_lower} "
              f"(target {w.target}, certified {w.certified})")

print("\nsup |f(y) - f(x)| over balls around a level-1 centre")
c1 = random_chain(p, 1, 1).cube(p).center
for e in (3, 8, 20, 40):
    lo, hi = sup_on_ball(ex, c1, 2.0 ** -e)
    print(f"  r = 2^-{e:<3} [{lo:.3e}, {hi:.3e}]")
