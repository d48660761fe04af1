"""Middle-third Cantor set seen by four dimension models.

Run with ``python gallery/01_cantor_levels.py``.
"""

# %%
# The natural structure of an IFS uses the words of length n as its level-n
# cells.  For the Cantor set there are 2^n of them, each of diameter 3^-n.
import math

from fracdim.dimensions import box_dimension, dim1, dim2, dim3
from fracdim.ifs import make_natural_ifs_structure
from fracdim.querysets import AttractorSet
from fracdim.spaces import cantor_ifs

ifs = cantor_ifs()
fs = make_natural_ifs_structure(ifs)
K = AttractorSet(ifs)

# %%
# Model I divides log N_n by n log 2 and sees only the combinatorics, model II
# divides by -log delta_n and recovers log 2 / log 3 at every single level.
e1, e2 = dim1(fs, K, 10), dim2(fs, K, 10)
print(f"{'n':>3} {'cells':>6} {'I ratio':>10} {'II ratio':>10}")
for (n, count, r1), (_, _, r2) in zip(e1.sequence, e2.sequence):
    print(f"{n:3d} {count:6d} {r1:10.6f} {r2:10.6f}")

# %%
# Model III solves for the exponent where the level sums stop diverging.
# Strict self-similarity gives a shortcut through the Moran equation, and the
# level-sum bisection lands on the same value.  Box counting on the dyadic
# mesh converges much more slowly, since the triadic gaps straddle the grid.
fast = dim3(fs, K, 10)
slow = dim3(fs, K, 10, method="numeric")
box = box_dimension(K, 12)
print(f"\nIII via Moran       {fast.value:.12f}")
print(f"III via level sums  {slow.value:.6f}  bracket [{slow.lower:.4f}, {slow.upper:.4f}]")
print(f"box counting        {box.value:.6f}")
print(f"log 2 / log 3       {math.log(2) / math.log(3):.12f}")
