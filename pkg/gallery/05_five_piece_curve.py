"""A curve whose level-n image is 5^n squares of side 2^-n.

Run with ``python gallery/05_five_piece_curve.py``.
"""

# %%
# Each parameter cell is split into five, and two of the five land in the
# same quarter of the image square.  The level sum of diam^s is then
# (sqrt 2)^s (5 / 2^s)^n, which switches from growth to decay at
# s = log 5 / log 2.
import math

from fracdim.dimensions import curve_dimension, premeasure_level_sum
from fracdim.spaces import hilbert5_curve

curve = hilbert5_curve()
fs = curve.induced_structure()
s_star = math.log(5) / math.log(2)
print(f"{'n':>3} " + " ".join(f"{'s=' + format(s, '.3g'):>12}" for s in (1, 2, s_star, 3)))
for n in range(1, 7):
    row = [premeasure_level_sum(fs, curve.image, s, n) for s in (1, 2, s_star, 3)]
    print(f"{n:3d} " + " ".join(f"{v:12.5g}" for v in row))

# %%
est = curve_dimension(curve, 8)
print(f"\nIII of the image: {est.value:.5f}   log 5 / log 2 = {s_star:.5f}")
