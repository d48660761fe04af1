"""Model II is not finitely stable: the union of two sets can exceed both.

Run with ``python gallery/02_finite_stability.py``.
"""

# %%
# One structure carries a Cantor set C1 in [0,1] and the interval C2 = [2,3].
# The cells over C1 shrink like 3^-n while those over C2 shrink like 2^-n,
# so counting the union against the largest cell mixes the two scales.
import math

from fracdim.dimensions import box_dimension, dim2
from fracdim.scenarios import get_scenario

sc = get_scenario("cantor_union")
for q in ("C1", "C2", "union"):
    F = sc.queries[q]
    print(f"{q:6s} II = {dim2(sc.structure, F, 15).value:.9f}   box = {box_dimension(F, 12).value:.4f}")

# %%
# The union value is log 4 / log 3 while the larger part is only 1.
print(f"\nlog 4 / log 3 = {math.log(4) / math.log(3):.9f}")
