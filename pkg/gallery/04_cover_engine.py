"""Minimum-cost covers: a dynamic programme on the line against brute force.

Run with ``python gallery/04_cover_engine.py``.
"""

# %%
# A cover instance is a target set, a pool of candidate cells and an
# exponent s; the cost of a cover is the sum of diam^s.  Two halves of
# [0,1] cost 2^(1-s), eight dyadic pieces cost 8^(1-s), so the coarse cover
# wins below s = 1 and the fine one above it.
import random
from fractions import Fraction as Fr

from fracdim.acceptance import random_line_instance
from fracdim.covers import CoverInstance, brute_force_cover, explain_json, min_cover_1d
from fracdim.geometry import AxisBox
from fracdim.querysets import Box
from fracdim.structures import make_natural_euclidean

fs = make_natural_euclidean(1, AxisBox.of((0, 1)))
pool = tuple(fs.level(1).all_cells()) + tuple(fs.level(3).all_cells())
for s in (0.5, 1.0, 1.5):
    inst = CoverInstance(Box(AxisBox.of((0, 1))), pool, s)
    sol = min_cover_1d(inst)
    print(f"s = {s}: {len(sol.chosen)} cells, cost {sol.cost:.6f}")

# %%
# The explain dump is what ``fracdim dims --explain`` prints per level.
print(explain_json(CoverInstance(Box(AxisBox.of((Fr(1, 4), 1))), pool, 0.5),
                   min_cover_1d(CoverInstance(Box(AxisBox.of((Fr(1, 4), 1))), pool, 0.5))))

# %%
# Random instances: the DP and exhaustive enumeration pick the same cells.
rng = random.Random(1)
same = 0
for _ in range(200):
    inst = random_line_instance(rng, rng.randint(1, 16))
    same += min_cover_1d(inst).chosen == brute_force_cover(inst).chosen
print(f"\n{same} of 200 random instances agree")
