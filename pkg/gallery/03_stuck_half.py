"""A structure whose cells over [0, 1/2] never shrink.

Run with ``python gallery/03_stuck_half.py``.
"""

# %%
# Level n keeps [0, 1/2] as a single cell and splits [1/2, 1] dyadically.
# The largest cell therefore stays at 1/2, and the models that need
# vanishing diameters refuse to answer.
from fracdim.dimensions import dim3, dim4, dim5, dim6, premeasure_inf
from fracdim.querysets import Box
from fracdim.scenarios import STUCK_GRID, get_scenario

sc = get_scenario("stuck_half")
fs, X = sc.structure, sc.queries["X"]
for est in (dim3(fs, X, 8), dim4(fs, X, 5, 2), dim5(fs, X, 5, 2), dim6(fs, X, 5, 2)):
    print(f"{est.model}: {est.status:24s} {est.notes[0] if est.notes else ''}")

# %%
# The level pre-measure still exists, and it has a closed form: for s <= 1
# the infimum sits at the current level, for s > 1 it is approached as the
# right half is refined forever.
def closed(s, n):
    return 2 * 2.0**-s + (2**n - 1) * 2.0 ** (-n * s) if s <= 1 else 2.0 ** (1 - s)


print(f"\n{'s':>5} {'n':>3} {'computed':>12} {'closed form':>12}")
for s in STUCK_GRID:
    for n in (1, 3):
        print(f"{s:5.2f} {n:3d} {premeasure_inf(fs, Box(X.box), s, n):12.8f} {closed(s, n):12.8f}")
