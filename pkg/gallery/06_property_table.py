"""Which dimension models are monotone, stable, or blind to countable sets.

Run with ``python gallery/06_property_table.py`` (about ten seconds).
"""

# %%
# Every cell of the table is tested on a witness scenario: a mark must hold
# there ("confirmed"), a blank must fail there ("reproduced").
from fracdim.scenarios import PROPERTIES, table1_audit

rep = table1_audit()
grid = rep.grid()
short = {"monotonicity": "mono", "finite-stability": "fin", "countable-stability": "count",
         "zero-on-countable": "zero", "closure-invariance": "closure"}
print("model " + "".join(f"{short[p]:>9}" for p in PROPERTIES))
for model in dict.fromkeys(c.model for c in rep.cells):
    marks = "".join(f"{('yes' if grid[(model, p)].holds_expected else '-'):>9}" for p in PROPERTIES)
    print(f"{model:5s} {marks}")

# %%
# The blanks and where they come from.
for c in rep.cells:
    if not c.holds_expected:
        vals = ", ".join(f"{k}={v:.4g}" for k, v in c.values.items())
        print(f"{c.model:4s} {c.prop:20s} {c.witness.scenario:20s} {vals}")
print(f"\nall cells consistent: {rep.passed}")
