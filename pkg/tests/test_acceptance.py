"""The twelve acceptance criteria at their stated tolerances.

Each test prints one ``[PASS]``/``[FAIL]`` line.  Criterion 12 runs here on
a seeded generator; ``test_properties.py`` runs the same properties under
Hypothesis.
"""

import pytest

from fracdim import acceptance as acc
from fracdim.scenarios import RunConfig

CONFIG = RunConfig()

CHECKS = {
    1: acc.check_moran,
    2: acc.check_cantor_levels,
    3: lambda: acc.check_cantor_union(CONFIG),
    4: acc.check_affine,
    5: lambda: acc.check_rotated_overlap(CONFIG),
    6: lambda: acc.check_hilbert(CONFIG),
    7: lambda: acc.check_stuck_half(CONFIG),
    8: acc.check_cover_engine,
    9: lambda: acc.check_harmonic(CONFIG),
    10: lambda: acc.check_table1(CONFIG),
    11: acc.check_cantor_family,
    12: lambda: acc.check_properties(CONFIG),
}


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_acceptance_criterion(number, capsys):
    result = CHECKS[number]()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.number == number
    assert result.passed, result.line()


def test_cover_engine_instances_are_bounded():
    import random

    rng = random.Random(0)
    for _ in range(50):
        inst = acc.random_line_instance(rng, rng.randint(1, 20))
        assert 1 <= len(inst.candidates) <= 20
