import math
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

# every property runs at least 100 cases; derandomized so failures reproduce
settings.register_profile(
    "fracdim",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("fracdim")

LOG2_3 = math.log(2) / math.log(3)
LOG3_2 = math.log(3) / math.log(2)
LOG5_2 = math.log(5) / math.log(2)


@pytest.fixture
def half():
    return Fraction(1, 2)
