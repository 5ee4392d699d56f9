"""Shared test configuration.

Hypothesis is tuned for a fast deterministic suite: modest example counts,
no deadline (big-int arithmetic has noisy timing), and a fixed seed
derivation per test via the default database.
"""

import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# A few fixed primes for direct tests. P64/Q64 form a safe-prime pair.
SMALL_PRIME = 23
MEDIUM_PRIME = 10_007
P64 = 9_990_341_303_051_090_783
Q64 = 4_995_170_651_525_545_391


@pytest.fixture
def rng():
    """Fresh deterministic generator per test."""
    return random.Random(0xC0FFEE)
