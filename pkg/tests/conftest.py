import os
import random

import pytest
from hypothesis import HealthCheck, settings

from versiontree import OrderedSet

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=300, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def build_set(keys, scans_between=0, seed=0):
    """An OrderedSet built by adding ``keys`` in order, opening a new phase
    after every ``scans_between`` adds when that is positive."""
    s = OrderedSet()
    rng = random.Random(seed)
    for i, k in enumerate(keys):
        if rng.random() < 0.3:
            s.remove(rng.choice(keys))
        s.add(k)
        if scans_between and (i + 1) % scans_between == 0:
            s.range(0, 0)
    return s


@pytest.fixture
def rng():
    return random.Random(1234)
