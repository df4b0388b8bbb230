import random

import pytest

from tspba.instance import TransformLedger, Weighting, apply_transform


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


def random_weighting(rng, n, lo=-10, hi=10):
    return Weighting.from_function(n, lambda u, v: rng.randint(lo, hi))


def random_ledger(rng, n, lo=-5, hi=5):
    lam = {v: rng.randint(lo, hi) for v in rng.sample(range(1, n + 1), rng.randint(0, n))}
    return TransformLedger.shift(n, lam, constant=rng.randint(lo, hi))


def zero_class(rng, n, lo=-10, hi=10):
    """A weighting on which every Hamilton cycle has the same weight."""
    return apply_transform(Weighting.zero(n), random_ledger(rng, n, lo, hi))


def random_cycle_order(rng, n):
    rest = list(range(2, n + 1))
    rng.shuffle(rest)
    return [1] + rest
