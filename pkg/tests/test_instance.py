import pytest
from fractions import Fraction
from hypothesis import given, settings
from hypothesis import strategies as st

from tspba import oracle
from tspba.errors import (
    DuplicateEdge,
    MissingEdge,
    NotHamiltonian,
    SelfLoop,
    TooSmall,
    UnknownEdge,
)
from tspba.instance import (
    DensityRatio,
    TransformLedger,
    Weighting,
    abs_weight,
    apply_transform,
    beats_average,
    certificate_failure,
    cycle_weight,
    density,
    subgraph_weight,
    support_split,
    validate,
    verify_certificate,
)

from conftest import random_ledger, random_weighting


def test_validate_zero_weighting():
    W = validate(3, [((1, 2), 0), ((1, 3), 0), ((2, 3), 0)])
    assert W.n == 3 and W.weight(1, 2) == 0


def test_validate_missing_edge():
    with pytest.raises(MissingEdge):
        validate(3, [((1, 2), 0), ((1, 3), 0)])


def test_validate_too_small():
    with pytest.raises(TooSmall):
        validate(2, [((1, 2), 1)])


def test_validate_duplicate_and_selfloop():
    with pytest.raises(DuplicateEdge):
        validate(3, [((1, 2), 0), ((2, 1), 0), ((1, 3), 0), ((2, 3), 0)])
    with pytest.raises(SelfLoop):
        validate(3, [((1, 1), 0)])
    with pytest.raises(UnknownEdge):
        validate(3, [((1, 4), 0)])


def test_subgraph_and_abs_weight():
    W = Weighting.zero(4).replace({(1, 2): 5, (1, 3): -2})
    assert subgraph_weight(W, [(1, 2)]) == 5
    assert subgraph_weight(W, [(1, 2), (1, 3)]) == 3
    assert abs_weight(W, [(1, 2), (1, 3)]) == 7
    assert abs_weight(W, []) == 0
    with pytest.raises(UnknownEdge):
        subgraph_weight(W, [(1, 5)])


def test_density_examples():
    assert density(Weighting.from_function(4, lambda u, v: 1)) == DensityRatio(6, 6)
    assert density(Weighting.zero(4)) == DensityRatio(0, 6)
    assert density(Weighting.zero(4).replace({(1, 2): 6})) == DensityRatio(6, 6)


def test_beats_average_examples():
    W = Weighting.from_function(4, lambda u, v: 1)
    cyc = [1, 2, 3, 4]
    assert beats_average(W, cyc, 0)
    assert not beats_average(W, cyc, 1)
    W = Weighting.zero(4).replace({(1, 2): 10})
    assert beats_average(W, [1, 3, 2, 4], 6)  # 0 <= 20/3 - 6
    assert not beats_average(W, [1, 3, 2, 4], 7)
    with pytest.raises(NotHamiltonian):
        beats_average(W, [1, 2, 3], 0)


def test_apply_transform_examples(rng):
    n = 4
    W = random_weighting(rng, n)
    L = TransformLedger.shift(n, {1: 3})
    W2 = apply_transform(W, L)
    for order in ([1, 2, 3, 4], [1, 3, 2, 4], [1, 2, 4, 3]):
        assert cycle_weight(W2, order) == cycle_weight(W, order) + 6
    L = TransformLedger.shift(5, {}, constant=1)
    W = Weighting.zero(5)
    W2 = apply_transform(W, L)
    assert cycle_weight(W2, [1, 2, 3, 4, 5]) == 5
    assert apply_transform(W, TransformLedger.identity(5)) == W


def test_transform_offset_by_enumeration(rng):
    for n in (5, 6, 8):
        W = random_weighting(rng, n)
        L = random_ledger(rng, n)
        W2 = apply_transform(W, L)
        for H in oracle.enumerate_hamiltons(n):
            assert H.weight(W2) - H.weight(W) == L.alpha


@settings(max_examples=50, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50),
       st.integers(-50, 50), st.integers(4, 7), st.data())
def test_transform_monoid_action(l1, l2, c1, c2, n, data):
    v1 = data.draw(st.integers(1, n))
    v2 = data.draw(st.integers(1, n))
    W = Weighting.zero(n)
    La = TransformLedger.shift(n, {v1: l1}, constant=c1)
    Lb = TransformLedger.shift(n, {v2: l2}, constant=c2)
    one_then_other = apply_transform(apply_transform(W, La), Lb)
    composed = apply_transform(W, La.compose(Lb))
    assert one_then_other == composed
    assert La.compose(Lb).alpha == La.alpha + Lb.alpha


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 7), st.integers(0, 5), st.data())
def test_beats_average_monotone_in_k(n, k, data):
    seed = data.draw(st.integers(0, 10 ** 6))
    import random as _r

    r = _r.Random(seed)
    W = random_weighting(r, n, -20, 20)
    order = [1] + r.sample(range(2, n + 1), n - 1)
    if beats_average(W, order, k + 1):
        assert beats_average(W, order, k)


def test_support_split():
    W = Weighting.zero(4)
    pos, neg, zero = support_split(W)
    assert pos == set() and neg == set() and len(zero) == 6
    W = Weighting.zero(4).replace({(1, 2): -1})
    pos, neg, zero = support_split(W)
    assert neg == {(1, 2)} and len(zero) == 5
    W = apply_transform(Weighting.zero(4), TransformLedger.shift(4, {1: 1}))
    pos, _, _ = support_split(W)
    assert pos == {(1, 2), (1, 3), (1, 4)}


def test_verify_certificate():
    W = Weighting.from_function(4, lambda u, v: 1)
    assert verify_certificate(W, 0, [1, 2, 3, 4])
    assert not verify_certificate(W, 0, [1, 2, 2, 4])
    assert "NotHamiltonian" in certificate_failure(W, 0, [1, 2, 2, 4])
    W = Weighting.zero(4).replace({(1, 2): 10})
    assert not verify_certificate(W, 7, [1, 3, 2, 4])
    assert "ThresholdMissed" in certificate_failure(W, 7, [1, 3, 2, 4])


def test_abs_weight_dominates_subgraph_weight(rng):
    for _ in range(30):
        n = rng.randint(4, 8)
        W = random_weighting(rng, n, -30, 30)
        edges = [e for e in W.edges() if rng.random() < 0.5]
        assert abs_weight(W, edges) >= abs(subgraph_weight(W, edges))


def test_density_never_a_float():
    d = density(Weighting.zero(5).replace({(1, 2): 7}))
    assert isinstance(d.numerator, int) and isinstance(d.denominator, int)
    assert d.as_fraction() == Fraction(7, 10)
