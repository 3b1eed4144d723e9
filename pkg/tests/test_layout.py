import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from midas_svar.errors import SchemeMismatch, UnsupportedScheme
from midas_svar.layout import (
    AggregationScheme,
    CoefLayout,
    ExogBlock,
    FrequencyLayout,
    discarded_directions,
    reduced_equivalence_restrictions,
    selection_matrix,
    stacked_dim,
    structural_equivalence_restrictions,
)
from midas_svar.numerics import numerical_rank

layouts = st.builds(
    FrequencyLayout,
    n_low=st.integers(0, 2),
    n_high=st.integers(1, 3),
    m=st.integers(2, 4),
    p=st.integers(1, 2),
)
schemes = st.sampled_from(["first", "last", "sum", "average"])


@pytest.mark.parametrize("nl,nh,m,expected", [(1, 1, 3, 4), (1, 3, 3, 10), (2, 0, 3, 2), (1, 2, 3, 7)])
def test_stacked_dim(nl, nh, m, expected):
    assert stacked_dim(FrequencyLayout(nl, nh, m)) == expected


def test_index_map_is_slot_major(empirical_layout):
    L = empirical_layout
    assert L.labels() == ["i@1", "vix@1", "i@2", "vix@2", "i@3", "vix@3", "k"]
    assert L.high_index(1, 2) == 3
    assert L.low_index(0) == 6
    for i in range(L.n_stacked):
        kind, var, slot = L.decode(i)
        assert (L.high_index(var, slot) if kind == "high" else L.low_index(var)) == i


def test_invalid_layouts():
    with pytest.raises(ValueError):
        FrequencyLayout(0, 0, 3)
    with pytest.raises(ValueError):
        FrequencyLayout(1, 1, 1)


def test_selection_first(small_layout):
    G = selection_matrix(small_layout, AggregationScheme("first"))
    np.testing.assert_array_equal(G, [[1, 0, 0, 0], [0, 0, 0, 1]])


def test_selection_sum_average_last(small_layout):
    np.testing.assert_array_equal(selection_matrix(small_layout, AggregationScheme("sum")), [[1, 1, 1, 0], [0, 0, 0, 1]])
    np.testing.assert_allclose(selection_matrix(small_layout, AggregationScheme("average")),
                               [[1 / 3, 1 / 3, 1 / 3, 0], [0, 0, 0, 1]])
    np.testing.assert_array_equal(selection_matrix(small_layout, AggregationScheme("last")), [[0, 0, 1, 0], [0, 0, 0, 1]])


def test_mixed_scheme(empirical_layout):
    s = AggregationScheme.parse("mixed:first,sum")
    G = selection_matrix(empirical_layout, s)
    np.testing.assert_array_equal(G[0], [1, 0, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(G[1], [0, 1, 0, 1, 0, 1, 0])
    with pytest.raises(SchemeMismatch):
        selection_matrix(empirical_layout, AggregationScheme.parse("mixed:first"))
    assert str(s) == "mixed:first,sum"


def test_unknown_scheme():
    with pytest.raises(UnsupportedScheme):
        AggregationScheme("median")


@given(layouts, schemes)
def test_selection_full_row_rank_and_null_directions(layout, kind):
    G = selection_matrix(layout, AggregationScheme(kind))
    N = discarded_directions(layout, AggregationScheme(kind))
    assert numerical_rank(G) == layout.n_aggregated
    assert N.shape[1] == layout.n_stacked - layout.n_aggregated
    np.testing.assert_allclose(G @ N, 0, atol=1e-14)
    assert numerical_rank(np.vstack([G, N.T])) == layout.n_stacked


@given(layouts, st.integers(0, 2**32 - 1))
def test_first_observation_picks_slot_one(layout, seed):
    x = np.random.default_rng(seed).standard_normal(layout.n_stacked)
    G = selection_matrix(layout, AggregationScheme("first"))
    expect = [x[layout.high_index(v, 1)] for v in range(layout.n_high)] + [
        x[layout.low_index(v)] for v in range(layout.n_low)
    ]
    np.testing.assert_array_equal(G @ x, expect)


def test_small_first_restrictions_are_slot_zeros(small_layout):
    coef = CoefLayout(4, 1, intercept=False)
    R = reduced_equivalence_restrictions(small_layout, AggregationScheme("first"), coef)
    assert R.rank == 4
    hit = sorted(divmod(int(np.argmax(row != 0)), 4)[::-1] for row in R.S)
    # (row, col) of A_1: rows {h@1, k}, columns {h@2, h@3}
    assert hit == [(0, 1), (0, 2), (3, 1), (3, 2)]
    assert R.labels[0] == "A1[h0@1,h0@2]=0"


def test_medium_first_restrictions_count():
    L = FrequencyLayout(1, 3, 3)
    assert reduced_equivalence_restrictions(L, AggregationScheme("first")).rank == 24


def test_sum_restrictions_small(small_layout):
    R = reduced_equivalence_restrictions(small_layout, AggregationScheme("sum"), CoefLayout(4, 1, False))
    # column-sum equalities for the aggregated row and A_L1 = A_L2 = A_L3
    assert R.rank == 4
    A = np.array([[0.1, 0.3, 0.2, 0.5], [0.2, 0.0, 0.1, 0.0], [0.1, 0.1, 0.1, 0.0], [0.4, 0.4, 0.4, 0.9]])
    # column sums of rows 0..2 over cols 0..2: 0.4, 0.4, 0.4
    assert R.satisfied_by(A.ravel(order="F"))
    A[3, 2] = 0.3
    assert not R.satisfied_by(A.ravel(order="F"))


@given(layouts, st.sampled_from(["first", "last"]))
def test_first_last_count_formula(layout, kind):
    R = reduced_equivalence_restrictions(layout, AggregationScheme(kind))
    nh, nl, m, p = layout.n_high, layout.n_low, layout.m, layout.p
    assert R.rank == p * (nh * (m - 1) * nh + nl * (m - 1) * nh)


def test_empirical_layout_with_exogenous_gives_36(empirical_layout):
    # two lags plus one restricted block of two contemporaneous monthly series
    coef = CoefLayout(7, 2, True, 6, (ExogBlock(0, 2, 0, True, "z"),))
    for kind in ("first", "sum"):
        R = reduced_equivalence_restrictions(empirical_layout, AggregationScheme(kind), coef)
        assert R.rank == 36


def test_unrestricted_exog_block_adds_nothing(empirical_layout):
    coef = CoefLayout(7, 2, True, 7, (ExogBlock(0, 2, 0, True, "z"), ExogBlock(6, 0, 1, False, "w")))
    assert reduced_equivalence_restrictions(empirical_layout, AggregationScheme("first"), coef).rank == 36


def test_structural_first_small_zero_set(small_layout):
    RA, RB = structural_equivalence_restrictions(small_layout, AggregationScheme("first"))
    assert RA.rank == 4 and RB.rank == 4
    assert RA.labels == ["A[h0@1,h0@2]=0", "A[h0@1,h0@3]=0", "A[l0,h0@2]=0", "A[l0,h0@3]=0"]


def test_structural_sum_equalities(small_layout):
    RA, RB = structural_equivalence_restrictions(small_layout, AggregationScheme("sum"))
    B = np.zeros((4, 4))
    B[3, :3] = 2.0
    B[:3, :3] = [[1, 0, 0], [0.5, 1.5, 0], [0, 0, 1.5]]
    assert RB.satisfied_by(B.ravel(order="F"))
    B[3, 0] = 1.0
    assert not RB.satisfied_by(B.ravel(order="F"))


def test_structural_no_high_frequency_block_is_empty():
    RA, RB = structural_equivalence_restrictions(FrequencyLayout(1, 0, 3), AggregationScheme("sum"))
    assert RA.n_rows == 0 and RB.n_rows == 0


def test_relabeling_within_kind_permutes_constraints(empirical_layout):
    # swapping the two monthly variables permutes the constraint set
    L = empirical_layout
    perm = [1, 0, 3, 2, 5, 4, 6]
    P = np.eye(7)[perm]
    R = reduced_equivalence_restrictions(L, AggregationScheme("first"), CoefLayout(7, 1, False))
    Kp = np.kron(P, P)  # vec(P A P') = (P kron P) vec(A)
    S_perm = R.S @ Kp.T
    stacked = np.vstack([R.S, S_perm])
    assert numerical_rank(stacked) == R.rank


def test_mixed_block_counts(empirical_layout):
    for combo in itertools.product(["first", "sum", "last", "average"], repeat=2):
        s = AggregationScheme("mixed", combo)
        assert reduced_equivalence_restrictions(empirical_layout, s, CoefLayout(7, 1, False)).rank == 12
