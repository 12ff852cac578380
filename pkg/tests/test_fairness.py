"""Tests for datasets, prediction matrices and the SP/EO metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairleak import (
    Dataset,
    EmptyGroupError,
    Metric,
    PredictionMatrix,
    QueryBatch,
    equal_opportunity,
    group_sums,
    metric_batch,
    statistical_parity,
)
from oracles import sp_exact


def example_one():
    """n=10, N1=4, N0=6; individual 0 advantaged, individual 4 disadvantaged."""
    a = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
    return Dataset(y=np.ones(10, dtype=int), a=a)


def unit(n, *idx):
    row = np.zeros(n)
    row[list(idx)] = 1.0
    return row


# ── Dataset / PredictionMatrix ──


class TestDataset:
    def test_counts(self):
        ds = example_one()
        assert (ds.n, ds.n1, ds.n0) == (10, 4, 6)

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError, match="a must contain only 0/1"):
            Dataset(y=[0, 1], a=[0, 2])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="differ in length"):
            Dataset(y=[0, 1, 1], a=[0, 1])

    def test_positive_subset(self):
        ds = Dataset(y=[1, 0, 1, 1], a=[1, 1, 0, 0])
        sub = ds.positive_subset()
        assert sub.a.tolist() == [1, 0, 0]
        assert ds.positives.tolist() == [0, 2, 3]


class TestPredictionMatrix:
    def test_out_of_range_names_row(self):
        with pytest.raises(ValueError, match="row 1"):
            PredictionMatrix([[0.0, 1.0], [0.5, 1.2]])

    def test_binary_kind_rejects_fractions(self):
        with pytest.raises(ValueError, match="row 0: binary"):
            PredictionMatrix([[0.5, 1.0]], kind="binary")

    def test_is_read_only(self):
        pm = PredictionMatrix([[0.0, 1.0]])
        with pytest.raises(ValueError):
            pm.h[0, 0] = 1.0

    def test_shape(self):
        pm = PredictionMatrix(np.zeros((3, 5)))
        assert (pm.m, pm.n) == (3, 5)


# ── statistical parity ──


class TestStatisticalParity:
    def test_accept_all_is_zero(self):
        """Identical group means give 0."""
        assert statistical_parity(example_one(), np.ones(10)) == 0.0

    def test_single_advantaged_acceptor(self):
        assert statistical_parity(example_one(), unit(10, 0)) == pytest.approx(0.25)

    def test_single_disadvantaged_acceptor(self):
        assert statistical_parity(example_one(), unit(10, 4)) == pytest.approx(-1 / 6)

    def test_empty_group(self):
        ds = Dataset(y=[1, 1], a=[1, 1])
        with pytest.raises(EmptyGroupError):
            statistical_parity(ds, [1.0, 0.0])

    def test_row_length_checked(self):
        with pytest.raises(ValueError, match="length 3, expected 10"):
            statistical_parity(example_one(), [1.0, 0.0, 1.0])

    def test_matches_group_sums(self):
        ds = example_one()
        row = np.array([1, 0, 1, 1, 0, 1, 0, 0, 1, 1], dtype=float)
        gs = group_sums(ds, row)
        assert (gs.lam, gs.mu) == (3.0, 3.0)
        assert statistical_parity(ds, row) == pytest.approx(gs.lam / 4 - gs.mu / 6, abs=1e-12)


class TestEqualOpportunity:
    def test_all_positive_equals_sp(self):
        ds = example_one()
        row = np.linspace(0, 1, 10)
        assert equal_opportunity(ds, row) == statistical_parity(ds, row)

    def test_only_negatives_accepted(self):
        ds = Dataset(y=[0, 0, 1, 1], a=[1, 0, 1, 0])
        assert equal_opportunity(ds, [1.0, 1.0, 0.0, 0.0]) == 0.0

    def test_positive_subset_value(self):
        """Positives: two advantaged, two disadvantaged; accept one advantaged positive."""
        ds = Dataset(y=[1, 1, 1, 1, 0, 0], a=[1, 1, 0, 0, 1, 0])
        assert equal_opportunity(ds, unit(6, 0)) == pytest.approx(0.5)

    def test_empty_positive_group(self):
        ds = Dataset(y=[1, 1, 0, 0], a=[1, 1, 0, 0])
        with pytest.raises(EmptyGroupError, match="equal opportunity"):
            equal_opportunity(ds, [1.0, 0.0, 0.0, 0.0])


# ── metric_batch ──


class TestMetricBatch:
    def test_singleton_matches_scalar(self):
        ds = example_one()
        row = np.linspace(0, 1, 10)
        batch = metric_batch(ds, PredictionMatrix(row), Metric.SP)
        assert batch.values[0] == statistical_parity(ds, row)

    def test_absolute_drops_sign(self):
        ds = example_one()
        batch = metric_batch(ds, np.vstack([unit(10, 0), unit(10, 4)]), "ABS_SP")
        assert batch.values == pytest.approx([0.25, 1 / 6])
        assert not batch.privatized

    def test_empty_batch(self):
        batch = metric_batch(example_one(), np.zeros((0, 10)), Metric.SP)
        assert batch.m == 0

    def test_non_finite_row_reported(self):
        h = np.zeros((3, 10))
        h[2, 1] = np.nan
        with pytest.raises(ValueError, match="row 2"):
            metric_batch(example_one(), h, "SP")

    def test_eo_batch(self):
        ds = Dataset(y=[1, 1, 1, 1, 0, 0], a=[1, 1, 0, 0, 1, 0])
        batch = metric_batch(ds, np.vstack([unit(6, 0), unit(6, 4)]), Metric.EO)
        assert batch.values == pytest.approx([0.5, 0.0])


class TestQueryBatch:
    def test_clean_range_enforced(self):
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            QueryBatch(values=[1.5], metric="SP")

    def test_clean_absolute_range(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            QueryBatch(values=[-0.1], metric="ABS_SP")

    def test_privatized_unbounded(self):
        qb = QueryBatch(values=[7.0, -3.0], metric="ABS_SP", privatized=True,
                        mechanism="cauchy_smooth")
        assert qb.m == 2


# ── properties ──


@st.composite
def dataset_and_row(draw, binary=False):
    n = draw(st.integers(2, 14))
    a = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n).filter(lambda v: 0 < sum(v) < n))
    if binary:
        row = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    else:
        row = draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    return Dataset(y=np.ones(n, dtype=int), a=a), np.array(row, dtype=float)


@settings(max_examples=200, deadline=None)
@given(dataset_and_row(), st.randoms(use_true_random=False))
def test_permutation_invariance(case, rnd):
    ds, row = case
    perm = list(range(ds.n))
    rnd.shuffle(perm)
    shuffled = Dataset(y=ds.y[perm], a=ds.a[perm])
    assert statistical_parity(shuffled, row[perm]) == pytest.approx(
        statistical_parity(ds, row), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(dataset_and_row(), st.data())
def test_single_flip_additivity(case, data):
    """Changing one prediction by d moves SP by d/N1 or -d/N0."""
    ds, row = case
    j = data.draw(st.integers(0, ds.n - 1))
    new = data.draw(st.floats(0, 1))
    moved = row.copy()
    moved[j] = new
    d = new - row[j]
    expect = d / ds.n1 if ds.a[j] == 1 else -d / ds.n0
    delta = statistical_parity(ds, moved) - statistical_parity(ds, row)
    assert delta == pytest.approx(expect, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(dataset_and_row())
def test_bounded(case):
    ds, row = case
    assert -1.0 <= statistical_parity(ds, row) <= 1.0
    assert -1.0 <= equal_opportunity(ds, row) <= 1.0


@settings(max_examples=200, deadline=None)
@given(dataset_and_row(binary=True))
def test_binary_rows_match_exact_means(case):
    ds, row = case
    assert statistical_parity(ds, row) == pytest.approx(float(sp_exact(ds.a, row)), abs=1e-12)
