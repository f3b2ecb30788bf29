import numpy as np
import pytest

from nrrelief.conditional import (
    ConditionalQuery,
    check_query,
    conditional_importance,
    filter_by_parent,
    independent_names,
    normalize_weights,
    restrict_to_independent,
)
from nrrelief.engine import EngineParams, run_nrrelieff
from nrrelief.errors import EmptySliceError, ValidationError
from nrrelief.space import INACTIVE
from nrrelief.synthetic import generate_dataset

from conftest import CONDITIONAL_SURFACE, conditional_space


def _count(ds, name, value):
    j = ds.space.index(name)
    return sum(1 for inst, _ in ds.records if inst[j] == value)


class TestFilter:
    def test_counts_and_order(self, cond_dataset):
        for v in (1, 2, 3):
            sl = filter_by_parent(cond_dataset, {"num_layers": v})
            assert len(sl) == _count(cond_dataset, "num_layers", v)
            assert all(inst[0] == v for inst, _ in sl.records)
        sl = filter_by_parent(cond_dataset, {"num_layers": 2})
        expected = [r for r in cond_dataset.records if r[0][0] == 2]
        assert list(sl.records) == expected

    def test_categorical_count(self, cond_dataset):
        sl = filter_by_parent(cond_dataset, {"opt": "Adam"})
        assert len(sl) == _count(cond_dataset, "opt", "Adam") > 0

    def test_composition(self, cond_dataset):
        both = filter_by_parent(cond_dataset, {"num_layers": 3, "opt": "SGD"})
        chained = filter_by_parent(filter_by_parent(cond_dataset, {"num_layers": 3}), {"opt": "SGD"})
        assert list(both.records) == list(chained.records)

    def test_numeric_tolerance(self, cond_dataset):
        lr = cond_dataset.records[5][0][1]
        sl = filter_by_parent(cond_dataset, {"lr": lr + 1e-13})
        assert [inst[1] for inst, _ in sl.records] == [lr]
        with pytest.raises(EmptySliceError):
            filter_by_parent(cond_dataset, {"lr": lr + 1e-9})

    def test_slice_has_fresh_ranges(self, cond_dataset):
        sl = filter_by_parent(cond_dataset, {"num_layers": 1})
        assert sl.ranges.numeric["num_layers"] == (1.0, 1.0)
        # children of unmet parents are inactive throughout the slice
        j = sl.space.index("filters_2")
        assert all(inst[j] is INACTIVE for inst, _ in sl.records)

    def test_empty_and_unknown(self, cond_dataset):
        only_low = filter_by_parent(cond_dataset, {"num_layers": 1})
        with pytest.raises(EmptySliceError, match="no records match condition"):
            filter_by_parent(only_low, {"num_layers": 3})
        with pytest.raises(ValidationError, match="unknown hyperparameter"):
            filter_by_parent(cond_dataset, {"depth": 2})


class TestQuery:
    def test_parent_must_be_fixed(self):
        space = conditional_space()
        with pytest.raises(ValidationError, match="not fixed"):
            check_query(space, ConditionalQuery({}, ["filters_2"]))
        with pytest.raises(ValidationError, match="inactive when"):
            check_query(space, ConditionalQuery({"num_layers": 1}, ["filters_2"]))
        with pytest.raises(ValidationError, match="both fixed and a target"):
            check_query(space, ConditionalQuery({"num_layers": 2}, ["num_layers"]))
        with pytest.raises(ValidationError, match="unknown target"):
            check_query(space, ConditionalQuery({"num_layers": 2}, ["filters_9"]))
        assert check_query(space, ConditionalQuery({"num_layers": 2}, ["filters_1", "filters_2"])) == {"num_layers": 2.0}


class TestNormalize:
    def test_sum_to_one(self):
        w, note = normalize_weights([0.2, 0.6, 0.2])
        assert note is None and abs(sum(w) - 1) < 1e-12
        assert w == pytest.approx((0.2, 0.6, 0.2))

    def test_single(self):
        assert normalize_weights([0.037]) == ((1.0,), None)

    def test_negative_skips(self):
        w, note = normalize_weights([0.3, -0.1])
        assert w == (0.3, -0.1) and "skipped" in note


class TestConditionalImportance:
    def test_influential_child_first(self, cond_dataset):
        r = conditional_importance(cond_dataset, ConditionalQuery({"num_layers": 2}, ["filters_1", "filters_2"]))
        assert r.names == ("filters_1", "filters_2")
        assert r.rank_of("filters_1") == 1
        assert r.fixed == {"num_layers": 2.0}
        if all(w > 0 for w in r.raw_weights):
            assert abs(sum(r.weights) - 1) < 1e-12

    def test_matches_engine_on_projected_slice(self, cond_dataset):
        q = ConditionalQuery({"num_layers": 3}, ["filters_1", "filters_2", "filters_3"])
        params = EngineParams(neighbors=20)
        r = conditional_importance(cond_dataset, q, params)
        direct = run_nrrelieff(filter_by_parent(cond_dataset, {"num_layers": 3}).project(q.targets), params)
        np.testing.assert_array_equal(r.raw_weights, direct.weights)
        assert r.ranks == direct.ranks

    def test_independent_of_records_outside_slice(self, cond_dataset):
        q = ConditionalQuery({"num_layers": 2}, ["filters_1", "filters_2"])
        base = conditional_importance(cond_dataset, q)
        other = generate_dataset(conditional_space(), CONDITIONAL_SURFACE, 600, seed=99)
        extra = [r for r in other.records if r[0][0] != 2]
        from nrrelief.dataset import HiaDataset

        # interleave records from other slices; the slice keeps its order
        mixed = HiaDataset(cond_dataset.space, list(cond_dataset.records) + extra)
        assert conditional_importance(mixed, q).raw_weights == base.raw_weights

    def test_ranking_consistent_over_seeds(self):
        wins = 0
        for seed in range(5):
            ds = generate_dataset(conditional_space(), CONDITIONAL_SURFACE, 900, seed=seed)
            r = conditional_importance(ds, ConditionalQuery({"num_layers": 3}, ["filters_1", "filters_2", "filters_3"]))
            wins += r.rank_of("filters_1") == 1
        assert wins == 5


def test_independent_names_and_restrict(cond_dataset):
    assert independent_names(cond_dataset.space) == ["num_layers", "lr", "opt"]
    ds, dropped = restrict_to_independent(cond_dataset)
    assert ds.space.names == ("num_layers", "lr", "opt")
    assert dropped == ["filters_1", "filters_2", "filters_3"]
    same, none = restrict_to_independent(ds)
    assert same is ds and none == []
