import numpy as np
import pytest

from nrrelief.engine import EngineParams, run_nrrelieff
from nrrelief.errors import ValidationError
from nrrelief.space import INACTIVE, NUMERIC_CONTINUOUS, ConfigSpace, HyperparameterDef, validate_instance
from nrrelief.synthetic import SurfaceSpec, generate_dataset

from conftest import CONDITIONAL_SURFACE, conditional_space, mixed_space, numeric_space


def test_reproducible():
    spec = SurfaceSpec({"x1": 1.0}, noise_std=0.1)
    a = generate_dataset(numeric_space(3), spec, 50, seed=4)
    b = generate_dataset(numeric_space(3), spec, 50, seed=4)
    c = generate_dataset(numeric_space(3), spec, 50, seed=5)
    assert a.records == b.records
    assert a.records != c.records


def test_performance_in_unit_interval():
    ds = generate_dataset(mixed_space(), SurfaceSpec({"lr": 2.0, "drop": -1.0}, noise_std=0.3), 200, seed=1)
    assert ds.performance.min() == 0.0 and ds.performance.max() == 1.0


def test_noise_free_single_coefficient_is_monotone():
    ds = generate_dataset(numeric_space(2), SurfaceSpec({"x1": 1.0}), 100, seed=2)
    order = np.argsort(ds.values[:, 0])
    assert np.all(np.diff(ds.performance[order]) >= 0)


def test_zero_surface_gives_zero_weights():
    ds = generate_dataset(numeric_space(3), SurfaceSpec(), 40, seed=0)
    assert np.all(ds.performance == 0)
    r = run_nrrelieff(ds, EngineParams(neighbors=5))
    assert r.weights == (0.0, 0.0, 0.0)
    assert any("no performance variation" in w for w in r.warnings)


def test_degenerate_space():
    space = ConfigSpace((HyperparameterDef("c", NUMERIC_CONTINUOUS, 0.5, 0.5),))
    with pytest.raises(ValidationError, match="degenerate space"):
        generate_dataset(space, SurfaceSpec(), 10)


def test_unknown_name_and_category():
    with pytest.raises(ValidationError, match="unknown hyperparameter"):
        generate_dataset(numeric_space(2), SurfaceSpec({"x9": 1.0}), 10)
    with pytest.raises(ValidationError, match="not a category"):
        generate_dataset(mixed_space(), SurfaceSpec(categorical_effects={("opt", "Nadam"): 1.0}), 10)


def test_conditional_records_valid():
    ds = generate_dataset(conditional_space(), CONDITIONAL_SURFACE, 300, seed=6)
    space = ds.space
    for inst, _ in ds.records:
        assert validate_instance(space, inst) == []
    j2 = space.index("filters_2")
    assert any(inst[j2] is INACTIVE for inst, _ in ds.records)
    assert any(inst[j2] is not INACTIVE for inst, _ in ds.records)


def test_discrete_and_categorical_values_in_domain():
    ds = generate_dataset(mixed_space(), SurfaceSpec({"layers": 1.0}), 300, seed=8)
    layers = {inst[1] for inst, _ in ds.records}
    assert layers == {1.0, 2.0, 3.0, 4.0, 5.0}
    assert {inst[2] for inst, _ in ds.records} == {"Adam", "SGD", "RMSProp"}


def test_bimodal_pushes_toward_extremes():
    spec = SurfaceSpec({"x1": 1.0}, noise_std=0.0)
    uni = generate_dataset(numeric_space(2), spec, 2000, seed=3)
    bim = generate_dataset(numeric_space(2), SurfaceSpec({"x1": 1.0}, sampling="bimodal"), 2000, seed=3)
    mid = lambda ds: np.mean(np.abs(ds.performance - 0.5) < 0.2)
    assert mid(bim) < mid(uni)


def test_coefficient_order_recovered():
    # weak effects sit inside the null band, so only the two strong ones are checked
    spec = SurfaceSpec({"x1": 1.0, "x2": 0.5, "x3": 0.1}, noise_std=0.02)
    for seed in range(3):
        r = run_nrrelieff(generate_dataset(numeric_space(4), spec, 800, seed=seed))
        assert [r.names[i] for i in r.ordered()[:2]] == ["x1", "x2"]
