import numpy as np
import pytest

from nrrelief.dataset import HiaDataset
from nrrelief.space import CATEGORICAL, NUMERIC_CONTINUOUS, NUMERIC_DISCRETE, ConfigSpace, HyperparameterDef, Parent
from nrrelief.synthetic import SurfaceSpec, generate_dataset


def numeric_space(k, prefix="x"):
    return ConfigSpace(tuple(HyperparameterDef(f"{prefix}{i + 1}", NUMERIC_CONTINUOUS, 0.0, 1.0) for i in range(k)))


def random_dataset(n, k, seed, coeffs=None, noise=0.05):
    """Tie-free continuous dataset with p = sum(c_i x_i) + noise."""
    rng = np.random.default_rng(seed)
    x = rng.random((n, k))
    c = np.zeros(k) if coeffs is None else np.asarray(coeffs, dtype=float)
    p = x @ c + rng.normal(0.0, noise, n)
    return HiaDataset(numeric_space(k), [(tuple(r), q) for r, q in zip(x, p)])


def mixed_space():
    return ConfigSpace(
        (
            HyperparameterDef("lr", NUMERIC_CONTINUOUS, 0.0, 1.0),
            HyperparameterDef("layers", NUMERIC_DISCRETE, 1, 5),
            HyperparameterDef("opt", CATEGORICAL, categories=("Adam", "SGD", "RMSProp")),
            HyperparameterDef("drop", NUMERIC_CONTINUOUS, 0.0, 0.9),
        )
    )


def conditional_space():
    """Three-valued parent gating three child columns, plus two free hyperparameters."""
    return ConfigSpace(
        (
            HyperparameterDef("num_layers", NUMERIC_DISCRETE, 1, 3),
            HyperparameterDef("lr", NUMERIC_CONTINUOUS, 0.0, 1.0),
            HyperparameterDef("opt", CATEGORICAL, categories=("Adam", "SGD")),
            HyperparameterDef("filters_1", NUMERIC_CONTINUOUS, 4.0, 64.0, parent=Parent("num_layers", (1, 2, 3))),
            HyperparameterDef("filters_2", NUMERIC_CONTINUOUS, 4.0, 64.0, parent=Parent("num_layers", (2, 3))),
            HyperparameterDef("filters_3", NUMERIC_CONTINUOUS, 4.0, 64.0, parent=Parent("num_layers", (3,))),
        )
    )


# Within a slice only the children enter distances, so other effects act as noise there;
# lr is kept small so the slice signal comes from filters_1.
CONDITIONAL_SURFACE = SurfaceSpec(
    linear_coeffs={"num_layers": 1.0, "lr": 0.05, "filters_1": 0.8, "filters_2": 0.1},
    noise_std=0.02,
)


@pytest.fixture
def mixed_dataset():
    spec = SurfaceSpec(linear_coeffs={"lr": 1.0, "layers": 0.4}, categorical_effects={("opt", "SGD"): 0.3}, noise_std=0.05)
    return generate_dataset(mixed_space(), spec, 300, seed=3)


@pytest.fixture
def cond_dataset():
    return generate_dataset(conditional_space(), CONDITIONAL_SURFACE, 1500, seed=11)


# acceptance results, printed after the run by pytest_terminal_summary
ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, title: str, passed: bool, elapsed: float, limit: float | None, detail: str = "") -> None:
    timing = f"{elapsed:.2f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}: {timing}"
    if detail:
        line += f"; {detail}"
    ACCEPTANCE[number] = line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
