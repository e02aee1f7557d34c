import numpy as np
import pytest

from asymcast.data import SynthConfig, split, standardize, synth_generate
from asymcast.errors import ConfigurationError, InvalidInputError
from asymcast.losses import CostSpec
from asymcast.models import (
    LibraryConfig,
    LibraryEntry,
    ModelLibrary,
    build_library,
    load_library,
    predict,
    save_library,
    select_best,
)

SMALL_CONFIG = LibraryConfig(
    ridge_lambdas=(0.01, 1.0),
    knn_ks=(5, 25),
    tree_complexities=(1e-3,),
    tree_min_nodes=(10,),
    nn_hidden=(2,),
    nn_epochs=120,
    bag_counts=(5,),
    rf_trees=(10,),
    rf_mtrys=(4,),
    aug_a_levels=(0.2, 0.5),
    aug_nn_hidden=(2,),
    master_seed=77,
)


@pytest.fixture(scope="module")
def small_splits():
    ds = synth_generate(SynthConfig(n=700, seed=50))
    std, _ = standardize(split(ds, seed=4))
    return std


@pytest.fixture(scope="module")
def symmetric_library(small_splits):
    return build_library(small_splits, SMALL_CONFIG, augment=False)


@pytest.fixture(scope="module")
def augmented_library(small_splits):
    return build_library(small_splits, SMALL_CONFIG, augment=True)


def test_symmetric_build_marks_everything_symmetric(symmetric_library):
    assert len(symmetric_library) == 1 + 2 + 2 + 1 + 1 + 1 + 1
    assert all(e.provenance == "symmetric" for e in symmetric_library.entries)
    assert symmetric_library.failures == []


def test_augmented_build_adds_asymmetric_models(symmetric_library, augmented_library):
    assert len(augmented_library) > len(symmetric_library)
    quantiles = [e for e in augmented_library.entries if e.family == "quantile"]
    pinball_nets = [
        e for e in augmented_library.entries
        if e.family == "nn" and e.hyperparams.get("loss") == "pinball"
    ]
    smooth_nets = [
        e for e in augmented_library.entries
        if e.family == "nn" and e.hyperparams.get("loss") == "qqc_approx"
    ]
    assert len(quantiles) >= 1 and len(pinball_nets) >= 1 and len(smooth_nets) >= 1
    for group in (quantiles, pinball_nets, smooth_nets):
        assert all(e.provenance == "asymmetric" for e in group)


def test_cached_validation_predictions_match_fresh_predict(small_splits, augmented_library):
    rng = np.random.default_rng(0)
    for index in rng.choice(len(augmented_library), size=3, replace=False):
        entry = augmented_library.entry(int(index))
        fresh = predict(entry.model, small_splits.validation.features)
        np.testing.assert_array_equal(entry.val_pred, fresh)


def test_build_is_deterministic(small_splits, symmetric_library):
    again = build_library(small_splits, SMALL_CONFIG, augment=False)
    np.testing.assert_array_equal(
        symmetric_library.validation_matrix(), again.validation_matrix()
    )


def test_parallel_build_matches_sequential(small_splits, symmetric_library):
    parallel = build_library(small_splits, SMALL_CONFIG, augment=False, jobs=3)
    np.testing.assert_array_equal(
        symmetric_library.validation_matrix(), parallel.validation_matrix()
    )


def test_unsupported_family_is_named():
    with pytest.raises(ConfigurationError, match="svr"):
        LibraryConfig(families=("ols", "svr"))
    with pytest.raises(ConfigurationError, match="quintic"):
        LibraryConfig(families=("quintic",))


# ------------------------------------------------------------- select_best

def stub_library(predictions, actuals):
    entries = [
        LibraryEntry(i, "stub", {"id": i}, "symmetric", None, np.asarray(p, dtype=float))
        for i, p in enumerate(predictions)
    ]
    return ModelLibrary(entries, np.asarray(actuals, dtype=float), False, 0)


REFERENCE_ACTUALS = [53.66, 45.36, 67.07]
REFERENCE_FORECASTS = [
    [62.90, 35.76, 66.90],
    [65.63, 47.91, 65.63],
    [61.26, 38.92, 64.50],
]


def test_select_best_picks_reference_third_model_under_mse():
    library = stub_library(REFERENCE_FORECASTS, REFERENCE_ACTUALS)
    assert select_best(library, CostSpec("squared_error")) == 2


def test_select_best_single_candidate():
    library = stub_library([[0.5, 0.6]], [0.55, 0.58])
    assert select_best(library, CostSpec("qqc", a=0.3, b=1.0)) == 0


def test_select_best_prefers_low_biased_model_under_asymmetry():
    actuals = np.full(50, 0.6)
    unbiased = actuals + np.tile([0.05, -0.05], 25)
    low_biased = actuals - 0.05  # always underestimates: cheap when a << b
    library = stub_library([unbiased, low_biased], actuals)
    assert select_best(library, CostSpec("squared_error")) == 0
    assert select_best(library, CostSpec("qqc", a=0.1, b=1.0)) == 1


def test_select_best_breaks_ties_by_lowest_index():
    library = stub_library([[1.0, 1.0], [1.0, 1.0]], [0.9, 1.1])
    assert select_best(library, CostSpec("squared_error")) == 0


def test_select_best_rejects_empty_library():
    library = ModelLibrary([], np.array([1.0]), False, 0)
    with pytest.raises(InvalidInputError):
        select_best(library, CostSpec("squared_error"))


# ------------------------------------------------------------- persistence

def test_save_load_round_trip(tmp_path, small_splits, augmented_library):
    path = tmp_path / "library.npz"
    save_library(augmented_library, path)
    loaded = load_library(path)
    assert len(loaded) == len(augmented_library)
    assert loaded.augmented is True
    X = small_splits.test.features
    for original, rebuilt in zip(augmented_library.entries, loaded.entries):
        assert original.family == rebuilt.family
        assert original.provenance == rebuilt.provenance
        assert original.hyperparams == rebuilt.hyperparams
        np.testing.assert_array_equal(original.val_pred, rebuilt.val_pred)
        np.testing.assert_allclose(
            predict(original.model, X), predict(rebuilt.model, X), atol=1e-12
        )
