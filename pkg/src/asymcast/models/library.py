"""Base-model library: grid construction, best-model selection, persistence.

``build_library`` fits every (family, hyperparameter) combination of the
configured grids on the ATS rows and caches each model's validation
predictions. With ``augment=True`` the library additionally receives
models trained against asymmetric losses: linear quantile regressions
over a grid of quantile levels, quantile-loss networks, and networks
trained on the smooth quadratic-quadratic loss; these carry provenance
"asymmetric".

Model fits are independent, so the builder can run them on a thread
pool (the hot kernels release the GIL); results are assembled in plan
order, keeping the library deterministic for any job count.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..data import DataSplits
from ..errors import ConfigurationError, InvalidInputError
from ..losses import CostSpec, eval_mean, loss_from_text, loss_to_text, tau_from_weights
from .base import (
    FAMILY_BAGGED_TREE,
    FAMILY_KNN,
    FAMILY_NN,
    FAMILY_OLS,
    FAMILY_QUANTILE,
    FAMILY_RANDOM_FOREST,
    FAMILY_RIDGE,
    FAMILY_TREE,
    LINEAR_FAMILIES,
    Model,
    predict,
)
from .linear import LinearState, fit_ols, fit_quantile, fit_ridge
from .neighbors import KnnState, fit_knn
from .neural import NNConfig, NNState, fit_nn
from .trees import ForestState, TreeState, fit_bagged_tree, fit_random_forest, fit_tree

log = logging.getLogger("asymcast.library")

SUPPORTED_FAMILIES = (
    FAMILY_OLS,
    FAMILY_RIDGE,
    FAMILY_KNN,
    FAMILY_TREE,
    FAMILY_NN,
    FAMILY_BAGGED_TREE,
    FAMILY_RANDOM_FOREST,
)
# families present in the wider modeling literature but deliberately not
# implemented here; config validation names them explicitly
UNSUPPORTED_FAMILIES = ("svr", "mars", "lasso", "stepwise", "boosted_tree", "bagged_nn")

DEFAULT_A_LEVELS = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class LibraryConfig:
    families: tuple = SUPPORTED_FAMILIES
    ridge_lambdas: tuple = (1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0)
    knn_ks: tuple = (3, 5, 10, 25, 50, 100)
    knn_algorithms: tuple = ("brute",)
    tree_complexities: tuple = (1e-4, 1e-3, 1e-2)
    tree_min_nodes: tuple = (10, 40)
    nn_hidden: tuple = (2, 4, 8, 16)
    nn_epochs: int = 500
    nn_learning_rate: float = 0.02
    nn_lambda1: float = 1e-6
    nn_lambda2: float = 1e-6
    bag_counts: tuple = (10, 25)
    rf_trees: tuple = (30, 60)
    rf_mtrys: tuple = (4, 8)
    aug_a_levels: tuple = DEFAULT_A_LEVELS
    aug_nn_hidden: tuple = (6,)
    master_seed: int = 0

    def __post_init__(self):
        for family in self.families:
            if family in SUPPORTED_FAMILIES:
                continue
            if family in UNSUPPORTED_FAMILIES:
                raise ConfigurationError(f"model family {family!r} is declared unsupported")
            raise ConfigurationError(
                f"unknown model family {family!r}; supported: {SUPPORTED_FAMILIES}"
            )


@dataclass(frozen=True)
class LibraryEntry:
    index: int
    family: str
    hyperparams: dict
    provenance: str
    model: Model | None
    val_pred: np.ndarray


@dataclass
class ModelLibrary:
    entries: list
    val_actuals: np.ndarray
    augmented: bool
    master_seed: int
    failures: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def validation_matrix(self) -> np.ndarray:
        """Per-model validation predictions, one row per entry."""
        return np.vstack([entry.val_pred for entry in self.entries])

    def entry(self, index: int) -> LibraryEntry:
        return self.entries[index]


def _model_seed(master_seed: int, plan_index: int) -> int:
    return int(np.random.SeedSequence(entropy=(master_seed, plan_index)).generate_state(1)[0])


def _build_plans(config: LibraryConfig, augment: bool, n_features: int):
    """Enumerate (family, hyperparams, fitter) triples in a stable order."""
    plans = []

    def add(family, params, fitter):
        plans.append((family, params, fitter))

    fams = config.families
    if FAMILY_OLS in fams:
        add(FAMILY_OLS, {}, lambda X, y, seed: fit_ols(X, y))
    if FAMILY_RIDGE in fams:
        for lam in config.ridge_lambdas:
            add(FAMILY_RIDGE, {"lambda": lam}, lambda X, y, seed, lam=lam: fit_ridge(X, y, lam))
    if FAMILY_KNN in fams:
        for algorithm in config.knn_algorithms:
            for k in config.knn_ks:
                add(
                    FAMILY_KNN,
                    {"k": k, "algorithm": algorithm},
                    lambda X, y, seed, k=k, algorithm=algorithm: fit_knn(X, y, k, algorithm),
                )
    if FAMILY_TREE in fams:
        for cp in config.tree_complexities:
            for mn in config.tree_min_nodes:
                add(
                    FAMILY_TREE,
                    {"complexity": cp, "min_node": mn},
                    lambda X, y, seed, cp=cp, mn=mn: fit_tree(X, y, cp, mn),
                )
    if FAMILY_NN in fams:
        for k in config.nn_hidden:
            add(
                FAMILY_NN,
                {"hidden_nodes": k},
                lambda X, y, seed, k=k: fit_nn(X, y, _nn_config(config, k, seed)),
            )
    if FAMILY_BAGGED_TREE in fams:
        for bags in config.bag_counts:
            add(
                FAMILY_BAGGED_TREE,
                {"bags": bags},
                lambda X, y, seed, bags=bags: fit_bagged_tree(X, y, bags, seed),
            )
    if FAMILY_RANDOM_FOREST in fams:
        for trees in config.rf_trees:
            for mtry in config.rf_mtrys:
                add(
                    FAMILY_RANDOM_FOREST,
                    {"trees": trees, "mtry": mtry},
                    lambda X, y, seed, trees=trees, mtry=mtry: fit_random_forest(
                        X, y, trees, min(mtry, n_features), seed
                    ),
                )

    if augment:
        for a in config.aug_a_levels:
            tau = tau_from_weights(a, 1.0)
            add(
                FAMILY_QUANTILE,
                {"tau": tau, "a": a},
                lambda X, y, seed, tau=tau: fit_quantile(X, y, tau),
            )
        for a in config.aug_a_levels:
            tau = tau_from_weights(a, 1.0)
            for k in config.aug_nn_hidden:
                add(
                    FAMILY_NN,
                    {"hidden_nodes": k, "tau": tau, "a": a, "loss": "pinball"},
                    lambda X, y, seed, tau=tau, k=k: fit_nn(
                        X, y, _nn_config(config, k, seed), CostSpec("pinball", tau=tau)
                    ),
                )
        for a in config.aug_a_levels:
            for k in config.aug_nn_hidden:
                add(
                    FAMILY_NN,
                    {"hidden_nodes": k, "a": a, "b": 1.0, "loss": "qqc_approx"},
                    lambda X, y, seed, a=a, k=k: fit_nn(
                        X, y, _nn_config(config, k, seed), CostSpec("qqc_approx", a=a, b=1.0)
                    ),
                )
    return plans


def _nn_config(config: LibraryConfig, hidden: int, seed: int) -> NNConfig:
    return NNConfig(
        hidden_nodes=hidden,
        lambda1=config.nn_lambda1,
        lambda2=config.nn_lambda2,
        epochs=config.nn_epochs,
        learning_rate=config.nn_learning_rate,
        seed=seed,
    )


def build_library(
    splits: DataSplits, config: LibraryConfig, augment: bool, jobs: int = 1
) -> ModelLibrary:
    """Fit the configured grids on ATS rows, caching validation forecasts.

    Individual fit failures are logged and skipped; only a fully failed
    build raises.
    """
    X = splits.ats.features
    y = splits.ats.target
    X_val = splits.validation.features
    plans = _build_plans(config, augment, X.shape[1])

    def run_plan(item):
        plan_index, (family, params, fitter) = item
        seed = _model_seed(config.master_seed, plan_index)
        try:
            model = fitter(X, y, seed)
            return plan_index, family, params, model, predict(model, X_val), None
        except Exception as exc:  # noqa: BLE001 - skip-and-log is the contract
            return plan_index, family, params, None, None, exc

    items = list(enumerate(plans))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_plan, items))
    else:
        results = [run_plan(item) for item in items]

    entries, failures = [], []
    for plan_index, family, params, model, val_pred, exc in results:
        if exc is not None:
            log.warning("skipping %s %s: %s", family, params, exc)
            failures.append((family, params, str(exc)))
            continue
        entries.append(
            LibraryEntry(len(entries), family, params, model.provenance, model, val_pred)
        )
    if not entries:
        raise InvalidInputError("every model fit failed; library is empty")
    return ModelLibrary(entries, splits.validation.target.copy(), augment, config.master_seed, failures)


def select_best(library: ModelLibrary, criterion: CostSpec, families=None) -> int:
    """Index of the validation-best entry under the criterion; ties break low.

    ``families`` optionally restricts the candidate set (e.g. linear-only).
    """
    if len(library.entries) == 0:
        raise InvalidInputError("cannot select from an empty library")
    best_index, best_score = None, np.inf
    for entry in library.entries:
        if families is not None and entry.family not in families:
            continue
        score = eval_mean(criterion, library.val_actuals, entry.val_pred)
        if score < best_score:
            best_index, best_score = entry.index, score
    if best_index is None:
        raise InvalidInputError(f"no library entry matches families {families}")
    return best_index


def linear_families() -> tuple:
    return LINEAR_FAMILIES


# ------------------------------------------------------------- persistence

_BUNDLE_VERSION = 1


def _state_arrays(model: Model, prefix: str) -> dict:
    state = model.state
    if isinstance(state, LinearState):
        return {f"{prefix}beta": state.beta}
    if isinstance(state, KnnState):
        return {f"{prefix}X": state.X, f"{prefix}y": state.y}
    if isinstance(state, TreeState):
        return {
            f"{prefix}feature": state.feature,
            f"{prefix}threshold": state.threshold,
            f"{prefix}left": state.left,
            f"{prefix}right": state.right,
            f"{prefix}value": state.value,
        }
    if isinstance(state, ForestState):
        counts = np.array([t.feature.shape[0] for t in state.trees], dtype=np.int64)
        return {
            f"{prefix}counts": counts,
            f"{prefix}feature": np.concatenate([t.feature for t in state.trees]),
            f"{prefix}threshold": np.concatenate([t.threshold for t in state.trees]),
            f"{prefix}left": np.concatenate([t.left for t in state.trees]),
            f"{prefix}right": np.concatenate([t.right for t in state.trees]),
            f"{prefix}value": np.concatenate([t.value for t in state.trees]),
        }
    if isinstance(state, NNState):
        return {
            f"{prefix}W1": state.W1,
            f"{prefix}b1": state.b1,
            f"{prefix}v": state.v,
            f"{prefix}v0": state.v0,
            f"{prefix}act": np.array([state.act_code], dtype=np.int64),
        }
    raise ConfigurationError(f"cannot serialize model state {type(state).__name__}")


def _rebuild_state(family: str, hyperparams: dict, arrays: dict, prefix: str):
    if family in (FAMILY_OLS, FAMILY_RIDGE, FAMILY_QUANTILE):
        return LinearState(arrays[f"{prefix}beta"])
    if family == FAMILY_KNN:
        return KnnState(
            arrays[f"{prefix}X"], arrays[f"{prefix}y"], hyperparams["k"], hyperparams["algorithm"]
        )
    if family == FAMILY_TREE:
        return TreeState(
            tuple(arrays[f"{prefix}{k}"] for k in ("feature", "threshold", "left", "right", "value"))
        )
    if family in (FAMILY_BAGGED_TREE, FAMILY_RANDOM_FOREST):
        counts = arrays[f"{prefix}counts"]
        offsets = np.concatenate([[0], np.cumsum(counts)])
        trees = []
        for t in range(len(counts)):
            lo, hi = offsets[t], offsets[t + 1]
            trees.append(
                TreeState(
                    tuple(
                        arrays[f"{prefix}{k}"][lo:hi]
                        for k in ("feature", "threshold", "left", "right", "value")
                    )
                )
            )
        return ForestState(trees)
    if family == FAMILY_NN:
        return NNState(
            arrays[f"{prefix}W1"],
            arrays[f"{prefix}b1"],
            arrays[f"{prefix}v"],
            arrays[f"{prefix}v0"],
            int(arrays[f"{prefix}act"][0]),
        )
    raise ConfigurationError(f"cannot rebuild model family {family!r}")


def save_library(library: ModelLibrary, path) -> None:
    """Persist the library as a versioned npz bundle with a json manifest."""
    arrays = {"val_actuals": library.val_actuals}
    manifest = {
        "version": _BUNDLE_VERSION,
        "augmented": library.augmented,
        "master_seed": library.master_seed,
        "entries": [],
    }
    for entry in library.entries:
        prefix = f"e{entry.index}_"
        arrays[f"{prefix}val_pred"] = entry.val_pred
        arrays.update(_state_arrays(entry.model, prefix))
        manifest["entries"].append(
            {
                "index": entry.index,
                "family": entry.family,
                "hyperparams": entry.hyperparams,
                "provenance": entry.provenance,
                "n_features": entry.model.n_features,
                "loss_mode": loss_to_text(entry.model.loss_mode),
                "val_score_mse": eval_mean(
                    CostSpec("squared_error"), library.val_actuals, entry.val_pred
                ),
            }
        )
    arrays["manifest"] = np.frombuffer(
        json.dumps(manifest, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    np.savez_compressed(path, **arrays)


def load_library(path) -> ModelLibrary:
    with np.load(path, allow_pickle=False) as bundle:
        arrays = {key: bundle[key] for key in bundle.files}
    manifest = json.loads(bytes(arrays["manifest"]).decode("utf-8"))
    if manifest["version"] != _BUNDLE_VERSION:
        raise ConfigurationError(
            f"library bundle version {manifest['version']} is not supported"
        )
    entries = []
    for meta in manifest["entries"]:
        prefix = f"e{meta['index']}_"
        state = _rebuild_state(meta["family"], meta["hyperparams"], arrays, prefix)
        model = Model(
            meta["family"],
            meta["hyperparams"],
            state,
            meta["n_features"],
            loss_mode=loss_from_text(meta["loss_mode"]),
            provenance=meta["provenance"],
        )
        entries.append(
            LibraryEntry(
                meta["index"],
                meta["family"],
                meta["hyperparams"],
                meta["provenance"],
                model,
                arrays[f"{prefix}val_pred"],
            )
        )
    return ModelLibrary(
        entries, arrays["val_actuals"], manifest["augmented"], manifest["master_seed"]
    )
