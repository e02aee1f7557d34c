import numpy as np
import pytest

from asymcast.errors import ConfigurationError, InvalidInputError
from asymcast.losses import (
    CostSpec,
    eval_loss,
    eval_mean,
    grad_loss,
    loss_from_text,
    loss_to_text,
    tau_from_weights,
    validate_generalized_cost,
)

STANDARD_GRID = np.array([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])


def central_diff(spec, e, h=1e-6):
    return (eval_loss(spec, e + h) - eval_loss(spec, e - h)) / (2 * h)


# ---------------------------------------------------------------- eval_loss

def test_quadratic_asymmetry_reduces_to_squared_error():
    assert eval_loss(CostSpec("qqc", a=1.0, b=1.0), 3.0) == 9.0


def test_pinball_symmetric_case_weights_both_sides_equally():
    spec = CostSpec("pinball", tau=0.5)
    assert eval_loss(spec, 4.0) == 2.0
    assert eval_loss(spec, -4.0) == 2.0


def test_linear_exponential_is_zero_at_zero():
    assert eval_loss(CostSpec("lec", a=0.22, b=17.0), 0.0) == 0.0


def test_quadratic_overestimation_branch():
    assert eval_loss(CostSpec("qqc", a=0.4, b=1.0), -2.0) == 4.0


def test_eval_loss_vectorized_matches_scalar():
    spec = CostSpec("llc", a=0.5, b=1.0)
    es = np.array([-1.5, 0.0, 2.5])
    vec = eval_loss(spec, es)
    assert vec.shape == (3,)
    for e, v in zip(es, vec):
        assert eval_loss(spec, float(e)) == v


def test_eval_loss_rejects_non_finite_input():
    spec = CostSpec("squared_error")
    with pytest.raises(InvalidInputError):
        eval_loss(spec, float("nan"))
    with pytest.raises(InvalidInputError):
        eval_loss(spec, np.array([1.0, np.inf]))


def test_cost_spec_validation():
    with pytest.raises(ConfigurationError):
        CostSpec("qqc", a=-1.0)
    with pytest.raises(ConfigurationError):
        CostSpec("pinball", tau=1.0)
    with pytest.raises(ConfigurationError):
        CostSpec("qqc_approx", steepness=0.0)
    with pytest.raises(ConfigurationError):
        CostSpec("huber")


def test_smooth_qqc_saturates_instead_of_overflowing():
    spec = CostSpec("qqc_approx", a=0.3, b=1.0)
    for e in (-50.0, 50.0, -1e6, 1e6):
        value = eval_loss(spec, e)
        assert np.isfinite(value)
    # tail weights: a on the far positive side, b on the far negative side
    assert eval_loss(spec, 100.0) == pytest.approx(0.3 * 100.0**2)
    assert eval_loss(spec, -100.0) == pytest.approx(1.0 * 100.0**2)


# ---------------------------------------------------------------- eval_mean

def test_mean_squared_error_on_reference_forecasts():
    # Exact value from these inputs is 35.2795 (commonly quoted rounded
    # as 35.29, which is off by a hair more than half a cent).
    actuals = [53.66, 45.36, 67.07]
    forecasts = [61.26, 38.92, 64.50]
    assert eval_mean(CostSpec("squared_error"), actuals, forecasts) == pytest.approx(
        35.2795, abs=1e-10
    )


def test_mean_is_zero_for_perfect_forecasts():
    y = np.linspace(0.2, 0.9, 11)
    for family in ("squared_error", "llc", "qqc", "lec", "pinball", "qqc_approx"):
        spec = CostSpec(family, a=0.4, b=1.0, tau=0.3)
        assert eval_mean(spec, y, y) == 0.0


def test_mean_quadratic_asymmetric_hand_computed():
    spec = CostSpec("qqc", a=0.5, b=1.0)
    assert eval_mean(spec, [1.0, 1.0], [0.0, 2.0]) == pytest.approx(0.75)


def test_mean_rejects_mismatched_or_empty_vectors():
    spec = CostSpec("squared_error")
    with pytest.raises(InvalidInputError):
        eval_mean(spec, [1.0, 2.0], [1.0])
    with pytest.raises(InvalidInputError):
        eval_mean(spec, [], [])


@pytest.mark.parametrize("family", ["qqc", "llc"])
def test_mean_is_monotone_in_underestimation_weight(family):
    rng = np.random.default_rng(7)
    y = rng.uniform(0.3, 1.0, size=200)
    f = y + rng.normal(0, 0.05, size=200)
    values = [
        eval_mean(CostSpec(family, a=a, b=1.0), y, f) for a in np.arange(0.1, 1.01, 0.1)
    ]
    assert np.all(np.diff(values) >= 0)


# ---------------------------------------------------------------- grad_loss

def test_squared_error_gradient():
    assert grad_loss(CostSpec("squared_error"), 3.0) == 6.0


def test_smooth_qqc_gradient_vanishes_at_zero():
    assert grad_loss(CostSpec("qqc_approx", a=0.4, b=1.0), 0.0) == 0.0


def test_smooth_qqc_gradient_matches_finite_difference():
    spec = CostSpec("qqc_approx", a=0.4, b=1.0)
    fd = central_diff(spec, 0.5)
    an = grad_loss(spec, 0.5)
    assert abs(an - fd) / abs(fd) < 1e-6


@pytest.mark.parametrize(
    "family,params",
    [
        ("squared_error", {}),
        ("qqc", {"a": 0.3, "b": 1.2}),
        ("lec", {"a": 0.22, "b": 17.0}),
        ("qqc_approx", {"a": 0.6, "b": 1.0}),
        ("pinball", {"tau": 0.25}),
        ("llc", {"a": 0.5, "b": 1.0}),
    ],
)
def test_gradients_match_central_differences_off_kinks(family, params):
    spec = CostSpec(family, **params)
    grid = np.array([-3.0, -1.7, -0.9, -0.3, 0.4, 0.8, 1.6, 2.9])
    for e in grid:
        fd = central_diff(spec, float(e))
        an = grad_loss(spec, float(e))
        assert abs(an - fd) <= 1e-4 * max(1.0, abs(fd))


def test_kink_subgradients_use_right_derivative():
    assert grad_loss(CostSpec("pinball", tau=0.25), 0.0) == 0.25
    assert grad_loss(CostSpec("llc", a=0.5, b=1.0), 0.0) == 0.5


# ------------------------------------------------------------ tau mapping

@pytest.mark.parametrize(
    "a,b,expected", [(1.0, 1.0, 0.5), (0.5, 1.0, 1.0 / 3.0), (0.2, 1.0, 1.0 / 6.0)]
)
def test_tau_from_weights(a, b, expected):
    assert tau_from_weights(a, b) == pytest.approx(expected, rel=1e-15)


def test_tau_from_weights_rejects_non_positive():
    with pytest.raises(ConfigurationError):
        tau_from_weights(0.0, 1.0)
    with pytest.raises(ConfigurationError):
        tau_from_weights(0.5, -2.0)


# ------------------------------------------------- generalized-cost checks

def test_all_families_are_generalized_cost_functions():
    specs = [
        CostSpec("squared_error"),
        CostSpec("llc", a=0.5, b=1.0),
        CostSpec("qqc", a=0.4, b=1.0),
        CostSpec("lec", a=0.22, b=17.0),
        CostSpec("pinball", tau=0.3),
        CostSpec("qqc_approx", a=0.4, b=1.0),
    ]
    for spec in specs:
        assert validate_generalized_cost(spec, STANDARD_GRID), spec.describe()


def test_corrupted_spec_fails_generalized_cost_check():
    spec = CostSpec("qqc", a=0.4, b=1.0)
    object.__setattr__(spec, "a", -1.0)  # bypass constructor validation
    assert validate_generalized_cost(spec, STANDARD_GRID) is False


# ----------------------------------------------------- analytic identities

def test_equal_weights_collapse_to_symmetric_losses():
    es = np.linspace(-5, 5, 401)
    for c in (0.5, 1.0, 2.5):
        qqc = eval_loss(CostSpec("qqc", a=c, b=c), es)
        llc = eval_loss(CostSpec("llc", a=c, b=c), es)
        assert np.array_equal(qqc, c * (es * es))
        assert np.max(np.abs(llc - c * np.abs(es))) == 0.0


def test_llc_is_scaled_pinball():
    es = np.linspace(-5, 5, 1000)
    for a in np.arange(0.1, 1.01, 0.1):
        tau = tau_from_weights(a, 1.0)
        llc = eval_loss(CostSpec("llc", a=a, b=1.0), es)
        pin = (1.0 + a) * eval_loss(CostSpec("pinball", tau=tau), es)
        assert np.max(np.abs(llc - pin)) < 1e-12


def test_smooth_qqc_tracks_qqc_away_from_origin():
    for a in np.arange(0.1, 1.01, 0.1):
        qqc = CostSpec("qqc", a=a, b=1.0)
        appr = CostSpec("qqc_approx", a=a, b=1.0)
        es = np.concatenate([np.linspace(0.1, 8, 200), -np.linspace(0.1, 8, 200)])
        gap = np.abs(eval_loss(appr, es) - eval_loss(qqc, es)) / eval_loss(qqc, es)
        assert np.max(gap) < 1e-3


def test_smooth_qqc_limit_weights():
    spec = CostSpec("qqc_approx", a=0.25, b=1.5)
    assert eval_loss(spec, 0.0) == 0.0
    assert eval_loss(spec, 1e4) / 1e8 == pytest.approx(0.25, rel=1e-12)
    assert eval_loss(spec, -1e4) / 1e8 == pytest.approx(1.5, rel=1e-12)


# ------------------------------------------------------------ serialization

def test_loss_config_round_trip_is_decimal_exact():
    specs = [
        CostSpec("qqc", a=0.1, b=1.0),
        CostSpec("pinball", tau=1.0 / 3.0),
        CostSpec("qqc_approx", a=0.22222222222221, b=1.7, steepness=99.0),
    ]
    for spec in specs:
        assert loss_from_text(loss_to_text(spec)) == spec


def test_loss_config_rejects_garbage():
    with pytest.raises(ConfigurationError):
        loss_from_text("family=qqc\na=not_a_number\n")
    with pytest.raises(ConfigurationError):
        loss_from_text("a=1.0\n")
    with pytest.raises(ConfigurationError):
        loss_from_text("family=qqc\nwhatever=1\n")
