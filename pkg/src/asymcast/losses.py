"""Cost-of-error functions, symmetric and asymmetric, with gradients.

Families
--------
``squared_error``   e^2
``llc``             linear-linear:     a*|e| if e > 0 else b*|e|
``qqc``             quadratic-quadratic: a*e^2 if e > 0 else b*e^2
``lec``             linear-exponential:  b*(exp(a*e) - a*e - 1)
``pinball``         quantile loss:     tau*e if e > 0 else (tau - 1)*e
``qqc_approx``      smooth quadratic-quadratic, a logistic blend of the
                    two branch weights so the function is differentiable
                    everywhere (used for gradient-based training)

Residuals follow the convention ``e = actual - forecast``: a positive
residual means the forecast underestimated the actual (weight ``a``), a
non-positive residual means overestimation (weight ``b``).

All loss objects are immutable; every function here is pure and safe to
call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import ConfigurationError, InvalidInputError

FAMILIES = ("squared_error", "llc", "qqc", "lec", "pinball", "qqc_approx")

# exp() overflow guard: |argument| is clipped here before exponentiation,
# which saturates the logistic blend at exactly 0/1 in the tails.
_EXP_CLIP = 700.0


@dataclass(frozen=True)
class CostSpec:
    """Parameterized cost function: family plus asymmetry weights.

    ``a`` weighs positive residuals (underestimation), ``b`` non-positive
    ones (overestimation). ``tau`` is only meaningful for ``pinball``,
    ``steepness`` only for ``qqc_approx``.
    """

    family: str
    a: float = 1.0
    b: float = 1.0
    tau: float = 0.5
    steepness: float = 99.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(
                f"unknown loss family {self.family!r}; expected one of {FAMILIES}"
            )
        for name in ("a", "b", "tau", "steepness"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigurationError(f"loss parameter {name} must be finite, got {value!r}")
        if self.a <= 0 or self.b <= 0:
            raise ConfigurationError(f"weights must be positive, got a={self.a}, b={self.b}")
        if self.family == "pinball" and not 0.0 < self.tau < 1.0:
            raise ConfigurationError(f"tau must lie in (0, 1), got {self.tau}")
        if self.steepness <= 0:
            raise ConfigurationError(f"steepness must be positive, got {self.steepness}")

    def with_weights(self, a: float, b: float) -> "CostSpec":
        return replace(self, a=a, b=b)

    def describe(self) -> str:
        if self.family == "pinball":
            return f"pinball(tau={self.tau:g})"
        if self.family == "qqc_approx":
            return f"qqc_approx(a={self.a:g}, b={self.b:g}, steepness={self.steepness:g})"
        if self.family == "squared_error":
            return "squared_error"
        return f"{self.family}(a={self.a:g}, b={self.b:g})"


def _as_residual_array(e) -> np.ndarray:
    arr = np.asarray(e, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("residuals must be finite (no NaN/inf)")
    return arr


def _logistic_blend(e: np.ndarray, spec: CostSpec) -> np.ndarray:
    """Branch weight a + (b - a) / (1 + exp(steepness * e)).

    Tends to ``a`` as e -> +inf and to ``b`` as e -> -inf.
    """
    z = np.clip(spec.steepness * e, -_EXP_CLIP, _EXP_CLIP)
    sig = 1.0 / (1.0 + np.exp(z))
    return spec.a + (spec.b - spec.a) * sig


def _eval_raw(spec: CostSpec, e: np.ndarray) -> np.ndarray:
    # No parameter validation here: validate_generalized_cost probes
    # deliberately corrupted specs through this path.
    family = spec.family
    if family == "squared_error":
        return e * e
    if family == "llc":
        return np.where(e > 0, spec.a, spec.b) * np.abs(e)
    if family == "qqc":
        return np.where(e > 0, spec.a, spec.b) * (e * e)
    if family == "lec":
        ae = spec.a * e
        return spec.b * (np.exp(np.clip(ae, -_EXP_CLIP, _EXP_CLIP)) - ae - 1.0)
    if family == "pinball":
        return np.where(e > 0, spec.tau * e, (spec.tau - 1.0) * e)
    if family == "qqc_approx":
        return (e * e) * _logistic_blend(e, spec)
    raise ConfigurationError(f"unknown loss family {family!r}")


def eval_loss(spec: CostSpec, e):
    """Cost of a residual (scalar or array). Non-negative for valid specs."""
    arr = _as_residual_array(e)
    out = _eval_raw(spec, arr)
    if np.isscalar(e) or np.ndim(e) == 0:
        return float(out)
    return out


def eval_mean(spec: CostSpec, actuals, forecasts) -> float:
    """Arithmetic mean of the cost over residuals ``actuals - forecasts``."""
    y = np.asarray(actuals, dtype=float)
    f = np.asarray(forecasts, dtype=float)
    if y.ndim != 1 or f.ndim != 1 or y.shape != f.shape:
        raise InvalidInputError(
            f"actuals and forecasts must be equal-length vectors, got {y.shape} vs {f.shape}"
        )
    if y.size == 0:
        raise InvalidInputError("cannot average a loss over empty vectors")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
        raise InvalidInputError("actuals and forecasts must be finite")
    return float(np.mean(_eval_raw(spec, y - f)))


def grad_loss(spec: CostSpec, e):
    """dC/de. At the kinks of pinball/llc returns the right-derivative."""
    arr = _as_residual_array(e)
    family = spec.family
    if family == "squared_error":
        out = 2.0 * arr
    elif family == "llc":
        out = np.where(arr > 0, spec.a, np.where(arr < 0, -spec.b, spec.a))
    elif family == "qqc":
        out = np.where(arr > 0, 2.0 * spec.a * arr, 2.0 * spec.b * arr)
    elif family == "lec":
        z = np.clip(spec.a * arr, -_EXP_CLIP, _EXP_CLIP)
        out = spec.a * spec.b * (np.exp(z) - 1.0)
    elif family == "pinball":
        out = np.where(arr > 0, spec.tau, np.where(arr < 0, spec.tau - 1.0, spec.tau))
        out = np.asarray(out, dtype=float)
    elif family == "qqc_approx":
        z = np.clip(spec.steepness * arr, -_EXP_CLIP, _EXP_CLIP)
        sig = 1.0 / (1.0 + np.exp(z))
        weight = spec.a + (spec.b - spec.a) * sig
        dsig = -spec.steepness * sig * (1.0 - sig)
        out = 2.0 * arr * weight + (arr * arr) * (spec.b - spec.a) * dsig
    else:
        raise ConfigurationError(f"unknown loss family {family!r}")
    if np.isscalar(e) or np.ndim(e) == 0:
        return float(out)
    return out


def tau_from_weights(a: float, b: float = 1.0) -> float:
    """Quantile level replicating the weighting of llc(a, b): a / (a + b)."""
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0 or b <= 0:
        raise ConfigurationError(f"weights must be positive and finite, got a={a}, b={b}")
    return a / (a + b)


def validate_generalized_cost(spec: CostSpec, grid) -> bool:
    """Check the generalized-cost-function requirements on a grid.

    True iff C(0) = 0, C(e) > 0 for every nonzero grid point, and C is
    monotone non-decreasing in |e| separately over the positive and the
    negative grid points. Diagnostic only: never raises on a bad spec.
    """
    pts = np.asarray(grid, dtype=float)
    values = _eval_raw(spec, pts)
    zero_mask = pts == 0.0
    if zero_mask.any() and np.any(values[zero_mask] != 0.0):
        return False
    nonzero = ~zero_mask
    if np.any(values[nonzero] <= 0.0):
        return False
    pos = np.sort(pts[pts > 0])
    neg = np.sort(np.abs(pts[pts < 0]))
    for side, magnitudes in (("pos", pos), ("neg", neg)):
        signed = magnitudes if side == "pos" else -magnitudes
        v = _eval_raw(spec, signed)
        if np.any(np.diff(v) < 0.0):
            return False
    return True


# Plain-text serialization: "key=value" lines, floats via repr so the
# round-trip is decimal-exact.

def loss_to_text(spec: CostSpec) -> str:
    lines = [f"family={spec.family}"]
    for name in ("a", "b", "tau", "steepness"):
        lines.append(f"{name}={getattr(spec, name)!r}")
    return "\n".join(lines) + "\n"


def loss_from_text(text: str) -> CostSpec:
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"malformed loss config line {lineno}: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "family":
            fields[key] = value
        elif key in ("a", "b", "tau", "steepness"):
            try:
                fields[key] = float(value)
            except ValueError as exc:
                raise ConfigurationError(f"bad numeric value for {key}: {value!r}") from exc
        else:
            raise ConfigurationError(f"unknown loss config key {key!r}")
    if "family" not in fields:
        raise ConfigurationError("loss config is missing the family key")
    return CostSpec(**fields)
