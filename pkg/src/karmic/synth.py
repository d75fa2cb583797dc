"""Synthetic binary-classification models with analytic ground truth.

Two families:

* Gaussian two-class model: ``P(Y=+1) = kappa`` and ``X | Y = y`` drawn
  from ``N(y * mu / 2, I_d)``.  Bayes rule gives
  ``eta(x) = sigmoid(mu . x + logit(kappa))``, and because ``mu . X`` is
  univariate normal within each class every population confusion entry is
  a normal tail — closed forms below.
* One-dimensional smooth model on [0, 1]: ``X ~ Uniform[0,1]`` with a
  fixed conditional-probability curve (tag "sine":
  ``eta(x) = 0.5 + 0.45 sin(2 pi x)``; tag "flat": ``eta = 0.5``).  Level
  sets of the sine curve are explicit arcsin intervals, so its population
  confusion is also exact.

Sampling uses one named child stream per role (labels, features) spawned
from the seed, so datasets are bit-reproducible and independent of
generation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit, ndtr

from .confusion import ConfusionMatrix, Dataset
from .errors import (
    BoundaryThresholdError,
    DegenerateDistributionError,
    DimensionMismatchError,
    InsufficientMassError,
)

__all__ = [
    "GaussianModel",
    "HolderModel",
    "sample_gaussian",
    "sample_holder",
    "true_eta_gaussian",
    "population_confusion_gaussian",
    "gaussian_confusion_curve",
    "gaussian_halfspace_confusion",
    "population_confusion_holder",
    "holder_eta",
    "margin_exponent_estimate",
]

_SINE_AMPLITUDE = 0.45
_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Two spherical Gaussian classes at ``+mu/2`` and ``-mu/2``.

    ``kappa`` is the positive-class prior.  ``mu`` may be zero (pure-noise
    labels), but the closed-form confusion requires ``|mu| > 0``.
    """

    mu: np.ndarray
    kappa: float

    def __post_init__(self) -> None:
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        if mu.ndim != 1 or mu.size < 1 or not np.all(np.isfinite(mu)):
            raise ValueError("mu must be a finite 1-D vector")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kappa", float(self.kappa))
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return int(self.mu.size)

    @property
    def margin_norm(self) -> float:
        """Euclidean separation ``|mu|`` between the class means."""
        return float(np.linalg.norm(self.mu))

    def to_dict(self) -> dict:
        return {"model": "gaussian", "mu": [float(v) for v in self.mu], "kappa": self.kappa}


@dataclass(frozen=True)
class HolderModel:
    """One-dimensional model on [0,1] with a fixed smooth eta curve.

    ``beta`` is informational (nominal smoothness used for bandwidth
    selection downstream); both tags are infinitely differentiable.
    """

    eta_tag: str = "sine"
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.eta_tag not in ("sine", "flat"):
            raise ValueError(f"unknown eta tag {self.eta_tag!r}; use 'sine' or 'flat'")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def dim(self) -> int:
        return 1

    def eta(self, x) -> np.ndarray:
        return holder_eta(self.eta_tag, x)

    def to_dict(self) -> dict:
        return {"model": "holder", "eta_tag": self.eta_tag, "beta": self.beta}


def holder_eta(tag: str, x) -> np.ndarray:
    """Evaluate the named conditional-probability curve on [0, 1]."""
    x = np.asarray(x, dtype=float)
    if tag == "sine":
        return 0.5 + _SINE_AMPLITUDE * np.sin(_TWO_PI * x)
    if tag == "flat":
        return np.full_like(x, 0.5)
    raise ValueError(f"unknown eta tag {tag!r}")


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    label_seq, feature_seq = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.default_rng(label_seq), np.random.default_rng(feature_seq)


def sample_gaussian(model: GaussianModel, n: int, seed: int) -> Dataset:
    """Draw n labelled points from the Gaussian model, reproducibly."""
    if n < 1:
        raise ValueError("n must be >= 1")
    label_rng, feature_rng = _streams(seed)
    labels = np.where(label_rng.random(n) < model.kappa, 1, -1)
    features = feature_rng.standard_normal((n, model.dim))
    features += 0.5 * labels[:, None] * model.mu[None, :]
    return Dataset(features, labels)


def sample_holder(model: HolderModel, n: int, seed: int) -> Dataset:
    """Draw n points with X ~ Uniform[0,1] and P(Y=+1|X) = eta(X)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    label_rng, feature_rng = _streams(seed)
    x = feature_rng.random(n)
    labels = np.where(label_rng.random(n) < model.eta(x), 1, -1)
    return Dataset(x.reshape(-1, 1), labels)


def true_eta_gaussian(model: GaussianModel, x) -> float | np.ndarray:
    """Exact P(Y=+1 | X=x) = sigmoid(mu . x + logit(kappa))."""
    arr = np.asarray(x, dtype=float)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"expected points of dimension {model.dim}, got shape {np.shape(x)}"
        )
    values = expit(arr @ model.mu + logit(model.kappa))
    return float(values[0]) if squeeze else values


def gaussian_halfspace_confusion(
    model: GaussianModel, w: np.ndarray, b: float, delta: float
) -> ConfusionMatrix:
    """Population confusion of ``predict +1 iff sigmoid(w.x + b) > delta``.

    The rule is the half-space ``w.x > logit(delta) - b``; within class y
    the projection ``w.x`` is ``N(y w.mu / 2, |w|^2)``, so each entry is a
    normal tail.  A near-zero ``w`` degenerates to a constant prediction.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape != (model.dim,):
        raise DimensionMismatchError(
            f"weight dimension {w.shape} does not match model dimension {model.dim}"
        )
    kappa = model.kappa
    norm = float(np.linalg.norm(w))
    cut = logit(delta) - b
    if norm < 1e-12:
        positive = 1.0 if 0.0 > cut else 0.0
        return ConfusionMatrix(kappa * positive, (1 - kappa) * positive,
                               kappa * (1 - positive), (1 - kappa) * (1 - positive))
    shift = 0.5 * float(w @ model.mu)
    rate_pos = float(ndtr((shift - cut) / norm))
    rate_neg = float(ndtr((-shift - cut) / norm))
    return ConfusionMatrix(
        kappa * rate_pos,
        (1 - kappa) * rate_neg,
        kappa * (1 - rate_pos),
        (1 - kappa) * (1 - rate_neg),
    )


def population_confusion_gaussian(model: GaussianModel, delta: float) -> ConfusionMatrix:
    """Exact population confusion of thresholding the true eta at delta."""
    if delta in (0.0, 1.0):
        raise BoundaryThresholdError("population confusion needs delta in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if model.margin_norm == 0.0:
        raise DegenerateDistributionError(
            "closed-form confusion needs separated class means (|mu| > 0)"
        )
    return gaussian_halfspace_confusion(model, model.mu, float(logit(model.kappa)), delta)


def gaussian_confusion_curve(model: GaussianModel, deltas: np.ndarray) -> np.ndarray:
    """Vectorized population confusion, one (TP, FP, FN, TN) row per delta."""
    deltas = np.asarray(deltas, dtype=float)
    if deltas.min() <= 0.0 or deltas.max() >= 1.0:
        raise BoundaryThresholdError("all deltas must lie strictly inside (0, 1)")
    m = model.margin_norm
    if m == 0.0:
        raise DegenerateDistributionError(
            "closed-form confusion needs separated class means (|mu| > 0)"
        )
    kappa = model.kappa
    cut = logit(deltas) - logit(kappa)
    rate_pos = ndtr((0.5 * m * m - cut) / m)
    rate_neg = ndtr((-0.5 * m * m - cut) / m)
    return np.stack(
        [
            kappa * rate_pos,
            (1 - kappa) * rate_neg,
            kappa * (1 - rate_pos),
            (1 - kappa) * (1 - rate_neg),
        ],
        axis=-1,
    )


def _sine_antiderivative(x: float) -> float:
    """Antiderivative of 0.5 + 0.45 sin(2 pi x)."""
    return 0.5 * x - _SINE_AMPLITUDE * math.cos(_TWO_PI * x) / _TWO_PI


def population_confusion_holder(model: HolderModel, delta: float) -> ConfusionMatrix:
    """Exact population confusion for the 1-D smooth model at delta.

    For the sine tag the super-level set {eta > delta} is one arc of the
    period, located by arcsin; the positive mass over any interval comes
    from the closed-form antiderivative of eta.
    """
    if delta in (0.0, 1.0):
        raise BoundaryThresholdError("population confusion needs delta in (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    pos_total = 0.5  # integral of eta over [0,1] for both tags
    if model.eta_tag == "flat":
        predicted = 1.0 if delta < 0.5 else 0.0
        tp = pos_total * predicted
        fp = (1.0 - pos_total) * predicted
        return ConfusionMatrix(tp, fp, pos_total - tp, (1.0 - pos_total) - fp)
    level = (delta - 0.5) / _SINE_AMPLITUDE
    if level >= 1.0:
        return ConfusionMatrix(0.0, 0.0, pos_total, 1.0 - pos_total)
    if level <= -1.0:
        return ConfusionMatrix(pos_total, 1.0 - pos_total, 0.0, 0.0)
    theta = math.asin(level)
    x_lo = theta / _TWO_PI  # may be negative for levels below 0.5
    x_hi = (math.pi - theta) / _TWO_PI
    # Super-level set on [0,1] is (x_lo, x_hi) shifted into the unit period:
    # for negative x_lo it wraps to [0, x_hi) and (x_lo + 1, 1].
    mass = x_hi - x_lo
    tp = _sine_antiderivative(x_hi) - _sine_antiderivative(x_lo)
    fp = mass - tp
    return ConfusionMatrix(tp, fp, pos_total - tp, (1.0 - pos_total) - fp)


def margin_exponent_estimate(eta_values, delta_star: float, t_grid) -> float:
    """Log-log slope of the mass of {0 < |eta - delta*| <= t} against t.

    A slope near alpha means the eta distribution puts mass ~ t^alpha in
    shrinking neighborhoods of the threshold (low-noise exponent).
    """
    eta_values = np.asarray(eta_values, dtype=float).ravel()
    if eta_values.size < 10_000:
        raise ValueError("need at least 1e4 eta draws for a stable estimate")
    t_grid = np.asarray(t_grid, dtype=float).ravel()
    limit = min(delta_star, 1.0 - delta_star)
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if t_grid[0] <= 0.0 or t_grid[-1] >= limit:
        raise ValueError(f"t_grid must lie inside (0, {limit:.3g})")
    gaps = np.abs(eta_values - delta_star)
    gaps = gaps[gaps > 0.0]
    mass = np.array([(gaps <= t).mean() for t in t_grid]) * (gaps.size / eta_values.size)
    keep = mass > 0.0
    if keep.sum() < 3:
        raise InsufficientMassError(
            "fewer than 3 grid points carry mass near the threshold"
        )
    slope, _ = np.polyfit(np.log(t_grid[keep]), np.log(mass[keep]), 1)
    return float(slope)
