"""Two-stage plug-in classifier and its population-regret evaluation.

The training recipe: split the sample into two halves with a seeded
permutation, fit a conditional-probability scorer on the first half, and
pick the decision threshold on the second half by bisection on the
utility's ascent sign.  The result predicts +1 iff score(x) > delta.

Regret evaluation compares the classifier's population utility against the
population optimum (threshold from the exact fixed point of the model's
closed-form confusion curve).  For Gaussian models with affine-in-x
scorers the classifier's utility is itself closed form (a half-space mass);
anything else is estimated by Monte Carlo with labels integrated out
analytically (each sampled point contributes its exact conditional
probability, not a sampled label, which strictly reduces variance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logit

from .confusion import ConfusionMatrix, Dataset
from .errors import ModeUnsupportedError, SplitDegenerateError
from .metrics import MetricSpec, metric_value
from .scorers import (
    ConstantScorer,
    KernelScorer,
    LogisticScorer,
    Scorer,
    TrueEtaScorer,
    fit_kernel_smoother,
    fit_logistic_mle,
    scorer_from_dict,
    scorer_to_dict,
)
from .synth import (
    GaussianModel,
    HolderModel,
    gaussian_halfspace_confusion,
    population_confusion_gaussian,
    population_confusion_holder,
    true_eta_gaussian,
)
from .thresholds import ThresholdSearchConfig, binary_search_threshold, fixed_point_threshold

__all__ = [
    "EstimatorSpec",
    "PluginClassifier",
    "RegretReport",
    "train_plugin",
    "classify",
    "population_regret",
    "population_confusion_of_model",
]

_SPLIT_TAG = 0x53504C54  # distinguishes split-permutation streams from sampling streams
_EVAL_TAG = 0x4D434556  # distinguishes Monte Carlo evaluation streams
_SPLIT_RETRIES = 10
_MC_SHARD = 1 << 20
_FIXED_POINT_TOL = 1e-10


@dataclass(frozen=True)
class EstimatorSpec:
    """Recipe for fitting a scorer on the estimation half.

    kinds: "logistic" (Newton MLE), "kernel" (needs ``kernel_beta`` and
    ``bandwidth_const``), "true-eta" (needs ``model``), "constant" (needs
    ``p``; diagnostic use).
    """

    kind: str
    kernel_beta: float = 1.0
    bandwidth_const: float = 1.0
    model: GaussianModel | HolderModel | None = None
    p: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "kernel", "true-eta", "constant"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "true-eta" and self.model is None:
            raise ValueError("true-eta estimator needs the generating model")

    def build(self, data: Dataset) -> Scorer:
        if self.kind == "logistic":
            scorer, _ = fit_logistic_mle(data)
            return scorer
        if self.kind == "kernel":
            return fit_kernel_smoother(data, self.kernel_beta, self.bandwidth_const)
        if self.kind == "true-eta":
            return TrueEtaScorer(self.model)
        return ConstantScorer(self.p)


class PluginClassifier:
    """A scorer plus a threshold; predicts +1 iff score(x) > delta."""

    def __init__(self, scorer: Scorer, delta: float, provenance: dict | None = None,
                 fit_data: Dataset | None = None) -> None:
        if not 0.0 <= delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        self.scorer = scorer
        self.delta = float(delta)
        self.provenance = dict(provenance or {})
        #: the estimation half used to fit the scorer (kept for export; not serialized)
        self.fit_data = fit_data

    def predict(self, X) -> np.ndarray:
        return np.where(self.scorer.scores(X) > self.delta, 1, -1)

    def classify(self, x) -> int:
        return 1 if self.scorer.score(x) > self.delta else -1

    def to_dict(self, kernel_train_path: str | None = None) -> dict:
        return {
            "scorer": scorer_to_dict(self.scorer, kernel_train_path),
            "delta": self.delta,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "PluginClassifier":
        return cls(
            scorer_from_dict(payload["scorer"]),
            float(payload["delta"]),
            payload.get("provenance"),
        )


def classify(clf: PluginClassifier, x) -> int:
    """Predicted label at one point; exact ties at the threshold give -1."""
    return clf.classify(x)


def train_plugin(
    metric: MetricSpec,
    data: Dataset,
    estimator: EstimatorSpec,
    config: ThresholdSearchConfig | None = None,
    seed: int = 0,
) -> PluginClassifier:
    """Split / fit / threshold, deterministically in (data, seed).

    The split is a seeded permutation giving the scorer half floor(n/2)
    points and the threshold half the rest.  A half missing one of the two
    labels triggers a fresh permutation, up to 10 attempts.
    """
    n = data.n
    if n < 20:
        raise SplitDegenerateError(f"need at least 20 samples to split, got {n}")
    children = np.random.SeedSequence([int(seed), _SPLIT_TAG]).spawn(_SPLIT_RETRIES)
    n1 = n // 2
    for attempt, child in enumerate(children, start=1):
        perm = np.random.default_rng(child).permutation(n)
        fit_half = data.subset(perm[:n1])
        threshold_half = data.subset(perm[n1:])
        if (
            len(np.unique(fit_half.labels)) == 2
            and len(np.unique(threshold_half.labels)) == 2
        ):
            break
    else:
        raise SplitDegenerateError(
            f"one label missing from a half in all {_SPLIT_RETRIES} split attempts"
        )
    config = config or ThresholdSearchConfig()
    scorer = estimator.build(fit_half)
    result = binary_search_threshold(metric, scorer, threshold_half, config)
    provenance = {
        "metric": metric.name,
        "n1": fit_half.n,
        "n2": threshold_half.n,
        "seed": int(seed),
        "split_attempts": attempt,
        "search": {
            "iterations": result.iterations,
            "evaluations": len(result.h_trace),
            "tolerance": config.resolve_tolerance(threshold_half.n),
            "final_h": result.h_trace[-1][1] if result.h_trace else None,
        },
    }
    return PluginClassifier(scorer, result.delta_hat, provenance, fit_data=fit_half)


def population_confusion_of_model(model: GaussianModel | HolderModel):
    """The model's exact threshold -> confusion curve, as a callable."""
    if isinstance(model, GaussianModel):
        return lambda delta: population_confusion_gaussian(model, delta)
    if isinstance(model, HolderModel):
        return lambda delta: population_confusion_holder(model, delta)
    raise TypeError(f"no closed-form confusion for {type(model).__name__}")


@dataclass(frozen=True)
class RegretReport:
    """Population utilities of the optimum and of a trained classifier."""

    u_star: float
    u_hat: float
    regret: float
    delta_star: float
    delta_hat: float
    mode: dict

    def to_dict(self) -> dict:
        return {
            "u_star": self.u_star,
            "u_hat": self.u_hat,
            "regret": self.regret,
            "delta_star": self.delta_star,
            "delta_hat": self.delta_hat,
            "mode": self.mode,
        }


def _closed_form_confusion(
    model: GaussianModel, scorer: Scorer, delta: float
) -> ConfusionMatrix:
    if isinstance(scorer, ConstantScorer):
        positive = 1.0 if scorer.p > delta else 0.0
        kappa = model.kappa
        return ConfusionMatrix(
            kappa * positive,
            (1 - kappa) * positive,
            kappa * (1 - positive),
            (1 - kappa) * (1 - positive),
        )
    if isinstance(scorer, LogisticScorer):
        return gaussian_halfspace_confusion(model, scorer.weights, scorer.intercept, delta)
    if isinstance(scorer, TrueEtaScorer) and isinstance(scorer.model, GaussianModel):
        inner = scorer.model
        return gaussian_halfspace_confusion(
            model, inner.mu, float(logit(inner.kappa)), delta
        )
    raise ModeUnsupportedError(
        f"closed-form evaluation needs an affine score rule; "
        f"got {type(scorer).__name__}"
    )


def _monte_carlo_confusion(
    model: GaussianModel | HolderModel,
    clf: PluginClassifier,
    m: int,
    seed: int,
) -> ConfusionMatrix:
    """Average exact conditional confusion over m sampled feature points.

    Sharded into fixed-size blocks with independently derived substreams,
    so the result depends only on (m, seed), not on scheduling.
    """
    shards = math.ceil(m / _MC_SHARD)
    children = np.random.SeedSequence([int(seed), _EVAL_TAG]).spawn(shards)
    sums = np.zeros(4)
    remaining = m
    for child in children:
        k = min(_MC_SHARD, remaining)
        remaining -= k
        rng = np.random.default_rng(child)
        if isinstance(model, GaussianModel):
            comp = rng.random(k) < model.kappa
            X = rng.standard_normal((k, model.dim))
            X += np.where(comp, 0.5, -0.5)[:, None] * model.mu[None, :]
            eta = np.asarray(true_eta_gaussian(model, X))
        else:
            X = rng.random((k, 1))
            eta = model.eta(X[:, 0])
        pred = clf.scorer.scores(X) > clf.delta
        sums[0] += float(eta[pred].sum())
        sums[1] += float((1.0 - eta[pred]).sum())
        sums[2] += float(eta[~pred].sum())
        sums[3] += float((1.0 - eta[~pred]).sum())
    return ConfusionMatrix.from_array(sums / m)


def population_regret(
    metric: MetricSpec,
    clf: PluginClassifier,
    model: GaussianModel | HolderModel,
    mode: str = "closed-form",
    mc_samples: int = 1_000_000,
    mc_seed: int = 0,
) -> RegretReport:
    """Utility gap between the population optimum and a classifier.

    The optimum's threshold comes from the fixed point of the model's exact
    confusion curve, so ``regret >= -1e-9`` in closed-form mode; Monte
    Carlo estimates can go slightly negative within sampling noise.
    """
    pop_confusion = population_confusion_of_model(model)
    delta_star = fixed_point_threshold(metric, pop_confusion, _FIXED_POINT_TOL)
    u_star = metric_value(metric, pop_confusion(delta_star))
    if mode == "closed-form":
        if not isinstance(model, GaussianModel):
            raise ModeUnsupportedError(
                "closed-form evaluation is only available for the Gaussian model"
            )
        if isinstance(clf.scorer, KernelScorer):
            raise ModeUnsupportedError("closed-form evaluation unavailable for kernel scorers")
        u_hat = metric_value(metric, _closed_form_confusion(model, clf.scorer, clf.delta))
        mode_info = {"mode": "closed-form"}
    elif mode == "monte-carlo":
        if mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        confusion = _monte_carlo_confusion(model, clf, int(mc_samples), int(mc_seed))
        u_hat = metric_value(metric, confusion)
        mode_info = {"mode": "monte-carlo", "m": int(mc_samples), "seed": int(mc_seed)}
    else:
        raise ModeUnsupportedError(f"unknown evaluation mode {mode!r}")
    return RegretReport(
        u_star=float(u_star),
        u_hat=float(u_hat),
        regret=float(u_star - u_hat),
        delta_star=float(delta_star),
        delta_hat=float(clf.delta),
        mode=mode_info,
    )
