"""Conditional-probability scorers and their fitting routines.

A scorer maps feature vectors to estimates of P(Y=+1 | X=x) in [0, 1].
Four variants share the interface: a constant, the exact conditional
probability of a synthetic model, a logistic model fit by Newton maximum
likelihood, and a Nadaraya-Watson kernel smoother with the Epanechnikov
kernel.  Fitted scorers are immutable and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .confusion import Dataset
from .errors import (
    DegenerateDesignError,
    DimensionMismatchError,
    EmptyDataError,
    SeparableDataError,
)
from .synth import GaussianModel, HolderModel, true_eta_gaussian

__all__ = [
    "Scorer",
    "ConstantScorer",
    "TrueEtaScorer",
    "LogisticScorer",
    "KernelScorer",
    "LogisticFitReport",
    "fit_logistic_mle",
    "fit_kernel_smoother",
    "scorer_to_dict",
    "scorer_from_dict",
]

KERNEL_CLIP = 1e-6
_RIDGE = 1e-8
_WEIGHT_NORM_LIMIT = 1e6


class Scorer:
    """Interface: ``scores`` on a feature matrix, ``score`` on one point."""

    #: expected feature dimension, or None when any dimension is accepted
    dim: int | None = None

    def scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score(self, x) -> float:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        if arr.ndim != 1:
            raise DimensionMismatchError("score expects a single feature vector")
        return float(self.scores(arr[None, :])[0])

    def _check_matrix(self, X) -> np.ndarray:
        arr = np.asarray(X, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or (self.dim is not None and arr.shape[1] != self.dim):
            raise DimensionMismatchError(
                f"expected points of dimension {self.dim}, got shape {np.shape(X)}"
            )
        return arr


@dataclass(frozen=True)
class ConstantScorer(Scorer):
    """Scores every point as the same probability."""

    p: float
    dim = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("constant score must lie in [0, 1]")

    def scores(self, X) -> np.ndarray:
        arr = np.asarray(X, dtype=float)
        n = arr.shape[0] if arr.ndim else 1
        return np.full(n, self.p)


class TrueEtaScorer(Scorer):
    """Exact conditional probability of a synthetic model."""

    def __init__(self, model: GaussianModel | HolderModel) -> None:
        self.model = model
        self.dim = model.dim

    def scores(self, X) -> np.ndarray:
        arr = self._check_matrix(X)
        if isinstance(self.model, GaussianModel):
            return np.asarray(true_eta_gaussian(self.model, arr))
        return self.model.eta(arr[:, 0])


class LogisticScorer(Scorer):
    """Sigmoid of an affine score: ``sigmoid(w . x + b)``."""

    def __init__(self, weights, intercept: float) -> None:
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.isfinite(intercept):
            raise ValueError("weights and intercept must be finite")
        self.weights = w
        self.intercept = float(intercept)
        self.dim = int(w.size)

    def scores(self, X) -> np.ndarray:
        arr = self._check_matrix(X)
        return expit(arr @ self.weights + self.intercept)


class KernelScorer(Scorer):
    """Nadaraya-Watson estimate with the Epanechnikov kernel.

    Weight of a training point at squared scaled distance u^2 is
    ``max(0, 1 - u^2)`` with u = |x_i - x| / h.  Points whose window
    contains no training data (or a vanishing weight sum) fall back to the
    global positive rate; outputs are clipped away from {0, 1} so that
    downstream thresholds stay evaluable.

    For 1-d training data the window sums are O(log n) per query via
    prefix sums of the first three moments, split by label.
    """

    def __init__(self, train_x, train_y, bandwidth: float, beta: float) -> None:
        X = np.asarray(train_x, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(train_y)
        if X.shape[0] == 0:
            raise EmptyDataError("kernel smoother needs training data")
        if y.shape != (X.shape[0],):
            raise ValueError("labels must be one per training row")
        if not bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        self.bandwidth = float(bandwidth)
        self.beta = float(beta)
        self.dim = X.shape[1]
        self.global_rate = float(np.clip((y == 1).mean(), KERNEL_CLIP, 1 - KERNEL_CLIP))
        self._n = X.shape[0]
        if self.dim == 1:
            order = np.argsort(X[:, 0], kind="stable")
            x = X[order, 0]
            pos = (y[order] == 1).astype(float)
            self._x = x
            self._moments = self._prefix_moments(x, np.ones_like(x))
            self._pos_moments = self._prefix_moments(x, pos)
        else:
            self._train = X
            self._pos = (y == 1).astype(float)

    @staticmethod
    def _prefix_moments(x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        """Prefix sums of mask * (1, x, x^2), padded with a leading zero row."""
        stacked = np.stack([mask, mask * x, mask * x * x], axis=1)
        out = np.zeros((x.size + 1, 3))
        np.cumsum(stacked, axis=0, out=out[1:])
        return out

    def _window_sum(self, moments: np.ndarray, lo, hi, q: np.ndarray) -> np.ndarray:
        """Sum of Epanechnikov weights over ranks [lo, hi) at queries q.

        Expands sum(1 - (x - q)^2 / h^2) into the three window moments.
        """
        h2 = self.bandwidth**2
        s0 = moments[hi, 0] - moments[lo, 0]
        s1 = moments[hi, 1] - moments[lo, 1]
        s2 = moments[hi, 2] - moments[lo, 2]
        return s0 * (1.0 - q * q / h2) + s1 * (2.0 * q / h2) - s2 / h2

    def scores(self, X) -> np.ndarray:
        arr = self._check_matrix(X)
        if self.dim == 1:
            q = arr[:, 0]
            lo = np.searchsorted(self._x, q - self.bandwidth, side="left")
            hi = np.searchsorted(self._x, q + self.bandwidth, side="right")
            den = self._window_sum(self._moments, lo, hi, q)
            num = self._window_sum(self._pos_moments, lo, hi, q)
        else:
            den = np.empty(arr.shape[0])
            num = np.empty(arr.shape[0])
            chunk = max(1, int(2**22 // max(self._n, 1)))
            for start in range(0, arr.shape[0], chunk):
                block = arr[start : start + chunk]
                d2 = ((block[:, None, :] - self._train[None, :, :]) ** 2).sum(axis=2)
                w = np.maximum(0.0, 1.0 - d2 / self.bandwidth**2)
                den[start : start + block.shape[0]] = w.sum(axis=1)
                num[start : start + block.shape[0]] = w @ self._pos
        out = np.full(arr.shape[0], self.global_rate)
        ok = den > 1e-12
        out[ok] = num[ok] / den[ok]
        return np.clip(out, KERNEL_CLIP, 1 - KERNEL_CLIP)


@dataclass(frozen=True)
class LogisticFitReport:
    """Newton fit diagnostics; ``nll_path`` holds accepted objective values."""

    weights: np.ndarray
    intercept: float
    iterations: int
    grad_norm: float
    converged: bool
    nll_path: tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "intercept": self.intercept,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "converged": self.converged,
            "nll_path": list(self.nll_path),
        }


def _mean_nll(margins: np.ndarray) -> float:
    """Mean logistic loss log(1 + exp(-margin)), computed stably."""
    return float(np.logaddexp(0.0, -margins).mean())


def fit_logistic_mle(
    data: Dataset, tol: float = 1e-10, max_iter: int = 100
) -> tuple[LogisticScorer, LogisticFitReport]:
    """Maximum-likelihood logistic fit by damped Newton iterations.

    Uses a ridge of 1e-8 on the Hessian and halves the step while the mean
    negative log-likelihood increases.  Converged means the mean-gradient
    infinity norm dropped to ``tol``.  Diverging weights signal separable
    data; a Hessian that stays singular past the ridge signals a
    rank-deficient design.
    """
    if data.n == 0:
        raise EmptyDataError("cannot fit a logistic model on no data")
    if len(np.unique(data.labels)) < 2:
        raise ValueError("logistic fit needs both labels present")
    if data.n <= data.dim:
        raise ValueError(f"need n > d, got n={data.n}, d={data.dim}")
    X = np.column_stack([data.features, np.ones(data.n)])
    y = data.labels.astype(float)
    t = (y + 1.0) / 2.0
    theta = np.zeros(X.shape[1])
    margins = np.zeros(data.n)
    nll = _mean_nll(margins)
    nll_path = [nll]
    grad_norm = math.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = expit(X @ theta)
        grad = X.T @ (p - t) / data.n
        grad_norm = float(np.abs(grad).max())
        if grad_norm <= tol:
            converged = True
            iterations -= 1
            break
        curvature = p * (1.0 - p)
        hessian = (X.T * curvature) @ X / data.n
        hessian[np.diag_indices_from(hessian)] += _RIDGE
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError as exc:
            raise DegenerateDesignError(
                "Hessian is singular beyond the ridge; features are degenerate"
            ) from exc
        scale = 1.0
        for _ in range(30):
            candidate = theta - scale * step
            cand_nll = _mean_nll(y * (X @ candidate))
            if cand_nll <= nll:
                break
            scale *= 0.5
        else:
            break
        theta = candidate
        nll = cand_nll
        nll_path.append(nll)
        if float(np.abs(theta).max()) > _WEIGHT_NORM_LIMIT:
            raise SeparableDataError(
                "weights diverged past 1e6; data looks linearly separable"
            )
    else:
        p = expit(X @ theta)
        grad_norm = float(np.abs(X.T @ (p - t) / data.n).max())
        converged = grad_norm <= tol
    scorer = LogisticScorer(theta[:-1], float(theta[-1]))
    report = LogisticFitReport(
        weights=scorer.weights,
        intercept=scorer.intercept,
        iterations=iterations,
        grad_norm=grad_norm,
        converged=converged,
        nll_path=tuple(nll_path),
    )
    return scorer, report


def fit_kernel_smoother(
    data: Dataset, beta: float, bandwidth_const: float = 1.0
) -> KernelScorer:
    """Kernel conditional-probability fit with rate-optimal bandwidth.

    The bandwidth is ``bandwidth_const * n**(-1 / (2 beta + d))`` for
    nominal smoothness ``beta``.
    """
    if data.n == 0:
        raise EmptyDataError("cannot fit a kernel smoother on no data")
    if data.n < 10:
        raise ValueError("kernel smoother needs n >= 10")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not bandwidth_const > 0:
        raise ValueError("bandwidth_const must be positive")
    h = bandwidth_const * data.n ** (-1.0 / (2.0 * beta + data.dim))
    return KernelScorer(data.features, data.labels, h, beta)


def scorer_to_dict(scorer: Scorer, kernel_train_path: str | None = None) -> dict:
    """JSON-ready form of a scorer.

    Kernel scorers store a reference to their training file rather than the
    sample itself; pass its path via ``kernel_train_path``.
    """
    if isinstance(scorer, ConstantScorer):
        return {"kind": "constant", "p": scorer.p}
    if isinstance(scorer, LogisticScorer):
        return {
            "kind": "logistic",
            "weights": [float(v) for v in scorer.weights],
            "intercept": scorer.intercept,
        }
    if isinstance(scorer, TrueEtaScorer):
        return {"kind": "true-eta", "model": scorer.model.to_dict()}
    if isinstance(scorer, KernelScorer):
        if kernel_train_path is None:
            raise ValueError("kernel scorers serialize by training-file reference; "
                             "pass kernel_train_path")
        return {
            "kind": "kernel",
            "train_path": kernel_train_path,
            "bandwidth": scorer.bandwidth,
            "beta": scorer.beta,
        }
    raise TypeError(f"cannot serialize scorer of type {type(scorer).__name__}")


def scorer_from_dict(payload: dict) -> Scorer:
    """Inverse of :func:`scorer_to_dict`; kernel variants reload their file."""
    kind = payload.get("kind")
    if kind == "constant":
        return ConstantScorer(float(payload["p"]))
    if kind == "logistic":
        return LogisticScorer(payload["weights"], float(payload["intercept"]))
    if kind == "true-eta":
        return TrueEtaScorer(model_from_dict(payload["model"]))
    if kind == "kernel":
        from .dataio import load_dataset_csv

        data, _ = load_dataset_csv(payload["train_path"])
        return KernelScorer(
            data.features, data.labels, float(payload["bandwidth"]), float(payload["beta"])
        )
    raise ValueError(f"unknown scorer kind {kind!r}")


def model_from_dict(payload: dict):
    """Rebuild a synthetic model from its ``to_dict`` form."""
    tag = payload.get("model")
    if tag == "gaussian":
        return GaussianModel(np.asarray(payload["mu"], dtype=float), float(payload["kappa"]))
    if tag == "holder":
        return HolderModel(payload.get("eta_tag", "sine"), float(payload.get("beta", 1.0)))
    raise ValueError(f"unknown model tag {tag!r}")
