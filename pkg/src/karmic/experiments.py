"""Convergence-rate experiment harness: regret vs sample size, with slopes.

A run is a grid of (n, seed) rows.  Each row samples a fresh training set,
trains the plug-in classifier, and evaluates its population regret; rows
are independent and may execute on a process pool without changing any
output (fixed task order, per-row derived evaluation seeds).  Aggregation
reports the per-n median regret and interquartile range, and the headline
statistic is the least-squares slope of log(median regret) against log(n).

Outputs: a CSV of rows (stable column set, floats via repr so identical
runs are byte-identical) and a JSON summary (schema 1) carrying aggregates,
the slope fit, and wall-time totals.  Config files are plain ``key = value``
text; see ``ExperimentConfig.from_file``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat

import numpy as np

from .errors import InsufficientPointsError, KarmicError
from .metrics import parse_metric
from .pipeline import EstimatorSpec, population_regret, train_plugin
from .synth import GaussianModel, HolderModel, sample_gaussian, sample_holder
from .thresholds import ThresholdSearchConfig

__all__ = [
    "ExperimentConfig",
    "RateRow",
    "RateTable",
    "run_rate_experiment",
    "fit_loglog_slope",
    "parse_config_text",
]

logger = logging.getLogger(__name__)

_EVAL_SEED_BASE = 1 << 40
_EVAL_SEED_STRIDE = 10007
CSV_COLUMNS = ("n", "seed", "regret", "delta_hat", "delta_star", "error")


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of a rate experiment.

    ``tolerance`` is either the string "logn-over-n" (per-search default,
    max(log n2 / n2, 1e-8) on the threshold half) or a fixed float.
    ``eval_mode`` defaults to closed-form when the model/estimator pair
    supports it and Monte Carlo otherwise.
    """

    model: GaussianModel | HolderModel
    metric: str
    estimator: EstimatorSpec
    n_list: tuple[int, ...]
    seeds: int
    tolerance: str | float = "logn-over-n"
    eval_mode: str = ""
    mc_samples: int = 1_000_000
    workers: int = 1
    out: str | None = None

    def __post_init__(self) -> None:
        parse_metric(self.metric)  # validate the name eagerly
        n_list = tuple(int(n) for n in self.n_list)
        object.__setattr__(self, "n_list", n_list)
        if len(n_list) < 1 or any(n < 20 for n in n_list):
            raise ValueError("n_list must hold sample sizes >= 20")
        if any(b <= a for a, b in zip(n_list, n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if not 1 <= self.seeds <= 10_000:
            raise ValueError("seeds must lie in [1, 10000]")
        if isinstance(self.tolerance, str):
            if self.tolerance != "logn-over-n":
                raise ValueError("tolerance must be 'logn-over-n' or a float")
        elif not 0.0 < float(self.tolerance) < 1.0:
            raise ValueError("fixed tolerance must lie in (0, 1)")
        if not self.eval_mode:
            closed = isinstance(self.model, GaussianModel) and self.estimator.kind != "kernel"
            object.__setattr__(self, "eval_mode", "closed-form" if closed else "monte-carlo")
        if self.eval_mode not in ("closed-form", "monte-carlo"):
            raise ValueError("eval_mode must be 'closed-form' or 'monte-carlo'")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def search_config(self) -> ThresholdSearchConfig:
        if isinstance(self.tolerance, str):
            return ThresholdSearchConfig()
        return ThresholdSearchConfig(tolerance=float(self.tolerance))

    def to_dict(self) -> dict:
        est = {
            "kind": self.estimator.kind,
            "kernel_beta": self.estimator.kernel_beta,
            "bandwidth_const": self.estimator.bandwidth_const,
        }
        if self.estimator.kind == "constant":
            est["p"] = self.estimator.p
        return {
            "model": self.model.to_dict(),
            "metric": self.metric,
            "estimator": est,
            "n_list": list(self.n_list),
            "seeds": self.seeds,
            "tolerance": self.tolerance,
            "eval_mode": self.eval_mode,
            "mc_samples": self.mc_samples,
            "workers": self.workers,
        }

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(parse_config_text(fh.read()))

    @classmethod
    def from_mapping(cls, raw: dict[str, str]) -> "ExperimentConfig":
        known = {
            "model", "mu", "kappa", "eta", "beta", "metric", "estimator",
            "kernel_beta", "kernel_const", "n_list", "seeds", "tolerance",
            "eval", "mc_samples", "workers", "out",
        }
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = {"model", "metric", "estimator", "n_list", "seeds"} - set(raw)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        model_kind = raw["model"].strip().lower()
        if model_kind == "gaussian":
            if "mu" not in raw or "kappa" not in raw:
                raise ValueError("gaussian model needs 'mu' and 'kappa'")
            mu = np.array([float(v) for v in raw["mu"].split(",")])
            model: GaussianModel | HolderModel = GaussianModel(mu, float(raw["kappa"]))
        elif model_kind == "holder":
            model = HolderModel(raw.get("eta", "sine").strip(), float(raw.get("beta", 1.0)))
        else:
            raise ValueError(f"unknown model {raw['model']!r}")
        est_raw = raw["estimator"].strip().lower()
        default_beta = model.beta if isinstance(model, HolderModel) else 1.0
        kernel_beta = float(raw.get("kernel_beta", default_beta))
        kernel_const = float(raw.get("kernel_const", 1.0))
        if est_raw.startswith("constant:"):
            estimator = EstimatorSpec("constant", p=float(est_raw.split(":", 1)[1]))
        elif est_raw == "true-eta":
            estimator = EstimatorSpec("true-eta", model=model)
        elif est_raw in ("logistic", "kernel"):
            estimator = EstimatorSpec(
                est_raw, kernel_beta=kernel_beta, bandwidth_const=kernel_const
            )
        else:
            raise ValueError(f"unknown estimator {raw['estimator']!r}")
        tolerance: str | float = raw.get("tolerance", "logn-over-n").strip()
        if tolerance != "logn-over-n":
            tolerance = float(tolerance)
        return cls(
            model=model,
            metric=raw["metric"].strip(),
            estimator=estimator,
            n_list=tuple(int(float(v)) for v in raw["n_list"].split(",")),
            seeds=int(raw["seeds"]),
            tolerance=tolerance,
            eval_mode=raw.get("eval", "").strip(),
            mc_samples=int(float(raw.get("mc_samples", 1_000_000))),
            workers=int(raw.get("workers", 1)),
            out=raw.get("out"),
        )


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep or not key.strip() or not value.strip():
            raise ValueError(f"config line {lineno} is not 'key = value': {line!r}")
        out[key.strip().lower()] = value.strip()
    return out


@dataclass(frozen=True)
class RateRow:
    """One (n, seed) outcome; failed rows carry an error code and NaNs."""

    n: int
    seed: int
    regret: float
    delta_hat: float
    delta_star: float
    wall_time: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class RateTable:
    """Ordered experiment rows plus the config that produced them."""

    rows: list[RateRow]
    config: ExperimentConfig | None = None

    def aggregates(self) -> list[dict]:
        """Per-n medians and quartiles over the successful rows."""
        out = []
        for n in sorted({row.n for row in self.rows}):
            group = [row for row in self.rows if row.n == n]
            good = np.array([row.regret for row in group if row.ok])
            entry: dict = {
                "n": n,
                "rows": len(group),
                "failures": sum(not row.ok for row in group),
                "median_wall_time": float(np.median([row.wall_time for row in group])),
            }
            if good.size:
                entry["median_regret"] = float(np.median(good))
                entry["q25_regret"] = float(np.quantile(good, 0.25))
                entry["q75_regret"] = float(np.quantile(good, 0.75))
            out.append(entry)
        return out

    def csv_text(self) -> str:
        """Stable CSV image of the rows (wall time intentionally excluded)."""
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(
                f"{row.n},{row.seed},{row.regret!r},{row.delta_hat!r},"
                f"{row.delta_star!r},{row.error or ''}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.csv_text())

    def summary(self) -> dict:
        """JSON-ready summary: aggregates, slope fit, wall time, failures."""
        payload: dict = {"schema": 1, "aggregates": self.aggregates()}
        if self.config is not None:
            payload["config"] = self.config.to_dict()
        try:
            slope, intercept, r2 = fit_loglog_slope(self)
            payload["slope"] = {"slope": slope, "intercept": intercept, "r2": r2}
        except (InsufficientPointsError, KarmicError) as exc:
            payload["slope"] = {"error": getattr(exc, "code", "error"), "message": str(exc)}
        payload["total_wall_time"] = float(sum(row.wall_time for row in self.rows))
        payload["failures"] = sum(not row.ok for row in self.rows)
        return payload

    def write_summary(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def eval_seed_for(n: int, seed: int) -> int:
    """Evaluation seed for a row, disjoint from all data/split seeds."""
    return _EVAL_SEED_BASE + _EVAL_SEED_STRIDE * int(n) + int(seed)


def _run_row(cfg: ExperimentConfig, n: int, seed: int) -> RateRow:
    start = time.perf_counter()
    metric = parse_metric(cfg.metric)
    try:
        if isinstance(cfg.model, GaussianModel):
            data = sample_gaussian(cfg.model, n, seed)
        else:
            data = sample_holder(cfg.model, n, seed)
        clf = train_plugin(metric, data, cfg.estimator, cfg.search_config(), seed=seed)
        report = population_regret(
            metric,
            clf,
            cfg.model,
            mode=cfg.eval_mode,
            mc_samples=cfg.mc_samples,
            mc_seed=eval_seed_for(n, seed),
        )
        return RateRow(
            n=n,
            seed=seed,
            regret=report.regret,
            delta_hat=report.delta_hat,
            delta_star=report.delta_star,
            wall_time=time.perf_counter() - start,
        )
    except (KarmicError, ValueError) as exc:
        return RateRow(
            n=n,
            seed=seed,
            regret=math.nan,
            delta_hat=math.nan,
            delta_star=math.nan,
            wall_time=time.perf_counter() - start,
            error=getattr(exc, "code", "invalid-value"),
        )


def resolve_workers(cfg: ExperimentConfig) -> int:
    """Worker count: the KARMIC_THREADS env var overrides the config."""
    env = os.environ.get("KARMIC_THREADS")
    if env is not None:
        count = int(env)
        if count < 1:
            raise ValueError("KARMIC_THREADS must be >= 1")
        return count
    return cfg.workers


def run_rate_experiment(cfg: ExperimentConfig) -> RateTable:
    """Run every (n, seed) row; errors are recorded, not raised.

    Row order is (n ascending, seed ascending) regardless of the worker
    pool, and all randomness is derived per row, so the table is a pure
    function of the config.
    """
    tasks = [(n, seed) for n in cfg.n_list for seed in range(cfg.seeds)]
    workers = resolve_workers(cfg)
    if workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(
                    _run_row,
                    repeat(cfg),
                    [t[0] for t in tasks],
                    [t[1] for t in tasks],
                    chunksize=chunk,
                )
            )
    else:
        rows = [_run_row(cfg, n, seed) for n, seed in tasks]
    return RateTable(rows, cfg)


def fit_loglog_slope(table: RateTable) -> tuple[float, float, float]:
    """OLS fit of log(median regret) on log(n); returns (slope, intercept, r2).

    Sample sizes whose median regret is <= 1e-12 cannot enter a log fit;
    they are dropped with a warning.  Needs >= 3 usable sample sizes.
    """
    points = []
    excluded = []
    for entry in table.aggregates():
        median = entry.get("median_regret")
        if median is None or not math.isfinite(median) or median <= 1e-12:
            excluded.append(entry["n"])
            continue
        points.append((math.log(entry["n"]), math.log(median)))
    if excluded:
        logger.warning("slope fit excluded n=%s (median regret <= 1e-12 or undefined)",
                       excluded)
    if len(points) < 3:
        raise InsufficientPointsError(
            f"slope fit needs >= 3 usable sample sizes, got {len(points)}"
        )
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    total = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if total == 0.0 else 1.0 - float((residuals**2).sum()) / total
    return float(slope), float(intercept), float(r2)
