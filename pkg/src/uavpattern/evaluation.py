"""Randomized cross-validation benchmark and local noise statistics."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, learning
from .errors import ConfigError, DataError
from .geometry import wrap_angle
from .learning import TrainingSet, residual_targets
from .models import SPEC_GRAMMAR, parse_spec

AIC_FORMULA = "2*k + n*ln(rss/n)"
REPORT_COLUMNS = ("method", "rmse_db", "param_count", "aic", "t_lin_s", "q95_db")


@dataclass(frozen=True)
class CrossValConfig:
    splits: int = 30
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if int(self.splits) != self.splits or self.splits < 1:
            raise ConfigError("splits must be a positive integer")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")


def split(n: int, cfg: CrossValConfig, split_index: int):
    """Seeded random partition into sorted ``(train, test)`` index arrays."""
    if n < 2:
        raise DataError("need at least two samples to split")
    n_test = int(min(max(math.floor(n * cfg.test_fraction + 0.5), 1), n - 1))
    perm = np.random.default_rng([cfg.seed, split_index]).permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


# -- metrics ------------------------------------------------------------------

def rmse(residuals) -> float:
    r = np.asarray(residuals, dtype=float)
    if r.size == 0:
        raise ValueError("rmse of an empty residual set")
    return float(np.sqrt(np.mean(r * r)))


def q95(abs_residuals) -> float:
    """Nearest-rank 95th percentile: the ``ceil(0.95 n)``-th smallest value."""
    a = np.sort(np.abs(np.asarray(abs_residuals, dtype=float)))
    if a.size == 0:
        raise ValueError("q95 of an empty residual set")
    return float(a[math.ceil(0.95 * a.size) - 1])


def aic(n: int, k: int, rss: float) -> float:
    if n <= 0 or not rss > 0:
        raise ValueError(f"aic needs n > 0 and rss > 0, got n={n}, rss={rss}")
    return float(2 * k + n * math.log(rss / n))


# -- methods ------------------------------------------------------------------

@dataclass(frozen=True)
class Method:
    """A named regressor: ``mean``, ``knn:K[:raw]`` or any basis selector."""

    label: str
    kind: str
    spec: object = None
    k: int = 10
    embedding: str = "sincos"
    kappa: float = learning.DEFAULT_KAPPA

    def fit(self, ts: TrainingSet):
        if self.kind == "mean":
            return baselines.mean_fit(ts)
        if self.kind == "knn":
            return baselines.knn_fit(ts, self.k, self.embedding)
        return learning.fit(ts, self.spec, self.kappa)


def parse_method(text: str, kappa: float = learning.DEFAULT_KAPPA) -> Method:
    t = text.strip().lower()
    if t == "mean":
        return Method("mean", "mean")
    if t.startswith("knn"):
        parts = t.split(":")
        try:
            k = int(parts[1]) if len(parts) > 1 else 10
        except ValueError:
            k = 0
        embedding = parts[2] if len(parts) > 2 else "sincos"
        if k < 1 or len(parts) > 3 or embedding not in ("sincos", "raw"):
            raise ConfigError(f"invalid k-NN selector {text!r}; valid form: knn:K[:sincos|raw]")
        return Method(t, "knn", k=k, embedding=embedding)
    try:
        spec = parse_spec(t)
    except ConfigError:
        raise ConfigError(
            f"unknown method {text!r}; valid forms: mean, knn:K[:raw], {', '.join(SPEC_GRAMMAR)}"
        ) from None
    return Method(spec.label, "basis", spec=spec, kappa=kappa)


def _aic_params(model) -> int:
    if isinstance(model, learning.DecoupledModel):
        return 2 * model.param_count
    return model.param_count


@dataclass
class FitReport:
    method: str
    rmse: float
    param_count: int
    aic: float
    t_lin: float
    q95: float
    per_split: dict = field(default_factory=dict)
    error: str | None = None

    def row(self) -> dict:
        return {"method": self.method, "rmse_db": self.rmse, "param_count": self.param_count,
                "aic": self.aic, "t_lin_s": self.t_lin, "q95_db": self.q95}


def _run_split(method: Method, ts: TrainingSet, y: np.ndarray, cfg: CrossValConfig, i: int) -> dict:
    train_idx, test_idx = split(len(ts), cfg, i)
    train, test = ts.subset(train_idx), ts.subset(test_idx)
    t0 = time.perf_counter()
    model = method.fit(train)
    t_lin = time.perf_counter() - t0
    r = y[test_idx] - model.joint_gain(test.obs)
    timings = getattr(model, "timings", {})
    return {
        "rmse": rmse(r), "q95": q95(np.abs(r)),
        "aic": aic(len(r), _aic_params(model), float(np.sum(r * r))),
        "t_lin": t_lin, "t_build": timings.get("build_s", 0.0), "t_solve": timings.get("solve_s", t_lin),
        "param_count": model.param_count,
    }


def evaluate_method(method: Method, ts: TrainingSet, cfg: CrossValConfig, workers: int = 1) -> FitReport:
    y = residual_targets(ts)
    indices = range(cfg.splits)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda i: _run_split(method, ts, y, cfg, i), indices))
    else:
        results = [_run_split(method, ts, y, cfg, i) for i in indices]
    per_split = {key: [res[key] for res in results]
                 for key in ("rmse", "aic", "q95", "t_lin", "t_build", "t_solve")}
    counts = {res["param_count"] for res in results}
    return FitReport(
        method=method.label,
        rmse=float(np.mean(per_split["rmse"])),
        param_count=int(max(counts)),
        aic=float(np.mean(per_split["aic"])),
        t_lin=float(np.mean(per_split["t_lin"])),
        q95=float(np.mean(per_split["q95"])),
        per_split=per_split,
    )


def benchmark(ts: TrainingSet, methods, cfg: CrossValConfig = CrossValConfig(),
              kappa: float = learning.DEFAULT_KAPPA, workers: int = 1) -> list[FitReport]:
    """One :class:`FitReport` per method, in input order.

    Metrics are per-split values averaged over all splits. A method that
    raises is reported with NaN metrics and its error message.
    """
    methods = [m if isinstance(m, Method) else parse_method(m, kappa) for m in methods]
    reports = []
    for m in methods:
        try:
            reports.append(evaluate_method(m, ts, cfg, workers))
        except Exception as exc:  # recorded, not fatal
            nan = float("nan")
            reports.append(FitReport(m.label, nan, 0, nan, nan, nan, error=f"{type(exc).__name__}: {exc}"))
    return reports


# -- report export ------------------------------------------------------------

def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for rep in reports:
        row = rep.row()
        w.writerow([row["method"]] + [repr(float(row[c])) if c != "param_count" else row[c]
                                      for c in REPORT_COLUMNS[1:]])
    return buf.getvalue()


def reports_to_json(reports, cfg: CrossValConfig, provenance: dict | None = None) -> str:
    doc = {
        "config": {"splits": cfg.splits, "test_fraction": cfg.test_fraction, "seed": cfg.seed},
        "aggregation": "mean over splits of per-split test metrics",
        "aic_formula": AIC_FORMULA,
        "aic_parameters": "total fitted coefficients (2*|phi| for decoupled models)",
        "q95_method": "nearest-rank",
        "t_lin_definition": "design-matrix build plus solve; build and solve recorded separately",
        "provenance": provenance or {},
        "methods": [
            {**rep.row(), "error": rep.error, "per_split": rep.per_split} for rep in reports
        ],
    }
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


# -- local noise analysis -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class NoiseAnalysis:
    max_spread_deg: np.ndarray
    rssi_std_db: np.ndarray

    def __len__(self):
        return len(self.rssi_std_db)


def local_noise_analysis(ts: TrainingSet, k: int = 10, embedding: str = "sincos",
                         chunk: int = 128) -> NoiseAnalysis:
    """Neighbourhood statistics of every sample.

    For each sample, its ``k`` nearest other samples in the k-NN feature space
    give the largest wrapped angular difference between any two neighbours in
    any of the four angle features (degrees) and the sample standard deviation
    of their received power (dB).
    """
    n = len(ts)
    if n <= k:
        raise DataError(f"need more than k={k} samples, got {n}")
    f = baselines.embed_features(ts.obs, embedding)
    f = f / baselines.feature_scales(f)
    angles = ts.obs.features()[:, :4]
    spread = np.empty(n)
    std = np.empty(n)
    for start in range(0, n, chunk):
        rows = np.arange(start, min(start + chunk, n))
        dist = np.sqrt(((f[rows, None, :] - f[None, :, :]) ** 2).sum(-1))
        dist[np.arange(len(rows)), rows] = np.inf
        idx, _ = baselines.nearest(dist, k)
        a = angles[idx]
        diff = np.abs(wrap_angle(a[:, :, None, :] - a[:, None, :, :]))
        spread[rows] = np.degrees(diff.max(axis=(1, 2, 3)))
        std[rows] = np.std(ts.p_rx[idx], axis=1, ddof=1)
    return NoiseAnalysis(spread, std)
