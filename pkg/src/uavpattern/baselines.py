"""Reference regressors of the joint gain: global mean and k nearest neighbours.

Neither can attribute gain to a particular UAV; they predict the joint
residual target only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .geometry import Observations, path_loss_db
from .learning import TrainingSet, residual_targets

ANGLE_COLUMNS = (0, 1, 2, 3)


@dataclass(frozen=True)
class MeanModel:
    mu: float
    param_count: int = 1

    def joint_gain(self, obs: Observations) -> np.ndarray:
        return np.full(len(obs), self.mu)


def mean_fit(ts: TrainingSet) -> MeanModel:
    y = residual_targets(ts)
    if y.size == 0:
        raise DataError("cannot fit a mean to an empty set")
    return MeanModel(float(np.mean(y)))


def embed_features(obs_or_features, embedding: str = "sincos") -> np.ndarray:
    """Map the five observed variables to the k-NN feature space.

    ``sincos`` replaces each angle by its (sin, cos) pair so distances do not
    jump at the azimuth seam; ``raw`` keeps the angles as they are. The
    distance column is always last.
    """
    f = obs_or_features.features() if isinstance(obs_or_features, Observations) else np.asarray(obs_or_features, float)
    f = np.atleast_2d(f)
    if embedding == "raw":
        return f.copy()
    if embedding != "sincos":
        raise ValueError(f"unknown embedding {embedding!r}")
    ang = f[:, ANGLE_COLUMNS]
    return np.column_stack([np.sin(ang), np.cos(ang), f[:, 4:]])


@dataclass(frozen=True, eq=False)
class KnnModel:
    """Inverse-distance-weighted k-NN over scaled feature rows."""

    k: int
    features: np.ndarray
    targets: np.ndarray
    scales: np.ndarray
    embedding: str = "sincos"

    def __post_init__(self):
        if len(self.features) != len(self.targets):
            raise DataError("feature rows and targets differ in length")
        if not 1 <= self.k <= len(self.targets):
            raise DataError(f"k={self.k} outside [1, {len(self.targets)}]")

    @property
    def param_count(self) -> int:
        return len(self.targets)

    def predict_features(self, query, chunk: int = 128) -> np.ndarray:
        """Predict from already-embedded (unscaled) query rows."""
        q = np.atleast_2d(np.asarray(query, dtype=float)) / self.scales
        ref = self.features / self.scales
        out = np.empty(len(q))
        for start in range(0, len(q), chunk):
            block = q[start:start + chunk]
            dist = np.sqrt(((block[:, None, :] - ref[None, :, :]) ** 2).sum(-1))
            idx, dk = nearest(dist, self.k)
            y = self.targets[idx]
            exact = dk[:, 0] == 0
            with np.errstate(divide="ignore"):
                w = 1.0 / dk
            w[exact] = 0.0
            pred = (w * y).sum(1) / np.where(exact, 1.0, w.sum(1))
            pred[exact] = y[exact, 0]
            out[start:start + chunk] = pred
        return out

    def joint_gain(self, obs: Observations) -> np.ndarray:
        return self.predict_features(embed_features(obs, self.embedding))


def nearest(dist, k):
    """Indices and distances of the ``k`` smallest entries per row.

    Ties are broken by column index (a stable sort on distance).
    """
    n = dist.shape[1]
    if k < n:
        # over-select so ties at the boundary are resolved by index, not by partition order
        cand = np.argpartition(dist, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(dist, cand, 1).max(1, keepdims=True)
        mask = dist <= kth
        idx = np.empty((len(dist), k), dtype=int)
        for r in range(len(dist)):
            cols = np.flatnonzero(mask[r])
            order = np.argsort(dist[r, cols], kind="stable")[:k]
            idx[r] = cols[order]
    else:
        idx = np.argsort(dist, axis=1, kind="stable")
    return idx, np.take_along_axis(dist, idx, 1)


def feature_scales(features: np.ndarray) -> np.ndarray:
    """Unit scale for angle columns; training std for the distance column."""
    scales = np.ones(features.shape[1])
    sd = float(np.std(features[:, -1]))
    scales[-1] = sd if sd > 0 else 1.0
    return scales


def knn_fit(ts: TrainingSet, k: int = 10, embedding: str = "sincos") -> KnnModel:
    f = embed_features(ts.obs, embedding)
    return KnnModel(k, f, residual_targets(ts), feature_scales(f), embedding)


def knn_predict(model: KnnModel, obs) -> float:
    """Joint gain (dB) at one :class:`JointObservation`."""
    return float(model.predict_features(embed_features(obs.as_row()[None, :], model.embedding))[0])


def predict_rx(model, obs: Observations, p_tx, wavelength: float) -> np.ndarray:
    return np.asarray(p_tx, dtype=float) + model.joint_gain(obs) + path_loss_db(wavelength, obs.d)
