"""Decoupled two-pattern ridge regression.

The measured joint gain ``y = p_rx - p_tx - path_loss`` is modeled as
``G_a(dir of b seen from a; phi) + G_b(dir of a seen from b; psi)``. Both
patterns share a basis family, so stacking the two basis blocks side by side
turns the decoupling into one linear least-squares problem.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DataError, RankDeficiencyError
from .geometry import JointObservation, Observations, path_loss_db
from .models import BasisSpec, PatternFunction, basis_matrix

DEFAULT_KAPPA = 50.0


@dataclass(frozen=True)
class MatchedSample:
    t: float
    obs: JointObservation
    p_tx: float
    p_rx: float
    tx_id: str = "a"
    rx_id: str = "b"

    def __post_init__(self):
        if self.tx_id == self.rx_id:
            raise DataError("transmitter and receiver must differ")
        if not (np.isfinite(self.p_tx) and np.isfinite(self.p_rx)):
            raise DataError("non-finite power value")


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Column-oriented set of matched samples sharing one link direction.

    UAV ``a`` of the observation columns is ``a_id``; ``tx_id``/``rx_id``
    record which of the two transmitted.
    """

    t: np.ndarray
    obs: Observations
    p_tx: np.ndarray
    p_rx: np.ndarray
    wavelength: float
    tx_id: str = "a"
    rx_id: str = "b"
    a_id: str = "a"
    b_id: str = "b"

    def __post_init__(self):
        n = len(self.t)
        if n == 0:
            raise DataError("training set is empty")
        if self.tx_id == self.rx_id:
            raise DataError("transmitter and receiver must differ")
        if {self.tx_id, self.rx_id} != {self.a_id, self.b_id}:
            raise DataError("link direction must involve both UAVs of the pair")
        if any(len(c) != n for c in (*self.obs, self.p_tx, self.p_rx)):
            raise DataError("column length mismatch")
        if not (np.all(np.isfinite(self.p_tx)) and np.all(np.isfinite(self.p_rx))):
            raise DataError("non-finite power value")
        if not self.wavelength > 0:
            raise DataError("wavelength must be positive")

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_samples(cls, samples, wavelength, a_id="a", b_id="b") -> TrainingSet:
        samples = list(samples)
        if not samples:
            raise DataError("training set is empty")
        directions = {(s.tx_id, s.rx_id) for s in samples}
        if len(directions) != 1:
            raise DataError(f"samples mix link directions {sorted(directions)}")
        (tx, rx), = directions
        return cls(
            t=np.array([s.t for s in samples], dtype=float),
            obs=Observations.from_rows(s.obs for s in samples),
            p_tx=np.array([s.p_tx for s in samples], dtype=float),
            p_rx=np.array([s.p_rx for s in samples], dtype=float),
            wavelength=float(wavelength), tx_id=tx, rx_id=rx, a_id=a_id, b_id=b_id,
        )

    @property
    def samples(self):
        return [
            MatchedSample(float(self.t[i]), self.obs.row(i), float(self.p_tx[i]),
                          float(self.p_rx[i]), self.tx_id, self.rx_id)
            for i in range(len(self))
        ]

    def subset(self, idx) -> TrainingSet:
        idx = np.asarray(idx)
        return TrainingSet(
            self.t[idx], self.obs.subset(idx), self.p_tx[idx], self.p_rx[idx],
            self.wavelength, self.tx_id, self.rx_id, self.a_id, self.b_id,
        )


def residual_targets(ts: TrainingSet) -> np.ndarray:
    """Joint gain observations ``p_rx - p_tx - path_loss`` in dB."""
    return ts.p_rx - ts.p_tx - path_loss_db(ts.wavelength, ts.obs.d)


def design_matrix(obs: Observations, spec: BasisSpec) -> np.ndarray:
    left = basis_matrix(spec, obs.alpha_ba, obs.beta_ba)
    right = basis_matrix(spec, obs.alpha_ab, obs.beta_ab)
    return np.hstack([left, right])


def build_design_matrix(ts: TrainingSet, spec: BasisSpec) -> np.ndarray:
    """``[basis(b seen from a) | basis(a seen from b)]``, one row per sample."""
    return design_matrix(ts.obs, spec)


def ridge_fit(X, y, kappa: float) -> np.ndarray:
    """Solve ``(X^T X + kappa I) p = X^T y`` by Cholesky.

    With ``kappa == 0`` the design must have full column rank, otherwise
    :class:`RankDeficiencyError` is raised. For ``kappa > 0`` a system that is
    positive definite in exact arithmetic but not numerically (extremely
    ill-conditioned raw polynomial features) is solved by SVD least squares on
    the equivalent augmented system instead.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    p = X.shape[1]
    if kappa == 0:
        rank = np.linalg.matrix_rank(X)
        if rank < p:
            raise RankDeficiencyError(rank, p)
    A = X.T @ X
    A[np.diag_indices_from(A)] += kappa
    rhs = X.T @ y
    try:
        factor = scipy.linalg.cho_factor(A, lower=False, check_finite=False)
        return scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        if kappa == 0:
            raise RankDeficiencyError(np.linalg.matrix_rank(X), p) from None
    aug = np.vstack([X, np.sqrt(kappa) * np.eye(p)])
    rhs_aug = np.concatenate([y, np.zeros(p)])
    return scipy.linalg.lstsq(aug, rhs_aug, lapack_driver="gelsd", check_finite=False)[0]


@dataclass(frozen=True, eq=False)
class DecoupledModel:
    spec: BasisSpec
    phi: np.ndarray
    psi: np.ndarray
    kappa: float
    wavelength: float
    a_id: str = "a"
    b_id: str = "b"
    timings: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("phi", "psi"):
            c = np.array(getattr(self, name), dtype=float).ravel()
            if c.size != self.spec.dimension:
                raise ValueError(f"{name} has {c.size} coefficients, {self.spec.label} needs {self.spec.dimension}")
            c.setflags(write=False)
            object.__setattr__(self, name, c)

    @property
    def pattern_a(self) -> PatternFunction:
        return PatternFunction(self.spec, self.phi)

    @property
    def pattern_b(self) -> PatternFunction:
        return PatternFunction(self.spec, self.psi)

    @property
    def param_count(self) -> int:
        return self.spec.dimension

    def joint_gain(self, obs: Observations) -> np.ndarray:
        return design_matrix(obs, self.spec) @ np.concatenate([self.phi, self.psi])

    def predict(self, obs: Observations, p_tx) -> np.ndarray:
        """Received power in dBm for arrays of observations."""
        return np.asarray(p_tx, dtype=float) + self.joint_gain(obs) + path_loss_db(self.wavelength, obs.d)


def fit(ts: TrainingSet, spec: BasisSpec, kappa: float = DEFAULT_KAPPA) -> DecoupledModel:
    """Fit both UAV patterns jointly; ``timings`` holds build and solve seconds."""
    t0 = time.perf_counter()
    X = build_design_matrix(ts, spec)
    y = residual_targets(ts)
    t1 = time.perf_counter()
    if X.shape[0] < X.shape[1]:
        warnings.warn(
            f"{X.shape[0]} samples for {X.shape[1]} coefficients: underdetermined fit",
            stacklevel=2,
        )
    coeffs = ridge_fit(X, y, kappa)
    t2 = time.perf_counter()
    dim = spec.dimension
    return DecoupledModel(
        spec, coeffs[:dim], coeffs[dim:], float(kappa), ts.wavelength, ts.a_id, ts.b_id,
        timings={"build_s": t1 - t0, "solve_s": t2 - t1, "total_s": t2 - t0},
    )


def predict_rx(model: DecoupledModel, obs: JointObservation, p_tx: float) -> float:
    return float(model.predict(Observations.from_rows([obs]), p_tx)[0])


def gain_a(model: DecoupledModel, direction) -> float:
    return float(model.pattern_a(direction.azimuth, direction.inclination))


def gain_b(model: DecoupledModel, direction) -> float:
    return float(model.pattern_b(direction.azimuth, direction.inclination))
